//! Perpetual-inventory capital stocks with national benchmarks, then the
//! per-worker ratios that feed the frontier.

use std::collections::BTreeMap;

use spdea::data::{build_capital_stock, derive_ratios, perpetual_inventory, PimConfig};
use spdea::synthetic::{two_club_panel, TwoClubConfig};

fn main() -> spdea::Result<()> {
    println!("K0 = 100, I = 10, delta = 0.05: {:?}", perpetual_inventory(100.0, &[10.0; 3], 0.05));

    let panel = two_club_panel(&TwoClubConfig::default(), 3, 1990, 2003)?;
    let mut cfg = PimConfig::new(0.05, 1990, 2000);
    cfg.benchmarks = BTreeMap::from([("A".to_string(), 2.0e6), ("B".to_string(), 3.0e6)]);
    let rebuilt = build_capital_stock(&panel, &cfg)?;

    for country in ["A", "B"] {
        let total: f64 = rebuilt
            .regions()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.country == country)
            .filter_map(|(i, _)| rebuilt.observation(i, 2000)?.capital)
            .sum();
        println!("country {country}: regional stocks sum to {total:.1} in 2000");
    }

    let sample = derive_ratios(&rebuilt, 2003)?;
    for u in sample.units().iter().take(3) {
        println!("{}: K/L = {:.2}, Y/L = {:.2}", u.id, u.x[0], u.q[0]);
    }
    Ok(())
}
