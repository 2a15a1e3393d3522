//! Writes a two-club synthetic panel CSV (30 regions, 1990-2003).
//!
//! cargo run --example synthetic_panel -- [path] [seed]

use std::fs::File;

use spdea::synthetic::{two_club_panel, TwoClubConfig};

fn main() -> spdea::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "two_clubs_panel.csv".into());
    let seed = args.next().map_or(Ok(2024), |s| s.parse()).expect("seed must be an integer");

    let panel = two_club_panel(&TwoClubConfig::default(), seed, 1990, 2003)?;
    panel.write_csv(File::create(&path)?)?;
    println!(
        "wrote {} rows for {} regions to {path}",
        panel.observation_count(),
        panel.len()
    );
    Ok(())
}
