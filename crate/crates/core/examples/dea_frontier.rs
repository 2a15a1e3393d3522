//! Output-oriented DEA on a handful of units under both returns-to-scale
//! assumptions.

use spdea::data::FrontierSample;
use spdea::dea::{dea_output_scores, Rts};

fn main() -> spdea::Result<()> {
    // (capital per worker, output per worker)
    let sample = FrontierSample::from_pairs(&[(1.0, 1.0), (2.0, 4.0), (4.0, 5.0), (3.0, 2.0), (6.0, 5.5)])?;

    for rts in [Rts::Crs, Rts::Vrs] {
        let result = dea_output_scores(&sample, rts)?;
        println!("{rts}:");
        for (unit, eff) in sample.units().iter().zip(&result.units) {
            println!(
                "  {} x={:<4} q={:<4} lambda={:.4} score={:.4} peers={:?}",
                unit.id, unit.x[0], unit.q[0], eff.lambda, eff.score, eff.reference_set
            );
        }
    }
    Ok(())
}
