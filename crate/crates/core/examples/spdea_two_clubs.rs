//! Conditioning the frontier on neighbourhood productivity: DEA versus SpDEA
//! on two spatial clubs with different technology levels.

use spdea::conditional::spdea;
use spdea::dea::{dea_output_scores, Rts};
use spdea::distribution::describe;
use spdea::synthetic::{two_club_sample, TwoClubConfig};
use spdea::weights::knn_weights;

fn main() -> spdea::Result<()> {
    let data = two_club_sample(&TwoClubConfig::default(), 11)?;
    let w = knn_weights(&data.coords, 5)?;

    let dea = dea_output_scores(&data.sample, Rts::Crs)?;
    let (sp, z) = spdea(&data.sample, &w, Rts::Crs, None)?;
    let h = sp.bandwidths.as_ref().expect("bandwidths are recorded");
    println!("LSCV bandwidths {:?} for {:?}", h.h, z.names);

    for club in 0..2 {
        let pick = |scores: Vec<f64>| -> Vec<f64> {
            scores
                .into_iter()
                .zip(&data.club)
                .filter(|(_, c)| **c == club)
                .map(|(s, _)| s)
                .collect()
        };
        let d = describe(&pick(dea.scores()))?;
        let s = describe(&pick(sp.scores()))?;
        println!("club {club}: mean DEA {:.3}, mean SpDEA {:.3}", d.mean, s.mean);
    }
    let d = describe(&dea.scores())?;
    let s = describe(&sp.scores())?;
    println!("all: {:.3} -> {:.3} ({:+.1}%)", d.mean, s.mean, (s.mean / d.mean - 1.0) * 100.0);
    Ok(())
}
