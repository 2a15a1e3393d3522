//! Synthetic regional data with two spatially separated productivity clubs.
//!
//! Each club occupies its own unit square, so k-nearest-neighbour lags stay
//! inside the club for k below the club size. Output per worker follows
//! `q = A_club x^alpha exp(-u)` with half-normal inefficiency `u`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{DecisionUnit, FrontierSample, Observation, PanelDataset, Region};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoClubConfig {
    pub units: usize,
    /// Productivity level of the low club.
    pub tfp_low: f64,
    /// Productivity level of the high club.
    pub tfp_high: f64,
    /// Capital elasticity of output per worker.
    pub alpha: f64,
    /// Scale of the half-normal inefficiency term.
    pub inefficiency: f64,
    /// Horizontal distance between the two clubs' unit squares.
    pub separation: f64,
}

impl Default for TwoClubConfig {
    fn default() -> Self {
        Self {
            units: 30,
            tfp_low: 10.0,
            tfp_high: 16.0,
            alpha: 0.35,
            inefficiency: 0.15,
            separation: 2.0,
        }
    }
}

/// One cross-section from the two-club process.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoClubSample {
    pub sample: FrontierSample,
    pub coords: Vec<[f64; 2]>,
    /// 0 for the low club, 1 for the high club.
    pub club: Vec<usize>,
}

fn region_id(i: usize) -> String {
    format!("R{:02}", i + 1)
}

fn layout(cfg: &TwoClubConfig, rng: &mut ChaCha8Rng) -> (Vec<[f64; 2]>, Vec<usize>) {
    let half = cfg.units / 2;
    (0..cfg.units)
        .map(|i| {
            let club = usize::from(i >= half);
            let offset = club as f64 * cfg.separation;
            ([offset + rng.random::<f64>(), rng.random::<f64>()], club)
        })
        .unzip()
}

fn output_per_worker(cfg: &TwoClubConfig, club: usize, x: f64, rng: &mut ChaCha8Rng) -> f64 {
    let tfp = if club == 1 { cfg.tfp_high } else { cfg.tfp_low };
    let e: f64 = rng.sample(StandardNormal);
    tfp * x.powf(cfg.alpha) * (-(cfg.inefficiency * e).abs()).exp()
}

/// Capital per worker is log-uniform on [20, 200].
fn capital_per_worker(rng: &mut ChaCha8Rng) -> f64 {
    20.0 * 10f64.powf(rng.random::<f64>())
}

pub fn two_club_sample(cfg: &TwoClubConfig, seed: u64) -> Result<TwoClubSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (coords, club) = layout(cfg, &mut rng);
    let units = club
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let x = capital_per_worker(&mut rng);
            let q = output_per_worker(cfg, c, x, &mut rng);
            DecisionUnit::new(region_id(i), vec![x], vec![q])
        })
        .collect();
    Ok(TwoClubSample {
        sample: FrontierSample::new(None, units)?,
        coords,
        club,
    })
}

/// A balanced panel from the two-club process with employment, output,
/// investment and capital, clubs doubling as countries `A` and `B`.
///
/// Capital per worker grows 2% a year and investment is set to
/// `K_t - 0.95 K_{t-1}`, so a 5% perpetual inventory roughly reproduces the
/// stored capital stocks.
pub fn two_club_panel(cfg: &TwoClubConfig, seed: u64, first_year: i32, last_year: i32) -> Result<PanelDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (coords, club) = layout(cfg, &mut rng);
    let years = (last_year - first_year + 1).max(0) as usize;
    let mut regions = Vec::with_capacity(cfg.units);
    let mut cells = Vec::with_capacity(cfg.units);
    for (i, (&coord, &c)) in coords.iter().zip(&club).enumerate() {
        regions.push(Region {
            id: region_id(i),
            country: if c == 1 { "B" } else { "A" }.to_string(),
            coord: Some(coord),
        });
        let emp0 = 300.0 + 1200.0 * rng.random::<f64>();
        let x0 = capital_per_worker(&mut rng);
        let mut row = Vec::with_capacity(years);
        let mut previous: Option<f64> = None;
        for t in 0..years {
            let emp = emp0 * (1.0 + 0.01 * rng.random::<f64>()).powi(t as i32);
            let x = x0 * 1.02f64.powi(t as i32);
            let capital = x * emp;
            let q = output_per_worker(cfg, c, x, &mut rng);
            let gfcf = match previous {
                Some(k) => (capital - 0.95 * k).max(0.0),
                None => capital * 0.07,
            };
            previous = Some(capital);
            row.push(Observation {
                gva: q * emp,
                emp,
                gfcf: Some(gfcf),
                capital: Some(capital),
            });
        }
        cells.push(row);
    }
    PanelDataset::new(regions, first_year, last_year, cells)
}
