//! Does the conditioning variable move the frontier? Ratio of conditional to
//! unconditional efficiency, its local-linear regression on z, and the
//! bootstrap significance test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spdea::conditional::{cdea_scores, lscv_bandwidth, ConditioningSet};
use spdea::data::{DecisionUnit, FrontierSample};
use spdea::dea::{dea_output_scores, Rts};
use spdea::effects::{cv_regression_bandwidth, efficiency_ratios, evaluation_grid, local_linear_fit, significance_test};

fn main() -> spdea::Result<()> {
    // the environment z shifts attainable output: q <= (1 + z) x^0.5
    let n = 80;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut z_col = Vec::with_capacity(n);
    let units: Vec<DecisionUnit> = (0..n)
        .map(|i| {
            let x = 10.0 + 50.0 * rng.random::<f64>();
            let z = rng.random::<f64>();
            let e: f64 = rng.sample(StandardNormal);
            let slack = (-(0.2 * e).abs()).exp();
            z_col.push(z);
            DecisionUnit::new(format!("u{i}"), vec![x], vec![(1.0 + z) * x.sqrt() * slack])
        })
        .collect();
    let sample = FrontierSample::new(None, units)?;
    let z = ConditioningSet::new(vec!["z".into()], vec![z_col.clone()])?;

    // with one input, one output and CRS the ratio is a step function of z,
    // which a slope statistic reads poorly; VRS keeps it graded
    let h = lscv_bandwidth(&sample, &z)?;
    let cond = cdea_scores(&sample, &z, &h, Rts::Vrs)?;
    let dea = dea_output_scores(&sample, Rts::Vrs)?;
    let ratios = efficiency_ratios(&cond, &dea, &z)?;
    let r = ratios.ratios();

    let bw = cv_regression_bandwidth(&z_col, &r)?;
    let fit = local_linear_fit(&z_col, &r, bw.bandwidth, &evaluation_grid(&z_col)?)?;
    println!("CV bandwidth {:.3}", bw.bandwidth);
    for i in (0..fit.grid.len()).step_by(20) {
        println!("  z = {:.3}: E[R|z] = {:.3}, slope {:+.3}", fit.grid[i], fit.mean[i], fit.slope[i]);
    }
    let test = significance_test(&z, &r, 0, 399, 5)?;
    println!("significance: T = {:.4e}, p = {:.4}", test.statistic, test.p_value);
    Ok(())
}
