//! Direction and significance of the conditioning variables' effect on the
//! frontier.
//!
//! The ratio `R_i = lambda_cond,i / lambda_dea,i` lies in `(0, 1]`. Regressing
//! it on a conditioning variable with a local-linear smoother shows the shape
//! of the effect: an increasing curve means larger values of the variable
//! bring the conditional frontier closer to the unconditional one.
//!
//! Significance uses the mean squared local slope as the statistic and an
//! IID bootstrap that resamples the tested column with replacement, which
//! breaks its link with `R` while keeping its marginal distribution. The
//! test's bandwidths follow the one-standard-error rule, since a flat
//! cross-validation curve otherwise leaves the choice to noise.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditional::{epanechnikov, mean_sd, ConditioningSet};
use crate::dea::{EfficiencyResult, Method};
use crate::error::{Error, Result};

/// Default number of evaluation points for partial regression curves.
pub const GRID_POINTS: usize = 100;
const CV_GRID_POINTS: usize = 25;
/// Bandwidth widening factor applied when the observed fit has singular points.
const WIDEN: f64 = 1.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub region: String,
    pub ratio: f64,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub names: Vec<String>,
    pub units: Vec<RatioRecord>,
}

impl RatioSeries {
    pub fn ratios(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.ratio).collect()
    }
}

/// `R_i = lambda_cond,i / lambda_dea,i` for every unit.
pub fn efficiency_ratios(
    conditional: &EfficiencyResult,
    unconditional: &EfficiencyResult,
    z: &ConditioningSet,
) -> Result<RatioSeries> {
    if !conditional.method.is_conditional() {
        return Err(Error::MethodMismatch(format!(
            "numerator must be a conditional result, got {:?}",
            conditional.method
        )));
    }
    if unconditional.method != Method::Dea {
        return Err(Error::MethodMismatch(format!(
            "denominator must be a DEA result, got {:?}",
            unconditional.method
        )));
    }
    if conditional.rts != unconditional.rts {
        return Err(Error::MethodMismatch(format!(
            "returns to scale differ: {} vs {}",
            conditional.rts, unconditional.rts
        )));
    }
    if conditional.units.len() != unconditional.units.len() {
        return Err(Error::LengthMismatch(
            conditional.units.len(),
            unconditional.units.len(),
        ));
    }
    if z.n() != conditional.units.len() {
        return Err(Error::DimensionMismatch {
            expected: conditional.units.len(),
            got: z.n(),
        });
    }
    let units = conditional
        .units
        .iter()
        .zip(&unconditional.units)
        .enumerate()
        .map(|(i, (c, u))| {
            if c.region != u.region {
                return Err(Error::OrderMismatch(i));
            }
            Ok(RatioRecord {
                region: c.region.clone(),
                ratio: c.lambda / u.lambda,
                z: z.row(i),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioSeries {
        names: z.names.clone(),
        units,
    })
}

/// Fitted local-linear curve of `R` against one conditioning variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialRegression {
    pub variable: usize,
    pub name: String,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub slope: Vec<f64>,
    /// Bandwidth per conditioning column used by the fit.
    pub bandwidth: Vec<f64>,
    pub kernel: String,
    /// Observed `(z_ik, R_i)` pairs.
    pub scatter: Vec<(f64, f64)>,
}

impl PartialRegression {
    /// `grid,mean,slope`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["grid", "mean", "slope"])?;
        for ((g, m), s) in self.grid.iter().zip(&self.mean).zip(&self.slope) {
            w.serialize((g, m, s))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Weighted univariate local-linear fit at `at`; returns (level, slope) or
/// `None` when fewer than two distinct points carry weight.
fn local_linear_1d(z: &[f64], r: &[f64], at: f64, h: f64, skip: Option<usize>) -> Option<(f64, f64)> {
    // shift by a reference value so constant responses stay exact
    let r_ref = r[0];
    let mut s0 = 0.0;
    let mut sz = 0.0;
    let mut sr = 0.0;
    for i in 0..z.len() {
        if Some(i) == skip {
            continue;
        }
        let w = epanechnikov((z[i] - at) / h);
        if w > 0.0 {
            s0 += w;
            sz += w * (z[i] - at);
            sr += w * (r[i] - r_ref);
        }
    }
    if s0 <= 0.0 {
        return None;
    }
    let zbar = sz / s0;
    let rbar = sr / s0;
    let mut sxx = 0.0;
    let mut sxr = 0.0;
    for i in 0..z.len() {
        if Some(i) == skip {
            continue;
        }
        let w = epanechnikov((z[i] - at) / h);
        if w > 0.0 {
            let dz = z[i] - at - zbar;
            sxx += w * dz * dz;
            sxr += w * dz * (r[i] - r_ref - rbar);
        }
    }
    if sxx <= 1e-24 * s0 * h * h {
        return None;
    }
    let slope = sxr / sxx;
    Some((r_ref + rbar - slope * zbar, slope))
}

/// Multivariate local-linear fit at `at` with a product kernel; returns the
/// level and the gradient.
fn local_linear_nd(
    z: &[Vec<f64>],
    r: &[f64],
    at: &[f64],
    h: &[f64],
    skip: Option<usize>,
) -> Option<(f64, Vec<f64>)> {
    if z.len() == 1 {
        return local_linear_1d(&z[0], r, at[0], h[0], skip).map(|(m, s)| (m, vec![s]));
    }
    let k = z.len();
    let n = r.len();
    let r_ref = r[0];
    let mut xtwx = DMatrix::<f64>::zeros(k + 1, k + 1);
    let mut xtwr = DVector::<f64>::zeros(k + 1);
    let mut row = vec![0.0; k + 1];
    let mut count = 0;
    for i in 0..n {
        if Some(i) == skip {
            continue;
        }
        let mut w = 1.0;
        for c in 0..k {
            let u = (z[c][i] - at[c]) / h[c];
            w *= epanechnikov(u);
            if w == 0.0 {
                break;
            }
            row[c + 1] = u;
        }
        if w == 0.0 {
            continue;
        }
        count += 1;
        row[0] = 1.0;
        for a in 0..=k {
            xtwr[a] += w * row[a] * (r[i] - r_ref);
            for b in 0..=k {
                xtwx[(a, b)] += w * row[a] * row[b];
            }
        }
    }
    if count <= k {
        return None;
    }
    let svd = xtwx.clone().svd(true, true);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if !(max > 0.0) || min <= 1e-12 * max {
        return None;
    }
    let beta = svd.solve(&xtwr, 0.0).ok()?;
    let gradient = (0..k).map(|c| beta[c + 1] / h[c]).collect();
    Some((r_ref + beta[0], gradient))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty evaluation grid".into()));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Local-linear regression of `r` on `z` at each grid point, Epanechnikov
/// weights. Affine responses are reproduced exactly up to rounding.
pub fn local_linear_fit(z: &[f64], r: &[f64], bandwidth: f64, grid: &[f64]) -> Result<PartialRegression> {
    if z.len() != r.len() {
        return Err(Error::LengthMismatch(z.len(), r.len()));
    }
    if z.is_empty() {
        return Err(Error::EmptyVector);
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::InvalidBandwidth(format!("{bandwidth}")));
    }
    check_grid(grid)?;
    let mut mean = Vec::with_capacity(grid.len());
    let mut slope = Vec::with_capacity(grid.len());
    for &g in grid {
        let (m, s) = local_linear_1d(z, r, g, bandwidth, None).ok_or(Error::SingularFit(g))?;
        mean.push(m);
        slope.push(s);
    }
    Ok(PartialRegression {
        variable: 0,
        name: "z".into(),
        grid: grid.to_vec(),
        mean,
        slope,
        bandwidth: vec![bandwidth],
        kernel: "epanechnikov".into(),
        scatter: z.iter().copied().zip(r.iter().copied()).collect(),
    })
}

/// Linear-interpolation sample quantile.
pub(crate) fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// [`GRID_POINTS`] equispaced points between the 2.5% and 97.5% quantiles.
pub fn evaluation_grid(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        return Err(Error::EmptyVector);
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = quantile(&sorted, 0.025);
    let hi = quantile(&sorted, 0.975);
    if !(hi > lo) {
        return Err(Error::ConstantColumn(0));
    }
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    Ok((0..GRID_POINTS)
        .map(|i| if i == GRID_POINTS - 1 { hi } else { lo + step * i as f64 })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionBandwidth {
    pub bandwidth: f64,
    /// `(candidate, leave-one-out mean squared error)`; infinite where some
    /// leave-one-out fit was singular.
    pub trace: Vec<(f64, f64)>,
}

/// Leave-one-out CV bandwidth for [`local_linear_fit`].
///
/// Candidates run geometrically from a quarter of the rule-of-thumb value
/// `1.06 sd(z) n^(-1/5)` up to twice the range of `z`, where every window
/// spans the whole sample.
pub fn cv_regression_bandwidth(z: &[f64], r: &[f64]) -> Result<RegressionBandwidth> {
    let scores = cv_scores(z, r)?;
    let (bandwidth, _) = scores
        .iter()
        .fold((f64::NAN, f64::INFINITY), |acc, s| if s.mean < acc.1 { (s.h, s.mean) } else { acc });
    Ok(RegressionBandwidth {
        bandwidth,
        trace: scores.iter().map(|s| (s.h, s.mean)).collect(),
    })
}

/// The largest candidate of [`cv_regression_bandwidth`] whose leave-one-out
/// error is within one standard error of the minimum. The standard error is
/// that of the mean squared leave-one-out residual at the minimizer.
pub fn one_se_regression_bandwidth(z: &[f64], r: &[f64]) -> Result<RegressionBandwidth> {
    let scores = cv_scores(z, r)?;
    let best = scores
        .iter()
        .filter(|s| s.mean.is_finite())
        .min_by(|a, b| a.mean.total_cmp(&b.mean))
        .ok_or(Error::SingularFit(z[0]))?;
    let limit = best.mean + best.se;
    let bandwidth = scores
        .iter()
        .filter(|s| s.mean <= limit)
        .map(|s| s.h)
        .fold(best.h, f64::max);
    Ok(RegressionBandwidth {
        bandwidth,
        trace: scores.iter().map(|s| (s.h, s.mean)).collect(),
    })
}

struct CvScore {
    h: f64,
    mean: f64,
    se: f64,
}

fn cv_scores(z: &[f64], r: &[f64]) -> Result<Vec<CvScore>> {
    if z.len() != r.len() {
        return Err(Error::LengthMismatch(z.len(), r.len()));
    }
    let n = z.len();
    if n < 10 {
        return Err(Error::TooFewPoints(n));
    }
    let (lo, hi) = z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
        (a.min(v), b.max(v))
    });
    if !(hi > lo) {
        return Err(Error::ConstantColumn(0));
    }
    let rot = 1.06 * mean_sd(z).1 * (n as f64).powf(-0.2);
    let start = 0.25 * rot;
    let end = (4.0 * rot).max(2.0 * (hi - lo));
    let ratio = (end / start).powf(1.0 / (CV_GRID_POINTS - 1) as f64);
    let candidates: Vec<f64> = (0..CV_GRID_POINTS)
        .map(|j| if j == CV_GRID_POINTS - 1 { end } else { start * ratio.powi(j as i32) })
        .collect();

    let scores: Vec<CvScore> = candidates
        .par_iter()
        .map(|&h| {
            let mut squared = Vec::with_capacity(n);
            for i in 0..n {
                match local_linear_1d(z, r, z[i], h, Some(i)) {
                    Some((m, _)) => squared.push((r[i] - m).powi(2)),
                    None => {
                        return CvScore {
                            h,
                            mean: f64::INFINITY,
                            se: f64::INFINITY,
                        }
                    }
                }
            }
            let (mean, sd) = mean_sd(&squared);
            CvScore {
                h,
                mean,
                se: sd / (n as f64).sqrt(),
            }
        })
        .collect();
    if scores.iter().all(|s| !s.mean.is_finite()) {
        return Err(Error::SingularFit(z[0]));
    }
    Ok(scores)
}

/// Partial regression curve for one variable of a multivariate local-linear
/// fit: at each grid value the fit is evaluated with that variable set to the
/// grid value and the other variables at each unit's observed values, then
/// averaged over units. With one conditioning variable this is
/// [`local_linear_fit`].
pub fn partial_regression(
    z: &ConditioningSet,
    r: &[f64],
    variable: usize,
    bandwidths: &[f64],
    grid: &[f64],
) -> Result<PartialRegression> {
    if variable >= z.k() {
        return Err(Error::IndexOutOfRange {
            index: variable,
            n: z.k(),
        });
    }
    if bandwidths.len() != z.k() {
        return Err(Error::DimensionMismatch {
            expected: z.k(),
            got: bandwidths.len(),
        });
    }
    if r.len() != z.n() {
        return Err(Error::LengthMismatch(z.n(), r.len()));
    }
    if z.k() == 1 {
        let mut fit = local_linear_fit(z.column(0), r, bandwidths[0], grid)?;
        fit.name = z.names[0].clone();
        return Ok(fit);
    }
    check_grid(grid)?;
    let cols = z.columns();
    let rows: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&g| {
            let mut m_sum = 0.0;
            let mut s_sum = 0.0;
            let mut used = 0usize;
            for i in 0..z.n() {
                let mut at = z.row(i);
                at[variable] = g;
                if let Some((m, grad)) = local_linear_nd(cols, r, &at, bandwidths, None) {
                    m_sum += m;
                    s_sum += grad[variable];
                    used += 1;
                }
            }
            if used == 0 {
                Err(Error::SingularFit(g))
            } else {
                Ok((m_sum / used as f64, s_sum / used as f64))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartialRegression {
        variable,
        name: z.names[variable].clone(),
        grid: grid.to_vec(),
        mean: rows.iter().map(|p| p.0).collect(),
        slope: rows.iter().map(|p| p.1).collect(),
        bandwidth: bandwidths.to_vec(),
        kernel: "epanechnikov (product)".into(),
        scatter: z.column(variable).iter().copied().zip(r.iter().copied()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceEntry {
    pub name: String,
    pub variable: usize,
    /// Mean over units of the squared local slope in the tested variable.
    pub statistic: f64,
    pub p_value: f64,
    pub replications: usize,
    pub seed: u64,
    pub bandwidths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub test: String,
    pub entries: Vec<SignificanceEntry>,
}

impl SignificanceReport {
    pub fn new(entries: Vec<SignificanceEntry>) -> Self {
        Self {
            test: "local-linear kernel regression significance, IID bootstrap of the tested regressor"
                .into(),
            entries,
        }
    }
}

/// Mean squared slope in `variable` over the evaluable sample points, and
/// how many points were evaluable.
fn slope_statistic(cols: &[Vec<f64>], r: &[f64], variable: usize, h: &[f64]) -> (f64, usize) {
    let n = r.len();
    let mut total = 0.0;
    let mut used = 0;
    let mut at = vec![0.0; cols.len()];
    for i in 0..n {
        for (c, col) in cols.iter().enumerate() {
            at[c] = col[i];
        }
        if let Some((_, grad)) = local_linear_nd(cols, r, &at, h, None) {
            total += grad[variable].powi(2);
            used += 1;
        }
    }
    if used == 0 {
        (0.0, 0)
    } else {
        (total / used as f64, used)
    }
}

/// Selects per-column one-standard-error CV bandwidths, widens them by 25% steps until every
/// sample point admits a fit, and returns the slope statistic with the
/// bandwidths used.
fn fitted_statistic(cols: &[Vec<f64>], r: &[f64], variable: usize) -> Result<(f64, Vec<f64>)> {
    let mut h = cols
        .iter()
        .enumerate()
        .map(|(c, col)| {
            one_se_regression_bandwidth(col, r)
                .map(|b| b.bandwidth)
                .map_err(|e| match e {
                    Error::ConstantColumn(_) => Error::ConstantColumn(c),
                    other => other,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut observed = slope_statistic(cols, r, variable, &h);
    let mut widenings = 0;
    while observed.1 < r.len() && widenings < 20 {
        for v in &mut h {
            *v *= WIDEN;
        }
        observed = slope_statistic(cols, r, variable, &h);
        widenings += 1;
    }
    if observed.1 == 0 {
        return Err(Error::SingularFit(cols[variable][0]));
    }
    Ok((observed.0, h))
}

/// Bootstrap significance test for conditioning variable `variable`.
///
/// Bandwidths are the per-column [`one_se_regression_bandwidth`] values, widened
/// by 25% steps if the observed fit is singular anywhere, and then held fixed
/// across replications. Replication `b` draws from ChaCha stream `(seed, b)`.
/// `p = (1 + #{T* >= T}) / (1 + replications)`.
pub fn significance_test(
    z: &ConditioningSet,
    r: &[f64],
    variable: usize,
    replications: usize,
    seed: u64,
) -> Result<SignificanceEntry> {
    if variable >= z.k() {
        return Err(Error::IndexOutOfRange {
            index: variable,
            n: z.k(),
        });
    }
    if r.len() != z.n() {
        return Err(Error::LengthMismatch(z.n(), r.len()));
    }
    if replications < 99 {
        return Err(Error::InvalidArgument(format!(
            "at least 99 replications required, got {replications}"
        )));
    }
    let name = z.names[variable].clone();
    if r.windows(2).all(|w| w[0] == w[1]) {
        return Ok(SignificanceEntry {
            name,
            variable,
            statistic: 0.0,
            p_value: 1.0,
            replications,
            seed,
            bandwidths: Vec::new(),
        });
    }
    let cols = z.columns();
    let (statistic, h) = fitted_statistic(cols, r, variable)?;

    let tested = z.column(variable);
    let n = r.len();
    let exceed = (0..replications)
        .into_par_iter()
        .filter(|&b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut boot = cols.to_vec();
            boot[variable] = (0..n).map(|_| tested[rng.random_range(0..n)]).collect();
            slope_statistic(&boot, r, variable, &h).0 >= statistic
        })
        .count();

    Ok(SignificanceEntry {
        name,
        variable,
        statistic,
        p_value: (1 + exceed) as f64 / (1 + replications) as f64,
        replications,
        seed,
        bandwidths: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dea::{Rts, UnitEfficiency};

    fn result(method: Method, lambdas: &[f64], regions: &[&str]) -> EfficiencyResult {
        EfficiencyResult {
            method,
            rts: Rts::Crs,
            units: lambdas
                .iter()
                .zip(regions)
                .map(|(&l, r)| UnitEfficiency {
                    region: r.to_string(),
                    lambda: l,
                    score: 1.0 / l,
                    reference_set: vec![],
                    reference_size: 1,
                    gamma: vec![],
                })
                .collect(),
            bandwidths: None,
        }
    }

    #[test]
    fn ratio_examples() {
        let z = ConditioningSet::from_columns(vec![vec![0.0, 1.0]]).unwrap();
        let c = result(Method::Spdea, &[1.0, 1.5], &["a", "b"]);
        let d = result(Method::Dea, &[2.0, 1.5], &["a", "b"]);
        let r = efficiency_ratios(&c, &d, &z).unwrap();
        assert_eq!(r.ratios(), vec![0.5, 1.0]);

        let swapped = result(Method::Dea, &[2.0, 1.5], &["b", "a"]);
        assert!(matches!(efficiency_ratios(&c, &swapped, &z), Err(Error::OrderMismatch(0))));
        assert!(matches!(efficiency_ratios(&d, &d, &z), Err(Error::MethodMismatch(_))));
        let mut vrs = d.clone();
        vrs.rts = Rts::Vrs;
        assert!(matches!(efficiency_ratios(&c, &vrs, &z), Err(Error::MethodMismatch(_))));
    }

    #[test]
    fn linear_response_reproduced() {
        let z: Vec<f64> = (0..30).map(|i| i as f64 / 3.0).collect();
        let r: Vec<f64> = z.iter().map(|v| 2.0 * v).collect();
        let grid = evaluation_grid(&z).unwrap();
        for h in [1.0, 3.0, 50.0] {
            let fit = local_linear_fit(&z, &r, h, &grid).unwrap();
            for ((g, m), s) in grid.iter().zip(&fit.mean).zip(&fit.slope) {
                assert!((m - 2.0 * g).abs() < 1e-10);
                assert!((s - 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_response_is_flat() {
        let z: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let r = vec![0.7; 20];
        let fit = local_linear_fit(&z, &r, 4.0, &[2.0, 10.0, 17.5]).unwrap();
        assert!(fit.mean.iter().all(|&m| m == 0.7));
        assert!(fit.slope.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn singular_window_reported() {
        let z = [0.0, 0.0, 5.0, 5.0];
        let r = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            local_linear_fit(&z, &r, 1.0, &[0.0]),
            Err(Error::SingularFit(_))
        ));
        assert!(local_linear_fit(&z, &r, 1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn grid_spans_central_quantiles() {
        let z: Vec<f64> = (0..=100).map(|i| i as f64).collect();
        let g = evaluation_grid(&z).unwrap();
        assert_eq!(g.len(), GRID_POINTS);
        assert!((g[0] - 2.5).abs() < 1e-12);
        assert_eq!(*g.last().unwrap(), 97.5);
        assert!(matches!(evaluation_grid(&[1.0; 5]), Err(Error::ConstantColumn(0))));
    }

    #[test]
    fn cv_bandwidth_is_trace_minimum() {
        let z: Vec<f64> = (0..40).map(|i| i as f64 / 4.0).collect();
        let r: Vec<f64> = z.iter().map(|v| (v * 0.8).sin() + 0.05 * (v * 13.0).cos()).collect();
        let b = cv_regression_bandwidth(&z, &r).unwrap();
        let best = b.trace.iter().find(|t| t.0 == b.bandwidth).unwrap().1;
        assert!(b.trace.iter().all(|t| best <= t.1));
        assert!(matches!(
            cv_regression_bandwidth(&[1.0; 12], &[0.0; 12]),
            Err(Error::ConstantColumn(0))
        ));
        assert!(matches!(cv_regression_bandwidth(&[1.0; 5], &[0.0; 5]), Err(Error::TooFewPoints(5))));
    }

    #[test]
    fn one_se_bandwidth_is_smoothest_near_minimum() {
        let z: Vec<f64> = (0..60).map(|i| ((i * 37) % 60) as f64 / 60.0).collect();
        let r: Vec<f64> = z.iter().enumerate().map(|(i, v)| v + 0.05 * (((i * 11) % 7) as f64 - 3.0)).collect();
        let cv = cv_regression_bandwidth(&z, &r).unwrap();
        let se = one_se_regression_bandwidth(&z, &r).unwrap();
        assert_eq!(cv.trace, se.trace);
        assert!(se.bandwidth >= cv.bandwidth);
    }

    #[test]
    fn constant_ratio_has_unit_p_value() {
        let z = ConditioningSet::from_columns(vec![(0..20).map(|i| i as f64).collect()]).unwrap();
        let e = significance_test(&z, &[1.0; 20], 0, 99, 3).unwrap();
        assert_eq!(e.statistic, 0.0);
        assert_eq!(e.p_value, 1.0);
    }

    #[test]
    fn multivariate_fit_reproduces_plane() {
        let n = 60;
        let a: Vec<f64> = (0..n).map(|i| (i % 10) as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| (i / 10) as f64 * 1.5).collect();
        let r: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 1.0 + 0.5 * x - 2.0 * y).collect();
        let z = ConditioningSet::from_columns(vec![a, b]).unwrap();
        let fit = partial_regression(&z, &r, 1, &[4.0, 5.0], &[1.0, 3.0, 5.0]).unwrap();
        for s in &fit.slope {
            assert!((s + 2.0).abs() < 1e-9, "{s}");
        }
    }
}
