//! Independent reference computations used to cross-check the main
//! estimators. They share no code with the simplex solver or the window
//! logic of the conditional estimator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conditional::{BandwidthVector, ConditioningSet};
use crate::data::FrontierSample;
use crate::dea::{EfficiencyResult, Rts, ScoreRecord};
use crate::error::{Error, Result};
use crate::weights::SpatialWeights;

/// Largest number of vertex-enumeration candidate subsets attempted before a
/// check is skipped.
pub const MAX_SUBSETS: u64 = 2_000_000;

/// CRS output expansion for one input and one output:
/// `lambda = max_i (q_i / x_i) * x0 / q0`.
pub fn ratio_lambda(x0: f64, q0: f64, reference: &[(f64, f64)]) -> f64 {
    let best = reference
        .iter()
        .map(|(x, q)| q / x)
        .fold(f64::NEG_INFINITY, f64::max);
    best * x0 / q0
}

fn choose(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Number of subsets [`vertex_lambda`] would examine, or `None` beyond
/// [`MAX_SUBSETS`].
pub fn vertex_work(n: usize, p: usize, r: usize, rts: Rts) -> Option<u64> {
    let m = (p + r + usize::from(rts == Rts::Vrs)) as u64;
    let total: u64 = (1..=m.min(n as u64)).map(|s| choose(n as u64, s)).sum();
    (total <= MAX_SUBSETS).then_some(total)
}

/// Output expansion by enumerating the vertices of the envelopment
/// polytope: every choice of at most `m` positive intensity weights
/// (`m` = number of constraint rows) and of `s + 1` tight rows gives a
/// square system; the best feasible solution is the optimum.
pub fn vertex_lambda(x0: &[f64], q0: &[f64], reference: &[(Vec<f64>, Vec<f64>)], rts: Rts) -> Option<f64> {
    let p = x0.len();
    let r = q0.len();
    let rows = p + r + usize::from(rts == Rts::Vrs);
    let n = reference.len();
    // row coefficients on (lambda, gamma_1..gamma_n) and right-hand sides;
    // every row reads a . v <= rhs except the VRS row, an equality
    let mut a: Vec<(f64, Vec<f64>, f64)> = Vec::with_capacity(rows);
    for k in 0..r {
        a.push((q0[k], reference.iter().map(|u| -u.1[k]).collect(), 0.0));
    }
    for j in 0..p {
        a.push((0.0, reference.iter().map(|u| u.0[j]).collect(), x0[j]));
    }
    if rts == Rts::Vrs {
        a.push((0.0, vec![1.0; n], 1.0));
    }
    let tol = 1e-9;
    let mut best: Option<f64> = None;
    let mut support = Vec::new();
    for s in 1..=rows.min(n) {
        for_each_subset(n, s, &mut support, &mut |support| {
            let mut tight = Vec::new();
            for_each_subset(rows, s + 1, &mut tight, &mut |tight| {
                if rts == Rts::Vrs && !tight.contains(&(rows - 1)) {
                    return;
                }
                let m = DMatrix::from_fn(s + 1, s + 1, |i, j| {
                    let row = &a[tight[i]];
                    if j == 0 {
                        row.0
                    } else {
                        row.1[support[j - 1]]
                    }
                });
                let rhs = DVector::from_fn(s + 1, |i, _| a[tight[i]].2);
                let Some(sol) = m.lu().solve(&rhs) else {
                    return;
                };
                let lambda = sol[0];
                if !lambda.is_finite() || lambda < -tol {
                    return;
                }
                if (1..=s).any(|j| sol[j] < -tol) {
                    return;
                }
                let feasible = a.iter().enumerate().all(|(i, row)| {
                    let lhs: f64 = row.0 * lambda
                        + support
                            .iter()
                            .zip(sol.iter().skip(1))
                            .map(|(&u, g)| row.1[u] * g)
                            .sum::<f64>();
                    let slack = tol * (1.0 + row.2.abs() + lhs.abs());
                    if rts == Rts::Vrs && i == rows - 1 {
                        (lhs - row.2).abs() <= slack
                    } else {
                        lhs <= row.2 + slack
                    }
                });
                if feasible && best.is_none_or(|b| lambda > b) {
                    best = Some(lambda);
                }
            });
        });
    }
    best
}

fn for_each_subset(n: usize, k: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, buf: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if buf.len() == k {
            f(buf);
            return;
        }
        for i in start..n {
            if n - i < k - buf.len() {
                break;
            }
            buf.push(i);
            rec(i + 1, n, k, buf, f);
            buf.pop();
        }
    }
    buf.clear();
    rec(0, n, k, buf, f);
}

/// Units whose every conditioning value lies within the bandwidth of unit `i`.
pub fn window_indices(z: &ConditioningSet, i: usize, h: &[f64]) -> Vec<usize> {
    (0..z.n())
        .filter(|&j| (0..z.k()).all(|c| (z.column(c)[j] - z.column(c)[i]).abs() <= h[c]))
        .collect()
}

/// Moran's I from the dense formula `(n / S0) z'Wz / z'z`.
pub fn direct_moran(w: &[Vec<f64>], v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let z: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let s0: f64 = w.iter().flatten().sum();
    let mut num = 0.0;
    for (i, row) in w.iter().enumerate() {
        for (j, wij) in row.iter().enumerate() {
            num += wij * z[i] * z[j];
        }
    }
    let den: f64 = z.iter().map(|x| x * x).sum();
    n / s0 * num / den
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub what: String,
    pub cases: usize,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Set when the check could not run, e.g. too many subsets to enumerate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl OracleCheck {
    pub fn new(what: &str, discrepancies: &[f64], tolerance: f64) -> Self {
        let max_discrepancy = discrepancies.iter().copied().fold(0.0, f64::max);
        Self {
            what: what.into(),
            cases: discrepancies.len(),
            max_discrepancy,
            tolerance,
            passed: discrepancies.iter().all(|d| *d <= tolerance),
            skipped: None,
        }
    }

    pub fn skipped(what: &str, reason: &str) -> Self {
        Self {
            what: what.into(),
            cases: 0,
            max_discrepancy: 0.0,
            tolerance: 0.0,
            passed: true,
            skipped: Some(reason.into()),
        }
    }

    pub fn into_result(self) -> Result<Self> {
        if self.passed {
            Ok(self)
        } else {
            Err(Error::OracleMismatch {
                what: self.what,
                discrepancy: self.max_discrepancy,
                tolerance: self.tolerance,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The first failed check as an error.
    pub fn ensure_passed(&self) -> Result<()> {
        match self.checks.iter().find(|c| !c.passed) {
            Some(c) => c.clone().into_result().map(|_| ()),
            None => Ok(()),
        }
    }
}

fn pairs(sample: &FrontierSample, indices: &[usize]) -> Vec<(Vec<f64>, Vec<f64>)> {
    indices
        .iter()
        .map(|&i| {
            let u = &sample.units()[i];
            (u.x.clone(), u.q.clone())
        })
        .collect()
}

/// Compares DEA lambdas with the ratio formula (CRS, one input and one
/// output) and with vertex enumeration.
pub fn check_dea(sample: &FrontierSample, result: &EfficiencyResult) -> Vec<OracleCheck> {
    let mut checks = Vec::new();
    let units = sample.units();
    if result.rts == Rts::Crs && sample.p() == 1 && sample.r() == 1 {
        let reference: Vec<(f64, f64)> = units.iter().map(|u| (u.x[0], u.q[0])).collect();
        let diffs: Vec<f64> = units
            .iter()
            .zip(&result.units)
            .map(|(u, e)| (ratio_lambda(u.x[0], u.q[0], &reference) - e.lambda).abs())
            .collect();
        checks.push(OracleCheck::new("dea lambda vs ratio formula", &diffs, 1e-9));
    }
    let what = "dea lambda vs vertex enumeration";
    if vertex_work(sample.len(), sample.p(), sample.r(), result.rts).is_none() {
        checks.push(OracleCheck::skipped(what, "too many subsets to enumerate"));
        return checks;
    }
    let all: Vec<usize> = (0..sample.len()).collect();
    let reference = pairs(sample, &all);
    let diffs: Vec<f64> = units
        .iter()
        .zip(&result.units)
        .map(|(u, e)| match vertex_lambda(&u.x, &u.q, &reference, result.rts) {
            Some(l) => (l - e.lambda).abs(),
            None => f64::INFINITY,
        })
        .collect();
    checks.push(OracleCheck::new(what, &diffs, 1e-7));
    checks
}

/// Recomputes every conditional lambda by brute force over an
/// independently derived window.
pub fn check_conditional(
    sample: &FrontierSample,
    z: &ConditioningSet,
    h: &BandwidthVector,
    result: &EfficiencyResult,
) -> OracleCheck {
    let what = "conditional lambda vs subsample brute force";
    let mut diffs = Vec::with_capacity(sample.len());
    for (i, (u, e)) in sample.units().iter().zip(&result.units).enumerate() {
        let window = window_indices(z, i, &h.h);
        if vertex_work(window.len(), sample.p(), sample.r(), result.rts).is_none() {
            return OracleCheck::skipped(what, "too many subsets to enumerate");
        }
        let reference = pairs(sample, &window);
        diffs.push(match vertex_lambda(&u.x, &u.q, &reference, result.rts) {
            Some(l) => (l - e.lambda).abs(),
            None => f64::INFINITY,
        });
    }
    OracleCheck::new(what, &diffs, 1e-7)
}

pub fn check_moran(w: &SpatialWeights, v: &[f64], statistic: f64) -> OracleCheck {
    let direct = direct_moran(&w.to_dense(), v);
    OracleCheck::new("moran I vs direct formula", &[(direct - statistic).abs()], 1e-10)
}

/// Checks lambdas read back from a score file against the ratio formula or
/// vertex enumeration, matching rows by region.
pub fn check_score_file(sample: &FrontierSample, records: &[ScoreRecord], rts: Rts) -> Result<OracleCheck> {
    let what = "score file lambda vs oracle";
    let all: Vec<usize> = (0..sample.len()).collect();
    let reference = pairs(sample, &all);
    if records.len() != sample.len() {
        return Err(Error::LengthMismatch(sample.len(), records.len()));
    }
    if vertex_work(sample.len(), sample.p(), sample.r(), rts).is_none() {
        return Ok(OracleCheck::skipped(what, "too many subsets to enumerate"));
    }
    let mut diffs = Vec::with_capacity(records.len());
    for rec in records {
        let i = sample
            .ids()
            .iter()
            .position(|id| *id == rec.region)
            .ok_or_else(|| Error::UnknownRegion(rec.region.clone()))?;
        let u = &sample.units()[i];
        let l = vertex_lambda(&u.x, &u.q, &reference, rts).unwrap_or(f64::INFINITY);
        diffs.push((l - rec.lambda).abs());
    }
    Ok(OracleCheck::new(what, &diffs, 1e-7))
}
