//! Distributional diagnostics for efficiency scores: summaries,
//! correlations, sigma-convergence, kernel densities and the excess-mass
//! multimodality test.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::conditional::mean_sd;
use crate::effects::quantile;
use crate::error::{Error, Result};

/// Points in a display density grid.
pub const KDE_POINTS: usize = 512;
/// Points in the grid used to locate modes.
pub const MODE_GRID_POINTS: usize = 1024;
/// Significance level used by [`multimodality_test`].
pub const DEFAULT_ALPHA: f64 = 0.05;
const BISECTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

pub fn describe(scores: &[f64]) -> Result<ScoreSummary> {
    if scores.is_empty() {
        return Err(Error::EmptyVector);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    let (mean, sd) = mean_sd(scores);
    Ok(ScoreSummary {
        n,
        mean,
        sd,
        min: sorted[0],
        median,
        max: sorted[n - 1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub estimate: f64,
    /// Two-sided p-value from the t approximation with n - 2 degrees of freedom.
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub n: usize,
    pub pearson: Coefficient,
    pub spearman: Coefficient,
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, _) = mean_sd(a);
    let (mb, _) = mean_sd(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Ranks starting at 1, ties sharing their mean rank.
pub fn midranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn t_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Pearson and Spearman correlations with t-approximation p-values.
pub fn correlations(a: &[f64], b: &[f64]) -> Result<Correlations> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 3 {
        return Err(Error::TooFewPoints(a.len()));
    }
    if is_constant(a) || is_constant(b) {
        return Err(Error::ConstantVector);
    }
    let n = a.len();
    let r = pearson(a, b);
    let rho = pearson(&midranks(a), &midranks(b));
    Ok(Correlations {
        n,
        pearson: Coefficient {
            estimate: r,
            p_value: t_p_value(r, n),
        },
        spearman: Coefficient {
            estimate: rho,
            p_value: t_p_value(rho, n),
        },
    })
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    /// Standard deviation falls every year.
    Narrowing,
    /// Standard deviation rises every year.
    Widening,
    Flat,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaConvergence {
    pub sd: BTreeMap<i32, f64>,
    pub trend: Trend,
    pub report: String,
}

/// Cross-sectional standard deviation per year.
pub fn sigma_convergence(yearly: &BTreeMap<i32, Vec<f64>>) -> Result<SigmaConvergence> {
    let mut sd = BTreeMap::new();
    for (&year, scores) in yearly {
        sd.insert(year, describe(scores)?.sd);
    }
    let values: Vec<f64> = sd.values().copied().collect();
    let trend = if values.len() < 2 || values.windows(2).all(|w| w[1] == w[0]) {
        Trend::Flat
    } else if values.windows(2).all(|w| w[1] < w[0]) {
        Trend::Narrowing
    } else if values.windows(2).all(|w| w[1] > w[0]) {
        Trend::Widening
    } else {
        Trend::Mixed
    };
    let report = match (sd.iter().next(), sd.iter().next_back()) {
        (Some((y0, s0)), Some((y1, s1))) if y0 != y1 => {
            let word = match trend {
                Trend::Narrowing => "narrowing",
                Trend::Widening => "widening",
                Trend::Flat => "flat",
                Trend::Mixed => "mixed",
            };
            format!("sd {s0:.4} in {y0} to {s1:.4} in {y1}: {word}")
        }
        _ => "single year".to_string(),
    };
    Ok(SigmaConvergence { sd, trend, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum BandwidthRule {
    /// `0.9 min(sd, IQR/1.34) n^(-1/5)`
    Silverman,
    User { h: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub bandwidth: f64,
    pub rule: BandwidthRule,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl DensityGrid {
    /// `x,density`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "density"])?;
        for (x, d) in self.x.iter().zip(&self.density) {
            w.serialize((x, d))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn trapezoid_mass(&self) -> f64 {
        trapezoid(&self.x, &self.density)
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

pub fn silverman_bandwidth(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = mean_sd(sample).1;
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (sample.len() as f64).powf(-0.2)
}

fn gaussian_density_grid(sample: &[f64], h: f64, points: usize) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = min_max(sample);
    let start = lo - 3.0 * h;
    let end = hi + 3.0 * h;
    let step = (end - start) / (points - 1) as f64;
    let norm = 1.0 / (sample.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let x: Vec<f64> = (0..points)
        .map(|i| if i == points - 1 { end } else { start + step * i as f64 })
        .collect();
    let f = x
        .iter()
        .map(|&g| {
            norm * sample
                .iter()
                .map(|&s| (-0.5 * ((g - s) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    (x, f)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Gaussian kernel density on [`KDE_POINTS`] points spanning
/// `[min - 3h, max + 3h]`, rescaled to unit trapezoid mass on that grid.
pub fn kde(scores: &[f64], rule: BandwidthRule) -> Result<DensityGrid> {
    if scores.is_empty() {
        return Err(Error::EmptyVector);
    }
    if is_constant(scores) {
        return Err(Error::ConstantVector);
    }
    let h = match rule {
        BandwidthRule::Silverman => silverman_bandwidth(scores),
        BandwidthRule::User { h } => h,
    };
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidBandwidth(format!("{h}")));
    }
    let (x, mut density) = gaussian_density_grid(scores, h, KDE_POINTS);
    let mass = trapezoid(&x, &density);
    for d in &mut density {
        *d /= mass;
    }
    Ok(DensityGrid {
        bandwidth: h,
        rule,
        x,
        density,
    })
}

/// Distinct sorted values with cumulative counts, the form in which the
/// excess-mass optimization works.
struct Atoms {
    values: Vec<f64>,
    /// `prefix[i]` = number of observations among the first `i` distinct values.
    prefix: Vec<i64>,
    n: f64,
}

impl Atoms {
    fn new(sample: &[f64]) -> Self {
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut values = Vec::new();
        let mut prefix = vec![0i64];
        for v in sorted {
            if values.last() == Some(&v) {
                *prefix.last_mut().unwrap() += 1;
            } else {
                values.push(v);
                let last = *prefix.last().unwrap();
                prefix.push(last + 1);
            }
        }
        Atoms {
            values,
            prefix,
            n: sample.len() as f64,
        }
    }

    fn min_gap(&self) -> Option<f64> {
        self.values
            .windows(2)
            .map(|w| w[1] - w[0])
            .min_by(f64::total_cmp)
    }
}

/// An interval family summarized by its observation count and total length;
/// its excess mass at level `lambda` is `count/n - lambda * length`.
#[derive(Debug, Clone, Copy)]
struct Family {
    count: i64,
    length: f64,
    value: f64,
}

impl Family {
    const EMPTY: Family = Family {
        count: 0,
        length: 0.0,
        value: 0.0,
    };

    fn at(self, inv_n: f64, lambda: f64) -> f64 {
        self.count as f64 * inv_n - lambda * self.length
    }
}

/// Optimal families with at most `1..=k` intervals at level `lambda`.
fn best_families(atoms: &Atoms, k: usize, lambda: f64) -> Vec<Family> {
    let m = atoms.values.len();
    let inv_n = 1.0 / atoms.n;
    let v = &atoms.values;
    let s = &atoms.prefix;
    let mut prev = vec![Family::EMPTY; m + 1];
    let mut cur = vec![Family::EMPTY; m + 1];
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        cur[0] = Family::EMPTY;
        // best interval start so far, as (count, offset, score) where the
        // family closed at b has count + s[b+1] points and length v[b] - offset
        let mut open = (0i64, 0.0f64, f64::NEG_INFINITY);
        for b in 0..m {
            let count = prev[b].count - s[b];
            let offset = v[b] - prev[b].length;
            let score = count as f64 * inv_n + lambda * offset;
            if score > open.2 {
                open = (count, offset, score);
            }
            let mut closing = Family {
                count: open.0 + s[b + 1],
                length: v[b] - open.1,
                value: 0.0,
            };
            closing.value = closing.at(inv_n, lambda);
            let mut best = cur[b];
            if prev[b + 1].value > best.value {
                best = prev[b + 1];
            }
            if closing.value > best.value {
                best = closing;
            }
            cur[b + 1] = best;
        }
        out.push(cur[m]);
        std::mem::swap(&mut prev, &mut cur);
    }
    out
}

/// Walks the breakpoints in `(lo, hi)` of the convex piecewise-linear map
/// `lambda -> E(k, lambda)` by intersecting supporting lines. Every DP run
/// covers levels `1..=top_k`, and `visit` sees each of them.
#[allow(clippy::too_many_arguments)]
fn walk_envelope(
    atoms: &Atoms,
    k: usize,
    top_k: usize,
    (lo, a): (f64, Family),
    (hi, b): (f64, Family),
    depth: usize,
    visit: &mut impl FnMut(f64, &[Family]),
) {
    let inv_n = 1.0 / atoms.n;
    if a.count == b.count && a.length == b.length {
        return;
    }
    let dl = a.length - b.length;
    if dl <= 0.0 {
        return;
    }
    let cross = ((a.count - b.count) as f64 * inv_n) / dl;
    if !(cross > lo && cross < hi) {
        return;
    }
    let all = best_families(atoms, top_k, cross);
    visit(cross, &all);
    let c = all[k - 1];
    let line = a.at(inv_n, cross);
    let tol = 1e-12 * (1.0 + line.abs());
    if c.value <= line + tol || depth > 64 {
        return;
    }
    walk_envelope(atoms, k, top_k, (lo, a), (cross, c), depth + 1, visit);
    walk_envelope(atoms, k, top_k, (cross, c), (hi, b), depth + 1, visit);
}

/// Excess-mass statistic `max_lambda [E(k0+1, lambda) - E(k0, lambda)]`.
///
/// `E(k, lambda)` is the largest total of empirical mass minus `lambda`
/// times length over at most `k` disjoint closed intervals. Optimal
/// intervals have endpoints at sample points, so `E(k, .)` is the upper
/// envelope of finitely many lines and the difference is maximized at one of
/// the envelopes' breakpoints or beyond the last of them, where every optimal
/// interval is a single point.
pub fn excess_mass_statistic(sample: &[f64], k0: usize) -> f64 {
    assert!(k0 >= 1, "k0 must be at least 1");
    if sample.is_empty() {
        return 0.0;
    }
    let atoms = Atoms::new(sample);
    let top = match atoms.min_gap() {
        // beyond 1/min_gap no interval with positive length has positive excess
        Some(gap) => 2.0 / gap + 1.0,
        None => 1.0,
    };
    let mut best = 0.0f64;
    let mut visit = |_: f64, f: &[Family]| best = best.max(f[k0].value - f[k0 - 1].value);
    let at_zero = best_families(&atoms, k0 + 1, 0.0);
    let at_top = best_families(&atoms, k0 + 1, top);
    visit(top, &at_top);
    for k in [k0, k0 + 1] {
        walk_envelope(
            &atoms,
            k,
            k0 + 1,
            (0.0, at_zero[k - 1]),
            (top, at_top[k - 1]),
            0,
            &mut visit,
        );
    }
    best
}

/// Mode locations of the Gaussian KDE with bandwidth `h` on a
/// [`MODE_GRID_POINTS`] grid; a plateau maps to its leftmost point.
pub fn kde_modes(sample: &[f64], h: f64) -> Vec<f64> {
    let (x, f) = gaussian_density_grid(sample, h, MODE_GRID_POINTS);
    let mut modes = Vec::new();
    let mut i = 0;
    while i < f.len() {
        let mut j = i;
        while j + 1 < f.len() && f[j + 1] == f[i] {
            j += 1;
        }
        let rises = i == 0 || f[i - 1] < f[i];
        let falls = j + 1 == f.len() || f[j + 1] < f[i];
        if rises && falls && f[i] > 0.0 {
            modes.push(x[i]);
        }
        i = j + 1;
    }
    modes
}

/// Smallest Gaussian KDE bandwidth with at most `k` modes, by bisection to
/// a relative tolerance of 1e-6.
pub fn critical_bandwidth(sample: &[f64], k: usize) -> f64 {
    let (_, sd) = mean_sd(sample);
    let (lo_v, hi_v) = min_max(sample);
    let mut hi = if sd > 0.0 { sd } else { (hi_v - lo_v).max(1.0) };
    for _ in 0..60 {
        if kde_modes(sample, hi).len() <= k {
            break;
        }
        hi *= 2.0;
    }
    let floor = hi * 1e-9;
    let mut lo = hi / 2.0;
    while kde_modes(sample, lo).len() <= k {
        hi = lo;
        lo /= 2.0;
        if lo < floor {
            return hi;
        }
    }
    while hi - lo > BISECTION_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if kde_modes(sample, mid).len() <= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTestResult {
    /// Number of modes under the null.
    pub k0: usize,
    /// Excess-mass statistic for `k0 + 1` against `k0` modes.
    pub statistic: f64,
    pub p_value: f64,
    pub replications: usize,
    pub seed: u64,
    pub alpha: f64,
    pub rejected: bool,
    /// Critical bandwidth of the `k0`-modal calibration density.
    pub critical_bandwidth: f64,
    /// Bandwidth of the density whose maxima give `locations`.
    pub location_bandwidth: f64,
    pub modes: usize,
    pub locations: Vec<f64>,
}

/// Excess-mass test of `k0` modes against more than `k0`, at level
/// [`DEFAULT_ALPHA`]. See [`multimodality_test_with`].
pub fn multimodality_test(sample: &[f64], k0: usize, replications: usize, seed: u64) -> Result<ModeTestResult> {
    multimodality_test_with(sample, k0, replications, seed, DEFAULT_ALPHA)
}

/// Excess-mass test of `k0` modes against more than `k0`.
///
/// Bootstrap samples `x_I + h e` come from the Gaussian KDE at the `k0`
/// critical bandwidth. The statistic is affine invariant, so rescaling the
/// draws to the sample variance would change nothing. Replication `b` uses
/// ChaCha stream `(k0 << 32) | b` under `seed`.
pub fn multimodality_test_with(
    sample: &[f64],
    k0: usize,
    replications: usize,
    seed: u64,
    alpha: f64,
) -> Result<ModeTestResult> {
    if k0 == 0 {
        return Err(Error::InvalidArgument("k0 must be at least 1".into()));
    }
    if sample.len() < 10 {
        return Err(Error::TooFewPoints(sample.len()));
    }
    if replications < 499 {
        return Err(Error::InvalidArgument(format!(
            "at least 499 replications required, got {replications}"
        )));
    }
    if is_constant(sample) {
        return Ok(ModeTestResult {
            k0,
            statistic: 0.0,
            p_value: 1.0,
            replications,
            seed,
            alpha,
            rejected: false,
            critical_bandwidth: 0.0,
            location_bandwidth: 0.0,
            modes: 1,
            locations: vec![sample[0]],
        });
    }
    let statistic = excess_mass_statistic(sample, k0);
    let h = critical_bandwidth(sample, k0);
    let n = sample.len();
    let exceed = (0..replications)
        .into_par_iter()
        .filter(|&b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((k0 as u64) << 32) | b as u64);
            let boot: Vec<f64> = (0..n)
                .map(|_| {
                    let x = sample[rng.random_range(0..n)];
                    let e: f64 = rng.sample(StandardNormal);
                    x + h * e
                })
                .collect();
            excess_mass_statistic(&boot, k0) >= statistic
        })
        .count();
    let p_value = (1 + exceed) as f64 / (1 + replications) as f64;
    let rejected = p_value < alpha;
    let location_bandwidth = if rejected {
        critical_bandwidth(sample, k0 + 1)
    } else {
        h
    };
    let locations = kde_modes(sample, location_bandwidth);
    Ok(ModeTestResult {
        k0,
        statistic,
        p_value,
        replications,
        seed,
        alpha,
        rejected,
        critical_bandwidth: h,
        location_bandwidth,
        modes: locations.len(),
        locations,
    })
}

/// Number of modes by sequential testing: the first `k0 = 1, 2, ...` not
/// rejected at `alpha`, capped at `max_k`.
pub fn mode_count(sample: &[f64], alpha: f64, max_k: usize, replications: usize, seed: u64) -> Result<usize> {
    Ok(mode_count_detail(sample, alpha, max_k, replications, seed)?.0)
}

/// [`mode_count`] together with the test results it ran.
pub fn mode_count_detail(
    sample: &[f64],
    alpha: f64,
    max_k: usize,
    replications: usize,
    seed: u64,
) -> Result<(usize, Vec<ModeTestResult>)> {
    if max_k == 0 {
        return Err(Error::InvalidArgument("max_k must be at least 1".into()));
    }
    let mut tests = Vec::new();
    for k0 in 1..=max_k {
        if k0 == max_k {
            return Ok((max_k, tests));
        }
        let t = multimodality_test_with(sample, k0, replications, seed, alpha)?;
        let rejected = t.rejected;
        tests.push(t);
        if !rejected {
            return Ok((k0, tests));
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn describe_examples() {
        let s = describe(&[0.5]).unwrap();
        assert_eq!((s.mean, s.sd, s.min, s.median, s.max), (0.5, 0.0, 0.5, 0.5, 0.5));
        let s = describe(&[0.2, 0.4, 0.6, 0.8]).unwrap();
        assert!((s.mean - 0.5).abs() < 1e-15 && (s.median - 0.5).abs() < 1e-15);
        assert_eq!(describe(&[1.0, 2.0, 3.0]).unwrap().sd, 1.0);
        assert!(matches!(describe(&[]), Err(Error::EmptyVector)));
    }

    #[test]
    fn correlation_examples() {
        let a = [0.1, 0.5, 0.2, 0.9, 0.4];
        let c = correlations(&a, &a).unwrap();
        assert!((c.pearson.estimate - 1.0).abs() < 1e-12);
        assert!((c.spearman.estimate - 1.0).abs() < 1e-12);
        let e: Vec<f64> = a.iter().map(|v| (v * 5.0f64).exp()).collect();
        let c = correlations(&a, &e).unwrap();
        assert!((c.spearman.estimate - 1.0).abs() < 1e-12);
        assert!(c.pearson.estimate < 1.0);
        let rev: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((correlations(&a, &rev).unwrap().spearman.estimate + 1.0).abs() < 1e-12);
        assert!(matches!(correlations(&a, &[1.0; 5]), Err(Error::ConstantVector)));
    }

    #[test]
    fn midranks_share_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn sigma_convergence_trend() {
        let a = vec![0.2, 0.6, 0.9, 0.4];
        let m = 0.525;
        let b: Vec<f64> = a.iter().map(|v| m + 0.5 * (v - m)).collect();
        let yearly = BTreeMap::from([(2000, a.clone()), (2001, b)]);
        let s = sigma_convergence(&yearly).unwrap();
        assert!((s.sd[&2001] - 0.5 * s.sd[&2000]).abs() < 1e-12);
        assert_eq!(s.trend, Trend::Narrowing);
        assert!(s.report.contains("narrowing"));
        let same = BTreeMap::from([(2000, a.clone()), (2001, a)]);
        assert_eq!(sigma_convergence(&same).unwrap().trend, Trend::Flat);
    }

    #[test]
    fn kde_is_normalized_and_symmetric() {
        let s = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
        let d = kde(&s, BandwidthRule::Silverman).unwrap();
        assert_eq!(d.x.len(), KDE_POINTS);
        assert!((d.trapezoid_mass() - 1.0).abs() < 1e-12);
        for i in 0..KDE_POINTS {
            assert!((d.density[i] - d.density[KDE_POINTS - 1 - i]).abs() < 1e-6);
        }
        assert!(matches!(kde(&[1.0, 1.0], BandwidthRule::Silverman), Err(Error::ConstantVector)));
    }

    #[test]
    fn excess_mass_examples() {
        assert_eq!(excess_mass_statistic(&[3.0], 1), 0.0);
        assert!((excess_mass_statistic(&[0.0, 1.0], 1) - 0.5).abs() < 1e-15);
        assert_eq!(excess_mass_statistic(&[2.0; 7], 1), 0.0);
    }

    #[test]
    fn excess_mass_two_clusters() {
        // two tight clusters of 5: the second interval adds about half the mass
        let s: Vec<f64> = (0..5)
            .map(|i| i as f64 * 0.01)
            .chain((0..5).map(|i| 10.0 + i as f64 * 0.01))
            .collect();
        let d = excess_mass_statistic(&s, 1);
        assert!(d > 0.45 && d <= 0.5, "{d}");
    }

    #[test]
    fn modes_of_separated_clusters() {
        let s: Vec<f64> = (0..20)
            .map(|i| (i % 10) as f64 * 0.05 + if i < 10 { 0.0 } else { 5.0 })
            .collect();
        let m = kde_modes(&s, 0.3);
        assert_eq!(m.len(), 2);
        let h1 = critical_bandwidth(&s, 1);
        assert_eq!(kde_modes(&s, h1).len(), 1);
        assert!(kde_modes(&s, h1 * 0.99).len() > 1);
    }

    #[test]
    fn constant_sample_is_unimodal() {
        let r = multimodality_test(&[0.4; 12], 1, 499, 1).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.locations, vec![0.4]);
        assert_eq!(mode_count(&[0.4; 12], 0.05, 4, 499, 1).unwrap(), 1);
        assert!(matches!(multimodality_test(&[0.4; 5], 1, 499, 1), Err(Error::TooFewPoints(5))));
    }
}
