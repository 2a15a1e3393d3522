//! Conditional frontier estimation.
//!
//! The conditional survival estimator weights each observation by a product
//! kernel in the environmental variables `z`. With a compact-support kernel
//! only units whose `z` falls inside the window `|z_ik - z0k| <= h_k` (closed,
//! every component) receive positive weight, so the conditional DEA score of
//! a unit is the ordinary DEA score computed against that window. This is
//! how [`cdea_scores`] works; [`conditional_survival`] evaluates the kernel
//! ratio directly for diagnostics.
//!
//! The kernel is Epanechnikov. Beyond deciding which units enter the window,
//! its shape does not affect the cDEA scores.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FrontierSample;
use crate::dea::{solve_output_lp, EfficiencyResult, Method, Rts, UnitEfficiency};
use crate::error::{Error, Result};
use crate::weights::{spatial_lag, SpatialWeights};

/// Multipliers of the rule-of-thumb bandwidth searched by LSCV: 17 points,
/// geometric from 0.25 to 4.
pub const LSCV_GRID_POINTS: usize = 17;
pub const LSCV_GRID_LOW: f64 = 0.25;
pub const LSCV_GRID_HIGH: f64 = 4.0;
/// Bandwidth multiplier (relative to the column's scale) used for columns
/// with no variation. Any positive value keeps every unit in the window.
const CONSTANT_COLUMN_BANDWIDTH: f64 = 1e12;

pub fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Product Epanechnikov kernel of a standardized distance vector.
pub fn kernel_weight(u: &[f64]) -> f64 {
    u.iter().map(|&v| epanechnikov(v)).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthSelection {
    Lscv,
    RuleOfThumb,
    User,
}

/// One evaluated grid point of a bandwidth search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    pub h: Vec<f64>,
    pub criterion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthVector {
    /// One bandwidth per conditioning column, in that column's units.
    pub h: Vec<f64>,
    pub selection: BandwidthSelection,
    /// Columns that had no variation and got an effectively infinite bandwidth.
    #[serde(default)]
    pub constant_columns: Vec<usize>,
    /// Bandwidth of the output kernel used inside the LSCV criterion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<CvPoint>,
}

impl BandwidthVector {
    pub fn user(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::InvalidBandwidth("no bandwidths given".into()));
        }
        if let Some(v) = h.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidBandwidth(format!(
                "bandwidths must be positive and finite, got {v}"
            )));
        }
        Ok(Self {
            h,
            selection: BandwidthSelection::User,
            constant_columns: Vec::new(),
            output_bandwidth: None,
            trace: Vec::new(),
        })
    }

    /// `1.06 sd(z_k) n^(-1/(4 + k))` per column.
    pub fn rule_of_thumb(z: &ConditioningSet) -> Result<Self> {
        let (h, constant) = rule_of_thumb_bandwidths(z);
        Ok(Self {
            h,
            selection: BandwidthSelection::RuleOfThumb,
            constant_columns: constant,
            output_bandwidth: None,
            trace: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Environmental variables, one column per conditioning variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditioningSet {
    pub names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl ConditioningSet {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidArgument("no conditioning columns".into()));
        }
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: columns.len(),
                got: names.len(),
            });
        }
        let n = columns[0].len();
        for c in &columns {
            if c.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite conditioning value".into()));
            }
        }
        Ok(Self { names, columns })
    }

    /// Columns named `z1, z2, ...`.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let names = (1..=columns.len()).map(|i| format!("z{i}")).collect();
        Self::new(names, columns)
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    /// Number of conditioning variables.
    pub fn k(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// `region,z1,z2,...`
    pub fn write_csv<W: Write>(&self, regions: &[&str], out: W) -> Result<()> {
        if regions.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: regions.len(),
            });
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["region".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (i, r) in regions.iter().enumerate() {
            let mut rec = vec![r.to_string()];
            rec.extend(self.columns.iter().map(|c| c[i].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

fn rule_of_thumb_bandwidths(z: &ConditioningSet) -> (Vec<f64>, Vec<usize>) {
    let n = z.n() as f64;
    let k = z.k() as f64;
    let mut constant = Vec::new();
    let h = z
        .columns
        .iter()
        .enumerate()
        .map(|(c, col)| {
            if is_constant(col) {
                constant.push(c);
                CONSTANT_COLUMN_BANDWIDTH * col[0].abs().max(1.0)
            } else {
                1.06 * mean_sd(col).1 * n.powf(-1.0 / (4.0 + k))
            }
        })
        .collect();
    (h, constant)
}

fn check_bandwidths(z: &ConditioningSet, h: &BandwidthVector) -> Result<()> {
    if h.len() != z.k() {
        return Err(Error::DimensionMismatch {
            expected: z.k(),
            got: h.len(),
        });
    }
    if let Some(v) = h.h.iter().find(|v| !(**v > 0.0) || v.is_nan()) {
        return Err(Error::InvalidBandwidth(format!("bandwidth {v} is not positive")));
    }
    Ok(())
}

fn in_window(z: &ConditioningSet, i: usize, z0: &[f64], h: &[f64]) -> bool {
    z.columns
        .iter()
        .zip(z0)
        .zip(h)
        .all(|((col, c), hk)| (col[i] - c).abs() <= *hk)
}

/// Indices of units with positive product-kernel weight at `z0`: those with
/// `|z_ik - z0k| <= h_k` for every column. Boundary ties are included.
pub fn conditional_subsample(
    z0: &[f64],
    z: &ConditioningSet,
    h: &BandwidthVector,
) -> Result<Vec<usize>> {
    if z0.len() != z.k() {
        return Err(Error::DimensionMismatch {
            expected: z.k(),
            got: z0.len(),
        });
    }
    check_bandwidths(z, h)?;
    let idx: Vec<usize> = (0..z.n()).filter(|&i| in_window(z, i, z0, &h.h)).collect();
    if idx.is_empty() {
        return Err(Error::EmptySubsample(None));
    }
    Ok(idx)
}

/// Kernel estimate of `P(Q >= q_level | X <= x0, Z = z0)`:
///
/// ```text
/// sum_i 1(x_i <= x0, q_i >= q_level) K((z_i - z0) / h)
/// ----------------------------------------------------
///          sum_i 1(x_i <= x0) K((z_i - z0) / h)
/// ```
pub fn conditional_survival(
    q_level: &[f64],
    x0: &[f64],
    z0: &[f64],
    sample: &FrontierSample,
    z: &ConditioningSet,
    h: &BandwidthVector,
) -> Result<f64> {
    if z.n() != sample.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.len(),
            got: z.n(),
        });
    }
    if q_level.len() != sample.r() || x0.len() != sample.p() || z0.len() != z.k() {
        return Err(Error::DimensionMismatch {
            expected: sample.p() + sample.r() + z.k(),
            got: x0.len() + q_level.len() + z0.len(),
        });
    }
    check_bandwidths(z, h)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, u) in sample.units().iter().enumerate() {
        if !u.x.iter().zip(x0).all(|(a, b)| a <= b) {
            continue;
        }
        let scaled: Vec<f64> = (0..z.k())
            .map(|k| (z.columns[k][i] - z0[k]) / h.h[k])
            .collect();
        let k = kernel_weight(&scaled);
        den += k;
        if u.q.iter().zip(q_level).all(|(a, b)| a >= b) {
            num += k;
        }
    }
    if den <= 0.0 {
        return Err(Error::UndefinedDenominator);
    }
    Ok(num / den)
}

/// The LSCV search grid of multipliers.
pub fn lscv_multipliers() -> Vec<f64> {
    let ratio = (LSCV_GRID_HIGH / LSCV_GRID_LOW).powf(1.0 / (LSCV_GRID_POINTS - 1) as f64);
    (0..LSCV_GRID_POINTS)
        .map(|j| {
            if j == LSCV_GRID_POINTS - 1 {
                LSCV_GRID_HIGH
            } else {
                LSCV_GRID_LOW * ratio.powi(j as i32)
            }
        })
        .collect()
}

/// Scalar summary of a unit's outputs used by the bandwidth criterion: the
/// output itself when there is one, otherwise its Euclidean norm.
fn output_projection(sample: &FrontierSample) -> Vec<f64> {
    sample
        .units()
        .iter()
        .map(|u| {
            if u.q.len() == 1 {
                u.q[0]
            } else {
                u.q.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
        })
        .collect()
}

fn gaussian(u: f64, b: f64) -> f64 {
    (-0.5 * (u / b).powi(2)).exp() / (b * (2.0 * std::f64::consts::PI).sqrt())
}

/// Leave-one-out least-squares cross-validation criterion for the kernel
/// estimate of the conditional density of `y` given `z`:
///
/// ```text
/// CV(h) = (1/n) sum_i [ int f_{-i}(t | z_i)^2 dt - 2 f_{-i}(y_i | z_i) ]
/// ```
///
/// `z` is smoothed with the product Epanechnikov kernel at `h`, `y` with a
/// Gaussian kernel at `b`, so the integral has a closed form. Units whose
/// leave-one-out window is empty contribute zero.
pub fn lscv_criterion(y: &[f64], z: &ConditioningSet, h: &[f64], b: f64) -> f64 {
    let n = y.len();
    let b2 = b * std::f64::consts::SQRT_2;
    let mut total = 0.0;
    let mut idx = Vec::new();
    let mut w = Vec::new();
    for i in 0..n {
        idx.clear();
        w.clear();
        for j in (0..n).filter(|&j| j != i) {
            let mut k = 1.0;
            for (col, hk) in z.columns.iter().zip(h) {
                k *= epanechnikov((col[j] - col[i]) / hk);
                if k == 0.0 {
                    break;
                }
            }
            if k > 0.0 {
                idx.push(j);
                w.push(k);
            }
        }
        let s: f64 = w.iter().sum();
        if s <= 0.0 {
            continue;
        }
        let fit: f64 = idx
            .iter()
            .zip(&w)
            .map(|(&j, wj)| wj * gaussian(y[j] - y[i], b))
            .sum::<f64>()
            / s;
        let mut sq = 0.0;
        for (a, &j) in idx.iter().enumerate() {
            sq += w[a] * w[a] * gaussian(0.0, b2);
            for c in a + 1..idx.len() {
                sq += 2.0 * w[a] * w[c] * gaussian(y[j] - y[idx[c]], b2);
            }
        }
        total += sq / (s * s) - 2.0 * fit;
    }
    total / n as f64
}

/// Data-driven bandwidths for the conditioning columns.
///
/// Minimizes [`lscv_criterion`] over the product grid of per-column
/// multipliers [`lscv_multipliers`] of the rule-of-thumb bandwidth. Constant
/// columns are excluded from the search and get an effectively infinite
/// bandwidth; they are listed in `constant_columns`. Every evaluated grid
/// point is kept in `trace`.
pub fn lscv_bandwidth(sample: &FrontierSample, z: &ConditioningSet) -> Result<BandwidthVector> {
    let n = sample.len();
    if z.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.n(),
        });
    }
    if n < 10 {
        return Err(Error::TooFewUnits {
            n,
            need: "LSCV bandwidth selection (at least 10)".into(),
        });
    }
    let y = output_projection(sample);
    let sd_y = mean_sd(&y).1;
    let b = if sd_y > 0.0 {
        1.06 * sd_y * (n as f64).powf(-0.2)
    } else {
        1.0
    };

    let (base, constant) = rule_of_thumb_bandwidths(z);
    let searched: Vec<usize> = (0..z.k()).filter(|c| !constant.contains(c)).collect();
    let grid = lscv_multipliers();

    let combos: Vec<Vec<f64>> = (0..grid.len().pow(searched.len() as u32))
        .map(|mut code| {
            let mut h = base.clone();
            for &c in &searched {
                h[c] = base[c] * grid[code % grid.len()];
                code /= grid.len();
            }
            h
        })
        .collect();

    let trace: Vec<CvPoint> = combos
        .into_par_iter()
        .map(|h| {
            let criterion = lscv_criterion(&y, z, &h, b);
            CvPoint { h, criterion }
        })
        .collect();

    let best = trace
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.criterion.total_cmp(&b.1.criterion).then(a.0.cmp(&b.0)))
        .map(|(_, p)| p.h.clone())
        .expect("non-empty grid");

    Ok(BandwidthVector {
        h: best,
        selection: BandwidthSelection::Lscv,
        constant_columns: constant,
        output_bandwidth: Some(b),
        trace,
    })
}

/// Conditional DEA: each unit is scored against the units in its own window.
pub fn cdea_scores(
    sample: &FrontierSample,
    z: &ConditioningSet,
    h: &BandwidthVector,
    rts: Rts,
) -> Result<EfficiencyResult> {
    conditional_scores(sample, z, h, rts, Method::Cdea)
}

fn conditional_scores(
    sample: &FrontierSample,
    z: &ConditioningSet,
    h: &BandwidthVector,
    rts: Rts,
    method: Method,
) -> Result<EfficiencyResult> {
    if z.n() != sample.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.len(),
            got: z.n(),
        });
    }
    check_bandwidths(z, h)?;
    let units = sample
        .units()
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let window = conditional_subsample(&z.row(i), z, h)
                .map_err(|_| Error::EmptySubsample(Some(i)).for_unit(&u.id))?;
            let reference = sample.subset(&window)?;
            solve_output_lp(&u.x, &u.q, &reference, rts)
                .map(|o| UnitEfficiency::from_outcome(&u.id, &o, &window))
                .map_err(|e| e.for_unit(&u.id))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EfficiencyResult {
        method,
        rts,
        units,
        bandwidths: Some(h.clone()),
    })
}

/// Spatial-lag conditioning columns: the lag of every output dimension, then
/// the lag of every input dimension. For one input and one output this is
/// `z1 = Wq`, `z2 = Wx`.
pub fn spatial_conditioning(sample: &FrontierSample, w: &SpatialWeights) -> Result<ConditioningSet> {
    if w.len() != sample.len() {
        return Err(Error::DimensionMismatch {
            expected: sample.len(),
            got: w.len(),
        });
    }
    let mut columns = Vec::with_capacity(sample.p() + sample.r());
    for k in 0..sample.r() {
        columns.push(spatial_lag(w, &sample.output_column(k))?);
    }
    for j in 0..sample.p() {
        columns.push(spatial_lag(w, &sample.input_column(j))?);
    }
    ConditioningSet::from_columns(columns)
}

/// Spatially conditioned DEA. Bandwidths come from [`lscv_bandwidth`] unless
/// supplied.
pub fn spdea(
    sample: &FrontierSample,
    w: &SpatialWeights,
    rts: Rts,
    h: Option<BandwidthVector>,
) -> Result<(EfficiencyResult, ConditioningSet)> {
    if !w.is_standardized() {
        return Err(Error::InvalidArgument(
            "spatial weights must be row-standardized".into(),
        ));
    }
    let z = spatial_conditioning(sample, w)?;
    let h = match h {
        Some(h) => h,
        None => lscv_bandwidth(sample, &z)?,
    };
    let result = conditional_scores(sample, &z, &h, rts, Method::Spdea)?;
    Ok((result, z))
}
