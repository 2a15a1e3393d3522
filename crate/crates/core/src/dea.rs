//! Output-oriented DEA.
//!
//! For a target `(x0, q0)` the expansion factor is
//!
//! ```text
//! lambda = max { l : l * q0 <= sum_i g_i q_i,  sum_i g_i x_i <= x0,  g >= 0 }
//! ```
//!
//! with the extra constraint `sum_i g_i = 1` under variable returns to scale.
//! The reported score is the reciprocal Farrell measure `1 / lambda`.
//!
//! Each output row is divided by `q0_k` and each input row by `x0_j` before
//! the program is solved, which keeps the tableau entries as dimensionless
//! ratios and makes the solution invariant to units of measurement.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditional::BandwidthVector;
use crate::data::FrontierSample;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};

/// Intensity weights above this are counted as reference-set members.
pub const REFERENCE_TOL: f64 = 1e-8;
/// Relative slack allowed when certifying an LP solution.
const CERTIFY_TOL: f64 = 1e-7;

/// Returns-to-scale assumption of the attainable set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Rts {
    /// Convex hull: intensity weights sum to one.
    Vrs,
    /// Convex cone: intensity weights unrestricted in sum.
    #[default]
    Crs,
}

impl std::str::FromStr for Rts {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "crs" => Ok(Rts::Crs),
            "vrs" => Ok(Rts::Vrs),
            other => Err(Error::Config(format!("unknown returns to scale `{other}`"))),
        }
    }
}

impl std::fmt::Display for Rts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Rts::Vrs => "vrs",
            Rts::Crs => "crs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "DEA")]
    Dea,
    #[serde(rename = "cDEA")]
    Cdea,
    #[serde(rename = "SpDEA")]
    Spdea,
}

impl Method {
    pub fn is_conditional(self) -> bool {
        !matches!(self, Method::Dea)
    }
}

/// Solution of one output-oriented program.
#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub lambda: f64,
    /// Intensity weight per reference unit. Not unique under degeneracy.
    pub gamma: Vec<f64>,
}

impl LpOutcome {
    pub fn reference_set(&self) -> Vec<usize> {
        self.gamma
            .iter()
            .enumerate()
            .filter(|(_, g)| **g > REFERENCE_TOL)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Maximal output expansion of `(x0, q0)` against `reference`.
pub fn solve_output_lp(
    x0: &[f64],
    q0: &[f64],
    reference: &FrontierSample,
    rts: Rts,
) -> Result<LpOutcome> {
    let (p, r) = (reference.p(), reference.r());
    if x0.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: x0.len(),
        });
    }
    if q0.len() != r {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: q0.len(),
        });
    }
    if let Some(v) = x0.iter().chain(q0).find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "target values must be finite and nonnegative, got {v}"
        )));
    }

    let n = reference.len();
    let units = reference.units();
    let mut objective = vec![0.0; n + 1];
    objective[0] = 1.0;
    let mut lp = LinearProgram::maximize(objective);

    for k in 0..r {
        let scale = if q0[k] > 0.0 { q0[k] } else { 1.0 };
        let mut row = Vec::with_capacity(n + 1);
        row.push(q0[k] / scale);
        row.extend(units.iter().map(|u| -u.q[k] / scale));
        lp.add_constraint(row, Relation::Le, 0.0);
    }
    for j in 0..p {
        let scale = if x0[j] > 0.0 { x0[j] } else { 1.0 };
        let mut row = Vec::with_capacity(n + 1);
        row.push(0.0);
        row.extend(units.iter().map(|u| u.x[j] / scale));
        lp.add_constraint(row, Relation::Le, x0[j] / scale);
    }
    if rts == Rts::Vrs {
        let mut row = vec![1.0; n + 1];
        row[0] = 0.0;
        lp.add_constraint(row, Relation::Eq, 1.0);
    }

    let solution = lp.solve()?;
    let lambda = solution.values[0];
    let gamma = solution.values[1..].to_vec();
    certify(x0, q0, reference, rts, lambda, &gamma)?;
    Ok(LpOutcome { lambda, gamma })
}

fn certify(
    x0: &[f64],
    q0: &[f64],
    reference: &FrontierSample,
    rts: Rts,
    lambda: f64,
    gamma: &[f64],
) -> Result<()> {
    let units = reference.units();
    let fail = |what: String| Err(Error::NumericalFailure(what));
    if !lambda.is_finite() {
        return fail(format!("non-finite lambda {lambda}"));
    }
    for (k, &q) in q0.iter().enumerate() {
        let attained: f64 = units.iter().zip(gamma).map(|(u, g)| g * u.q[k]).sum();
        if lambda * q > attained + CERTIFY_TOL * attained.abs().max(lambda * q).max(1e-300) {
            return fail(format!("output {k} constraint violated"));
        }
    }
    for (j, &x) in x0.iter().enumerate() {
        let used: f64 = units.iter().zip(gamma).map(|(u, g)| g * u.x[j]).sum();
        if used > x + CERTIFY_TOL * x.max(used) {
            return fail(format!("input {j} constraint violated"));
        }
    }
    if rts == Rts::Vrs && (gamma.iter().sum::<f64>() - 1.0).abs() > CERTIFY_TOL {
        return fail("intensity weights do not sum to one".into());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitEfficiency {
    pub region: String,
    /// Output expansion factor, at least one for in-sample units.
    pub lambda: f64,
    /// Reciprocal Farrell score `1 / lambda`.
    pub score: f64,
    /// Sample indices with intensity weight above [`REFERENCE_TOL`].
    pub reference_set: Vec<usize>,
    /// Number of units the program was solved against: the whole sample for
    /// DEA, the conditional window for cDEA/SpDEA.
    pub reference_size: usize,
    /// Nonzero intensity weights as (sample index, weight).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<(usize, f64)>,
}

impl UnitEfficiency {
    pub(crate) fn from_outcome(
        region: &str,
        outcome: &LpOutcome,
        sample_index: &[usize],
    ) -> Self {
        let gamma: Vec<(usize, f64)> = outcome
            .gamma
            .iter()
            .enumerate()
            .filter(|(_, g)| **g > 0.0)
            .map(|(i, g)| (sample_index[i], *g))
            .collect();
        Self {
            region: region.to_string(),
            lambda: outcome.lambda,
            score: 1.0 / outcome.lambda,
            reference_set: gamma
                .iter()
                .filter(|(_, g)| *g > REFERENCE_TOL)
                .map(|(i, _)| *i)
                .collect(),
            reference_size: sample_index.len(),
            gamma,
        }
    }

    pub fn reference_count(&self) -> usize {
        self.reference_set.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyResult {
    pub method: Method,
    pub rts: Rts,
    pub units: Vec<UnitEfficiency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<BandwidthVector>,
}

/// One row of a score CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub region: String,
    pub lambda: f64,
    pub score: f64,
    pub ref_count: usize,
}

impl EfficiencyResult {
    pub fn lambdas(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.lambda).collect()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.score).collect()
    }

    pub fn regions(&self) -> Vec<&str> {
        self.units.iter().map(|u| u.region.as_str()).collect()
    }

    pub fn records(&self) -> Vec<ScoreRecord> {
        self.units
            .iter()
            .map(|u| ScoreRecord {
                region: u.region.clone(),
                lambda: u.lambda,
                score: u.score,
                ref_count: u.reference_count(),
            })
            .collect()
    }

    /// `region,lambda,score,ref_count`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for rec in self.records() {
            w.serialize(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON; the full intensity vectors are included only when `with_gamma`.
    pub fn to_json(&self, with_gamma: bool) -> Result<String> {
        if with_gamma {
            return Ok(serde_json::to_string_pretty(self)?);
        }
        let mut copy = self.clone();
        for u in &mut copy.units {
            u.gamma.clear();
        }
        Ok(serde_json::to_string_pretty(&copy)?)
    }
}

pub fn read_scores_csv<R: Read>(source: R) -> Result<Vec<ScoreRecord>> {
    let mut reader = csv::Reader::from_reader(source);
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Solves one program per unit, each against the full sample.
pub fn dea_output_scores(sample: &FrontierSample, rts: Rts) -> Result<EfficiencyResult> {
    let all: Vec<usize> = (0..sample.len()).collect();
    let units = sample
        .units()
        .par_iter()
        .map(|u| {
            solve_output_lp(&u.x, &u.q, sample, rts)
                .map(|o| UnitEfficiency::from_outcome(&u.id, &o, &all))
                .map_err(|e| e.for_unit(&u.id))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EfficiencyResult {
        method: Method::Dea,
        rts,
        units,
        bandwidths: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> FrontierSample {
        FrontierSample::from_pairs(&[(1.0, 1.0), (2.0, 4.0), (4.0, 5.0)]).unwrap()
    }

    #[test]
    fn vrs_hull_vertex_is_efficient() {
        let o = solve_output_lp(&[4.0], &[5.0], &abc(), Rts::Vrs).unwrap();
        assert!((o.lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crs_best_ray() {
        let o = solve_output_lp(&[1.0], &[1.0], &abc(), Rts::Crs).unwrap();
        assert!((o.lambda - 2.0).abs() < 1e-12);
        assert_eq!(o.reference_set(), vec![1]);
    }

    #[test]
    fn vrs_external_target() {
        let o = solve_output_lp(&[2.0], &[2.0], &abc(), Rts::Vrs).unwrap();
        assert!((o.lambda - 2.0).abs() < 1e-12);
    }

    #[test]
    fn vrs_target_below_every_input_is_infeasible() {
        assert!(matches!(
            solve_output_lp(&[0.5], &[1.0], &abc(), Rts::Vrs),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn crs_zero_output_target_is_unbounded() {
        assert!(matches!(
            solve_output_lp(&[2.0], &[0.0], &abc(), Rts::Crs),
            Err(Error::Unbounded)
        ));
    }

    #[test]
    fn crs_scores_match_ratio_oracle() {
        let res = dea_output_scores(&abc(), Rts::Crs).unwrap();
        let expected = [0.5, 1.0, 0.625];
        for (u, e) in res.units.iter().zip(expected) {
            assert!((u.score - e).abs() < 1e-12, "{} vs {e}", u.score);
        }
    }

    #[test]
    fn single_unit_is_efficient() {
        let s = FrontierSample::from_pairs(&[(3.0, 7.0)]).unwrap();
        for rts in [Rts::Crs, Rts::Vrs] {
            let res = dea_output_scores(&s, rts).unwrap();
            assert!((res.units[0].score - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicates_leave_scores_unchanged() {
        let pairs = [(1.0, 1.0), (2.0, 4.0), (4.0, 5.0), (3.0, 2.0)];
        let doubled: Vec<_> = pairs.iter().chain(pairs.iter()).copied().collect();
        for rts in [Rts::Crs, Rts::Vrs] {
            let a = dea_output_scores(&FrontierSample::from_pairs(&pairs).unwrap(), rts).unwrap();
            let b = dea_output_scores(&FrontierSample::from_pairs(&doubled).unwrap(), rts).unwrap();
            for (i, u) in a.units.iter().enumerate() {
                assert!((u.lambda - b.units[i].lambda).abs() < 1e-12);
                assert!((u.lambda - b.units[i + 4].lambda).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn multi_input_multi_output() {
        // two inputs, two outputs; unit 2 is unit 0 scaled down in outputs
        let s = FrontierSample::new(
            None,
            vec![
                crate::data::DecisionUnit::new("a", vec![1.0, 2.0], vec![3.0, 1.0]),
                crate::data::DecisionUnit::new("b", vec![2.0, 1.0], vec![1.0, 3.0]),
                crate::data::DecisionUnit::new("c", vec![1.0, 2.0], vec![1.5, 0.5]),
            ],
        )
        .unwrap();
        let res = dea_output_scores(&s, Rts::Vrs).unwrap();
        assert!((res.units[2].lambda - 2.0).abs() < 1e-12);
        assert!((res.units[0].lambda - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let res = dea_output_scores(&abc(), Rts::Crs).unwrap();
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("region,lambda,score,ref_count\n"));
        assert_eq!(read_scores_csv(buf.as_slice()).unwrap(), res.records());
    }

    #[test]
    fn json_gamma_behind_flag() {
        let res = dea_output_scores(&abc(), Rts::Crs).unwrap();
        assert!(!res.to_json(false).unwrap().contains("gamma"));
        assert!(res.to_json(true).unwrap().contains("gamma"));
        let back: EfficiencyResult = serde_json::from_str(&res.to_json(true).unwrap()).unwrap();
        assert_eq!(back, res);
    }
}
