//! Spatial weight matrices, spatial lags and Moran's I.
//!
//! All constructors return row-standardized matrices with a zero diagonal.
//! Rows are stored sparsely with strictly increasing neighbor indices.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// How a weight matrix was built.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    Knn { k: usize },
    Contiguity,
    InverseDistance { cutoff: Option<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
    kind: WeightKind,
    standardized: bool,
}

/// The JSON header stored next to a triplet CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsMetadata {
    pub n: usize,
    #[serde(flatten)]
    pub kind: WeightKind,
    pub standardized: bool,
}

impl SpatialWeights {
    /// Builds a matrix from raw rows, checking the structural invariants. Rows
    /// are standardized when `standardize` is set.
    pub fn from_rows(
        rows: Vec<Vec<(usize, f64)>>,
        kind: WeightKind,
        standardize: bool,
    ) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(j, w) in row {
                if j >= n {
                    return Err(Error::IndexOutOfRange { index: j, n });
                }
                if j == i {
                    return Err(Error::SelfLoop(i));
                }
                if prev.is_some_and(|p| p >= j) {
                    return Err(Error::InvalidArgument(format!(
                        "row {i}: neighbor indices must be strictly increasing"
                    )));
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "row {i}: weight {w} must be finite and nonnegative"
                    )));
                }
                prev = Some(j);
            }
        }
        let mut out = Self {
            n,
            rows,
            kind,
            standardized: false,
        };
        if standardize {
            out.standardize();
        }
        Ok(out)
    }

    fn standardize(&mut self) {
        for row in &mut self.rows {
            let total: f64 = row.iter().map(|(_, w)| w).sum();
            if total > 0.0 {
                for (_, w) in row.iter_mut() {
                    *w /= total;
                }
            }
        }
        self.standardized = true;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.rows[i].iter().map(|&(j, _)| j).collect()
    }

    /// `S0`, the sum of all weights.
    pub fn total_weight(&self) -> f64 {
        self.rows.iter().flatten().map(|(_, w)| w).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[i][j] = w;
            }
        }
        m
    }

    pub fn metadata(&self) -> WeightsMetadata {
        WeightsMetadata {
            n: self.n,
            kind: self.kind,
            standardized: self.standardized,
        }
    }

    /// Writes `i,j,w` triplets, one per nonzero entry, row-major.
    pub fn write_triplets<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "w"])?;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                w.serialize((i, j, v))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads triplets written by [`write_triplets`](Self::write_triplets).
    /// Weights are taken as stored; no re-standardization happens.
    pub fn read_triplets<R: Read>(source: R, meta: &WeightsMetadata) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(source);
        let mut rows = vec![Vec::new(); meta.n];
        for rec in reader.deserialize() {
            let (i, j, w): (usize, usize, f64) = rec?;
            if i >= meta.n {
                return Err(Error::IndexOutOfRange { index: i, n: meta.n });
            }
            rows[i].push((j, w));
        }
        let out = Self::from_rows(rows, meta.kind, false)?;
        if meta.standardized {
            for (i, row) in out.rows.iter().enumerate() {
                let s: f64 = row.iter().map(|(_, w)| w).sum();
                if !row.is_empty() && (s - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "row {i} sums to {s}, expected 1"
                    )));
                }
            }
        }
        Ok(Self {
            standardized: meta.standardized,
            ..out
        })
    }
}

fn check_coords(coords: &[[f64; 2]]) -> Result<()> {
    if let Some(i) = coords.iter().position(|c| !c.iter().all(|v| v.is_finite())) {
        return Err(Error::DegenerateCoordinates(format!(
            "non-finite coordinate for unit {i}"
        )));
    }
    Ok(())
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// k-nearest-neighbor weights (`w_ij = 1` for the `k` closest `j != i`),
/// row-standardized. Distance ties go to the lower index.
pub fn knn_weights(coords: &[[f64; 2]], k: usize) -> Result<SpatialWeights> {
    let n = coords.len();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    if n <= k {
        return Err(Error::TooFewUnits {
            n,
            need: format!("{k} nearest neighbors"),
        });
    }
    check_coords(coords)?;

    let rows = (0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (distance(coords[i], coords[j]), j))
                .collect();
            if let Some(&(_, j)) = others.iter().find(|(d, _)| *d == 0.0) {
                return Err(Error::DegenerateCoordinates(format!(
                    "units {i} and {j} share coordinates"
                )));
            }
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut nn: Vec<usize> = others[..k].iter().map(|&(_, j)| j).collect();
            nn.sort_unstable();
            Ok(nn.into_iter().map(|j| (j, 1.0)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    SpatialWeights::from_rows(rows, WeightKind::Knn { k }, true)
}

/// First-order contiguity from an undirected adjacency list, row-standardized.
/// Units without neighbors keep an empty row.
pub fn contiguity_weights(adjacency: &[(usize, usize)], n: usize) -> Result<SpatialWeights> {
    let mut sets = vec![BTreeSet::new(); n];
    for &(a, b) in adjacency {
        for idx in [a, b] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, n });
            }
        }
        if a == b {
            return Err(Error::SelfLoop(a));
        }
        sets[a].insert(b);
        sets[b].insert(a);
    }
    let rows = sets
        .into_iter()
        .map(|s| s.into_iter().map(|j| (j, 1.0)).collect())
        .collect();
    SpatialWeights::from_rows(rows, WeightKind::Contiguity, true)
}

/// Inverse-distance weights `1 / d_ij` for pairs within `cutoff` (all pairs
/// when `None`), row-standardized.
pub fn inverse_distance_weights(coords: &[[f64; 2]], cutoff: Option<f64>) -> Result<SpatialWeights> {
    let n = coords.len();
    if n < 2 {
        return Err(Error::TooFewUnits {
            n,
            need: "inverse-distance weights".into(),
        });
    }
    if let Some(c) = cutoff {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidArgument(format!("cutoff {c} must be positive")));
        }
    }
    check_coords(coords)?;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = Vec::new();
        for j in (0..n).filter(|&j| j != i) {
            let d = distance(coords[i], coords[j]);
            if d == 0.0 {
                return Err(Error::CoincidentPoints(i.min(j), i.max(j)));
            }
            if cutoff.is_none_or(|c| d <= c) {
                row.push((j, 1.0 / d));
            }
        }
        if row.is_empty() {
            return Err(Error::EmptyRow(i));
        }
        rows.push(row);
    }
    SpatialWeights::from_rows(rows, WeightKind::InverseDistance { cutoff }, true)
}

/// `lag_i = sum_j w_ij v_j`.
pub fn spatial_lag(w: &SpatialWeights, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != w.n {
        return Err(Error::DimensionMismatch {
            expected: w.n,
            got: v.len(),
        });
    }
    Ok(w.rows
        .iter()
        .map(|row| row.iter().map(|&(j, wij)| wij * v[j]).sum())
        .collect())
}

/// Moran scatterplot quadrant: own deviation first, lagged deviation second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrant {
    HH,
    HL,
    LH,
    LL,
}

impl Quadrant {
    /// Zero deviations count as high.
    pub fn classify(deviation: f64, lagged: f64) -> Self {
        match (deviation >= 0.0, lagged >= 0.0) {
            (true, true) => Quadrant::HH,
            (true, false) => Quadrant::HL,
            (false, true) => Quadrant::LH,
            (false, false) => Quadrant::LL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::HH => "HH",
            Quadrant::HL => "HL",
            Quadrant::LH => "LH",
            Quadrant::LL => "LL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
    Less,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranResult {
    pub statistic: f64,
    /// `-1 / (n - 1)`
    pub expected: f64,
    /// Permutation pseudo p-value; the authoritative one.
    pub p_value: f64,
    pub permutations: usize,
    pub seed: u64,
    pub alternative: Alternative,
    /// Variance under the normality assumption.
    pub variance_normal: f64,
    pub z_normal: f64,
    pub p_normal: f64,
    /// Mean-centered values, for the scatterplot x axis.
    pub deviations: Vec<f64>,
    /// Spatial lag of the deviations, for the scatterplot y axis.
    pub lagged_deviations: Vec<f64>,
    pub quadrants: Vec<Quadrant>,
}

fn cross_product(w: &SpatialWeights, z: &[f64]) -> f64 {
    w.rows
        .iter()
        .zip(z)
        .map(|(row, zi)| zi * row.iter().map(|&(j, wij)| wij * z[j]).sum::<f64>())
        .sum()
}

/// Moran's I with a two-sided permutation test.
pub fn morans_i(w: &SpatialWeights, v: &[f64], permutations: usize, seed: u64) -> Result<MoranResult> {
    morans_i_with(w, v, permutations, seed, Alternative::TwoSided)
}

/// Moran's I, `(n / S0) z'Wz / z'z`, with a permutation pseudo p-value
/// `(1 + #extreme) / (1 + permutations)`. Permutation `b` draws from its own
/// ChaCha stream `(seed, b)`, so results do not depend on thread scheduling.
pub fn morans_i_with(
    w: &SpatialWeights,
    v: &[f64],
    permutations: usize,
    seed: u64,
    alternative: Alternative,
) -> Result<MoranResult> {
    let n = w.n;
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    if permutations < 99 {
        return Err(Error::InvalidArgument(format!(
            "at least 99 permutations required, got {permutations}"
        )));
    }
    if n < 3 {
        return Err(Error::TooFewUnits {
            n,
            need: "Moran's I".into(),
        });
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let z: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let zz: f64 = z.iter().map(|x| x * x).sum();
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if zz <= (scale * 1e-14).powi(2) * n as f64 {
        return Err(Error::ConstantVector);
    }
    let s0 = w.total_weight();
    if s0 <= 0.0 {
        return Err(Error::InvalidArgument("weight matrix has no links".into()));
    }
    let factor = n as f64 / s0;
    let statistic = factor * cross_product(w, &z) / zz;

    let draws: Vec<f64> = (0..permutations)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut zp = z.clone();
            zp.shuffle(&mut rng);
            factor * cross_product(w, &zp) / zz
        })
        .collect();
    let extreme = draws
        .iter()
        .filter(|&&i| match alternative {
            Alternative::TwoSided => i.abs() >= statistic.abs(),
            Alternative::Greater => i >= statistic,
            Alternative::Less => i <= statistic,
        })
        .count();
    let p_value = (1 + extreme) as f64 / (1 + permutations) as f64;

    let nf = n as f64;
    let expected = -1.0 / (nf - 1.0);
    let dense = w.to_dense();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for i in 0..n {
        let mut row_sum = 0.0;
        let mut col_sum = 0.0;
        for j in 0..n {
            s1 += (dense[i][j] + dense[j][i]).powi(2);
            row_sum += dense[i][j];
            col_sum += dense[j][i];
        }
        s2 += (row_sum + col_sum).powi(2);
    }
    s1 /= 2.0;
    let variance_normal = (nf * nf * s1 - nf * s2 + 3.0 * s0 * s0) / ((nf * nf - 1.0) * s0 * s0)
        - expected * expected;
    let z_normal = (statistic - expected) / variance_normal.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p_normal = match alternative {
        Alternative::TwoSided => 2.0 * (1.0 - std_normal.cdf(z_normal.abs())),
        Alternative::Greater => 1.0 - std_normal.cdf(z_normal),
        Alternative::Less => std_normal.cdf(z_normal),
    };

    let lagged = spatial_lag(w, &z)?;
    let quadrants = z
        .iter()
        .zip(&lagged)
        .map(|(&a, &b)| Quadrant::classify(a, b))
        .collect();

    Ok(MoranResult {
        statistic,
        expected,
        p_value,
        permutations,
        seed,
        alternative,
        variance_normal,
        z_normal,
        p_normal,
        deviations: z,
        lagged_deviations: lagged,
        quadrants,
    })
}

/// Reads an adjacency CSV of region-id pairs (`from,to` columns) and maps the
/// ids onto positions in `ids`.
pub fn load_adjacency<R: Read>(source: R, ids: &[&str]) -> Result<Vec<(usize, usize)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let (cf, ct) = (col("from")?, col("to")?);
    let lookup = |id: &str| {
        ids.iter()
            .position(|r| *r == id)
            .ok_or_else(|| Error::UnknownRegion(id.to_string()))
    };
    let mut pairs = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        pairs.push((
            lookup(rec.get(cf).unwrap_or(""))?,
            lookup(rec.get(ct).unwrap_or(""))?,
        ));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle4() -> SpatialWeights {
        contiguity_weights(&[(0, 1), (1, 2), (2, 3), (3, 0)], 4).unwrap()
    }

    #[test]
    fn knn_on_a_line() {
        let w = knn_weights(&[[0.0, 0.0], [1.0, 0.0], [10.0, 0.0]], 1).unwrap();
        assert_eq!(w.neighbors(0), vec![1]);
        assert_eq!(w.neighbors(1), vec![0]);
        assert_eq!(w.neighbors(2), vec![1]);
    }

    #[test]
    fn knn_needs_more_units_than_k() {
        let c = [[0.0, 0.0], [1.0, 0.0]];
        assert!(matches!(knn_weights(&c, 2), Err(Error::TooFewUnits { .. })));
    }

    #[test]
    fn knn_square_excludes_diagonal() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let w = knn_weights(&sq, 2).unwrap();
        assert_eq!(w.neighbors(0), vec![1, 3]);
        assert_eq!(w.neighbors(1), vec![0, 2]);
        assert_eq!(w.neighbors(2), vec![1, 3]);
        assert_eq!(w.neighbors(3), vec![0, 2]);
        assert!(w.rows().iter().flatten().all(|&(_, v)| v == 0.5));
    }

    #[test]
    fn knn_ties_prefer_lower_index() {
        // unit 1 is equidistant from 0 and 2
        let w = knn_weights(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], 1).unwrap();
        assert_eq!(w.neighbors(1), vec![0]);
    }

    #[test]
    fn knn_rejects_shared_coordinates() {
        let c = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]];
        assert!(matches!(knn_weights(&c, 1), Err(Error::DegenerateCoordinates(_))));
    }

    #[test]
    fn contiguity_examples() {
        let w = contiguity_weights(&[(0, 1)], 2).unwrap();
        assert_eq!(w.row(0), &[(1, 1.0)]);
        assert_eq!(w.row(1), &[(0, 1.0)]);
        assert!(matches!(contiguity_weights(&[(2, 2)], 3), Err(Error::SelfLoop(2))));
        assert!(matches!(
            contiguity_weights(&[(0, 5)], 3),
            Err(Error::IndexOutOfRange { index: 5, n: 3 })
        ));
        for row in cycle4().rows() {
            assert_eq!(row.iter().map(|r| r.1).collect::<Vec<_>>(), vec![0.5, 0.5]);
        }
    }

    #[test]
    fn inverse_distance_examples() {
        let w = inverse_distance_weights(&[[0.0, 0.0], [2.0, 0.0]], None).unwrap();
        assert_eq!(w.row(0), &[(1, 1.0)]);
        let w = inverse_distance_weights(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], None).unwrap();
        assert_eq!(w.row(1), &[(0, 0.5), (2, 0.5)]);
        assert!(matches!(
            inverse_distance_weights(&[[0.0, 0.0], [0.0, 0.0]], None),
            Err(Error::CoincidentPoints(0, 1))
        ));
        assert!(matches!(
            inverse_distance_weights(&[[0.0, 0.0], [1.0, 0.0], [9.0, 0.0]], Some(2.0)),
            Err(Error::EmptyRow(2))
        ));
    }

    #[test]
    fn lag_examples() {
        let w = contiguity_weights(&[(0, 1)], 2).unwrap();
        assert_eq!(spatial_lag(&w, &[3.0, 7.0]).unwrap(), vec![7.0, 3.0]);
        assert_eq!(spatial_lag(&cycle4(), &[2.5; 4]).unwrap(), vec![2.5; 4]);
        assert_eq!(
            spatial_lag(&cycle4(), &[1.0, -1.0, 1.0, -1.0]).unwrap(),
            vec![-1.0, 1.0, -1.0, 1.0]
        );
        assert!(matches!(
            spatial_lag(&cycle4(), &[1.0]),
            Err(Error::DimensionMismatch { expected: 4, got: 1 })
        ));
    }

    #[test]
    fn checkerboard_moran_is_minus_one() {
        let r = morans_i(&cycle4(), &[1.0, -1.0, 1.0, -1.0], 99, 1).unwrap();
        assert!((r.statistic + 1.0).abs() < 1e-12);
        assert!((r.expected + 1.0 / 3.0).abs() < 1e-15);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
        assert_eq!(r.quadrants, vec![Quadrant::HL, Quadrant::LH, Quadrant::HL, Quadrant::LH]);
    }

    #[test]
    fn moran_rejects_constant_and_few_permutations() {
        assert!(matches!(morans_i(&cycle4(), &[2.0; 4], 99, 0), Err(Error::ConstantVector)));
        assert!(matches!(
            morans_i(&cycle4(), &[1.0, 2.0, 3.0, 4.0], 10, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn permutation_p_is_reproducible() {
        let coords: Vec<[f64; 2]> = (0..15).map(|i| [i as f64, (i * i % 7) as f64]).collect();
        let w = knn_weights(&coords, 3).unwrap();
        let v: Vec<f64> = (0..15).map(|i| (i as f64 * 0.7).sin()).collect();
        let a = morans_i(&w, &v, 199, 42).unwrap();
        let b = morans_i(&w, &v, 199, 42).unwrap();
        assert_eq!(a.p_value.to_bits(), b.p_value.to_bits());
        assert_eq!(a, b);
    }

    #[test]
    fn triplets_round_trip() {
        let w = knn_weights(&[[0.0, 0.0], [1.0, 0.3], [2.5, 0.0], [0.2, 3.0]], 2).unwrap();
        let mut buf = Vec::new();
        w.write_triplets(&mut buf).unwrap();
        let meta: WeightsMetadata =
            serde_json::from_str(&serde_json::to_string(&w.metadata()).unwrap()).unwrap();
        let back = SpatialWeights::read_triplets(buf.as_slice(), &meta).unwrap();
        assert_eq!(w, back);
    }

    #[test]
    fn adjacency_by_region_id() {
        let text = "from,to\nA,B\nB,C\n";
        let pairs = load_adjacency(text.as_bytes(), &["A", "B", "C"]).unwrap();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        assert!(matches!(
            load_adjacency("from,to\nA,Z\n".as_bytes(), &["A"]),
            Err(Error::UnknownRegion(_))
        ));
    }
}
