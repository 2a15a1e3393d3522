//! End-to-end analysis driven by a [`RunConfig`]: ingest, weights, DEA,
//! SpDEA and the diagnostics, written as one directory of CSV/JSON files per
//! year.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conditional::{lscv_bandwidth, spatial_conditioning, spdea, BandwidthVector, ConditioningSet};
use crate::data::{
    build_capital_stock, derive_ratios, load_benchmarks, load_coordinates, load_panel, FrontierSample,
    PanelDataset, PanelSchema, PimConfig,
};
use crate::dea::{dea_output_scores, read_scores_csv, EfficiencyResult, Rts};
use crate::distribution::{
    correlations, describe, kde, mode_count_detail, sigma_convergence, BandwidthRule, Correlations,
    ModeTestResult, ScoreSummary, SigmaConvergence,
};
use crate::effects::{
    cv_regression_bandwidth, efficiency_ratios, evaluation_grid, partial_regression, significance_test,
    PartialRegression, RatioSeries, SignificanceEntry, SignificanceReport,
};
use crate::error::{Error, Result};
use crate::oracle::{self, OracleReport};
use crate::weights::{
    contiguity_weights, inverse_distance_weights, knn_weights, load_adjacency, morans_i, MoranResult, Quadrant,
    SpatialWeights,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WeightSpec {
    #[default]
    Knn,
    Contiguity,
    Invdist,
}

impl FromStr for WeightSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(WeightSpec::Knn),
            "contiguity" => Ok(WeightSpec::Contiguity),
            "invdist" => Ok(WeightSpec::Invdist),
            other => Err(Error::Config(format!("unknown weights `{other}`"))),
        }
    }
}

/// How SpDEA bandwidths are chosen.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BandwidthMode {
    #[default]
    Lscv,
    RuleOfThumb,
    User(Vec<f64>),
}

impl FromStr for BandwidthMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lscv" => Ok(BandwidthMode::Lscv),
            "rot" => Ok(BandwidthMode::RuleOfThumb),
            list => list
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad bandwidth `{v}`")))
                })
                .collect::<Result<Vec<_>>>()
                .map(BandwidthMode::User),
        }
    }
}

impl TryFrom<String> for BandwidthMode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BandwidthMode> for String {
    fn from(m: BandwidthMode) -> String {
        m.to_string()
    }
}

impl fmt::Display for BandwidthMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandwidthMode::Lscv => f.write_str("lscv"),
            BandwidthMode::RuleOfThumb => f.write_str("rot"),
            BandwidthMode::User(h) => {
                let parts: Vec<String> = h.iter().map(|v| v.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// Everything needed to reproduce an analysis. Serialized verbatim into the
/// run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Panel CSV, or a dataset JSON written by `ingest`.
    pub panel: Option<PathBuf>,
    pub coords: Option<PathBuf>,
    pub adjacency: Option<PathBuf>,
    /// National capital stocks in the benchmark year (`country,capital`).
    pub benchmarks: Option<PathBuf>,
    pub schema: PanelSchema,
    /// Years to analyze; empty means every year with capital stocks.
    pub years: Vec<i32>,
    pub weights: WeightSpec,
    pub k: usize,
    pub cutoff: Option<f64>,
    pub rts: Rts,
    pub bandwidth: BandwidthMode,
    pub seed: u64,
    pub sig_reps: usize,
    pub mode_reps: usize,
    pub perms: usize,
    /// Cap for sequential mode counting.
    pub max_modes: usize,
    pub alpha: f64,
    /// Build capital stocks from investment with the perpetual inventory method.
    pub pim: bool,
    pub delta: f64,
    /// Accumulation window `[first, benchmark]` for the initial stock.
    pub pim_window: [i32; 2],
    /// Score file to verify in `oracle`.
    pub scores: Option<PathBuf>,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            panel: None,
            coords: None,
            adjacency: None,
            benchmarks: None,
            schema: PanelSchema::default(),
            years: Vec::new(),
            weights: WeightSpec::Knn,
            k: 5,
            cutoff: None,
            rts: Rts::Crs,
            bandwidth: BandwidthMode::Lscv,
            seed: 1,
            sig_reps: 1000,
            mode_reps: 5000,
            perms: 999,
            max_modes: 4,
            alpha: 0.05,
            pim: false,
            delta: 0.05,
            pim_window: [1990, 2000],
            scores: None,
            out: PathBuf::from("spdea-out"),
            format: OutputFormat::Csv,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let need = |what: &str, got: usize, min: usize| {
            if got < min {
                Err(Error::Config(format!("{what} must be at least {min}, got {got}")))
            } else {
                Ok(())
            }
        };
        need("sig_reps", self.sig_reps, 99)?;
        need("mode_reps", self.mode_reps, 499)?;
        need("perms", self.perms, 99)?;
        need("k", self.k, 1)?;
        need("max_modes", self.max_modes, 1)?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if let Some(c) = self.cutoff {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config(format!("cutoff must be positive, got {c}")));
            }
        }
        for path in [&self.panel, &self.coords, &self.adjacency, &self.benchmarks, &self.scores]
            .into_iter()
            .flatten()
        {
            if !path.is_file() {
                return Err(Error::Config(format!("file not found: {}", path.display())));
            }
        }
        if self.panel.is_none() {
            return Err(Error::Config("no panel given".into()));
        }
        Ok(())
    }

    fn pim_config(&self) -> Result<PimConfig> {
        let mut cfg = PimConfig::new(self.delta, self.pim_window[0], self.pim_window[1]);
        if let Some(path) = &self.benchmarks {
            cfg.benchmarks = load_benchmarks(File::open(path)?)?;
        }
        Ok(cfg)
    }
}

/// Reads the panel (CSV or dataset JSON), attaches coordinates and, when
/// requested, builds capital stocks.
pub fn load_dataset(cfg: &RunConfig) -> Result<PanelDataset> {
    let path = cfg.panel.as_ref().ok_or_else(|| Error::Config("no panel given".into()))?;
    let mut dataset = if path.extension().is_some_and(|e| e == "json") {
        PanelDataset::from_json(&fs::read_to_string(path)?)?
    } else {
        load_panel(File::open(path)?, &cfg.schema)?
    };
    if let Some(coords) = &cfg.coords {
        let coords = load_coordinates(File::open(coords)?, &cfg.schema)?;
        dataset.attach_coordinates(&coords)?;
    }
    if cfg.pim {
        if !dataset.has_investment() {
            let first = dataset.regions().first().map(|r| r.id.clone()).unwrap_or_default();
            return Err(Error::MissingInvestment {
                region: first,
                year: dataset.first_year(),
            });
        }
        dataset = build_capital_stock(&dataset, &cfg.pim_config()?)?;
    }
    Ok(dataset)
}

/// The requested years, or every year in which all regions have capital.
pub fn analysis_years(cfg: &RunConfig, dataset: &PanelDataset) -> Result<Vec<i32>> {
    if !cfg.years.is_empty() {
        for &y in &cfg.years {
            if y < dataset.first_year() || y > dataset.last_year() {
                return Err(Error::YearOutOfRange(y));
            }
        }
        return Ok(cfg.years.clone());
    }
    let years: Vec<i32> = dataset
        .years()
        .filter(|&y| {
            (0..dataset.len()).all(|i| dataset.observation(i, y).is_some_and(|o| o.capital.is_some()))
        })
        .collect();
    if years.is_empty() {
        return Err(Error::MissingCapital {
            region: dataset.regions().first().map(|r| r.id.clone()).unwrap_or_default(),
            year: dataset.first_year(),
        });
    }
    Ok(years)
}

pub fn build_weights(cfg: &RunConfig, dataset: &PanelDataset) -> Result<SpatialWeights> {
    match cfg.weights {
        WeightSpec::Knn => knn_weights(&dataset.coordinates()?, cfg.k),
        WeightSpec::Invdist => inverse_distance_weights(&dataset.coordinates()?, cfg.cutoff),
        WeightSpec::Contiguity => {
            let path = cfg
                .adjacency
                .as_ref()
                .ok_or_else(|| Error::Config("contiguity weights need --adjacency".into()))?;
            let ids: Vec<&str> = dataset.regions().iter().map(|r| r.id.as_str()).collect();
            let pairs = load_adjacency(File::open(path)?, &ids)?;
            contiguity_weights(&pairs, dataset.len())
        }
    }
}

fn bandwidths(cfg: &RunConfig, sample: &FrontierSample, z: &ConditioningSet) -> Result<BandwidthVector> {
    match &cfg.bandwidth {
        BandwidthMode::Lscv => lscv_bandwidth(sample, z),
        BandwidthMode::RuleOfThumb => BandwidthVector::rule_of_thumb(z),
        BandwidthMode::User(h) => {
            if h.len() != z.k() {
                return Err(Error::Config(format!(
                    "{} bandwidths given for {} conditioning variables",
                    h.len(),
                    z.k()
                )));
            }
            BandwidthVector::user(h.clone())
        }
    }
}

/// DEA and SpDEA for one year.
#[derive(Debug, Clone)]
pub struct YearEstimates {
    pub year: i32,
    pub sample: FrontierSample,
    pub dea: EfficiencyResult,
    pub spdea: EfficiencyResult,
    pub z: ConditioningSet,
}

impl YearEstimates {
    pub fn bandwidths(&self) -> &BandwidthVector {
        self.spdea.bandwidths.as_ref().expect("conditional results carry bandwidths")
    }
}

pub fn estimate_year(cfg: &RunConfig, dataset: &PanelDataset, w: &SpatialWeights, year: i32) -> Result<YearEstimates> {
    let sample = derive_ratios(dataset, year)?;
    let dea = dea_output_scores(&sample, cfg.rts)?;
    let z = spatial_conditioning(&sample, w)?;
    let h = bandwidths(cfg, &sample, &z)?;
    let (spdea, z) = spdea(&sample, w, cfg.rts, Some(h))?;
    Ok(YearEstimates {
        year,
        sample,
        dea,
        spdea,
        z,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub year: i32,
    pub n: usize,
    pub dea: ScoreSummary,
    pub spdea: ScoreSummary,
    /// Percentage change of the mean SpDEA score over the mean DEA score.
    pub mean_uplift_percent: f64,
    /// Between the DEA and SpDEA score vectors; absent when either is constant.
    pub correlations: Option<Correlations>,
}

pub fn summarize(est: &YearEstimates) -> Result<Summary> {
    let d = est.dea.scores();
    let s = est.spdea.scores();
    let dea = describe(&d)?;
    let spdea = describe(&s)?;
    let correlations = match correlations(&d, &s) {
        Ok(c) => Some(c),
        Err(Error::ConstantVector) => None,
        Err(e) => return Err(e),
    };
    Ok(Summary {
        year: est.year,
        n: d.len(),
        dea,
        spdea,
        mean_uplift_percent: (spdea.mean / dea.mean - 1.0) * 100.0,
        correlations,
    })
}

/// Moran statistics without the per-unit vectors, which go to the quadrant CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoranSummary {
    pub statistic: f64,
    pub expected: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub seed: u64,
    pub z_normal: f64,
    pub p_normal: f64,
    pub quadrant_counts: BTreeMap<String, usize>,
}

impl From<&MoranResult> for MoranSummary {
    fn from(m: &MoranResult) -> Self {
        let mut quadrant_counts = BTreeMap::new();
        for q in [Quadrant::HH, Quadrant::HL, Quadrant::LH, Quadrant::LL] {
            quadrant_counts.insert(q.as_str().to_string(), m.quadrants.iter().filter(|&&x| x == q).count());
        }
        Self {
            statistic: m.statistic,
            expected: m.expected,
            p_value: m.p_value,
            permutations: m.permutations,
            seed: m.seed,
            z_normal: m.z_normal,
            p_normal: m.p_normal,
            quadrant_counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectsReport {
    pub year: i32,
    pub ratio_mean: f64,
    pub ratio_min: f64,
    /// Cross-validated local-linear bandwidth per conditioning variable.
    pub regression_bandwidths: Vec<f64>,
    pub significance: SignificanceReport,
    pub partial_files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    /// Excess-mass statistic of the unimodality test.
    pub em: f64,
    pub p_value: f64,
    pub modes: usize,
    pub locations: Vec<f64>,
    pub tests: Vec<ModeTestResult>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Collects the relative paths of written files for the manifest.
struct Outputs {
    root: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(rel.to_string());
        Ok(p)
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let p = self.path(rel)?;
        write_json(&p, value)
    }
}

fn write_scores(out: &mut Outputs, dir: &str, name: &str, result: &EfficiencyResult, format: OutputFormat) -> Result<()> {
    match format {
        OutputFormat::Csv => result.write_csv(create(&out.path(&format!("{dir}/{name}.csv"))?)?),
        OutputFormat::Json => {
            let p = out.path(&format!("{dir}/{name}.json"))?;
            fs::write(p, result.to_json(true)? + "\n")?;
            Ok(())
        }
    }
}

fn write_spdea_extras(out: &mut Outputs, dir: &str, est: &YearEstimates) -> Result<()> {
    out.json(&format!("{dir}/bandwidths.json"), est.bandwidths())?;
    let regions = est.sample.ids();
    est.z.write_csv(&regions, create(&out.path(&format!("{dir}/conditioning.csv"))?)?)
}

fn moran_outputs(cfg: &RunConfig, out: &mut Outputs, dir: &str, est: &YearEstimates, w: &SpatialWeights) -> Result<()> {
    let dea = morans_i(w, &est.dea.scores(), cfg.perms, cfg.seed)?;
    let sp = morans_i(w, &est.spdea.scores(), cfg.perms, cfg.seed)?;
    let report = BTreeMap::from([("dea", MoranSummary::from(&dea)), ("spdea", MoranSummary::from(&sp))]);
    out.json(&format!("{dir}/moran.json"), &report)?;
    let mut wr = csv::Writer::from_writer(create(&out.path(&format!("{dir}/quadrants.csv"))?)?);
    wr.write_record([
        "region",
        "dea_deviation",
        "dea_lag",
        "dea_quadrant",
        "spdea_deviation",
        "spdea_lag",
        "spdea_quadrant",
    ])?;
    for (i, id) in est.sample.ids().iter().enumerate() {
        wr.write_record([
            id.to_string(),
            dea.deviations[i].to_string(),
            dea.lagged_deviations[i].to_string(),
            dea.quadrants[i].as_str().to_string(),
            sp.deviations[i].to_string(),
            sp.lagged_deviations[i].to_string(),
            sp.quadrants[i].as_str().to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn write_ratios(path: &Path, ratios: &RatioSeries) -> Result<()> {
    let mut wr = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["region".to_string(), "ratio".to_string()];
    header.extend(ratios.names.iter().cloned());
    wr.write_record(&header)?;
    for u in &ratios.units {
        let mut rec = vec![u.region.clone(), u.ratio.to_string()];
        rec.extend(u.z.iter().map(|v| v.to_string()));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

fn effects_outputs(cfg: &RunConfig, out: &mut Outputs, dir: &str, est: &YearEstimates) -> Result<EffectsReport> {
    let ratios = efficiency_ratios(&est.spdea, &est.dea, &est.z)?;
    write_ratios(&out.path(&format!("{dir}/ratios.csv"))?, &ratios)?;
    let r = ratios.ratios();
    let z = &est.z;
    let regression_bandwidths = (0..z.k())
        .map(|c| cv_regression_bandwidth(z.column(c), &r).map(|b| b.bandwidth))
        .collect::<Result<Vec<_>>>()?;
    let mut partial_files = Vec::new();
    for c in 0..z.k() {
        let grid = evaluation_grid(z.column(c))?;
        let fit = widened_partial_regression(z, &r, c, &regression_bandwidths, &grid)?;
        let rel = format!("{dir}/partial_{}.csv", z.names[c]);
        fit.write_csv(create(&out.path(&rel)?)?)?;
        partial_files.push(rel);
    }
    let entries = (0..z.k())
        .map(|c| significance_test(z, &r, c, cfg.sig_reps, cfg.seed))
        .collect::<Result<Vec<SignificanceEntry>>>()?;
    let report = EffectsReport {
        year: est.year,
        ratio_mean: r.iter().sum::<f64>() / r.len() as f64,
        ratio_min: r.iter().copied().fold(f64::INFINITY, f64::min),
        regression_bandwidths,
        significance: SignificanceReport::new(entries),
        partial_files,
    };
    out.json(&format!("{dir}/effects.json"), &report)?;
    Ok(report)
}

/// Partial regression, widening all bandwidths by 25% steps while some grid
/// point has too little data nearby. The bandwidths used are recorded in the
/// returned fit.
fn widened_partial_regression(
    z: &ConditioningSet,
    r: &[f64],
    variable: usize,
    h: &[f64],
    grid: &[f64],
) -> Result<PartialRegression> {
    let mut h = h.to_vec();
    for _ in 0..40 {
        match partial_regression(z, r, variable, &h, grid) {
            Err(Error::SingularFit(_)) => h.iter_mut().for_each(|v| *v *= 1.25),
            other => return other,
        }
    }
    partial_regression(z, r, variable, &h, grid)
}

fn modes_for(cfg: &RunConfig, scores: &[f64]) -> Result<ModeSummary> {
    let (modes, tests) = mode_count_detail(scores, cfg.alpha, cfg.max_modes, cfg.mode_reps, cfg.seed)?;
    let first = tests.first();
    let locations = tests.last().map(|t| t.locations.clone()).unwrap_or_default();
    Ok(ModeSummary {
        em: first.map_or(0.0, |t| t.statistic),
        p_value: first.map_or(1.0, |t| t.p_value),
        modes,
        locations,
        tests,
    })
}

fn modes_outputs(cfg: &RunConfig, out: &mut Outputs, dir: &str, est: &YearEstimates) -> Result<()> {
    let report = BTreeMap::from([
        ("dea", modes_for(cfg, &est.dea.scores())?),
        ("spdea", modes_for(cfg, &est.spdea.scores())?),
    ]);
    out.json(&format!("{dir}/modes.json"), &report)?;
    for (name, scores) in [("dea", est.dea.scores()), ("spdea", est.spdea.scores())] {
        match kde(&scores, BandwidthRule::Silverman) {
            Ok(grid) => grid.write_csv(create(&out.path(&format!("{dir}/kde_{name}.csv"))?)?)?,
            // every unit efficient: no density to draw
            Err(Error::ConstantVector) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Which outputs a command produces for each year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Ingest,
    Run,
    Dea,
    Spdea,
    Moran,
    Effects,
    Modes,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum YearStatus {
    Ok {
        n: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        bandwidths: Option<Vec<f64>>,
    },
    Error {
        error: String,
        input_error: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub years: BTreeMap<i32, YearStatus>,
    pub files: Vec<String>,
    /// Wall-clock time of the run, the only non-reproducible field.
    pub clock: Clock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clock {
    pub unix_seconds: u64,
}

impl Clock {
    fn now() -> Self {
        let unix_seconds = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self { unix_seconds }
    }
}

/// Outcome of a per-year command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn failed_years(&self) -> Vec<i32> {
        self.manifest
            .years
            .iter()
            .filter(|(_, s)| matches!(s, YearStatus::Error { .. }))
            .map(|(y, _)| *y)
            .collect()
    }
}

fn year_outputs(
    command: Command,
    cfg: &RunConfig,
    out: &mut Outputs,
    est: &YearEstimates,
    w: &SpatialWeights,
) -> Result<()> {
    let dir = est.year.to_string();
    let dir = dir.as_str();
    let scores_dea = matches!(command, Command::Run | Command::Dea);
    let scores_sp = matches!(command, Command::Run | Command::Spdea);
    if scores_dea {
        write_scores(out, dir, "dea_scores", &est.dea, OutputFormat::Csv)?;
        if cfg.format == OutputFormat::Json {
            write_scores(out, dir, "dea_scores", &est.dea, OutputFormat::Json)?;
        }
    }
    if scores_sp {
        write_scores(out, dir, "spdea_scores", &est.spdea, OutputFormat::Csv)?;
        if cfg.format == OutputFormat::Json {
            write_scores(out, dir, "spdea_scores", &est.spdea, OutputFormat::Json)?;
        }
        write_spdea_extras(out, dir, est)?;
    }
    if command == Command::Run {
        out.json(&format!("{dir}/summary.json"), &summarize(est)?)?;
    }
    if matches!(command, Command::Run | Command::Effects) {
        effects_outputs(cfg, out, dir, est)?;
    }
    if matches!(command, Command::Run | Command::Modes) {
        modes_outputs(cfg, out, dir, est)?;
    }
    if matches!(command, Command::Run | Command::Moran) {
        moran_outputs(cfg, out, dir, est, w)?;
    }
    Ok(())
}

/// Runs a per-year command. A failing year is recorded in the manifest and
/// in `<year>/error.json`; the remaining years still run. Errors before the
/// year loop (configuration, ingestion, weights) abort the command.
pub fn run_command(command: Command, cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let dataset = load_dataset(cfg)?;
    let years = analysis_years(cfg, &dataset)?;
    let w = build_weights(cfg, &dataset)?;
    let mut out = Outputs::new(&cfg.out)?;
    let mut statuses = BTreeMap::new();
    let mut yearly_dea = BTreeMap::new();
    let mut yearly_sp = BTreeMap::new();
    for &year in &years {
        let result = estimate_year(cfg, &dataset, &w, year).and_then(|est| {
            year_outputs(command, cfg, &mut out, &est, &w)?;
            Ok(est)
        });
        match result {
            Ok(est) => {
                statuses.insert(
                    year,
                    YearStatus::Ok {
                        n: est.sample.len(),
                        bandwidths: Some(est.bandwidths().h.clone()),
                    },
                );
                yearly_dea.insert(year, est.dea.scores());
                yearly_sp.insert(year, est.spdea.scores());
            }
            Err(e) => {
                let status = YearStatus::Error {
                    error: e.to_string(),
                    input_error: e.is_input_error(),
                };
                out.json(&format!("{year}/error.json"), &status)?;
                statuses.insert(year, status);
            }
        }
    }
    if command == Command::Run && !yearly_dea.is_empty() {
        let report: BTreeMap<&str, SigmaConvergence> = BTreeMap::from([
            ("dea", sigma_convergence(&yearly_dea)?),
            ("spdea", sigma_convergence(&yearly_sp)?),
        ]);
        out.json("sigma_convergence.json", &report)?;
    }
    let mut files = out.files.clone();
    files.push("manifest.json".into());
    files.sort();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        config: cfg.clone(),
        years: statuses,
        files,
        clock: Clock::now(),
    };
    write_json(&cfg.out.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { manifest })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub regions: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub observations: usize,
    pub has_investment: bool,
    pub has_coordinates: bool,
    /// Years in which every region has a capital stock.
    pub capital_years: Vec<i32>,
    pub pim: Option<PimConfig>,
    pub flags: Vec<String>,
}

/// Validates the inputs and writes `dataset.json` plus `validation.json`.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestReport> {
    cfg.validate()?;
    let dataset = load_dataset(cfg)?;
    let capital_years = analysis_years(&RunConfig { years: vec![], ..cfg.clone() }, &dataset).unwrap_or_default();
    let report = IngestReport {
        regions: dataset.len(),
        first_year: dataset.first_year(),
        last_year: dataset.last_year(),
        observations: dataset.observation_count(),
        has_investment: dataset.has_investment(),
        has_coordinates: dataset.coordinates().is_ok(),
        capital_years,
        pim: if cfg.pim { Some(cfg.pim_config()?) } else { None },
        flags: dataset.flags().to_vec(),
    };
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("dataset.json"), dataset.to_json()? + "\n")?;
    write_json(&cfg.out.join("validation.json"), &report)?;
    Ok(report)
}

/// Runs every oracle on each year (at most 50 regions) and, when a score
/// file is given, checks it against the oracle for the first year. Writes
/// `oracle.json`; a failed check is returned as [`Error::OracleMismatch`]
/// after the report is written.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<OracleReport> {
    cfg.validate()?;
    let dataset = load_dataset(cfg)?;
    if dataset.len() > 50 {
        return Err(Error::InvalidArgument(format!(
            "oracle checks need at most 50 regions, got {}",
            dataset.len()
        )));
    }
    let years = analysis_years(cfg, &dataset)?;
    let w = build_weights(cfg, &dataset)?;
    let mut checks = Vec::new();
    for &year in &years {
        let est = estimate_year(cfg, &dataset, &w, year)?;
        for mut c in oracle::check_dea(&est.sample, &est.dea) {
            c.what = format!("{year}: {}", c.what);
            checks.push(c);
        }
        let mut c = oracle::check_conditional(&est.sample, &est.z, est.bandwidths(), &est.spdea);
        c.what = format!("{year}: {}", c.what);
        checks.push(c);
        let scores = est.dea.scores();
        if scores.windows(2).any(|p| p[0] != p[1]) {
            let m = morans_i(&w, &scores, cfg.perms, cfg.seed)?;
            let mut c = oracle::check_moran(&w, &scores, m.statistic);
            c.what = format!("{year}: {}", c.what);
            checks.push(c);
        }
    }
    if let Some(path) = &cfg.scores {
        let records = read_scores_csv(File::open(path)?)?;
        let sample = derive_ratios(&dataset, years[0])?;
        let mut c = oracle::check_score_file(&sample, &records, cfg.rts)?;
        c.what = format!("{}: {} ({})", years[0], c.what, path.display());
        checks.push(c);
    }
    let report = OracleReport { checks };
    fs::create_dir_all(&cfg.out)?;
    write_json(&cfg.out.join("oracle.json"), &report)?;
    report.ensure_passed()?;
    Ok(report)
}

/// Parses `2000,2003-2005` into `[2000, 2003, 2004, 2005]`.
pub fn parse_years(spec: &str) -> Result<Vec<i32>> {
    let mut years = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::Config(format!("bad year list `{spec}`"));
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (i32, i32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                years.extend(a..=b);
            }
            None => years.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(years)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn year_lists() {
        assert_eq!(parse_years("2000, 2003-2005").unwrap(), vec![2000, 2003, 2004, 2005]);
        assert!(parse_years("2005-2003").is_err());
        assert!(parse_years("x").is_err());
    }

    #[test]
    fn bandwidth_modes_round_trip() {
        for s in ["lscv", "rot", "1,2.5"] {
            let m: BandwidthMode = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("1,abc".parse::<BandwidthMode>().is_err());
    }

    #[test]
    fn config_json_defaults_and_unknown_keys() {
        let cfg: RunConfig = serde_json::from_str(r#"{"k": 3, "bandwidth": "rot"}"#).unwrap();
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.bandwidth, BandwidthMode::RuleOfThumb);
        assert_eq!(cfg.sig_reps, 1000);
        assert!(serde_json::from_str::<RunConfig>(r#"{"kk": 3}"#).is_err());
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn replication_minimums() {
        let cfg = RunConfig {
            sig_reps: 10,
            ..RunConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
