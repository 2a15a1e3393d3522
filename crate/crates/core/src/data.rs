//! Panel ingestion, capital stocks by the perpetual inventory method, and
//! the per-worker ratios that feed the frontier estimators.
//!
//! A [`PanelDataset`] is always balanced: every region has one observation
//! for every year in `first_year..=last_year`. Gaps are a hard error at load
//! time; nothing is imputed.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column names used when reading a panel CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PanelSchema {
    pub region: String,
    pub country: String,
    pub year: String,
    pub gva: String,
    pub emp: String,
    pub gfcf: String,
    pub capital: String,
    pub x_coord: String,
    pub y_coord: String,
}

impl Default for PanelSchema {
    fn default() -> Self {
        Self {
            region: "region".into(),
            country: "country".into(),
            year: "year".into(),
            gva: "gva".into(),
            emp: "emp".into(),
            gfcf: "gfcf".into(),
            capital: "capital".into(),
            x_coord: "x_coord".into(),
            y_coord: "y_coord".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    #[serde(default)]
    pub country: String,
    /// Projected planar coordinates; distances are Euclidean.
    #[serde(default)]
    pub coord: Option<[f64; 2]>,
}

/// One (region, year) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Output (gross value added), constant-price PPS millions.
    pub gva: f64,
    /// Employment, thousands of persons.
    pub emp: f64,
    /// Gross fixed capital formation, constant-price millions.
    pub gfcf: Option<f64>,
    /// Capital stock, constant-price millions.
    pub capital: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    regions: Vec<Region>,
    first_year: i32,
    last_year: i32,
    /// `cells[region][year - first_year]`
    cells: Vec<Vec<Observation>>,
    flags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct UnitsBlock {
    gva: String,
    emp: String,
    gfcf: String,
    capital: String,
    coord: String,
}

impl Default for UnitsBlock {
    fn default() -> Self {
        Self {
            gva: "constant-price PPS, millions".into(),
            emp: "persons, thousands".into(),
            gfcf: "constant-price, millions".into(),
            capital: "constant-price, millions".into(),
            coord: "projected planar coordinates".into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ObservationRecord {
    region: String,
    year: i32,
    #[serde(flatten)]
    obs: Observation,
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    units: UnitsBlock,
    first_year: i32,
    last_year: i32,
    regions: Vec<Region>,
    observations: Vec<ObservationRecord>,
    #[serde(default)]
    flags: Vec<String>,
}

impl PanelDataset {
    /// Builds a dataset from explicit cells, running every validation rule.
    pub fn new(
        regions: Vec<Region>,
        first_year: i32,
        last_year: i32,
        cells: Vec<Vec<Observation>>,
    ) -> Result<Self> {
        if last_year < first_year {
            return Err(Error::InvalidArgument(format!(
                "year range {first_year}..={last_year} is empty"
            )));
        }
        let span = (last_year - first_year + 1) as usize;
        if cells.len() != regions.len() {
            return Err(Error::DimensionMismatch {
                expected: regions.len(),
                got: cells.len(),
            });
        }
        let mut seen = HashMap::new();
        for (i, r) in regions.iter().enumerate() {
            if seen.insert(r.id.as_str(), i).is_some() {
                return Err(Error::DuplicateKey {
                    region: r.id.clone(),
                    year: first_year,
                });
            }
            if let Some(c) = r.coord {
                if !c.iter().all(|v| v.is_finite()) {
                    return Err(Error::DegenerateCoordinates(format!(
                        "non-finite coordinate for region `{}`",
                        r.id
                    )));
                }
            }
        }
        for (r, row) in regions.iter().zip(&cells) {
            if row.len() != span {
                let year = first_year + row.len().min(span) as i32;
                return Err(Error::MissingCell {
                    region: r.id.clone(),
                    year,
                });
            }
            for (t, obs) in row.iter().enumerate() {
                validate_observation(&r.id, first_year + t as i32, obs)?;
            }
        }
        Ok(Self {
            regions,
            first_year,
            last_year,
            cells,
            flags: Vec::new(),
        })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.last_year
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.first_year..=self.last_year
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn observation_count(&self) -> usize {
        self.cells.iter().map(Vec::len).sum()
    }

    /// Notes attached during construction, e.g. countries whose capital stocks
    /// were not benchmarked.
    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    pub fn observation(&self, region: usize, year: i32) -> Option<&Observation> {
        if year < self.first_year || year > self.last_year {
            return None;
        }
        self.cells
            .get(region)
            .and_then(|row| row.get((year - self.first_year) as usize))
    }

    pub fn region_index(&self, id: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.id == id)
    }

    /// Coordinates of every region, in region order.
    pub fn coordinates(&self) -> Result<Vec<[f64; 2]>> {
        self.regions
            .iter()
            .map(|r| {
                r.coord.ok_or_else(|| {
                    Error::DegenerateCoordinates(format!("region `{}` has no coordinates", r.id))
                })
            })
            .collect()
    }

    /// Replaces region coordinates with those from a separate coordinates file.
    pub fn attach_coordinates(&mut self, coords: &BTreeMap<String, [f64; 2]>) -> Result<()> {
        for r in &mut self.regions {
            let c = coords.get(&r.id).ok_or_else(|| {
                Error::DegenerateCoordinates(format!("no coordinates for region `{}`", r.id))
            })?;
            if !c.iter().all(|v| v.is_finite()) {
                return Err(Error::DegenerateCoordinates(format!(
                    "non-finite coordinate for region `{}`",
                    r.id
                )));
            }
            r.coord = Some(*c);
        }
        Ok(())
    }

    pub fn has_investment(&self) -> bool {
        self.cells.iter().flatten().all(|o| o.gfcf.is_some())
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DatasetFile {
            units: UnitsBlock::default(),
            first_year: self.first_year,
            last_year: self.last_year,
            regions: self.regions.clone(),
            observations: self
                .regions
                .iter()
                .zip(&self.cells)
                .flat_map(|(r, row)| {
                    row.iter().enumerate().map(|(t, obs)| ObservationRecord {
                        region: r.id.clone(),
                        year: self.first_year + t as i32,
                        obs: *obs,
                    })
                })
                .collect(),
            flags: self.flags.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DatasetFile = serde_json::from_str(text)?;
        let mut ds = assemble(
            file.regions,
            file.observations
                .into_iter()
                .map(|r| (r.region, r.year, r.obs))
                .collect(),
        )?;
        if ds.first_year != file.first_year || ds.last_year != file.last_year {
            return Err(Error::InvalidArgument(
                "declared year range disagrees with observations".into(),
            ));
        }
        ds.flags = file.flags;
        Ok(ds)
    }

    /// Writes the dataset as a panel CSV using the default schema.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let schema = PanelSchema::default();
        let mut w = csv::Writer::from_writer(out);
        let with_coords = self.regions.iter().all(|r| r.coord.is_some());
        let with_gfcf = self.has_investment();
        let with_capital = self.cells.iter().flatten().all(|o| o.capital.is_some());

        let mut header = vec![&schema.region, &schema.country, &schema.year, &schema.gva, &schema.emp];
        if with_gfcf {
            header.push(&schema.gfcf);
        }
        if with_capital {
            header.push(&schema.capital);
        }
        if with_coords {
            header.push(&schema.x_coord);
            header.push(&schema.y_coord);
        }
        w.write_record(header)?;

        for (r, row) in self.regions.iter().zip(&self.cells) {
            for (t, obs) in row.iter().enumerate() {
                let mut rec = vec![
                    r.id.clone(),
                    r.country.clone(),
                    (self.first_year + t as i32).to_string(),
                    obs.gva.to_string(),
                    obs.emp.to_string(),
                ];
                if with_gfcf {
                    rec.push(obs.gfcf.unwrap_or_default().to_string());
                }
                if with_capital {
                    rec.push(obs.capital.unwrap_or_default().to_string());
                }
                if let (true, Some([x, y])) = (with_coords, r.coord) {
                    rec.push(x.to_string());
                    rec.push(y.to_string());
                }
                w.write_record(rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn validate_observation(region: &str, year: i32, obs: &Observation) -> Result<()> {
    let check = |field: &'static str, value: f64, allow_zero: bool| {
        let ok = value.is_finite() && (value > 0.0 || (allow_zero && value == 0.0));
        if ok {
            Ok(())
        } else {
            Err(Error::NonPositiveValue {
                field,
                region: region.to_string(),
                year,
                value,
            })
        }
    };
    check("gva", obs.gva, false)?;
    check("emp", obs.emp, false)?;
    if let Some(i) = obs.gfcf {
        check("gfcf", i, true)?;
    }
    if let Some(k) = obs.capital {
        check("capital", k, false)?;
    }
    Ok(())
}

/// Groups loose records into a balanced panel.
fn assemble(regions: Vec<Region>, records: Vec<(String, i32, Observation)>) -> Result<PanelDataset> {
    let index: HashMap<&str, usize> = regions
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    if records.is_empty() {
        return Err(Error::EmptyVector);
    }
    let first_year = records.iter().map(|r| r.1).min().unwrap_or(0);
    let last_year = records.iter().map(|r| r.1).max().unwrap_or(0);
    let span = (last_year - first_year + 1) as usize;

    let mut grid: Vec<Vec<Option<Observation>>> = vec![vec![None; span]; regions.len()];
    for (region, year, obs) in records {
        let &i = index
            .get(region.as_str())
            .ok_or_else(|| Error::UnknownRegion(region.clone()))?;
        let slot = &mut grid[i][(year - first_year) as usize];
        if slot.is_some() {
            return Err(Error::DuplicateKey { region, year });
        }
        validate_observation(&region, year, &obs)?;
        *slot = Some(obs);
    }

    let mut cells = Vec::with_capacity(regions.len());
    for (r, row) in regions.iter().zip(grid) {
        let mut full = Vec::with_capacity(span);
        for (t, cell) in row.into_iter().enumerate() {
            full.push(cell.ok_or_else(|| Error::MissingCell {
                region: r.id.clone(),
                year: first_year + t as i32,
            })?);
        }
        cells.push(full);
    }
    PanelDataset::new(regions, first_year, last_year, cells)
}

/// Reads a panel CSV: one row per (region, year), header row required.
///
/// `region`, `year`, `gva` and `emp` columns are required. `country`, `gfcf`,
/// `capital` and the coordinate pair are optional. Region order follows first
/// appearance in the file.
pub fn load_panel<R: Read>(source: R, schema: &PanelSchema) -> Result<PanelDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let require = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.to_string()));

    let c_region = require(&schema.region)?;
    let c_year = require(&schema.year)?;
    let c_gva = require(&schema.gva)?;
    let c_emp = require(&schema.emp)?;
    let c_country = find(&schema.country);
    let c_gfcf = find(&schema.gfcf);
    let c_capital = find(&schema.capital);
    let c_coords = match (find(&schema.x_coord), find(&schema.y_coord)) {
        (Some(x), Some(y)) => Some((x, y)),
        (None, None) => None,
        (Some(_), None) => return Err(Error::MissingColumn(schema.y_coord.clone())),
        (None, Some(_)) => return Err(Error::MissingColumn(schema.x_coord.clone())),
    };

    let mut regions: Vec<Region> = Vec::new();
    let mut region_index: HashMap<String, usize> = HashMap::new();
    let mut records = Vec::new();

    for (row_no, rec) in reader.records().enumerate() {
        let line = row_no + 2;
        let rec = rec.map_err(|e| Error::MalformedRow {
            line,
            reason: e.to_string(),
        })?;
        let field = |col: usize| -> Result<&str> {
            rec.get(col).ok_or_else(|| Error::MalformedRow {
                line,
                reason: format!("missing field {col}"),
            })
        };
        let number = |col: usize, name: &str| -> Result<f64> {
            let raw = field(col)?;
            raw.parse::<f64>().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("`{name}` is not a number: `{raw}`"),
            })
        };
        let optional = |col: Option<usize>, name: &str| -> Result<Option<f64>> {
            match col {
                None => Ok(None),
                Some(c) if field(c)?.is_empty() => Ok(None),
                Some(c) => number(c, name).map(Some),
            }
        };

        let id = field(c_region)?.to_string();
        if id.is_empty() {
            return Err(Error::MalformedRow {
                line,
                reason: "empty region id".into(),
            });
        }
        let year_raw = field(c_year)?;
        let year: i32 = year_raw.parse().map_err(|_| Error::MalformedRow {
            line,
            reason: format!("`{}` is not a year: `{year_raw}`", schema.year),
        })?;
        let country = match c_country {
            Some(c) => field(c)?.to_string(),
            None => String::new(),
        };
        let coord = match c_coords {
            Some((cx, cy)) => Some([number(cx, &schema.x_coord)?, number(cy, &schema.y_coord)?]),
            None => None,
        };
        let obs = Observation {
            gva: number(c_gva, &schema.gva)?,
            emp: number(c_emp, &schema.emp)?,
            gfcf: optional(c_gfcf, &schema.gfcf)?,
            capital: optional(c_capital, &schema.capital)?,
        };

        match region_index.get(&id) {
            Some(&i) => {
                let r = &regions[i];
                if r.country != country || r.coord != coord {
                    return Err(Error::MalformedRow {
                        line,
                        reason: format!("region `{id}` changes country or coordinates across rows"),
                    });
                }
            }
            None => {
                region_index.insert(id.clone(), regions.len());
                regions.push(Region {
                    id: id.clone(),
                    country,
                    coord,
                });
            }
        }
        records.push((id, year, obs));
    }

    assemble(regions, records)
}

/// Reads a coordinates CSV with columns `region, x_coord, y_coord`.
pub fn load_coordinates<R: Read>(
    source: R,
    schema: &PanelSchema,
) -> Result<BTreeMap<String, [f64; 2]>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let require = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (cr, cx, cy) = (
        require(&schema.region)?,
        require(&schema.x_coord)?,
        require(&schema.y_coord)?,
    );
    let mut out = BTreeMap::new();
    for (row_no, rec) in reader.records().enumerate() {
        let line = row_no + 2;
        let rec = rec?;
        let get = |c: usize| -> Result<f64> {
            let raw = rec.get(c).unwrap_or("");
            raw.parse().map_err(|_| Error::MalformedRow {
                line,
                reason: format!("not a number: `{raw}`"),
            })
        };
        let id = rec.get(cr).unwrap_or("").to_string();
        let c = [get(cx)?, get(cy)?];
        if out.insert(id.clone(), c).is_some() {
            return Err(Error::DuplicateKey {
                region: id,
                year: 0,
            });
        }
    }
    Ok(out)
}

/// Reads national benchmark capital stocks from a CSV with `country, capital`.
pub fn load_benchmarks<R: Read>(source: R) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let require = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (cc, ck) = (require("country")?, require("capital")?);
    let mut out = BTreeMap::new();
    for (row_no, rec) in reader.records().enumerate() {
        let rec = rec?;
        let raw = rec.get(ck).unwrap_or("");
        let v: f64 = raw.parse().map_err(|_| Error::MalformedRow {
            line: row_no + 2,
            reason: format!("not a number: `{raw}`"),
        })?;
        out.insert(rec.get(cc).unwrap_or("").to_string(), v);
    }
    Ok(out)
}

/// Perpetual-inventory settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PimConfig {
    /// Yearly depreciation rate.
    pub delta: f64,
    /// First year of the accumulation window.
    pub window_start: i32,
    /// Last year of the accumulation window; the initial stock is dated here.
    pub benchmark_year: i32,
    /// National capital stocks in the benchmark year, by country.
    #[serde(default)]
    pub benchmarks: BTreeMap<String, f64>,
}

impl PimConfig {
    pub fn new(delta: f64, window_start: i32, benchmark_year: i32) -> Self {
        Self {
            delta,
            window_start,
            benchmark_year,
            benchmarks: BTreeMap::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidArgument(format!(
                "depreciation rate {} outside [0, 1)",
                self.delta
            )));
        }
        if self.window_start > self.benchmark_year {
            return Err(Error::InvalidArgument("empty accumulation window".into()));
        }
        if let Some((c, v)) = self.benchmarks.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "benchmark stock for `{c}` must be positive, got {v}"
            )));
        }
        Ok(())
    }
}

impl Default for PimConfig {
    fn default() -> Self {
        Self::new(0.05, 1990, 2000)
    }
}

/// One step of the recursion `K_t = I_t + (1 - delta) K_{t-1}`, evaluated as
/// depreciation followed by investment.
pub fn pim_step(previous: f64, investment: f64, delta: f64) -> f64 {
    previous - delta * previous + investment
}

/// Initial stock from an investment series ending in the benchmark year:
/// `sum_s I_s (1 - delta)^(benchmark - s)`.
pub fn accumulate_initial_stock(investment: &[f64], delta: f64) -> f64 {
    investment.iter().fold(0.0, |k, &i| pim_step(k, i, delta))
}

/// Rolls `initial` forward over `investment`, returning one stock per element.
pub fn perpetual_inventory(initial: f64, investment: &[f64], delta: f64) -> Vec<f64> {
    investment
        .iter()
        .scan(initial, |k, &i| {
            *k = pim_step(*k, i, delta);
            Some(*k)
        })
        .collect()
}

/// Fills capital stocks for every year from the benchmark year on.
///
/// The benchmark-year stock is the depreciated sum of investment over the
/// accumulation window. When a national total is supplied for a region's
/// country, the regional stocks are rescaled so that their shares of the
/// accumulated national sum apply to that total; countries without a total
/// keep the accumulated stocks and are listed in [`PanelDataset::flags`].
/// Stocks for years before the benchmark year are left untouched.
pub fn build_capital_stock(dataset: &PanelDataset, cfg: &PimConfig) -> Result<PanelDataset> {
    cfg.validate()?;
    if cfg.benchmark_year < dataset.first_year || cfg.benchmark_year > dataset.last_year {
        return Err(Error::YearOutOfRange(cfg.benchmark_year));
    }
    if cfg.window_start < dataset.first_year {
        return Err(Error::MissingInvestment {
            region: dataset.regions.first().map(|r| r.id.clone()).unwrap_or_default(),
            year: cfg.window_start,
        });
    }

    let investment = |i: usize, year: i32| -> Result<f64> {
        dataset
            .observation(i, year)
            .and_then(|o| o.gfcf)
            .ok_or_else(|| Error::MissingInvestment {
                region: dataset.regions[i].id.clone(),
                year,
            })
    };

    let mut initial = Vec::with_capacity(dataset.len());
    for i in 0..dataset.len() {
        let series = (cfg.window_start..=cfg.benchmark_year)
            .map(|y| investment(i, y))
            .collect::<Result<Vec<_>>>()?;
        initial.push(accumulate_initial_stock(&series, cfg.delta));
    }

    let mut national: BTreeMap<&str, f64> = BTreeMap::new();
    for (r, k) in dataset.regions.iter().zip(&initial) {
        *national.entry(r.country.as_str()).or_default() += k;
    }
    let mut flags = dataset.flags.clone();
    for (country, accumulated) in &national {
        match cfg.benchmarks.get(*country) {
            Some(_) if *accumulated <= 0.0 => {
                return Err(Error::InvalidArgument(format!(
                    "country `{country}` has zero accumulated investment; shares undefined"
                )))
            }
            Some(_) => {}
            None => flags.push(format!(
                "capital stock for country `{country}` not benchmarked; accumulated stock used"
            )),
        }
    }
    for (r, k) in dataset.regions.iter().zip(initial.iter_mut()) {
        if let Some(total) = cfg.benchmarks.get(&r.country) {
            *k = total * (*k / national[r.country.as_str()]);
        }
    }

    let mut out = dataset.clone();
    let base = (cfg.benchmark_year - dataset.first_year) as usize;
    for (i, k0) in initial.into_iter().enumerate() {
        let later = (cfg.benchmark_year + 1..=dataset.last_year)
            .map(|y| investment(i, y))
            .collect::<Result<Vec<_>>>()?;
        let row = &mut out.cells[i];
        row[base].capital = Some(k0);
        for (offset, k) in perpetual_inventory(k0, &later, cfg.delta).into_iter().enumerate() {
            assert!(k >= 0.0, "negative capital stock from nonnegative inputs");
            row[base + 1 + offset].capital = Some(k);
        }
    }
    out.flags = flags;
    // zero stocks are possible when all investment is zero
    for (r, row) in out.regions.iter().zip(&out.cells) {
        for (t, obs) in row.iter().enumerate() {
            if let Some(k) = obs.capital {
                if k <= 0.0 {
                    return Err(Error::NonPositiveValue {
                        field: "capital",
                        region: r.id.clone(),
                        year: out.first_year + t as i32,
                        value: k,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// A decision-making unit: one input vector and one output vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionUnit {
    pub id: String,
    pub x: Vec<f64>,
    pub q: Vec<f64>,
}

impl DecisionUnit {
    pub fn new(id: impl Into<String>, x: Vec<f64>, q: Vec<f64>) -> Self {
        Self { id: id.into(), x, q }
    }
}

/// A cross-section ready for frontier estimation. All inputs and outputs are
/// strictly positive and every unit has the same dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierSample {
    pub year: Option<i32>,
    units: Vec<DecisionUnit>,
}

impl FrontierSample {
    pub fn new(year: Option<i32>, units: Vec<DecisionUnit>) -> Result<Self> {
        let first = units.first().ok_or(Error::EmptyVector)?;
        let (p, r) = (first.x.len(), first.q.len());
        if p == 0 || r == 0 {
            return Err(Error::InvalidArgument(
                "units need at least one input and one output".into(),
            ));
        }
        for u in &units {
            if u.x.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: u.x.len(),
                });
            }
            if u.q.len() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    got: u.q.len(),
                });
            }
            if let Some(bad) = u.x.iter().chain(&u.q).find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "unit `{}` has a non-positive or non-finite value {bad}",
                    u.id
                )));
            }
        }
        Ok(Self { year, units })
    }

    /// Convenience constructor for the single-input, single-output case.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let units = pairs
            .iter()
            .enumerate()
            .map(|(i, &(x, q))| DecisionUnit::new(format!("u{i}"), vec![x], vec![q]))
            .collect();
        Self::new(None, units)
    }

    pub fn units(&self) -> &[DecisionUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Number of inputs.
    pub fn p(&self) -> usize {
        self.units[0].x.len()
    }

    /// Number of outputs.
    pub fn r(&self) -> usize {
        self.units[0].q.len()
    }

    pub fn input_column(&self, dim: usize) -> Vec<f64> {
        self.units.iter().map(|u| u.x[dim]).collect()
    }

    pub fn output_column(&self, dim: usize) -> Vec<f64> {
        self.units.iter().map(|u| u.q[dim]).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.units.iter().map(|u| u.id.as_str()).collect()
    }

    /// The sub-sample made of the given unit indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let units = indices
            .iter()
            .map(|&i| {
                self.units.get(i).cloned().ok_or(Error::IndexOutOfRange {
                    index: i,
                    n: self.units.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.year, units)
    }
}

/// Per-worker ratios for one year: `x = K / L`, `q = Y / L`.
pub fn derive_ratios(dataset: &PanelDataset, year: i32) -> Result<FrontierSample> {
    if year < dataset.first_year || year > dataset.last_year {
        return Err(Error::YearOutOfRange(year));
    }
    let mut units = Vec::with_capacity(dataset.len());
    for (i, r) in dataset.regions.iter().enumerate() {
        let obs = dataset.observation(i, year).expect("balanced panel");
        if obs.emp == 0.0 {
            return Err(Error::ZeroLabor {
                region: r.id.clone(),
                year,
            });
        }
        let k = obs.capital.ok_or_else(|| Error::MissingCapital {
            region: r.id.clone(),
            year,
        })?;
        units.push(DecisionUnit::new(
            r.id.clone(),
            vec![k / obs.emp],
            vec![obs.gva / obs.emp],
        ));
    }
    FrontierSample::new(Some(year), units)
}
