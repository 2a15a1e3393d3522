use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    // ingestion
    #[error("missing column `{0}` in header")]
    MissingColumn(String),
    #[error("malformed row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate key: region `{region}`, year {year}")]
    DuplicateKey { region: String, year: i32 },
    #[error("missing cell: region `{region}`, year {year}")]
    MissingCell { region: String, year: i32 },
    #[error("non-positive {field} for region `{region}`, year {year}: {value}")]
    NonPositiveValue {
        field: &'static str,
        region: String,
        year: i32,
        value: f64,
    },
    #[error("missing investment for region `{region}`, year {year}")]
    MissingInvestment { region: String, year: i32 },
    #[error("missing capital stock for region `{region}`, year {year}")]
    MissingCapital { region: String, year: i32 },
    #[error("zero labor for region `{region}`, year {year}")]
    ZeroLabor { region: String, year: i32 },
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
    #[error("year {0} outside the panel range")]
    YearOutOfRange(i32),

    // spatial weights
    #[error("too few units: {n} units for {need}")]
    TooFewUnits { n: usize, need: String },
    #[error("degenerate coordinates: {0}")]
    DegenerateCoordinates(String),
    #[error("self loop at unit {0}")]
    SelfLoop(usize),
    #[error("index {index} out of range for {n} units")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("coincident points {0} and {1}")]
    CoincidentPoints(usize, usize),
    #[error("unit {0} has no neighbors")]
    EmptyRow(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vector is constant")]
    ConstantVector,
    #[error("vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),

    // linear programming
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("unit `{region}`: {source}")]
    Unit {
        region: String,
        #[source]
        source: Box<Error>,
    },

    // conditional estimation
    #[error("empty conditional subsample{}", .0.map(|u| format!(" for unit {u}")).unwrap_or_default())]
    EmptySubsample(Option<usize>),
    #[error("survival estimator denominator is zero")]
    UndefinedDenominator,
    #[error("column {0} is constant")]
    ConstantColumn(usize),
    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    // effect analysis
    #[error("method mismatch: {0}")]
    MethodMismatch(String),
    #[error("unit ordering differs at position {0}")]
    OrderMismatch(usize),
    #[error("singular local fit at {0}")]
    SingularFit(f64),

    // distribution statistics
    #[error("empty vector")]
    EmptyVector,
    #[error("too few points: {0}")]
    TooFewPoints(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("oracle mismatch: {what} differs by {discrepancy:e} (tolerance {tolerance:e})")]
    OracleMismatch {
        what: String,
        discrepancy: f64,
        tolerance: f64,
    },
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn for_unit(self, region: &str) -> Error {
        Error::Unit {
            region: region.to_string(),
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad input or configuration rather than by a
    /// computation that went wrong.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::MissingColumn(_)
            | Error::MalformedRow { .. }
            | Error::DuplicateKey { .. }
            | Error::MissingCell { .. }
            | Error::NonPositiveValue { .. }
            | Error::MissingInvestment { .. }
            | Error::MissingCapital { .. }
            | Error::ZeroLabor { .. }
            | Error::UnknownRegion(_)
            | Error::YearOutOfRange(_)
            | Error::SelfLoop(_)
            | Error::IndexOutOfRange { .. }
            | Error::CoincidentPoints(..)
            | Error::DegenerateCoordinates(_)
            | Error::InvalidArgument(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => true,
            Error::Unit { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
