use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate grid specification: {0}")]
    DegenerateGrid(String),

    #[error("mass vector is empty, all-zero, or contains non-finite entries")]
    InvalidMasses,

    #[error("quantile argument {0} outside [0, 1]")]
    QuantileOutOfRange(f64),

    #[error("densities live on different grids")]
    GridMismatch,

    #[error("no samples provided")]
    EmptySamples,

    #[error("{count} sample(s) outside the grid range [{lo}, {hi}]")]
    OutOfRangeSamples { count: usize, lo: f64, hi: f64 },

    #[error("invalid loss parameter: {0}")]
    InvalidLoss(String),

    #[error("loss domain violation: {0}")]
    LossDomain(String),

    #[error("energy values must be finite (offending x = {x}, value = {value})")]
    NonFiniteEnergy { x: f64, value: f64 },

    #[error("temperature must be strictly positive, got {0}")]
    NonPositiveGamma(f64),

    #[error("target entropy {tau} is infeasible on this grid (attainable range ({h_min}, {h_max}))")]
    InfeasibleTau { tau: f64, h_min: f64, h_max: f64 },

    #[error("temperature bracket not found after {0} doublings")]
    BracketNotFound(usize),

    #[error("invalid family parameter: {0}")]
    InvalidFamily(String),

    #[error("argument {x} outside the family domain {domain}")]
    FamilyDomain { x: f64, domain: &'static str },

    #[error("no root for the Pareto tail parameter inside [{lo}, {hi}] at tau = {tau}")]
    ParetoRootNotBracketed { tau: f64, lo: f64, hi: f64 },

    #[error("invalid search space: {0}")]
    InvalidSearchSpace(String),

    #[error("every candidate in the search space was infeasible")]
    EmptyFeasibleSet,

    #[error("invalid transform parameter: {0}")]
    InvalidTransform(String),

    #[error("transform maps all probability mass outside the target grid")]
    AllMassOutsideGrid,

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("invalid selection configuration: {0}")]
    InvalidSelection(String),

    #[error("selection rule unsatisfiable: {0}")]
    UnsatisfiableRule(String),

    #[error("invalid network generator configuration: {0}")]
    InvalidNetworkConfig(String),

    #[error("missing column {0:?} in CSV header")]
    MissingColumn(String),

    #[error("no usable rows after filtering ({skipped} skipped)")]
    NoUsableRows { skipped: usize },

    #[error("malformed density CSV: {0}")]
    MalformedDensityCsv(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
