use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameter: {0}")]
    InvalidModel(String),

    #[error("truncation K = {0} is too small (need K >= 2)")]
    TruncationTooSmall(usize),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("observation set is empty: no quadrature node lies inside {0}")]
    EmptyObservation(String),

    #[error("observation set has empty complement: {0}")]
    ComplementEmpty(String),

    #[error("mass parameter m = {0} must satisfy m > 1")]
    InvalidMass(f64),

    #[error("time must be nonnegative (got {0})")]
    NegativeTime(f64),

    #[error("time must be strictly positive (got {0})")]
    NonPositiveTime(f64),

    #[error("argument must be strictly positive (got {0})")]
    NonPositiveArgument(f64),

    #[error("quadrature did not converge: estimated error {error:e} above tolerance {tolerance:e}")]
    QuadratureNotConverged { error: f64, tolerance: f64 },

    #[error("quadrature under-resolved: {0}")]
    QuadratureUnderResolved(String),

    #[error("0 is an eigenvalue of the truncated operator (min |eigenvalue| = {min_abs:e}, threshold {threshold:e})")]
    SingularOperator { min_abs: f64, threshold: f64 },

    #[error("operator is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("source support exceeds the observation set: {0}")]
    SupportExceedsObservation(String),

    #[error("potential declared supported in the observation set is nonzero outside it (max |V| = {0:e})")]
    PotentialSupportViolated(f64),

    #[error("source count must be at least 1")]
    NoSources,

    #[error("z = {z} lies within the pole-exclusion radius of -{pole}")]
    NearPole { z: String, pole: f64 },

    #[error("time grid is not uniform")]
    NonUniformGrid,

    #[error("time grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("rank ambiguous: singular-value gap {gap:e} below threshold {threshold:e}")]
    RankAmbiguous { gap: f64, threshold: f64 },

    #[error("exponential fit failed: {0}")]
    FitFailed(String),

    #[error("eigenspace for lambda = {eigenvalue} under-excited: rank {rank} < multiplicity {expected}")]
    UnderExcitedEigenspace {
        eigenvalue: f64,
        rank: usize,
        expected: usize,
    },

    #[error("node grids are incompatible: {0}")]
    IncompatibleNodes(String),

    #[error("underdetermined sampling: {rows} rows for {unknowns} unknowns (need rows >= {required})")]
    Underdetermined {
        rows: usize,
        unknowns: usize,
        required: usize,
    },

    #[error("no exponential decay detected in the sampled function (fitted rate {0})")]
    NoDecay(f64),

    #[error("all pairings with eigenspace {0} vanish for every candidate source")]
    AllPairingsVanish(usize),

    #[error("no complement node is covered by any source")]
    EmptyCoverage,

    #[error("recovered candidates disagree by {disagreement:e} (tolerance {tolerance:e})")]
    InconsistentCandidates { disagreement: f64, tolerance: f64 },

    #[error("isometry does not fix the observation set: {0}")]
    IsometryDoesNotFixObservation(String),

    #[error("isometry is not a symmetry of this model: {0}")]
    UnsupportedIsometry(String),

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
