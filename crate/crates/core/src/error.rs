use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("triangle {0} has zero area")]
    DegenerateTriangle(usize),

    #[error("element index {index} out of range for a mesh with {len} triangles")]
    InvalidMarkedSet { index: usize, len: usize },

    #[error("meshes are not in a refinement relation: {0}")]
    NotARefinement(String),

    #[error("internal refinement loop did not terminate after {0} sweeps")]
    RefinementLoop(usize),

    #[error("unsupported element: {0}")]
    UnsupportedElement(String),

    #[error("unsupported quadrature order {0} (supported: 1..=10)")]
    UnsupportedQuadrature(usize),

    #[error("point ({0}, {1}, {2}) lies outside the reference triangle")]
    OutsideReference(f64, f64, f64),

    #[error("incompatible spaces: {0}")]
    IncompatibleSpaces(String),

    #[error("mismatched input: {0}")]
    Mismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("solver did not converge in {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("factorization failed: {msg} (relative residual {residual:e})")]
    Singular { msg: String, residual: f64 },

    #[error("system with {0} unknowns exceeds the inf-sup probe size cap of {1}")]
    TooLarge(usize, usize),

    #[error("estimator is zero; the adaptive loop must terminate")]
    ZeroEstimator,

    #[error("tree approximation exceeded {0} bisections")]
    ApproxCap(usize),

    #[error("rate fit needs at least 3 rows, got {0}")]
    InsufficientRows(usize),

    #[error("non-positive value in rate fit at row {0}")]
    NonPositive(usize),

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("adaptive run failed at level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
        partial: Box<crate::adapt::ConvergenceRecord>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
