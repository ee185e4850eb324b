use thiserror::Error;

/// Crate-wide error type. Variants are grouped by the layer that raises them;
/// the CLI maps them onto exit codes (config = 1, numeric = 2, invariant = 3).
#[derive(Debug, Error)]
pub enum Error {
    // expression layer
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at offset {position}")]
    UnknownIdentifier { position: usize, name: String },
    #[error("domain error evaluating expression: {0}")]
    DomainError(String),

    // operator / domain layer
    #[error("operator is not elliptic at ({x}, {y}): a = {value}")]
    NonElliptic { x: f64, y: f64, value: f64 },
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("monotone stencil violated at ({row},{col}): off-diagonal {value}")]
    MonotonicityViolation { row: usize, col: usize, value: f64 },

    // eigensolvers
    #[error("no convergence after {iterations} iterations (best residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        lambda: f64,
        residual: f64,
        phi: Vec<f64>,
    },
    #[error("stencil graph is reducible (disconnected interior); solve components separately")]
    Reducible,
    #[error("matrix size {size} exceeds dense-oracle limit {limit}")]
    SizeExceeded { size: usize, limit: usize },
    #[error("matrix is not symmetric (nor diagonally symmetrizable): |A[{row},{col}] - A[{col},{row}]| = {defect:.3e}")]
    NotSymmetric { row: usize, col: usize, defect: f64 },
    #[error("zero vector supplied where a nonzero vector is required")]
    ZeroVector,
    #[error("Rayleigh quotient denominator is zero")]
    ZeroDenominator,
    #[error("Perron structure violated: eigenvector changes sign (min {min:.3e}, max {max:.3e})")]
    SignChange { min: f64, max: f64 },

    // shooting
    #[error("ODE integrator stalled near x = {x} (step {step:.3e})")]
    StiffnessFailure { x: f64, step: f64 },
    #[error("no sign-change bracket found in [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    // unbounded-domain machinery
    #[error("eigenvalue sequence not monotone at index {index}: {prev} -> {next} (slack {slack:.3e}); h likely too coarse")]
    NonMonotone {
        index: usize,
        prev: f64,
        next: f64,
        slack: f64,
    },
    #[error("tail region is empty")]
    EmptyTail,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("decay window holds {nodes} nodes; at least {required} required")]
    WindowTooSmall { nodes: usize, required: usize },

    // maximum-principle machinery
    #[error("certificate rejected at ({x}, {y}): {inequality} (value {value:.6e})")]
    CertificateRejected {
        x: f64,
        y: f64,
        inequality: String,
        value: f64,
    },
    #[error("not a maximum-principle witness: {0}")]
    NotAWitness(String),
    #[error("eigenvalue relation chain violated: {0}")]
    ChainViolation(String),

    // scenarios / config
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit-code class: 1 config, 2 numeric, 3 invariant.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Syntax { .. } | UnknownIdentifier { .. } | Config(_) | UnknownScenario(_)
            | SizeMismatch { .. } | PreconditionFailed(_) | Io(_) => 1,
            DomainError(_) | NonElliptic { .. } | DegenerateDomain(_) | NoConvergence { .. }
            | Reducible | SizeExceeded { .. } | NotSymmetric { .. } | ZeroVector
            | ZeroDenominator | StiffnessFailure { .. } | BracketFailure { .. }
            | EmptyTail | WindowTooSmall { .. } => 2,
            MonotonicityViolation { .. } | SignChange { .. } | NonMonotone { .. }
            | CertificateRejected { .. } | NotAWitness(_) | ChainViolation(_) => 3,
        }
    }
}
