use thiserror::Error;

/// Every failure the library can surface, grouped by the stage that raised it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // input / schema
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown root-system catalog name `{0}`")]
    UnknownCatalogName(String),
    #[error("invalid Cartan datum: {0}")]
    InvalidCartanDatum(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    // geometry
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is empty")]
    Empty,
    #[error("polytope is not full-dimensional (affine dimension {affine_dim} < {dim})")]
    LowerDimensional { affine_dim: usize, dim: usize },
    #[error("vector {0:?} is not in the closed dominant chamber")]
    NotDominant(Vec<f64>),
    #[error("piece {index} of the PL function has a non-dominant slope")]
    NotDominantPiece { index: usize },
    #[error("2rho lies outside the domain of the PL function")]
    TwoRhoOutsideDomain,
    #[error("component ({point:?}, k = {k}) lies outside k*P+")]
    ComponentOutsidePolytope { point: Vec<String>, k: u32 },
    #[error("active simple roots are linearly dependent")]
    DependentActiveRoots,

    // integration
    #[error("degenerate simplex")]
    DegenerateSimplex,
    #[error("polynomial degree {degree} exceeds cap {cap}")]
    DegreeCapExceeded { degree: u32, cap: u32 },
    #[error("cancellation monitor tripped (amplification {ratio:.3e}); subdivide the simplex")]
    PrecisionLoss { ratio: f64 },

    // minimization
    #[error("H is not coercive on the dominant cone (minimizer at infinity); worst direction {direction:?}")]
    DivergentMinimizer { direction: Vec<f64> },
    #[error("no face of the dominant cone passed the KKT test; nearest candidates: {0}")]
    NoFaceAccepted(String),

    // reports / oracle
    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),
    #[error("Monte Carlo box too tight: no accepted samples in the first {0} draws")]
    BoxTooTight(u64),
    #[error("linear program failed: {0}")]
    LinearProgram(String),
}

impl Error {
    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Schema(_) | UnknownCatalogName(_) | InvalidCartanDatum(_) | DimensionMismatch { .. } => 2,
            Unbounded
            | Empty
            | LowerDimensional { .. }
            | NotDominant(_)
            | NotDominantPiece { .. }
            | TwoRhoOutsideDomain
            | ComponentOutsidePolytope { .. }
            | DependentActiveRoots
            | InconsistentInputs(_)
            | BoxTooTight(_) => 3,
            DivergentMinimizer { .. } | NoFaceAccepted(_) => 4,
            DegenerateSimplex | DegreeCapExceeded { .. } | PrecisionLoss { .. } | LinearProgram(_) => 5,
        }
    }

    /// Short stage label used in error reports.
    pub fn stage(&self) -> &'static str {
        match self.exit_code() {
            2 => "input",
            3 => "geometry",
            4 => "minimize",
            _ => "integration",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
