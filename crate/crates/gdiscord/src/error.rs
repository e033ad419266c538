use thiserror::Error;

/// Errors for Gaussian-state construction, measurement and optimization.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {modes} modes need a {expected}x{expected} matrix, got {got}x{got}")]
    DimensionMismatch {
        modes: usize,
        expected: usize,
        got: usize,
    },

    #[error("matrix asymmetry {skew:.3e} exceeds tolerance {tol:.1e}")]
    NotSymmetric { skew: f64, tol: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("state is unphysical: minimum symplectic eigenvalue {min_nu}")]
    Unphysical { min_nu: f64 },

    #[error("invalid mode index {index} for {modes} modes")]
    InvalidModeIndex { index: usize, modes: usize },

    #[error("invalid variable index {index} for dimension {dim}")]
    InvalidIndex { index: usize, dim: usize },

    #[error("conditioning block is singular or ill-conditioned (condition estimate {cond:.3e})")]
    SingularConditioning { cond: f64 },

    #[error("measurement plan covers {plan} modes but the state has {state}")]
    PlanLengthMismatch { plan: usize, state: usize },

    #[error("evaluation budget {budget} exhausted before the coarse grid ({required} evaluations) completed")]
    BudgetExhausted { budget: u64, required: u64 },

    #[error("state is not permutation symmetric (deviation {deviation:.3e})")]
    AsymmetricState { deviation: f64 },

    #[error("state is not in two-mode standard form (off-pattern magnitude {deviation:.3e})")]
    NotStandardForm { deviation: f64 },

    #[error("standard form requires c_x >= |c_p| >= 0, got c_x = {c_x}, c_p = {c_p}")]
    UnsupportedCorrelationSigns { c_x: f64, c_p: f64 },

    #[error(
        "guard search found a measurement beating heterodyne by {improvement:.3e} bits \
         (heterodyne {heterodyne}, best {best}); state is outside the heterodyne-optimal regime"
    )]
    HeterodyneGuard {
        heterodyne: f64,
        best: f64,
        improvement: f64,
    },

    #[error("correlated noise is defined only for 2 or 3 modes, got {modes}")]
    CorrelatedNoiseModes { modes: usize },

    #[error("partition must be a nonempty proper subset of the modes")]
    TrivialPartition,

    #[error("degenerate sample batch: {0}")]
    DegenerateSamples(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
