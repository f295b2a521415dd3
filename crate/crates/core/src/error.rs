use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate grid: nx={0}, ny={1} (need at least 2 cells per axis)")]
    DegenerateGrid(usize, usize),

    #[error("periodic topology requires the unit cell [0,1]x[0,1], got {0}")]
    NonUnitPeriodicDomain(String),

    #[error("field has {got} values, grid expects {want}")]
    FieldSizeMismatch { got: usize, want: usize },

    #[error("non-finite value at index {0}")]
    NonFiniteValue(usize),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("square [{0:.6}, {1:.6}] x [{2:.6}, {3:.6}] extends outside the domain")]
    SquareOutsideDomain(f64, f64, f64, f64),

    #[error("resolution exceeded: dyadic level {level} produces squares smaller than one grid cell")]
    ResolutionExceeded { level: u32 },

    #[error("ellipticity violated: {0}")]
    Ellipticity(String),

    #[error("linear solver did not converge after {iters} iterations (relative residual {residual:.3e})")]
    SolverDiverged { iters: usize, residual: f64 },

    #[error("delta must be positive")]
    NonPositiveDelta,

    #[error("exponent p must be greater than 1, got {0}")]
    InvalidExponent(f64),

    #[error("Harnack ratio undefined: {0}")]
    HarnackUndefined(String),

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
