use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integration diverged after t = {last_good_time}")]
    Diverged { last_good_time: f64 },

    #[error("no event before t = {t_max}")]
    NoEvent { t_max: f64 },

    #[error("no sign change on bracket [{a}, {b}] (g(a) = {ga}, g(b) = {gb})")]
    Bracket { a: f64, b: f64, ga: f64, gb: f64 },

    #[error("non-finite integrand value at {at}")]
    NonFinite { at: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter outside validated regime: {0}")]
    OutOfRegime(String),

    #[error("vector field not positive on the state interval (F({x}) = {value})")]
    Positivity { x: f64, value: f64 },

    #[error("no convergence to a limit cycle after {returns} section returns")]
    Basin { returns: usize },

    #[error("point not in the basin of the limit cycle: {0}")]
    NotInBasin(String),

    #[error("finite-difference sensitivity did not converge at theta = {theta}")]
    Sensitivity { theta: f64 },

    #[error("excitatory assumption violated: PRC({theta}) = {value} < 0")]
    Excitatory { theta: f64, value: f64 },

    #[error("order-preserving assumption violated: min PRC' = {min_slope} <= -1")]
    OrderPreservation { min_slope: f64 },

    #[error("fixed-point iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("grid mismatch: {0} vs {1} cells")]
    GridMismatch(usize, usize),

    #[error("no stationary density: {0}")]
    NoStationary(String),

    #[error("NaN encountered in phase dynamics at t = {t}")]
    NaN { t: f64 },
}
