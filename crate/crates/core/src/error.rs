use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("no convergence after {iterations} iterations (last = {last}, residual = {residual}): {detail}")]
    Convergence {
        iterations: usize,
        last: f64,
        residual: f64,
        detail: String,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unstable queue: service {service} packets/frame does not exceed mean arrivals {arrivals} packets/frame")]
    Stability { service: f64, arrivals: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
