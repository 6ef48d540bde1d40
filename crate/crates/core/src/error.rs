use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies outside chart `{chart}`")]
    Domain { chart: String, point: [f64; 4] },
    #[error("point {point:?} is closer than {margin} to the boundary of chart `{chart}`")]
    Margin {
        chart: String,
        point: [f64; 4],
        margin: f64,
    },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("connection is not definite: {0}")]
    Definiteness(String),
    #[error("sign of the connection ({connection}) does not match sign of lambda ({lambda})")]
    Sign { connection: i8, lambda: f64 },
    #[error("orientation: {0}")]
    Orientation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("routes disagree: {0}")]
    Consistency(String),
    #[error("quadrature not converged: {coarse} vs {fine} (tolerance {tol})")]
    Convergence { coarse: f64, fine: f64, tol: f64 },
    #[error("support of the perturbation is not contained in the quadrature domain")]
    Support,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn finite_or<T>(ok: bool, value: T, what: &str) -> Result<T> {
    if ok {
        Ok(value)
    } else {
        Err(Error::Numeric(format!("non-finite {what}")))
    }
}
