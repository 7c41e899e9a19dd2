use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {re} {im:+}i is outside the domain of {what}")]
    Domain {
        what: &'static str,
        re: f64,
        im: f64,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("quadrature budget of {budget} evaluations exhausted (estimated error {error:e}, target {target:e})")]
    Quadrature {
        budget: usize,
        error: f64,
        target: f64,
    },

    #[error("resolvent denominator {magnitude:e} is below the divergence guard")]
    Divergent { magnitude: f64 },

    #[error("no sign change of {what} in [{lo:e}, {hi:e}]")]
    Bracket {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("at t = {t:e} s: {source}")]
    AtTime { t: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn domain(what: &'static str, s: num_complex::Complex64) -> Self {
        Error::Domain {
            what,
            re: s.re,
            im: s.im,
        }
    }

    /// True for failures of an iterative or quadrature method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. }
            | Error::Quadrature { .. }
            | Error::Divergent { .. }
            | Error::Bracket { .. } => true,
            Error::AtTime { source, .. } => source.is_numerical(),
            Error::InvalidParameter(_) | Error::Domain { .. } => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
