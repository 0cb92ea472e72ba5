use thiserror::Error;

use crate::ode::OdeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration failed at {at}: {source}")]
    Integration {
        at: f64,
        #[source]
        source: OdeError,
    },

    /// A characteristic left the configured bound before reaching its target.
    #[error("characteristic from ({start}, {initial}) escaped the bound at {reached}")]
    CharacteristicEscape {
        start: f64,
        initial: f64,
        reached: f64,
    },

    #[error("non-finite value {what} at grid index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("at grid index {index}: {source}")]
    AtGridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no periodic orbit found after {iterations} shooting iterations (residual {residual:e})")]
    NoPeriodicOrbit { iterations: usize, residual: f64 },

    #[error("solution blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn at_index(self, index: usize) -> Self {
        Error::AtGridPoint {
            index,
            source: Box::new(self),
        }
    }

    /// True for failures of the Lyapunov construction itself (escapes,
    /// integration breakdown along characteristics, shooting failures).
    pub fn is_construction_failure(&self) -> bool {
        match self {
            Error::CharacteristicEscape { .. }
            | Error::Integration { .. }
            | Error::NoPeriodicOrbit { .. } => true,
            Error::AtGridPoint { source, .. } => source.is_construction_failure(),
            _ => false,
        }
    }
}
