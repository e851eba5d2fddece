use thiserror::Error;

/// Errors raised by the channel, detection, analytics and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated its domain (non-positive distance, NaN input, ...).
    #[error("invalid {name} = {value}: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    /// The single-sample test is undefined because the signal is zero.
    #[error("degenerate detector: received signal {signal} must be > 0")]
    DegenerateDetector { signal: f64 },
    /// Every fusion branch carries zero weight, so the fused statistic has no variance.
    #[error("degenerate fusion: all branches are inert")]
    DegenerateFusion,
    #[error("at least one {0} is required")]
    Empty(&'static str),
    #[error("expected {expected} observations, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{0} relays exceed the enumeration limit")]
    TooManyBranches(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure(ok: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            reason,
        })
    }
}
