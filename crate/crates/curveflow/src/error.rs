//! Crate-wide error type and process exit codes.

/// Errors produced anywhere in the crate.
///
/// Each variant maps to a distinct process exit code so that scripted callers
/// can tell configuration mistakes apart from solver blow-ups and tolerance
/// failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid input: bad configuration, inconsistent grids, non-convex or
    /// non-closed curve data, out-of-range parameters.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The time integration aborted: positivity was lost or the conserved
    /// energy drifted past the configured abort threshold.
    #[error("solver abort: {0}")]
    Solver(String),

    /// A requested tolerance check failed (reference comparison, bound sweep).
    #[error("tolerance violation: {0}")]
    Tolerance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code for the CLI: 1 validation, 2 solver abort, 3 tolerance.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) | Error::Io(_) => 1,
            Error::Solver(_) => 2,
            Error::Tolerance(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_distinguish_failure_classes() {
        assert_eq!(Error::Invalid("x".into()).exit_code(), 1);
        assert_eq!(Error::Solver("x".into()).exit_code(), 2);
        assert_eq!(Error::Tolerance("x".into()).exit_code(), 3);
        let io = Error::from(std::io::Error::new(std::io::ErrorKind::NotFound, "gone"));
        assert_eq!(io.exit_code(), 1);
    }

    #[test]
    fn messages_carry_context() {
        let err = Error::Solver("positivity lost at t = 0.5".into());
        assert!(err.to_string().contains("positivity lost"));
    }
}
