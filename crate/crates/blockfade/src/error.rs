//! Error taxonomy shared by the library and the command-line interface.
//!
//! Three classes matter to callers:
//!
//! * [`Error::Validation`] — an input violated a mathematical hypothesis or a
//!   structural invariant (non-PSD spectral density, irregular process where
//!   regularity is required, ...).  The message names the violated hypothesis.
//!   CLI exit code 2.
//! * [`Error::MalformedInput`] — the input could not be parsed at all; carries
//!   the position of the first offending byte when known.  CLI exit code 3.
//! * [`Error::Unsupported`] — a combination of options that is deliberately
//!   not implemented (the message says why).  CLI exit code 2.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a mathematical hypothesis or structural invariant.
    /// The message names the hypothesis, e.g.
    /// `"fading number requires a regular process: det Sigma(inf) > 0"`.
    #[error("validation: {0}")]
    Validation(String),

    /// Input text could not be parsed; `line`/`column` locate the first
    /// offending byte (1-based), 0 when unknown.
    #[error("malformed input at line {line}, column {column}: {detail}")]
    MalformedInput {
        detail: String,
        line: usize,
        column: usize,
    },

    /// A deliberately unimplemented combination; the message explains why.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A numerical procedure failed to reach its tolerance.
    #[error("numerical: {0}")]
    Numerical(String),

    /// Underlying I/O failure.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for [`Error::Validation`].
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Convenience constructor for [`Error::Unsupported`].
    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    /// Convenience constructor for [`Error::Numerical`].
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Unsupported(_) | Error::Numerical(_) => 2,
            Error::MalformedInput { .. } => 3,
            Error::Io(_) => 1,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_syntax() || err.is_eof() {
            Error::MalformedInput {
                detail: err.to_string(),
                line: err.line(),
                column: err.column(),
            }
        } else {
            // Well-formed JSON with the wrong shape is a validation problem,
            // not a parse problem.
            Error::Validation(format!("model description does not match schema: {err}"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_documented_contract() {
        assert_eq!(Error::validation("x").exit_code(), 2);
        assert_eq!(Error::unsupported("x").exit_code(), 2);
        assert_eq!(Error::numerical("x").exit_code(), 2);
        let parse = Error::MalformedInput {
            detail: "boom".into(),
            line: 3,
            column: 7,
        };
        assert_eq!(parse.exit_code(), 3);
    }

    #[test]
    fn json_syntax_errors_become_malformed_input_with_position() {
        let err = serde_json::from_str::<serde_json::Value>("{\"a\": ]").unwrap_err();
        let converted = Error::from(err);
        match converted {
            Error::MalformedInput { line, column, .. } => {
                assert_eq!(line, 1, "single-line input must report line 1");
                assert!(column > 0, "column of the offending byte must be reported");
            }
            other => panic!("expected MalformedInput, got {other:?}"),
        }
    }

    #[test]
    fn json_shape_errors_become_validation() {
        #[derive(serde::Deserialize, Debug)]
        #[allow(dead_code)]
        struct Shape {
            x: f64,
        }
        let err = serde_json::from_str::<Shape>("{\"x\": \"nope\"}").unwrap_err();
        assert!(matches!(Error::from(err), Error::Validation(_)));
    }
}
