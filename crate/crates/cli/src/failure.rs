use std::fmt;

use sampler_core::Error;

/// Process exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self { code: EXIT_INTERNAL, message: message.into() }
    }

    pub fn verdict(message: impl Into<String>) -> Self {
        Self { code: EXIT_VERDICT, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let message = err.to_string();
        match err {
            Error::InsufficientSpan(_) => Failure::verdict(message),
            Error::MalformedTrace { .. } | Error::NoConstraintsLeft | Error::ZeroDirection => {
                Failure::internal(message)
            }
            _ => Failure::config(message),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::internal(format!("i/o error: {err}"))
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;
