//! Exit statuses and the one-line error record.

use serde::Serialize;
use symchord_core::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_EXPECTATION: i32 = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, kind: "config", message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, kind: "numerical", message: message.into() }
    }

    pub fn expectation(message: impl Into<String>) -> Self {
        Self { code: EXIT_EXPECTATION, kind: "expectation", message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, kind: "io", message: message.into() }
    }

    /// `{"error":{...}}` on one line.
    pub fn line(&self) -> String {
        let one_line = Self { message: self.message.replace(['\n', '\r'], " "), ..self.clone() };
        serde_json::json!({ "error": one_line }).to_string()
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownSystem(_)
            | Error::UnknownInvolution(_)
            | Error::InvalidLabel { .. }
            | Error::InvalidComplex(_)
            | Error::WindowTooSmall
            | Error::SizeCap { .. }
            | Error::InvalidArgument(_)
            | Error::AboveCritical(_) => Failure::config(e.to_string()),
            _ => Failure::numerical(e.to_string()),
        }
    }
}
