//! Process exit codes.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | audit or verification found violations; bench pattern mismatch |
//! | 2 | no candidate satisfies the witnesses |
//! | 3 | iteration cap reached |
//! | 4 | numerical failure in the check step |
//! | 5 | candidate failed the sampling confirmation |
//! | 64 | usage error (bad flags, missing input file) |
//! | 65 | data error (malformed model or certificate, hash mismatch) |
//! | 66 | initial state outside the certified region |

pub const VIOLATIONS: u8 = 1;
pub const USAGE: u8 = 64;
pub const DATA: u8 = 65;
pub const OUTSIDE: u8 = 66;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { code: DATA, message: message.into() }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Self { code: USAGE, message: format!("{}: {e}", path.display()) }
    }
}

pub type CliResult<T> = Result<T, Failure>;
