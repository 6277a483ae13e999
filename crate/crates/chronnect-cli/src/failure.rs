//! Process-level failure classification.
//!
//! Every command maps its errors onto three exit codes so scripts can
//! distinguish caller mistakes from bad inputs from failed checks:
//!
//! * 1: usage errors (unknown flags, unparseable flag values)
//! * 2: data errors (missing or malformed inputs, failed runs)
//! * 3: verification failures (a requested check did not hold)

use std::fmt;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Verification(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Verification(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) | Failure::Data(msg) | Failure::Verification(msg) => {
                f.write_str(msg)
            }
        }
    }
}

/// Library errors surface while operating on input data, so they map to
/// the data exit code. Flag values are validated up front by the commands
/// themselves and report usage errors before the library is involved.
impl From<chronnect::Error> for Failure {
    fn from(err: chronnect::Error) -> Self {
        Failure::Data(err.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::Data(err.to_string())
    }
}
