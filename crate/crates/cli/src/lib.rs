//! Command-line surface over the tilted-retrieval simulation: parameter
//! plumbing, CSV spectra, 16-bit PGM images, and the oracle self-test.
//!
//! The binary adds nothing beyond argument parsing; everything testable
//! lives here. Failures carry one of three exit classes so scripts can
//! distinguish a bad parameter (2) from a numerical inconsistency the run
//! detected in itself (3) from an I/O problem (4).

use std::fmt;

pub mod cfg;
pub mod csvio;
pub mod pgm;
pub mod run;

/// CLI-level failure, bucketed by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit 2: bad flag, config key, or parameter value.
    Config(String),
    /// Exit 3: the run contradicted itself numerically.
    Numerical(String),
    /// Exit 4: filesystem trouble.
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    /// Single-line rendering for the machine-parsable "ERROR:" channel.
    pub fn message(&self) -> String {
        let raw = match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Io(m) => m,
        };
        raw.replace('\n', "; ")
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message())
    }
}

impl From<oamtilt_core::Error> for Failure {
    fn from(e: oamtilt_core::Error) -> Self {
        use oamtilt_core::Error::*;
        match e {
            // parameter and grid choices the caller controls
            InvalidGrid(_) | InvalidParameter(_) | GridTruncatesMode { .. } | RangeCap { .. }
            | AliasingRisk { .. } | FresnelAliasing { .. } | NoRing | Domain(_) => {
                Failure::Config(e.to_string())
            }
            // results that came out degenerate or self-inconsistent
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}
