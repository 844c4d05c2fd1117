use std::fmt;
use std::path::PathBuf;

/// Exit codes by error class.
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_MISSING: u8 = 3;
pub const EXIT_PARSE: u8 = 4;
pub const EXIT_NUMERIC: u8 = 5;

/// An upstream artifact a stage depends on is absent.
#[derive(Debug)]
pub struct MissingArtifact {
    pub path: PathBuf,
    pub hint: String,
}

impl fmt::Display for MissingArtifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "missing upstream artifact {}; {}", self.path.display(), self.hint)
    }
}

impl std::error::Error for MissingArtifact {}

/// Invalid configuration or command-line usage.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<MissingArtifact>() {
            return EXIT_MISSING;
        }
        if cause.is::<ConfigError>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<langrep::Error>() {
            return match e {
                langrep::Error::Parse { .. } | langrep::Error::Serialization(_) => EXIT_PARSE,
                langrep::Error::Validation(_) => EXIT_PARSE,
                langrep::Error::InvalidArgument(_) => EXIT_CONFIG,
                langrep::Error::Numerical(_) => EXIT_NUMERIC,
                langrep::Error::Io(_) => EXIT_OTHER,
            };
        }
    }
    EXIT_OTHER
}
