//! Library side of the `bqpt` command-line tool: option resolution, the
//! individual commands, and deterministic CSV/JSON output.

pub mod collapse;
pub mod dynamics;
pub mod exponents;
pub mod output;
pub mod selftest;
pub mod settings;
pub mod sweep;

use output::{Document, RunLog};
use settings::{CommandKind, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl From<bosonic_qpt::Error> for CliError {
    fn from(e: bosonic_qpt::Error) -> Self {
        match e {
            bosonic_qpt::Error::InvalidParams(m) => CliError::Usage(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

/// A finished command: the document plus whether every point and check
/// succeeded.
#[derive(Debug)]
pub struct Outcome {
    pub document: Document,
    pub clean: bool,
}

pub fn execute(settings: &Settings, log: &mut RunLog) -> Result<Outcome, CliError> {
    let (document, clean) = match settings.command {
        CommandKind::Sweep | CommandKind::Perturb => {
            let doc = sweep::run(settings, log);
            let clean = sweep::failed_rows(&doc) == 0;
            (doc, clean)
        }
        CommandKind::Exponents => {
            let doc = exponents::run(settings, log)?;
            let clean = doc.tables[0]
                .column("error")
                .is_some_and(|c| doc.tables[0].rows.iter().all(|r| r[c] == output::Cell::Empty));
            (doc, clean)
        }
        CommandKind::Collapse => (collapse::run(settings, log)?, true),
        CommandKind::PositiveP => (dynamics::run(settings, log)?, true),
        CommandKind::SelfTest => selftest::run(settings, log)?,
    };
    Ok(Outcome { document, clean })
}
