use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Inconclusive(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Inconclusive(_) => 3,
        }
    }

    pub fn usage(err: impl Display) -> Self {
        CliError::Usage(err.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Where a command's report goes. `-` means stdout, in which case the
/// human-readable summary moves to stderr.
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Sink { out }
    }

    fn is_stdout(&self) -> bool {
        self.out.as_deref() == Some(Path::new("-"))
    }

    pub fn say(&self, line: impl Display) {
        if self.is_stdout() {
            eprintln!("{line}");
        } else {
            println!("{line}");
        }
    }

    /// Runs `write` against the target, if any.
    pub fn write<F>(&self, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> io::Result<()>,
    {
        let Some(path) = &self.out else { return Ok(()) };
        let io_err = |source| CliError::Io { path: path.display().to_string(), source };
        if self.is_stdout() {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).and_then(|()| lock.flush()).map_err(io_err)
        } else {
            let file = File::create(path).map_err(io_err)?;
            let mut w = BufWriter::new(file);
            write(&mut w).and_then(|()| w.flush()).map_err(io_err)
        }
    }

    pub fn write_json<T: serde::Serialize>(&self, value: &T) -> Result<(), CliError> {
        self.write(|w| {
            serde_json::to_writer(&mut *w, value)?;
            writeln!(w)
        })
    }
}

pub fn csv_writer(w: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::Writer::from_writer(w)
}
