//! On-disk session records: one directory per session holding the config,
//! the target frame, an append-only session log and the final report.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{SessionConfig, SessionError, SessionLogRecord};
use crate::evaluation::SessionReport;
use crate::gateway::{write_poselog, EstimatedFrame};

pub const SESSIONS_DIR_ENV: &str = "COREBODY_SESSIONS_DIR";
pub const DEFAULT_SESSIONS_DIR: &str = "sessions";

pub const CONFIG_FILE: &str = "config.json";
pub const TARGET_FILE: &str = "target.poselog";
pub const LOG_FILE: &str = "session.poselog";
pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "rmse.csv";

#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

impl SessionStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// `$COREBODY_SESSIONS_DIR`, or `./sessions`.
    pub fn from_env() -> Self {
        Self::new(std::env::var_os(SESSIONS_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_SESSIONS_DIR.into()))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Creates the next free `session-NNNN` directory.
    pub fn create_session(&self) -> Result<SessionDir, SessionError> {
        fs::create_dir_all(&self.root)?;
        for n in 1.. {
            let path = self.root.join(format!("session-{n:04}"));
            match fs::create_dir(&path) {
                Ok(()) => return Ok(SessionDir { path }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e.into()),
            }
        }
        unreachable!("session numbering exhausted")
    }
}

#[derive(Debug, Clone)]
pub struct SessionDir {
    path: PathBuf,
}

impl SessionDir {
    pub fn open(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write_config(&self, config: &SessionConfig) -> Result<(), SessionError> {
        fs::write(self.path.join(CONFIG_FILE), config.to_json())?;
        Ok(())
    }

    pub fn write_target(&self, frame: &EstimatedFrame) -> Result<(), SessionError> {
        write_poselog([frame], BufWriter::new(File::create(self.path.join(TARGET_FILE))?))?;
        Ok(())
    }

    pub fn open_log(&self) -> Result<SessionLogWriter, SessionError> {
        let file = OpenOptions::new().create(true).append(true).open(self.path.join(LOG_FILE))?;
        Ok(SessionLogWriter { out: BufWriter::new(file) })
    }

    pub fn write_report(&self, report: &SessionReport) -> Result<(), SessionError> {
        fs::write(self.path.join(REPORT_FILE), report.to_json())?;
        fs::write(self.path.join(CSV_FILE), report.to_csv())?;
        Ok(())
    }

    pub fn log_path(&self) -> PathBuf {
        self.path.join(LOG_FILE)
    }

    pub fn report_path(&self) -> PathBuf {
        self.path.join(REPORT_FILE)
    }

    pub fn target_path(&self) -> PathBuf {
        self.path.join(TARGET_FILE)
    }
}

/// Appends one JSON line per frame; each line is flushed so a crashed
/// session leaves a readable log.
pub struct SessionLogWriter {
    out: BufWriter<File>,
}

impl SessionLogWriter {
    pub fn append(&mut self, record: &SessionLogRecord) -> Result<(), SessionError> {
        serde_json::to_writer(&mut self.out, record).map_err(std::io::Error::other)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}
