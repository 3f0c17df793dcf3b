use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use super::SmtError;

/// Environment variable naming the default solver executable.
pub const SOLVER_ENV: &str = "LOOPSYNTH_SOLVER";

/// How to run the external solver.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub path: PathBuf,
    pub args: Vec<String>,
    /// Budget for one query.
    pub timeout: Duration,
    /// The solver understands `assert-soft`.
    pub supports_soft: bool,
    /// The solver answers `get-unsat-core` after `unsat`.
    pub supports_cores: bool,
    /// Raised by another thread to abort in-flight queries.
    pub cancel: Option<Arc<AtomicBool>>,
}

impl SolverConfig {
    /// Flags are chosen from the executable name: z3 reads the script from
    /// stdin with `-in -smt2` and supports soft assertions; anything else is
    /// fed the script on stdin with no flags and no soft assertions.
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let is_z3 = path
            .file_name()
            .and_then(|f| f.to_str())
            .is_some_and(|f| f.to_ascii_lowercase().contains("z3"));
        SolverConfig {
            args: if is_z3 {
                vec!["-in".into(), "-smt2".into()]
            } else {
                Vec::new()
            },
            path,
            timeout: Duration::from_secs(60),
            supports_soft: is_z3,
            supports_cores: true,
            cancel: None,
        }
    }

    /// `$LOOPSYNTH_SOLVER`, falling back to `z3` on the search path.
    pub fn from_env() -> Self {
        match std::env::var_os(SOLVER_ENV) {
            Some(p) if !p.is_empty() => Self::new(PathBuf::from(p)),
            _ => Self::new("z3"),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Result<Self, SmtError> {
        if timeout.is_zero() {
            return Err(SmtError::Config("timeout must be positive".into()));
        }
        self.timeout = timeout;
        Ok(self)
    }

    pub fn with_args(mut self, args: Vec<String>) -> Self {
        self.args = args;
        self
    }

    pub fn without_soft(mut self) -> Self {
        self.supports_soft = false;
        self
    }

    pub fn with_cancel(mut self, flag: Arc<AtomicBool>) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn is_cancelled(&self) -> bool {
        self.cancel.as_ref().is_some_and(|c| c.load(Ordering::Relaxed))
    }

    /// Whether the executable can be found, either as a path or on `PATH`.
    pub fn is_available(&self) -> bool {
        resolve_executable(&self.path).is_some()
    }
}

pub(crate) fn resolve_executable(p: &Path) -> Option<PathBuf> {
    if p.components().count() > 1 {
        return p.is_file().then(|| p.to_path_buf());
    }
    let paths = std::env::var_os("PATH")?;
    std::env::split_paths(&paths).map(|d| d.join(p)).find(|c| c.is_file())
}
