//! One-shot solver subprocesses under a wall-clock deadline.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use super::{SmtError, SolverConfig};

pub(crate) enum RunResult {
    Finished(String),
    TimedOut,
}

/// Feeds `script` to the solver and collects its stdout. The process is
/// killed once `timeout` elapses or the config's cancel flag is raised.
pub(crate) fn run_script(cfg: &SolverConfig, script: &str, timeout: Duration) -> Result<RunResult, SmtError> {
    if cfg.is_cancelled() {
        return Err(SmtError::Cancelled);
    }
    let mut child = Command::new(&cfg.path)
        .args(&cfg.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SmtError::Spawn {
            path: cfg.path.display().to_string(),
            source: e,
        })?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let body = script.to_owned();
    // A solver that exits early closes the pipe; that is not an error here.
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(body.as_bytes());
    });
    let reader = thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    let err_reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });

    let deadline = Instant::now() + timeout;
    let mut nap = Duration::from_millis(1);
    let status = loop {
        if let Some(st) = child.try_wait()? {
            break Some(st);
        }
        if cfg.is_cancelled() || Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        thread::sleep(nap);
        nap = (nap * 2).min(Duration::from_millis(20));
    };
    let Some(st) = status else {
        // a killed solver may leave descendants holding the pipes open, so
        // the I/O threads are not joined
        return if cfg.is_cancelled() {
            Err(SmtError::Cancelled)
        } else {
            Ok(RunResult::TimedOut)
        };
    };
    let _ = writer.join();
    let out = reader.join().expect("reader thread")?;
    let err = err_reader.join().expect("stderr thread");
    if out.trim().is_empty() {
        return Err(SmtError::Process(format!(
            "solver exited with {st} and no output{}",
            if err.trim().is_empty() {
                String::new()
            } else {
                format!(": {}", err.trim())
            }
        )));
    }
    Ok(RunResult::Finished(out))
}
