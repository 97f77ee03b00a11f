use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use crate::error::{Error, Result};

/// What a finished or killed solver left behind.
#[derive(Debug)]
pub struct RunOutcome {
    pub stdout: String,
    pub stderr: String,
    /// `None` when the process was killed at the deadline.
    pub status: Option<ExitStatus>,
    pub timed_out: bool,
    pub elapsed: Duration,
}

/// Runs `argv` in `dir`, killing it after `timeout`. Output goes through
/// files so a chatty solver can never block on a full pipe.
pub fn run_with_timeout(argv: &[String], dir: &Path, timeout: Duration) -> Result<RunOutcome> {
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| Error::Solver("empty solver command".into()))?;
    let out_path = dir.join("solver.stdout");
    let err_path = dir.join("solver.stderr");
    let stdout = File::create(&out_path).map_err(|e| Error::file(&out_path, e))?;
    let stderr = File::create(&err_path).map_err(|e| Error::file(&err_path, e))?;
    let start = Instant::now();
    log::debug!("running {argv:?}");
    let mut child = Command::new(program)
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::null())
        .stdout(stdout)
        .stderr(stderr)
        .spawn()
        .map_err(|e| Error::Solver(format!("cannot start {program}: {e}")))?;
    let (status, timed_out) = match child.wait_timeout(timeout)? {
        Some(status) => (Some(status), false),
        None => {
            log::warn!("{program} hit the {:.1}s limit; stopping it", timeout.as_secs_f64());
            let _ = child.kill();
            child.wait()?;
            (None, true)
        }
    };
    Ok(RunOutcome {
        stdout: read_lossy(&out_path)?,
        stderr: read_lossy(&err_path)?,
        status,
        timed_out,
        elapsed: start.elapsed(),
    })
}

pub(crate) fn read_lossy(path: &PathBuf) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}
