use std::fs;
use std::path::{Path, PathBuf};

use etdelay_core::{design_controller, DesignReportF64, PipelineError, SimError};
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};
use crate::output::{events_csv, render_report, trajectory_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Design,
    Simulate,
    Report,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numeric failure: {0}")]
    Numeric(#[from] PipelineError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Write { .. } => 1,
        }
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub report: DesignReportF64,
    /// Text printed to standard output.
    pub text: String,
    pub written: Vec<PathBuf>,
}

/// `design` skips the simulation; `simulate` writes the two CSVs; `report`
/// simulates and writes the report file. Files go to `out_dir`
/// (default: current directory).
pub fn run(
    cfg: &ScenarioConfig,
    cmd: Command,
    out_dir: Option<&Path>,
) -> Result<RunOutput, CliError> {
    let sc = cfg.build()?;
    let sim = (cmd != Command::Design).then_some(&sc.sim);
    let dir = out_dir.unwrap_or(Path::new("."));

    let report = match design_controller(&sc.system, &sc.synthesis, &sc.trigger, &sc.mode, sim) {
        Ok(r) => r,
        Err(PipelineError::Sim(SimError::NonFinite { t, partial })) => {
            // keep what was computed before the blow-up
            if cmd == Command::Simulate {
                write_csvs(cfg, dir, &partial)?;
            }
            return Err(PipelineError::Sim(SimError::NonFinite { t, partial }).into());
        }
        Err(e) => return Err(e.into()),
    };

    let text = render_report(cfg, &report);
    let mut written = Vec::new();
    match cmd {
        Command::Design => {}
        Command::Simulate => {
            if let Some(res) = &report.sim {
                written = write_csvs(cfg, dir, res)?;
            }
        }
        Command::Report => {
            let path = dir.join(&cfg.output.report);
            write(&path, &text)?;
            written.push(path);
        }
    }
    Ok(RunOutput {
        report,
        text,
        written,
    })
}

fn write_csvs(
    cfg: &ScenarioConfig,
    dir: &Path,
    res: &etdelay_core::SimResultF64,
) -> Result<Vec<PathBuf>, CliError> {
    let traj = dir.join(&cfg.output.trajectory_csv);
    let events = dir.join(&cfg.output.events_csv);
    write(&traj, &trajectory_csv(res))?;
    write(&events, &events_csv(res))?;
    Ok(vec![traj, events])
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| CliError::Write {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}
