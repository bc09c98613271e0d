//! JSON scenario files: schema, loading, and conversion into core types.

use std::fs;
use std::path::{Path, PathBuf};

use etdelay_core::{
    parse_expr, BaselineMode, ControllerModeF64, Interp, LinearDelaySystemF64, Matrix, MatrixF64,
    ParseError, SimConfigF64, SynthesisOptions, SynthesisParamsF64, SystemMatrices,
    TriggerParamsF64,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{field}: {source}")]
    Expr {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("dimension mismatch between {first} and {second}: {message}")]
    Dimension {
        first: String,
        second: String,
        message: String,
    },
    #[error("{field}: {message}")]
    Value { field: String, message: String },
    #[error("unknown scenario {0:?} (try `scenario list`)")]
    UnknownScenario(String),
}

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub system: SystemSpec,
    pub delay: DelaySpec,
    /// Initial function components, expressions in `s` on `[−τ̄, 0]`.
    pub phi: Vec<String>,
    pub synthesis: SynthesisSpec,
    pub trigger: TriggerSpec,
    pub controller: ControllerSpec,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(rename = "A1")]
    pub a1: Rows,
    #[serde(rename = "A2")]
    pub a2: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySpec {
    /// Expression in `t`.
    pub tau: String,
    pub tau_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSpec {
    pub b: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineSpec {
    #[default]
    HistorySup,
    InitialValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSpec {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    #[serde(default)]
    pub baseline_mode: BaselineSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    Synthesize,
    Verify,
}

/// `verify` needs one of `P`/`Q` and one of `K`/`R`; `synthesize` ignores them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    pub mode: ModeSpec,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Rows>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Rows>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Rows>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpSpec {
    #[default]
    Linear,
    CubicHermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSpec {
    pub step: f64,
    pub horizon: f64,
    pub event_tol: f64,
    pub max_events: usize,
    pub interp: InterpSpec,
}

impl Default for SimSpec {
    fn default() -> Self {
        let d = SimConfigF64::new(0.01, 20.0);
        Self {
            step: d.step,
            horizon: d.horizon,
            event_tol: d.event_tol,
            max_events: d.max_events,
            interp: InterpSpec::Linear,
        }
    }
}

/// File names, resolved against the `--out` directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub trajectory_csv: String,
    pub events_csv: String,
    pub report: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            trajectory_csv: "trajectory.csv".into(),
            events_csv: "events.csv".into(),
            report: "report.txt".into(),
        }
    }
}

/// Core objects built from a validated config.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: LinearDelaySystemF64,
    pub synthesis: SynthesisParamsF64,
    pub trigger: TriggerParamsF64,
    pub mode: ControllerModeF64,
    pub sim: SimConfigF64,
}

/// Reads and validates a scenario file. Expressions are parsed and all
/// dimensions checked before returning.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg = parse_config(&text)?;
    cfg.build()?;
    Ok(cfg)
}

/// Parses JSON text without further validation.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Schema {
        path: match e.path().to_string().as_str() {
            "." => "config".to_string(),
            p => p.to_string(),
        },
        message: e.inner().to_string(),
    })
}

impl ScenarioConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn with_overrides(mut self, step: Option<f64>, horizon: Option<f64>) -> Self {
        if let Some(step) = step {
            self.sim.step = step;
        }
        if let Some(horizon) = horizon {
            self.sim.horizon = horizon;
        }
        self
    }

    pub fn build(&self) -> Result<Scenario, ConfigError> {
        let a1 = matrix("system.A1", &self.system.a1)?;
        let a2 = matrix("system.A2", &self.system.a2)?;
        let b = matrix("system.B", &self.system.b)?;
        let n = a1.rows();
        if !a1.is_square() {
            return Err(dim(
                "A1",
                "A1",
                format!("A1 must be square, got {}x{}", n, a1.cols()),
            ));
        }
        if a2.shape() != (n, n) {
            return Err(dim(
                "A1",
                "A2",
                format!("A1 is {n}x{n} but A2 is {}x{}", a2.rows(), a2.cols()),
            ));
        }
        if b.rows() != n {
            return Err(dim(
                "A1",
                "B",
                format!("A1 is {n}x{n} but B has {} rows", b.rows()),
            ));
        }
        let m = b.cols();
        if self.phi.len() != n {
            return Err(dim(
                "A1",
                "phi",
                format!("A1 is {n}x{n} but phi has {} components", self.phi.len()),
            ));
        }
        let matrices = SystemMatrices::new(a1, a2, b).map_err(|e| value("system", e))?;

        let tau = parse_expr(&self.delay.tau, "t").map_err(|source| ConfigError::Expr {
            field: "delay.tau".into(),
            source,
        })?;
        let phi = self
            .phi
            .iter()
            .enumerate()
            .map(|(i, p)| {
                parse_expr(p, "s").map_err(|source| ConfigError::Expr {
                    field: format!("phi[{i}]"),
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let system = LinearDelaySystemF64::new(matrices, tau, self.delay.tau_bar, phi)
            .map_err(|e| value("delay.tau_bar", e))?;

        let synthesis = SynthesisParamsF64::new(self.synthesis.b, self.synthesis.h)
            .map_err(|e| value("synthesis", e))?;
        let baseline = match self.trigger.baseline_mode {
            BaselineSpec::HistorySup => BaselineMode::HistorySup,
            BaselineSpec::InitialValue => BaselineMode::InitialValue,
        };
        let trigger = TriggerParamsF64::new(
            self.trigger.alpha,
            self.trigger.beta,
            self.trigger.sigma,
            baseline,
        )
        .map_err(|e| value("trigger", e))?;

        let mode = self.controller_mode(n, m)?;

        let sim = SimConfigF64 {
            step: self.sim.step,
            horizon: self.sim.horizon,
            event_tol: self.sim.event_tol,
            max_events: self.sim.max_events,
            interp: match self.sim.interp {
                InterpSpec::Linear => Interp::Linear,
                InterpSpec::CubicHermite => Interp::CubicHermite,
            },
        };
        sim.validate().map_err(|e| value("sim", e))?;

        Ok(Scenario {
            system,
            synthesis,
            trigger,
            mode,
            sim,
        })
    }

    fn controller_mode(&self, n: usize, m: usize) -> Result<ControllerModeF64, ConfigError> {
        let c = &self.controller;
        if c.mode == ModeSpec::Synthesize {
            let mut opts = SynthesisOptions::default();
            if let Some(seed) = c.seed {
                opts.seed = seed;
            }
            if let Some(restarts) = c.restarts {
                opts.restarts = restarts;
            }
            if let Some(max_iter) = c.max_iter {
                opts.max_iter = max_iter;
            }
            return Ok(ControllerModeF64::Synthesize(opts));
        }
        let square = |name: &str, rows: &Rows| -> Result<MatrixF64, ConfigError> {
            let mat = matrix(&format!("controller.{name}"), rows)?;
            if mat.shape() != (n, n) {
                return Err(dim(
                    name,
                    "A1",
                    format!("{name} is {}x{} but A1 is {n}x{n}", mat.rows(), mat.cols()),
                ));
            }
            Ok(mat)
        };
        let gain = |name: &str, rows: &Rows| -> Result<MatrixF64, ConfigError> {
            let mat = matrix(&format!("controller.{name}"), rows)?;
            if mat.shape() != (m, n) {
                return Err(dim(
                    name,
                    "B",
                    format!(
                        "{name} must be {m}x{n} to match B and A1, got {}x{}",
                        mat.rows(),
                        mat.cols()
                    ),
                ));
            }
            Ok(mat)
        };
        let p = match (&c.p, &c.q) {
            (Some(p), None) => square("P", p)?,
            (None, Some(q)) => square("Q", q)?
                .spd_inverse()
                .map_err(|e| value("controller.Q", e))?,
            (Some(_), Some(_)) => return Err(value("controller", "give either P or Q, not both")),
            (None, None) => return Err(value("controller", "verify mode needs P or Q")),
        };
        let k = match (&c.k, &c.r) {
            (Some(k), None) => gain("K", k)?,
            (None, Some(r)) => gain("R", r)?
                .try_mul(&p)
                .map_err(|e| value("controller.R", e))?,
            (Some(_), Some(_)) => return Err(value("controller", "give either K or R, not both")),
            (None, None) => return Err(value("controller", "verify mode needs K or R")),
        };
        Ok(ControllerModeF64::Verify { p, k })
    }
}

fn matrix(field: &str, rows: &Rows) -> Result<MatrixF64, ConfigError> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(value(field, "matrix must have at least one row and column"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != rows[0].len()) {
        return Err(value(
            &format!("{field}[{i}]"),
            format!(
                "row has {} entries, expected {}",
                rows[i].len(),
                rows[0].len()
            ),
        ));
    }
    Matrix::from_rows(rows).map_err(|e| value(field, e))
}

fn dim(first: &str, second: &str, message: String) -> ConfigError {
    ConfigError::Dimension {
        first: first.into(),
        second: second.into(),
        message,
    }
}

fn value(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Value {
        field: field.into(),
        message: message.to_string(),
    }
}
