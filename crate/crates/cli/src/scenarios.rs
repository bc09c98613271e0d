//! Built-in scenarios for the two worked examples.

use crate::config::{
    ConfigError, ControllerSpec, DelaySpec, ModeSpec, OutputSpec, ScenarioConfig, SimSpec,
    SynthesisSpec, SystemSpec, TriggerSpec,
};

pub const BUILTIN_NAMES: [&str; 3] = ["example1", "example2-fig2", "example2-fig3"];

pub fn builtin(name: &str) -> Result<ScenarioConfig, ConfigError> {
    match name {
        "example1" => Ok(example1()),
        "example2-fig2" => Ok(example2(name, ["0.1", "1"])),
        "example2-fig3" => Ok(example2(name, ["-0.15*cos(3*pi*s/2)", "0.12*cos(pi*s)"])),
        other => Err(ConfigError::UnknownScenario(other.to_string())),
    }
}

/// Scalar plant with constant delay 16, checked with the gain `K = −0.2`
/// and `P = 1`.
fn example1() -> ScenarioConfig {
    ScenarioConfig {
        name: "example1".into(),
        system: SystemSpec {
            a1: vec![vec![0.0]],
            a2: vec![vec![-0.1]],
            b: vec![vec![1.0]],
        },
        delay: DelaySpec {
            tau: "16".into(),
            tau_bar: 16.0,
        },
        phi: vec!["1".into()],
        synthesis: SynthesisSpec { b: 0.1, h: 0.2 },
        trigger: TriggerSpec {
            alpha: 0.09,
            beta: 0.11,
            sigma: 0.1,
            baseline_mode: Default::default(),
        },
        controller: ControllerSpec {
            mode: ModeSpec::Verify,
            k: Some(vec![vec![-0.2]]),
            p: Some(vec![vec![1.0]]),
            q: None,
            r: None,
            seed: None,
            restarts: None,
            max_iter: None,
        },
        sim: SimSpec {
            step: 0.01,
            horizon: 40.0,
            ..SimSpec::default()
        },
        output: OutputSpec::default(),
    }
}

/// Second-order plant with the fast-varying delay `2 − sin(t²)`, checked with
/// the published `P` and `R` (so `K = R·P`).
fn example2(name: &str, phi: [&str; 2]) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        system: SystemSpec {
            a1: vec![vec![-1.0, -0.5], vec![3.0, 2.5]],
            a2: vec![vec![1.2, 2.0], vec![-0.4, -1.2]],
            b: vec![vec![1.0], vec![1.0]],
        },
        delay: DelaySpec {
            tau: "2 - sin(t^2)".into(),
            tau_bar: 3.0,
        },
        phi: phi.iter().map(|s| s.to_string()).collect(),
        synthesis: SynthesisSpec { b: 1.1, h: 0.21 },
        trigger: TriggerSpec {
            alpha: 0.1,
            beta: 1.0,
            sigma: 0.1,
            baseline_mode: Default::default(),
        },
        controller: ControllerSpec {
            mode: ModeSpec::Verify,
            k: None,
            p: Some(vec![vec![1.5274, 1.4575], vec![1.4575, 4.1300]]),
            q: None,
            r: Some(vec![vec![-0.8221, -0.7204]]),
            seed: None,
            restarts: None,
            max_iter: None,
        },
        sim: SimSpec {
            step: 0.01,
            horizon: 20.0,
            ..SimSpec::default()
        },
        output: OutputSpec::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_validate() {
        for name in BUILTIN_NAMES {
            let cfg = builtin(name).unwrap();
            assert_eq!(cfg.name, name);
            cfg.build().unwrap();
        }
    }

    #[test]
    fn example1_values() {
        let cfg = builtin("example1").unwrap();
        assert_eq!(cfg.delay.tau_bar, 16.0);
        assert_eq!(cfg.trigger.beta, 0.11);
        assert_eq!(cfg.phi, vec!["1".to_string()]);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            builtin("example3"),
            Err(ConfigError::UnknownScenario(_))
        ));
    }
}
