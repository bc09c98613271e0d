//! End-to-end design procedure: obtain a controller from the LMI (or check a
//! given one), check the stability hypotheses, derive the decay rate from
//! `b + h − σ = b·e^{λτ̄} + λ + α`, compute the dwell bound, optionally
//! simulate, and certify `V(t) ≤ ‖V₀‖_τ̄·e^{−ηt}` on the simulated run.

use std::thread;

use thiserror::Error;

use crate::ddesim::{simulate, LinearDelaySystem, SimConfig, SimError, SimResult};
use crate::halanay::{
    certify_bound_with_slack, solve_lambda, BaselineMode, Certification, HalanayError,
    HalanayParams, HalanayRate, CERTIFY_SLACK,
};
use crate::linalg::Matrix;
use crate::lmi::{self, ControllerDesign, LmiError, SynthesisOptions, SynthesisParams};
use crate::scalar::Real;
use crate::trigger::{DwellReport, TriggerConfig, TriggerError, TriggerParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Lmi(#[from] LmiError),
    #[error(transparent)]
    Trigger(#[from] TriggerError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Halanay(#[from] HalanayError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerMode<T> {
    /// Solve the LMI for `(Q, R)`.
    Synthesize(SynthesisOptions),
    /// Check a supplied `P` and `K` (the LMI is assembled with `Q = P⁻¹`, `R = K·Q`).
    Verify { p: Matrix<T>, k: Matrix<T> },
}

impl<T> ControllerMode<T> {
    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerMode::Synthesize(_) => "synthesize",
            ControllerMode::Verify { .. } => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmiStatus {
    /// `λ_max < −margin`.
    Strict,
    /// `|λ_max|` within round-off of zero: negative semidefinite only.
    Marginal,
    Infeasible,
}

impl LmiStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LmiStatus::Strict => "strict",
            LmiStatus::Marginal => "marginal",
            LmiStatus::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Regime flags are reported but do not affect validity.
    pub informational: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport<T> {
    pub mode: &'static str,
    pub controller: Option<ControllerDesign<T>>,
    pub lmi_max_eig: Option<T>,
    pub lmi_status: LmiStatus,
    pub synthesis: SynthesisParams<T>,
    pub trigger: TriggerParams<T>,
    pub tau_bar: T,
    /// `a = b + h − σ`.
    pub a: T,
    pub rate: Option<HalanayRate<T>>,
    pub dwell: Option<DwellReport<T>>,
    pub parameter_checks: Vec<ParameterCheck>,
    pub sim: Option<SimResult<T>>,
    pub bound_certification: Option<Certification<T>>,
    pub warnings: Vec<String>,
}

impl<T: Real> DesignReport<T> {
    /// All hypotheses hold (informational flags excluded).
    pub fn is_valid(&self) -> bool {
        self.parameter_checks
            .iter()
            .filter(|c| !c.informational)
            .all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&'static str> {
        self.parameter_checks
            .iter()
            .filter(|c| !c.informational && !c.passed)
            .map(|c| c.name)
            .collect()
    }

    pub fn check(&self, name: &str) -> Option<&ParameterCheck> {
        self.parameter_checks.iter().find(|c| c.name == name)
    }
}

/// Zero-tolerance for classifying `λ_max` as marginal, relative to `‖M‖`.
const MARGINAL_REL: f64 = 1e-9;

/// Runs the whole procedure. Failed hypotheses are recorded in the report and
/// do not stop the simulation; a missing controller does.
pub fn design_controller<T: Real>(
    sys: &LinearDelaySystem<T>,
    sp: &SynthesisParams<T>,
    params: &TriggerParams<T>,
    mode: &ControllerMode<T>,
    sim: Option<&SimConfig<T>>,
) -> Result<DesignReport<T>, PipelineError> {
    let matrices = &sys.matrices;
    let mut warnings = Vec::new();
    let mut checks = Vec::new();

    let margin = match mode {
        ControllerMode::Synthesize(opts) => T::lit(opts.margin),
        ControllerMode::Verify { .. } => T::lit(lmi::DEFAULT_MARGIN),
    };
    let controller = match mode {
        ControllerMode::Synthesize(opts) => match lmi::synthesize_gain(matrices, sp, opts) {
            Ok(d) => Ok(d),
            Err(LmiError::Infeasible { best_max_eig }) => Err(best_max_eig),
            Err(e) => return Err(e.into()),
        },
        ControllerMode::Verify { p, k } => Ok(ControllerDesign::from_p_k(
            matrices,
            sp,
            p.clone(),
            k.clone(),
        )?),
    };

    let (controller, lmi_max_eig, lmi_status) = match controller {
        Ok(d) => {
            let m = lmi::build_lmi(matrices, sp, &d.q, &d.r)?;
            let zero_tol = T::lit(MARGINAL_REL) * m.max_abs().max(T::one());
            let status = if d.lmi_max_eig < -margin {
                LmiStatus::Strict
            } else if d.lmi_max_eig <= zero_tol {
                LmiStatus::Marginal
            } else {
                LmiStatus::Infeasible
            };
            let eig = d.lmi_max_eig;
            (Some(d), Some(eig), status)
        }
        Err(best) => {
            warnings.push(format!(
                "LMI synthesis found no feasible point (best max eigenvalue {best:e}); this is not a proof of infeasibility"
            ));
            (None, Some(T::lit(best)), LmiStatus::Infeasible)
        }
    };
    checks.push(ParameterCheck {
        name: "lmi_negative_definite",
        passed: lmi_status != LmiStatus::Infeasible,
        informational: false,
        detail: match (lmi_status, lmi_max_eig) {
            (s, Some(e)) => format!("{} (max eigenvalue {:e})", s.as_str(), e.as_f64()),
            (s, None) => s.as_str().to_string(),
        },
    });
    if lmi_status == LmiStatus::Marginal {
        warnings.push(
            "LMI holds only as a semidefinite inequality; the Lyapunov decrease argument still applies"
                .into(),
        );
    }

    let h_ok = sp.h > params.alpha + params.sigma;
    checks.push(ParameterCheck {
        name: "h_gt_alpha_plus_sigma",
        passed: h_ok,
        informational: false,
        detail: format!(
            "h = {} vs alpha + sigma = {}",
            sp.h,
            params.alpha + params.sigma
        ),
    });

    let a = sp.b + sp.h - params.sigma;
    let halanay = HalanayParams::new(a, sp.b, params.alpha, params.beta, sys.tau_bar);
    checks.push(ParameterCheck {
        name: "a_gt_b_plus_alpha",
        passed: halanay.is_ok(),
        informational: false,
        detail: format!(
            "a = b + h - sigma = {a} vs b + alpha = {}",
            sp.b + params.alpha
        ),
    });
    let rate = halanay.as_ref().ok().map(solve_lambda);
    if let Some(rate) = &rate {
        checks.push(ParameterCheck {
            name: "beta_le_lambda",
            passed: rate.beta_within_lambda(params.beta),
            informational: true,
            detail: format!("beta = {} vs lambda = {}", params.beta, rate.lambda),
        });
    }

    let trigger_cfg = controller
        .as_ref()
        .map(|d| TriggerConfig::new(*params, d.p.clone(), matrices.b().clone(), d.k.clone()))
        .transpose()?;

    let mut dwell = match (&trigger_cfg, &rate) {
        (Some(cfg), Some(rate)) => Some(DwellReport::new(matrices, cfg, rate, sys.tau_bar)?),
        _ => None,
    };

    let mut sim_result = None;
    if let Some(sim_cfg) = sim {
        match &trigger_cfg {
            Some(cfg) => {
                if checks.iter().any(|c| !c.informational && !c.passed) {
                    warnings
                        .push("hypotheses violated; simulation run for exploration only".into());
                }
                let res = simulate(sys, cfg, sim_cfg)?;
                if res.zeno_guard_hit {
                    warnings.push("Zeno guard triggered; simulation stopped early".into());
                }
                sim_result = Some(res);
            }
            None => warnings.push("no controller available; simulation skipped".into()),
        }
    }

    let mut certification = None;
    if let (Some(res), Some(rate)) = (&sim_result, &rate) {
        let (t, v) = res.v_series();
        certification = Some(certify_bound_with_slack(
            &t,
            &v,
            sys.tau_bar,
            rate.eta,
            BaselineMode::HistorySup,
            T::lit(CERTIFY_SLACK),
        )?);
        if let Some(d) = dwell.as_mut() {
            d.observed_min_gap = res.min_gap();
        }
    }

    Ok(DesignReport {
        mode: mode.as_str(),
        controller,
        lmi_max_eig,
        lmi_status,
        synthesis: *sp,
        trigger: *params,
        tau_bar: sys.tau_bar,
        a,
        rate,
        dwell,
        parameter_checks: checks,
        sim: sim_result,
        bound_certification: certification,
        warnings,
    })
}

/// One entry of a parameter sweep.
#[derive(Debug, Clone)]
pub struct DesignJob<T> {
    pub system: LinearDelaySystem<T>,
    pub synthesis: SynthesisParams<T>,
    pub trigger: TriggerParams<T>,
    pub mode: ControllerMode<T>,
    pub sim: Option<SimConfig<T>>,
}

/// Runs independent jobs on scoped threads; results keep the input order.
pub fn design_batch<T: Real>(jobs: &[DesignJob<T>]) -> Vec<Result<DesignReport<T>, PipelineError>> {
    thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|job| {
                scope.spawn(move || {
                    design_controller(
                        &job.system,
                        &job.synthesis,
                        &job.trigger,
                        &job.mode,
                        job.sim.as_ref(),
                    )
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("design job panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprparse::parse_expr;
    use crate::lmi::SystemMatrices;
    use approx::assert_relative_eq;

    fn scalar(v: f64) -> Matrix<f64> {
        Matrix::from_diag(&[v])
    }

    fn example1() -> LinearDelaySystem<f64> {
        LinearDelaySystem::new(
            SystemMatrices::new(scalar(0.0), scalar(-0.1), scalar(1.0)).unwrap(),
            parse_expr("16", "t").unwrap(),
            16.0,
            vec![parse_expr("1", "s").unwrap()],
        )
        .unwrap()
    }

    fn example2() -> LinearDelaySystem<f64> {
        LinearDelaySystem::new(
            SystemMatrices::new(
                Matrix::from_rows(&[[-1.0, -0.5], [3.0, 2.5]]).unwrap(),
                Matrix::from_rows(&[[1.2, 2.0], [-0.4, -1.2]]).unwrap(),
                Matrix::from_rows(&[[1.0], [1.0]]).unwrap(),
            )
            .unwrap(),
            parse_expr("2 - sin(t^2)", "t").unwrap(),
            3.0,
            vec![
                parse_expr("0.1", "s").unwrap(),
                parse_expr("1", "s").unwrap(),
            ],
        )
        .unwrap()
    }

    fn example2_published() -> ControllerMode<f64> {
        let p = Matrix::from_rows(&[[1.5274, 1.4575], [1.4575, 4.1300]]).unwrap();
        let r = Matrix::from_rows(&[[-0.8221, -0.7204]]).unwrap();
        let k = r.try_mul(&p).unwrap();
        ControllerMode::Verify { p, k }
    }

    #[test]
    fn example1_verify_is_marginal_but_valid() {
        let sp = SynthesisParams::new(0.1, 0.2).unwrap();
        let params = TriggerParams::new(0.09, 0.11, 0.1, BaselineMode::HistorySup).unwrap();
        let mode = ControllerMode::Verify {
            p: scalar(1.0),
            k: scalar(-0.2),
        };
        let sim = SimConfig::new(0.01, 40.0);
        let rep = design_controller(&example1(), &sp, &params, &mode, Some(&sim)).unwrap();
        assert_eq!(rep.lmi_status, LmiStatus::Marginal);
        assert!(rep.is_valid(), "{:?}", rep.failed_checks());
        assert_relative_eq!(rep.a, 0.2, epsilon = 1e-15);
        let rate = rep.rate.unwrap();
        assert_relative_eq!(rate.lambda, 0.003774578972078673, max_relative = 1e-9);
        assert!(!rep.check("beta_le_lambda").unwrap().passed);
        let dwell = rep.dwell.unwrap();
        assert_eq!(dwell.regime, crate::trigger::DwellRegime::ZenoExcludedOnly);
        assert!(dwell.observed_min_gap.is_some());
        assert!(rep.bound_certification.unwrap().passed);
        assert!(rep.warnings.iter().any(|w| w.contains("semidefinite")));
    }

    #[test]
    fn example2_published_is_strict() {
        let sp = SynthesisParams::new(1.1, 0.21).unwrap();
        let params = TriggerParams::new(0.1, 1.0, 0.1, BaselineMode::HistorySup).unwrap();
        let sim = SimConfig::new(0.005, 20.0);
        let rep = design_controller(&example2(), &sp, &params, &example2_published(), Some(&sim))
            .unwrap();
        assert_eq!(rep.lmi_status, LmiStatus::Strict);
        assert!(rep.is_valid());
        let rate = rep.rate.unwrap();
        assert_relative_eq!(rate.lambda, 0.00231937432997115, max_relative = 1e-9);
        assert_eq!(rate.eta, rate.lambda);
        let cert = rep.bound_certification.unwrap();
        assert!(cert.passed, "max ratio {}", cert.max_ratio);
        assert!(rep.sim.unwrap().events.len() > 1);
    }

    #[test]
    fn violated_hypotheses_are_reported_not_fatal() {
        let sp = SynthesisParams::new(0.1, 0.15).unwrap();
        let params = TriggerParams::new(0.09, 0.11, 0.1, BaselineMode::HistorySup).unwrap();
        let mode = ControllerMode::Verify {
            p: scalar(1.0),
            k: scalar(-0.2),
        };
        let sim = SimConfig::new(0.05, 5.0);
        let rep = design_controller(&example1(), &sp, &params, &mode, Some(&sim)).unwrap();
        assert!(!rep.is_valid());
        assert!(rep.failed_checks().contains(&"h_gt_alpha_plus_sigma"));
        assert!(rep.failed_checks().contains(&"a_gt_b_plus_alpha"));
        assert!(rep.rate.is_none());
        assert!(rep.sim.is_some());
        assert!(rep.warnings.iter().any(|w| w.contains("exploration")));
    }

    #[test]
    fn synthesized_example2_is_strict() {
        let sp = SynthesisParams::new(1.1, 0.21).unwrap();
        let params = TriggerParams::new(0.1, 1.0, 0.1, BaselineMode::HistorySup).unwrap();
        let mode = ControllerMode::Synthesize(SynthesisOptions::default());
        let rep = design_controller(&example2(), &sp, &params, &mode, None).unwrap();
        assert_eq!(rep.lmi_status, LmiStatus::Strict);
        assert!(rep.controller.is_some());
        assert!(rep.sim.is_none() && rep.bound_certification.is_none());
    }

    #[test]
    fn batch_preserves_order() {
        let params = TriggerParams::new(0.09, 0.11, 0.1, BaselineMode::HistorySup).unwrap();
        let jobs: Vec<_> = [0.2, 0.3, 0.4]
            .iter()
            .map(|&h| DesignJob {
                system: example1(),
                synthesis: SynthesisParams::new(0.1, h).unwrap(),
                trigger: params,
                mode: ControllerMode::Verify {
                    p: scalar(1.0),
                    k: scalar(-0.2),
                },
                sim: None,
            })
            .collect();
        let out = design_batch(&jobs);
        for (job, rep) in jobs.iter().zip(&out) {
            let rep = rep.as_ref().unwrap();
            assert_eq!(rep.synthesis.h, job.synthesis.h);
            let single =
                design_controller(&job.system, &job.synthesis, &job.trigger, &job.mode, None)
                    .unwrap();
            assert_eq!(&single, rep);
        }
    }
}
