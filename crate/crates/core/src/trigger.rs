//! Event-triggering rule and the analytic inter-event (dwell) bound.
//!
//! An event fires when `C(x, ε) = 2·xᵀPBKε − σ·xᵀPx` reaches the decaying
//! threshold `ζ(t) = α·V₀·e^{−βt}`, where `ε = x(t_k) − x(t)` and `V₀` is the
//! Lyapunov baseline of the initial function.

use thiserror::Error;

use crate::halanay::{BaselineMode, HalanayRate};
use crate::linalg::{dot, LinalgError, Matrix};
use crate::lmi::SystemMatrices;
use crate::roots;
use crate::scalar::Real;

/// Cap on upper-bracket doublings for the dwell-time root.
pub const MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TriggerError {
    #[error("trigger parameter {name} = {value} out of range ({rule})")]
    BadParameter {
        name: &'static str,
        value: f64,
        rule: &'static str,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// User-chosen constants of the rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerParams<T> {
    pub alpha: T,
    pub beta: T,
    pub sigma: T,
    pub baseline_mode: BaselineMode,
}

impl<T: Real> TriggerParams<T> {
    pub fn new(
        alpha: T,
        beta: T,
        sigma: T,
        baseline_mode: BaselineMode,
    ) -> Result<Self, TriggerError> {
        let bad = |name, value: T, rule| TriggerError::BadParameter {
            name,
            value: value.as_f64(),
            rule,
        };
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(bad("alpha", alpha, "must be > 0"));
        }
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(bad("beta", beta, "must be > 0"));
        }
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(bad("sigma", sigma, "must be >= 0"));
        }
        Ok(Self {
            alpha,
            beta,
            sigma,
            baseline_mode,
        })
    }
}

/// Rule constants bound to a controller: precomputes `P·B·K`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerConfig<T> {
    pub params: TriggerParams<T>,
    p: Matrix<T>,
    b: Matrix<T>,
    k: Matrix<T>,
    pbk: Matrix<T>,
}

impl<T: Real> TriggerConfig<T> {
    pub fn new(
        params: TriggerParams<T>,
        p: Matrix<T>,
        b: Matrix<T>,
        k: Matrix<T>,
    ) -> Result<Self, TriggerError> {
        let n = p.rows();
        if !p.is_square() || b.rows() != n || k.shape() != (b.cols(), n) {
            return Err(TriggerError::Dimension(format!(
                "P {}x{}, B {}x{}, K {}x{} are not conformable",
                p.rows(),
                p.cols(),
                b.rows(),
                b.cols(),
                k.rows(),
                k.cols()
            )));
        }
        let pbk = p.try_mul(&b)?.try_mul(&k)?;
        Ok(Self {
            params,
            p,
            b,
            k,
            pbk,
        })
    }

    pub fn p(&self) -> &Matrix<T> {
        &self.p
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.b
    }

    pub fn k(&self) -> &Matrix<T> {
        &self.k
    }

    pub fn pbk(&self) -> &Matrix<T> {
        &self.pbk
    }

    pub fn n(&self) -> usize {
        self.p.rows()
    }

    /// `C(x, ε) = 2·xᵀ·PBK·ε − σ·xᵀ·P·x`.
    pub fn trigger_value(&self, x: &[T], eps: &[T]) -> Result<T, TriggerError> {
        let n = self.n();
        if x.len() != n || eps.len() != n {
            return Err(TriggerError::Dimension(format!(
                "state has {} entries and error {}, expected {n}",
                x.len(),
                eps.len()
            )));
        }
        Ok(self.trigger_value_unchecked(x, eps))
    }

    pub(crate) fn trigger_value_unchecked(&self, x: &[T], eps: &[T]) -> T {
        let mut pbk_eps = vec![T::zero(); x.len()];
        self.pbk.mul_vec_acc(eps, &mut pbk_eps);
        T::two() * dot(x, &pbk_eps) - self.params.sigma * self.lyapunov(x)
    }

    /// `V = xᵀ·P·x`.
    pub fn lyapunov(&self, x: &[T]) -> T {
        let mut px = vec![T::zero(); x.len()];
        self.p.mul_vec_acc(x, &mut px);
        dot(x, &px)
    }

    /// `ζ(t) = α·v0_baseline·e^{−βt}`.
    pub fn threshold(&self, t: T, v0_baseline: T) -> T {
        threshold(t, v0_baseline, &self.params)
    }
}

pub fn threshold<T: Real>(t: T, v0_baseline: T, params: &TriggerParams<T>) -> T {
    params.alpha * v0_baseline * (-params.beta * t).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellConstants<T> {
    pub delta1: T,
    pub delta2: T,
}

/// `δ₁ = (‖PBK‖/λ_min(P))·(4/η)·(‖A₁‖ + ‖A₂‖·e^{ητ̄/2})`,
/// `δ₂ = 2·‖PBK‖·‖BK‖/λ_min(P)`, spectral norms throughout.
pub fn dwell_constants<T: Real>(
    sys: &SystemMatrices<T>,
    cfg: &TriggerConfig<T>,
    eta: T,
    tau_bar: T,
) -> Result<DwellConstants<T>, TriggerError> {
    if !(eta > T::zero()) {
        return Err(TriggerError::BadParameter {
            name: "eta",
            value: eta.as_f64(),
            rule: "must be > 0",
        });
    }
    let lambda_min_p = cfg.p.min_eigenvalue()?;
    let pbk = cfg.pbk.spectral_norm();
    let bk = cfg.b.try_mul(&cfg.k)?.spectral_norm();
    let a1 = sys.a1().spectral_norm();
    let a2 = sys.a2().spectral_norm();
    let four = T::two() * T::two();
    let delta1 = pbk / lambda_min_p * (four / eta) * (a1 + a2 * (eta * tau_bar * T::half()).exp());
    let delta2 = T::two() * pbk * bk / lambda_min_p;
    Ok(DwellConstants { delta1, delta2 })
}

/// `g₂(T) = α·e^{−ηT/2} − δ₁·(1 − e^{−ηT/2}) − δ₂·T`.
pub fn g2<T: Real>(t: T, alpha: T, c: &DwellConstants<T>, eta: T) -> T {
    let decay = (-eta * t * T::half()).exp();
    alpha * decay - c.delta1 * (T::one() - decay) - c.delta2 * t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DwellRegime {
    /// `β ≤ λ`: inter-event times are uniformly bounded below.
    UniformBound,
    /// `β > λ`: Zeno behavior is excluded but no uniform bound is available.
    ZenoExcludedOnly,
}

impl DwellRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            DwellRegime::UniformBound => "uniform-bound",
            DwellRegime::ZenoExcludedOnly => "zeno-excluded-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DwellBound<T> {
    /// Unique positive root of `g₂`.
    Finite(T),
    /// `g₂` stays positive (no dynamics to drive the error).
    Unbounded,
    /// Regime `β > λ`.
    NotAvailable,
}

impl<T: Copy> DwellBound<T> {
    pub fn finite(&self) -> Option<T> {
        match self {
            DwellBound::Finite(t) => Some(*t),
            _ => None,
        }
    }
}

/// Root of `g₂` for an arbitrary positive `η`, bypassing the regime check.
pub fn g2_root<T: Real>(alpha: T, c: &DwellConstants<T>, eta: T) -> DwellBound<T> {
    // With no dynamics g₂ is positive for every T; only underflow would make it vanish.
    if c.delta1 <= T::zero() && c.delta2 <= T::zero() {
        return DwellBound::Unbounded;
    }
    let f = |t: T| g2(t, alpha, c, eta);
    match roots::expand_upper(&f, T::one(), false, MAX_DOUBLINGS) {
        Some(hi) => DwellBound::Finite(roots::bisect(&f, T::zero(), hi, 400)),
        None => DwellBound::Unbounded,
    }
}

/// Uniform lower bound `T̃` on inter-event times, available only when `β ≤ λ`
/// (then `η = β`).
pub fn min_dwell_time<T: Real>(
    c: &DwellConstants<T>,
    params: &TriggerParams<T>,
    rate: &HalanayRate<T>,
) -> (DwellRegime, DwellBound<T>) {
    if rate.beta_within_lambda(params.beta) {
        (
            DwellRegime::UniformBound,
            g2_root(params.alpha, c, rate.eta),
        )
    } else {
        (DwellRegime::ZenoExcludedOnly, DwellBound::NotAvailable)
    }
}

/// Rates, dwell constants and the resulting inter-event bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellReport<T> {
    pub lambda: T,
    pub eta: T,
    pub delta1: T,
    pub delta2: T,
    pub t_tilde: Option<T>,
    pub regime: DwellRegime,
    pub bound: DwellBound<T>,
    pub observed_min_gap: Option<T>,
}

impl<T: Real> DwellReport<T> {
    pub fn new(
        sys: &SystemMatrices<T>,
        cfg: &TriggerConfig<T>,
        rate: &HalanayRate<T>,
        tau_bar: T,
    ) -> Result<Self, TriggerError> {
        let c = dwell_constants(sys, cfg, rate.eta, tau_bar)?;
        let (regime, bound) = min_dwell_time(&c, &cfg.params, rate);
        Ok(Self {
            lambda: rate.lambda,
            eta: rate.eta,
            delta1: c.delta1,
            delta2: c.delta2,
            t_tilde: bound.finite(),
            regime,
            bound,
            observed_min_gap: None,
        })
    }

    pub fn note(&self) -> &'static str {
        match (self.regime, self.bound) {
            (DwellRegime::ZenoExcludedOnly, _) => {
                "beta > lambda: Zeno behavior excluded, no uniform inter-event bound"
            }
            (_, DwellBound::Unbounded) => "g2 never reaches zero: unbounded dwell",
            _ => "beta <= lambda: inter-event times bounded below by t_tilde",
        }
    }
}
