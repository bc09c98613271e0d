//! Halanay-type inequality with an exponentially decaying perturbation.
//!
//! A continuous `v ≥ 0` with
//! `D⁺v(t) ≤ −a·v(t) + b·sup_{[t−r,t]} v + α·‖v₀‖ᵣ·e^{−βt}` and `a > b + α`
//! satisfies `v(t) ≤ ‖v₀‖ᵣ·e^{−ηt}`, where `η = min(λ, β)` and `λ` is the
//! positive root of `a = b·e^{λr} + λ + α`.

use thiserror::Error;

use crate::ddesim::rk4_step;
use crate::roots;
use crate::scalar::Real;

/// Relative slack accepted by [`certify_bound`].
pub const CERTIFY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HalanayError {
    #[error("parameter {name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error(
        "decay-rate equation has no positive root: a = {a} must exceed b + alpha = {b_plus_alpha}"
    )]
    NoPositiveRoot { a: f64, b_plus_alpha: f64 },
    #[error("time series needs samples covering [-{r}, 0]; earliest sample at {earliest}")]
    MissingHistory { r: f64, earliest: f64 },
    #[error("time series has no sample at t = 0")]
    MissingInitialValue,
    #[error("time series is empty or has mismatched lengths ({times} times, {values} values)")]
    BadSeries { times: usize, values: usize },
    #[error("sample {index} is negative or not finite ({value})")]
    BadSample { index: usize, value: f64 },
}

/// Which quantity normalizes the bound: the history supremum `‖v₀‖ᵣ` or the
/// value `v(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaselineMode {
    #[default]
    HistorySup,
    InitialValue,
}

impl BaselineMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMode::HistorySup => "history-sup",
            BaselineMode::InitialValue => "initial-value",
        }
    }
}

/// Validated coefficients of the inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalanayParams<T> {
    pub a: T,
    pub b: T,
    pub alpha: T,
    pub beta: T,
    pub r: T,
}

impl<T: Real> HalanayParams<T> {
    pub fn new(a: T, b: T, alpha: T, beta: T, r: T) -> Result<Self, HalanayError> {
        for (name, value) in [
            ("a", a),
            ("b", b),
            ("alpha", alpha),
            ("beta", beta),
            ("r", r),
        ] {
            if !(value > T::zero()) || !value.is_finite() {
                return Err(HalanayError::NonPositive {
                    name,
                    value: value.as_f64(),
                });
            }
        }
        if !(a > b + alpha) {
            return Err(HalanayError::NoPositiveRoot {
                a: a.as_f64(),
                b_plus_alpha: (b + alpha).as_f64(),
            });
        }
        Ok(Self {
            a,
            b,
            alpha,
            beta,
            r,
        })
    }

    /// `f(λ) = b·e^{λr} + λ + α − a`, strictly increasing in λ.
    pub fn rate_residual(&self, lambda: T) -> T {
        self.b * (lambda * self.r).exp() + lambda + self.alpha - self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalanayRate<T> {
    pub lambda: T,
    pub eta: T,
}

impl<T: Real> HalanayRate<T> {
    /// `β ≤ λ`, the regime in which `η = β`.
    pub fn beta_within_lambda(&self, beta: T) -> bool {
        beta <= self.lambda
    }
}

/// Positive root of the decay-rate equation and the effective rate `min(λ, β)`.
pub fn solve_lambda<T: Real>(p: &HalanayParams<T>) -> HalanayRate<T> {
    let f = |l: T| p.rate_residual(l);
    // f(0) < 0 by construction; f grows at least linearly, so doubling terminates.
    let hi =
        roots::expand_upper(&f, T::one(), true, 2000).expect("f(λ) ≥ λ − a eventually positive");
    let lambda = roots::bisect(&f, T::zero(), hi, 200);
    HalanayRate {
        lambda,
        eta: lambda.min(p.beta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification<T> {
    pub baseline: T,
    /// `max v(t)·e^{ηt} / baseline` over samples with `t ≥ 0`.
    pub max_ratio: T,
    pub worst_time: T,
    pub slack: T,
    pub passed: bool,
}

/// Checks `v(t) ≤ baseline·e^{−ηt}` on samples spanning `[−r, T]`, with the
/// default slack [`CERTIFY_SLACK`].
pub fn certify_bound<T: Real>(
    times: &[T],
    values: &[T],
    p: &HalanayParams<T>,
    rate: &HalanayRate<T>,
    mode: BaselineMode,
) -> Result<Certification<T>, HalanayError> {
    certify_bound_with_slack(times, values, p.r, rate.eta, mode, T::lit(CERTIFY_SLACK))
}

/// As [`certify_bound`] with explicit history length, rate and relative slack.
pub fn certify_bound_with_slack<T: Real>(
    times: &[T],
    values: &[T],
    r: T,
    eta: T,
    mode: BaselineMode,
    slack: T,
) -> Result<Certification<T>, HalanayError> {
    if times.is_empty() || times.len() != values.len() {
        return Err(HalanayError::BadSeries {
            times: times.len(),
            values: values.len(),
        });
    }
    if let Some((index, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= T::zero()) || !v.is_finite())
    {
        return Err(HalanayError::BadSample {
            index,
            value: v.as_f64(),
        });
    }
    let earliest = times.iter().copied().fold(T::infinity(), T::min);
    let tol = T::lit(1e-9) * r.max(T::one());
    if earliest > -r + tol {
        return Err(HalanayError::MissingHistory {
            r: r.as_f64(),
            earliest: earliest.as_f64(),
        });
    }
    let at_zero = times.iter().position(|&t| t.abs() <= tol);
    let baseline = match mode {
        BaselineMode::HistorySup => times
            .iter()
            .zip(values)
            .filter(|(&t, _)| t <= tol)
            .fold(T::zero(), |m, (_, &v)| m.max(v)),
        BaselineMode::InitialValue => values[at_zero.ok_or(HalanayError::MissingInitialValue)?],
    };

    let mut max_ratio = T::zero();
    let mut worst_time = T::zero();
    let mut any_positive = false;
    for (&t, &v) in times.iter().zip(values) {
        if t < T::zero() {
            continue;
        }
        if v > T::zero() {
            any_positive = true;
        }
        if baseline > T::zero() {
            let ratio = v * (eta * t).exp() / baseline;
            if ratio > max_ratio {
                max_ratio = ratio;
                worst_time = t;
            }
        }
    }
    if baseline == T::zero() && any_positive {
        max_ratio = T::infinity();
    }
    Ok(Certification {
        baseline,
        max_ratio,
        worst_time,
        slack,
        passed: max_ratio <= T::one() + slack,
    })
}

/// Integrates the equality case
/// `v̇ = −a·v + b·sup_{[t−r,t]} v + α·v₀·e^{−βt}` from constant history `v₀`
/// with the fixed-step RK4 stepper used by the closed-loop simulator.
///
/// Returns `(times, values)` covering `[−r, horizon]`; the history part is
/// sampled on the same step.
pub fn integrate_comparison<T: Real>(
    p: &HalanayParams<T>,
    v0: T,
    step: T,
    horizon: T,
) -> (Vec<T>, Vec<T>) {
    let hist_points = (p.r / step).ceil().to_usize().unwrap_or(0).max(1);
    let mut times: Vec<T> = (0..=hist_points)
        .map(|i| -p.r + p.r * T::lit(i as f64) / T::lit(hist_points as f64))
        .collect();
    let mut values = vec![v0; times.len()];
    if let Some(last) = times.last_mut() {
        *last = T::zero();
    }
    let forcing = p.alpha * v0;

    let steps = (horizon / step).ceil().to_usize().unwrap_or(0);
    for k in 0..steps {
        let t = T::lit(k as f64) * step;
        let h = (horizon - t).min(step);
        if h <= T::zero() {
            break;
        }
        let x = [*values.last().expect("non-empty")];
        let rhs = |s: T, y: &[T]| -> Result<Vec<T>, std::convert::Infallible> {
            let sup = window_sup(&times, &values, s - p.r, y[0], v0);
            Ok(vec![
                -p.a * y[0] + p.b * sup + forcing * (-p.beta * s).exp(),
            ])
        };
        let k1 = rhs(t, &x).expect("infallible");
        let next = rk4_step(t, &x, h, &k1, rhs).expect("infallible");
        times.push(t + h);
        values.push(next[0]);
    }
    (times, values)
}

/// Supremum over stored samples in `[from, last]`, the linearly interpolated
/// value at `from`, and the current stage value.
fn window_sup<T: Real>(times: &[T], values: &[T], from: T, current: T, history: T) -> T {
    let mut sup = current;
    if from <= T::zero() {
        sup = sup.max(history);
    }
    let mut i = times.len();
    while i > 0 {
        i -= 1;
        if times[i] < from {
            // interpolate the window's left edge inside [t_i, t_{i+1}]
            if i + 1 < times.len() {
                let w = (from - times[i]) / (times[i + 1] - times[i]);
                sup = sup.max(values[i] + w * (values[i + 1] - values[i]));
            }
            break;
        }
        sup = sup.max(values[i]);
    }
    sup
}
