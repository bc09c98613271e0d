//! Closed-loop simulation of `ẋ = A₁x + A₂x(t − τ(t)) + B·u` with
//! zero-order-hold event-triggered feedback `u = K·x(t_k)`.
//!
//! Integration is fixed-step classical RK4. Delayed states come from the
//! stored solution (or the initial function for non-positive arguments);
//! when `t − τ(t)` falls inside the step being computed the state is
//! extrapolated to first order from the start of the step. Events are
//! located by bisection on the cubic Hermite interpolant of the step, and
//! integration restarts at the located time with the new held input.

use std::collections::VecDeque;

use thiserror::Error;

use crate::exprparse::{EvalError, ScalarExpr};
use crate::halanay::BaselineMode;
use crate::linalg::Matrix;
use crate::lmi::SystemMatrices;
use crate::scalar::Real;
use crate::trigger::TriggerConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    #[error("query t = {t} precedes the retained window starting at {earliest}")]
    BeyondRetention { t: f64, earliest: f64 },
    #[error("query t = {t} lies beyond the integrated horizon {latest}")]
    Future { t: f64, latest: f64 },
    #[error("initial function component {index}: {source}")]
    InitialFunction {
        index: usize,
        #[source]
        source: EvalError,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation setting: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("delay function: {0}")]
    DelayExpr(#[source] EvalError),
    #[error("delay tau({t}) = {tau} outside [0, {tau_bar}]")]
    DelayOutOfBounds { t: f64, tau: f64, tau_bar: f64 },
    #[error("initial function component {index} looks discontinuous near s = {s}")]
    Discontinuous { index: usize, s: f64 },
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error("state became non-finite at t = {t}; simulation aborted")]
    NonFinite {
        t: f64,
        partial: Box<SimResult<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    #[default]
    Linear,
    CubicHermite,
}

impl Interp {
    pub fn as_str(self) -> &'static str {
        match self {
            Interp::Linear => "linear",
            Interp::CubicHermite => "cubic-hermite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub step: T,
    pub horizon: T,
    pub event_tol: T,
    /// Zeno guard: most events tolerated in any window of unit length.
    pub max_events: usize,
    pub interp: Interp,
}

impl<T: Real> SimConfig<T> {
    pub fn new(step: T, horizon: T) -> Self {
        Self {
            step,
            horizon,
            event_tol: T::lit(1e-10),
            max_events: 10_000,
            interp: Interp::Linear,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::Config(msg));
        if !(self.step > T::zero()) || !self.step.is_finite() {
            return bad(format!("step must be > 0, got {}", self.step));
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return bad(format!("horizon must be > 0, got {}", self.horizon));
        }
        if !(self.event_tol > T::zero()) || !(self.event_tol < self.step) {
            return bad(format!(
                "event_tol must lie in (0, step), got {}",
                self.event_tol
            ));
        }
        if self.max_events == 0 {
            return bad("max_events must be >= 1".into());
        }
        Ok(())
    }
}

/// Plant, delay function and initial function.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDelaySystem<T> {
    pub matrices: SystemMatrices<T>,
    /// Delay `τ(t)`, expression in `t`.
    pub tau: ScalarExpr,
    pub tau_bar: T,
    /// Initial function components `φᵢ(s)` on `[−τ̄, 0]`.
    pub phi: Vec<ScalarExpr>,
}

impl<T: Real> LinearDelaySystem<T> {
    pub fn new(
        matrices: SystemMatrices<T>,
        tau: ScalarExpr,
        tau_bar: T,
        phi: Vec<ScalarExpr>,
    ) -> Result<Self, SimError> {
        if phi.len() != matrices.n() {
            return Err(SimError::Dimension(format!(
                "phi has {} components but A1 is {n}x{n}",
                phi.len(),
                n = matrices.n()
            )));
        }
        if !(tau_bar > T::zero()) || !tau_bar.is_finite() {
            return Err(SimError::Config(format!(
                "tau_bar must be > 0, got {tau_bar}"
            )));
        }
        Ok(Self {
            matrices,
            tau,
            tau_bar,
            phi,
        })
    }

    pub fn phi_at(&self, s: T) -> Result<Vec<T>, HistoryError> {
        self.phi
            .iter()
            .enumerate()
            .map(|(index, e)| {
                e.eval(s)
                    .map_err(|source| HistoryError::InitialFunction { index, source })
            })
            .collect()
    }

    /// `τ(t)`, checked against `[0, τ̄]`.
    pub fn delay_at(&self, t: T) -> Result<T, SimError> {
        let tau = self.tau.eval(t).map_err(SimError::DelayExpr)?;
        let tol = T::lit(1e-12) * self.tau_bar.max(T::one());
        if tau < -tol || tau > self.tau_bar + tol {
            return Err(SimError::DelayOutOfBounds {
                t: t.as_f64(),
                tau: tau.as_f64(),
                tau_bar: self.tau_bar.as_f64(),
            });
        }
        Ok(tau.max(T::zero()).min(self.tau_bar))
    }

    /// `A₁x + A₂x_delayed + B·u`.
    pub fn rhs(&self, x: &[T], x_delayed: &[T], u_held: &[T]) -> Vec<T> {
        rhs(&self.matrices, x, x_delayed, u_held)
    }
}

/// `A₁x + A₂x_delayed + B·u`.
pub fn rhs<T: Real>(sys: &SystemMatrices<T>, x: &[T], x_delayed: &[T], u_held: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    sys.a1().mul_vec_acc(x, &mut out);
    sys.a2().mul_vec_acc(x_delayed, &mut out);
    sys.b().mul_vec_acc(u_held, &mut out);
    out
}

/// One classical RK4 step from `(t, x)` of length `h`; `k1` is the derivative
/// at the start of the step.
pub fn rk4_step<T, E, F>(t: T, x: &[T], h: T, k1: &[T], mut f: F) -> Result<Vec<T>, E>
where
    T: Real,
    F: FnMut(T, &[T]) -> Result<Vec<T>, E>,
{
    let half = h * T::half();
    let axpy =
        |a: T, k: &[T]| -> Vec<T> { x.iter().zip(k).map(|(&xi, &ki)| xi + a * ki).collect() };
    let k2 = f(t + half, &axpy(half, k1))?;
    let k3 = f(t + half, &axpy(half, &k2))?;
    let k4 = f(t + h, &axpy(h, &k3))?;
    let sixth = h / T::lit(6.0);
    Ok((0..x.len())
        .map(|i| x[i] + sixth * (k1[i] + T::two() * (k2[i] + k3[i]) + k4[i]))
        .collect())
}

fn hermite<T: Real>(t0: T, x0: &[T], d0: &[T], t1: T, x1: &[T], d1: &[T], q: T) -> Vec<T> {
    let h = t1 - t0;
    let s = (q - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let two = T::two();
    let three = T::lit(3.0);
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = three * s2 - two * s3;
    let h11 = s3 - s2;
    (0..x0.len())
        .map(|i| h00 * x0[i] + h10 * h * d0[i] + h01 * x1[i] + h11 * h * d1[i])
        .collect()
}

/// Stored solution plus the initial function: answers `x(t)` for
/// `t ∈ [t_last − τ̄ − step, t_last]`.
#[derive(Debug, Clone)]
pub struct History<'a, T> {
    sys: &'a LinearDelaySystem<T>,
    interp: Interp,
    step: T,
    times: Vec<T>,
    states: Vec<Vec<T>>,
    /// Derivatives at both ends of segment `i` (between samples `i`, `i+1`),
    /// taken with that segment's held input.
    seg_d0: Vec<Vec<T>>,
    seg_d1: Vec<Vec<T>>,
}

impl<'a, T: Real> History<'a, T> {
    /// History holding only `x(0) = φ(0)`.
    pub fn new(
        sys: &'a LinearDelaySystem<T>,
        interp: Interp,
        step: T,
    ) -> Result<Self, HistoryError> {
        let x0 = sys.phi_at(T::zero())?;
        Ok(Self {
            sys,
            interp,
            step,
            times: vec![T::zero()],
            states: vec![x0],
            seg_d0: Vec::new(),
            seg_d1: Vec::new(),
        })
    }

    pub fn last_time(&self) -> T {
        *self.times.last().expect("history is never empty")
    }

    pub fn last_state(&self) -> &[T] {
        self.states.last().expect("history is never empty")
    }

    /// Appends a segment ending at `(t, x)`.
    pub fn push(&mut self, t: T, x: Vec<T>, d0: Vec<T>, d1: Vec<T>) {
        debug_assert!(t > self.last_time());
        self.times.push(t);
        self.states.push(x);
        self.seg_d0.push(d0);
        self.seg_d1.push(d1);
    }

    /// `x(t_query)` from the initial function or the stored solution.
    pub fn eval(&self, t_query: T) -> Result<Vec<T>, HistoryError> {
        self.eval_extrapolated(t_query, None)
    }

    /// As [`eval`](Self::eval), additionally allowing queries up to one step
    /// past the last sample by extrapolating along `pending_slope`.
    pub fn eval_extrapolated(
        &self,
        t_query: T,
        pending_slope: Option<&[T]>,
    ) -> Result<Vec<T>, HistoryError> {
        let last = self.last_time();
        let tol = T::lit(1e-12) * (last.abs() + self.sys.tau_bar + T::one());
        let earliest = (last - self.sys.tau_bar - self.step).max(-self.sys.tau_bar);
        if t_query < earliest - tol {
            return Err(HistoryError::BeyondRetention {
                t: t_query.as_f64(),
                earliest: earliest.as_f64(),
            });
        }
        if t_query <= T::zero() && (t_query < T::zero() || last == T::zero()) {
            return self.sys.phi_at(t_query);
        }
        if t_query > last {
            return match pending_slope {
                Some(d) if t_query <= last + self.step + tol => {
                    let dt = t_query - last;
                    Ok(self
                        .last_state()
                        .iter()
                        .zip(d)
                        .map(|(&x, &di)| x + dt * di)
                        .collect())
                }
                _ => Err(HistoryError::Future {
                    t: t_query.as_f64(),
                    latest: last.as_f64(),
                }),
            };
        }
        // segment i with times[i] <= q <= times[i+1]
        let i = match self
            .times
            .binary_search_by(|t| t.partial_cmp(&t_query).expect("finite times"))
        {
            Ok(exact) => return Ok(self.states[exact].clone()),
            Err(ins) => ins - 1,
        };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (x0, x1) = (&self.states[i], &self.states[i + 1]);
        Ok(match self.interp {
            Interp::Linear => {
                let w = (t_query - t0) / (t1 - t0);
                x0.iter().zip(x1).map(|(&a, &b)| a + w * (b - a)).collect()
            }
            Interp::CubicHermite => {
                hermite(t0, x0, &self.seg_d0[i], t1, x1, &self.seg_d1[i], t_query)
            }
        })
    }
}

/// Free-function form of [`History::eval`].
pub fn history_eval<T: Real>(history: &History<'_, T>, t_query: T) -> Result<Vec<T>, HistoryError> {
    history.eval(t_query)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event<T> {
    pub t: T,
    pub x: Vec<T>,
    /// Held input `K·x(t_k)`.
    pub u: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    /// `xᵀPx` per sample.
    pub v: Vec<T>,
    /// Index into `events` of the input held at each sample.
    pub input_index: Vec<usize>,
    pub events: Vec<Event<T>>,
    pub zeno_guard_hit: bool,
    /// Grid on `[−τ̄, 0]` used for the baseline and its `V` values.
    pub history_times: Vec<T>,
    pub history_v: Vec<T>,
    /// `sup V` over the initial function grid.
    pub v0_sup: T,
    /// `V(0)`.
    pub v_initial: T,
    /// Baseline actually used in the threshold.
    pub baseline: T,
}

impl<T: Real> SimResult<T> {
    pub fn event_times(&self) -> Vec<T> {
        self.events.iter().map(|e| e.t).collect()
    }

    pub fn inter_event_gaps(&self) -> Vec<T> {
        self.events.windows(2).map(|w| w[1].t - w[0].t).collect()
    }

    pub fn min_gap(&self) -> Option<T> {
        self.inter_event_gaps().into_iter().reduce(T::min)
    }

    pub fn mean_gap(&self) -> Option<T> {
        let gaps = self.inter_event_gaps();
        if gaps.is_empty() {
            return None;
        }
        let sum = gaps.iter().fold(T::zero(), |s, &g| s + g);
        Some(sum / T::lit(gaps.len() as f64))
    }

    pub fn input_at(&self, sample: usize) -> &[T] {
        &self.events[self.input_index[sample]].u
    }

    /// History samples followed by the trajectory samples, for bound checks.
    pub fn v_series(&self) -> (Vec<T>, Vec<T>) {
        let mut t: Vec<T> = self.history_times[..self.history_times.len() - 1].to_vec();
        let mut v: Vec<T> = self.history_v[..self.history_v.len() - 1].to_vec();
        t.extend_from_slice(&self.times);
        v.extend_from_slice(&self.v);
        (t, v)
    }

    fn to_f64(&self) -> SimResult<f64> {
        let c = |xs: &[T]| xs.iter().map(|x| x.as_f64()).collect::<Vec<_>>();
        SimResult {
            times: c(&self.times),
            states: self.states.iter().map(|s| c(s)).collect(),
            v: c(&self.v),
            input_index: self.input_index.clone(),
            events: self
                .events
                .iter()
                .map(|e| Event {
                    t: e.t.as_f64(),
                    x: c(&e.x),
                    u: c(&e.u),
                })
                .collect(),
            zeno_guard_hit: self.zeno_guard_hit,
            history_times: c(&self.history_times),
            history_v: c(&self.history_v),
            v0_sup: self.v0_sup.as_f64(),
            v_initial: self.v_initial.as_f64(),
            baseline: self.baseline.as_f64(),
        }
    }
}

/// Samples `φ` on `⌈τ̄/step⌉ + 1` points of `[−τ̄, 0]`, checking finiteness
/// and continuity (a jump that does not shrink under grid halving).
fn sample_initial_function<T: Real>(
    sys: &LinearDelaySystem<T>,
    step: T,
) -> Result<(Vec<T>, Vec<Vec<T>>), SimError> {
    let points = (sys.tau_bar / step).ceil().to_usize().unwrap_or(1).max(1);
    let grid: Vec<T> = (0..=points)
        .map(|i| {
            if i == points {
                T::zero()
            } else {
                -sys.tau_bar + sys.tau_bar * T::lit(i as f64) / T::lit(points as f64)
            }
        })
        .collect();
    let values = grid
        .iter()
        .map(|&s| sys.phi_at(s))
        .collect::<Result<Vec<_>, _>>()?;
    let n = sys.phi.len();
    for index in 0..n {
        let scale = values.iter().fold(T::zero(), |m, v| m.max(v[index].abs())) + T::one();
        for w in 0..points {
            let jump = (values[w + 1][index] - values[w][index]).abs();
            if jump <= T::lit(0.01) * scale {
                continue;
            }
            let mid = (grid[w] + grid[w + 1]) * T::half();
            let vm = sys.phi_at(mid)?[index];
            let half_jump = (vm - values[w][index])
                .abs()
                .max((values[w + 1][index] - vm).abs());
            if half_jump >= T::lit(0.95) * jump {
                return Err(SimError::Discontinuous {
                    index,
                    s: mid.as_f64(),
                });
            }
        }
    }
    Ok((grid, values))
}

/// Runs the event-triggered closed loop on `[0, horizon]`.
pub fn simulate<T: Real>(
    sys: &LinearDelaySystem<T>,
    cfg: &TriggerConfig<T>,
    sim: &SimConfig<T>,
) -> Result<SimResult<T>, SimError> {
    sim.validate()?;
    let n = sys.matrices.n();
    if cfg.n() != n || cfg.k().cols() != n || cfg.k().rows() != sys.matrices.m() {
        return Err(SimError::Dimension(format!(
            "controller is for n = {} but the plant has n = {n}",
            cfg.n()
        )));
    }
    let k_gain: &Matrix<T> = cfg.k();

    let (history_times, phi_values) = sample_initial_function(sys, sim.step)?;
    let history_v: Vec<T> = phi_values.iter().map(|x| cfg.lyapunov(x)).collect();
    let v0_sup = history_v.iter().copied().fold(T::zero(), T::max);
    let v_initial = *history_v.last().expect("grid includes s = 0");
    let baseline = match cfg.params.baseline_mode {
        BaselineMode::HistorySup => v0_sup,
        BaselineMode::InitialValue => v_initial,
    };

    let mut hist = History::new(sys, sim.interp, sim.step)?;
    let x0 = hist.last_state().to_vec();
    let u0 = k_gain.try_mul_vec(&x0).expect("dimensions checked");
    let mut out = SimResult {
        times: vec![T::zero()],
        v: vec![cfg.lyapunov(&x0)],
        states: vec![x0.clone()],
        input_index: vec![0],
        events: vec![Event {
            t: T::zero(),
            x: x0.clone(),
            u: u0.clone(),
        }],
        zeno_guard_hit: false,
        history_times,
        history_v,
        v0_sup,
        v_initial,
        baseline,
    };

    let mut u = u0;
    let mut x_sampled = x0;
    let mut recent_events: VecDeque<T> = VecDeque::from([T::zero()]);
    let mut next_grid: usize = 1;
    let min_step = sim.step * T::lit(1e-6);

    let gap = |x: &[T], xs: &[T], t: T| -> T {
        let eps: Vec<T> = xs.iter().zip(x).map(|(&a, &b)| a - b).collect();
        cfg.trigger_value_unchecked(x, &eps) - cfg.threshold(t, baseline)
    };

    loop {
        let t = hist.last_time();
        if t >= sim.horizon {
            break;
        }
        let mut target = (T::lit(next_grid as f64) * sim.step).min(sim.horizon);
        while target - t < min_step && target < sim.horizon {
            next_grid += 1;
            target = (T::lit(next_grid as f64) * sim.step).min(sim.horizon);
        }
        let h = target - t;
        let x = hist.last_state().to_vec();

        let xd0 = hist.eval(t - sys.delay_at(t)?)?;
        let d0 = rhs(&sys.matrices, &x, &xd0, &u);
        let stage = |s: T, y: &[T]| -> Result<Vec<T>, SimError> {
            let xd = hist.eval_extrapolated(s - sys.delay_at(s)?, Some(&d0))?;
            Ok(rhs(&sys.matrices, y, &xd, &u))
        };
        let x1 = rk4_step(t, &x, h, &d0, stage)?;
        if x1.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinite {
                t: target.as_f64(),
                partial: Box::new(out.to_f64()),
            });
        }
        let xd1 = hist.eval_extrapolated(target - sys.delay_at(target)?, Some(&d0))?;
        let d1 = rhs(&sys.matrices, &x1, &xd1, &u);

        if gap(&x1, &x_sampled, target) < T::zero() {
            hist.push(target, x1.clone(), d0, d1);
            out.times.push(target);
            out.v.push(cfg.lyapunov(&x1));
            out.states.push(x1);
            out.input_index.push(out.events.len() - 1);
            next_grid += 1;
            continue;
        }

        // crossing inside (t, target]: bisect on the step's Hermite interpolant
        let interp = |q: T| hermite(t, &x, &d0, target, &x1, &d1, q);
        let (mut lo, mut hi) = (t, target);
        while hi - lo > sim.event_tol {
            let mid = lo + (hi - lo) * T::half();
            if mid <= lo || mid >= hi {
                break;
            }
            if gap(&interp(mid), &x_sampled, mid) >= T::zero() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t_event = hi;
        let x_event = if t_event == target {
            x1
        } else {
            interp(t_event)
        };
        let xd_event = hist.eval_extrapolated(t_event - sys.delay_at(t_event)?, Some(&d0))?;
        let d_event = rhs(&sys.matrices, &x_event, &xd_event, &u);
        hist.push(t_event, x_event.clone(), d0, d_event);
        if t_event == target {
            next_grid += 1;
        }

        u = k_gain.try_mul_vec(&x_event).expect("dimensions checked");
        x_sampled = x_event.clone();
        out.events.push(Event {
            t: t_event,
            x: x_event.clone(),
            u: u.clone(),
        });
        out.times.push(t_event);
        out.v.push(cfg.lyapunov(&x_event));
        out.states.push(x_event);
        out.input_index.push(out.events.len() - 1);

        recent_events.push_back(t_event);
        while recent_events
            .front()
            .is_some_and(|&e| e <= t_event - T::one())
        {
            recent_events.pop_front();
        }
        if recent_events.len() > sim.max_events {
            out.zeno_guard_hit = true;
            break;
        }
    }
    Ok(out)
}
