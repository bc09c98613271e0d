//! Gain synthesis through the delay-dependent LMI
//!
//! ```text
//! ⎡ Q·A₁ᵀ + A₁·Q + Rᵀ·Bᵀ + B·R + (b+h)·Q   A₂·Q ⎤
//! ⎣ Q·A₂ᵀ                                −b·Q  ⎦ < 0
//! ```
//!
//! in the decision variables `Q ≻ 0` and `R`; the controller is `P = Q⁻¹`,
//! `K = R·P`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix};
use crate::scalar::Real;

/// Default strictness gap on `λ_max`.
pub const DEFAULT_MARGIN: f64 = 1e-6;
/// Lower bound on the spectrum of `Q` during synthesis (trace normalized to `n`).
pub const DEFAULT_Q_MIN: f64 = 1e-6;
/// First eigenvalue floor tried during synthesis.
const Q_FLOOR_START: f64 = 0.1;
/// Asymmetry beyond this (relative to the largest entry) is rejected.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LmiError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix {0} contains non-finite entries")]
    NonFinite(&'static str),
    #[error("synthesis parameter {name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },
    #[error("no feasible point found within budget; best max eigenvalue {best_max_eig:e} (not a proof of infeasibility)")]
    Infeasible { best_max_eig: f64 },
}

/// `A₁, A₂ ∈ ℝⁿˣⁿ`, `B ∈ ℝⁿˣᵐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices<T> {
    a1: Matrix<T>,
    a2: Matrix<T>,
    b: Matrix<T>,
}

impl<T: Real> SystemMatrices<T> {
    pub fn new(a1: Matrix<T>, a2: Matrix<T>, b: Matrix<T>) -> Result<Self, LmiError> {
        if !a1.is_square() {
            return Err(LmiError::Dimension(format!(
                "A1 must be square, got {}x{}",
                a1.rows(),
                a1.cols()
            )));
        }
        if a2.shape() != a1.shape() {
            return Err(LmiError::Dimension(format!(
                "A1 is {}x{} but A2 is {}x{}",
                a1.rows(),
                a1.cols(),
                a2.rows(),
                a2.cols()
            )));
        }
        if b.rows() != a1.rows() {
            return Err(LmiError::Dimension(format!(
                "A1 is {}x{} but B has {} rows",
                a1.rows(),
                a1.cols(),
                b.rows()
            )));
        }
        for (name, m) in [("A1", &a1), ("A2", &a2), ("B", &b)] {
            if !m.is_finite() {
                return Err(LmiError::NonFinite(name));
            }
        }
        Ok(Self { a1, a2, b })
    }

    pub fn a1(&self) -> &Matrix<T> {
        &self.a1
    }

    pub fn a2(&self) -> &Matrix<T> {
        &self.a2
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.b
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a1.rows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisParams<T> {
    pub b: T,
    pub h: T,
}

impl<T: Real> SynthesisParams<T> {
    pub fn new(b: T, h: T) -> Result<Self, LmiError> {
        for (name, value) in [("b", b), ("h", h)] {
            if !(value > T::zero()) || !value.is_finite() {
                return Err(LmiError::NonPositive {
                    name,
                    value: value.as_f64(),
                });
            }
        }
        Ok(Self { b, h })
    }
}

/// Assembles the symmetric `2n×2n` LMI block for given `(Q, R)`.
pub fn build_lmi<T: Real>(
    sys: &SystemMatrices<T>,
    sp: &SynthesisParams<T>,
    q: &Matrix<T>,
    r: &Matrix<T>,
) -> Result<Matrix<T>, LmiError> {
    let n = sys.n();
    if q.shape() != (n, n) {
        return Err(LmiError::Dimension(format!(
            "Q must be {n}x{n}, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    if r.shape() != (sys.m(), n) {
        return Err(LmiError::Dimension(format!(
            "R must be {}x{n}, got {}x{}",
            sys.m(),
            r.rows(),
            r.cols()
        )));
    }
    let a1q = sys.a1.try_mul(q)?;
    let br = sys.b.try_mul(r)?;
    let top_left = &(&(&a1q + &a1q.transpose()) + &(&br + &br.transpose())) + &q.scale(sp.b + sp.h);
    let a2q = sys.a2.try_mul(q)?;
    let m = Matrix::block2x2(&top_left, &a2q, &a2q.transpose(), &q.scale(-sp.b))?;
    Ok(m.symmetrize())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility<T> {
    pub feasible: bool,
    pub max_eig: T,
}

/// `feasible` iff `λ_max(M) < −margin`.
pub fn verify_feasible<T: Real>(m: &Matrix<T>, margin: T) -> Result<Feasibility<T>, LmiError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            op: "verify_feasible",
            rows: m.rows(),
            cols: m.cols(),
        }
        .into());
    }
    let asym = m.max_asymmetry();
    if asym > T::lit(SYMMETRY_TOL) * m.max_abs().max(T::one()) {
        return Err(LmiError::Asymmetric {
            asymmetry: asym.as_f64(),
        });
    }
    let max_eig = m.symmetrize().max_eigenvalue()?;
    Ok(Feasibility {
        feasible: max_eig < -margin,
        max_eig,
    })
}

/// A controller `(Q, R, P, K)` together with the LMI's largest eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerDesign<T> {
    pub q: Matrix<T>,
    pub r: Matrix<T>,
    pub p: Matrix<T>,
    pub k: Matrix<T>,
    pub lmi_max_eig: T,
}

impl<T: Real> ControllerDesign<T> {
    /// From LMI variables: `P = Q⁻¹`, `K = R·P`.
    pub fn from_q_r(
        sys: &SystemMatrices<T>,
        sp: &SynthesisParams<T>,
        q: Matrix<T>,
        r: Matrix<T>,
    ) -> Result<Self, LmiError> {
        let m = build_lmi(sys, sp, &q, &r)?;
        let p = q.spd_inverse()?;
        let k = r.try_mul(&p)?;
        let lmi_max_eig = verify_feasible(&m, T::zero())?.max_eig;
        Ok(Self {
            q,
            r,
            p,
            k,
            lmi_max_eig,
        })
    }

    /// From a given Lyapunov matrix and gain: `Q = P⁻¹`, `R = K·Q`.
    pub fn from_p_k(
        sys: &SystemMatrices<T>,
        sp: &SynthesisParams<T>,
        p: Matrix<T>,
        k: Matrix<T>,
    ) -> Result<Self, LmiError> {
        if p.shape() != (sys.n(), sys.n()) {
            return Err(LmiError::Dimension(format!(
                "P must be {n}x{n}, got {}x{}",
                p.rows(),
                p.cols(),
                n = sys.n()
            )));
        }
        if k.shape() != (sys.m(), sys.n()) {
            return Err(LmiError::Dimension(format!(
                "K must be {}x{}, got {}x{}",
                sys.m(),
                sys.n(),
                k.rows(),
                k.cols()
            )));
        }
        let q = p.spd_inverse()?;
        let r = k.try_mul(&q)?;
        let m = build_lmi(sys, sp, &q, &r)?;
        let lmi_max_eig = verify_feasible(&m, T::zero())?.max_eig;
        Ok(Self {
            q,
            r,
            p,
            k,
            lmi_max_eig,
        })
    }

    pub fn is_feasible(&self, margin: T) -> bool {
        self.lmi_max_eig < -margin
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    pub margin: f64,
    pub q_min: f64,
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            q_min: DEFAULT_Q_MIN,
            restarts: 20,
            max_iter: 4000,
            seed: 0x5eed_1a7e,
        }
    }
}

/// Searches for `(Q, R)` satisfying the LMI with `λ_max < −margin`.
///
/// Minimizes a soft-max smoothing of `λ_max(M(Q, R))`, whose gradient is the
/// eigenvector-weighted combination of per-eigenvalue subgradients
/// `∂λ/∂Q, ∂λ/∂R` from `vvᵀ`. `Q` is projected onto
/// `{Q ⪰ f·I, tr Q = n}` after every step, for floors `f` from 0.1 down to
/// `q_min`; the trace normalization is harmless because feasibility is
/// invariant under positive scaling of `(Q, R)`. Backtracking halves the step until the smoothed objective
/// decreases.
pub fn synthesize_gain<T: Real>(
    sys: &SystemMatrices<T>,
    sp: &SynthesisParams<T>,
    opts: &SynthesisOptions,
) -> Result<ControllerDesign<T>, LmiError> {
    let n = sys.n();
    let m = sys.m();
    let margin = T::lit(opts.margin);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = T::infinity();

    // Floors from 0.1 down to q_min: well-conditioned Q (moderate P and K) first.
    let mut floors = Vec::new();
    let mut f = Q_FLOOR_START.max(opts.q_min);
    while f > opts.q_min {
        floors.push(f);
        f *= 0.01;
    }
    floors.push(opts.q_min);

    for (q_min, restart) in floors
        .iter()
        .flat_map(|&f| (0..opts.restarts.max(1)).map(move |r| (T::lit(f), r)))
    {
        let (q0, r0) = match restart {
            0 => (Matrix::identity(n), Matrix::zeros(m, n)),
            1 => (Matrix::identity(n), sys.b.transpose().scale(-T::one())),
            _ => random_start(&mut rng, n, m),
        };
        let q0 = project_q(&q0, q_min)?;
        let outcome = descend(sys, sp, q0, r0, margin, q_min, opts.max_iter)?;
        match outcome {
            Descent::Feasible(q, r) => {
                let design = ControllerDesign::from_q_r(sys, sp, q, r)?;
                if design.is_feasible(margin) {
                    return Ok(design);
                }
                best = best.min(design.lmi_max_eig);
            }
            Descent::Stalled(val) => best = best.min(val),
        }
    }
    Err(LmiError::Infeasible {
        best_max_eig: best.as_f64(),
    })
}

enum Descent<T> {
    Feasible(Matrix<T>, Matrix<T>),
    Stalled(T),
}

fn random_start<T: Real>(rng: &mut ChaCha8Rng, n: usize, m: usize) -> (Matrix<T>, Matrix<T>) {
    let g = Matrix::from_fn(n, n, |_, _| T::lit(rng.gen_range(-1.0..1.0)));
    let q = &(&g * &g.transpose()) + &Matrix::identity(n).scale(T::lit(0.1));
    let scale = T::lit(rng.gen_range(0.1..5.0));
    let r = Matrix::from_fn(m, n, |_, _| T::lit(rng.gen_range(-1.0..1.0)) * scale);
    (q, r)
}

/// Euclidean projection of symmetric `Q` onto `{Q ⪰ q_min·I, tr Q = n}`.
fn project_q<T: Real>(q: &Matrix<T>, q_min: T) -> Result<Matrix<T>, LmiError> {
    if !q.is_finite() {
        return Err(LmiError::NonFinite("Q"));
    }
    let n = q.rows();
    let eig = q.sym_eigen()?;
    let target = T::lit(n as f64);
    // Find shift s with Σ max(q_min, μᵢ − s) = n; the sum is non-increasing in s.
    let total = |s: T| {
        eig.values
            .iter()
            .fold(T::zero(), |acc, &mu| acc + (mu - s).max(q_min))
    };
    let mut lo = eig.min_value() - target - T::one();
    let mut hi = eig.max_value() + T::one();
    while total(lo) < target {
        lo = lo - (hi - lo);
    }
    for _ in 0..200 {
        let mid = lo + (hi - lo) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = lo + (hi - lo) * T::half();
    let mu: Vec<T> = eig.values.iter().map(|&v| (v - s).max(q_min)).collect();
    let v = &eig.vectors;
    Ok(Matrix::from_fn(n, n, |i, j| {
        (0..n).fold(T::zero(), |acc, k| acc + v[(i, k)] * mu[k] * v[(j, k)])
    }))
}

/// Gradient of `vᵀ·M(Q,R)·v` with respect to `Q` (symmetric) and `R`.
fn eigen_gradient<T: Real>(
    sys: &SystemMatrices<T>,
    sp: &SynthesisParams<T>,
    v: &[T],
) -> (Matrix<T>, Matrix<T>) {
    let n = sys.n();
    let v1 = Matrix::column(&v[..n]);
    let v2 = Matrix::column(&v[n..]);
    let v1v1 = &v1 * &v1.transpose();
    let a1_term = &v1v1 * &sys.a1;
    let w = &sys.a2.transpose() * &v1;
    let wv2 = &w * &v2.transpose();
    let gq = &(&(&(&a1_term + &a1_term.transpose()) + &v1v1.scale(sp.b + sp.h))
        + &(&wv2 + &wv2.transpose()))
        - &(&v2 * &v2.transpose()).scale(sp.b);
    let gr = (&(&sys.b.transpose() * &v1) * &v1.transpose()).scale(T::two());
    (gq, gr)
}

/// Soft-max value `μ·log Σ exp(λⱼ/μ)` and its gradient in `(Q, R)`.
fn smoothed<T: Real>(
    sys: &SystemMatrices<T>,
    sp: &SynthesisParams<T>,
    q: &Matrix<T>,
    r: &Matrix<T>,
    mu: T,
) -> Result<(T, T, Matrix<T>, Matrix<T>), LmiError> {
    let m = build_lmi(sys, sp, q, r)?;
    let eig = m.sym_eigen()?;
    let top = eig.max_value();
    let weights: Vec<T> = eig.values.iter().map(|&l| ((l - top) / mu).exp()).collect();
    let z = weights.iter().fold(T::zero(), |a, &w| a + w);
    let value = top + mu * z.ln();
    let mut gq = Matrix::zeros(q.rows(), q.cols());
    let mut gr = Matrix::zeros(r.rows(), r.cols());
    for (k, &w) in weights.iter().enumerate() {
        let w = w / z;
        if w < T::lit(1e-12) {
            continue;
        }
        let (dq, dr) = eigen_gradient(sys, sp, &eig.vector(k));
        gq = &gq + &dq.scale(w);
        gr = &gr + &dr.scale(w);
    }
    Ok((value, top, gq, gr))
}

fn descend<T: Real>(
    sys: &SystemMatrices<T>,
    sp: &SynthesisParams<T>,
    mut q: Matrix<T>,
    mut r: Matrix<T>,
    margin: T,
    q_min: T,
    max_iter: usize,
) -> Result<Descent<T>, LmiError> {
    let scale = T::one() + sys.a1.max_abs() + sys.a2.max_abs() + sys.b.max_abs() + sp.b + sp.h;
    let mu_floor = T::lit(1e-7) * scale;
    let mut mu = T::lit(0.05) * scale;
    let mut step = T::one() / scale;
    let max_step = T::lit(1e6) / scale;
    let mut best_top = T::infinity();

    let (mut val, mut top, mut gq, mut gr) = smoothed(sys, sp, &q, &r, mu)?;
    for _ in 0..max_iter {
        best_top = best_top.min(top);
        if top < -margin {
            return Ok(Descent::Feasible(q, r));
        }
        let mut accepted = false;
        let mut s = step * T::two();
        for _ in 0..50 {
            let q_try = project_q(&(&q - &gq.scale(s)), q_min)?;
            let r_try = &r - &gr.scale(s);
            let (v_try, t_try, gq_try, gr_try) = smoothed(sys, sp, &q_try, &r_try, mu)?;
            // Armijo condition along the projected step
            let dq = &q - &q_try;
            let dr = &r - &r_try;
            let decrease = frob_inner(&gq, &dq) + frob_inner(&gr, &dr);
            if v_try <= val - T::lit(1e-4) * decrease && v_try.is_finite() {
                q = q_try;
                r = r_try;
                val = v_try;
                top = t_try;
                gq = gq_try;
                gr = gr_try;
                step = s.min(max_step);
                accepted = true;
                break;
            }
            s = s * T::half();
        }
        if !accepted {
            if mu <= mu_floor {
                break;
            }
            mu = (mu * T::lit(0.2)).max(mu_floor);
            let refreshed = smoothed(sys, sp, &q, &r, mu)?;
            val = refreshed.0;
            top = refreshed.1;
            gq = refreshed.2;
            gr = refreshed.3;
            step = T::one() / scale;
        } else if top > val - mu * T::lit(0.01) {
            // spectrum already concentrated near the top; sharpen the smoothing
            mu = (mu * T::half()).max(mu_floor);
            let refreshed = smoothed(sys, sp, &q, &r, mu)?;
            val = refreshed.0;
            top = refreshed.1;
            gq = refreshed.2;
            gr = refreshed.3;
        }
    }
    best_top = best_top.min(top);
    if top < -margin {
        return Ok(Descent::Feasible(q, r));
    }
    Ok(Descent::Stalled(best_top))
}

fn frob_inner<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> T {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(T::zero(), |s, (&x, &y)| s + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    fn example2() -> SystemMatrices<f64> {
        SystemMatrices::new(
            mat(&[&[-1.0, -0.5], &[3.0, 2.5]]),
            mat(&[&[1.2, 2.0], &[-0.4, -1.2]]),
            mat(&[&[1.0], &[1.0]]),
        )
        .unwrap()
    }

    fn example1() -> SystemMatrices<f64> {
        SystemMatrices::new(mat(&[&[0.0]]), mat(&[&[-0.1]]), mat(&[&[1.0]])).unwrap()
    }

    #[test]
    fn decoupled_diagonal_case() {
        let sys = SystemMatrices::new(
            Matrix::identity(2).scale(-1.0),
            Matrix::zeros(2, 2),
            Matrix::zeros(2, 1),
        )
        .unwrap();
        let sp = SynthesisParams::new(0.5, 0.5).unwrap();
        let m = build_lmi(&sys, &sp, &Matrix::identity(2), &Matrix::zeros(1, 2)).unwrap();
        assert_eq!(m, Matrix::from_diag(&[-1.0, -1.0, -0.5, -0.5]));
    }

    #[test]
    fn scalar_example1_block() {
        let sp = SynthesisParams::new(0.1, 0.2).unwrap();
        // R := K·Q with K = −0.2, Q = 1
        let m = build_lmi(&example1(), &sp, &mat(&[&[1.0]]), &mat(&[&[-0.2]])).unwrap();
        let expected = mat(&[&[-0.1, -0.1], &[-0.1, -0.1]]);
        assert!((&m - &expected).max_abs() < 1e-15);
        let f = verify_feasible(&m, 0.0).unwrap();
        // eigenvalues {0, −0.2}: only semidefinite
        assert!(f.max_eig.abs() < 1e-15);
        assert!(!f.feasible);
        // taken literally, Q = R = 1 is far from feasible
        let literal = build_lmi(
            &example1(),
            &SynthesisParams::new(0.1, 0.2).unwrap(),
            &mat(&[&[1.0]]),
            &mat(&[&[1.0]]),
        )
        .unwrap();
        assert!(!verify_feasible(&literal, 0.0).unwrap().feasible);
    }

    #[test]
    fn example2_published_design_is_feasible() {
        let sys = example2();
        let sp = SynthesisParams::new(1.1, 0.21).unwrap();
        let p = mat(&[&[1.5274, 1.4575], &[1.4575, 4.1300]]);
        let r = mat(&[&[-0.8221, -0.7204]]);
        let q = p.spd_inverse().unwrap();
        let d = ControllerDesign::from_q_r(&sys, &sp, q, r).unwrap();
        assert_relative_eq!(d.k[(0, 0)], -2.3056, epsilon = 1e-3);
        assert_relative_eq!(d.k[(0, 1)], -4.1733, epsilon = 1e-3);
        assert!(d.is_feasible(1e-6));
        assert!((&(&d.p * &d.q) - &Matrix::identity(2)).max_abs() < 1e-10);
    }

    #[test]
    fn verify_trivial_cases() {
        let f = verify_feasible(&Matrix::from_diag(&[-1.0, -0.5]), 0.0).unwrap();
        assert!(f.feasible);
        assert_eq!(f.max_eig, -0.5);
        let f = verify_feasible(&Matrix::<f64>::zeros(3, 3), 0.0).unwrap();
        assert!(!f.feasible);
        assert!(matches!(
            verify_feasible(&mat(&[&[0.0, 1.0], &[0.0, 0.0]]), 0.0),
            Err(LmiError::Asymmetric { .. })
        ));
    }

    #[test]
    fn dimension_errors() {
        let err = SystemMatrices::new(
            Matrix::<f64>::identity(3),
            Matrix::identity(3),
            Matrix::zeros(2, 1),
        )
        .unwrap_err();
        assert!(matches!(err, LmiError::Dimension(ref s) if s.contains("A1") && s.contains("B")));
        let sp = SynthesisParams::new(1.0, 1.0).unwrap();
        assert!(build_lmi(&example2(), &sp, &Matrix::identity(3), &Matrix::zeros(1, 2)).is_err());
        assert!(SynthesisParams::new(0.0, 1.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let sys = example2();
        let sp = SynthesisParams::new(1.1, 0.21).unwrap();
        let q = mat(&[&[1.3, 0.2], &[0.2, 0.7]]);
        let r = mat(&[&[-0.5, 0.3]]);
        let top = |q: &Matrix<f64>, r: &Matrix<f64>| {
            build_lmi(&sys, &sp, q, r)
                .unwrap()
                .max_eigenvalue()
                .unwrap()
        };
        let eig = build_lmi(&sys, &sp, &q, &r).unwrap().sym_eigen().unwrap();
        let (gq, gr) = eigen_gradient(&sys, &sp, &eig.vector(3));
        let h = 1e-6;
        // symmetric perturbation directions
        for (i, j) in [(0, 0), (0, 1), (1, 1)] {
            let mut dq = Matrix::zeros(2, 2);
            dq[(i, j)] = 1.0;
            dq[(j, i)] = 1.0;
            let fd = (top(&(&q + &dq.scale(h)), &r) - top(&(&q - &dq.scale(h)), &r)) / (2.0 * h);
            let analytic = frob_inner(&gq, &dq);
            assert_relative_eq!(fd, analytic, max_relative = 1e-5);
        }
        for j in 0..2 {
            let mut dr = Matrix::zeros(1, 2);
            dr[(0, j)] = 1.0;
            let fd = (top(&q, &(&r + &dr.scale(h))) - top(&q, &(&r - &dr.scale(h)))) / (2.0 * h);
            assert_relative_eq!(fd, gr[(0, j)], max_relative = 1e-5);
        }
    }

    #[test]
    fn projection_enforces_constraints() {
        let q = mat(&[&[3.0, 1.0], &[1.0, -2.0]]);
        let p = project_q(&q, 1e-3).unwrap();
        assert_relative_eq!(p.trace(), 2.0, epsilon = 1e-12);
        assert!(p.min_eigenvalue().unwrap() >= 1e-3 - 1e-12);
        let already = Matrix::identity(2);
        assert!((&project_q(&already, 1e-3).unwrap() - &already).max_abs() < 1e-12);
    }

    #[test]
    fn stable_open_loop_needs_no_control() {
        let sys = SystemMatrices::new(
            Matrix::identity(2).scale(-10.0),
            Matrix::identity(2).scale(0.1),
            Matrix::identity(2),
        )
        .unwrap();
        let sp = SynthesisParams::new(1.0, 1.0).unwrap();
        let m = build_lmi(&sys, &sp, &Matrix::identity(2), &Matrix::zeros(2, 2)).unwrap();
        assert!(verify_feasible(&m, 1e-6).unwrap().feasible);
        let d = synthesize_gain(&sys, &sp, &SynthesisOptions::default()).unwrap();
        assert!(d.is_feasible(1e-6));
    }

    #[test]
    fn synthesizes_both_examples() {
        for (sys, sp) in [
            (example1(), SynthesisParams::new(0.1, 0.2).unwrap()),
            (example2(), SynthesisParams::new(1.1, 0.21).unwrap()),
        ] {
            let d = synthesize_gain(&sys, &sp, &SynthesisOptions::default()).unwrap();
            assert!(d.lmi_max_eig < -1e-6);
            assert!((&(&d.p * &d.q) - &Matrix::identity(sys.n())).max_abs() < 1e-10);
            let k = d.r.try_mul(&d.p).unwrap();
            assert!((&k - &d.k).max_abs() <= 1e-10 * d.k.max_abs().max(1.0));
        }
    }

    #[test]
    fn hopeless_problem_reports_best_eigenvalue() {
        // no input and an unstable plant: the LMI cannot hold
        let sys = SystemMatrices::new(mat(&[&[1.0]]), mat(&[&[0.0]]), mat(&[&[0.0]])).unwrap();
        let sp = SynthesisParams::new(0.5, 0.5).unwrap();
        let opts = SynthesisOptions {
            restarts: 3,
            max_iter: 200,
            ..Default::default()
        };
        match synthesize_gain(&sys, &sp, &opts) {
            Err(LmiError::Infeasible { best_max_eig }) => assert!(best_max_eig > 0.0),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }
}
