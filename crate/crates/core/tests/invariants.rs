use etdelay_core::{
    build_lmi, parse_expr, simulate, solve_lambda, BaselineMode, HalanayParams, LinearDelaySystem,
    Matrix, SimConfig, SynthesisParams, SystemMatrices, TriggerConfig, TriggerParams,
};
use proptest::prelude::*;

fn mat(n: usize, m: usize, v: &[f64]) -> Matrix<f64> {
    Matrix::from_fn(n, m, |i, j| v[i * m + j])
}

fn halanay_params() -> impl Strategy<Value = HalanayParams<f64>> {
    (
        0.01f64..2.0,
        0.01f64..2.0,
        0.01f64..3.0,
        0.01f64..5.0,
        0.01f64..20.0,
    )
        .prop_map(|(b, alpha, gap, beta, r)| {
            HalanayParams::new(b + alpha + gap, b, alpha, beta, r).unwrap()
        })
}

proptest! {
    #[test]
    fn lambda_root_is_positive_and_below_gap(p in halanay_params()) {
        let rate = solve_lambda(&p);
        prop_assert!(rate.lambda > 0.0);
        prop_assert!(rate.lambda < p.a - p.b - p.alpha);
        prop_assert!(p.rate_residual(rate.lambda).abs() <= 1e-9 * p.a);
        prop_assert_eq!(rate.eta, rate.lambda.min(p.beta));
    }

    #[test]
    fn longer_delay_slows_decay(p in halanay_params(), extra in 0.1f64..5.0) {
        let longer = HalanayParams::new(p.a, p.b, p.alpha, p.beta, p.r + extra).unwrap();
        prop_assert!(solve_lambda(&longer).lambda <= solve_lambda(&p).lambda);
    }

    #[test]
    fn lmi_is_homogeneous(
        a1 in prop::collection::vec(-2.0f64..2.0, 4),
        a2 in prop::collection::vec(-2.0f64..2.0, 4),
        b in prop::collection::vec(-2.0f64..2.0, 2),
        r in prop::collection::vec(-2.0f64..2.0, 2),
        g in prop::collection::vec(-1.0f64..1.0, 4),
        c in 0.1f64..10.0,
    ) {
        let sys = SystemMatrices::new(mat(2, 2, &a1), mat(2, 2, &a2), mat(2, 1, &b)).unwrap();
        let sp = SynthesisParams::new(0.5, 0.3).unwrap();
        let g = mat(2, 2, &g);
        let q = &(&g * &g.transpose()) + &Matrix::identity(2).scale(0.1);
        let r = mat(1, 2, &r);
        let m1 = build_lmi(&sys, &sp, &q, &r).unwrap();
        let m2 = build_lmi(&sys, &sp, &q.scale(c), &r.scale(c)).unwrap();
        prop_assert_eq!(m1.max_asymmetry(), 0.0);
        let (e1, e2) = (m1.max_eigenvalue().unwrap(), m2.max_eigenvalue().unwrap());
        prop_assert!((e2 - c * e1).abs() <= 1e-9 * (1.0 + c * e1.abs()));
    }

    #[test]
    fn trigger_value_structure(
        x in prop::collection::vec(-3.0f64..3.0, 2),
        e1 in prop::collection::vec(-3.0f64..3.0, 2),
        e2 in prop::collection::vec(-3.0f64..3.0, 2),
        s in -2.0f64..2.0,
        sigma in 0.0f64..1.0,
    ) {
        let cfg = TriggerConfig::new(
            TriggerParams::new(0.1, 1.0, sigma, BaselineMode::HistorySup).unwrap(),
            mat(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            mat(2, 1, &[1.0, 1.0]),
            mat(1, 2, &[-2.3, -4.2]),
        )
        .unwrap();
        let c = |e: &[f64]| cfg.trigger_value(&x, e).unwrap();
        let zero = [0.0, 0.0];
        // C(x, 0) = −σ·V(x)
        prop_assert!((c(&zero) + sigma * cfg.lyapunov(&x)).abs() <= 1e-12 * (1.0 + cfg.lyapunov(&x)));
        // affine in ε
        let mix: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| a + s * b).collect();
        let lhs = c(&mix) - c(&zero);
        let rhs = (c(&e1) - c(&zero)) + s * (c(&e2) - c(&zero));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }
}

fn example2(phi: [&str; 2]) -> LinearDelaySystem<f64> {
    LinearDelaySystem::new(
        SystemMatrices::new(
            mat(2, 2, &[-1.0, -0.5, 3.0, 2.5]),
            mat(2, 2, &[1.2, 2.0, -0.4, -1.2]),
            mat(2, 1, &[1.0, 1.0]),
        )
        .unwrap(),
        parse_expr("2 - sin(t^2)", "t").unwrap(),
        3.0,
        phi.iter().map(|p| parse_expr(p, "s").unwrap()).collect(),
    )
    .unwrap()
}

fn example2_cfg() -> TriggerConfig<f64> {
    let p = mat(2, 2, &[1.5274, 1.4575, 1.4575, 4.1300]);
    let k = mat(1, 2, &[-0.8221, -0.7204]).try_mul(&p).unwrap();
    TriggerConfig::new(
        TriggerParams::new(0.1, 1.0, 0.1, BaselineMode::HistorySup).unwrap(),
        p,
        mat(2, 1, &[1.0, 1.0]),
        k,
    )
    .unwrap()
}

#[test]
fn closed_loop_run_respects_trigger_and_lyapunov() {
    let sys = example2(["-0.15*cos(3*pi*s/2)", "0.12*cos(pi*s)"]);
    let cfg = example2_cfg();
    let res = simulate(&sys, &cfg, &SimConfig::new(0.005, 20.0)).unwrap();

    assert!(res.times.windows(2).all(|w| w[1] > w[0]));
    assert!(res.events.windows(2).all(|w| w[1].t > w[0].t));
    for (i, (t, x)) in res.times.iter().zip(&res.states).enumerate() {
        assert!((res.v[i] - cfg.lyapunov(x)).abs() <= 1e-12 * (1.0 + res.v[i]));
        // held input equals K·x at the latest event not after t
        let ev = &res.events[res.input_index[i]];
        assert!(ev.t <= *t + 1e-12);
        let u = cfg.k().try_mul_vec(&ev.x).unwrap();
        assert_eq!(u, ev.u);
        // between events the rule stays below the threshold (up to localization error)
        let eps: Vec<f64> = ev.x.iter().zip(x).map(|(a, b)| a - b).collect();
        let gap = cfg.trigger_value(x, &eps).unwrap() - cfg.threshold(*t, res.baseline);
        assert!(gap <= 1e-6, "C - zeta = {gap} at t = {t}");
    }
}

#[test]
fn simulation_is_deterministic() {
    let sys = example2(["0.1", "1"]);
    let cfg = example2_cfg();
    let a = simulate(&sys, &cfg, &SimConfig::new(0.01, 10.0)).unwrap();
    let b = simulate(&sys, &cfg, &SimConfig::new(0.01, 10.0)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn f32_pipeline_tracks_f64() {
    let sys64 = LinearDelaySystem::new(
        SystemMatrices::new(
            Matrix::from_diag(&[0.0]),
            Matrix::from_diag(&[-0.1]),
            Matrix::from_diag(&[1.0]),
        )
        .unwrap(),
        parse_expr("16", "t").unwrap(),
        16.0,
        vec![parse_expr("1", "s").unwrap()],
    )
    .unwrap();
    let sys32 = LinearDelaySystem::new(
        SystemMatrices::new(
            Matrix::from_diag(&[0.0f32]),
            Matrix::from_diag(&[-0.1]),
            Matrix::from_diag(&[1.0]),
        )
        .unwrap(),
        parse_expr("16", "t").unwrap(),
        16.0f32,
        vec![parse_expr("1", "s").unwrap()],
    )
    .unwrap();
    let cfg64 = TriggerConfig::new(
        TriggerParams::new(0.09, 0.11, 0.1, BaselineMode::HistorySup).unwrap(),
        Matrix::from_diag(&[1.0]),
        Matrix::from_diag(&[1.0]),
        Matrix::from_diag(&[-0.2]),
    )
    .unwrap();
    let cfg32 = TriggerConfig::new(
        TriggerParams::new(0.09f32, 0.11, 0.1, BaselineMode::HistorySup).unwrap(),
        Matrix::from_diag(&[1.0]),
        Matrix::from_diag(&[1.0]),
        Matrix::from_diag(&[-0.2]),
    )
    .unwrap();
    let mut sim32 = SimConfig::new(0.01f32, 20.0);
    sim32.event_tol = 1e-5;
    let r64 = simulate(&sys64, &cfg64, &SimConfig::new(0.01, 20.0)).unwrap();
    let r32 = simulate(&sys32, &cfg32, &sim32).unwrap();
    assert!(r32.events.len() >= 2);
    assert!((r32.events[1].t as f64 - r64.events[1].t).abs() < 1e-2);
    let last64 = r64.states.last().unwrap()[0];
    let last32 = r32.states.last().unwrap()[0] as f64;
    assert!((last64 - last32).abs() < 1e-3);
}
