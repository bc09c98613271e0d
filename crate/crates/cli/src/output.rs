//! CSV files and the plain-text report.
//!
//! CSV floats use Rust's shortest round-trip formatting (`{:?}`), which is
//! locale independent. Report values are rounded to six significant digits.

use std::fmt::Write as _;

use etdelay_core::{DesignReportF64, DwellBound, MatrixF64, SimResultF64};

use crate::config::ScenarioConfig;

pub fn trajectory_csv(res: &SimResultF64) -> String {
    let n = res.states.first().map_or(0, Vec::len);
    let m = res.events.first().map_or(0, |e| e.u.len());
    let mut out = String::from("t");
    for i in 1..=n {
        write!(out, ",x{i}").unwrap();
    }
    out.push_str(",V");
    for j in 1..=m {
        write!(out, ",u{j}").unwrap();
    }
    out.push('\n');
    for (i, t) in res.times.iter().enumerate() {
        write!(out, "{t:?}").unwrap();
        for x in &res.states[i] {
            write!(out, ",{x:?}").unwrap();
        }
        write!(out, ",{:?}", res.v[i]).unwrap();
        for u in res.input_at(i) {
            write!(out, ",{u:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// One row per event; the gap is empty for the initial sample at `t = 0`.
pub fn events_csv(res: &SimResultF64) -> String {
    let mut out = String::from("k,t_k,gap_from_previous\n");
    for (k, e) in res.events.iter().enumerate() {
        match k {
            0 => writeln!(out, "{k},{:?},", e.t).unwrap(),
            _ => writeln!(out, "{k},{:?},{:?}", e.t, e.t - res.events[k - 1].t).unwrap(),
        }
    }
    out
}

/// Least-squares slope of `ln V` against `t` over the samples with `V > 0`,
/// reported as a rate (positive for decay).
pub fn decay_rate_fit(res: &SimResultF64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = res
        .times
        .iter()
        .zip(&res.v)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Six significant digits; exponent form outside `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if (1e-4..1e6).contains(&a) {
        let rounded: f64 = format!("{x:.5e}").parse().unwrap();
        format!("{rounded}")
    } else {
        format!("{x:.5e}")
    }
}

fn row(m: &MatrixF64, i: usize) -> String {
    m.row(i)
        .iter()
        .map(|&v| sig6(v))
        .collect::<Vec<_>>()
        .join(" ")
}

fn matrix_lines(out: &mut String, key: &str, m: &MatrixF64) {
    if m.rows() == 1 {
        writeln!(out, "{key}: {}", row(m, 0)).unwrap();
    } else {
        let rows: Vec<String> = (0..m.rows()).map(|i| row(m, i)).collect();
        writeln!(out, "{key}: {}", rows.join("; ")).unwrap();
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), sig6)
}

/// Key/value report. Sections always appear in the same order; the
/// simulation and certification sections only when a run is attached.
pub fn render_report(cfg: &ScenarioConfig, rep: &DesignReportF64) -> String {
    let mut out = String::new();
    let w = &mut out;

    writeln!(w, "[scenario]").unwrap();
    writeln!(w, "name: {}", cfg.name).unwrap();
    writeln!(w, "mode: {}", rep.mode).unwrap();
    writeln!(w, "tau: {}", cfg.delay.tau).unwrap();
    writeln!(w, "tau_bar: {}", sig6(rep.tau_bar)).unwrap();
    writeln!(w, "b: {}", sig6(rep.synthesis.b)).unwrap();
    writeln!(w, "h: {}", sig6(rep.synthesis.h)).unwrap();
    writeln!(w, "alpha: {}", sig6(rep.trigger.alpha)).unwrap();
    writeln!(w, "beta: {}", sig6(rep.trigger.beta)).unwrap();
    writeln!(w, "sigma: {}", sig6(rep.trigger.sigma)).unwrap();
    writeln!(w, "baseline_mode: {}", rep.trigger.baseline_mode.as_str()).unwrap();

    writeln!(w, "\n[controller]").unwrap();
    match &rep.controller {
        Some(d) => {
            matrix_lines(w, "K", &d.k);
            matrix_lines(w, "P", &d.p);
            matrix_lines(w, "Q", &d.q);
            matrix_lines(w, "R", &d.r);
        }
        None => writeln!(w, "K: none").unwrap(),
    }
    writeln!(w, "lmi_max_eigenvalue: {}", opt(rep.lmi_max_eig)).unwrap();
    writeln!(w, "lmi_status: {}", rep.lmi_status.as_str()).unwrap();

    writeln!(w, "\n[checks]").unwrap();
    for c in &rep.parameter_checks {
        let verdict = match (c.informational, c.passed) {
            (true, true) => "yes",
            (true, false) => "no",
            (false, true) => "pass",
            (false, false) => "FAIL",
        };
        writeln!(w, "{}: {verdict} ({})", c.name, c.detail).unwrap();
    }
    writeln!(w, "valid: {}", rep.is_valid()).unwrap();

    writeln!(w, "\n[rates]").unwrap();
    writeln!(w, "a: {}", sig6(rep.a)).unwrap();
    writeln!(w, "lambda: {}", opt(rep.rate.map(|r| r.lambda))).unwrap();
    writeln!(w, "eta: {}", opt(rep.rate.map(|r| r.eta))).unwrap();

    writeln!(w, "\n[dwell]").unwrap();
    match &rep.dwell {
        Some(d) => {
            writeln!(w, "delta1: {}", sig6(d.delta1)).unwrap();
            writeln!(w, "delta2: {}", sig6(d.delta2)).unwrap();
            writeln!(w, "regime: {}", d.regime.as_str()).unwrap();
            let bound = match d.bound {
                DwellBound::Finite(t) => sig6(t),
                DwellBound::Unbounded => "unbounded".into(),
                DwellBound::NotAvailable => "none".into(),
            };
            writeln!(w, "t_tilde: {bound}").unwrap();
            writeln!(w, "note: {}", d.note()).unwrap();
            writeln!(w, "observed_min_gap: {}", opt(d.observed_min_gap)).unwrap();
        }
        None => writeln!(w, "regime: none").unwrap(),
    }

    if let Some(sim) = &rep.sim {
        writeln!(w, "\n[simulation]").unwrap();
        writeln!(w, "samples: {}", sim.times.len()).unwrap();
        writeln!(w, "horizon: {}", opt(sim.times.last().copied())).unwrap();
        writeln!(w, "events: {}", sim.events.len()).unwrap();
        writeln!(w, "min_gap: {}", opt(sim.min_gap())).unwrap();
        writeln!(w, "mean_gap: {}", opt(sim.mean_gap())).unwrap();
        writeln!(w, "zeno_guard: {}", sim.zeno_guard_hit).unwrap();
        writeln!(w, "v0_baseline: {}", sig6(sim.baseline)).unwrap();
        writeln!(w, "v_final: {}", opt(sim.v.last().copied())).unwrap();
        writeln!(w, "decay_rate_fit: {}", opt(decay_rate_fit(sim))).unwrap();
    }

    if let Some(c) = &rep.bound_certification {
        writeln!(w, "\n[certification]").unwrap();
        writeln!(
            w,
            "bound: V(t) <= {} * exp(-{} t)",
            sig6(c.baseline),
            opt(rep.rate.map(|r| r.eta))
        )
        .unwrap();
        writeln!(w, "max_ratio: {}", sig6(c.max_ratio)).unwrap();
        writeln!(w, "worst_time: {}", sig6(c.worst_time)).unwrap();
        writeln!(w, "verdict: {}", if c.passed { "pass" } else { "FAIL" }).unwrap();
    }

    writeln!(w, "\n[warnings]").unwrap();
    if rep.warnings.is_empty() {
        writeln!(w, "none").unwrap();
    }
    for msg in &rep.warnings {
        writeln!(w, "- {msg}").unwrap();
    }
    out
}
