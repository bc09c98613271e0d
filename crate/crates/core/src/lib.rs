//! Event-triggered stabilization of linear systems with time-varying delay.
//!
//! The plant is `ẋ = A₁x + A₂x(t − τ(t)) + Bu` with `u = K·x(t_k)` held between
//! events. Events fire when `2xᵀPBKε − σxᵀPx` reaches `α‖V₀‖·e^{−βt}`, and a
//! Halanay-type inequality gives `V(t) ≤ ‖V₀‖·e^{−ηt}`.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below fix the scalar for the common case.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ddesim;
pub mod exprparse;
pub mod halanay;
pub mod linalg;
pub mod lmi;
pub mod pipeline;
mod roots;
pub mod scalar;
pub mod trigger;

pub use ddesim::{
    simulate, Event, History, HistoryError, Interp, LinearDelaySystem, SimConfig, SimError,
    SimResult,
};
pub use exprparse::{eval_expr, parse_expr, EvalError, ParseError, ScalarExpr};
pub use halanay::{
    certify_bound, certify_bound_with_slack, integrate_comparison, solve_lambda, BaselineMode,
    Certification, HalanayError, HalanayParams, HalanayRate,
};
pub use linalg::{LinalgError, Matrix, SymEigen};
pub use lmi::{
    build_lmi, synthesize_gain, verify_feasible, ControllerDesign, Feasibility, LmiError,
    SynthesisOptions, SynthesisParams, SystemMatrices,
};
pub use pipeline::{
    design_batch, design_controller, ControllerMode, DesignJob, DesignReport, LmiStatus,
    ParameterCheck, PipelineError,
};
pub use scalar::Real;
pub use trigger::{
    dwell_constants, g2, g2_root, min_dwell_time, DwellBound, DwellConstants, DwellRegime,
    DwellReport, TriggerConfig, TriggerError, TriggerParams,
};

pub type MatrixF64 = Matrix<f64>;
pub type SystemMatricesF64 = SystemMatrices<f64>;
pub type SynthesisParamsF64 = SynthesisParams<f64>;
pub type ControllerDesignF64 = ControllerDesign<f64>;
pub type HalanayParamsF64 = HalanayParams<f64>;
pub type HalanayRateF64 = HalanayRate<f64>;
pub type TriggerParamsF64 = TriggerParams<f64>;
pub type TriggerConfigF64 = TriggerConfig<f64>;
pub type DwellReportF64 = DwellReport<f64>;
pub type LinearDelaySystemF64 = LinearDelaySystem<f64>;
pub type SimConfigF64 = SimConfig<f64>;
pub type SimResultF64 = SimResult<f64>;
pub type ControllerModeF64 = ControllerMode<f64>;
pub type DesignReportF64 = DesignReport<f64>;
