//! Center-of-pressure (CoP) and ground-reaction-force (GRF) estimation for
//! foot force modules with four single-axis sensors, plus calibration of the
//! per-sensor affine models against a known-load apparatus and a
//! static-equilibrium simulator for synthetic data.
//!
//! ```
//! use footcal::{compute_load, SensorLayout};
//!
//! let foot = SensorLayout::nao_foot();
//! let load = compute_load(&foot, &[10.0, 10.0, 10.0, 10.0]).unwrap();
//! assert_eq!(load.grf, 40.0);
//! assert!(load.cop.norm() < 1e-12);
//! ```

// NaN-rejecting guards are written as negated comparisons on purpose, and the
// small dense matrix routines read best with explicit indices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod apparatus;
pub mod calibrator;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod measurement;
pub mod metrics;
pub mod sensor;
pub mod simulator;

pub use apparatus::{
    reference_load, trial_plan, ApparatusConfig, CalibrationSession, CalibrationTrial, GridSpec, PlannedTrial,
    Protrusion, ProtrusionId, ProtrusionLayout, ProtrusionSelector, STANDARD_GRAVITY,
};
pub use calibrator::{
    calibrate, cost, cost_gradient, refine_gauss_newton, solve_linearized, CalibrationConfig, CalibrationMode,
    CalibrationResult, CostBreakdown, Regularizer, SolveStatus, SolverKind,
};
pub use error::{Error, Result};
pub use geometry::Point;
pub use measurement::{
    combine_double_support, compute_load, sensor_forces, LoadEstimate, ModulePose, SensorLayout, MIN_TOTAL_FORCE,
};
pub use metrics::{e_cop, e_grf, mae, report, ErrorReport, MetricDenominators, Outcome};
pub use sensor::{apply_affine, invert_affine, tare_and_scale, AffineParams, ParamVector, RawSample, SensorId, Side};
pub use simulator::{distribute_forces, SimScenario, Simulator, StanceDescription};

/// The guide's chapters, compiled so their snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sensor-model.md")]
    mod sensor_model {}
    #[doc = include_str!("../../../book/src/measurement.md")]
    mod measurement {}
    #[doc = include_str!("../../../book/src/apparatus.md")]
    mod apparatus {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
