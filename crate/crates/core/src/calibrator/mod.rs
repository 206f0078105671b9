//! Module-level calibration: fits per-sensor affine parameters ζ so that
//! measured CoP (and, for FSR modules, GRF) match the apparatus references,
//! while a regularizer keeps the forces close to those given by the anchor ζ₀.
//!
//! Two modes are supported:
//!
//! * [`CalibrationMode::Fsr`] fits both CoP and GRF; ζ₀ is the identity
//!   model of factory-calibrated FSRs.
//! * [`CalibrationMode::Shoe`] fits CoP only (`w_grf = 0`); ζ₀ comes from
//!   per-load-cell tare and scale, and GRF keeps using ζ₀.

mod cost;
mod normal;
mod solve;

use serde::{Deserialize, Serialize};

pub use cost::{cost, cost_gradient, CostBreakdown};
pub use solve::{calibrate, refine_gauss_newton, solve_linearized};

use crate::apparatus::CalibrationSession;
use crate::error::{Error, Result};
use crate::sensor::{ParamVector, SENSORS_PER_MODULE};

/// Default base weight of the regularizer.
pub const DEFAULT_REGULARIZATION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    Fsr,
    Shoe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Linearized,
    GaussNewton,
}

/// Penalty keeping ζ near the anchor ζ₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    /// `Σ_j w_j (ζ_j − ζ₀_j)²`.
    Parameter([f64; ParamVector::LEN]),
    /// `w Σ_i Σ_k (F_ik(ζ) − F_ik(ζ₀))²`, the per-trial force deviation.
    ForceOutput(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub mode: CalibrationMode,
    /// Weight of the CoP term, per mm².
    pub w_cop: f64,
    /// Weight of the GRF term, per N².
    pub w_grf: f64,
    pub regularizer: Regularizer,
    /// ζ₀.
    pub anchor: ParamVector,
    pub solver: SolverKind,
    pub max_iterations: usize,
    /// Gauss–Newton stops once the gradient norm drops below this.
    pub convergence_tol: f64,
}

/// Parameter-regularizer weights that penalize a change in `c_k` and a
/// change in `d_k` by the force change each causes at the session's mean raw
/// reading: `w·s̄_k²` for `c_k`, `w` for `d_k`.
pub fn scale_aware_weights(session: &CalibrationSession, w: f64) -> [f64; ParamVector::LEN] {
    let mean = session.mean_raw();
    std::array::from_fn(|j| {
        if j < SENSORS_PER_MODULE {
            w * mean[j] * mean[j]
        } else {
            w
        }
    })
}

impl CalibrationConfig {
    /// FSR mode with default weights: `w_cop = w_grf = 1`, identity anchor.
    pub fn fsr(session: &CalibrationSession) -> Self {
        CalibrationConfig {
            mode: CalibrationMode::Fsr,
            w_cop: 1.0,
            w_grf: 1.0,
            regularizer: Regularizer::Parameter(scale_aware_weights(session, DEFAULT_REGULARIZATION)),
            anchor: ParamVector::identity(),
            solver: SolverKind::GaussNewton,
            max_iterations: 100,
            convergence_tol: 1e-10,
        }
    }

    /// Shoe mode with default weights: `w_cop = 1`, `w_grf = 0`.
    pub fn shoe(session: &CalibrationSession, anchor: ParamVector) -> Self {
        CalibrationConfig {
            mode: CalibrationMode::Shoe,
            w_grf: 0.0,
            anchor,
            ..CalibrationConfig::fsr(session)
        }
    }

    pub fn with_uniform_regularization(mut self, w: f64) -> Self {
        self.regularizer = Regularizer::Parameter([w; ParamVector::LEN]);
        self
    }

    /// Full check for solving: additionally requires a positive data weight.
    pub fn validate(&self) -> Result<()> {
        self.check_values()?;
        if self.w_cop == 0.0 && self.w_grf == 0.0 {
            return Err(Error::InvalidInput(
                "calibration config: at least one of w_cop, w_grf must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Checks that are enough to evaluate the objective. A configuration
    /// with both data weights zero is still a valid (pure regularizer) cost.
    pub(crate) fn check_values(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(format!("calibration config: {m}")));
        let nonneg = |x: f64| x >= 0.0 && x.is_finite();
        if !nonneg(self.w_cop) || !nonneg(self.w_grf) {
            return bad(format!("weights must be non-negative (w_cop {}, w_grf {})", self.w_cop, self.w_grf));
        }
        match &self.regularizer {
            Regularizer::Parameter(w) if w.iter().any(|&x| !nonneg(x)) => {
                return bad("regularizer weights must be non-negative".into())
            }
            Regularizer::ForceOutput(w) if !nonneg(*w) => {
                return bad("regularizer weight must be non-negative".into())
            }
            _ => {}
        }
        if self.anchor.0.iter().any(|v| !v.is_finite()) {
            return bad("anchor must be finite".into());
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        if !(self.convergence_tol >= 0.0) {
            return bad("convergence_tol must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Linearized solve only, no refinement.
    Linear,
    Converged,
    MaxIterations,
    /// Damping hit its ceiling without finding descent; best point returned.
    NoProgress,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualPair {
    pub cop_error_mm: f64,
    pub grf_error_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResidual {
    pub before: ResidualPair,
    pub after: ResidualPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub mode: CalibrationMode,
    /// ζ*, used for CoP.
    pub params: ParamVector,
    /// ζ₀.
    pub anchor: ParamVector,
    /// Objective at ζ₀; `None` if some trial has no defined CoP there.
    pub initial_cost: Option<CostBreakdown>,
    pub final_cost: CostBreakdown,
    pub iterations: usize,
    pub status: SolveStatus,
    /// The anchor beat the linearized solution and was used as the start.
    pub anchor_retained: bool,
    /// Per-trial absolute errors at ζ₀ (before) and at the result (after).
    pub residuals: Vec<TrialResidual>,
}

impl CalibrationResult {
    /// Parameters for GRF: ζ* in FSR mode, ζ₀ in shoe mode.
    pub fn grf_params(&self) -> &ParamVector {
        match self.mode {
            CalibrationMode::Fsr => &self.params,
            CalibrationMode::Shoe => &self.anchor,
        }
    }
}

#[cfg(test)]
mod tests;
