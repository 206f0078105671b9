//! The regularized least-squares objective and its derivatives.
//!
//! ```text
//! J(ζ) = w_c · Σ_i |C_i − c_i(ζ)|²  +  w_n · Σ_i (N_i − n_i(ζ))²  +  R(ζ)
//! ```
//!
//! where `c_i(ζ) = Σ_k F_ik t_k / Σ_k F_ik`, `n_i(ζ) = Σ_k F_ik` and
//! `F_ik = c_k S_ik + d_k`. The CoP term is a ratio of affine functions of ζ,
//! so J is not quadratic unless `w_c = 0`.

use crate::apparatus::CalibrationSession;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::measurement::{LoadEstimate, MIN_TOTAL_FORCE};
use crate::sensor::{ParamVector, SENSORS_PER_MODULE};

use super::{CalibrationConfig, Regularizer};

const N: usize = ParamVector::LEN;
const K: usize = SENSORS_PER_MODULE;

/// Value of the objective split into its three terms.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct CostBreakdown {
    pub total: f64,
    pub cop: f64,
    pub grf: f64,
    pub regularizer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Term {
    Cop,
    Grf,
    Regularizer,
}

/// Session data flattened for repeated evaluation.
pub(crate) struct Problem<'a> {
    pub positions: [Point; K],
    pub raw: Vec<[f64; K]>,
    pub reference: Vec<LoadEstimate>,
    pub cfg: &'a CalibrationConfig,
}

impl<'a> Problem<'a> {
    pub fn new(session: &CalibrationSession, cfg: &'a CalibrationConfig) -> Result<Self> {
        cfg.check_values()?;
        Ok(Problem {
            positions: *session.layout().positions(),
            raw: session.trials().iter().map(|t| *t.mean_raw.values()).collect(),
            reference: session.references()?,
            cfg,
        })
    }

    /// Calls `f(term, r, ∂r/∂ζ)` for every scalar residual `r`, so that
    /// `J = Σ r²`. Residual rows with zero weight are skipped.
    pub fn for_each_residual(
        &self,
        z: &ParamVector,
        mut f: impl FnMut(Term, f64, &[f64; N]),
    ) -> Result<()> {
        let cfg = self.cfg;
        let sw_c = cfg.w_cop.sqrt();
        let sw_n = cfg.w_grf.sqrt();
        let mut row = [0.0; N];

        for (i, (raw, reference)) in self.raw.iter().zip(&self.reference).enumerate() {
            let forces: [f64; K] = std::array::from_fn(|k| z.force(k, raw[k]));
            let total: f64 = forces.iter().sum();

            if cfg.w_cop > 0.0 {
                if !(total > MIN_TOTAL_FORCE) {
                    return Err(Error::DegenerateTrial { trial: i, total });
                }
                let moment = self
                    .positions
                    .iter()
                    .zip(forces)
                    .fold(Point::ORIGIN, |acc, (&p, f)| acc + p * f);
                let cop = moment * (1.0 / total);

                for axis in 0..2 {
                    let (measured, target) = if axis == 0 {
                        (cop.x, reference.cop.x)
                    } else {
                        (cop.y, reference.cop.y)
                    };
                    for k in 0..K {
                        let t = if axis == 0 { self.positions[k].x } else { self.positions[k].y };
                        // ∂cop/∂F_k = (t_k − cop)/n
                        let dcop_df = (t - measured) / total;
                        row[k] = -sw_c * dcop_df * raw[k];
                        row[k + K] = -sw_c * dcop_df;
                    }
                    f(Term::Cop, sw_c * (target - measured), &row);
                }
            }

            if cfg.w_grf > 0.0 {
                for k in 0..K {
                    row[k] = -sw_n * raw[k];
                    row[k + K] = -sw_n;
                }
                f(Term::Grf, sw_n * (reference.grf - total), &row);
            }
        }

        let anchor = &cfg.anchor;
        match &cfg.regularizer {
            Regularizer::Parameter(weights) => {
                for j in 0..N {
                    if weights[j] > 0.0 {
                        let s = weights[j].sqrt();
                        row = [0.0; N];
                        row[j] = s;
                        f(Term::Regularizer, s * (z.0[j] - anchor.0[j]), &row);
                    }
                }
            }
            Regularizer::ForceOutput(weight) => {
                if *weight > 0.0 {
                    let s = weight.sqrt();
                    for raw in &self.raw {
                        for k in 0..K {
                            row = [0.0; N];
                            row[k] = s * raw[k];
                            row[k + K] = s;
                            let delta = (z.c(k) - anchor.c(k)) * raw[k] + (z.d(k) - anchor.d(k));
                            f(Term::Regularizer, s * delta, &row);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn cost(&self, z: &ParamVector) -> Result<CostBreakdown> {
        let mut out = CostBreakdown::default();
        self.for_each_residual(z, |term, r, _| {
            let r2 = r * r;
            match term {
                Term::Cop => out.cop += r2,
                Term::Grf => out.grf += r2,
                Term::Regularizer => out.regularizer += r2,
            }
        })?;
        out.total = out.cop + out.grf + out.regularizer;
        Ok(out)
    }

    pub fn gradient(&self, z: &ParamVector) -> Result<[f64; N]> {
        let mut g = [0.0; N];
        self.for_each_residual(z, |_, r, dr| {
            for j in 0..N {
                g[j] += 2.0 * r * dr[j];
            }
        })?;
        Ok(g)
    }

    /// Gauss–Newton quantities `JᵀJ`, `Jᵀr` and the current cost.
    pub fn gauss_newton_system(&self, z: &ParamVector) -> Result<([[f64; N]; N], [f64; N], f64)> {
        let mut jtj = [[0.0; N]; N];
        let mut jtr = [0.0; N];
        let mut cost = 0.0;
        self.for_each_residual(z, |_, r, dr| {
            cost += r * r;
            for i in 0..N {
                if dr[i] == 0.0 {
                    continue;
                }
                jtr[i] += dr[i] * r;
                for j in 0..N {
                    jtj[i][j] += dr[i] * dr[j];
                }
            }
        })?;
        Ok((jtj, jtr, cost))
    }

    /// Measured (CoP, GRF) of each trial at `cop_params`, with the GRF taken
    /// from `grf_params`. CoP is `None` where the total force is too small.
    pub fn measured(&self, cop_params: &ParamVector, grf_params: &ParamVector) -> Vec<(Option<Point>, f64)> {
        self.raw
            .iter()
            .map(|raw| {
                let forces: [f64; K] = std::array::from_fn(|k| cop_params.force(k, raw[k]));
                let total: f64 = forces.iter().sum();
                let cop = (total > MIN_TOTAL_FORCE).then(|| {
                    self.positions
                        .iter()
                        .zip(forces)
                        .fold(Point::ORIGIN, |acc, (&p, f)| acc + p * f)
                        * (1.0 / total)
                });
                let grf = (0..K).map(|k| grf_params.force(k, raw[k])).sum();
                (cop, grf)
            })
            .collect()
    }
}

/// Objective value at `z`, split into its CoP, GRF and regularizer terms.
pub fn cost(z: &ParamVector, session: &CalibrationSession, cfg: &CalibrationConfig) -> Result<CostBreakdown> {
    Problem::new(session, cfg)?.cost(z)
}

/// Analytic gradient `∂J/∂ζ`.
pub fn cost_gradient(
    z: &ParamVector,
    session: &CalibrationSession,
    cfg: &CalibrationConfig,
) -> Result<[f64; N]> {
    Problem::new(session, cfg)?.gradient(z)
}
