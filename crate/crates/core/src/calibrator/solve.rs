use crate::apparatus::CalibrationSession;
use crate::error::{Error, Result};
use crate::measurement::invisible_offset_pattern;
use crate::sensor::{ParamVector, SENSORS_PER_MODULE};

use super::cost::{CostBreakdown, Problem};
use super::normal::{solve_spd, NormalEquations};
use super::{
    CalibrationConfig, CalibrationMode, CalibrationResult, Regularizer, ResidualPair, SolveStatus,
    SolverKind, TrialResidual,
};

const N: usize = ParamVector::LEN;
const K: usize = SENSORS_PER_MODULE;

const INITIAL_DAMPING: f64 = 1e-3;
const DAMPING_CEILING: f64 = 1e8;
const DAMPING_FLOOR: f64 = 1e-20;

fn check_scales(z: &ParamVector) -> Result<()> {
    for k in 0..K {
        if !(z.c(k) > 0.0) {
            return Err(Error::NonPositiveScale {
                sensor: k + 1,
                value: z.c(k),
            });
        }
    }
    Ok(())
}

/// Closed-form solve of the denominator-cleared problem.
///
/// Multiplying the CoP residual `C − Σ F_k t_k / Σ F_k` by `Σ F_k / N`
/// (with `N` the reference force of the trial) gives
/// `Σ_k F_k (C − t_k) / N`, which is linear in ζ and equals the true
/// residual wherever the measured and reference forces agree. Together with
/// the linear GRF and regularizer residuals this is an ordinary linear
/// least-squares problem.
pub fn solve_linearized(session: &CalibrationSession, cfg: &CalibrationConfig) -> Result<ParamVector> {
    cfg.validate()?;
    let problem = Problem::new(session, cfg)?;
    let mut ne = NormalEquations::new();
    let sw_c = cfg.w_cop.sqrt();
    let sw_n = cfg.w_grf.sqrt();

    for (raw, reference) in problem.raw.iter().zip(&problem.reference) {
        if cfg.w_cop > 0.0 {
            let norm = sw_c / reference.grf;
            for axis in 0..2 {
                let mut row = [0.0; N];
                for k in 0..K {
                    let (target, t) = if axis == 0 {
                        (reference.cop.x, problem.positions[k].x)
                    } else {
                        (reference.cop.y, problem.positions[k].y)
                    };
                    let lever = norm * (target - t);
                    row[k] = lever * raw[k];
                    row[k + K] = lever;
                }
                ne.add_row(&row, 0.0);
            }
        }
        if cfg.w_grf > 0.0 {
            let mut row = [0.0; N];
            for k in 0..K {
                row[k] = sw_n * raw[k];
                row[k + K] = sw_n;
            }
            ne.add_row(&row, sw_n * reference.grf);
        }
    }

    let anchor = &cfg.anchor;
    match &cfg.regularizer {
        Regularizer::Parameter(weights) => {
            for j in 0..N {
                ne.add_diagonal(j, weights[j], anchor.0[j]);
            }
        }
        Regularizer::ForceOutput(weight) => {
            let s = weight.sqrt();
            for raw in &problem.raw {
                for k in 0..K {
                    let mut row = [0.0; N];
                    row[k] = s * raw[k];
                    row[k + K] = s;
                    ne.add_row(&row, s * anchor.force(k, raw[k]));
                }
            }
        }
    }

    let z = ParamVector(ne.solve()?);
    let z = settle_invisible(&problem, z, false);
    check_scales(&z)?;
    Ok(z)
}

/// Moves `z` to the regularizer's minimum along the directions the data
/// terms cannot see, leaving the data terms unchanged.
///
/// Adding a multiple of the layout's invisible offset pattern to the `d`
/// parameters changes neither CoP nor GRF, and in CoP-only fits scaling all
/// of ζ leaves the CoP unchanged too. Along these directions the objective
/// is the regularizer alone, so the optimum is found in closed form here
/// rather than left to a solve whose data part is exactly flat there.
fn settle_invisible(problem: &Problem<'_>, z: ParamVector, include_scale: bool) -> ParamVector {
    let cfg = problem.cfg;
    let u = invisible_offset_pattern(&problem.positions);
    let offset_dir: [f64; N] = std::array::from_fn(|j| if j < K { 0.0 } else { u[j - K] });
    let dirs: Vec<[f64; N]> = if include_scale { vec![offset_dir, z.0] } else { vec![offset_dir] };
    let m = dirs.len();

    // Regularizer residuals are affine in the step coefficients a:
    // r(a) = r0 + Σ_i a_i g_i. Accumulate the small normal system.
    let mut ata = [[0.0; 2]; 2];
    let mut atb = [0.0; 2];
    let mut add = |r0: f64, g: &[f64]| {
        for i in 0..m {
            atb[i] -= g[i] * r0;
            for l in 0..m {
                ata[i][l] += g[i] * g[l];
            }
        }
    };
    let anchor = &cfg.anchor;
    match &cfg.regularizer {
        Regularizer::Parameter(w) => {
            for j in 0..N {
                let s = w[j].sqrt();
                let g: Vec<f64> = dirs.iter().map(|d| s * d[j]).collect();
                add(s * (z.0[j] - anchor.0[j]), &g);
            }
        }
        Regularizer::ForceOutput(w) => {
            let s = w.sqrt();
            for raw in &problem.raw {
                for k in 0..K {
                    let g: Vec<f64> = dirs.iter().map(|d| s * (d[k] * raw[k] + d[k + K])).collect();
                    add(s * (z.force(k, raw[k]) - anchor.force(k, raw[k])), &g);
                }
            }
        }
    }
    let a = match m {
        1 if ata[0][0] > 0.0 => [atb[0] / ata[0][0], 0.0],
        2 => {
            let det = ata[0][0] * ata[1][1] - ata[0][1] * ata[1][0];
            if !(det.abs() > 1e-300) || !(det > 1e-12 * ata[0][0] * ata[1][1]) {
                return z;
            }
            [
                (atb[0] * ata[1][1] - atb[1] * ata[0][1]) / det,
                (atb[1] * ata[0][0] - atb[0] * ata[1][0]) / det,
            ]
        }
        _ => return z,
    };
    let moved = ParamVector(std::array::from_fn(|j| {
        z.0[j] + dirs.iter().zip(a).map(|(d, ai)| ai * d[j]).sum::<f64>()
    }));
    // The data terms are unchanged up to rounding, and the regularizer gain
    // can itself be below rounding, so only reject a real increase (which
    // would mean the invariance does not hold, e.g. a sign change of the
    // total force). Never end above the anchor's cost.
    let Ok(after) = problem.cost(&moved) else { return z };
    let not_worse = problem
        .cost(&z)
        .map_or(true, |before| after.total <= before.total * (1.0 + 1e-12));
    let below_anchor = problem.cost(&cfg.anchor).map_or(true, |a| after.total <= a.total);
    if not_worse && below_anchor {
        moved
    } else {
        z
    }
}

/// Levenberg-damped Gauss–Newton on the exact objective, starting at `init`.
///
/// Steps solve `(JᵀJ + λ·diag(JᵀJ)) δ = −Jᵀr`; a step is accepted only if it
/// lowers the cost, so the returned point is never worse than `init`.
/// Damping is multiplied by 10 after a rejected step and divided by 10 after
/// an accepted one. If it exceeds the ceiling without finding descent, the
/// best point so far is returned with [`SolveStatus::NoProgress`].
pub fn refine_gauss_newton(
    init: &ParamVector,
    session: &CalibrationSession,
    cfg: &CalibrationConfig,
) -> Result<CalibrationResult> {
    cfg.validate()?;
    let problem = Problem::new(session, cfg)?;
    let (z, iterations, status) = gauss_newton(&problem, *init)?;
    let z = settle_invisible(&problem, z, cfg.w_grf == 0.0);
    check_scales(&z)?;
    assemble(&problem, cfg, z, iterations, status, false)
}

fn gauss_newton(problem: &Problem<'_>, init: ParamVector) -> Result<(ParamVector, usize, SolveStatus)> {
    let cfg = problem.cfg;
    let mut z = init;
    let mut lambda = INITIAL_DAMPING;
    let mut iterations = 0;

    let (mut jtj, mut jtr, mut current) = problem.gauss_newton_system(&z)?;
    loop {
        let grad_norm = 2.0 * jtr.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm < cfg.convergence_tol || current == 0.0 {
            // The diagonal damping barely moves along weakly curved
            // directions (those fixed only by the regularizer), where a
            // small gradient can still mean a sizeable distance to the
            // minimum. Finish with undamped steps while they help.
            match polish_step(problem, &z, &jtj, &jtr, current) {
                Some((next, _)) if iterations < cfg.max_iterations => {
                    iterations += 1;
                    z = next;
                    (jtj, jtr, current) = problem.gauss_newton_system(&z)?;
                    continue;
                }
                _ => return Ok((z, iterations, SolveStatus::Converged)),
            }
        }
        if iterations >= cfg.max_iterations {
            return Ok((z, iterations, SolveStatus::MaxIterations));
        }
        iterations += 1;

        let max_diag = (0..N).map(|j| jtj[j][j]).fold(0.0, f64::max);
        let accepted = loop {
            let mut damped = jtj;
            for j in 0..N {
                damped[j][j] += lambda * jtj[j][j].max(1e-12 * max_diag);
            }
            let neg: [f64; N] = jtr.map(|g| -g);
            let step = solve_spd(&damped, &neg).ok();
            if let Some(step) = step {
                if is_negligible(&step, &z) {
                    return Ok((z, iterations, SolveStatus::Converged));
                }
                let candidate = ParamVector(std::array::from_fn(|j| z.0[j] + step[j]));
                if let Ok(c) = problem.cost(&candidate) {
                    if c.total < current {
                        break Some((candidate, c.total));
                    }
                }
            }
            lambda *= 10.0;
            if lambda > DAMPING_CEILING {
                break None;
            }
        };

        let Some((next, next_cost)) = accepted else {
            return Ok((z, iterations, SolveStatus::NoProgress));
        };
        let relative_drop = (current - next_cost) / current;
        z = next;
        lambda = (lambda / 10.0).max(DAMPING_FLOOR);
        (jtj, jtr, current) = problem.gauss_newton_system(&z)?;
        if relative_drop <= 1e-15 {
            return Ok((z, iterations, SolveStatus::Converged));
        }
    }
}

/// Undamped Gauss–Newton step, if it is not negligible and lowers the cost.
fn polish_step(
    problem: &Problem<'_>,
    z: &ParamVector,
    jtj: &[[f64; N]; N],
    jtr: &[f64; N],
    current: f64,
) -> Option<(ParamVector, f64)> {
    if current == 0.0 {
        return None;
    }
    let step = solve_spd(jtj, &jtr.map(|g| -g)).ok()?;
    if is_negligible(&step, z) {
        return None;
    }
    let candidate = ParamVector(std::array::from_fn(|j| z.0[j] + step[j]));
    let c = problem.cost(&candidate).ok()?.total;
    (c < current).then_some((candidate, c))
}

fn is_negligible(step: &[f64; N], z: &ParamVector) -> bool {
    step.iter()
        .zip(z.0)
        .all(|(s, v)| s.abs() <= 4.0 * f64::EPSILON * v.abs().max(f64::MIN_POSITIVE))
}

fn assemble(
    problem: &Problem<'_>,
    cfg: &CalibrationConfig,
    z: ParamVector,
    iterations: usize,
    status: SolveStatus,
    anchor_retained: bool,
) -> Result<CalibrationResult> {
    let anchor = cfg.anchor;
    let initial_cost = problem.cost(&anchor).ok();
    let final_cost = problem.cost(&z)?;
    let grf_params = match cfg.mode {
        CalibrationMode::Fsr => z,
        CalibrationMode::Shoe => anchor,
    };
    let before = problem.measured(&anchor, &anchor);
    let after = problem.measured(&z, &grf_params);
    let residuals = problem
        .reference
        .iter()
        .zip(before.iter().zip(&after))
        .map(|(reference, (b, a))| {
            let pair = |(cop, grf): &(Option<crate::geometry::Point>, f64)| ResidualPair {
                cop_error_mm: cop.map_or(f64::NAN, |c| c.distance(reference.cop)),
                grf_error_n: (reference.grf - grf).abs(),
            };
            TrialResidual {
                before: pair(b),
                after: pair(a),
            }
        })
        .collect();
    Ok(CalibrationResult {
        mode: cfg.mode,
        params: z,
        anchor,
        initial_cost,
        final_cost,
        iterations,
        status,
        anchor_retained,
        residuals,
    })
}

/// Full pipeline: linearized solve, then (for [`SolverKind::GaussNewton`])
/// refinement on the exact objective.
///
/// The refinement starts from whichever of the linearized solution and the
/// anchor ζ₀ has the lower exact cost, so the result never costs more than
/// ζ₀. In shoe mode the GRF path of the result keeps using ζ₀.
pub fn calibrate(session: &CalibrationSession, cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    cfg.validate()?;
    let problem = Problem::new(session, cfg)?;
    let linear = solve_linearized(session, cfg)?;

    let anchor_cost = problem.cost(&cfg.anchor).map(|c| c.total);
    let linear_cost = problem.cost(&linear).map(|c| c.total);
    let (start, anchor_retained) = match (linear_cost, anchor_cost) {
        (Ok(l), Ok(a)) if a < l => (cfg.anchor, true),
        (Ok(_), _) => (linear, false),
        (Err(_), Ok(_)) => (cfg.anchor, true),
        (Err(e), Err(_)) => return Err(e),
    };

    match cfg.solver {
        SolverKind::Linearized => assemble(&problem, cfg, start, 0, SolveStatus::Linear, anchor_retained),
        SolverKind::GaussNewton => {
            let (z, iterations, status) = gauss_newton(&problem, start)?;
            let z = settle_invisible(&problem, z, cfg.w_grf == 0.0);
            check_scales(&z)?;
            assemble(&problem, cfg, z, iterations, status, anchor_retained && z == cfg.anchor)
        }
    }
}

impl CalibrationResult {
    /// Cost at the anchor, or infinity where it is undefined.
    pub fn initial_total(&self) -> f64 {
        self.initial_cost.map_or(f64::INFINITY, |c: CostBreakdown| c.total)
    }
}
