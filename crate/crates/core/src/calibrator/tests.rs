use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::apparatus::{
    trial_plan, ApparatusConfig, CalibrationTrial, Protrusion, ProtrusionId, ProtrusionLayout, ProtrusionSelector,
};
use crate::geometry::Point;
use crate::measurement::SensorLayout;
use crate::sensor::{AffineParams, RawSample};
use crate::simulator::{distribute_forces, SimScenario, Simulator};

fn foot() -> SensorLayout {
    SensorLayout::nao_foot()
}

fn shoe_layout() -> SensorLayout {
    SensorLayout::rectangle("shoe", 140.0, 70.0, 200.0).unwrap()
}

/// Offsets along the layout's invisible pattern cannot be identified, so
/// ground truths meant for recovery checks carry none.
fn observable_offsets(layout: &SensorLayout, d: [f64; 4]) -> [f64; 4] {
    let u = layout.invisible_offset_pattern();
    let along: f64 = d.iter().zip(u).map(|(a, b)| a * b).sum();
    std::array::from_fn(|k| d[k] - along * u[k])
}

fn fsr_like(rng: &mut impl Rng) -> [AffineParams; 4] {
    let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.8..1.2));
    let d: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    let d = observable_offsets(&foot(), d);
    std::array::from_fn(|k| AffineParams::new(c[k], d[k]).unwrap())
}

fn load_cell_like(rng: &mut impl Rng) -> [AffineParams; 4] {
    std::array::from_fn(|_| {
        let noload = rng.random_range(4000.0..6000.0);
        let counts_per_n = rng.random_range(40.0..60.0);
        AffineParams::from_tare(noload, counts_per_n).unwrap()
    })
}

fn simulate(
    layout: SensorLayout,
    params: [AffineParams; 4],
    noise: f64,
    deadband: f64,
    seed: u64,
    masses: &[f64],
    rows: Option<Vec<u32>>,
) -> CalibrationSession {
    let app = ApparatusConfig::standard_grid();
    let selector = rows.map_or(ProtrusionSelector::All, ProtrusionSelector::Rows);
    let plan = trial_plan(&app, masses, &selector).unwrap();
    let mut sc = SimScenario::ideal(layout, params);
    sc.noise_sigma = noise;
    sc.deadband_n = deadband;
    sc.seed = seed;
    Simulator::new(sc).unwrap().simulate_session(&app, &plan, 20).unwrap()
}

fn foot_session(params: [AffineParams; 4], noise: f64, seed: u64) -> CalibrationSession {
    simulate(foot(), params, noise, 0.0, seed, &[2.0, 3.0, 4.0], Some(vec![2, 3, 4, 5]))
}

fn unregularized(mut cfg: CalibrationConfig) -> CalibrationConfig {
    cfg.regularizer = Regularizer::Parameter([0.0; 8]);
    cfg
}

/// One trial whose reference is CoP (0,0), GRF 20 N and whose identity-model
/// measurement is CoP (3,4), GRF 19 N.
fn hand_session() -> CalibrationSession {
    let app = ApparatusConfig {
        layout: ProtrusionLayout::Explicit(vec![Protrusion {
            id: ProtrusionId::new(1, 1),
            position_mm: Point::ORIGIN,
        }]),
        sole_mass_kg: 0.0,
        sole_com_mm: Point::ORIGIN,
        cap_mass_kg: 0.0,
        gravity_m_s2: 10.0,
        include_sole_weight: true,
    };
    let raw = distribute_forces(&foot(), Point::new(3.0, 4.0), 19.0).unwrap();
    let trial = CalibrationTrial {
        protrusion: ProtrusionId::new(1, 1),
        mass_kg: 2.0,
        mean_raw: RawSample::new(raw).unwrap(),
        sample_count: 1,
    };
    CalibrationSession::new(foot(), app, vec![trial]).unwrap()
}

#[test]
fn hand_evaluated_cost() {
    let session = hand_session();
    let cfg = unregularized(CalibrationConfig::fsr(&session));
    let c = cost(&ParamVector::identity(), &session, &cfg).unwrap();
    assert!((c.cop - 25.0).abs() < 1e-10, "{c:?}");
    assert!((c.grf - 1.0).abs() < 1e-10);
    assert_eq!(c.regularizer, 0.0);
    assert!((c.total - 26.0).abs() < 1e-10);
}

#[test]
fn perfect_model_costs_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let truth = fsr_like(&mut rng);
    let session = foot_session(truth, 0.0, 0);
    let cfg = unregularized(CalibrationConfig::fsr(&session));
    let c = cost(&ParamVector::from_params(&truth), &session, &cfg).unwrap();
    assert!(c.total < 1e-20, "{c:?}");
}

#[test]
fn regularizer_only_cost_and_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let session = foot_session(fsr_like(&mut rng), 0.1, 2);
    let mut cfg = CalibrationConfig::fsr(&session);
    cfg.w_cop = 0.0;
    cfg.w_grf = 0.0;
    let w: [f64; 8] = std::array::from_fn(|j| 0.5 + j as f64);
    cfg.regularizer = Regularizer::Parameter(w);
    assert_eq!(cost(&cfg.anchor, &session, &cfg).unwrap().total, 0.0);

    let z = ParamVector(std::array::from_fn(|j| cfg.anchor.0[j] + 0.1 * (j as f64 - 3.0)));
    let g = cost_gradient(&z, &session, &cfg).unwrap();
    for j in 0..8 {
        let expected = 2.0 * w[j] * (z.0[j] - cfg.anchor.0[j]);
        assert!((g[j] - expected).abs() < 1e-12, "{j}: {} vs {expected}", g[j]);
    }
    // solving needs a data term
    assert!(matches!(calibrate(&session, &cfg), Err(Error::InvalidInput(_))));
}

fn finite_difference(z: &ParamVector, session: &CalibrationSession, cfg: &CalibrationConfig) -> [f64; 8] {
    std::array::from_fn(|j| {
        let h = 1e-6 * z.0[j].abs().max(1e-3);
        let mut plus = *z;
        let mut minus = *z;
        plus.0[j] += h;
        minus.0[j] -= h;
        let jp = cost(&plus, session, cfg).unwrap().total;
        let jm = cost(&minus, session, cfg).unwrap().total;
        (jp - jm) / (2.0 * h)
    })
}

fn relative_gap(a: &[f64; 8], b: &[f64; 8]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-12);
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..20 {
        let shoe = i % 2 == 1;
        let (session, mut cfg) = if shoe {
            let truth = load_cell_like(&mut rng);
            let s = simulate(shoe_layout(), truth, 2.0, 0.0, i, &[1.0, 2.0], None);
            let anchor = ParamVector::from_params(&truth.map(|p| AffineParams::new(p.c() * 1.01, p.d() + 0.5).unwrap()));
            let cfg = CalibrationConfig::shoe(&s, anchor);
            (s, cfg)
        } else {
            let s = foot_session(fsr_like(&mut rng), 0.2, i);
            let cfg = CalibrationConfig::fsr(&s);
            (s, cfg)
        };
        if i % 4 == 0 {
            cfg.regularizer = Regularizer::ForceOutput(0.3);
        }
        let base = cfg.anchor;
        let z = ParamVector(std::array::from_fn(|j| base.0[j] * (1.0 + rng.random_range(-0.005..0.005))));
        let analytic = cost_gradient(&z, &session, &cfg).unwrap();
        let numeric = finite_difference(&z, &session, &cfg);
        let gap = relative_gap(&analytic, &numeric);
        assert!(gap < 1e-5, "instance {i}: gap {gap}\n{analytic:?}\n{numeric:?}");
    }
}

#[test]
fn gradient_vanishes_at_noiseless_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let truth = fsr_like(&mut rng);
    let session = foot_session(truth, 0.0, 0);
    let cfg = unregularized(CalibrationConfig::fsr(&session));
    let g = cost_gradient(&ParamVector::from_params(&truth), &session, &cfg).unwrap();
    assert!(g.iter().all(|v| v.abs() < 1e-9), "{g:?}");
}

#[test]
fn linearized_recovers_truth() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let truth = fsr_like(&mut rng);
    let session = foot_session(truth, 0.0, 0);
    let cfg = CalibrationConfig::fsr(&session).with_uniform_regularization(1e-8);
    let z = solve_linearized(&session, &cfg).unwrap();
    let t = ParamVector::from_params(&truth);
    for j in 0..8 {
        assert!((z.0[j] - t.0[j]).abs() < 1e-6, "{j}: {} vs {}", z.0[j], t.0[j]);
    }
}

#[test]
fn invisible_offsets_stay_at_the_anchor() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let truth = fsr_like(&mut rng);
    let u = foot().invisible_offset_pattern();
    let shifted: [AffineParams; 4] = std::array::from_fn(|k| AffineParams::new(truth[k].c(), truth[k].d() + 3.0 * u[k]).unwrap());
    let session = foot_session(shifted, 0.0, 0);
    // the shift changes neither CoP nor GRF ...
    let cfg = unregularized(CalibrationConfig::fsr(&session));
    assert!(cost(&ParamVector::from_params(&truth), &session, &cfg).unwrap().total < 1e-18);
    // ... so the fit lands on the truth without it
    let cfg = CalibrationConfig::fsr(&session).with_uniform_regularization(1e-8);
    let z = calibrate(&session, &cfg).unwrap().params;
    assert!(z.max_abs_diff(&ParamVector::from_params(&truth)) < 1e-6);
}

#[test]
fn huge_regularization_returns_anchor() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let session = foot_session(fsr_like(&mut rng), 0.1, 6);
    let cfg = CalibrationConfig::fsr(&session).with_uniform_regularization(1e12);
    let z = solve_linearized(&session, &cfg).unwrap();
    assert!(z.max_abs_diff(&cfg.anchor) < 1e-6);
    let r = calibrate(&session, &cfg).unwrap();
    assert!(r.params.max_abs_diff(&cfg.anchor) < 1e-6);
}

#[test]
fn repeated_single_trial_is_singular() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let session = foot_session(fsr_like(&mut rng), 0.0, 0);
    let one = session.permuted(&[5; 12]).unwrap();
    let cfg = unregularized(CalibrationConfig::fsr(&one));
    assert!(matches!(solve_linearized(&one, &cfg), Err(Error::SingularSystem(_))));
}

#[test]
fn refinement_from_truth_is_immediate() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let truth = fsr_like(&mut rng);
    let session = foot_session(truth, 0.0, 0);
    let cfg = unregularized(CalibrationConfig::fsr(&session));
    let r = refine_gauss_newton(&ParamVector::from_params(&truth), &session, &cfg).unwrap();
    assert!(r.iterations <= 1);
    assert_eq!(r.status, SolveStatus::Converged);
    assert!(r.final_cost.total < 1e-20);
}

#[test]
fn refinement_descends_from_linearized() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..10 {
        let session = foot_session(fsr_like(&mut rng), 0.5, seed);
        let cfg = CalibrationConfig::fsr(&session);
        let linear = solve_linearized(&session, &cfg).unwrap();
        let j_linear = cost(&linear, &session, &cfg).unwrap().total;
        let r = refine_gauss_newton(&linear, &session, &cfg).unwrap();
        assert!(r.final_cost.total <= j_linear);
        let full = calibrate(&session, &cfg).unwrap();
        assert!(full.final_cost.total <= full.initial_total());
    }
}

#[test]
fn solvers_agree_without_cop_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let session = foot_session(fsr_like(&mut rng), 0.3, 10);
    let mut cfg = CalibrationConfig::fsr(&session);
    cfg.w_cop = 0.0;
    let linear = solve_linearized(&session, &cfg).unwrap();
    let r = refine_gauss_newton(&linear, &session, &cfg).unwrap();
    assert!(r.params.max_abs_diff(&linear) < 1e-9);
    let from_anchor = refine_gauss_newton(&cfg.anchor, &session, &cfg).unwrap();
    assert!(from_anchor.params.max_abs_diff(&linear) < 1e-9, "{:?}", from_anchor.status);
}

#[test]
fn shoe_mode_fits_cop_exactly_on_clean_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let truth = load_cell_like(&mut rng);
    let session = simulate(shoe_layout(), truth, 0.0, 0.0, 0, &[1.0, 2.0, 4.0], None);
    // a bench calibration a few percent off
    let anchor = ParamVector::from_params(&truth.map(|p| {
        AffineParams::new(p.c() * rng.random_range(0.97..1.03), p.d() + rng.random_range(-1.0..1.0)).unwrap()
    }));
    let mut cfg = CalibrationConfig::shoe(&session, anchor);
    cfg.regularizer = Regularizer::Parameter(scale_aware_weights(&session, 1e-8));
    let r = calibrate(&session, &cfg).unwrap();
    let mae = r.residuals.iter().map(|t| t.after.cop_error_mm).sum::<f64>() / r.residuals.len() as f64;
    let before = r.residuals.iter().map(|t| t.before.cop_error_mm).sum::<f64>() / r.residuals.len() as f64;
    assert!(before > 0.1);
    assert!(mae < 1e-6, "post-calibration CoP MAE {mae}");
    // GRF stays on the anchor
    assert_eq!(r.grf_params(), &anchor);
    for t in &r.residuals {
        assert_eq!(t.before.grf_error_n, t.after.grf_error_n);
    }
}

#[test]
fn fsr_mode_reduces_deadband_grf_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let truth: [AffineParams; 4] = std::array::from_fn(|_| {
        AffineParams::new(rng.random_range(0.7..1.3), rng.random_range(-1.0..1.0)).unwrap()
    });
    let session = simulate(foot(), truth, 0.05, 1.5, 3, &[2.0, 3.0, 4.0], Some(vec![2, 3, 4, 5]));
    let r = calibrate(&session, &CalibrationConfig::fsr(&session)).unwrap();
    let n = r.residuals.len() as f64;
    let before = r.residuals.iter().map(|t| t.before.grf_error_n).sum::<f64>() / n;
    let after = r.residuals.iter().map(|t| t.after.grf_error_n).sum::<f64>() / n;
    assert!(after < before, "{after} !< {before}");
}

#[test]
fn trial_order_does_not_matter() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let session = foot_session(fsr_like(&mut rng), 0.3, 13);
    let cfg = CalibrationConfig::fsr(&session);
    let a = calibrate(&session, &cfg).unwrap();
    let n = session.trials().len();
    let mut order: Vec<usize> = (0..n).rev().collect();
    order.rotate_left(7);
    let permuted = session.permuted(&order).unwrap();
    let b = calibrate(&permuted, &CalibrationConfig::fsr(&permuted)).unwrap();
    assert!(a.params.max_abs_diff(&b.params) < 1e-10, "{}", a.params.max_abs_diff(&b.params));
}

#[test]
fn negative_scale_is_rejected() {
    // readings that fall as load rises force negative scales
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let truth = fsr_like(&mut rng);
    let session = foot_session(truth, 0.0, 0);
    let flipped: Vec<CalibrationTrial> = session
        .trials()
        .iter()
        .map(|t| CalibrationTrial {
            mean_raw: RawSample::new(t.mean_raw.values().map(|v| 100.0 - v)).unwrap(),
            ..*t
        })
        .collect();
    let bad = CalibrationSession::new(foot(), session.apparatus().clone(), flipped).unwrap();
    let mut cfg = CalibrationConfig::fsr(&bad).with_uniform_regularization(1e-8);
    cfg.solver = SolverKind::Linearized;
    assert!(matches!(solve_linearized(&bad, &cfg), Err(Error::NonPositiveScale { .. })));
}
