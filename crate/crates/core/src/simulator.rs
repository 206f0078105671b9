//! Synthetic sensor data with known ground truth.
//!
//! A rigid plate on four supports is statically indeterminate: three
//! equilibrium equations, four unknown forces. The simulator closes the
//! system with bilinear interpolation over rectangular layouts (and the
//! minimum-norm solution otherwise), maps the forces back to raw counts
//! through each sensor's true affine model, and adds deadband, Gaussian noise
//! and quantization in raw-count space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::apparatus::{reference_load, ApparatusConfig, CalibrationSession, CalibrationTrial, PlannedTrial, STANDARD_GRAVITY};
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, in_convex_polygon, Point};
use crate::io::stream::StreamRecord;
use crate::measurement::{LoadEstimate, ModulePose, SensorLayout, SUPPORT_TOLERANCE_MM};
use crate::sensor::{AffineParams, RawSample, SENSORS_PER_MODULE};

const K: usize = SENSORS_PER_MODULE;

/// Ground truth and distortions for one simulated module.
#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub layout: SensorLayout,
    pub true_params: [AffineParams; K],
    /// Standard deviation of additive Gaussian noise, raw counts.
    pub noise_sigma: f64,
    /// Quantization step in raw counts; 0 disables.
    pub quantization_step: f64,
    /// Per-sensor force (N) below which the output stays at its no-load level; 0 disables.
    pub deadband_n: f64,
    pub seed: u64,
}

impl SimScenario {
    /// Noise-free scenario with the given true parameters.
    pub fn ideal(layout: SensorLayout, true_params: [AffineParams; K]) -> Self {
        SimScenario {
            layout,
            true_params,
            noise_sigma: 0.0,
            quantization_step: 0.0,
            deadband_n: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x >= 0.0 && x.is_finite();
        if !ok(self.noise_sigma) || !ok(self.quantization_step) || !ok(self.deadband_n) {
            return Err(Error::InvalidInput(
                "scenario noise_sigma, quantization_step and deadband_n must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Splits a load over the sensors of `layout` so that force and both moment
/// balances hold.
///
/// ```
/// use footcal::geometry::Point;
/// use footcal::measurement::SensorLayout;
/// use footcal::simulator::distribute_forces;
///
/// let f = distribute_forces(&SensorLayout::nao_foot(), Point::new(25.0, 13.25), 20.0).unwrap();
/// assert_eq!(f, [11.25, 3.75, 3.75, 1.25]);
/// ```
pub fn distribute_forces(layout: &SensorLayout, cop: Point, grf: f64) -> Result<[f64; K]> {
    if !(grf > 0.0 && grf.is_finite()) || !cop.is_finite() {
        return Err(Error::InvalidInput(format!("cannot distribute grf {grf} N at {cop:?}")));
    }
    match layout.as_rectangle() {
        Some(rect) => {
            let u = (cop.x - rect.x_min) / (rect.x_max - rect.x_min);
            let v = (cop.y - rect.y_min) / (rect.y_max - rect.y_min);
            let tol_u = SUPPORT_TOLERANCE_MM / (rect.x_max - rect.x_min);
            let tol_v = SUPPORT_TOLERANCE_MM / (rect.y_max - rect.y_min);
            if !(-tol_u..=1.0 + tol_u).contains(&u) || !(-tol_v..=1.0 + tol_v).contains(&v) {
                return Err(Error::CopOutsideSupport { x: cop.x, y: cop.y });
            }
            let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
            let weights = [u * v, u * (1.0 - v), (1.0 - u) * v, (1.0 - u) * (1.0 - v)];
            let mut forces = [0.0; K];
            for (slot, w) in rect.corner_slots.iter().zip(weights) {
                forces[*slot] = grf * w;
            }
            Ok(forces)
        }
        None => minimum_norm_distribution(layout.positions(), cop, grf),
    }
}

/// `F = Aᵀ(AAᵀ)⁻¹b` for the equilibrium rows `[1; x_k; y_k]`.
fn minimum_norm_distribution(positions: &[Point; K], cop: Point, grf: f64) -> Result<[f64; K]> {
    // center on the sensor centroid for conditioning
    let centroid = positions.iter().fold(Point::ORIGIN, |a, &p| a + p) * (1.0 / K as f64);
    let rel = positions.map(|p| p - centroid);
    let c = cop - centroid;
    let rows = [[1.0; K], rel.map(|p| p.x), rel.map(|p| p.y)];
    let b = [grf, grf * c.x, grf * c.y];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..K).map(|k| rows[i][k] * rows[j][k]).sum();
        }
    }
    let lambda = solve3(m, b).ok_or_else(|| Error::InvalidInput("collinear sensor layout".into()))?;
    let forces: [f64; K] = std::array::from_fn(|k| (0..3).map(|i| rows[i][k] * lambda[i]).sum());
    if forces.iter().any(|&f| f < -1e-9 * grf.max(1.0)) {
        return Err(Error::CopOutsideSupport { x: cop.x, y: cop.y });
    }
    Ok(forces.map(|f| f.max(0.0)))
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    let scale = m.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max).powi(3);
    if d.abs() <= 1e-12 * scale {
        return None;
    }
    Some(std::array::from_fn(|col| {
        let mut a = m;
        for r in 0..3 {
            a[r][col] = b[r];
        }
        det(a) / d
    }))
}

/// A simulated module: a scenario plus its random stream.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: SimScenario,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Simulator {
    pub fn new(scenario: SimScenario) -> Result<Self> {
        scenario.validate()?;
        let noise = (scenario.noise_sigma > 0.0)
            .then(|| Normal::new(0.0, scenario.noise_sigma).expect("validated sigma"));
        Ok(Simulator {
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            scenario,
            noise,
        })
    }

    pub fn scenario(&self) -> &SimScenario {
        &self.scenario
    }

    /// Raw reading produced by the given per-sensor forces.
    pub fn synthesize_reading(&mut self, forces: &[f64; K]) -> Result<RawSample> {
        if forces.iter().any(|f| !f.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite forces {forces:?}")));
        }
        let sc = &self.scenario;
        let mut values = [0.0; K];
        for (k, value) in values.iter_mut().enumerate() {
            let params = &sc.true_params[k];
            let mut raw = if forces[k] < sc.deadband_n {
                params.noload_reading()
            } else {
                params.invert(forces[k])
            };
            if let Some(noise) = &self.noise {
                raw += noise.sample(&mut self.rng);
            }
            if sc.quantization_step > 0.0 {
                raw = (raw / sc.quantization_step).round() * sc.quantization_step;
            }
            *value = raw;
        }
        RawSample::new(values)
    }

    /// Mean of `samples` readings of the same forces.
    pub fn averaged_reading(&mut self, forces: &[f64; K], samples: u32) -> Result<RawSample> {
        if samples == 0 {
            return Err(Error::InvalidInput("samples must be at least 1".into()));
        }
        let readings = (0..samples)
            .map(|_| self.synthesize_reading(forces))
            .collect::<Result<Vec<_>>>()?;
        RawSample::mean(&readings)
    }

    /// Runs a calibration plan on the simulated module.
    pub fn simulate_session(
        &mut self,
        apparatus: &ApparatusConfig,
        plan: &[PlannedTrial],
        samples_per_trial: u32,
    ) -> Result<CalibrationSession> {
        let mut trials = Vec::with_capacity(plan.len());
        for planned in plan {
            let reference = reference_load(apparatus, planned.protrusion, planned.mass_kg)?;
            let forces = distribute_forces(&self.scenario.layout, reference.cop, reference.grf)?;
            trials.push(CalibrationTrial {
                protrusion: planned.protrusion,
                mass_kg: planned.mass_kg,
                mean_raw: self.averaged_reading(&forces, samples_per_trial)?,
                sample_count: samples_per_trial,
            });
        }
        CalibrationSession::new(self.scenario.layout.clone(), apparatus.clone(), trials)
    }
}

/// Optional extra mass carried by the robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub mass_kg: f64,
    pub com_mm: Point,
}

/// A static double-support posture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StanceDescription {
    pub left_pose: ModulePose,
    pub right_pose: ModulePose,
    /// Ground projection of the robot's center of mass, world frame.
    pub com_mm: Point,
    pub weight_n: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
    #[serde(default = "default_gravity")]
    pub gravity_m_s2: f64,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

impl StanceDescription {
    /// Reference load: CoM projection and total weight, including any payload.
    pub fn reference(&self) -> Result<LoadEstimate> {
        if !(self.weight_n > 0.0 && self.weight_n.is_finite()) {
            return Err(Error::InvalidInput(format!("stance weight {} N", self.weight_n)));
        }
        match self.payload {
            None => Ok(LoadEstimate::new(self.com_mm, self.weight_n)),
            Some(p) => {
                let pw = p.mass_kg * self.gravity_m_s2;
                let total = self.weight_n + pw;
                let cop = (self.com_mm * self.weight_n + p.com_mm * pw) * (1.0 / total);
                Ok(LoadEstimate::new(cop, total))
            }
        }
    }
}

/// Outcome of one simulated stance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StanceSample {
    pub left: RawSample,
    pub right: RawSample,
    pub reference: LoadEstimate,
    /// True per-module loads, module-local frames.
    pub module_loads: [LoadEstimate; 2],
}

/// True per-sensor forces of both modules for a stance.
///
/// Total force is split between the modules by the lever rule along the
/// line joining the module support centroids; both module CoPs keep the
/// reference CoP's perpendicular offset from that line, so the combined CoP
/// equals the reference exactly.
pub fn stance_forces(
    left: &SensorLayout,
    right: &SensorLayout,
    stance: &StanceDescription,
) -> Result<([[f64; K]; 2], LoadEstimate, [LoadEstimate; 2])> {
    let reference = stance.reference()?;
    let p = reference.cop;
    let poses = [stance.left_pose, stance.right_pose];
    let layouts = [left, right];

    let world_sensors: Vec<Point> = layouts
        .iter()
        .zip(&poses)
        .flat_map(|(l, pose)| l.positions().iter().map(|&q| pose.to_world(q)))
        .collect();
    if !in_convex_polygon(&convex_hull(&world_sensors), p, SUPPORT_TOLERANCE_MM) {
        return Err(Error::UnstableStance { x: p.x, y: p.y });
    }

    let centroid = |l: &SensorLayout| l.positions().iter().fold(Point::ORIGIN, |a, &q| a + q) * 0.25;
    let a = poses[0].to_world(centroid(left));
    let b = poses[1].to_world(centroid(right));
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return Err(Error::InvalidInput("module reference points coincide".into()));
    }
    let s = (p - a).dot(ab) / len2;
    if !(-1e-12..=1.0 + 1e-12).contains(&s) {
        return Err(Error::UnstableStance { x: p.x, y: p.y });
    }
    let s = s.clamp(0.0, 1.0);
    let offset = p - (a + ab * s);
    let shares = [(1.0 - s) * reference.grf, s * reference.grf];
    let anchors = [a, b];

    let mut forces = [[0.0; K]; 2];
    let mut loads = [LoadEstimate::new(Point::ORIGIN, 0.0); 2];
    for m in 0..2 {
        let local = poses[m].to_local(anchors[m] + offset);
        loads[m] = LoadEstimate::new(local, shares[m]);
        if shares[m] > 0.0 {
            forces[m] = distribute_forces(layouts[m], local, shares[m])?;
        }
    }
    Ok((forces, reference, loads))
}

/// Averaged raw readings of both modules for a stance.
pub fn simulate_stance(
    sims: [&mut Simulator; 2],
    stance: &StanceDescription,
    samples: u32,
) -> Result<StanceSample> {
    let [left, right] = sims;
    let (forces, reference, module_loads) = stance_forces(&left.scenario.layout, &right.scenario.layout, stance)?;
    Ok(StanceSample {
        left: left.averaged_reading(&forces[0], samples)?,
        right: right.averaged_reading(&forces[1], samples)?,
        reference,
        module_loads,
    })
}

/// A raw stream log of a held stance: `records` readings at `period_ms`.
pub fn simulate_stance_stream(
    sims: [&mut Simulator; 2],
    stance: &StanceDescription,
    records: usize,
    period_ms: f64,
) -> Result<(Vec<StreamRecord>, LoadEstimate)> {
    let [left, right] = sims;
    let (forces, reference, _) = stance_forces(&left.scenario.layout, &right.scenario.layout, stance)?;
    let mut out = Vec::with_capacity(records);
    for i in 0..records {
        let l = left.synthesize_reading(&forces[0])?;
        let r = right.synthesize_reading(&forces[1])?;
        let mut values = [0.0; 2 * K];
        values[..K].copy_from_slice(l.values());
        values[K..].copy_from_slice(r.values());
        out.push(StreamRecord {
            timestamp_ms: (i as f64 * period_ms).round() as u64,
            values,
        });
    }
    Ok((out, reference))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::apparatus::{trial_plan, ProtrusionSelector};
    use crate::measurement::{combine_double_support, compute_load, sensor_forces};

    fn foot() -> SensorLayout {
        SensorLayout::nao_foot()
    }

    #[test]
    fn distribute_examples() {
        assert_eq!(distribute_forces(&foot(), Point::ORIGIN, 20.0).unwrap(), [5.0; 4]);
        let f = distribute_forces(&foot(), Point::new(25.0, 13.25), 20.0).unwrap();
        assert_eq!(f, [11.25, 3.75, 3.75, 1.25]);
        let back = compute_load(&foot(), &f).unwrap();
        assert_relative_eq!(back.cop.x, 25.0, epsilon = 1e-12);
        assert_relative_eq!(back.cop.y, 13.25, epsilon = 1e-12);
        assert_eq!(distribute_forces(&foot(), Point::new(50.0, 26.5), 20.0).unwrap(), [20.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            distribute_forces(&foot(), Point::new(51.0, 0.0), 20.0),
            Err(Error::CopOutsideSupport { .. })
        ));
    }

    #[test]
    fn minimum_norm_goes_negative_at_corner() {
        let f = minimum_norm_distribution(foot().positions(), Point::ORIGIN, 20.0).unwrap();
        for v in f {
            assert_relative_eq!(v, 5.0, epsilon = 1e-12);
        }
        // minimum norm at the corner of the rectangle is (15, 5, 5, −5)
        assert!(matches!(
            minimum_norm_distribution(foot().positions(), Point::new(50.0, 26.5), 20.0),
            Err(Error::CopOutsideSupport { .. })
        ));
    }

    #[test]
    fn non_rectangular_layout_balances() {
        let layout = SensorLayout::new(
            "trapezoid",
            [Point::new(60.0, 30.0), Point::new(60.0, -30.0), Point::new(-50.0, 22.0), Point::new(-50.0, -22.0)],
            5000.0,
            200.0,
        )
        .unwrap();
        assert!(layout.as_rectangle().is_none());
        let cop = Point::new(5.0, -3.0);
        let f = distribute_forces(&layout, cop, 30.0).unwrap();
        let back = compute_load(&layout, &f).unwrap();
        assert_relative_eq!(back.grf, 30.0, epsilon = 1e-9);
        assert_relative_eq!(back.cop.x, cop.x, epsilon = 1e-9);
        assert_relative_eq!(back.cop.y, cop.y, epsilon = 1e-9);
    }

    #[test]
    fn noiseless_reading_round_trips() {
        let params = [
            AffineParams::new(0.02, -160.0).unwrap(),
            AffineParams::new(0.021, -150.0).unwrap(),
            AffineParams::new(0.019, -170.0).unwrap(),
            AffineParams::new(0.0205, -140.0).unwrap(),
        ];
        let mut sim = Simulator::new(SimScenario::ideal(foot(), params)).unwrap();
        let forces = [1.5, 7.25, 0.0, 12.0];
        let raw = sim.synthesize_reading(&forces).unwrap();
        let back = sensor_forces(&params, &raw);
        for (a, b) in back.iter().zip(forces) {
            assert!((a - b).abs() <= 1e-12 * 200.0, "{a} vs {b}");
        }
    }

    #[test]
    fn deadband_holds_noload_level() {
        let params = [AffineParams::new(0.8, 1.5).unwrap(); 4];
        let mut sc = SimScenario::ideal(foot(), params);
        sc.deadband_n = 2.0;
        let mut sim = Simulator::new(sc).unwrap();
        let raw = sim.synthesize_reading(&[1.9, 2.0, 0.0, 5.0]).unwrap();
        assert_eq!(raw.values()[0], params[0].noload_reading());
        assert_eq!(raw.values()[2], params[2].noload_reading());
        assert_eq!(raw.values()[1], params[1].invert(2.0));
    }

    #[test]
    fn quantization_snaps_to_grid() {
        let mut sc = SimScenario::ideal(foot(), [AffineParams::IDENTITY; 4]);
        sc.quantization_step = 0.5;
        let mut sim = Simulator::new(sc).unwrap();
        let raw = sim.synthesize_reading(&[1.2, 1.3, 2.74, 2.76]).unwrap();
        assert_eq!(raw.values(), &[1.0, 1.5, 2.5, 3.0]);
    }

    #[test]
    fn noise_mean_is_unbiased() {
        let sigma = 3.0;
        let mut sc = SimScenario::ideal(foot(), [AffineParams::new(0.05, -2.0).unwrap(); 4]);
        sc.noise_sigma = sigma;
        sc.seed = 17;
        let mut sim = Simulator::new(sc).unwrap();
        let forces = [4.0, 6.0, 8.0, 10.0];
        let n = 10_000;
        let mut acc = [0.0; 4];
        for _ in 0..n {
            let r = sim.synthesize_reading(&forces).unwrap();
            for k in 0..4 {
                acc[k] += r.values()[k];
            }
        }
        let expected = forces.map(|f| (f + 2.0) / 0.05);
        for k in 0..4 {
            let m = acc[k] / n as f64;
            assert!((m - expected[k]).abs() < 4.0 * sigma / (n as f64).sqrt(), "sensor {k}: {m} vs {}", expected[k]);
        }
    }

    #[test]
    fn sessions_are_deterministic_and_sized() {
        let mut sc = SimScenario::ideal(foot(), [AffineParams::IDENTITY; 4]);
        sc.noise_sigma = 0.2;
        sc.seed = 5;
        let app = ApparatusConfig::standard_grid();
        let plan = trial_plan(&app, &[2.0, 3.0, 4.0], &ProtrusionSelector::Rows(vec![2, 3, 4, 5])).unwrap();
        let a = Simulator::new(sc.clone()).unwrap().simulate_session(&app, &plan, 10).unwrap();
        let b = Simulator::new(sc.clone()).unwrap().simulate_session(&app, &plan, 10).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trials().len(), 36);

        let shoe = trial_plan(&app, &[1.0, 2.0, 4.0], &ProtrusionSelector::All).unwrap();
        let layout = SensorLayout::rectangle("shoe", 140.0, 70.0, 200.0).unwrap();
        let s = Simulator::new(SimScenario::ideal(layout, [AffineParams::IDENTITY; 4]))
            .unwrap()
            .simulate_session(&app, &shoe, 1)
            .unwrap();
        assert_eq!(s.trials().len(), 54);

        // the full grid does not fit on the foot
        let err = Simulator::new(sc).unwrap().simulate_session(&app, &shoe, 1);
        assert!(matches!(err, Err(Error::CopOutsideSupport { .. })));
    }

    fn stance(com: Point) -> StanceDescription {
        StanceDescription {
            left_pose: ModulePose::new(0.0, 50.0, 0.0),
            right_pose: ModulePose::new(0.0, -50.0, 0.0),
            com_mm: com,
            weight_n: 53.0,
            payload: None,
            gravity_m_s2: 9.81,
        }
    }

    #[test]
    fn stance_lever_rule() {
        let (_, reference, loads) = stance_forces(&foot(), &foot(), &stance(Point::ORIGIN)).unwrap();
        assert_eq!(reference.grf, 53.0);
        assert_relative_eq!(loads[0].grf, loads[1].grf, epsilon = 1e-12);

        let (forces, _, loads) = stance_forces(&foot(), &foot(), &stance(Point::new(0.0, 50.0))).unwrap();
        assert_eq!(loads[1].grf, 0.0);
        assert_eq!(forces[1], [0.0; 4]);
        assert_relative_eq!(loads[0].grf, 53.0, epsilon = 1e-12);

        assert!(matches!(
            stance_forces(&foot(), &foot(), &stance(Point::new(0.0, 90.0))),
            Err(Error::UnstableStance { .. })
        ));
    }

    #[test]
    fn payload_shifts_reference() {
        let mut st = stance(Point::new(10.0, 0.0));
        st.payload = Some(Payload {
            mass_kg: 1.0,
            com_mm: Point::new(30.0, 20.0),
        });
        let r = st.reference().unwrap();
        assert_relative_eq!(r.grf, 53.0 + 9.81, epsilon = 1e-12);
        // (53·10 + 9.81·30)/62.81 and (9.81·20)/62.81
        assert_relative_eq!(r.cop.x, (530.0 + 294.3) / 62.81, epsilon = 1e-12);
        assert_relative_eq!(r.cop.y, 196.2 / 62.81, epsilon = 1e-12);
    }

    #[test]
    fn noiseless_stance_measures_reference() {
        let params = [AffineParams::new(0.5, 2.0).unwrap(); 4];
        let mut l = Simulator::new(SimScenario::ideal(foot(), params)).unwrap();
        let mut r = Simulator::new(SimScenario::ideal(foot(), params)).unwrap();
        let mut st = stance(Point::new(12.0, -8.0));
        st.right_pose = ModulePose::new(70.0, -50.0, 0.1);
        let out = simulate_stance([&mut l, &mut r], &st, 3).unwrap();
        let ml = compute_load(&foot(), &sensor_forces(&params, &out.left)).unwrap();
        let mr = compute_load(&foot(), &sensor_forces(&params, &out.right)).unwrap();
        let m = combine_double_support(&[(ml, st.left_pose), (mr, st.right_pose)]).unwrap();
        assert!((m.cop - out.reference.cop).norm() < 1e-9);
        assert!((m.grf - out.reference.grf).abs() < 1e-9 * m.grf);
    }

    proptest! {
        #[test]
        fn bilinear_distribution_is_in_equilibrium(
            x in -50.0f64..=50.0, y in -26.5f64..=26.5, grf in 0.5f64..200.0,
        ) {
            let f = distribute_forces(&foot(), Point::new(x, y), grf).unwrap();
            prop_assert!(f.iter().all(|&v| v >= 0.0));
            let total: f64 = f.iter().sum();
            prop_assert!((total - grf).abs() <= 1e-9 * grf);
            let l = compute_load(&foot(), &f).unwrap();
            prop_assert!((l.cop.x - x).abs() <= 1e-9 * 50.0);
            prop_assert!((l.cop.y - y).abs() <= 1e-9 * 50.0);
        }
    }
}
