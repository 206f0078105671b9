//! Center of pressure and ground reaction force from calibrated sensor forces.
//!
//! For one module the ground reaction force is the sum of the four sensor
//! forces and the center of pressure is their force-weighted mean position.
//! Double support combines both modules in a shared ground frame; the result
//! is identical to treating all eight sensors as one module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, in_convex_polygon, Point};
use crate::sensor::{AffineParams, RawSample, SENSORS_PER_MODULE};

/// Minimum total force (N) for which a center of pressure is defined.
pub const MIN_TOTAL_FORCE: f64 = 0.1;

/// Slack (mm) used when testing whether a point lies within a support region.
pub const SUPPORT_TOLERANCE_MM: f64 = 1e-9;

/// Geometry of one four-sensor module in its local frame (x forward, y left, mm).
#[derive(Debug, Clone, PartialEq)]
pub struct SensorLayout {
    name: String,
    positions: [Point; SENSORS_PER_MODULE],
    sensing_area_mm2: f64,
    full_scale_n: f64,
}

/// Bounds of an axis-aligned rectangular layout, with the slot of the sensor
/// at each corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangleLayout {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Slots at (x_max, y_max), (x_max, y_min), (x_min, y_max), (x_min, y_min).
    pub corner_slots: [usize; 4],
}

impl SensorLayout {
    pub fn new(
        name: impl Into<String>,
        positions: [Point; SENSORS_PER_MODULE],
        sensing_area_mm2: f64,
        full_scale_n: f64,
    ) -> Result<Self> {
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite sensor position".into()));
        }
        for i in 0..SENSORS_PER_MODULE {
            for j in i + 1..SENSORS_PER_MODULE {
                if positions[i] == positions[j] {
                    return Err(Error::InvalidInput(format!(
                        "sensors {} and {} share position {:?}",
                        i + 1,
                        j + 1,
                        positions[i]
                    )));
                }
            }
        }
        if !(sensing_area_mm2 > 0.0 && sensing_area_mm2.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sensing area must be positive, got {sensing_area_mm2}"
            )));
        }
        if !(full_scale_n > 0.0 && full_scale_n.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "full scale must be positive, got {full_scale_n}"
            )));
        }
        Ok(SensorLayout {
            name: name.into(),
            positions,
            sensing_area_mm2,
            full_scale_n,
        })
    }

    /// Axis-aligned rectangle of sensors centered on the origin, ordered
    /// front-left, front-right, back-left, back-right. Sensing area is the
    /// rectangle area.
    pub fn rectangle(
        name: impl Into<String>,
        length_mm: f64,
        width_mm: f64,
        full_scale_n: f64,
    ) -> Result<Self> {
        let (hx, hy) = (length_mm / 2.0, width_mm / 2.0);
        SensorLayout::new(
            name,
            [
                Point::new(hx, hy),
                Point::new(hx, -hy),
                Point::new(-hx, hy),
                Point::new(-hx, -hy),
            ],
            length_mm * width_mm,
            full_scale_n,
        )
    }

    /// The built-in FSR foot: a 100 × 53 mm rectangle of four 25 N sensors.
    pub fn nao_foot() -> Self {
        SensorLayout::rectangle("nao-foot", 100.0, 53.0, 4.0 * 25.0).expect("static layout")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn positions(&self) -> &[Point; SENSORS_PER_MODULE] {
        &self.positions
    }

    pub fn sensing_area_mm2(&self) -> f64 {
        self.sensing_area_mm2
    }

    pub fn full_scale_n(&self) -> f64 {
        self.full_scale_n
    }

    /// Returns the rectangle description if the four sensors sit on the
    /// corners of an axis-aligned rectangle.
    pub fn as_rectangle(&self) -> Option<RectangleLayout> {
        let xs = self.positions.map(|p| p.x);
        let ys = self.positions.map(|p| p.y);
        let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let y_min = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let y_max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let corners = [
            Point::new(x_max, y_max),
            Point::new(x_max, y_min),
            Point::new(x_min, y_max),
            Point::new(x_min, y_min),
        ];
        let mut corner_slots = [0; 4];
        let mut used = [false; SENSORS_PER_MODULE];
        for (corner, slot) in corners.iter().zip(corner_slots.iter_mut()) {
            let k = self.positions.iter().position(|p| p == corner)?;
            if used[k] {
                return None;
            }
            used[k] = true;
            *slot = k;
        }
        Some(RectangleLayout {
            x_min,
            x_max,
            y_min,
            y_max,
            corner_slots,
        })
    }

    /// Convex hull of the sensor positions, counter-clockwise.
    pub fn support_polygon(&self) -> Vec<Point> {
        convex_hull(&self.positions)
    }

    pub fn supports(&self, p: Point) -> bool {
        in_convex_polygon(&self.support_polygon(), p, SUPPORT_TOLERANCE_MM)
    }

    /// Unit per-sensor force pattern with zero net force and zero net
    /// moment: adding any multiple of it to the sensor forces changes
    /// neither CoP nor GRF. Offsets along this direction therefore cannot
    /// be observed from static loads. For a rectangle it is
    /// `±(1, −1, −1, 1)/2`.
    ///
    /// ```
    /// use footcal::SensorLayout;
    /// let u = SensorLayout::nao_foot().invisible_offset_pattern();
    /// let expected = [0.5, -0.5, -0.5, 0.5];
    /// assert!(u.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));
    /// ```
    pub fn invisible_offset_pattern(&self) -> [f64; SENSORS_PER_MODULE] {
        invisible_offset_pattern(&self.positions)
    }
}

/// See [`SensorLayout::invisible_offset_pattern`].
pub fn invisible_offset_pattern(positions: &[Point; SENSORS_PER_MODULE]) -> [f64; SENSORS_PER_MODULE] {
    // generalized cross product of (1, …), (x_k), (y_k)
    let rows = [[1.0; 4], positions.map(|p| p.x), positions.map(|p| p.y)];
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        let m = |r: usize, i: usize| rows[r][cols[i]];
        m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
    };
    let mut u: [f64; 4] = std::array::from_fn(|k| if k % 2 == 0 { minor(k) } else { -minor(k) });
    if u[0] < 0.0 {
        u = u.map(|v| -v);
    }
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    u.map(|v| v / norm)
}

/// A (center of pressure, ground reaction force) pair, used for both
/// measured and reference values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadEstimate {
    #[serde(rename = "cop_mm")]
    pub cop: Point,
    #[serde(rename = "grf_n")]
    pub grf: f64,
}

impl LoadEstimate {
    pub fn new(cop: Point, grf: f64) -> Self {
        LoadEstimate { cop, grf }
    }
}

/// Placement of a module's local frame in the world ground frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModulePose {
    pub x_mm: f64,
    pub y_mm: f64,
    #[serde(default)]
    pub yaw_rad: f64,
}

impl ModulePose {
    pub fn new(x_mm: f64, y_mm: f64, yaw_rad: f64) -> Self {
        ModulePose { x_mm, y_mm, yaw_rad }
    }

    pub fn translation(&self) -> Point {
        Point::new(self.x_mm, self.y_mm)
    }

    pub fn to_world(&self, local: Point) -> Point {
        local.rotated(self.yaw_rad) + self.translation()
    }

    pub fn to_local(&self, world: Point) -> Point {
        (world - self.translation()).rotated(-self.yaw_rad)
    }

    pub fn translated(&self, by: Point) -> ModulePose {
        ModulePose::new(self.x_mm + by.x, self.y_mm + by.y, self.yaw_rad)
    }
}

/// Per-sensor forces from raw counts.
pub fn sensor_forces(
    params: &[AffineParams; SENSORS_PER_MODULE],
    sample: &RawSample,
) -> [f64; SENSORS_PER_MODULE] {
    std::array::from_fn(|k| params[k].apply(sample.values()[k]))
}

/// Force-weighted centroid of an arbitrary set of point forces.
///
/// Individual forces may be negative; only the total is gated by
/// [`MIN_TOTAL_FORCE`].
pub fn weighted_centroid(positions: &[Point], forces: &[f64]) -> Result<LoadEstimate> {
    if positions.len() != forces.len() {
        return Err(Error::InvalidInput(format!(
            "{} positions but {} forces",
            positions.len(),
            forces.len()
        )));
    }
    let total: f64 = forces.iter().sum();
    if !(total > MIN_TOTAL_FORCE) {
        return Err(Error::InsufficientLoad {
            total,
            threshold: MIN_TOTAL_FORCE,
        });
    }
    let moment = positions
        .iter()
        .zip(forces)
        .fold(Point::ORIGIN, |acc, (&p, &f)| acc + p * f);
    Ok(LoadEstimate::new(moment * (1.0 / total), total))
}

/// Center of pressure and ground reaction force of one module.
///
/// ```
/// use footcal::geometry::Point;
/// use footcal::measurement::{compute_load, SensorLayout};
///
/// let foot = SensorLayout::nao_foot();
/// let load = compute_load(&foot, &[10.0, 0.0, 0.0, 0.0]).unwrap();
/// assert_eq!(load.cop, Point::new(50.0, 26.5));
/// assert_eq!(load.grf, 10.0);
/// ```
pub fn compute_load(layout: &SensorLayout, forces: &[f64; SENSORS_PER_MODULE]) -> Result<LoadEstimate> {
    weighted_centroid(layout.positions(), forces)
}

/// Combines the loads of two modules into one world-frame estimate.
///
/// Each module contributes in proportion to its force. A module carrying
/// zero force contributes nothing, so its center of pressure is ignored.
pub fn combine_double_support(loads: &[(LoadEstimate, ModulePose); 2]) -> Result<LoadEstimate> {
    let total: f64 = loads.iter().map(|(l, _)| l.grf).sum();
    if !(total > MIN_TOTAL_FORCE) {
        return Err(Error::InsufficientLoad {
            total,
            threshold: MIN_TOTAL_FORCE,
        });
    }
    let moment = loads.iter().fold(Point::ORIGIN, |acc, (load, pose)| {
        if load.grf == 0.0 {
            acc
        } else {
            acc + pose.to_world(load.cop) * load.grf
        }
    });
    Ok(LoadEstimate::new(moment * (1.0 / total), total))
}

/// Load of one module when CoP and GRF come from different sensor models
/// (calibrated shoes keep their bench models for GRF). A module whose CoP
/// model or GRF model gives no more than [`MIN_TOTAL_FORCE`] counts as
/// unloaded: zero GRF, CoP at the origin.
pub fn module_load(
    layout: &SensorLayout,
    cop_params: &[AffineParams; SENSORS_PER_MODULE],
    grf_params: &[AffineParams; SENSORS_PER_MODULE],
    sample: &RawSample,
) -> LoadEstimate {
    let grf: f64 = sensor_forces(grf_params, sample).iter().sum();
    match compute_load(layout, &sensor_forces(cop_params, sample)) {
        Ok(load) if grf > MIN_TOTAL_FORCE => LoadEstimate::new(load.cop, grf),
        _ => LoadEstimate::new(Point::ORIGIN, 0.0),
    }
}

/// Per-module load that tolerates an unloaded module by reporting zero
/// force, for use with [`combine_double_support`].
pub fn module_load_or_zero(
    layout: &SensorLayout,
    forces: &[f64; SENSORS_PER_MODULE],
) -> LoadEstimate {
    compute_load(layout, forces).unwrap_or(LoadEstimate::new(Point::ORIGIN, 0.0))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn invisible_pattern_has_no_force_or_moment() {
        let layout = SensorLayout::new(
            "skew",
            [Point::new(60.0, 30.0), Point::new(55.0, -25.0), Point::new(-40.0, 35.0), Point::new(-50.0, -20.0)],
            5000.0,
            100.0,
        )
        .unwrap();
        let u = layout.invisible_offset_pattern();
        assert!((u.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(u.iter().sum::<f64>().abs() < 1e-12);
        let moment = layout.positions().iter().zip(u).fold(Point::ORIGIN, |a, (&p, f)| a + p * f);
        assert!(moment.norm() < 1e-9);
    }

    fn foot() -> SensorLayout {
        SensorLayout::nao_foot()
    }

    #[test]
    fn sensor_forces_examples() {
        let s = RawSample::new([1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(sensor_forces(&[AffineParams::IDENTITY; 4], &s), [1.0, 2.0, 3.0, 4.0]);

        let p = [AffineParams::new(0.5, 1.0).unwrap(); 4];
        let s = RawSample::new([2.0; 4]).unwrap();
        assert_eq!(sensor_forces(&p, &s), [2.0; 4]);

        let p = [AffineParams::new(0.1, -1.2).unwrap(); 4];
        let s = RawSample::new([512.0; 4]).unwrap();
        for f in sensor_forces(&p, &s) {
            assert_relative_eq!(f, 50.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn compute_load_examples() {
        let l = compute_load(&foot(), &[5.0; 4]).unwrap();
        assert_eq!((l.cop, l.grf), (Point::ORIGIN, 20.0));

        let l = compute_load(&foot(), &[10.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!((l.cop, l.grf), (Point::new(50.0, 26.5), 10.0));

        // (3·50 + 50 − 50 − 50)/6 and (3·26.5 − 26.5 + 26.5 − 26.5)/6
        let l = compute_load(&foot(), &[3.0, 1.0, 1.0, 1.0]).unwrap();
        assert_relative_eq!(l.cop.x, 100.0 / 6.0, epsilon = 1e-12);
        assert_relative_eq!(l.cop.y, 53.0 / 6.0, epsilon = 1e-12);
        assert_eq!(l.grf, 6.0);
    }

    #[test]
    fn compute_load_gates_on_total_only() {
        assert!(matches!(
            compute_load(&foot(), &[0.02; 4]),
            Err(Error::InsufficientLoad { .. })
        ));
        assert!(compute_load(&foot(), &[0.025; 4]).is_err());
        let l = compute_load(&foot(), &[-0.5, 4.0, 4.0, 4.0]).unwrap();
        assert_eq!(l.grf, 11.5);
    }

    #[test]
    fn double_support_examples() {
        let left = ModulePose::new(0.0, 60.0, 0.0);
        let right = ModulePose::new(0.0, -60.0, 0.0);
        let unit = LoadEstimate::new(Point::ORIGIN, 10.0);
        let l = combine_double_support(&[(unit, left), (unit, right)]).unwrap();
        assert_eq!((l.cop, l.grf), (Point::ORIGIN, 20.0));

        let lp = ModulePose::new(-60.0, 0.0, 0.0);
        let rp = ModulePose::new(60.0, 0.0, 0.0);
        let l = combine_double_support(&[
            (LoadEstimate::new(Point::ORIGIN, 20.0), lp),
            (LoadEstimate::new(Point::new(f64::NAN, f64::NAN), 0.0), rp),
        ])
        .unwrap();
        assert_eq!((l.cop, l.grf), (Point::new(-60.0, 0.0), 20.0));

        let l = combine_double_support(&[
            (LoadEstimate::new(Point::ORIGIN, 10.0), lp),
            (LoadEstimate::new(Point::ORIGIN, 30.0), rp),
        ])
        .unwrap();
        assert_eq!((l.cop, l.grf), (Point::new(30.0, 0.0), 40.0));

        let zero = LoadEstimate::new(Point::ORIGIN, 0.0);
        assert!(matches!(
            combine_double_support(&[(zero, lp), (zero, rp)]),
            Err(Error::InsufficientLoad { .. })
        ));
    }

    #[test]
    fn layout_validation() {
        let p = Point::new(1.0, 1.0);
        assert!(SensorLayout::new("x", [p, p, Point::ORIGIN, Point::new(2.0, 0.0)], 1.0, 1.0).is_err());
        assert!(SensorLayout::rectangle("x", 10.0, 10.0, 0.0).is_err());
        let rect = foot().as_rectangle().unwrap();
        assert_eq!(rect.corner_slots, [0, 1, 2, 3]);
        assert_eq!((rect.x_min, rect.y_max), (-50.0, 26.5));
        let skew = SensorLayout::new(
            "skew",
            [Point::new(50.0, 20.0), Point::new(40.0, -20.0), Point::new(-50.0, 20.0), Point::new(-50.0, -20.0)],
            1.0,
            1.0,
        )
        .unwrap();
        assert!(skew.as_rectangle().is_none());
    }

    #[test]
    fn pose_round_trip() {
        let pose = ModulePose::new(12.0, -40.0, 0.3);
        let p = Point::new(7.0, -3.0);
        let back = pose.to_local(pose.to_world(p));
        assert_relative_eq!(back.x, p.x, epsilon = 1e-12);
        assert_relative_eq!(back.y, p.y, epsilon = 1e-12);
    }

    fn forces_nonneg() -> impl Strategy<Value = [f64; 4]> {
        prop::array::uniform4(0.0f64..30.0).prop_filter("loaded", |f| f.iter().sum::<f64>() > 0.5)
    }

    proptest! {
        #[test]
        fn cop_in_convex_hull(f in forces_nonneg()) {
            let l = compute_load(&foot(), &f).unwrap();
            prop_assert!(foot().supports(l.cop));
        }

        #[test]
        fn scale_invariance(f in forces_nonneg(), lambda in 0.01f64..100.0) {
            let a = compute_load(&foot(), &f).unwrap();
            let b = compute_load(&foot(), &f.map(|x| x * lambda)).unwrap();
            prop_assert!((a.cop - b.cop).norm() <= 1e-12 * 60.0);
            prop_assert!((b.grf - lambda * a.grf).abs() <= 1e-12 * b.grf);
        }

        #[test]
        fn translation_equivariance(
            fl in forces_nonneg(), fr in forces_nonneg(),
            yaw_l in -0.5f64..0.5, yaw_r in -0.5f64..0.5,
            vx in -500.0f64..500.0, vy in -500.0f64..500.0,
        ) {
            let lp = ModulePose::new(10.0, 60.0, yaw_l);
            let rp = ModulePose::new(-20.0, -60.0, yaw_r);
            let ll = compute_load(&foot(), &fl).unwrap();
            let lr = compute_load(&foot(), &fr).unwrap();
            let v = Point::new(vx, vy);
            let a = combine_double_support(&[(ll, lp), (lr, rp)]).unwrap();
            let b = combine_double_support(&[(ll, lp.translated(v)), (lr, rp.translated(v))]).unwrap();
            let shift = b.cop - a.cop - v;
            prop_assert!(shift.norm() <= 1e-9, "{shift:?}");
        }
    }
}
