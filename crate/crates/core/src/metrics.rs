//! Error metrics for measured against reference loads.
//!
//! * `e_C = π·|ΔCoP|² / A`: squared CoP error relative to the squared radius
//!   of a circle with the sensing area `A`. Its square root, the relative
//!   radial error, is reported alongside.
//! * `e_G = |ΔGRF| / G`, with `G` the summed full-scale range of the sensors.
//! * MAE: mean Euclidean CoP distance and mean absolute GRF difference.
//!
//! Metrics are computed per trial and averaged, overall and per trial mass.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::apparatus::CalibrationSession;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::measurement::{weighted_centroid, LoadEstimate, SensorLayout};
use crate::sensor::ParamVector;

pub fn e_cop(reference: Point, measured: Point, sensing_area_mm2: f64) -> f64 {
    let d = reference - measured;
    PI * d.dot(d) / sensing_area_mm2
}

pub fn e_grf(reference: f64, measured: f64, full_scale_n: f64) -> f64 {
    (reference - measured).abs() / full_scale_n
}

/// `(cop_mae_mm, grf_mae_n)` over `(reference, measured)` pairs.
pub fn mae(pairs: &[(LoadEstimate, LoadEstimate)]) -> Result<(f64, f64)> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("trials for MAE"));
    }
    let n = pairs.len() as f64;
    let cop = pairs.iter().map(|(r, m)| r.cop.distance(m.cop)).sum::<f64>() / n;
    let grf = pairs.iter().map(|(r, m)| (r.grf - m.grf).abs()).sum::<f64>() / n;
    Ok((cop, grf))
}

/// Denominators of the relative metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDenominators {
    pub sensing_area_mm2: f64,
    pub full_scale_n: f64,
}

impl MetricDenominators {
    pub fn of(layout: &SensorLayout) -> Self {
        MetricDenominators {
            sensing_area_mm2: layout.sensing_area_mm2(),
            full_scale_n: layout.full_scale_n(),
        }
    }

    /// The FSR foot's 5300 mm² and 100 N, shared by all modules so that
    /// different hardware is compared on one scale.
    pub fn foot() -> Self {
        MetricDenominators::of(&SensorLayout::nao_foot())
    }
}

/// A measured load paired with its reference and the trial mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub mass_kg: f64,
    pub reference: LoadEstimate,
    pub measured: LoadEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub mass_kg: f64,
    pub reference: LoadEstimate,
    pub measured: LoadEstimate,
    pub cop_error_mm: f64,
    pub grf_error_n: f64,
    pub e_cop: f64,
    pub e_cop_radial: f64,
    pub e_grf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    /// Trial mass of the group; absent for the overall summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    pub count: usize,
    pub mean_e_cop: f64,
    pub mean_e_cop_radial: f64,
    pub mean_e_grf: f64,
    pub max_e_cop: f64,
    pub max_e_grf: f64,
    pub cop_mae_mm: f64,
    pub grf_mae_n: f64,
}

impl GroupSummary {
    fn of(mass_kg: Option<f64>, records: &[&TrialRecord]) -> Self {
        let n = records.len() as f64;
        let mean = |f: fn(&TrialRecord) -> f64| records.iter().map(|r| f(r)).sum::<f64>() / n;
        let max = |f: fn(&TrialRecord) -> f64| records.iter().map(|r| f(r)).fold(0.0, f64::max);
        GroupSummary {
            mass_kg,
            count: records.len(),
            mean_e_cop: mean(|r| r.e_cop),
            mean_e_cop_radial: mean(|r| r.e_cop_radial),
            mean_e_grf: mean(|r| r.e_grf),
            max_e_cop: max(|r| r.e_cop),
            max_e_grf: max(|r| r.e_grf),
            cop_mae_mm: mean(|r| r.cop_error_mm),
            grf_mae_n: mean(|r| r.grf_error_n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub denominators: MetricDenominators,
    pub records: Vec<TrialRecord>,
    /// One summary per distinct mass, ascending.
    pub by_mass: Vec<GroupSummary>,
    pub overall: GroupSummary,
}

/// Per-trial metrics with per-mass and overall aggregates.
pub fn report(outcomes: &[Outcome], denominators: MetricDenominators) -> Result<ErrorReport> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("outcomes for report"));
    }
    let records: Vec<TrialRecord> = outcomes
        .iter()
        .map(|o| {
            let e_c = e_cop(o.reference.cop, o.measured.cop, denominators.sensing_area_mm2);
            TrialRecord {
                mass_kg: o.mass_kg,
                reference: o.reference,
                measured: o.measured,
                cop_error_mm: o.reference.cop.distance(o.measured.cop),
                grf_error_n: (o.reference.grf - o.measured.grf).abs(),
                e_cop: e_c,
                e_cop_radial: e_c.sqrt(),
                e_grf: e_grf(o.reference.grf, o.measured.grf, denominators.full_scale_n),
            }
        })
        .collect();
    if records.iter().any(|r| !(r.e_cop.is_finite() && r.e_grf.is_finite())) {
        return Err(Error::InvalidInput("non-finite load in report input".into()));
    }

    let mut masses: Vec<f64> = records.iter().map(|r| r.mass_kg).collect();
    masses.sort_by(f64::total_cmp);
    masses.dedup();
    let by_mass = masses
        .iter()
        .map(|&m| {
            let group: Vec<&TrialRecord> = records.iter().filter(|r| r.mass_kg == m).collect();
            GroupSummary::of(Some(m), &group)
        })
        .collect();
    let all: Vec<&TrialRecord> = records.iter().collect();
    let overall = GroupSummary::of(None, &all);
    Ok(ErrorReport {
        denominators,
        records,
        by_mass,
        overall,
    })
}

/// Measured loads of every session trial: CoP from `cop_params`, GRF from
/// `grf_params`.
pub fn session_outcomes(
    session: &CalibrationSession,
    cop_params: &ParamVector,
    grf_params: &ParamVector,
) -> Result<Vec<Outcome>> {
    let positions = session.layout().positions();
    session
        .trials()
        .iter()
        .zip(session.references()?)
        .map(|(trial, reference)| {
            let forces = cop_params.forces(&trial.mean_raw);
            let cop = weighted_centroid(positions, &forces)?.cop;
            let grf = grf_params.forces(&trial.mean_raw).iter().sum();
            Ok(Outcome {
                mass_kg: trial.mass_kg,
                reference,
                measured: LoadEstimate::new(cop, grf),
            })
        })
        .collect()
}

/// Column order of [`render_table`].
pub const TABLE_COLUMNS: [&str; 13] = [
    "trial",
    "mass_kg",
    "ref_cop_x_mm",
    "ref_cop_y_mm",
    "ref_grf_n",
    "meas_cop_x_mm",
    "meas_cop_y_mm",
    "meas_grf_n",
    "cop_error_mm",
    "grf_error_n",
    "e_cop",
    "e_cop_radial",
    "e_grf",
];

/// One CSV row per trial, columns as in [`TABLE_COLUMNS`].
pub fn render_table(report: &ErrorReport) -> String {
    let mut out = TABLE_COLUMNS.join(",");
    out.push('\n');
    for (i, r) in report.records.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            i + 1,
            r.mass_kg,
            r.reference.cop.x,
            r.reference.cop.y,
            r.reference.grf,
            r.measured.cop.x,
            r.measured.cop.y,
            r.measured.grf,
            r.cop_error_mm,
            r.grf_error_n,
            r.e_cop,
            r.e_cop_radial,
            r.e_grf
        )
        .unwrap();
    }
    out
}
