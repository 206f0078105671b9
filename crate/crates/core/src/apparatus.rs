//! The calibration apparatus: a sole plate with a grid of protrusions on which
//! known weights are stacked, and the reference loads it produces.
//!
//! With the apparatus at rest, the reference ground reaction force is the
//! total weight of weight + cap + sole plate and the reference center of
//! pressure is the projection of their combined center of mass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::measurement::{LoadEstimate, SensorLayout};
use crate::sensor::RawSample;

pub const STANDARD_GRAVITY: f64 = 9.81;

/// 1-based (row, column) of a protrusion. Row 1 is at the toe end, column 1
/// on the left (+y) side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProtrusionId {
    pub row: u32,
    pub col: u32,
}

impl ProtrusionId {
    pub const fn new(row: u32, col: u32) -> Self {
        ProtrusionId { row, col }
    }
}

/// Regular protrusion grid. Protrusion (r, c) sits at
/// `origin − ((r−1)·row_pitch, (c−1)·col_pitch)`, so rows advance from toe
/// to heel and columns from left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: u32,
    pub cols: u32,
    pub origin_mm: Point,
    pub row_pitch_mm: f64,
    pub col_pitch_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protrusion {
    pub id: ProtrusionId,
    pub position_mm: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProtrusionLayout {
    #[serde(rename = "grid")]
    Grid(GridSpec),
    #[serde(rename = "protrusions")]
    Explicit(Vec<Protrusion>),
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApparatusConfig {
    #[serde(flatten)]
    pub layout: ProtrusionLayout,
    pub sole_mass_kg: f64,
    pub sole_com_mm: Point,
    pub cap_mass_kg: f64,
    #[serde(default = "default_gravity")]
    pub gravity_m_s2: f64,
    #[serde(default = "default_true")]
    pub include_sole_weight: bool,
}

impl ApparatusConfig {
    /// A 6 × 3 grid at 25 mm pitch centered on the module origin, with a
    /// 150 g sole plate and a 50 g cap.
    pub fn standard_grid() -> Self {
        ApparatusConfig {
            layout: ProtrusionLayout::Grid(GridSpec {
                rows: 6,
                cols: 3,
                origin_mm: Point::new(62.5, 25.0),
                row_pitch_mm: 25.0,
                col_pitch_mm: 25.0,
            }),
            sole_mass_kg: 0.15,
            sole_com_mm: Point::new(-4.0, 0.0),
            cap_mass_kg: 0.05,
            gravity_m_s2: STANDARD_GRAVITY,
            include_sole_weight: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidInput(format!("apparatus: {what}")));
        if !(self.sole_mass_kg >= 0.0 && self.sole_mass_kg.is_finite()) {
            return bad("sole mass must be non-negative");
        }
        if !(self.cap_mass_kg >= 0.0 && self.cap_mass_kg.is_finite()) {
            return bad("cap mass must be non-negative");
        }
        if !(self.gravity_m_s2 > 0.0 && self.gravity_m_s2.is_finite()) {
            return bad("gravity must be positive");
        }
        if !self.sole_com_mm.is_finite() {
            return bad("sole CoM must be finite");
        }
        match &self.layout {
            ProtrusionLayout::Grid(g) => {
                if g.rows == 0 || g.cols == 0 {
                    return bad("grid must have at least one row and column");
                }
                if !(g.origin_mm.is_finite() && g.row_pitch_mm.is_finite() && g.col_pitch_mm.is_finite()) {
                    return bad("grid geometry must be finite");
                }
            }
            ProtrusionLayout::Explicit(list) => {
                if list.is_empty() {
                    return bad("no protrusions");
                }
                let mut ids: Vec<_> = list.iter().map(|p| p.id).collect();
                ids.sort();
                if ids.windows(2).any(|w| w[0] == w[1]) {
                    return bad("duplicate protrusion id");
                }
                if list.iter().any(|p| !p.position_mm.is_finite()) {
                    return bad("protrusion position must be finite");
                }
            }
        }
        Ok(())
    }

    pub fn position(&self, id: ProtrusionId) -> Result<Point> {
        let unknown = Error::UnknownProtrusion {
            row: id.row,
            col: id.col,
        };
        match &self.layout {
            ProtrusionLayout::Grid(g) => {
                if id.row == 0 || id.col == 0 || id.row > g.rows || id.col > g.cols {
                    return Err(unknown);
                }
                Ok(g.origin_mm
                    - Point::new(
                        f64::from(id.row - 1) * g.row_pitch_mm,
                        f64::from(id.col - 1) * g.col_pitch_mm,
                    ))
            }
            ProtrusionLayout::Explicit(list) => list
                .iter()
                .find(|p| p.id == id)
                .map(|p| p.position_mm)
                .ok_or(unknown),
        }
    }

    /// All protrusion ids in row-major order.
    pub fn protrusion_ids(&self) -> Vec<ProtrusionId> {
        match &self.layout {
            ProtrusionLayout::Grid(g) => (1..=g.rows)
                .flat_map(|row| (1..=g.cols).map(move |col| ProtrusionId::new(row, col)))
                .collect(),
            ProtrusionLayout::Explicit(list) => {
                let mut ids: Vec<_> = list.iter().map(|p| p.id).collect();
                ids.sort();
                ids
            }
        }
    }

    /// Protrusions whose centers fall outside the sensor support of `layout`.
    pub fn outside(&self, layout: &SensorLayout) -> Vec<ProtrusionId> {
        self.protrusion_ids()
            .into_iter()
            .filter(|&id| self.position(id).map_or(true, |p| !layout.supports(p)))
            .collect()
    }

    fn sole_weight(&self) -> f64 {
        if self.include_sole_weight {
            self.sole_mass_kg * self.gravity_m_s2
        } else {
            0.0
        }
    }
}

/// Reference load for `weight_mass_kg` placed (with its cap) on `protrusion`.
///
/// ```
/// use footcal::apparatus::{reference_load, ApparatusConfig, ProtrusionId, ProtrusionLayout, Protrusion};
/// use footcal::geometry::Point;
///
/// let cfg = ApparatusConfig {
///     layout: ProtrusionLayout::Explicit(vec![Protrusion {
///         id: ProtrusionId::new(1, 1),
///         position_mm: Point::new(30.0, 10.0),
///     }]),
///     sole_mass_kg: 0.5,
///     sole_com_mm: Point::new(0.0, 0.0),
///     cap_mass_kg: 0.0,
///     gravity_m_s2: 9.81,
///     include_sole_weight: true,
/// };
/// let load = reference_load(&cfg, ProtrusionId::new(1, 1), 2.0).unwrap();
/// assert!((load.grf - 24.525).abs() < 1e-12);
/// assert!((load.cop.x - 24.0).abs() < 1e-12 && (load.cop.y - 8.0).abs() < 1e-12);
/// ```
pub fn reference_load(
    config: &ApparatusConfig,
    protrusion: ProtrusionId,
    weight_mass_kg: f64,
) -> Result<LoadEstimate> {
    let p = config.position(protrusion)?;
    if !(weight_mass_kg >= 0.0 && weight_mass_kg.is_finite()) {
        return Err(Error::InvalidInput(format!("weight mass {weight_mass_kg} kg")));
    }
    let stack = (weight_mass_kg + config.cap_mass_kg) * config.gravity_m_s2;
    let sole = config.sole_weight();
    let total = stack + sole;
    if !(total > 0.0) {
        return Err(Error::InvalidInput("apparatus has zero total weight".into()));
    }
    let cop = (p * stack + config.sole_com_mm * sole) * (1.0 / total);
    Ok(LoadEstimate::new(cop, total))
}

/// Which protrusions a trial plan visits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtrusionSelector {
    All,
    Rows(Vec<u32>),
    Ids(Vec<ProtrusionId>),
}

impl ProtrusionSelector {
    pub fn resolve(&self, config: &ApparatusConfig) -> Result<Vec<ProtrusionId>> {
        let ids = match self {
            ProtrusionSelector::All => config.protrusion_ids(),
            ProtrusionSelector::Rows(rows) => config
                .protrusion_ids()
                .into_iter()
                .filter(|id| rows.contains(&id.row))
                .collect(),
            ProtrusionSelector::Ids(ids) => {
                for &id in ids {
                    config.position(id)?;
                }
                ids.clone()
            }
        };
        if ids.is_empty() {
            return Err(Error::EmptyInput("protrusion selection"));
        }
        Ok(ids)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrial {
    pub protrusion: ProtrusionId,
    pub mass_kg: f64,
}

/// Every (protrusion, mass) combination: protrusions in selector order
/// (row-major for grids), masses in the given order within each protrusion.
pub fn trial_plan(
    config: &ApparatusConfig,
    masses_kg: &[f64],
    subset: &ProtrusionSelector,
) -> Result<Vec<PlannedTrial>> {
    if masses_kg.is_empty() {
        return Err(Error::EmptyInput("trial masses"));
    }
    if let Some(m) = masses_kg.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidInput(format!("trial mass {m} kg must be positive")));
    }
    let ids = subset.resolve(config)?;
    Ok(ids
        .iter()
        .flat_map(|&protrusion| masses_kg.iter().map(move |&mass_kg| PlannedTrial { protrusion, mass_kg }))
        .collect())
}

/// One static hold of a known weight at one protrusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTrial {
    pub protrusion: ProtrusionId,
    pub mass_kg: f64,
    /// Raw sensor readings averaged over the hold.
    pub mean_raw: RawSample,
    pub sample_count: u32,
}

/// Ordered calibration trials for one module on one apparatus.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSession {
    layout: SensorLayout,
    apparatus: ApparatusConfig,
    trials: Vec<CalibrationTrial>,
}

impl CalibrationSession {
    pub fn new(layout: SensorLayout, apparatus: ApparatusConfig, trials: Vec<CalibrationTrial>) -> Result<Self> {
        apparatus.validate()?;
        if trials.is_empty() {
            return Err(Error::EmptyInput("calibration trials"));
        }
        for t in &trials {
            apparatus.position(t.protrusion)?;
            if !(t.mass_kg > 0.0 && t.mass_kg.is_finite()) {
                return Err(Error::InvalidInput(format!("trial mass {} kg must be positive", t.mass_kg)));
            }
            if t.sample_count == 0 {
                return Err(Error::InvalidInput("trial sample_count must be at least 1".into()));
            }
        }
        Ok(CalibrationSession {
            layout,
            apparatus,
            trials,
        })
    }

    pub fn layout(&self) -> &SensorLayout {
        &self.layout
    }

    pub fn apparatus(&self) -> &ApparatusConfig {
        &self.apparatus
    }

    pub fn trials(&self) -> &[CalibrationTrial] {
        &self.trials
    }

    /// Reference load of every trial, in order.
    pub fn references(&self) -> Result<Vec<LoadEstimate>> {
        self.trials
            .iter()
            .map(|t| reference_load(&self.apparatus, t.protrusion, t.mass_kg))
            .collect()
    }

    /// Mean raw count of each sensor over all trials.
    pub fn mean_raw(&self) -> [f64; 4] {
        let n = self.trials.len() as f64;
        let mut acc = [0.0; 4];
        for t in &self.trials {
            for (a, v) in acc.iter_mut().zip(t.mean_raw.values()) {
                *a += v;
            }
        }
        acc.map(|a| a / n)
    }

    /// Same session with trials reordered by `order` (a permutation of indices).
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let trials = order
            .iter()
            .map(|&i| {
                self.trials
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("trial index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        CalibrationSession::new(self.layout.clone(), self.apparatus.clone(), trials)
    }
}
