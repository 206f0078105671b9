//! JSON documents exchanged by the command-line tool, and the raw stream log.
//!
//! Every document carries `"schema_version": 1`. Units are fixed: mm, N, kg,
//! ms. Documents that point at other documents (`layout_ref`,
//! `apparatus_ref`) store paths relative to their own directory.

pub mod stream;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::apparatus::{ApparatusConfig, CalibrationSession, CalibrationTrial, ProtrusionId};
use crate::calibrator::{
    scale_aware_weights, CalibrationConfig, CalibrationMode, Regularizer, SolverKind, DEFAULT_REGULARIZATION,
};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::measurement::{ModulePose, SensorLayout};
use crate::metrics::ErrorReport;
use crate::sensor::{AffineParams, ParamVector, RawSample, SENSORS_PER_MODULE};
use crate::simulator::{SimScenario, StanceDescription};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

/// Serializes a document the way it is written to disk.
pub fn render_document<T: Serialize>(body: &T) -> Result<String> {
    let doc = Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|source| Error::Json {
        path: PathBuf::from("<memory>"),
        source,
    })?;
    s.push('\n');
    Ok(s)
}

pub fn parse_document<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    let doc: Versioned<T> = serde_json::from_str(text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            path: path.to_path_buf(),
            found: doc.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    Ok(doc.body)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_document<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_document(&read_text(path)?, path)
}

/// Writes via a temporary file in the target directory and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn write_document<T: Serialize>(path: &Path, body: &T) -> Result<()> {
    write_atomic(path, &render_document(body)?)
}

/// Resolves `reference` relative to the directory of `document`.
pub fn resolve_ref(document: &Path, reference: &str) -> PathBuf {
    let r = Path::new(reference);
    if r.is_absolute() {
        return r.to_path_buf();
    }
    document.parent().map_or_else(|| r.to_path_buf(), |dir| dir.join(r))
}

// ---------------------------------------------------------------------------
// layout

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorEntry {
    pub id: u8,
    pub position_mm: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutDoc {
    pub name: String,
    pub sensors: Vec<SensorEntry>,
    pub sensing_area_mm2: f64,
    pub full_scale_n: f64,
}

/// Orders four id-tagged entries by id, requiring ids 1..=4 exactly once.
fn by_id<T: Clone>(entries: &[T], id: impl Fn(&T) -> u8, what: &str) -> Result<[T; SENSORS_PER_MODULE]> {
    if entries.len() != SENSORS_PER_MODULE {
        return Err(Error::InvalidInput(format!(
            "{what}: expected {SENSORS_PER_MODULE} sensors, found {}",
            entries.len()
        )));
    }
    let mut slots: [Option<T>; SENSORS_PER_MODULE] = Default::default();
    for e in entries {
        let i = id(e);
        let slot = (1..=SENSORS_PER_MODULE as u8)
            .contains(&i)
            .then(|| &mut slots[usize::from(i) - 1])
            .ok_or_else(|| Error::InvalidInput(format!("{what}: sensor id {i} outside 1..=4")))?;
        if slot.replace(e.clone()).is_some() {
            return Err(Error::InvalidInput(format!("{what}: duplicate sensor id {i}")));
        }
    }
    Ok(slots.map(|s| s.expect("four distinct ids in range")))
}

impl LayoutDoc {
    pub fn from_layout(layout: &SensorLayout) -> Self {
        LayoutDoc {
            name: layout.name().to_string(),
            sensors: layout
                .positions()
                .iter()
                .enumerate()
                .map(|(k, &p)| SensorEntry {
                    id: k as u8 + 1,
                    position_mm: p,
                })
                .collect(),
            sensing_area_mm2: layout.sensing_area_mm2(),
            full_scale_n: layout.full_scale_n(),
        }
    }

    pub fn to_layout(&self) -> Result<SensorLayout> {
        let sensors = by_id(&self.sensors, |s| s.id, "layout")?;
        SensorLayout::new(
            self.name.clone(),
            sensors.map(|s| s.position_mm),
            self.sensing_area_mm2,
            self.full_scale_n,
        )
    }
}

pub fn load_layout(path: &Path) -> Result<SensorLayout> {
    read_document::<LayoutDoc>(path)?.to_layout()
}

pub fn save_layout(path: &Path, layout: &SensorLayout) -> Result<()> {
    write_document(path, &LayoutDoc::from_layout(layout))
}

// ---------------------------------------------------------------------------
// apparatus

pub fn load_apparatus(path: &Path) -> Result<ApparatusConfig> {
    let cfg: ApparatusConfig = read_document(path)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn save_apparatus(path: &Path, cfg: &ApparatusConfig) -> Result<()> {
    write_document(path, cfg)
}

// ---------------------------------------------------------------------------
// params

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub id: u8,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub sensors: Vec<ParamEntry>,
}

impl ParamSet {
    pub fn from_params(params: &[AffineParams; SENSORS_PER_MODULE]) -> Self {
        ParamSet {
            sensors: params
                .iter()
                .enumerate()
                .map(|(k, p)| ParamEntry {
                    id: k as u8 + 1,
                    c: p.c(),
                    d: p.d(),
                })
                .collect(),
        }
    }

    pub fn to_params(&self) -> Result<[AffineParams; SENSORS_PER_MODULE]> {
        let entries = by_id(&self.sensors, |e| e.id, "params")?;
        let mut out = [AffineParams::IDENTITY; SENSORS_PER_MODULE];
        for (o, e) in out.iter_mut().zip(entries) {
            *o = AffineParams::new(e.c, e.d)?;
        }
        Ok(out)
    }
}

/// Parameters of one module as stored on disk.
///
/// `sensors` is the model used for CoP. In shoe mode GRF is computed from
/// `zeta0` instead; otherwise from `sensors`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<CalibrationMode>,
    pub sensors: Vec<ParamEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta0: Option<ParamSet>,
}

/// Resolved module parameters: CoP and GRF models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuleParams {
    pub cop: [AffineParams; SENSORS_PER_MODULE],
    pub grf: [AffineParams; SENSORS_PER_MODULE],
}

impl ModuleParams {
    pub fn uniform(params: [AffineParams; SENSORS_PER_MODULE]) -> Self {
        ModuleParams {
            cop: params,
            grf: params,
        }
    }
}

impl ParamsDoc {
    pub fn plain(params: &[AffineParams; SENSORS_PER_MODULE]) -> Self {
        ParamsDoc {
            mode: None,
            sensors: ParamSet::from_params(params).sensors,
            zeta0: None,
        }
    }

    pub fn calibrated(
        mode: CalibrationMode,
        params: &[AffineParams; SENSORS_PER_MODULE],
        zeta0: &[AffineParams; SENSORS_PER_MODULE],
    ) -> Self {
        ParamsDoc {
            mode: Some(mode),
            sensors: ParamSet::from_params(params).sensors,
            zeta0: Some(ParamSet::from_params(zeta0)),
        }
    }

    pub fn params(&self) -> Result<[AffineParams; SENSORS_PER_MODULE]> {
        ParamSet {
            sensors: self.sensors.clone(),
        }
        .to_params()
    }

    pub fn zeta0(&self) -> Result<Option<[AffineParams; SENSORS_PER_MODULE]>> {
        self.zeta0.as_ref().map(ParamSet::to_params).transpose()
    }

    pub fn module_params(&self) -> Result<ModuleParams> {
        let cop = self.params()?;
        let grf = match (self.mode, self.zeta0()?) {
            (Some(CalibrationMode::Shoe), Some(z0)) => z0,
            (Some(CalibrationMode::Shoe), None) => {
                return Err(Error::InvalidInput("shoe-mode params without zeta0".into()))
            }
            _ => cop,
        };
        Ok(ModuleParams { cop, grf })
    }
}

pub fn load_params(path: &Path) -> Result<ParamsDoc> {
    let doc: ParamsDoc = read_document(path)?;
    doc.params()?;
    doc.zeta0()?;
    Ok(doc)
}

// ---------------------------------------------------------------------------
// session

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialEntry {
    pub protrusion: ProtrusionId,
    pub mass_kg: f64,
    pub mean_raw: [f64; SENSORS_PER_MODULE],
    pub sample_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDoc {
    pub layout_ref: String,
    pub apparatus_ref: String,
    pub trials: Vec<TrialEntry>,
}

impl SessionDoc {
    pub fn from_session(session: &CalibrationSession, layout_ref: &str, apparatus_ref: &str) -> Self {
        SessionDoc {
            layout_ref: layout_ref.to_string(),
            apparatus_ref: apparatus_ref.to_string(),
            trials: session
                .trials()
                .iter()
                .map(|t| TrialEntry {
                    protrusion: t.protrusion,
                    mass_kg: t.mass_kg,
                    mean_raw: *t.mean_raw.values(),
                    sample_count: t.sample_count,
                })
                .collect(),
        }
    }

    pub fn to_session(&self, layout: SensorLayout, apparatus: ApparatusConfig) -> Result<CalibrationSession> {
        let trials = self
            .trials
            .iter()
            .map(|t| {
                Ok(CalibrationTrial {
                    protrusion: t.protrusion,
                    mass_kg: t.mass_kg,
                    mean_raw: RawSample::new(t.mean_raw)?,
                    sample_count: t.sample_count,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        CalibrationSession::new(layout, apparatus, trials)
    }
}

/// Loads a session with the layout and apparatus it references. Explicit
/// paths override the references.
pub fn load_session(
    path: &Path,
    layout: Option<&Path>,
    apparatus: Option<&Path>,
) -> Result<CalibrationSession> {
    let doc: SessionDoc = read_document(path)?;
    let layout_path = layout.map_or_else(|| resolve_ref(path, &doc.layout_ref), Path::to_path_buf);
    let apparatus_path = apparatus.map_or_else(|| resolve_ref(path, &doc.apparatus_ref), Path::to_path_buf);
    doc.to_session(load_layout(&layout_path)?, load_apparatus(&apparatus_path)?)
}

// ---------------------------------------------------------------------------
// scenario

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDoc {
    pub layout_ref: String,
    pub true_params: Vec<ParamEntry>,
    pub noise_sigma: f64,
    #[serde(default)]
    pub quantization_step: f64,
    #[serde(default)]
    pub deadband_n: f64,
    pub seed: u64,
}

impl ScenarioDoc {
    pub fn from_scenario(sc: &SimScenario, layout_ref: &str) -> Self {
        ScenarioDoc {
            layout_ref: layout_ref.to_string(),
            true_params: ParamSet::from_params(&sc.true_params).sensors,
            noise_sigma: sc.noise_sigma,
            quantization_step: sc.quantization_step,
            deadband_n: sc.deadband_n,
            seed: sc.seed,
        }
    }

    pub fn to_scenario(&self, layout: SensorLayout) -> Result<SimScenario> {
        let sc = SimScenario {
            layout,
            true_params: ParamSet {
                sensors: self.true_params.clone(),
            }
            .to_params()?,
            noise_sigma: self.noise_sigma,
            quantization_step: self.quantization_step,
            deadband_n: self.deadband_n,
            seed: self.seed,
        };
        sc.validate()?;
        Ok(sc)
    }
}

pub fn load_scenario(path: &Path, layout: Option<&Path>) -> Result<SimScenario> {
    let doc: ScenarioDoc = read_document(path)?;
    let layout_path = layout.map_or_else(|| resolve_ref(path, &doc.layout_ref), Path::to_path_buf);
    doc.to_scenario(load_layout(&layout_path)?)
}

// ---------------------------------------------------------------------------
// calibration settings

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    #[default]
    Parameter,
    ForceOutput,
}

fn default_regularization() -> f64 {
    DEFAULT_REGULARIZATION
}
fn default_solver() -> SolverKind {
    SolverKind::GaussNewton
}
fn default_max_iterations() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-10
}

/// Calibration settings file. Absent weights take the mode defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_cop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_grf: Option<f64>,
    #[serde(default)]
    pub regularizer: RegularizerKind,
    /// Base weight `w` of the scale-aware parameter penalty, or of the
    /// force-output penalty.
    #[serde(default = "default_regularization")]
    pub regularization: f64,
    /// Explicit per-parameter weights; overrides `regularization` for the
    /// parameter regularizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_zeta: Option<[f64; ParamVector::LEN]>,
    #[serde(default = "default_solver")]
    pub solver: SolverKind,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tol")]
    pub convergence_tol: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings {
            w_cop: None,
            w_grf: None,
            regularizer: RegularizerKind::Parameter,
            regularization: DEFAULT_REGULARIZATION,
            w_zeta: None,
            solver: default_solver(),
            max_iterations: default_max_iterations(),
            convergence_tol: default_tol(),
        }
    }
}

impl CalibrationSettings {
    pub fn resolve(
        &self,
        session: &CalibrationSession,
        mode: CalibrationMode,
        anchor: ParamVector,
    ) -> CalibrationConfig {
        let base = match mode {
            CalibrationMode::Fsr => CalibrationConfig {
                anchor,
                ..CalibrationConfig::fsr(session)
            },
            CalibrationMode::Shoe => CalibrationConfig::shoe(session, anchor),
        };
        let regularizer = match (self.regularizer, self.w_zeta) {
            (RegularizerKind::Parameter, Some(w)) => Regularizer::Parameter(w),
            (RegularizerKind::Parameter, None) => {
                Regularizer::Parameter(scale_aware_weights(session, self.regularization))
            }
            (RegularizerKind::ForceOutput, _) => Regularizer::ForceOutput(self.regularization),
        };
        CalibrationConfig {
            w_cop: self.w_cop.unwrap_or(base.w_cop),
            w_grf: self.w_grf.unwrap_or(base.w_grf),
            regularizer,
            solver: self.solver,
            max_iterations: self.max_iterations,
            convergence_tol: self.convergence_tol,
            ..base
        }
    }
}

// ---------------------------------------------------------------------------
// stance and poses

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosesDoc {
    pub left: ModulePose,
    pub right: ModulePose,
}

pub fn load_stance(path: &Path) -> Result<StanceDescription> {
    read_document(path)
}

pub fn load_report(path: &Path) -> Result<ErrorReport> {
    read_document(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::AffineParams;

    #[test]
    fn schema_version_is_checked() {
        let text = r#"{"schema_version": 2, "name": "x", "sensors": [], "sensing_area_mm2": 1, "full_scale_n": 1}"#;
        let err = parse_document::<LayoutDoc>(text, Path::new("l.json")).unwrap_err();
        assert!(matches!(err, Error::SchemaVersion { found: 2, .. }));
        let missing = r#"{"name": "x", "sensors": [], "sensing_area_mm2": 1, "full_scale_n": 1}"#;
        assert!(parse_document::<LayoutDoc>(missing, Path::new("l.json")).is_err());
    }

    #[test]
    fn layout_sensor_ids_validated() {
        let mut doc = LayoutDoc::from_layout(&SensorLayout::nao_foot());
        doc.sensors.reverse();
        assert_eq!(doc.to_layout().unwrap(), SensorLayout::nao_foot());
        doc.sensors[0].id = 2;
        assert!(doc.to_layout().is_err());
        doc.sensors.pop();
        assert!(doc.to_layout().is_err());
    }

    #[test]
    fn shoe_params_use_zeta0_for_grf() {
        let z0 = [AffineParams::new(0.02, -100.0).unwrap(); 4];
        let z = [AffineParams::new(0.021, -99.0).unwrap(); 4];
        let doc = ParamsDoc::calibrated(CalibrationMode::Shoe, &z, &z0);
        let mp = doc.module_params().unwrap();
        assert_eq!(mp.cop, z);
        assert_eq!(mp.grf, z0);
        let fsr = ParamsDoc::calibrated(CalibrationMode::Fsr, &z, &z0).module_params().unwrap();
        assert_eq!(fsr.grf, z);
        let bad = ParamsDoc {
            mode: Some(CalibrationMode::Shoe),
            zeta0: None,
            ..doc
        };
        assert!(bad.module_params().is_err());
    }

    #[test]
    fn resolve_ref_is_relative_to_document() {
        assert_eq!(resolve_ref(Path::new("/a/b/s.json"), "l.json"), PathBuf::from("/a/b/l.json"));
        assert_eq!(resolve_ref(Path::new("/a/b/s.json"), "/x/l.json"), PathBuf::from("/x/l.json"));
        assert_eq!(resolve_ref(Path::new("s.json"), "l.json"), PathBuf::from("l.json"));
    }
}
