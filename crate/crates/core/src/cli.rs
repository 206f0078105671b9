//! The `footcal` command-line tool.
//!
//! Exit status is 0 on success, 2 for usage errors and 1 for data errors.
//! Failures are reported on stderr as one JSON object:
//! `{"error": {"kind": ..., "message": ..., "path": ...}}`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::apparatus::{trial_plan, ProtrusionSelector};
use crate::calibrator::{calibrate, CalibrationMode};
use crate::error::{Error, Result};
use crate::io::stream::{parse_stream, render_stream, ParsedStream};
use crate::io::{self, CalibrationSettings, ModuleParams, ParamsDoc, PosesDoc, SessionDoc};
use crate::measurement::{combine_double_support, module_load, ModulePose, SensorLayout};
use crate::metrics::{report, render_table, session_outcomes, ErrorReport, MetricDenominators, Outcome};
use crate::sensor::{tare_and_scale, AffineParams, ParamVector, SENSORS_PER_MODULE};
use crate::simulator::{simulate_stance_stream, SimScenario, Simulator, StanceDescription};

#[derive(Debug, Parser)]
#[command(name = "footcal", version, about = "Calibrate four-sensor foot force modules and estimate CoP/GRF")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-sensor tare and scale from a no-load log and a loaded log.
    Tare(TareArgs),
    /// Synthesize a calibration session, or a stance stream log.
    Simulate(SimulateArgs),
    /// Fit sensor parameters to a calibration session.
    Calibrate(CalibrateArgs),
    /// Error report for parameters on a session or a stance log.
    Evaluate(EvaluateArgs),
    /// CoP/GRF time series from a stream log.
    Estimate(EstimateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Fsr,
    Shoe,
}

impl From<ModeArg> for CalibrationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fsr => CalibrationMode::Fsr,
            ModeArg::Shoe => CalibrationMode::Shoe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModuleArg {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DenominatorArg {
    /// Sensing area and full scale of the session's layout.
    Layout,
    /// The built-in foot's 5300 mm² and 100 N, for cross-device comparison.
    Foot,
}

#[derive(Debug, Args)]
struct TareArgs {
    /// Stream log recorded with no load.
    #[arg(long)]
    noload: PathBuf,
    /// Stream log recorded with the known force on every sensor.
    #[arg(long)]
    loaded: PathBuf,
    /// Force on each sensor during the loaded log, N.
    #[arg(long)]
    known_force: f64,
    /// Which module's four channels to use.
    #[arg(long, value_enum, default_value = "left")]
    module: ModuleArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Simulation scenario (true parameters, noise, seed).
    #[arg(long)]
    scenario: PathBuf,
    /// Layout overriding the scenario's layout_ref.
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Seed overriding the scenario's (the right module uses seed + 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Output: a session file, or a stream log with --stance.
    #[arg(long)]
    out: PathBuf,

    /// Apparatus for a calibration session.
    #[arg(long, required_unless_present = "stance")]
    apparatus: Option<PathBuf>,
    /// Calibration masses, kg.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0, 4.0])]
    masses: Vec<f64>,
    /// Grid rows to visit (default: all protrusions).
    #[arg(long, value_delimiter = ',')]
    rows: Vec<u32>,
    /// Readings averaged per trial.
    #[arg(long, default_value_t = 100)]
    samples: u32,

    /// Stance description: produce a double-support stream log instead.
    #[arg(long, requires = "scenario_right", conflicts_with = "apparatus")]
    stance: Option<PathBuf>,
    /// Scenario of the right module.
    #[arg(long)]
    scenario_right: Option<PathBuf>,
    /// Layout overriding the right scenario's layout_ref.
    #[arg(long)]
    layout_right: Option<PathBuf>,
    /// Number of stream records.
    #[arg(long, default_value_t = 100)]
    records: usize,
    /// Sample period, ms.
    #[arg(long, default_value_t = 12.5)]
    period_ms: f64,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    session: PathBuf,
    /// Layout overriding the session's layout_ref.
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Apparatus overriding the session's apparatus_ref.
    #[arg(long)]
    apparatus: Option<PathBuf>,
    /// Calibration settings (weights, solver).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "fsr")]
    mode: ModeArg,
    /// Anchor parameters ζ₀: required in shoe mode, identity by default in
    /// FSR mode.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Output parameters file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the post-calibration error report on the session.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Calibration session to evaluate on.
    #[arg(long, required_unless_present = "log", conflicts_with = "log")]
    session: Option<PathBuf>,
    /// Stance stream log to evaluate on (needs --stance or --reference).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Parameters (of the left module for logs).
    #[arg(long)]
    params: PathBuf,
    /// Parameters of the right module; defaults to --params.
    #[arg(long)]
    params_right: Option<PathBuf>,
    /// Layout (session: overrides layout_ref; log: left module, default the built-in foot).
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Layout of the right module; defaults to the left one.
    #[arg(long)]
    layout_right: Option<PathBuf>,
    #[arg(long)]
    apparatus: Option<PathBuf>,
    /// Stance description giving module poses and the reference load.
    #[arg(long)]
    stance: Option<PathBuf>,
    /// Module poses overriding the stance's.
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Stance description used only for the reference load.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "layout")]
    denominators: DenominatorArg,
    /// Report file; the table is always printed.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    log: PathBuf,
    /// Parameters of the left module.
    #[arg(long)]
    params: PathBuf,
    /// Parameters of the right module: enables double support.
    #[arg(long)]
    params_right: Option<PathBuf>,
    /// Left module layout; default the built-in foot.
    #[arg(long)]
    layout: Option<PathBuf>,
    #[arg(long)]
    layout_right: Option<PathBuf>,
    /// Module poses for double support.
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Stance description supplying the poses.
    #[arg(long)]
    stance: Option<PathBuf>,
    /// CSV output; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A data error together with the file it concerns.
#[derive(Debug)]
struct Failure {
    error: Error,
    path: Option<PathBuf>,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let path = match &error {
            Error::Io { path, .. } | Error::Json { path, .. } | Error::SchemaVersion { path, .. } => {
                Some(path.clone())
            }
            _ => None,
        };
        Failure { error, path }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Attaches `path` to errors raised while interpreting that file.
fn in_file<T>(path: &Path, r: Result<T>) -> CliResult<T> {
    r.map_err(|error| {
        let mut f = Failure::from(error);
        f.path.get_or_insert_with(|| path.to_path_buf());
        f
    })
}

/// Runs the tool with the process arguments and returns the exit status.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Tare(a) => tare(a),
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Estimate(a) => estimate(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let mut err = json!({ "kind": f.error.kind(), "message": f.error.to_string() });
            if let Some(p) = &f.path {
                err["path"] = json!(p.display().to_string());
            }
            eprintln!("{}", json!({ "error": err }));
            1
        }
    }
}

fn print_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

fn read_log(path: &Path) -> CliResult<ParsedStream> {
    let text = io::read_text(path)?;
    let parsed = in_file(path, parse_stream(&text))?;
    for bad in &parsed.rejected {
        eprintln!(
            "{}",
            json!({ "warning": { "kind": "malformed_line", "path": path.display().to_string(),
                                 "line": bad.line, "reason": bad.reason } })
        );
    }
    Ok(parsed)
}

fn layout_or_default(path: Option<&PathBuf>) -> CliResult<SensorLayout> {
    match path {
        Some(p) => in_file(p, io::load_layout(p)),
        None => Ok(SensorLayout::nao_foot()),
    }
}

fn load_module_params(path: &Path) -> CliResult<ModuleParams> {
    in_file(path, io::load_params(path).and_then(|d| d.module_params()))
}

/// How a written document should refer to `target`: relative to the
/// document's directory when `target` lies below it, absolute otherwise.
fn reference_to(document: &Path, target: &Path) -> CliResult<String> {
    let target = in_file(
        target,
        target.canonicalize().map_err(|source| Error::Io {
            path: target.to_path_buf(),
            source,
        }),
    )?;
    let dir = match document.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let dir = dir.canonicalize().map_err(|source| Error::Io { path: dir.clone(), source })?;
    let rel = target.strip_prefix(&dir).map(Path::to_path_buf).unwrap_or(target);
    Ok(rel.to_string_lossy().into_owned())
}

// ---------------------------------------------------------------------------

fn tare(a: TareArgs) -> CliResult<()> {
    let noload = read_log(&a.noload)?;
    let loaded = read_log(&a.loaded)?;
    let offset = match a.module {
        ModuleArg::Left => 0,
        ModuleArg::Right => SENSORS_PER_MODULE,
    };
    let channel = |p: &ParsedStream, k: usize| -> Vec<f64> { p.records.iter().map(|r| r.values[offset + k]).collect() };
    let mut params = [AffineParams::IDENTITY; SENSORS_PER_MODULE];
    for (k, out) in params.iter_mut().enumerate() {
        *out = tare_and_scale(&channel(&noload, k), &channel(&loaded, k), a.known_force).map_err(|e| Failure {
            error: Error::InvalidInput(format!("sensor {}: {e}", k + 1)),
            path: Some(a.loaded.clone()),
        })?;
    }
    io::write_document(&a.out, &ParamsDoc::plain(&params))?;
    Ok(())
}

fn scenario_with_seed(path: &Path, layout: Option<&PathBuf>, seed: Option<u64>) -> CliResult<SimScenario> {
    let mut sc = in_file(path, io::load_scenario(path, layout.map(PathBuf::as_path)))?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    Ok(sc)
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let scenario = scenario_with_seed(&a.scenario, a.layout.as_ref(), a.seed)?;

    if let Some(stance_path) = &a.stance {
        let right_path = a.scenario_right.as_ref().expect("clap requires scenario_right");
        let right = scenario_with_seed(right_path, a.layout_right.as_ref(), a.seed.map(|s| s.wrapping_add(1)))?;
        let stance = in_file(stance_path, io::load_stance(stance_path))?;
        let mut left_sim = Simulator::new(scenario)?;
        let mut right_sim = Simulator::new(right)?;
        let (records, reference) = in_file(
            stance_path,
            simulate_stance_stream([&mut left_sim, &mut right_sim], &stance, a.records, a.period_ms),
        )?;
        io::write_atomic(&a.out, &render_stream(&records))?;
        print_stdout(&format!("{}\n", json!({ "records": records.len(), "reference": reference })));
        return Ok(());
    }

    let apparatus_path = a.apparatus.as_ref().expect("clap requires apparatus without stance");
    let apparatus = in_file(apparatus_path, io::load_apparatus(apparatus_path))?;
    let selector = if a.rows.is_empty() {
        ProtrusionSelector::All
    } else {
        ProtrusionSelector::Rows(a.rows.clone())
    };
    let plan = in_file(apparatus_path, trial_plan(&apparatus, &a.masses, &selector))?;
    let session = Simulator::new(scenario)?.simulate_session(&apparatus, &plan, a.samples)?;

    // the session refers to the layout and apparatus it was made with
    let layout_path = match &a.layout {
        Some(p) => p.clone(),
        None => {
            let doc: io::ScenarioDoc = io::read_document(&a.scenario)?;
            io::resolve_ref(&a.scenario, &doc.layout_ref)
        }
    };
    let doc = SessionDoc::from_session(
        &session,
        &reference_to(&a.out, &layout_path)?,
        &reference_to(&a.out, apparatus_path)?,
    );
    io::write_document(&a.out, &doc)?;
    print_stdout(&format!("{}\n", json!({ "trials": session.trials().len() })));
    Ok(())
}

fn calibrate_cmd(a: CalibrateArgs) -> CliResult<()> {
    let session = in_file(
        &a.session,
        io::load_session(&a.session, a.layout.as_deref(), a.apparatus.as_deref()),
    )?;
    let mode: CalibrationMode = a.mode.into();
    let anchor_params = match (&a.params, mode) {
        (Some(p), _) => {
            let doc = in_file(p, io::load_params(p))?;
            // a calibrated file anchors on its own ζ₀
            in_file(p, doc.zeta0().transpose().unwrap_or_else(|| doc.params()))?
        }
        (None, CalibrationMode::Fsr) => [AffineParams::IDENTITY; SENSORS_PER_MODULE],
        (None, CalibrationMode::Shoe) => {
            return Err(Error::InvalidInput("shoe mode needs --params with the bench calibration ζ₀".into()).into())
        }
    };
    let settings = match &a.config {
        Some(p) => in_file(p, io::read_document::<CalibrationSettings>(p))?,
        None => CalibrationSettings::default(),
    };
    let cfg = settings.resolve(&session, mode, ParamVector::from_params(&anchor_params));
    let result = in_file(&a.session, calibrate(&session, &cfg))?;

    let params = result.params.to_params()?;
    io::write_document(&a.out, &ParamsDoc::calibrated(mode, &params, &anchor_params))?;

    if let Some(report_path) = &a.report {
        let outcomes = in_file(&a.session, session_outcomes(&session, &result.params, result.grf_params()))?;
        let rep = report(&outcomes, MetricDenominators::of(session.layout()))?;
        io::write_document(report_path, &rep)?;
    }

    let n = result.residuals.len() as f64;
    let mean = |f: &dyn Fn(&crate::calibrator::TrialResidual) -> f64| result.residuals.iter().map(f).sum::<f64>() / n;
    let summary = json!({
        "mode": mode,
        "status": result.status,
        "iterations": result.iterations,
        "anchor_retained": result.anchor_retained,
        "initial_cost": result.initial_cost,
        "final_cost": result.final_cost,
        "cop_mae_mm": { "before": mean(&|t| t.before.cop_error_mm), "after": mean(&|t| t.after.cop_error_mm) },
        "grf_mae_n": { "before": mean(&|t| t.before.grf_error_n), "after": mean(&|t| t.after.grf_error_n) },
    });
    print_stdout(&format!("{}\n", serde_json::to_string_pretty(&summary).expect("plain json")));
    Ok(())
}

struct DoubleSupport {
    layouts: [SensorLayout; 2],
    params: [ModuleParams; 2],
    poses: [ModulePose; 2],
}

impl DoubleSupport {
    fn load(&self, record: &crate::io::stream::StreamRecord) -> Result<crate::measurement::LoadEstimate> {
        let samples = [record.left(), record.right()];
        let loads: [_; 2] = std::array::from_fn(|m| {
            (module_load(&self.layouts[m], &self.params[m].cop, &self.params[m].grf, &samples[m]), self.poses[m])
        });
        combine_double_support(&loads)
    }
}

fn poses_from(poses: Option<&PathBuf>, stance: Option<&StanceDescription>) -> CliResult<Option<[ModulePose; 2]>> {
    if let Some(p) = poses {
        let doc: PosesDoc = in_file(p, io::read_document(p))?;
        return Ok(Some([doc.left, doc.right]));
    }
    Ok(stance.map(|s| [s.left_pose, s.right_pose]))
}

fn load_stance_opt(path: Option<&PathBuf>) -> CliResult<Option<StanceDescription>> {
    path.map(|p| in_file(p, io::load_stance(p))).transpose()
}

fn evaluate(a: EvaluateArgs) -> CliResult<()> {
    let rep: ErrorReport = if let Some(session_path) = &a.session {
        let session = in_file(
            session_path,
            io::load_session(session_path, a.layout.as_deref(), a.apparatus.as_deref()),
        )?;
        let mp = load_module_params(&a.params)?;
        let den = match a.denominators {
            DenominatorArg::Layout => MetricDenominators::of(session.layout()),
            DenominatorArg::Foot => MetricDenominators::foot(),
        };
        let outcomes = in_file(
            session_path,
            session_outcomes(&session, &ParamVector::from_params(&mp.cop), &ParamVector::from_params(&mp.grf)),
        )?;
        report(&outcomes, den)?
    } else {
        let log_path = a.log.as_ref().expect("clap requires log without session");
        let stance = load_stance_opt(a.stance.as_ref())?;
        let reference_stance = match load_stance_opt(a.reference.as_ref())? {
            Some(s) => s,
            None => stance.clone().ok_or_else(|| {
                Failure::from(Error::InvalidInput("log evaluation needs --stance or --reference".into()))
            })?,
        };
        let reference = in_file(
            a.reference.as_ref().or(a.stance.as_ref()).expect("one is present"),
            reference_stance.reference(),
        )?;
        let poses = poses_from(a.poses.as_ref(), stance.as_ref())?.unwrap_or([
            reference_stance.left_pose,
            reference_stance.right_pose,
        ]);
        let left_layout = layout_or_default(a.layout.as_ref())?;
        let right_layout = match &a.layout_right {
            Some(p) => in_file(p, io::load_layout(p))?,
            None => left_layout.clone(),
        };
        let left = load_module_params(&a.params)?;
        let right = match &a.params_right {
            Some(p) => load_module_params(p)?,
            None => left,
        };
        let den = match a.denominators {
            DenominatorArg::Layout => MetricDenominators::of(&left_layout),
            DenominatorArg::Foot => MetricDenominators::foot(),
        };
        let ds = DoubleSupport {
            layouts: [left_layout, right_layout],
            params: [left, right],
            poses,
        };
        let parsed = read_log(log_path)?;
        let mass_kg = reference.grf / reference_stance.gravity_m_s2;
        let outcomes = parsed
            .records
            .iter()
            .map(|r| {
                Ok(Outcome {
                    mass_kg,
                    reference,
                    measured: ds.load(r)?,
                })
            })
            .collect::<Result<Vec<_>>>();
        let outcomes = in_file(log_path, outcomes)?;
        report(&outcomes, den)?
    };
    if let Some(out) = &a.out {
        io::write_document(out, &rep)?;
    }
    print_stdout(&render_table(&rep));
    Ok(())
}

fn estimate(a: EstimateArgs) -> CliResult<()> {
    let parsed = read_log(&a.log)?;
    let left_layout = layout_or_default(a.layout.as_ref())?;
    let left = load_module_params(&a.params)?;

    let mut csv = String::from("t_ms,cop_x_mm,cop_y_mm,grf_n\n");
    let mut row = |t: u64, load: Option<crate::measurement::LoadEstimate>, grf: f64| {
        match load {
            Some(l) => writeln!(csv, "{t},{},{},{}", l.cop.x, l.cop.y, l.grf),
            // CoP undefined without load; GRF is still reported
            None => writeln!(csv, "{t},,,{grf}"),
        }
        .expect("writing to a String");
    };

    if let Some(right_path) = &a.params_right {
        let stance = load_stance_opt(a.stance.as_ref())?;
        let poses = poses_from(a.poses.as_ref(), stance.as_ref())?.ok_or_else(|| {
            Failure::from(Error::InvalidInput("double support needs --poses or --stance".into()))
        })?;
        let right_layout = match &a.layout_right {
            Some(p) => in_file(p, io::load_layout(p))?,
            None => left_layout.clone(),
        };
        let ds = DoubleSupport {
            layouts: [left_layout, right_layout],
            params: [left, load_module_params(right_path)?],
            poses,
        };
        for r in &parsed.records {
            match ds.load(r) {
                Ok(l) => row(r.timestamp_ms, Some(l), l.grf),
                Err(Error::InsufficientLoad { total, .. }) => row(r.timestamp_ms, None, total),
                Err(e) => return Err(in_file::<()>(&a.log, Err(e)).unwrap_err()),
            }
        }
    } else {
        for r in &parsed.records {
            let sample = r.left();
            let l = module_load(&left_layout, &left.cop, &left.grf, &sample);
            if l.grf > 0.0 {
                row(r.timestamp_ms, Some(l), l.grf);
            } else {
                let grf = crate::measurement::sensor_forces(&left.grf, &sample).iter().sum();
                row(r.timestamp_ms, None, grf);
            }
        }
    }

    match &a.out {
        Some(p) => io::write_atomic(p, &csv)?,
        None => print_stdout(&csv),
    }
    Ok(())
}
