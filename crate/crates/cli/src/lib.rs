//! Command-line front end: argument parsing, subcommand dispatch and the
//! byte-stable report encodings. `run` never touches stdout or stderr itself;
//! the binary prints what the returned outcome carries.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;

use gradsense::basis::{build_eigenbasis, BasisError, Eigenbasis, ModeLabel};
use gradsense::model::{config_digest, parse_config, AnalysisConfig};
use gradsense::observability::{strategic_check, StrategicVerdict};
use gradsense::placement::{
    parse_angle_grid, rationality_predicate, sweep_csv, sweep_placements, PlacementError, RationalityReport, SweepEntry,
};
use gradsense::reconstruct::{reconstruct, InnerRegion, InversionOptions, ReconstructionError, ReconstructionResult};
use gradsense::report::{format_float, to_json_bytes};
use gradsense::semigroup::{synthesize_from_state, InitialField, MeasurementSeries, SimulationError};

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_NOT_STRATEGIC: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping the worker pool size.
pub const THREADS_VAR: &str = "GRADSENSE_THREADS";

/// Result of one invocation. `stdout` and `stderr` hold what the binary
/// should print; `artifacts` lists the files written, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

#[derive(Parser, Debug)]
#[command(name = "gradsense", version, about = "Boundary-gradient sensor analysis on the Neumann disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank test and Gramian; prints the verdict as JSON, exits 0 if strategic and 1 otherwise.
    Analyze {
        config: PathBuf,
    },
    /// Synthesizes sensor outputs from a preset initial state.
    Simulate {
        config: PathBuf,
        /// mode:n,m,branch | bump:center,width | poly:rcos
        #[arg(long)]
        z0: String,
        /// Number of equispaced samples on [0, horizon].
        #[arg(long)]
        samples: usize,
        /// Standard deviation of additive Gaussian noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Measurement CSV path; a `<stem>.meta.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recovers the tangential boundary gradient on the observed arc.
    Reconstruct {
        config: PathBuf,
        measurements: PathBuf,
        /// Ridge regularization weight.
        #[arg(long, default_value_t = InversionOptions::default().reg_param)]
        reg: f64,
        /// Number of output angles on the arc.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Highest angular index fitted; picked from the data when omitted.
        #[arg(long)]
        max_angular: Option<usize>,
        /// Collar thickness of the inner region; a quarter of the radius when omitted.
        #[arg(long)]
        thickness: Option<f64>,
        /// Gradient CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metadata JSON path; defaults to `<stem>.meta.json` next to `--out`.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Evaluates candidate placements and ranks them by the smallest Gramian eigenvalue.
    Sweep {
        config: PathBuf,
        /// Text file with one comma-separated angle tuple per line.
        #[arg(long)]
        grid: PathBuf,
        /// Ranking CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Angle-rationality prediction for a two-sensor configuration, checked against the rank test.
    Predict {
        config: PathBuf,
        /// Number of angular indices examined.
        #[arg(short = 'J', long = "J", visible_alias = "unstable-modes")]
        unstable_modes: usize,
        /// Largest denominator tried; defaults to max(n_max, 2).
        #[arg(long)]
        qmax: Option<u64>,
        /// Distance below which a multiple counts as rational.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

/// Failure of a subcommand, classified by exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<BasisError> for Failure {
    fn from(e: BasisError) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<SimulationError> for Failure {
    fn from(e: SimulationError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<ReconstructionError> for Failure {
    fn from(e: ReconstructionError) -> Self {
        match e {
            ReconstructionError::Argument(_) => Failure::Usage(e.to_string()),
            ReconstructionError::SingularSystem => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<PlacementError> for Failure {
    fn from(e: PlacementError) -> Self {
        match e {
            PlacementError::Basis(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        Failure::Usage(e.to_string())
    }
}

/// What a subcommand produced before it is turned into an outcome.
#[derive(Default)]
struct Output {
    exit_code: i32,
    stdout: Vec<u8>,
    artifacts: Vec<PathBuf>,
}

impl Output {
    fn emit(&mut self, bytes: Vec<u8>, path: Option<&Path>) -> Result<(), Failure> {
        match path {
            Some(p) => {
                fs::write(p, &bytes).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?;
                self.artifacts.push(p.to_path_buf());
            }
            None => self.stdout.extend_from_slice(&bytes),
        }
        Ok(())
    }
}

/// Parses `argv` (program name first) and executes the subcommand.
pub fn run<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string().into_bytes();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    CommandOutcome { exit_code: EXIT_SUCCESS, artifacts: Vec::new(), stdout: rendered, stderr: Vec::new() }
                }
                _ => CommandOutcome { exit_code: EXIT_USAGE, artifacts: Vec::new(), stdout: Vec::new(), stderr: rendered },
            };
        }
    };
    match dispatch(cli.command) {
        Ok(out) => CommandOutcome { exit_code: out.exit_code, artifacts: out.artifacts, stdout: out.stdout, stderr: Vec::new() },
        Err(failure) => {
            let mut stderr = format!("error: {failure}\n").into_bytes();
            if matches!(failure, Failure::Usage(_)) {
                stderr.extend_from_slice(format!("\n{}\n", Cli::command().render_usage()).as_bytes());
            }
            CommandOutcome { exit_code: failure.exit_code(), artifacts: Vec::new(), stdout: Vec::new(), stderr }
        }
    }
}

/// Reads the worker cap from the environment: `Ok(None)` when unset.
pub fn thread_cap_from_env() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_VAR) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("{THREADS_VAR}: {e}")),
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_VAR} must be a positive integer, got `{text}`")),
        },
    }
}

fn load_config(path: &Path) -> Result<AnalysisConfig, Failure> {
    let text = read_text(path)?;
    parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn basis_for(config: &AnalysisConfig) -> Result<Eigenbasis, Failure> {
    Ok(build_eigenbasis(config.radius(), config.trunc)?)
}

/// `dir/stem.meta.json` for `dir/stem.ext`.
fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.meta.json"))
}

fn dispatch(command: Command) -> Result<Output, Failure> {
    let mut out = Output::default();
    match command {
        Command::Analyze { config } => {
            let config = load_config(&config)?;
            let basis = basis_for(&config)?;
            let verdict = strategic_check(&config, &basis);
            out.exit_code = if verdict.strategic { EXIT_SUCCESS } else { EXIT_NOT_STRATEGIC };
            let report = AnalysisReport::new(&config, verdict);
            out.emit(emit_report(&Payload::Verdict(&report), Format::Json)?, None)?;
        }
        Command::Simulate { config, z0, samples, noise, seed, out: path } => {
            let config = load_config(&config)?;
            let basis = basis_for(&config)?;
            let initial = InitialField::parse(&z0)?.modal_state(&basis)?;
            let series = synthesize_from_state(&config, &basis, &initial, samples, noise, seed)?;
            out.emit(emit_report(&Payload::Series(&series), Format::Csv)?, path.as_deref())?;
            if let Some(p) = path.as_deref() {
                let meta = to_json_bytes(&series.metadata(&config));
                out.emit(meta, Some(&sidecar_path(p)))?;
            }
        }
        Command::Reconstruct { config, measurements, reg, grid, max_angular, thickness, out: path, meta } => {
            let config = load_config(&config)?;
            let basis = basis_for(&config)?;
            let file = fs::File::open(&measurements)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", measurements.display())))?;
            let series = MeasurementSeries::read_csv(std::io::BufReader::new(file))
                .map_err(|e| Failure::Usage(format!("{}: {e}", measurements.display())))?;
            if !(reg.is_finite() && reg >= 0.0) {
                return Err(Failure::Usage(format!("--reg must be finite and nonnegative, got {reg}")));
            }
            let options = InversionOptions { reg_param: reg, max_angular, ..InversionOptions::default() };
            let result = reconstruct(&series, &config, &basis, &options, grid, thickness)?;
            let digest = config_digest(&config);
            let payload = Payload::Reconstruction { result: &result, config_digest: &digest };
            out.emit(emit_report(&payload, Format::Csv)?, path.as_deref())?;
            if let Some(meta_path) = meta.or_else(|| path.as_deref().map(sidecar_path)) {
                out.emit(emit_report(&payload, Format::Json)?, Some(&meta_path))?;
            }
        }
        Command::Sweep { config, grid, out: path } => {
            let config = load_config(&config)?;
            let tuples = parse_angle_grid(&read_text(&grid)?)
                .map_err(|e| Failure::Usage(format!("{}: {e}", grid.display())))?;
            let ranking = sweep_placements(&config, &tuples)?;
            out.emit(emit_report(&Payload::Ranking(&ranking), Format::Csv)?, path.as_deref())?;
        }
        Command::Predict { config, unstable_modes, qmax, tol } => {
            let config = load_config(&config)?;
            if config.sensors.len() != 2 {
                return Err(Failure::Usage(format!(
                    "predict needs exactly two sensors, the configuration has {}",
                    config.sensors.len()
                )));
            }
            let basis = basis_for(&config)?;
            let q_max = qmax.unwrap_or(config.trunc.n_max.max(2) as u64);
            let (t1, t2) = (config.sensors[0].center_angle(), config.sensors[1].center_angle());
            let rationality = rationality_predicate(t1, t2, unstable_modes, q_max, tol)?;
            let verdict = strategic_check(&config, &basis);
            let report = PredictionReport::new(rationality, verdict);
            out.emit(emit_report(&Payload::Prediction(&report), Format::Json)?, None)?;
        }
    }
    Ok(out)
}

/// Verdict document printed by `analyze`.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub config_digest: String,
    pub rank_condition: bool,
    pub gramian_condition: bool,
    #[serde(flatten)]
    pub verdict: StrategicVerdict,
}

impl AnalysisReport {
    pub fn new(config: &AnalysisConfig, verdict: StrategicVerdict) -> AnalysisReport {
        AnalysisReport {
            config_digest: config_digest(config),
            rank_condition: verdict.rank_condition(),
            gramian_condition: verdict.gramian_condition(),
            verdict,
        }
    }
}

/// Document printed by `predict`. The rank test is the ground truth; the
/// rationality predicate is compared with it over the indices it examines.
#[derive(Debug, Clone, Serialize)]
pub struct PredictionReport {
    pub rationality: RationalityReport,
    pub first_rational: Option<usize>,
    pub predicted_failing_mode: Option<usize>,
    /// Rank condition restricted to angular indices `1..=J`.
    pub rank_condition: bool,
    pub first_failing_mode: Option<usize>,
    pub agreement: bool,
    pub verdict: StrategicVerdict,
}

impl PredictionReport {
    pub fn new(rationality: RationalityReport, verdict: StrategicVerdict) -> PredictionReport {
        let j = rationality.unstable_modes;
        let first_failing_mode = verdict.failing_modes.iter().map(|f| f.n).find(|&n| n <= j);
        let rank_condition = verdict.q_check && first_failing_mode.is_none();
        PredictionReport {
            first_rational: rationality.first_rational(),
            predicted_failing_mode: rationality.predicted_failing_mode(),
            agreement: rationality.predicted_strategic == rank_condition,
            rank_condition,
            first_failing_mode,
            rationality,
            verdict,
        }
    }
}

/// Metadata written alongside a reconstructed gradient.
#[derive(Debug, Clone, Serialize)]
struct ReconstructionMeta<'a> {
    config_digest: &'a str,
    residual: f64,
    reg_param: f64,
    angular_limit: usize,
    sigma_max: f64,
    sigma_min: f64,
    grid_size: usize,
    inner_region: &'a InnerRegion,
    used_modes: &'a [ModeLabel],
}

/// Anything `emit_report` can encode.
#[derive(Debug, Clone, Copy)]
pub enum Payload<'a> {
    Verdict(&'a AnalysisReport),
    Prediction(&'a PredictionReport),
    Ranking(&'a [SweepEntry]),
    Series(&'a MeasurementSeries),
    Reconstruction { result: &'a ReconstructionResult, config_digest: &'a str },
}

impl Payload<'_> {
    fn name(&self) -> &'static str {
        match self {
            Payload::Verdict(_) => "verdict",
            Payload::Prediction(_) => "prediction",
            Payload::Ranking(_) => "ranking",
            Payload::Series(_) => "series",
            Payload::Reconstruction { .. } => "reconstruction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReportError {
    Unsupported { payload: &'static str, format: Format },
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportError::Unsupported { payload, format } => write!(f, "invalid argument: {payload} cannot be written as {format:?}"),
        }
    }
}

impl std::error::Error for ReportError {}

/// Encodes a payload. Floats carry 17 significant digits and field order is
/// fixed, so equal inputs give byte-identical documents. Supported pairs:
/// verdict and prediction as JSON; ranking and series as CSV; reconstruction
/// as CSV (the gradient) or JSON (its metadata).
pub fn emit_report(payload: &Payload<'_>, format: Format) -> Result<Vec<u8>, ReportError> {
    match (payload, format) {
        (Payload::Verdict(v), Format::Json) => Ok(to_json_bytes(v)),
        (Payload::Prediction(p), Format::Json) => Ok(to_json_bytes(p)),
        (Payload::Ranking(entries), Format::Csv) => Ok(sweep_csv(entries)),
        (Payload::Series(series), Format::Csv) => {
            let mut bytes = Vec::new();
            series.write_csv(&mut bytes).expect("in-memory write");
            Ok(bytes)
        }
        (Payload::Reconstruction { result, .. }, Format::Csv) => Ok(gradient_csv(result)),
        (Payload::Reconstruction { result, config_digest }, Format::Json) => {
            let estimate = &result.modal_estimate;
            Ok(to_json_bytes(&ReconstructionMeta {
                config_digest,
                residual: result.residual,
                reg_param: result.reg_param,
                angular_limit: estimate.angular_limit,
                sigma_max: estimate.sigma_max,
                sigma_min: estimate.sigma_min,
                grid_size: result.boundary_gradient.theta.len(),
                inner_region: &result.inner_region,
                used_modes: &estimate.used_modes,
            }))
        }
        _ => Err(ReportError::Unsupported { payload: payload.name(), format }),
    }
}

/// `theta,g_tangential,g_normal`, one row per arc angle.
fn gradient_csv(result: &ReconstructionResult) -> Vec<u8> {
    let trace = &result.boundary_gradient;
    let mut text = String::from("theta,g_tangential,g_normal\n");
    for ((t, g), n) in trace.theta.iter().zip(&trace.tangential).zip(&trace.normal) {
        text.push_str(&format!("{},{},{}\n", format_float(*t), format_float(*g), format_float(*n)));
    }
    text.into_bytes()
}
