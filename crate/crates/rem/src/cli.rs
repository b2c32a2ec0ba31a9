//! The `rem` command line.
//!
//! Exit status: 0 on success, 2 for usage errors and invalid inputs, 1 for
//! failures while running. Errors go to stderr as one JSON object per line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rem_core::calibration::{calibrate, ExactChannelBackend, SampledBackend, DEFAULT_CALIBRATION_SHOTS};
use rem_core::experiment::{Mode, Suite};
use rem_core::mitigation::{mitigate, mitigate_truncated};
use rem_core::model::{BitFlipModel, PauliZString};
use rem_core::rng::{stream, OUTCOME_STREAM};
use rem_core::sim::build_ansatz;
use rem_core::variance::{noisy_variance_components, predicted_mitigated_variance, predicted_noisy_variance};
use serde::{Deserialize, Serialize};

use crate::config::load_config;
use crate::error::{RemError, Result};
use crate::formats::{read_expectations, read_model, read_results, write_circuit, write_expectations, write_model, write_results};
use crate::manifest::{now, sidecar_path, Manifest, MANIFEST_FILE};
use crate::report::write_analysis;
use crate::runner::{run_parallel, worker_count};

pub const RESULTS_FILE: &str = "results.csv";
pub const CIRCUIT_FILE: &str = "circuit.txt";
pub const DEVICE_MODEL_FILE: &str = "device_model.csv";
/// Manifest key of the file written by a single-output command.
pub const SINGLE_OUTPUT: &str = "output";

#[derive(Debug, Parser)]
#[command(name = "rem", version, about = "Readout-error mitigation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed (overrides the seed of a config file).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: available parallelism].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a bit-flip model on a simulated device.
    Calibrate(CalibrateArgs),
    /// Run a benchmarking campaign.
    Run(RunArgs),
    /// Mitigate a vector of noisy expectation values.
    Mitigate(MitigateArgs),
    /// Predict noisy and mitigated estimator variances.
    PredictVariance(PredictArgs),
    /// Recompute the analysis of a campaign directory.
    Analyze(AnalyzeArgs),
    /// Repeat a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Shots sampled through the readout channel.
    Sampled,
    /// Channel probabilities times the shot count, rounded.
    Exact,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub qubits: usize,
    /// Shots per calibration circuit.
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_SHOTS)]
    pub shots: u64,
    #[arg(long = "model-out", visible_alias = "out")]
    pub model_out: PathBuf,
    /// Readout channel of the simulated device, as a model file.
    #[arg(long, conflicts_with = "symmetric")]
    pub device_model: Option<PathBuf>,
    /// Simulated device with p0 = p1 = P on every qubit.
    #[arg(long, value_name = "P")]
    pub symmetric: Option<f64>,
    #[arg(long, value_enum, default_value_t = BackendKind::Sampled)]
    pub backend: BackendKind,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "all", value_parser = ["noise-free", "noisy", "noisy+mitigated", "all"])]
    pub mode: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct MitigateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Noisy expectations (operator_mask,expectation).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep only terms correcting up to this many flips.
    #[arg(long)]
    pub truncate: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Noisy expectations (operator_mask,expectation).
    #[arg(long)]
    pub exps: PathBuf,
    #[arg(long)]
    pub shots: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Campaign directory written by `run`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output file or directory, as for the original command.
    #[arg(long)]
    pub out: PathBuf,
    /// Fail unless every output matches the manifest's digests.
    #[arg(long)]
    pub verify: bool,
}

/// A failed command and its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit 2.
    Input(RemError),
    /// Failure while running: exit 1.
    Runtime(RemError),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn error(&self) -> &RemError {
        match self {
            Failure::Input(e) | Failure::Runtime(e) => e,
        }
    }

    fn json(&self) -> String {
        let kind = match self {
            Failure::Input(_) => "invalid-input",
            Failure::Runtime(_) => "runtime",
        };
        serde_json::json!({ "error": kind, "exit_code": self.exit_code(), "message": self.error().to_string() })
            .to_string()
    }
}

trait Classify<T> {
    fn input(self) -> std::result::Result<T, Failure>;
    fn runtime(self) -> std::result::Result<T, Failure>;
}

impl<T, E: Into<RemError>> Classify<T> for std::result::Result<T, E> {
    fn input(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }

    fn runtime(self) -> std::result::Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

/// Settings shared by every command.
#[derive(Debug, Clone, Copy)]
struct Context {
    seed: Option<u64>,
    workers: usize,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(_) => 0,
        Err(f) => {
            eprintln!("{}", f.json());
            f.exit_code()
        }
    }
}

/// Runs a parsed command and returns the path of the manifest it wrote.
pub fn execute(cli: &Cli) -> Outcome<PathBuf> {
    let ctx = Context { seed: cli.seed, workers: worker_count(cli.workers) };
    match &cli.command {
        Command::Calibrate(a) => run_calibrate(ctx, a),
        Command::Run(a) => run_campaign(ctx, a),
        Command::Mitigate(a) => run_mitigate(ctx, a),
        Command::PredictVariance(a) => run_predict(ctx, a),
        Command::Analyze(a) => run_analyze(ctx, a),
        Command::Replay(a) => run_replay(cli.workers, a),
    }
}

fn canonical(path: &Path) -> Result<PathBuf> {
    std::fs::canonicalize(path).map_err(|e| RemError::io(path, e))
}

fn invocation<A: Serialize>(args: &A) -> Result<toml::Table> {
    match toml::Value::try_from(args) {
        Ok(toml::Value::Table(t)) => Ok(t),
        Ok(_) => Err(RemError::Invalid("arguments did not serialize to a table".into())),
        Err(e) => Err(RemError::Invalid(e.to_string())),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| RemError::io(dir, e))
}

fn create_parent(file: &Path) -> Result<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => create_dir(p),
        _ => Ok(()),
    }
}

fn run_calibrate(ctx: Context, args: &CalibrateArgs) -> Outcome<PathBuf> {
    let started = now();
    let mut args = args.clone();
    let device = match (&args.device_model, args.symmetric) {
        (Some(path), _) => {
            let path = canonical(path).input()?;
            let model = read_model(&path).input()?;
            args.device_model = Some(path);
            model
        }
        (None, Some(p)) => BitFlipModel::symmetric(args.qubits, p).input()?,
        (None, None) => BitFlipModel::noiseless(args.qubits).input()?,
    };
    if device.qubit_count() != args.qubits {
        return Err(Failure::Input(RemError::Invalid(format!(
            "device model has {} qubits, --qubits is {}",
            device.qubit_count(),
            args.qubits
        ))));
    }
    if args.shots == 0 {
        return Err(Failure::Input(rem_core::Error::ZeroShots.into()));
    }
    let seed = ctx.seed.unwrap_or(0);
    let mut rng = stream(seed, OUTCOME_STREAM);
    let model = match args.backend {
        BackendKind::Sampled => calibrate(&SampledBackend { model: device }, args.qubits, args.shots, &mut rng),
        BackendKind::Exact => calibrate(&ExactChannelBackend { model: device }, args.qubits, args.shots, &mut rng),
    }
    .runtime()?;

    create_parent(&args.model_out).runtime()?;
    write_model(&args.model_out, &model).runtime()?;
    let mut manifest = Manifest::new("calibrate", Some(seed), ctx.workers, invocation(&args).runtime()?, started);
    if let Some(path) = &args.device_model {
        manifest.add_input(path).runtime()?;
    }
    manifest.add_output_as(SINGLE_OUTPUT, &args.model_out).runtime()?;
    let path = sidecar_path(&args.model_out);
    manifest.write(&path).runtime()?;
    Ok(path)
}

fn run_campaign(ctx: Context, args: &RunArgs) -> Outcome<PathBuf> {
    let started = now();
    let mut args = args.clone();
    args.config = canonical(&args.config).input()?;
    let resolved = load_config(&args.config, ctx.seed).input()?;
    let mode = Mode::parse(&args.mode)
        .ok_or_else(|| RemError::Invalid(format!("unknown mode `{}`", args.mode)))
        .input()?;
    let config = &resolved.experiment;
    let suite = Suite::prepare(config, mode).runtime()?;

    let out = &args.out;
    create_dir(out).runtime()?;
    let mut written = Vec::new();
    let circuit = build_ansatz(config.qubits, &config.angles).runtime()?;
    written.push(out.join(CIRCUIT_FILE));
    write_circuit(&out.join(CIRCUIT_FILE), &circuit).runtime()?;
    written.push(out.join(DEVICE_MODEL_FILE));
    write_model(&out.join(DEVICE_MODEL_FILE), &config.device_noise).runtime()?;
    for (shots, model) in suite.mitigation_models() {
        let name = match shots {
            0 => "mitigation_model.csv".to_string(),
            s => format!("mitigation_model_s{s}.csv"),
        };
        write_model(&out.join(&name), model).runtime()?;
        written.push(out.join(name));
    }

    let results = run_parallel(&suite, ctx.workers).runtime()?;
    write_results(&out.join(RESULTS_FILE), &results).runtime()?;
    written.push(out.join(RESULTS_FILE));
    written.extend(write_analysis(&results, out).runtime()?);

    let mut manifest =
        Manifest::new("run", Some(config.seed), ctx.workers, invocation(&args).runtime()?, started);
    for input in &resolved.inputs {
        manifest.add_input(input).runtime()?;
    }
    for file in &written {
        manifest.add_output(file).runtime()?;
    }
    manifest.config = Some(resolved.file.clone());
    let path = out.join(MANIFEST_FILE);
    manifest.write(&path).runtime()?;
    Ok(path)
}

fn run_mitigate(ctx: Context, args: &MitigateArgs) -> Outcome<PathBuf> {
    let started = now();
    let mut args = args.clone();
    args.model = canonical(&args.model).input()?;
    args.input = canonical(&args.input).input()?;
    let model = read_model(&args.model).input()?;
    let qubits = model.qubit_count();
    let noisy = read_expectations(&args.input, qubits).input()?;
    let values = match args.truncate {
        None => mitigate(&noisy, &model).runtime()?,
        Some(order) => {
            if order > qubits {
                return Err(Failure::Input(rem_core::Error::TruncationOrder { order, qubits }.into()));
            }
            (0..noisy.len())
                .map(|mask| {
                    let op = PauliZString::new(qubits, mask)?;
                    mitigate_truncated(&op, &noisy, &model, order)
                })
                .collect::<rem_core::Result<Vec<f64>>>()
                .runtime()?
        }
    };
    let flagged = rem_core::mitigation::unphysical(&values);
    if !flagged.is_empty() {
        eprintln!("{}", serde_json::json!({ "warning": "unphysical", "operator_masks": flagged }));
    }
    create_parent(&args.out).runtime()?;
    write_expectations(&args.out, &values, true).runtime()?;

    let mut manifest = Manifest::new("mitigate", ctx.seed, ctx.workers, invocation(&args).runtime()?, started);
    manifest.add_input(&args.model).runtime()?;
    manifest.add_input(&args.input).runtime()?;
    manifest.add_output_as(SINGLE_OUTPUT, &args.out).runtime()?;
    let path = sidecar_path(&args.out);
    manifest.write(&path).runtime()?;
    Ok(path)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionRow {
    pub operator_mask: usize,
    pub shots: u64,
    pub noisy_expectation: f64,
    pub mitigated_expectation: f64,
    /// Per-shot bit-flip variance.
    pub bitflip_component: f64,
    /// Per-shot quantum variance.
    pub qm_component: f64,
    pub predicted_noisy_variance: f64,
    pub predicted_mitigated_variance: f64,
}

fn run_predict(ctx: Context, args: &PredictArgs) -> Outcome<PathBuf> {
    let started = now();
    let mut args = args.clone();
    args.model = canonical(&args.model).input()?;
    args.exps = canonical(&args.exps).input()?;
    let model = read_model(&args.model).input()?;
    let qubits = model.qubit_count();
    let noisy = read_expectations(&args.exps, qubits).input()?;
    if args.shots == 0 {
        return Err(Failure::Input(rem_core::Error::ZeroShots.into()));
    }
    if let Some(bad) = noisy.iter().find(|v| v.abs() > 1.0) {
        return Err(Failure::Input(rem_core::Error::ExpectationOutOfRange(*bad).into()));
    }
    let mitigated = mitigate(&noisy, &model).runtime()?;
    let rows = (1..noisy.len())
        .map(|mask| {
            let op = PauliZString::new(qubits, mask)?;
            let parts = noisy_variance_components(&op, &noisy, &mitigated, &model)?;
            Ok(PredictionRow {
                operator_mask: mask,
                shots: args.shots,
                noisy_expectation: noisy[mask],
                mitigated_expectation: mitigated[mask],
                bitflip_component: parts.bitflip_component,
                qm_component: parts.qm_component,
                predicted_noisy_variance: predicted_noisy_variance(&op, &noisy, &mitigated, &model, args.shots)?,
                predicted_mitigated_variance: predicted_mitigated_variance(&op, &noisy, &model, args.shots)?,
            })
        })
        .collect::<rem_core::Result<Vec<_>>>()
        .runtime()?;

    create_parent(&args.out).runtime()?;
    let mut w = csv::Writer::from_path(&args.out).map_err(|e| RemError::csv(&args.out, e)).runtime()?;
    for row in &rows {
        w.serialize(row).map_err(|e| RemError::csv(&args.out, e)).runtime()?;
    }
    w.flush().map_err(|e| RemError::io(&args.out, e)).runtime()?;

    let mut manifest = Manifest::new("predict-variance", ctx.seed, ctx.workers, invocation(&args).runtime()?, started);
    manifest.add_input(&args.model).runtime()?;
    manifest.add_input(&args.exps).runtime()?;
    manifest.add_output_as(SINGLE_OUTPUT, &args.out).runtime()?;
    let path = sidecar_path(&args.out);
    manifest.write(&path).runtime()?;
    Ok(path)
}

fn run_analyze(ctx: Context, args: &AnalyzeArgs) -> Outcome<PathBuf> {
    let started = now();
    let mut args = args.clone();
    args.input = canonical(&args.input).input()?;
    let results_path = args.input.join(RESULTS_FILE);
    let results = read_results(&results_path).input()?;
    create_dir(&args.out).runtime()?;
    if canonical(&args.out).runtime()? == args.input {
        return Err(Failure::Input(RemError::Invalid("--out must differ from --in".into())));
    }
    let written = write_analysis(&results, &args.out).runtime()?;

    let mut manifest = Manifest::new("analyze", ctx.seed, ctx.workers, invocation(&args).runtime()?, started);
    manifest.add_input(&results_path).runtime()?;
    for file in &written {
        manifest.add_output(file).runtime()?;
    }
    let path = args.out.join(MANIFEST_FILE);
    manifest.write(&path).runtime()?;
    Ok(path)
}

fn recorded<A: for<'de> Deserialize<'de>>(manifest: &Manifest) -> Result<A> {
    toml::Value::Table(manifest.invocation.clone())
        .try_into()
        .map_err(|e: toml::de::Error| RemError::Invalid(format!("manifest invocation: {}", e.message())))
}

fn run_replay(workers: Option<usize>, args: &ReplayArgs) -> Outcome<PathBuf> {
    let source = canonical(&args.manifest).input()?;
    let manifest = Manifest::read(&source).input()?;
    let changed = manifest.changed_inputs();
    if !changed.is_empty() {
        return Err(Failure::Input(RemError::Invalid(format!(
            "inputs changed since the manifest was written: {}",
            changed.join(", ")
        ))));
    }
    let ctx = Context { seed: manifest.seed, workers: workers.unwrap_or(manifest.workers) };
    let written = match manifest.command.as_str() {
        "calibrate" => {
            let mut a: CalibrateArgs = recorded(&manifest).input()?;
            a.model_out = args.out.clone();
            run_calibrate(ctx, &a)?
        }
        "run" => {
            let mut a: RunArgs = recorded(&manifest).input()?;
            // The manifest carries the resolved config.
            a.config = source.clone();
            a.out = args.out.clone();
            run_campaign(Context { seed: None, ..ctx }, &a)?
        }
        "mitigate" => {
            let mut a: MitigateArgs = recorded(&manifest).input()?;
            a.out = args.out.clone();
            run_mitigate(ctx, &a)?
        }
        "predict-variance" => {
            let mut a: PredictArgs = recorded(&manifest).input()?;
            a.out = args.out.clone();
            run_predict(ctx, &a)?
        }
        "analyze" => {
            let mut a: AnalyzeArgs = recorded(&manifest).input()?;
            a.out = args.out.clone();
            run_analyze(ctx, &a)?
        }
        other => return Err(Failure::Input(RemError::Invalid(format!("cannot replay `{other}`")))),
    };
    if args.verify {
        let fresh = Manifest::read(&written).runtime()?;
        let differing = manifest.differing_outputs(&fresh);
        if !differing.is_empty() {
            return Err(Failure::Runtime(RemError::Invalid(format!(
                "outputs differ from the manifest: {}",
                differing.join(", ")
            ))));
        }
    }
    Ok(written)
}
