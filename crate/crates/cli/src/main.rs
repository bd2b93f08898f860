//! `wrist-mrac`: dataset → train → simulate → evaluate for the soft wrist
//! controller, plus a Jacobian self-check.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use wrist_mrac::adaptive::{export_dataset, read_dataset, MracError};
use wrist_mrac::closed_loop::{read_trace, write_plot_data, write_trace, LoopError, NnController};
use wrist_mrac::config::{Config, DirectionChoice};
use wrist_mrac::metrics::{average, MetricsReport};
use wrist_mrac::nn::{
    gradcheck, load_normalizer, load_weights, save_normalizer, save_weights, Activation,
    WeightsError,
};
use wrist_mrac::pipeline::{self, PipelineError};

const DATASET_FILE: &str = "dataset.csv";
const WEIGHTS_FILE: &str = "weights.txt";
const NORMALIZER_FILE: &str = "normalizer.txt";
const REPORT_FILE: &str = "train_report.toml";
const PLOT_STRIDE: usize = 10;
const GRADCHECK_STEPS: [f64; 3] = [1e-6, 1e-4, 1e-2];

#[derive(Debug, Parser)]
#[command(
    name = "wrist-mrac",
    version,
    about = "NN-based MRAC for a tendon-driven soft wrist"
)]
struct Cli {
    /// TOML configuration; omitted sections and keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `nn.seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Directory for all generated files.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the MIT-rule MRAC and write the (error, force) dataset.
    Dataset,
    /// Train the network controller with Levenberg–Marquardt.
    Train {
        /// Defaults to `<out>/dataset.csv`.
        #[arg(long, value_name = "PATH")]
        dataset: Option<PathBuf>,
    },
    /// Close the loop with the trained controller.
    Simulate {
        /// `all`, `radial`, `ulnar`, `flexion` or `extension`; overrides `loop.direction`.
        #[arg(long)]
        direction: Option<DirectionChoice>,
        #[command(flatten)]
        model: ModelFiles,
    },
    /// Print RMSE, settling time and steady-state error for each trace.
    Evaluate {
        #[arg(required = true, value_name = "TRACE")]
        traces: Vec<PathBuf>,
    },
    /// Compare the analytic Jacobian against central differences.
    Gradcheck {
        /// Network to check; defaults to the seeded initial network.
        #[arg(long, value_name = "PATH")]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        /// Number of random inputs.
        #[arg(long, default_value_t = 100)]
        draws: usize,
    },
}

#[derive(Debug, Args)]
struct ModelFiles {
    /// Defaults to `<out>/weights.txt`.
    #[arg(long, value_name = "PATH")]
    weights: Option<PathBuf>,
    /// Defaults to `<out>/normalizer.txt`.
    #[arg(long, value_name = "PATH")]
    normalizer: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    /// Bad flags, unreadable or malformed input, inconsistent configuration.
    #[error("{0}")]
    Usage(String),
    /// The computation ran but broke a contract or missed a metric.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Failure(_) => ExitCode::from(1),
        }
    }
}

fn usage(context: impl std::fmt::Display, err: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{context}: {err}"))
}

fn failure(context: impl std::fmt::Display, err: impl std::fmt::Display) -> CliError {
    CliError::Failure(format!("{context}: {err}"))
}

fn pipeline_error(context: &str, err: PipelineError) -> CliError {
    match err {
        PipelineError::Mrac(MracError::Divergence { .. })
        | PipelineError::Loop(LoopError::Divergence { .. })
        | PipelineError::Train(_)
        | PipelineError::Metrics(_) => failure(context, err),
        _ => usage(context, err),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(path.display(), e))?;
            Config::from_toml_str(&text).map_err(|e| usage(path.display(), e))?
        }
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        config.nn.seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let config = load_config(&cli)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Dataset => cmd_dataset(&config, out),
        Command::Train { dataset } => {
            let dataset = dataset.clone().unwrap_or_else(|| out.join(DATASET_FILE));
            cmd_train(&config, &dataset, out)
        }
        Command::Simulate { direction, model } => {
            let choice = direction.unwrap_or(config.control_loop.direction);
            cmd_simulate(&config, choice, model, out)
        }
        Command::Evaluate { traces } => cmd_evaluate(&config, traces),
        Command::Gradcheck {
            weights,
            tol,
            draws,
        } => cmd_gradcheck(&config, weights.as_deref(), *tol, *draws),
    }
}

fn ensure_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| failure(out.display(), e))
}

fn digest_comment(config: &Config) -> String {
    format!("config-digest: {}", config.digest())
}

fn cmd_dataset(config: &Config, out: &Path) -> Result<ExitCode, CliError> {
    let records = pipeline::generate_dataset(config).map_err(|e| pipeline_error("dataset", e))?;
    ensure_dir(out)?;
    let path = out.join(DATASET_FILE);
    export_dataset(&records, &path, Some(&digest_comment(config)))
        .map_err(|e| failure(path.display(), e))?;
    let last = records.last().expect("dataset always has the t = 0 sample");
    println!(
        "wrote {} rows to {} (final e = {:.3e} m, theta = {:.4})",
        records.len(),
        path.display(),
        last.e,
        last.theta
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(config: &Config, dataset: &Path, out: &Path) -> Result<ExitCode, CliError> {
    let records = read_dataset(dataset).map_err(|e| usage(dataset.display(), e))?;
    let outcome =
        pipeline::train_controller(config, &records).map_err(|e| pipeline_error("train", e))?;
    ensure_dir(out)?;
    let comment = digest_comment(config);

    let weights = out.join(WEIGHTS_FILE);
    save_weights(outcome.controller.network(), &weights, Some(&comment))
        .map_err(|e| failure(weights.display(), e))?;
    let normalizer = out.join(NORMALIZER_FILE);
    save_normalizer(outcome.controller.normalizer(), &normalizer, Some(&comment))
        .map_err(|e| failure(normalizer.display(), e))?;
    let report = pipeline::format_train_report(&outcome, &config.digest());
    let report_path = out.join(REPORT_FILE);
    fs::write(&report_path, &report).map_err(|e| failure(report_path.display(), e))?;

    for line in report.lines().filter(|l| !l.starts_with('#')) {
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

fn load_controller(
    config: &Config,
    files: &ModelFiles,
    out: &Path,
) -> Result<NnController, CliError> {
    let weights = files
        .weights
        .clone()
        .unwrap_or_else(|| out.join(WEIGHTS_FILE));
    let normalizer = files
        .normalizer
        .clone()
        .unwrap_or_else(|| out.join(NORMALIZER_FILE));
    let net = load_weights(&weights, Activation::Sigmoid, config.nn.output_activation)
        .map_err(|e| usage(weights.display(), e))?;
    let norm = load_normalizer(&normalizer).map_err(|e| usage(normalizer.display(), e))?;
    NnController::new(net, norm).map_err(|e| usage("controller", e))
}

fn cmd_simulate(
    config: &Config,
    choice: DirectionChoice,
    files: &ModelFiles,
    out: &Path,
) -> Result<ExitCode, CliError> {
    let controller = load_controller(config, files, out)?;
    let traces = pipeline::simulate(config, &controller, choice)
        .map_err(|e| pipeline_error("simulate", e))?;
    ensure_dir(out)?;
    for (direction, trace) in &traces {
        let path = out.join(format!("trace_{direction}.csv"));
        write_trace(trace, &path).map_err(|e| failure(path.display(), e))?;
        let plot = out.join(format!("plot_{direction}.csv"));
        write_plot_data(trace, &plot, PLOT_STRIDE).map_err(|e| failure(plot.display(), e))?;
        println!("wrote {} and {}", path.display(), plot.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn metrics_row(name: &str, report: &MetricsReport) -> String {
    let settling = report
        .settling_time
        .map_or_else(|| "inf".to_string(), |t| t.to_string());
    format!(
        "{name},{},{settling},{}",
        report.rmse, report.steady_state_error
    )
}

fn cmd_evaluate(config: &Config, paths: &[PathBuf]) -> Result<ExitCode, CliError> {
    let mut rows = Vec::with_capacity(paths.len());
    let mut reports = Vec::with_capacity(paths.len());
    for path in paths {
        let trace = read_trace(path).map_err(|e| usage(path.display(), e))?;
        let report =
            pipeline::evaluate_trace(config, &trace).map_err(|e| failure(path.display(), e))?;
        let name = match trace.direction {
            Some(d) => d.to_string(),
            None => path.file_stem().map_or_else(
                || path.display().to_string(),
                |s| s.to_string_lossy().into_owned(),
            ),
        };
        rows.push(metrics_row(&name, &report));
        reports.push(report);
    }

    println!("direction,rmse_m,settling_s,ss_error_m");
    for row in &rows {
        println!("{row}");
    }
    if reports.len() > 1 {
        if let Some(mean) = average(&reports) {
            println!("{}", metrics_row("average", &mean));
        }
    }

    let unsettled = paths
        .iter()
        .zip(&reports)
        .filter(|(_, r)| !r.settled())
        .map(|(p, _)| p.display().to_string())
        .collect::<Vec<_>>();
    if unsettled.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(CliError::Failure(format!(
            "not settled: {}",
            unsettled.join(", ")
        )))
    }
}

fn cmd_gradcheck(
    config: &Config,
    weights: Option<&Path>,
    tol: f64,
    draws: usize,
) -> Result<ExitCode, CliError> {
    let net = match weights {
        Some(path) => match load_weights(path, Activation::Sigmoid, config.nn.output_activation) {
            Ok(net) => net,
            // a weights file that holds NaN or inf is a failed check, not a usage error
            Err(err @ WeightsError::NonFinite { .. }) => {
                println!("gradcheck: FAIL ({err})");
                return Ok(ExitCode::from(1));
            }
            Err(err) => return Err(usage(path.display(), err)),
        },
        None => pipeline::initial_network(config).map_err(|e| usage("network", e))?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.nn.seed);
    let inputs: Vec<Vec<f64>> = (0..draws.max(1))
        .map(|_| {
            (0..net.input_dim())
                .map(|_| rng.gen_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    let check = gradcheck(&net, &inputs, &GRADCHECK_STEPS).map_err(|e| failure("gradcheck", e))?;
    let verdict = if check.passes(tol) { "PASS" } else { "FAIL" };
    println!(
        "gradcheck: {verdict} (max relative error {:e} over {} entries, tol {:e})",
        check.max_rel_error, check.entries, tol
    );
    Ok(if check.passes(tol) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
