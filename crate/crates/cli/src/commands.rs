//! Command-line surface. Input and configuration problems exit with 1,
//! failures while computing or writing results exit with 2.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use hmpsbm::embed::initial_state;
use hmpsbm::eval::{extract_assignments, nmi_with};
use hmpsbm::vb::fit;
use hmpsbm::{CovariateMatrix, MultiplexNetwork, TruncationConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::io::{self, CovariateOptions, Labels};
use crate::study::{self, run_study, summarize, StudyId, StudySpec};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "HMPSBM_THREADS";

#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, configuration or input files.
    Validation(anyhow::Error),
    /// Anything that goes wrong once the inputs have been accepted.
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(e) => write!(f, "invalid input: {e:#}"),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

trait Classify<T> {
    fn invalid(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn invalid(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Validation(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "hmpsbm", version, about = "Global and layer-level groups in multiplex networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a network from one of the study settings.
    Generate(GenerateArgs),
    /// Initialize and fit the model to a network.
    Fit(FitArgs),
    /// Compare fitted labels with known labels.
    Evaluate(EvaluateArgs),
    /// Run a simulation study.
    Study(StudyArgs),
    /// Print or write the default configuration file.
    DefaultConfig(DefaultConfigArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value = "s41")]
    pub study: StudyId,
    /// Grid point of the study.
    #[arg(long, default_value_t = 0)]
    pub point: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Layered edge list.
    #[arg(long, required_unless_present = "dense_layer", conflicts_with = "dense_layer")]
    pub network: Option<PathBuf>,
    /// Dense 0/1 CSV for one layer; repeat in layer order.
    #[arg(long)]
    pub dense_layer: Vec<PathBuf>,
    /// Covariate CSV with a header row; without it the model uses an intercept only.
    #[arg(long)]
    pub covariates: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mw: Option<usize>,
    #[arg(long)]
    pub mz: Option<usize>,
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub log_covariates: bool,
    #[arg(long)]
    pub zscore: bool,
    #[arg(long)]
    pub intercept: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Labels written by `fit`.
    #[arg(long)]
    pub assignments: PathBuf,
    /// Reference labels in the same format.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write the scores here as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub study: StudyId,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides every grid point's sweep cap.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DefaultConfigArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => run_fit(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Study(a) => study_command(a),
        Command::DefaultConfig(a) => match a.out {
            Some(path) => fs::write(&path, RunConfig::default_file())
                .with_context(|| format!("cannot write {}", path.display()))
                .runtime(),
            None => {
                print!("{}", RunConfig::default_file());
                Ok(())
            }
        },
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().runtime()
}

fn create_dir(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display())).runtime()
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).runtime()?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display())).runtime()
}

fn file_digest(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Serialize)]
struct InputFile {
    role: String,
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config_sha256: String,
    config: &'a C,
    inputs: Vec<InputFile>,
}

fn manifest<'a, C: Serialize>(command: &'static str, seed: u64, digest: String, config: &'a C) -> Manifest<'a, C> {
    Manifest {
        tool: "hmpsbm",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        config_sha256: digest,
        config,
        inputs: Vec::new(),
    }
}

fn generate(a: GenerateArgs) -> Result<(), Failure> {
    let grid = study::default_grid(a.study);
    let mut scenario = grid
        .get(a.point)
        .cloned()
        .ok_or_else(|| anyhow!("study {} has {} grid points, asked for {}", a.study, grid.len(), a.point))
        .invalid()?;
    if let Some(n) = a.nodes {
        scenario.nodes = n;
    }
    if let Some(l) = a.layers {
        scenario.layers = l;
    }
    let data = study::simulate(&scenario, a.seed).invalid()?;
    create_dir(&a.out)?;
    io::write_network(&data.network, &a.out.join("network.txt")).runtime()?;
    let truth = Labels { global: data.truth.global_groups.clone(), layer: data.truth.layer_groups.clone() };
    io::write_labels(&truth, &a.out.join("truth.csv")).runtime()?;
    // the intercept is left for `fit --intercept` to add back
    let values = data.covariates.values();
    let p = values.ncols() - 1;
    let names: Vec<String> = (0..p).map(|c| format!("x{c}")).collect();
    let features = values.slice(ndarray::s![.., ..p]).to_owned();
    io::write_covariates(&names, &features, &a.out.join("covariates.csv")).runtime()?;
    let text = serde_json::to_string(&scenario).runtime()?;
    let digest = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    let mut m = manifest("generate", a.seed, digest, &scenario);
    m.inputs.clear();
    write_json(&m, &a.out.join("manifest.json"))?;
    println!(
        "wrote {} nodes, {} layers, {} edges to {}",
        data.network.num_nodes(),
        data.network.num_layers(),
        data.network.total_edges(),
        a.out.display()
    );
    Ok(())
}

/// Network, covariates and configuration of a fit, after overrides.
struct FitInputs {
    network: MultiplexNetwork,
    covariates: CovariateMatrix<f64>,
    config: RunConfig,
    inputs: Vec<InputFile>,
    notes: Vec<String>,
}

fn load_fit_inputs(a: &FitArgs) -> anyhow::Result<FitInputs> {
    let mut config = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(m) = a.mw {
        config.truncation.m_w = m;
    }
    if let Some(m) = a.mz {
        config.truncation.m_z = m;
    }
    if let Some(t) = a.threads {
        config.threads = t;
    }
    config.covariates.log |= a.log_covariates;
    config.covariates.zscore |= a.zscore;
    config.covariates.intercept |= a.intercept;
    config.validate()?;

    let mut inputs = Vec::new();
    let mut record = |role: &str, path: &Path| -> anyhow::Result<()> {
        inputs.push(InputFile { role: role.into(), path: path.display().to_string(), sha256: file_digest(path)? });
        Ok(())
    };
    let network = match &a.network {
        Some(path) => {
            record("network", path)?;
            io::read_network(path)?
        }
        None => {
            for path in &a.dense_layer {
                record("dense_layer", path)?;
            }
            io::read_dense_layers(&a.dense_layer)?
        }
    };
    let mut notes = Vec::new();
    let covariates = match &a.covariates {
        Some(path) => {
            record("covariates", path)?;
            let c = io::read_covariates(path, config.covariates)?;
            notes.extend(c.transformations);
            c.matrix
        }
        None => {
            anyhow::ensure!(
                config.covariates == CovariateOptions { intercept: config.covariates.intercept, ..Default::default() },
                "covariate transformations were requested but no covariate file was given"
            );
            notes.push("no covariates: intercept only".into());
            CovariateMatrix::intercept_only(network.num_nodes())
        }
    };
    covariates.check_nodes(network.num_nodes())?;
    config.hyperparameters.resolve(covariates.num_features())?;
    Ok(FitInputs { network, covariates, config, inputs, notes })
}

/// Everything a fit produces except wall-clock times, which go to
/// `timing.csv` so that this file is reproducible byte for byte.
#[derive(Debug, Serialize)]
struct Posterior<'a> {
    truncation: TruncationConfig,
    iterations: usize,
    converged: bool,
    nonfinite_gradient: bool,
    occupied_global: usize,
    occupied_layer: usize,
    elbo_trace: &'a [f64],
    init_warnings: &'a [String],
    state: &'a hmpsbm::VariationalState64,
}

fn run_fit(a: FitArgs) -> Result<(), Failure> {
    let inputs = load_fit_inputs(&a).invalid()?;
    for note in &inputs.notes {
        eprintln!("covariates: {note}");
    }
    let config = &inputs.config;
    let hyper = config.hyperparameters.resolve(inputs.covariates.num_features()).invalid()?;
    let workers = pool(config.threads)?;
    let (state, report, warnings) = workers.install(|| -> anyhow::Result<_> {
        let (init, init_report) =
            initial_state(&inputs.network, &inputs.covariates, &hyper, config.truncation, &config.init)?;
        let (state, report) = fit(&inputs.network, &inputs.covariates, &hyper, &config.fit_config(), init)?;
        Ok((state, report, init_report.warnings))
    })
    .runtime()?;
    for w in &warnings {
        eprintln!("initialization: {w}");
    }

    create_dir(&a.out)?;
    let result = extract_assignments(&state);
    let labels = Labels { global: result.global_labels.clone(), layer: result.layer_labels.clone() };
    io::write_labels(&labels, &a.out.join("assignments.csv")).runtime()?;
    io::write_elbo_trace(&report.elbo_trace, &a.out.join("elbo_trace.csv")).runtime()?;
    io::write_timing(&report.sweep_seconds, &a.out.join("timing.csv")).runtime()?;
    let posterior = Posterior {
        truncation: config.truncation,
        iterations: report.iterations,
        converged: report.converged,
        nonfinite_gradient: report.nonfinite_gradient,
        occupied_global: report.occupied_global,
        occupied_layer: report.occupied_layer,
        elbo_trace: &report.elbo_trace,
        init_warnings: &warnings,
        state: &state,
    };
    write_json(&posterior, &a.out.join("posterior.json"))?;
    fs::write(a.out.join("config.toml"), config.to_toml()).context("cannot write config.toml").runtime()?;
    let mut m = manifest("fit", config.seed, config.digest(), config);
    m.inputs = inputs.inputs;
    write_json(&m, &a.out.join("manifest.json"))?;

    println!(
        "{} sweeps ({}), ELBO {:.6}, occupied groups: {} global, {} layer",
        report.iterations,
        if report.converged { "converged" } else { "iteration cap reached" },
        report.elbo_trace.last().copied().unwrap_or(f64::NAN),
        report.occupied_global,
        report.occupied_layer
    );
    if report.nonfinite_gradient {
        eprintln!("warning: non-finite gradients were met and skipped during the fit");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Scores {
    pub nmi_global: f64,
    pub nmi_layer_mean: f64,
    pub nmi_layer: Vec<f64>,
}

pub fn score(fitted: &Labels, truth: &Labels, norm: hmpsbm::eval::NmiNormalization) -> anyhow::Result<Scores> {
    anyhow::ensure!(
        fitted.layer.dim() == truth.layer.dim(),
        "label files disagree: {:?} versus {:?} (layers × nodes)",
        fitted.layer.dim(),
        truth.layer.dim()
    );
    let nmi_global = nmi_with(&fitted.global, &truth.global, norm)?;
    let nmi_layer = fitted
        .layer
        .outer_iter()
        .zip(truth.layer.outer_iter())
        .map(|(a, b)| nmi_with(&a.to_vec(), &b.to_vec(), norm))
        .collect::<hmpsbm::Result<Vec<f64>>>()?;
    let nmi_layer_mean = nmi_layer.iter().sum::<f64>() / nmi_layer.len() as f64;
    Ok(Scores { nmi_global, nmi_layer_mean, nmi_layer })
}

fn evaluate(a: EvaluateArgs) -> Result<(), Failure> {
    let config = match &a.config {
        Some(path) => RunConfig::load(path).invalid()?,
        None => RunConfig::default(),
    };
    let fitted = io::read_labels(&a.assignments).invalid()?;
    let truth = io::read_labels(&a.truth).invalid()?;
    let scores = score(&fitted, &truth, config.evaluation.nmi).invalid()?;
    println!("{}", serde_json::to_string_pretty(&scores).runtime()?);
    if let Some(path) = &a.out {
        write_json(&scores, path)?;
    }
    Ok(())
}

fn study_command(a: StudyArgs) -> Result<(), Failure> {
    let mut spec = StudySpec::new(a.study, a.reps, a.seed);
    if let Some(it) = a.iterations {
        spec = spec.with_iterations(it);
    }
    spec.validate().invalid()?;
    let workers = pool(a.threads.unwrap_or(0))?;
    let records = workers.install(|| run_study(&spec)).runtime()?;
    create_dir(&a.out)?;
    study::write_records(&records, &a.out.join("records.csv")).runtime()?;
    let summary = summarize(&records);
    study::write_summary(&summary, &a.out.join("summary.csv")).runtime()?;
    study::write_nmi_long(&records, &a.out.join("nmi_long.csv")).runtime()?;
    write_json(&spec, &a.out.join("study.json"))?;
    for row in &summary {
        println!(
            "{:<28} global median {:.3} std {:.3} 2.5% {:.3} 97.5% {:.3} | layer median {:.3} std {:.3} | failures {}",
            row.point,
            row.global.median,
            row.global.std,
            row.global.q025,
            row.global.q975,
            row.layer.median,
            row.layer.std,
            row.failures
        );
    }
    Ok(())
}
