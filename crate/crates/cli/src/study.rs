//! Simulation studies: synthetic networks from known groups, fitted and
//! scored against the truth.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use anyhow::Context;
use hmpsbm::embed::{initial_state, GlobalStart, InitConfig};
use hmpsbm::eval::{align_to_truth, extract_assignments, nmi};
use hmpsbm::model::{group_features, sample_network, split_labels, stream_rng, GroundTruth, TruthSpec};
use hmpsbm::vb::{fit, FitConfig};
use hmpsbm::{CovariateMatrix, Hyperparameters, MultiplexNetwork, TruncationConfig};
use ndarray::{array, Array2};
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Stream purpose for deriving per-run seeds from the base seed.
const STREAM_STUDY: u64 = 16;

/// Connection probabilities shared by every study.
pub fn study_rho() -> Array2<f64> {
    array![[0.8, 0.5, 0.2], [0.4, 0.7, 0.05], [0.2, 0.01, 0.6]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyId {
    S41,
    S42,
    S43,
    S44,
}

impl fmt::Display for StudyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyId::S41 => "s41",
            StudyId::S42 => "s42",
            StudyId::S43 => "s43",
            StudyId::S44 => "s44",
        })
    }
}

impl FromStr for StudyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "s41" => Ok(StudyId::S41),
            "s42" => Ok(StudyId::S42),
            "s43" => Ok(StudyId::S43),
            "s44" => Ok(StudyId::S44),
            other => Err(format!("unknown study `{other}` (expected s41, s42, s43 or s44)")),
        }
    }
}

/// One simulation setting: how the data are generated and how the model is fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Short name used in the result tables, e.g. `alpha=0.15,start=uniform`.
    pub label: String,
    pub nodes: usize,
    pub layers: usize,
    /// Relative global group sizes.
    pub ratio: Vec<usize>,
    /// Rows are distributions over layer groups, one per global group.
    pub gamma: Array2<f64>,
    /// Feature mean per global group; an intercept column is appended.
    pub means: Vec<Vec<f64>>,
    pub truncation: TruncationConfig,
    pub iterations: usize,
    pub global_start: GlobalStart,
}

fn constant_mean(v: f64) -> Vec<f64> {
    vec![v; 3]
}

/// Two global groups, 3:2 split, run once per truncation pair.
pub fn s41_grid() -> Vec<Scenario> {
    [(2, 3), (5, 5)]
        .into_iter()
        .map(|(m_w, m_z)| Scenario {
            label: format!("mw={m_w},mz={m_z}"),
            nodes: 250,
            layers: 3,
            ratio: vec![3, 2],
            gamma: array![[0.8, 0.1, 0.1], [0.0, 0.5, 0.5]],
            means: vec![constant_mean(1.5), constant_mean(-1.5)],
            truncation: TruncationConfig { m_w, m_z },
            iterations: 10,
            global_start: GlobalStart::Informed,
        })
        .collect()
}

pub const S42_ALPHAS: [f64; 6] = [2.5, 2.0, 1.5, 1.0, 0.5, 0.0];

/// Three global groups with disjoint layer behaviour and shrinking feature separation.
pub fn s42_grid() -> Vec<Scenario> {
    S42_ALPHAS
        .iter()
        .map(|&alpha| Scenario {
            label: format!("alpha={alpha}"),
            nodes: 500,
            layers: 3,
            ratio: vec![2, 2, 1],
            gamma: Array2::eye(3),
            means: vec![constant_mean(alpha), constant_mean(0.0), constant_mean(-alpha)],
            truncation: TruncationConfig { m_w: 3, m_z: 3 },
            iterations: 10,
            global_start: GlobalStart::Informed,
        })
        .collect()
}

pub const S43_ALPHAS: [f64; 4] = [0.05, 0.15, 0.25, 0.33];

fn blurred_gamma(alpha: f64) -> Array2<f64> {
    Array2::from_shape_fn((3, 3), |(k, s)| if k == s { 1.0 - 2.0 * alpha } else { alpha })
}

fn separated_means() -> Vec<Vec<f64>> {
    vec![constant_mean(5.0), constant_mean(0.0), constant_mean(-5.0)]
}

/// Well-separated features, increasingly similar layer behaviour; every
/// setting is run from both starting points.
pub fn s43_grid() -> Vec<Scenario> {
    let mut grid = Vec::new();
    for start in [GlobalStart::Informed, GlobalStart::Uniform] {
        for &alpha in &S43_ALPHAS {
            let start_name = match start {
                GlobalStart::Informed => "informed",
                GlobalStart::Uniform => "uniform",
            };
            grid.push(Scenario {
                label: format!("alpha={alpha},start={start_name}"),
                nodes: 500,
                layers: 3,
                ratio: vec![2, 2, 1],
                gamma: blurred_gamma(alpha),
                means: separated_means(),
                truncation: TruncationConfig { m_w: 3, m_z: 3 },
                iterations: 25,
                global_start: start,
            });
        }
    }
    grid
}

pub const S44_NODES: [usize; 2] = [100, 250];
pub const S44_LAYERS: [usize; 4] = [2, 5, 10, 20];

/// Network size and layer count grid at `alpha = 0.15`.
pub fn s44_grid() -> Vec<Scenario> {
    let mut grid = Vec::new();
    for &nodes in &S44_NODES {
        for &layers in &S44_LAYERS {
            grid.push(Scenario {
                label: format!("n={nodes},l={layers}"),
                nodes,
                layers,
                ratio: vec![2, 2, 1],
                gamma: blurred_gamma(0.15),
                means: separated_means(),
                truncation: TruncationConfig { m_w: 3, m_z: 3 },
                iterations: 10,
                global_start: GlobalStart::Informed,
            });
        }
    }
    grid
}

pub fn default_grid(id: StudyId) -> Vec<Scenario> {
    match id {
        StudyId::S41 => s41_grid(),
        StudyId::S42 => s42_grid(),
        StudyId::S43 => s43_grid(),
        StudyId::S44 => s44_grid(),
    }
}

/// A study: grid × repetitions, with per-run seeds derived from `base_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub id: StudyId,
    pub grid: Vec<Scenario>,
    pub repetitions: usize,
    pub base_seed: u64,
}

impl StudySpec {
    pub fn new(id: StudyId, repetitions: usize, base_seed: u64) -> Self {
        Self { id, grid: default_grid(id), repetitions, base_seed }
    }

    /// Replaces every scenario's sweep cap.
    pub fn with_iterations(mut self, iterations: usize) -> Self {
        for s in &mut self.grid {
            s.iterations = iterations;
        }
        self
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.repetitions >= 1, "a study needs at least one repetition");
        anyhow::ensure!(!self.grid.is_empty(), "the study grid is empty");
        Ok(())
    }

    pub fn run_seed(&self, point: usize, rep: usize) -> u64 {
        stream_rng(self.base_seed, STREAM_STUDY, point, rep).next_u64()
    }
}

/// One fitted replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub study: String,
    pub point: String,
    pub rep: usize,
    pub seed: u64,
    pub nmi_global: f64,
    /// Mean over layers.
    pub nmi_layer: f64,
    pub occupied_global: usize,
    pub occupied_layer: usize,
    pub elbo: f64,
    pub seconds: f64,
    /// Set when the run failed; the scores are then NaN.
    pub error: Option<String>,
}

/// A simulated data set and its truth.
pub struct Simulated {
    pub network: MultiplexNetwork,
    pub covariates: CovariateMatrix<f64>,
    pub truth: GroundTruth,
}

pub fn simulate(scenario: &Scenario, seed: u64) -> hmpsbm::Result<Simulated> {
    let w = split_labels(scenario.nodes, &scenario.ratio)?;
    let x = group_features(&w, &scenario.means, seed)?;
    let spec = TruthSpec::Explicit { w, gamma: scenario.gamma.clone(), rho: study_rho() };
    let (network, truth) = sample_network(scenario.nodes, scenario.layers, &spec, seed)?;
    let covariates = CovariateMatrix::new(x, false)?.with_intercept();
    Ok(Simulated { network, covariates, truth })
}

/// Scores of one fitted replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct RunScores {
    pub nmi_global: f64,
    pub nmi_layer: f64,
    pub occupied_global: usize,
    pub occupied_layer: usize,
    pub elbo: f64,
}

/// Initializes and fits one simulated data set, then scores it.
pub fn fit_and_score(data: &Simulated, scenario: &Scenario, seed: u64) -> hmpsbm::Result<RunScores> {
    let hyper = Hyperparameters::default_for(data.covariates.num_features());
    let init_config = InitConfig { global_start: scenario.global_start, ..InitConfig::default() };
    let (init, _) = initial_state(&data.network, &data.covariates, &hyper, scenario.truncation, &init_config)?;
    let mut config = FitConfig::new(scenario.truncation);
    config.max_iterations = scenario.iterations;
    config.seed = seed;
    let (state, report) = fit(&data.network, &data.covariates, &hyper, &config, init)?;
    let result = align_to_truth(&extract_assignments(&state), &data.truth)?;
    let nmi_global = nmi(&result.global_labels, &data.truth.global_groups)?;
    let mut layer_total = 0.0;
    for (inferred, truth) in result.layer_labels.outer_iter().zip(data.truth.layer_groups.outer_iter()) {
        layer_total += nmi(inferred.as_slice().unwrap(), truth.as_slice().unwrap())?;
    }
    Ok(RunScores {
        nmi_global,
        nmi_layer: layer_total / data.network.num_layers() as f64,
        occupied_global: result.occupied_global,
        occupied_layer: result.occupied_layer,
        elbo: *report.elbo_trace.last().unwrap(),
    })
}

fn run_one(spec: &StudySpec, point: usize, rep: usize) -> ResultRecord {
    let scenario = &spec.grid[point];
    let seed = spec.run_seed(point, rep);
    let started = Instant::now();
    let outcome = simulate(scenario, seed).and_then(|data| fit_and_score(&data, scenario, seed));
    let seconds = started.elapsed().as_secs_f64();
    let mut record = ResultRecord {
        study: spec.id.to_string(),
        point: scenario.label.clone(),
        rep,
        seed,
        nmi_global: f64::NAN,
        nmi_layer: f64::NAN,
        occupied_global: 0,
        occupied_layer: 0,
        elbo: f64::NAN,
        seconds,
        error: None,
    };
    match outcome {
        Ok(s) => {
            record.nmi_global = s.nmi_global;
            record.nmi_layer = s.nmi_layer;
            record.occupied_global = s.occupied_global;
            record.occupied_layer = s.occupied_layer;
            record.elbo = s.elbo;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Runs every grid point and repetition. Records come back in grid-major,
/// repetition-minor order whatever the thread count.
pub fn run_study(spec: &StudySpec) -> anyhow::Result<Vec<ResultRecord>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> =
        (0..spec.grid.len()).flat_map(|p| (0..spec.repetitions).map(move |r| (p, r))).collect();
    Ok(jobs.par_iter().map(|&(p, r)| run_one(spec, p, r)).collect())
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median, population standard deviation and central 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub std: f64,
    pub q025: f64,
    pub q975: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Summary { median: quantile(&v, 0.5), std: var.sqrt(), q025: quantile(&v, 0.025), q975: quantile(&v, 0.975) }
    }
}

/// Summary row per grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub study: String,
    pub point: String,
    pub runs: usize,
    pub failures: usize,
    pub global: Summary,
    pub layer: Summary,
    /// Most frequent occupied group counts (smallest on ties).
    pub modal_occupied_global: usize,
    pub modal_occupied_layer: usize,
}

fn mode(values: impl Iterator<Item = usize>) -> usize {
    let mut counts = std::collections::BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    counts.into_iter().find(|&(_, c)| c == top).map_or(0, |(v, _)| v)
}

/// Summaries in order of first appearance of each grid point.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut points: Vec<(&str, &str)> = Vec::new();
    for r in records {
        if !points.contains(&(r.study.as_str(), r.point.as_str())) {
            points.push((&r.study, &r.point));
        }
    }
    points
        .into_iter()
        .map(|(study, point)| {
            let all: Vec<&ResultRecord> = records.iter().filter(|r| r.study == study && r.point == point).collect();
            let ok: Vec<&&ResultRecord> = all.iter().filter(|r| r.error.is_none()).collect();
            let global: Vec<f64> = ok.iter().map(|r| r.nmi_global).collect();
            let layer: Vec<f64> = ok.iter().map(|r| r.nmi_layer).collect();
            SummaryRow {
                study: study.to_string(),
                point: point.to_string(),
                runs: all.len(),
                failures: all.len() - ok.len(),
                global: Summary::of(&global),
                layer: Summary::of(&layer),
                modal_occupied_global: mode(ok.iter().map(|r| r.occupied_global)),
                modal_occupied_layer: mode(ok.iter().map(|r| r.occupied_layer)),
            }
        })
        .collect()
}

pub fn write_records(records: &[ResultRecord], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> anyhow::Result<Vec<ResultRecord>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let records = reader.deserialize().collect::<Result<Vec<ResultRecord>, _>>()?;
    Ok(records)
}

/// One row per grid point with the table columns flattened.
pub fn write_summary(rows: &[SummaryRow], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record([
        "study",
        "point",
        "runs",
        "failures",
        "global_median",
        "global_std",
        "global_q025",
        "global_q975",
        "layer_median",
        "layer_std",
        "layer_q025",
        "layer_q975",
        "modal_occupied_global",
        "modal_occupied_layer",
    ])?;
    for r in rows {
        let mut cells = vec![r.study.clone(), r.point.clone(), r.runs.to_string(), r.failures.to_string()];
        for s in [r.global, r.layer] {
            cells.extend([s.median, s.std, s.q025, s.q975].map(|v| format!("{v:?}")));
        }
        cells.push(r.modal_occupied_global.to_string());
        cells.push(r.modal_occupied_layer.to_string());
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format for box plots: `study,point,rep,level,nmi`.
pub fn write_nmi_long(records: &[ResultRecord], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(["study", "point", "rep", "level", "nmi"])?;
    for r in records.iter().filter(|r| r.error.is_none()) {
        for (level, v) in [("global", r.nmi_global), ("layer", r.nmi_layer)] {
            w.write_record([r.study.clone(), r.point.clone(), r.rep.to_string(), level.to_string(), format!("{v:?}")])?;
        }
    }
    w.flush()?;
    Ok(())
}
