use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use dynrecip::{Hyperparams, RecLag, Variant};

#[derive(Debug, Parser)]
#[command(name = "dynrecip", version, about = "Fit, sample and evaluate dynamic networks with communities and reciprocity")]
pub struct Cli {
    /// Worker threads (0 = one per core)
    #[arg(long, global = true, env = "DYNRECIP_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// JSON document whose keys override the subcommand flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a temporal edge list
    Fit(FitArgs),
    /// Sample a planted-community benchmark network
    Generate(GenerateArgs),
    /// Forecast AUC of one snapshot from the ones before it
    Predict(PredictArgs),
    /// Held-out link prediction by k-fold cross-validation
    Cv(CvArgs),
    /// Compare real reciprocity with networks resampled from the fit
    Reciprocity(ReciprocityArgs),
    /// Forecast AUC of the full model against the eta = 0 ablation on sampled benchmarks
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InputOpts {
    /// Edge list with records `t source target [weight]`
    #[arg(long)]
    pub input: PathBuf,

    /// Keep edge weights of the first snapshot instead of collapsing them to 1
    #[arg(long)]
    #[serde(default)]
    pub weighted: bool,

    /// Skip self-loop removal, degree filter and giant-component restriction
    #[arg(long)]
    #[serde(default)]
    pub no_preprocess: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelOpts {
    /// Number of communities
    #[arg(long = "K", default_value_t = 3)]
    pub k: usize,

    #[arg(long, default_value = "w-dyn")]
    pub variant: Variant,

    /// Reciprocal term read from the previous snapshot (1) or the same one (0)
    #[arg(long, default_value_t = 1)]
    pub rec_lag: u8,

    /// Fix eta = 0 (community-only ablation)
    #[arg(long)]
    #[serde(default)]
    pub eta_zero: bool,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 5)]
    pub restarts: usize,

    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,

    /// Relative objective change regarded as converged
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,

    /// Consecutive converged checks needed to stop
    #[arg(long, default_value_t = 10)]
    pub decision_window: usize,

    /// Gamma prior shape on memberships
    #[arg(long, default_value_t = 1.5)]
    pub a: f64,

    /// Gamma prior rate on memberships
    #[arg(long, default_value_t = 10.0)]
    pub b: f64,
}

impl ModelOpts {
    pub fn hyper(&self) -> Result<Hyperparams> {
        let h = Hyperparams {
            a: self.a,
            b: self.b,
            tolerance: self.tol,
            max_iter: self.max_iter,
            decision_window: self.decision_window,
            n_restarts: self.restarts,
            seed: self.seed,
            eta_zero: self.eta_zero,
            ..Hyperparams::new(self.k)
        };
        h.validate()?;
        Ok(h)
    }

    pub fn rec_lag(&self) -> Result<RecLag> {
        Ok(RecLag::from_lag(self.rec_lag)?)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputOpts,

    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,

    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GeneratorOpts {
    /// Number of nodes
    #[arg(long = "N", default_value_t = 500)]
    pub n: usize,

    /// Number of planted communities
    #[arg(long = "K", default_value_t = 3)]
    pub k: usize,

    /// Target mean out-degree of every snapshot's rates
    #[arg(long, default_value_t = 5.0)]
    pub avg_degree: f64,

    #[arg(long, default_value_t = 0.5)]
    pub eta: f64,

    #[arg(long, default_value_t = 0.2)]
    pub beta: f64,

    /// Number of transitions after the initial snapshot
    #[arg(long = "T", default_value_t = 6)]
    pub t: usize,

    /// Ratio between large and small affinity entries
    #[arg(long, default_value_t = 10.0)]
    pub ratio: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GeneratorOpts {
    pub fn config(&self) -> dynrecip::generator::GeneratorConfig {
        dynrecip::generator::GeneratorConfig {
            n_nodes: self.n,
            k: self.k,
            avg_degree: self.avg_degree,
            eta: self.eta,
            beta: self.beta,
            n_steps: self.t,
            affinity_ratio: self.ratio,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub generator: GeneratorOpts,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputOpts,

    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,

    /// Snapshot to forecast (>= 1)
    #[arg(long = "t")]
    pub t: usize,

    /// Fitted parameters to score with; without it the model is fitted on snapshots before `t`
    #[arg(long)]
    pub params: Option<PathBuf>,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputOpts,

    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,

    /// Community counts to compare (defaults to --K)
    #[arg(long = "K-values", value_delimiter = ',')]
    #[serde(default)]
    pub k_values: Vec<usize>,

    #[arg(long, default_value_t = 5)]
    pub folds: usize,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReciprocityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputOpts,

    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,

    /// Number of resampled networks
    #[arg(long, default_value_t = 5)]
    pub samples: usize,

    /// Fitted parameters to resample from; without it the model is fitted first
    #[arg(long)]
    pub params: Option<PathBuf>,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub generator: GeneratorOpts,

    /// Number of communities fitted (planted count by default)
    #[arg(long = "fit-K")]
    pub fit_k: Option<usize>,

    #[arg(long, default_value = "w-dyn")]
    pub variant: Variant,

    #[arg(long, default_value_t = 5)]
    pub restarts: usize,

    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,

    /// Number of sampled networks
    #[arg(long, default_value_t = 20)]
    pub samples: usize,

    /// Snapshots to forecast
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    pub steps: Vec<usize>,

    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Overlays the keys of the JSON document at `path` on `args`.
pub fn apply_config<T: Serialize + DeserializeOwned>(args: T, path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let overrides: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let serde_json::Value::Object(overrides) = overrides else {
        bail!("config {} must be a JSON object", path.display());
    };
    let mut merged = serde_json::to_value(args)?;
    let target = merged.as_object_mut().expect("arguments serialize to an object");
    for (key, value) in overrides {
        if !target.contains_key(&key) {
            bail!("unknown config key `{key}`");
        }
        target.insert(key, value);
    }
    serde_json::from_value(merged).context("config values do not fit the flags")
}
