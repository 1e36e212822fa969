use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;

use dynrecip::em::{self, FitWarnings, RestartSummary};
use dynrecip::eval::{self, AucSummary, CvReport, ReportRow};
use dynrecip::generator;
use dynrecip::{Hyperparams, ModelParams, Variant};

use crate::options::{apply_config, BenchmarkArgs, CvArgs, FitArgs, GenerateArgs, PredictArgs, ReciprocityArgs};
use crate::output::{ensure_dir, load_input, write_json, write_network, write_rows, write_trace};
use crate::{EXIT_NOT_CONVERGED, EXIT_OK};

#[derive(Serialize)]
struct FitSummary<'a> {
    variant: Variant,
    k: usize,
    n_nodes: usize,
    n_snapshots: usize,
    converged: bool,
    n_iterations: usize,
    final_objective: f64,
    restart: usize,
    seed: u64,
    warnings: FitWarnings,
    restarts: &'a [RestartSummary],
}

pub fn fit(args: FitArgs, config: Option<&Path>) -> Result<u8> {
    let args = apply_config(args, config)?;
    let hyper = args.model.hyper()?;
    let rec_lag = args.model.rec_lag()?;
    let (net, pre) = load_input(&args.input)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &args)?;
    write_json(&args.out.join("preprocess.json"), &pre)?;

    let result = em::fit(&net, &hyper, args.model.variant, rec_lag)?;
    fs_write_params(&args.out.join("params.json"), &result.params)?;
    write_trace(&args.out.join("trace.csv"), &result.objective_trace)?;
    write_json(
        &args.out.join("summary.json"),
        &FitSummary {
            variant: args.model.variant,
            k: hyper.k,
            n_nodes: net.n_nodes(),
            n_snapshots: net.n_steps(),
            converged: result.converged,
            n_iterations: result.n_iterations,
            final_objective: result.final_objective(),
            restart: result.restart,
            seed: result.seed,
            warnings: result.warnings,
            restarts: &result.restarts,
        },
    )?;
    if result.converged {
        info!("converged after {} iterations", result.n_iterations);
        Ok(EXIT_OK)
    } else {
        warn!("stopped at the iteration limit ({}) without converging", hyper.max_iter);
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn fs_write_params(path: &Path, params: &ModelParams) -> Result<()> {
    let mut text = params.to_json()?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_params(path: &Path) -> Result<ModelParams> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading fitted parameters {}", path.display()))?;
    ModelParams::from_json(&text).with_context(|| format!("parsing fitted parameters {}", path.display()))
}

pub fn generate(args: GenerateArgs, config: Option<&Path>) -> Result<u8> {
    let args = apply_config(args, config)?;
    let cfg = args.generator.config();
    let (net, truth) = generator::generate(&cfg)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &args)?;
    write_network(&args.out.join("network.txt"), &net)?;
    fs_write_params(&args.out.join("truth.json"), &truth)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct PredictSummary {
    t: usize,
    auc: f64,
    /// `None` when scoring with supplied parameters.
    converged: Option<bool>,
}

pub fn predict(args: PredictArgs, config: Option<&Path>) -> Result<u8> {
    let args = apply_config(args, config)?;
    let (net, _) = load_input(&args.input)?;
    let (auc, converged, params) = match &args.params {
        Some(path) => {
            let params = read_params(path)?;
            let auc = eval::auc(&eval::forecast_scores(&net, &params, args.t)?)?;
            (auc, None, None)
        }
        None => {
            let hyper = args.model.hyper()?;
            let f = eval::forecast_auc(&net, &hyper, args.model.variant, args.model.rec_lag()?, args.t)?;
            (f.auc, Some(f.fit.converged), Some(f.fit.params))
        }
    };
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &args)?;
    if let Some(p) = &params {
        fs_write_params(&args.out.join("params.json"), p)?;
    }
    let row = ReportRow {
        experiment: "predict".into(),
        t: Some(args.t),
        sample: None,
        metric: "auc".into(),
        value: auc,
    };
    write_rows(&args.out.join("report.csv"), &[row])?;
    write_json(&args.out.join("summary.json"), &PredictSummary { t: args.t, auc, converged })?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CvSummary {
    folds: usize,
    results: Vec<CvReport>,
    /// Community count with the highest mean held-out AUC.
    best_k: Option<usize>,
}

pub fn cv(args: CvArgs, config: Option<&Path>) -> Result<u8> {
    let args = apply_config(args, config)?;
    let rec_lag = args.model.rec_lag()?;
    let ks = if args.k_values.is_empty() {
        vec![args.model.k]
    } else {
        args.k_values.clone()
    };
    let (net, _) = load_input(&args.input)?;
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for &k in &ks {
        let hyper = Hyperparams {
            k,
            ..args.model.hyper()?
        };
        hyper.validate()?;
        let report = eval::cross_validate(&net, &hyper, args.model.variant, rec_lag, args.folds, args.model.seed)?;
        for (fold, auc) in report.fold_auc.iter().enumerate() {
            if let Some(value) = auc {
                rows.push(ReportRow {
                    experiment: format!("cv-K{k}"),
                    t: None,
                    sample: Some(fold),
                    metric: "auc".into(),
                    value: *value,
                });
            }
        }
        results.push(report);
    }
    let best_k = results
        .iter()
        .filter_map(|r| r.mean_auc.map(|m| (r.k, m)))
        .fold(None, |best: Option<(usize, f64)>, (k, m)| match best {
            Some((_, bm)) if bm >= m => best,
            _ => Some((k, m)),
        })
        .map(|(k, _)| k);
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &args)?;
    write_rows(&args.out.join("report.csv"), &rows)?;
    write_json(
        &args.out.join("summary.json"),
        &CvSummary {
            folds: args.folds,
            results,
            best_k,
        },
    )?;
    Ok(EXIT_OK)
}

pub fn reciprocity(args: ReciprocityArgs, config: Option<&Path>) -> Result<u8> {
    let args = apply_config(args, config)?;
    let (net, _) = load_input(&args.input)?;
    let report = match &args.params {
        Some(path) => {
            let params = read_params(path)?;
            if params.n_nodes() != net.n_nodes() {
                bail!(
                    "parameters cover {} nodes, the (preprocessed) network has {}",
                    params.n_nodes(),
                    net.n_nodes()
                );
            }
            eval::reciprocity_from_params(&net, &params, args.samples, args.model.seed)?
        }
        None => eval::reciprocity_study(
            &net,
            &args.model.hyper()?,
            args.model.variant,
            args.model.rec_lag()?,
            args.samples,
        )?,
    };
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &args)?;
    write_rows(&args.out.join("report.csv"), &report.rows("reciprocity"))?;
    write_json(&args.out.join("summary.json"), &report)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BenchmarkSummary {
    experiment: String,
    samples: usize,
    steps: Vec<AucSummary>,
}

pub fn benchmark(args: BenchmarkArgs, config: Option<&Path>) -> Result<u8> {
    let args = apply_config(args, config)?;
    let cfg = args.generator.config();
    let hyper = Hyperparams {
        n_restarts: args.restarts,
        max_iter: args.max_iter,
        seed: args.generator.seed,
        ..Hyperparams::new(args.fit_k.unwrap_or(args.generator.k))
    };
    hyper.validate()?;
    let report = eval::forecast_benchmark(&cfg, &hyper, args.variant, args.samples, &args.steps)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("config.json"), &args)?;
    write_rows(&args.out.join("report.csv"), &report.rows())?;
    write_json(
        &args.out.join("summary.json"),
        &BenchmarkSummary {
            experiment: report.experiment.clone(),
            samples: args.samples,
            steps: report.summary(),
        },
    )?;
    Ok(EXIT_OK)
}
