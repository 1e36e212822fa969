//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dynrecip::em::{self, FitResult};
use dynrecip::eval::{self, mean_std, win_rate};
use dynrecip::generator::{self, GeneratorConfig};
use dynrecip::model::{log_likelihood, transition_probs};
use dynrecip::preprocess::preprocess;
use dynrecip::{Error, Hyperparams, ModelParams, RecLag, TemporalNetwork, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_variant(rng: &mut ChaCha8Rng) -> Variant {
    [Variant::WStatic, Variant::WDyn, Variant::FullDyn][rng.random_range(0..3)]
}

fn random_network(rng: &mut ChaCha8Rng, n: usize, n_steps: usize, density: f64) -> TemporalNetwork {
    let steps: Vec<Vec<(u32, u32, u32)>> = (0..n_steps)
        .map(|t| {
            let mut edges = Vec::new();
            for i in 0..n as u32 {
                for j in 0..n as u32 {
                    if i != j && rng.random::<f64>() < density {
                        let w = if t == 0 { rng.random_range(1..=3) } else { 1 };
                        edges.push((i, j, w));
                    }
                }
            }
            edges
        })
        .collect();
    TemporalNetwork::from_edges(n, &steps).expect("valid random network")
}

fn random_params(rng: &mut ChaCha8Rng, n: usize, k: usize, n_steps: usize) -> ModelParams {
    let variant = random_variant(rng);
    let rec_lag = if rng.random::<bool>() { RecLag::Previous } else { RecLag::Same };
    let mut p = ModelParams::zeros(variant, rec_lag, n, k, n_steps);
    p.u.mapv_inplace(|_| rng.random_range(0.0..1.5));
    p.v.mapv_inplace(|_| rng.random_range(0.0..1.5));
    p.w.mapv_inplace(|_| rng.random_range(0.0..2.0));
    p.eta = rng.random_range(0.0..2.0);
    for b in p.beta.iter_mut() {
        *b = rng.random_range(0.01..0.99);
    }
    p
}

fn ln(x: f64) -> f64 {
    x.max(1e-12).ln()
}

/// Chain log-likelihood written out per ordered pair.
fn brute_force(net: &TemporalNetwork, p: &ModelParams) -> f64 {
    let n = net.n_nodes();
    let k = p.n_communities();
    let rate = |t: usize, i: usize, j: usize| {
        let (u, v, w) = (p.u_at(t), p.v_at(t), p.w_at(t));
        let mut s = 0.0;
        for a in 0..k {
            for b in 0..k {
                s += u[[i, a]] * v[[j, b]] * w[[a, b]];
            }
        }
        s
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let a0 = net.snapshot(0).weight(i, j);
            let l = rate(0, i, j);
            let ln_fact: f64 = (1..=a0).map(|x| (x as f64).ln()).sum();
            total += a0 as f64 * ln(l) - l - ln_fact;
            for t in 1..net.n_steps() {
                let back = match p.rec_lag {
                    RecLag::Previous => t - 1,
                    RecLag::Same => t,
                };
                let rec = if net.snapshot(back).has_edge(j, i) { 1.0 } else { 0.0 };
                let beta = p.beta_at(t);
                let m = rate(t, i, j) + p.eta * rec;
                let stay = (-beta * m).exp();
                let prob = match (net.snapshot(t - 1).has_edge(i, j), net.snapshot(t).has_edge(i, j)) {
                    (false, false) => stay,
                    (false, true) => beta * m * stay,
                    (true, false) => beta * stay,
                    (true, true) => (1.0 - beta) * stay,
                };
                total += ln(prob);
            }
        }
    }
    total
}

fn likelihood_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=4);
        let n_steps = rng.random_range(1..=3);
        let k = rng.random_range(1..=2);
        let net = random_network(&mut rng, n, n_steps, 0.5);
        let p = random_params(&mut rng, n, k, n_steps);
        let fast = match log_likelihood(&net, &p) {
            Ok(v) => v,
            Err(e) => return outcome(false, format!("log_likelihood failed: {e}")),
        };
        worst = worst.max((fast - brute_force(&net, &p)).abs());
    }
    outcome(worst < 1e-10, format!("200 instances, max |delta| = {worst:.2e}"))
}

/// Continuous-time dyad over unit time: new copies of the edge are born at
/// rate `mu M` and every live copy dies at rate `mu`, with `mu = -ln(1 - beta)`.
/// Returns (any newborn alive, original alive).
fn birth_death(rng: &mut ChaCha8Rng, m: f64, beta: f64, start_with_edge: bool) -> (bool, bool) {
    let mu = -(1.0 - beta).ln();
    let mut time = 0.0;
    let mut newborns = 0u64;
    let mut original = start_with_edge;
    loop {
        let deaths = mu * (newborns as f64 + if original { 1.0 } else { 0.0 });
        let total = mu * m + deaths;
        if total <= 0.0 {
            break;
        }
        time += -(1.0 - rng.random::<f64>()).ln() / total;
        if time > 1.0 {
            break;
        }
        let pick = rng.random::<f64>() * total;
        if pick < mu * m {
            newborns += 1;
        } else if original && pick < mu * m + mu {
            original = false;
        } else {
            newborns -= 1;
        }
    }
    (newborns > 0, original)
}

fn kernel_oracle() -> Outcome {
    const TRIALS: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst_z: f64 = 0.0;
    for triple in 0..10 {
        let lambda = rng.random_range(0.01..2.0);
        let eta = rng.random_range(0.0..1.5);
        let a_rec = if rng.random::<bool>() { 1.0 } else { 0.0 };
        let beta = rng.random_range(0.05..0.95);
        let kp = transition_probs(lambda, eta, a_rec, beta);
        let m = lambda + eta * a_rec;
        let mut sim = ChaCha8Rng::seed_from_u64(23);
        sim.set_stream(triple);

        let empty = (0..TRIALS).filter(|_| !birth_death(&mut sim, m, beta, false).0).count();
        let p_hat = empty as f64 / TRIALS as f64;
        let se = (kp.p00 * (1.0 - kp.p00) / TRIALS as f64).sqrt();
        worst_z = worst_z.max((p_hat - kp.p00).abs() / se);

        // Survival of the original copy given that no newborn copy is alive.
        let (mut kept, mut survived) = (0usize, 0usize);
        for _ in 0..TRIALS {
            let (newborn, original) = birth_death(&mut sim, m, beta, true);
            if !newborn {
                kept += 1;
                survived += original as usize;
            }
        }
        let target = kp.p11 / (kp.p11 + kp.p10);
        let q_hat = survived as f64 / kept as f64;
        let se = (target * (1.0 - target) / kept as f64).sqrt();
        worst_z = worst_z.max((q_hat - target).abs() / se);
    }
    outcome(worst_z < 3.0, format!("10 triples x 1e5 trials, max |z| = {worst_z:.2}"))
}

fn monotone_fits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut violations = 0;
    let mut failures = Vec::new();
    for fit_index in 0..50 {
        let n = rng.random_range(6..=25);
        let n_steps = rng.random_range(1..=4);
        let density = rng.random_range(0.05..0.3);
        let net = random_network(&mut rng, n, n_steps, density);
        let variant = random_variant(&mut rng);
        let hyper = Hyperparams {
            n_restarts: 1,
            max_iter: 200,
            seed: fit_index,
            ..Hyperparams::new(rng.random_range(1..=3))
        };
        match em::fit(&net, &hyper, variant, RecLag::Previous) {
            Ok(r) => violations += r.objective_trace.windows(2).filter(|w| w[1] < w[0] - 1e-8).count(),
            Err(e) => failures.push(format!("fit {fit_index}: {e}")),
        }
    }
    outcome(
        violations == 0 && failures.is_empty(),
        format!("50 fits, {violations} violations, errors {failures:?}"),
    )
}

fn recovery() -> Outcome {
    let cfg = GeneratorConfig {
        n_nodes: 500,
        k: 3,
        avg_degree: 20.0,
        eta: 0.5,
        beta: 0.2,
        n_steps: 6,
        seed: 0,
        ..Default::default()
    };
    let net = match generator::generate(&cfg) {
        Ok((net, _)) => net,
        Err(e) => return outcome(false, format!("generate failed: {e}")),
    };
    let hyper = Hyperparams::new(3);
    let mut etas = Vec::new();
    let mut betas = Vec::new();
    for t in 1..=6 {
        let fit = net.prefix(t).and_then(|train| em::fit(&train, &hyper, Variant::WDyn, RecLag::Previous));
        match fit {
            Ok(r) => {
                etas.push(r.params.eta);
                betas.push(r.params.beta_at(1));
            }
            Err(e) => return outcome(false, format!("fit on {t} snapshots failed: {e}")),
        }
    }
    let beta_ok = betas[1..].iter().all(|b| (0.20..=0.27).contains(b));
    let eta_monotone = etas.windows(2).all(|w| w[1] >= w[0]);
    let eta3_ok = etas[2] >= 0.08;
    let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    outcome(
        beta_ok && eta_monotone && eta3_ok,
        format!(
            "beta(T=2..6) [{}] in [0.20,0.27]: {beta_ok}; eta(T=1..6) [{}] non-decreasing: {eta_monotone}; eta(3) >= 0.08: {eta3_ok}",
            fmt(&betas[1..]),
            fmt(&etas)
        ),
    )
}

fn forecast_ordering() -> Outcome {
    let cfg = GeneratorConfig {
        n_nodes: 500,
        k: 3,
        avg_degree: 5.0,
        eta: 0.5,
        beta: 0.2,
        n_steps: 6,
        seed: 0,
        ..Default::default()
    };
    let steps = [2, 3, 4, 5, 6];
    let report = match eval::forecast_benchmark(&cfg, &Hyperparams::new(3), Variant::WDyn, 20, &steps) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("benchmark failed: {e}")),
    };
    let gaps: Vec<f64> = report
        .full
        .iter()
        .zip(&report.ablation)
        .map(|(f, a)| mean_std(f).0 - mean_std(a).0)
        .collect();
    let wins_t3 = win_rate(&report.full[1], &report.ablation[1]);
    let pass = wins_t3 >= 0.7 && gaps.iter().all(|&g| g > 0.0);
    let gaps_text = gaps.iter().map(|g| format!("{g:+.4}")).collect::<Vec<_>>().join(" ");
    outcome(pass, format!("win rate at T=3 = {wins_t3:.2}; mean gap T=2..6 [{gaps_text}]"))
}

fn reciprocity_consistency() -> Outcome {
    let cfg = GeneratorConfig {
        eta: 0.5,
        seed: 7,
        ..Default::default()
    };
    let result = generator::generate(&cfg)
        .and_then(|(net, _)| eval::reciprocity_study(&net, &Hyperparams::new(cfg.k), Variant::WDyn, RecLag::Previous, 5));
    match result {
        Ok(report) => {
            let outside = report.outside(3.0);
            let rows = report
                .rows
                .iter()
                .map(|r| format!("t{}: {:.3} vs {:.3}+-{:.3}", r.t, r.real, r.sample_mean, r.sample_std))
                .collect::<Vec<_>>()
                .join(", ");
            outcome(outside.is_empty(), format!("outside mean+-3std at {outside:?}; {rows}"))
        }
        Err(e) => outcome(false, format!("study failed: {e}")),
    }
}

fn run_cli(args: &[&str]) -> Result<i32, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_dynrecip"))
        .args(args)
        .env("RUST_LOG", "error")
        .status()
        .map_err(|e| e.to_string())?;
    status.code().ok_or_else(|| "terminated by signal".to_string())
}

fn read_all(dir: &Path, files: &[&str]) -> Result<Vec<Vec<u8>>, String> {
    files
        .iter()
        .map(|f| std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}")))
        .collect()
}

fn determinism() -> Outcome {
    let run = || -> Result<bool, String> {
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let gen_dir = tmp.path().join("gen");
        let fit_dir = tmp.path().join("fit");
        let (gen_out, fit_out) = (gen_dir.to_string_lossy(), fit_dir.to_string_lossy());
        let input = gen_dir.join("network.txt");
        let input = input.to_string_lossy();
        let gen_args = ["generate", "--N", "120", "--avg-degree", "6", "--T", "3", "--seed", "5", "--out", &gen_out];
        let fit_args = ["fit", "--input", &input, "--seed", "3", "--restarts", "3", "--out", &fit_out];
        let gen_files = ["config.json", "network.txt", "truth.json"];
        let fit_files = ["config.json", "preprocess.json", "params.json", "trace.csv", "summary.json"];

        let mut runs = Vec::new();
        for _ in 0..2 {
            let code = run_cli(&gen_args)?;
            if code != 0 {
                return Err(format!("generate exited {code}"));
            }
            let generated = read_all(&gen_dir, &gen_files)?;
            let code = run_cli(&fit_args)?;
            if code != 0 && code != 2 {
                return Err(format!("fit exited {code}"));
            }
            runs.push((generated, read_all(&fit_dir, &fit_files)?));
        }
        Ok(runs[0] == runs[1])
    };
    match run() {
        Ok(same) => outcome(same, format!("generate and fit artifacts byte-identical: {same}")),
        Err(e) => outcome(false, e),
    }
}

fn quick(k: usize) -> Hyperparams {
    Hyperparams {
        n_restarts: 2,
        max_iter: 100,
        ..Hyperparams::new(k)
    }
}

fn degenerate_suite() -> Outcome {
    type Case = (&'static str, Box<dyn Fn() -> Result<bool, String>>);
    let fit_net = |net: &TemporalNetwork, k: usize| -> Result<FitResult, Error> {
        em::fit(net, &quick(k), Variant::WDyn, RecLag::Previous)
    };
    let cases: Vec<Case> = vec![
        (
            "empty network",
            Box::new(move || {
                let net = TemporalNetwork::from_edges(5, &[vec![], vec![]]).map_err(|e| e.to_string())?;
                let rejected = preprocess(&net).is_err();
                let flagged = match fit_net(&net, 2) {
                    Err(_) => true,
                    Ok(r) => r.warnings.beta_floored,
                };
                Ok(rejected && flagged)
            }),
        ),
        (
            "single node",
            Box::new(move || {
                let built = TemporalNetwork::from_edges(1, &[vec![], vec![]]);
                Ok(match built {
                    Err(_) => true,
                    Ok(net) => fit_net(&net, 1).is_err(),
                })
            }),
        ),
        (
            "K=1",
            Box::new(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(44);
                let net = random_network(&mut rng, 12, 3, 0.2);
                let r = fit_net(&net, 1).map_err(|e| e.to_string())?;
                Ok(r.final_objective().is_finite() && r.params.validate().is_ok())
            }),
        ),
        (
            "beta floor (single snapshot)",
            Box::new(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(55);
                let net = random_network(&mut rng, 12, 1, 0.2);
                let r = fit_net(&net, 2).map_err(|e| e.to_string())?;
                Ok(r.warnings.beta_floored)
            }),
        ),
        (
            "all edges persist",
            Box::new(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(66);
                let first = random_network(&mut rng, 12, 1, 0.2);
                let edges = first.edge_lists().remove(0);
                let net = TemporalNetwork::from_edges(12, &[edges.clone(), edges.clone(), edges])
                    .map_err(|e| e.to_string())?;
                let r = fit_net(&net, 2).map_err(|e| e.to_string())?;
                Ok(r.warnings.beta_floored && r.final_objective().is_finite())
            }),
        ),
    ];
    let mut failed = Vec::new();
    for (name, case) in &cases {
        match catch_unwind(AssertUnwindSafe(case)) {
            Ok(Ok(true)) => {}
            Ok(Ok(false)) => failed.push(format!("{name}: no error or warning")),
            Ok(Err(e)) => failed.push(format!("{name}: {e}")),
            Err(_) => failed.push(format!("{name}: panicked")),
        }
    }
    outcome(
        failed.is_empty(),
        format!("{} cases, failures {:?}", cases.len(), failed),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 8] = [
        ("1 likelihood oracle", likelihood_oracle, Duration::from_secs(10)),
        ("2 transition kernel oracle", kernel_oracle, Duration::from_secs(60)),
        ("3 EM monotonicity", monotone_fits, Duration::MAX),
        ("4 parameter recovery", recovery, Duration::from_secs(600)),
        ("5 forecast AUC ordering", forecast_ordering, Duration::from_secs(1800)),
        ("6 reciprocity self-consistency", reciprocity_consistency, Duration::MAX),
        ("7 CLI determinism", determinism, Duration::MAX),
        ("8 degenerate inputs", degenerate_suite, Duration::MAX),
    ];
    let mut failures = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = catch_unwind(check).unwrap_or_else(|_| outcome(false, "panicked"));
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = result.pass && in_time;
        if !pass {
            failures += 1;
        }
        let time_note = if in_time { String::new() } else { format!(" (over the {budget:?} budget)") };
        println!(
            "{} criterion {name}: {} [{:.1}s{time_note}]",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", 8 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
