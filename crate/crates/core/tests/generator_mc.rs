use dynrecip::generator::{block_of, generate, planted_params, sample_initial, step, GeneratorConfig, StructureTag};
use dynrecip::graph::Snapshot;
use dynrecip::model::rate_matrix;
use dynrecip::{reciprocity, ModelParams, RecLag, Variant};
use ndarray::Array3;

fn planted(n: usize, k: usize, deg: f64) -> GeneratorConfig {
    GeneratorConfig {
        n_nodes: n,
        k,
        avg_degree: deg,
        ..GeneratorConfig::default()
    }
}

#[test]
fn initial_mean_degree_matches_target() {
    // uniform rates: total edges ~ Poisson(N <k>) before collapsing multi-edges
    let n = 200;
    let p = planted_params(&planted(n, 1, 4.0)).unwrap();
    let lambda = 4.0 / (n - 1) as f64;
    let pairs = (n * (n - 1)) as f64;
    let q = 1.0 - (-lambda).exp();
    let expected = pairs * q / n as f64;
    let sd = (pairs * q * (1.0 - q)).sqrt() / n as f64;
    let degs: Vec<f64> = (0..100)
        .map(|s| sample_initial(&p, s, true).unwrap().n_edges() as f64 / n as f64)
        .collect();
    let mean = degs.iter().sum::<f64>() / degs.len() as f64;
    assert!((mean - expected).abs() < 3.0 * sd / 10.0, "{mean} vs {expected}");
}

#[test]
fn assortative_edges_stay_inside_blocks() {
    let n = 500;
    let p = planted_params(&planted(n, 3, 5.0)).unwrap();
    let s = sample_initial(&p, 17, true).unwrap();
    let inside = s.edges().filter(|&(i, j, _)| block_of(i, n, 3) == block_of(j, n, 3)).count();
    let share = inside as f64 / s.n_edges() as f64;
    // analytic share from block sizes 167, 167, 166 and ratio 10
    let sizes = [167.0f64, 167.0, 166.0];
    let intra: f64 = sizes.iter().map(|s| 10.0 * s * (s - 1.0)).sum();
    let inter: f64 = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).filter(|(a, b)| a != b).map(|(a, b)| sizes[a] * sizes[b]).sum();
    let analytic = intra / (intra + inter);
    assert!(share >= 0.8 && (share - analytic).abs() < 0.02, "{share} vs {analytic}");
}

#[test]
fn reciprocal_appearance_probability() {
    // one dyad 0->1 absent, 1->0 present; lambda_01 = 0.5 on the community side
    let mut p = ModelParams::zeros(Variant::WStatic, RecLag::Previous, 2, 1, 1);
    p.u.fill(1.0);
    p.v.fill(1.0);
    p.w.fill(0.5);
    p.eta = 0.5;
    p.beta = vec![0.2];
    let prev = Snapshot::from_edges(2, &[(1, 0, 1)]).unwrap();
    let trials = 100_000u64;
    let hits = (0..trials)
        .filter(|&s| step(&prev, &p, 1, s).unwrap().has_edge(0, 1))
        .count() as f64;
    let expected = 1.0 - (-0.2f64).exp();
    let se = (expected * (1.0 - expected) / trials as f64).sqrt();
    assert!((hits / trials as f64 - expected).abs() < 3.0 * se, "{}", hits / trials as f64);
    assert!((expected - 0.18127).abs() < 1e-5);
}

#[test]
fn benchmark_initial_degree() {
    let degs: Vec<f64> = (0..20)
        .map(|s| {
            let cfg = GeneratorConfig {
                eta: 0.2,
                seed: s,
                ..GeneratorConfig::default()
            };
            generate(&cfg).unwrap().0.mean_degree(0)
        })
        .collect();
    let mean = degs.iter().sum::<f64>() / 20.0;
    assert!((4.5..=5.5).contains(&mean), "{mean}");
}

#[test]
fn reciprocity_grows_with_eta() {
    let run = |eta: f64| {
        let (net, _) = generate(&GeneratorConfig {
            eta,
            seed: 4,
            ..GeneratorConfig::default()
        })
        .unwrap();
        (1..net.n_steps()).map(|t| reciprocity(&net, t).unwrap()).sum::<f64>() / (net.n_steps() - 1) as f64
    };
    let (low, high) = (run(0.0), run(0.5));
    assert!(high > low, "{high} <= {low}");
}

#[test]
fn static_chain_settles_at_balance_point() {
    // without reciprocity each pair is an independent two-state chain whose
    // stationary edge probability is q / (q + beta), q = 1 - exp(-beta lambda)
    let n = 500;
    let mut cfg = planted(n, 3, 5.0);
    cfg.eta = 0.0;
    cfg.n_steps = 50;
    cfg.schedule = Some(vec![StructureTag::Assortative; 51]);
    let (net, truth) = generate(&cfg).unwrap();
    let lambda = rate_matrix(&truth, 50);
    let beta = 0.2;
    let expected: f64 = lambda
        .indexed_iter()
        .filter(|((i, j), _)| i != j)
        .map(|(_, &l)| {
            let q = 1.0 - (-beta * l).exp();
            q / (q + beta)
        })
        .sum();
    let observed = net.snapshot(50).n_edges() as f64;
    assert!((observed - expected).abs() < 0.1 * expected, "{observed} vs {expected}");
}

#[test]
fn explicit_parameters_drive_generation() {
    let mut p = ModelParams::zeros(Variant::WStatic, RecLag::Previous, 30, 1, 1);
    p.u = Array3::from_elem((1, 30, 1), 1.0);
    p.v = Array3::from_elem((1, 30, 1), 1.0);
    p.w.fill(0.1);
    p.beta = vec![0.5];
    let cfg = GeneratorConfig {
        n_nodes: 30,
        n_steps: 3,
        eta: 0.3,
        beta: 0.4,
        membership_mode: dynrecip::generator::MembershipMode::Explicit(Box::new(p)),
        ..GeneratorConfig::default()
    };
    let (net, truth) = generate(&cfg).unwrap();
    assert_eq!(net.n_steps(), 4);
    assert_eq!(truth.eta, 0.3);
    assert_eq!(truth.beta, vec![0.4]);
}
