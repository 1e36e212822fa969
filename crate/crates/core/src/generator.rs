//! Sampling dynamic networks from the model.
//!
//! The initial snapshot draws `A_ij(0) ~ Poisson(lambda_ij(0))` independently
//! for every ordered pair `i != j`. Each later step applies the transition
//! kernel: an existing edge survives with probability `1 - beta`, a missing
//! one appears with probability `1 - exp(-beta (lambda_ij(t) + eta A_ji(t-1)))`.
//! Survival and appearance are exclusive, so a removed edge cannot reappear in
//! the same step.

use ndarray::{Array2, Array3, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Snapshot, TemporalNetwork};
use crate::model::rate_matrix;
use crate::params::{ModelParams, RecLag, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureTag {
    Assortative,
    Disassortative,
}

/// Where the generating parameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "params")]
pub enum MembershipMode {
    /// One-hot memberships in `K` contiguous blocks of (nearly) equal size.
    HardEqualSize,
    /// Explicit parameters; `eta` and `beta` still come from the config.
    Explicit(Box<ModelParams>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_nodes: usize,
    pub k: usize,
    /// Target mean out-degree, `sum_{i != j} lambda_ij(t) / N`.
    pub avg_degree: f64,
    pub eta: f64,
    pub beta: f64,
    /// Number of transitions; the network has `n_steps + 1` snapshots.
    pub n_steps: usize,
    /// Ratio between the large and the small affinity entries.
    pub affinity_ratio: f64,
    pub membership_mode: MembershipMode,
    /// Per-snapshot structure; `None` means assortative up to `t = 3` and
    /// disassortative afterwards.
    pub schedule: Option<Vec<StructureTag>>,
    /// Collapse multi-edges of the initial Poisson draw to single edges.
    pub binarize: bool,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_nodes: 500,
            k: 3,
            avg_degree: 5.0,
            eta: 0.5,
            beta: 0.2,
            n_steps: 6,
            affinity_ratio: 10.0,
            membership_mode: MembershipMode::HardEqualSize,
            schedule: None,
            binarize: true,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidConfig(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::InvalidConfig(format!("eta must be >= 0, got {}", self.eta)));
        }
        if !(self.avg_degree.is_finite() && self.avg_degree >= 0.0) {
            return Err(Error::InvalidConfig("average degree must be finite and >= 0".into()));
        }
        if !(self.affinity_ratio >= 1.0) {
            return Err(Error::InvalidConfig("affinity ratio must be >= 1".into()));
        }
        if let Some(s) = &self.schedule {
            if s.len() != self.n_steps + 1 {
                return Err(Error::InvalidConfig(format!(
                    "schedule has {} entries, expected one per snapshot ({})",
                    s.len(),
                    self.n_steps + 1
                )));
            }
        }
        match &self.membership_mode {
            MembershipMode::HardEqualSize => {
                if self.k == 0 || self.k > self.n_nodes {
                    return Err(Error::InvalidConfig(format!(
                        "need 1 <= K <= N, got K = {} with N = {}",
                        self.k, self.n_nodes
                    )));
                }
                if self.n_nodes < 2 {
                    return Err(Error::InvalidConfig("need at least 2 nodes".into()));
                }
            }
            MembershipMode::Explicit(p) => {
                p.validate()?;
                if p.n_nodes() != self.n_nodes {
                    return Err(Error::InvalidConfig(format!(
                        "explicit parameters have {} nodes, config says {}",
                        p.n_nodes(),
                        self.n_nodes
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn structure_at(&self, t: usize) -> StructureTag {
        match &self.schedule {
            Some(s) => s[t.min(s.len() - 1)],
            None if t <= 3 => StructureTag::Assortative,
            None => StructureTag::Disassortative,
        }
    }
}

/// Block of node `i` when `n` nodes are split into `k` contiguous blocks whose
/// sizes differ by at most one (the first `n % k` blocks get the extra node).
pub fn block_of(i: usize, n: usize, k: usize) -> usize {
    let (base, extra) = (n / k, n % k);
    let big = extra * (base + 1);
    if i < big {
        i / (base + 1)
    } else {
        extra + (i - big) / base
    }
}

/// Ground-truth parameters of the planted benchmark: one-hot memberships and
/// one affinity matrix per snapshot, each scaled to the target mean degree.
pub fn planted_params(cfg: &GeneratorConfig) -> Result<ModelParams> {
    cfg.validate()?;
    if !matches!(cfg.membership_mode, MembershipMode::HardEqualSize) {
        return Err(Error::InvalidConfig("planted parameters need hard-equal-size memberships".into()));
    }
    let (n, k) = (cfg.n_nodes, cfg.k);
    let n_snapshots = cfg.n_steps + 1;
    let mut p = ModelParams::zeros(Variant::WDyn, RecLag::Previous, n, k, n_snapshots);
    let mut sizes = vec![0.0; k];
    for i in 0..n {
        let b = block_of(i, n, k);
        p.u[[0, i, b]] = 1.0;
        p.v[[0, i, b]] = 1.0;
        sizes[b] += 1.0;
    }
    for t in 0..n_snapshots {
        let (diag, off) = match cfg.structure_at(t) {
            StructureTag::Assortative => (cfg.affinity_ratio, 1.0),
            StructureTag::Disassortative => (1.0, cfg.affinity_ratio),
        };
        let pattern = Array2::from_shape_fn((k, k), |(a, b)| if a == b { diag } else { off });
        let pairs: f64 = (0..k)
            .flat_map(|a| (0..k).map(move |b| (a, b)))
            .map(|(a, b)| pattern[[a, b]] * sizes[a] * (sizes[b] - if a == b { 1.0 } else { 0.0 }))
            .sum();
        let scale = cfg.avg_degree * n as f64 / pairs;
        for a in 0..k {
            for b in 0..k {
                p.w[[t, a, b]] = scale * pattern[[a, b]];
            }
        }
    }
    p.eta = cfg.eta;
    p.beta = vec![cfg.beta];
    Ok(p)
}

fn rng_for(seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64);
    rng
}

fn poisson_draws(lambda: ArrayView2<f64>, binarize: bool, rng: &mut ChaCha8Rng) -> Vec<Edge> {
    let n = lambda.nrows();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mean = lambda[[i, j]];
            if i == j || !(mean > 0.0) {
                continue;
            }
            let draw = Poisson::new(mean).expect("positive finite mean").sample(rng) as u32;
            if draw > 0 {
                edges.push((i as u32, j as u32, if binarize { 1 } else { draw }));
            }
        }
    }
    edges
}

/// Initial snapshot: independent Poisson draws with mean `lambda_ij(0)`.
pub fn sample_initial(params: &ModelParams, seed: u64, binarize: bool) -> Result<Snapshot> {
    params.validate()?;
    let lambda = rate_matrix(params, 0);
    let edges = poisson_draws(lambda.view(), binarize, &mut rng_for(seed, 0));
    Snapshot::from_edges(params.n_nodes(), &edges)
}

/// One transition from `prev` to snapshot `t >= 1`. The output is binary.
pub fn step(prev: &Snapshot, params: &ModelParams, t: usize, seed: u64) -> Result<Snapshot> {
    if t == 0 {
        return Err(Error::Unsupported("a transition needs t >= 1".into()));
    }
    let n = params.n_nodes();
    if prev.n_nodes() != n {
        return Err(Error::DimensionMismatch(format!(
            "snapshot has {} nodes, parameters have {n}",
            prev.n_nodes()
        )));
    }
    let beta = params.beta_at(t);
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Validation(format!("beta must lie in [0, 1], got {beta}")));
    }
    let lambda = rate_matrix(params, t);
    let mut rng = rng_for(seed, t);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let x: f64 = rng.random();
            let present = if prev.has_edge(i, j) {
                x >= beta
            } else {
                let rec = if prev.has_edge(j, i) { params.eta } else { 0.0 };
                let m = lambda[[i, j]] + rec;
                x < -(-beta * m).exp_m1()
            };
            if present {
                edges.push((i as u32, j as u32, 1));
            }
        }
    }
    Snapshot::from_edges(n, &edges)
}

fn chain(params: &ModelParams, n_steps: usize, seed: u64, binarize: bool) -> Result<TemporalNetwork> {
    let mut snapshots = vec![sample_initial(params, seed, binarize)?];
    for t in 1..=n_steps {
        let next = step(&snapshots[t - 1], params, t, seed)?;
        snapshots.push(next);
    }
    TemporalNetwork::from_snapshots(snapshots)
}

/// Samples a network of `cfg.n_steps + 1` snapshots and returns it with the
/// parameters that generated it.
pub fn generate(cfg: &GeneratorConfig) -> Result<(TemporalNetwork, ModelParams)> {
    cfg.validate()?;
    let params = match &cfg.membership_mode {
        MembershipMode::HardEqualSize => planted_params(cfg)?,
        MembershipMode::Explicit(p) => {
            let mut p = (**p).clone();
            p.eta = cfg.eta;
            p.beta.iter_mut().for_each(|b| *b = cfg.beta);
            p
        }
    };
    let net = chain(&params, cfg.n_steps, cfg.seed, cfg.binarize)?;
    Ok((net, params))
}

/// Samples a network with `n_snapshots` snapshots from fitted parameters.
/// Time-varying blocks beyond their last layer repeat the last layer.
pub fn resample(params: &ModelParams, n_snapshots: usize, seed: u64) -> Result<TemporalNetwork> {
    if n_snapshots == 0 {
        return Err(Error::Validation("need at least one snapshot".into()));
    }
    params.validate()?;
    chain(params, n_snapshots - 1, seed, true)
}

/// Copy of `params` whose affinity is stacked to `layers` time layers,
/// repeating the last one.
pub fn extend_affinity(params: &ModelParams, layers: usize) -> ModelParams {
    let mut out = params.clone();
    if params.variant == Variant::WDyn && layers > params.affinity_layers() {
        let k = params.n_communities();
        out.w = Array3::from_shape_fn((layers, k, k), |(t, a, b)| params.w_at(t)[[a, b]]);
    }
    out
}
