//! Sparse bookkeeping of the factorized likelihood.
//!
//! Every ordered pair `i != j` contributes one term per snapshot. Only a few of
//! those terms carry data (new edges, removals, persistences); the rest enter
//! through dense rate sums that are computed from column totals of `u` and `v`.
//! A [`TermMask`] removes individual `(t, i, j)` terms, which is how held-out
//! entries are kept out of training.

use ndarray::{Array2, ArrayView2};

use crate::graph::{Snapshot, TemporalNetwork};
use crate::params::RecLag;

/// Set of `(t, i, j)` terms excluded from the likelihood.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermMask {
    excluded: Vec<Vec<(u32, u32)>>,
}

impl TermMask {
    pub fn from_entries(n_steps: usize, entries: impl IntoIterator<Item = (usize, usize, usize)>) -> Self {
        let mut excluded = vec![Vec::new(); n_steps];
        for (t, i, j) in entries {
            excluded[t].push((i as u32, j as u32));
        }
        for step in &mut excluded {
            step.sort_unstable();
            step.dedup();
        }
        Self { excluded }
    }

    pub fn contains(&self, t: usize, i: usize, j: usize) -> bool {
        self.excluded
            .get(t)
            .is_some_and(|s| s.binary_search(&(i as u32, j as u32)).is_ok())
    }

    pub fn len(&self) -> usize {
        self.excluded.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn step(&self, t: usize) -> &[(u32, u32)] {
        self.excluded.get(t).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// A term whose indicator `A_hat_ij(t)` is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Event {
    pub t: usize,
    pub i: usize,
    pub j: usize,
    /// `A_hat_ij(t)`: the edge weight at `t = 0`, 1 afterwards.
    pub weight: f64,
    /// Reciprocal indicator entering the rate (0 at `t = 0`).
    pub rec: f64,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct StepTerms {
    /// Sum of `A_hat(t)` over unmasked terms.
    pub new_edges: f64,
    /// Unmasked `1 -> 0` transitions.
    pub removed: f64,
    /// Unmasked `1 -> 1` transitions.
    pub persisted: f64,
    /// Sum of the reciprocal indicator over unmasked pairs.
    pub rec_total: f64,
    /// Masked pairs with their reciprocal indicator.
    pub masked: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Dyads {
    pub events: Vec<Event>,
    /// `events[event_start[t]..event_start[t + 1]]` belong to step `t`.
    pub event_start: Vec<usize>,
    pub steps: Vec<StepTerms>,
    /// Sum of `ln A_ij(0)!` over unmasked initial terms.
    pub log_factorial0: f64,
}

fn reciprocal_snapshot(net: &TemporalNetwork, rec_lag: RecLag, t: usize) -> Option<&Snapshot> {
    match (t, rec_lag) {
        (0, _) => None,
        (_, RecLag::Previous) => Some(net.snapshot(t - 1)),
        (_, RecLag::Same) => Some(net.snapshot(t)),
    }
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|x| (x as f64).ln()).sum()
}

impl Dyads {
    pub fn new(net: &TemporalNetwork, rec_lag: RecLag, mask: Option<&TermMask>) -> Self {
        let n = net.n_nodes();
        let empty = TermMask::default();
        let mask = mask.unwrap_or(&empty);
        let mut events = Vec::new();
        let mut event_start = Vec::with_capacity(net.n_steps() + 1);
        let mut steps = Vec::with_capacity(net.n_steps());
        let mut log_factorial0 = 0.0;

        for t in 0..net.n_steps() {
            event_start.push(events.len());
            let cur = net.snapshot(t);
            let prev = (t > 0).then(|| net.snapshot(t - 1));
            let recs = reciprocal_snapshot(net, rec_lag, t);
            let rec_of = |i: usize, j: usize| recs.map_or(0.0, |s| s.has_edge(j, i) as u8 as f64);
            let mut st = StepTerms::default();

            for (i, j, w) in cur.edges() {
                if i == j || mask.contains(t, i, j) {
                    continue;
                }
                match prev {
                    None => {
                        events.push(Event {
                            t,
                            i,
                            j,
                            weight: w as f64,
                            rec: 0.0,
                        });
                        log_factorial0 += ln_factorial(w);
                    }
                    Some(p) if p.has_edge(i, j) => st.persisted += 1.0,
                    Some(_) => {
                        events.push(Event {
                            t,
                            i,
                            j,
                            weight: 1.0,
                            rec: rec_of(i, j),
                        });
                        st.new_edges += 1.0;
                    }
                }
            }
            if let Some(p) = prev {
                for (i, j, _) in p.edges() {
                    if i != j && !cur.has_edge(i, j) && !mask.contains(t, i, j) {
                        st.removed += 1.0;
                    }
                }
            }
            if let Some(r) = recs {
                // pair (i, j) is boosted by every edge j -> i of the reference snapshot
                st.rec_total = r.edges().filter(|&(a, b, _)| a != b).count() as f64;
            }
            for &(i, j) in mask.step(t) {
                let (i, j) = (i as usize, j as usize);
                if i == j || i >= n || j >= n {
                    continue;
                }
                let rec = rec_of(i, j);
                st.rec_total -= rec;
                st.masked.push((i, j, rec));
            }
            steps.push(st);
        }
        event_start.push(events.len());

        Self {
            events,
            event_start,
            steps,
            log_factorial0,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn step_events(&self, t: usize) -> &[Event] {
        &self.events[self.event_start[t]..self.event_start[t + 1]]
    }

    /// Number of transition terms (`t >= 1`) with a data indicator.
    pub fn transition_counts(&self, t: usize) -> (f64, f64, f64) {
        let s = &self.steps[t];
        (s.new_edges, s.removed, s.persisted)
    }
}

/// `lambda_ij = sum_{k,q} u_ik v_jq w_kq`.
pub(crate) fn rate(u: &ArrayView2<f64>, v: &ArrayView2<f64>, w: &ArrayView2<f64>, i: usize, j: usize) -> f64 {
    let k = w.nrows();
    let mut total = 0.0;
    for a in 0..k {
        let ua = u[[i, a]];
        if ua == 0.0 {
            continue;
        }
        let mut inner = 0.0;
        for b in 0..k {
            inner += v[[j, b]] * w[[a, b]];
        }
        total += ua * inner;
    }
    total
}

/// `out[i, b] = sum_{j != i} x[j, b]`, built from prefix and suffix sums so
/// that no subtraction is involved.
pub(crate) fn exclusive_sums(x: &ArrayView2<f64>) -> Array2<f64> {
    let (n, k) = x.dim();
    let mut out = Array2::zeros((n, k));
    let mut run = vec![0.0; k];
    for i in 0..n {
        for b in 0..k {
            out[[i, b]] = run[b];
            run[b] += x[[i, b]];
        }
    }
    run.iter_mut().for_each(|r| *r = 0.0);
    for i in (0..n).rev() {
        for b in 0..k {
            out[[i, b]] += run[b];
            run[b] += x[[i, b]];
        }
    }
    out
}

/// `sum_{i != j} lambda_ij` over unmasked pairs.
pub(crate) fn pair_rate_sum(
    u: &ArrayView2<f64>,
    v: &ArrayView2<f64>,
    w: &ArrayView2<f64>,
    masked: &[(usize, usize, f64)],
) -> f64 {
    let k = w.nrows();
    let others = exclusive_sums(v);
    let mut all = 0.0;
    for i in 0..u.nrows() {
        for a in 0..k {
            let ua = u[[i, a]];
            if ua == 0.0 {
                continue;
            }
            let inner: f64 = (0..k).map(|b| others[[i, b]] * w[[a, b]]).sum();
            all += ua * inner;
        }
    }
    let masked: f64 = masked.iter().map(|&(i, j, _)| rate(u, v, w, i, j)).sum();
    all - masked
}
