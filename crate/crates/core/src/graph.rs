//! Temporal networks: an ordered sequence of sparse directed snapshots over a
//! fixed node set.
//!
//! Each snapshot is stored twice, as a row-compressed out-adjacency and as its
//! transpose, so that both `A_ij(t)` and `A_ji(t)` are cheap to look up.

use crate::error::{Error, Result};

/// Directed edge `(source, target, weight)`.
pub type Edge = (u32, u32, u32);

/// One directed snapshot in compressed sparse row form, with a companion
/// transpose view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    out_ptr: Vec<usize>,
    out_idx: Vec<u32>,
    out_w: Vec<u32>,
    in_ptr: Vec<usize>,
    in_idx: Vec<u32>,
    in_w: Vec<u32>,
}

impl Snapshot {
    /// Builds a snapshot from an arbitrary edge list. Duplicate `(i, j)` records
    /// are summed and zero weights are dropped.
    pub fn from_edges(n_nodes: usize, edges: &[Edge]) -> Result<Self> {
        let mut sorted: Vec<Edge> = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            if i as usize >= n_nodes || j as usize >= n_nodes {
                return Err(Error::Validation(format!(
                    "edge ({i}, {j}) outside node range [0, {n_nodes})"
                )));
            }
            if w > 0 {
                sorted.push((i, j, w));
            }
        }
        sorted.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<Edge> = Vec::with_capacity(sorted.len());
        for (i, j, w) in sorted {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 = last.2.saturating_add(w),
                _ => merged.push((i, j, w)),
            }
        }

        let (out_ptr, out_idx, out_w) = compress(n_nodes, merged.iter().map(|&(i, j, w)| (i, j, w)));
        let mut transposed: Vec<Edge> = merged.iter().map(|&(i, j, w)| (j, i, w)).collect();
        transposed.sort_unstable_by_key(|&(j, i, _)| (j, i));
        let (in_ptr, in_idx, in_w) = compress(n_nodes, transposed.into_iter());

        Ok(Self {
            out_ptr,
            out_idx,
            out_w,
            in_ptr,
            in_idx,
            in_w,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.out_ptr.len() - 1
    }

    pub fn n_edges(&self) -> usize {
        self.out_idx.len()
    }

    /// Weight of `i -> j`, 0 when absent.
    pub fn weight(&self, i: usize, j: usize) -> u32 {
        let row = &self.out_idx[self.out_ptr[i]..self.out_ptr[i + 1]];
        match row.binary_search(&(j as u32)) {
            Ok(pos) => self.out_w[self.out_ptr[i] + pos],
            Err(_) => 0,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j) > 0
    }

    /// Targets and weights of the out-edges of `i`, sorted by target.
    pub fn out_edges(&self, i: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let range = self.out_ptr[i]..self.out_ptr[i + 1];
        self.out_idx[range.clone()]
            .iter()
            .zip(&self.out_w[range])
            .map(|(&j, &w)| (j as usize, w))
    }

    /// Sources and weights of the in-edges of `j`, sorted by source.
    pub fn in_edges(&self, j: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let range = self.in_ptr[j]..self.in_ptr[j + 1];
        self.in_idx[range.clone()]
            .iter()
            .zip(&self.in_w[range])
            .map(|(&i, &w)| (i as usize, w))
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out_ptr[i + 1] - self.out_ptr[i]
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.in_ptr[j + 1] - self.in_ptr[j]
    }

    /// All edges ordered by `(source, target)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (0..self.n_nodes()).flat_map(move |i| self.out_edges(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn total_weight(&self) -> u64 {
        self.out_w.iter().map(|&w| w as u64).sum()
    }
}

fn compress(
    n_nodes: usize,
    sorted: impl Iterator<Item = Edge>,
) -> (Vec<usize>, Vec<u32>, Vec<u32>) {
    let mut ptr = vec![0usize; n_nodes + 1];
    let mut idx = Vec::new();
    let mut wts = Vec::new();
    for (row, col, w) in sorted {
        ptr[row as usize + 1] += 1;
        idx.push(col);
        wts.push(w);
    }
    for r in 0..n_nodes {
        ptr[r + 1] += ptr[r];
    }
    (ptr, idx, wts)
}

/// Immutable sequence of snapshots `A(0), ..., A(T)` over `n_nodes` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalNetwork {
    n_nodes: usize,
    snapshots: Vec<Snapshot>,
    labels: Option<Vec<String>>,
}

impl TemporalNetwork {
    /// Builds a network from one edge list per time step.
    pub fn from_edges(n_nodes: usize, steps: &[Vec<Edge>]) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Validation("a temporal network needs at least one snapshot".into()));
        }
        let snapshots = steps
            .iter()
            .map(|edges| Snapshot::from_edges(n_nodes, edges))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_nodes,
            snapshots,
            labels: None,
        })
    }

    pub fn from_snapshots(snapshots: Vec<Snapshot>) -> Result<Self> {
        let n_nodes = match snapshots.first() {
            Some(s) => s.n_nodes(),
            None => {
                return Err(Error::Validation(
                    "a temporal network needs at least one snapshot".into(),
                ))
            }
        };
        if snapshots.iter().any(|s| s.n_nodes() != n_nodes) {
            return Err(Error::Validation("snapshots disagree on the node count".into()));
        }
        Ok(Self {
            n_nodes,
            snapshots,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_nodes {
            return Err(Error::Validation(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n_nodes
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of snapshots, `T + 1`.
    pub fn n_steps(&self) -> usize {
        self.snapshots.len()
    }

    pub fn snapshot(&self, t: usize) -> &Snapshot {
        &self.snapshots[t]
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// External name of node `i`: its label, or its index.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    /// First `n_steps` snapshots, `A(0), ..., A(n_steps - 1)`.
    pub fn prefix(&self, n_steps: usize) -> Result<Self> {
        if n_steps == 0 || n_steps > self.n_steps() {
            return Err(Error::StepOutOfRange {
                step: n_steps,
                n_steps: self.n_steps(),
            });
        }
        Ok(Self {
            n_nodes: self.n_nodes,
            snapshots: self.snapshots[..n_steps].to_vec(),
            labels: self.labels.clone(),
        })
    }

    /// Copy with every positive weight set to 1.
    pub fn binarized(&self) -> Self {
        let snapshots = self
            .snapshots
            .iter()
            .map(|s| {
                let edges: Vec<Edge> = s.edges().map(|(i, j, _)| (i as u32, j as u32, 1)).collect();
                Snapshot::from_edges(self.n_nodes, &edges).expect("indices already validated")
            })
            .collect();
        Self {
            n_nodes: self.n_nodes,
            snapshots,
            labels: self.labels.clone(),
        }
    }

    pub fn is_binary(&self) -> bool {
        self.snapshots.iter().all(|s| s.out_w.iter().all(|&w| w <= 1))
    }

    pub fn has_self_loops(&self) -> bool {
        self.snapshots
            .iter()
            .any(|s| (0..self.n_nodes).any(|i| s.has_edge(i, i)))
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n_nodes {
            return Err(Error::Validation("permutation length differs from node count".into()));
        }
        let mut seen = vec![false; self.n_nodes];
        for &p in perm {
            if p >= self.n_nodes || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Validation("not a permutation".into()));
            }
        }
        let steps: Vec<Vec<Edge>> = self
            .snapshots
            .iter()
            .map(|s| {
                s.edges()
                    .map(|(i, j, w)| (perm[i] as u32, perm[j] as u32, w))
                    .collect()
            })
            .collect();
        let mut net = Self::from_edges(self.n_nodes, &steps)?;
        if let Some(labels) = &self.labels {
            let mut relabeled = vec![String::new(); self.n_nodes];
            for (i, l) in labels.iter().enumerate() {
                relabeled[perm[i]] = l.clone();
            }
            net.labels = Some(relabeled);
        }
        Ok(net)
    }

    /// Per-snapshot edge lists, ordered by `(source, target)`.
    pub fn edge_lists(&self) -> Vec<Vec<Edge>> {
        self.snapshots
            .iter()
            .map(|s| s.edges().map(|(i, j, w)| (i as u32, j as u32, w)).collect())
            .collect()
    }

    /// Mean out-degree (number of edges over nodes) of snapshot `t`.
    pub fn mean_degree(&self, t: usize) -> f64 {
        if self.n_nodes == 0 {
            return 0.0;
        }
        self.snapshots[t].n_edges() as f64 / self.n_nodes as f64
    }
}

/// Edge reciprocity of snapshot `t`: the fraction of directed edges `i -> j`
/// whose reverse `j -> i` is also present. Weights are ignored and self-loops
/// are not counted. An empty snapshot has reciprocity 0.
pub fn reciprocity(net: &TemporalNetwork, t: usize) -> Result<f64> {
    if t >= net.n_steps() {
        return Err(Error::StepOutOfRange {
            step: t,
            n_steps: net.n_steps(),
        });
    }
    let snap = net.snapshot(t);
    let mut total = 0usize;
    let mut reciprocated = 0usize;
    for (i, j, _) in snap.edges() {
        if i == j {
            continue;
        }
        total += 1;
        if snap.has_edge(j, i) {
            reciprocated += 1;
        }
    }
    Ok(if total == 0 {
        0.0
    } else {
        reciprocated as f64 / total as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_zero_weights_dropped() {
        let s = Snapshot::from_edges(3, &[(0, 1, 2), (0, 1, 3), (1, 2, 0)]).unwrap();
        assert_eq!(s.weight(0, 1), 5);
        assert_eq!(s.n_edges(), 1);
        assert_eq!(s.in_degree(1), 1);
        assert_eq!(s.in_degree(2), 0);
    }

    #[test]
    fn rejects_out_of_range_indices() {
        assert!(Snapshot::from_edges(2, &[(0, 2, 1)]).is_err());
    }

    #[test]
    fn transpose_view_matches() {
        let s = Snapshot::from_edges(4, &[(0, 1, 1), (2, 1, 4), (3, 0, 1)]).unwrap();
        let ins: Vec<_> = s.in_edges(1).collect();
        assert_eq!(ins, vec![(0, 1), (2, 4)]);
        assert_eq!(s.out_edges(3).collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn reciprocity_examples() {
        let net = TemporalNetwork::from_edges(2, &[vec![(0, 1, 1), (1, 0, 1)]]).unwrap();
        assert_eq!(reciprocity(&net, 0).unwrap(), 1.0);

        let star = TemporalNetwork::from_edges(4, &[vec![(0, 1, 1), (0, 2, 1), (0, 3, 1)]]).unwrap();
        assert_eq!(reciprocity(&star, 0).unwrap(), 0.0);

        // a->b, b->a, a->c: two of three ordered edges are reciprocated
        let mixed = TemporalNetwork::from_edges(3, &[vec![(0, 1, 1), (1, 0, 1), (0, 2, 1)]]).unwrap();
        assert!((reciprocity(&mixed, 0).unwrap() - 2.0 / 3.0).abs() < 1e-15);

        let empty = TemporalNetwork::from_edges(3, &[vec![]]).unwrap();
        assert_eq!(reciprocity(&empty, 0).unwrap(), 0.0);
        assert!(matches!(
            reciprocity(&empty, 1),
            Err(Error::StepOutOfRange { step: 1, n_steps: 1 })
        ));
    }

    #[test]
    fn prefix_and_permutation() {
        let net = TemporalNetwork::from_edges(3, &[vec![(0, 1, 1)], vec![(1, 2, 1)]]).unwrap();
        assert_eq!(net.prefix(1).unwrap().n_steps(), 1);
        assert!(net.prefix(0).is_err());
        let p = net.permuted(&[2, 0, 1]).unwrap();
        assert!(p.snapshot(0).has_edge(2, 0));
        assert!(p.snapshot(1).has_edge(0, 1));
        assert!(net.permuted(&[0, 0, 1]).is_err());
    }
}
