//! Cleaning rules applied to real-data snapshots before fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, TemporalNetwork};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleApplication {
    pub rule: String,
    pub pass: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub original_nodes: usize,
    pub nodes_removed: usize,
    pub self_loops_removed: usize,
    pub component_kept_size: usize,
    pub rule_trace: Vec<RuleApplication>,
}

impl PreprocessReport {
    pub fn is_noop(&self) -> bool {
        self.nodes_removed == 0 && self.self_loops_removed == 0
    }
}

/// Removes self-loops, then alternates the in/out-degree filter and the giant
/// weakly connected component restriction (both on the time-aggregated graph)
/// until neither removes a node. Surviving nodes keep their relative order.
pub fn preprocess(net: &TemporalNetwork) -> Result<(TemporalNetwork, PreprocessReport)> {
    let n = net.n_nodes();
    let mut trace = Vec::new();

    let mut self_loops = 0usize;
    let steps: Vec<Vec<Edge>> = net
        .edge_lists()
        .into_iter()
        .map(|edges| {
            edges
                .into_iter()
                .filter(|&(i, j, _)| {
                    let lp = i == j;
                    self_loops += lp as usize;
                    !lp
                })
                .collect()
        })
        .collect();
    trace.push(RuleApplication {
        rule: "remove_self_loops".into(),
        pass: 1,
        removed: self_loops,
    });

    let mut aggregated: Vec<(usize, usize)> = steps
        .iter()
        .flatten()
        .map(|&(i, j, _)| (i as usize, j as usize))
        .collect();
    aggregated.sort_unstable();
    aggregated.dedup();

    let mut alive = vec![true; n];
    let mut pass = 0;
    loop {
        pass += 1;
        let removed_deg = degree_filter(&aggregated, &mut alive);
        trace.push(RuleApplication {
            rule: "require_in_and_out_edge".into(),
            pass,
            removed: removed_deg,
        });
        let removed_gc = giant_component(&aggregated, &mut alive);
        trace.push(RuleApplication {
            rule: "giant_weak_component".into(),
            pass,
            removed: removed_gc,
        });
        if removed_deg + removed_gc == 0 {
            break;
        }
    }

    let kept: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    if kept.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    let mut new_index = vec![u32::MAX; n];
    for (new, &old) in kept.iter().enumerate() {
        new_index[old] = new as u32;
    }
    let remapped: Vec<Vec<Edge>> = steps
        .iter()
        .map(|edges| {
            edges
                .iter()
                .filter(|&&(i, j, _)| alive[i as usize] && alive[j as usize])
                .map(|&(i, j, w)| (new_index[i as usize], new_index[j as usize], w))
                .collect()
        })
        .collect();
    let mut out = TemporalNetwork::from_edges(kept.len(), &remapped)?;
    if let Some(labels) = net.labels() {
        out = out.with_labels(kept.iter().map(|&i| labels[i].clone()).collect())?;
    }

    let report = PreprocessReport {
        original_nodes: n,
        nodes_removed: n - kept.len(),
        self_loops_removed: self_loops,
        component_kept_size: kept.len(),
        rule_trace: trace,
    };
    Ok((out, report))
}

fn degree_filter(edges: &[(usize, usize)], alive: &mut [bool]) -> usize {
    let n = alive.len();
    let mut has_out = vec![false; n];
    let mut has_in = vec![false; n];
    for &(i, j) in edges {
        if alive[i] && alive[j] {
            has_out[i] = true;
            has_in[j] = true;
        }
    }
    let mut removed = 0;
    for i in 0..n {
        if alive[i] && !(has_out[i] && has_in[i]) {
            alive[i] = false;
            removed += 1;
        }
    }
    removed
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Keeps the largest weakly connected component among alive nodes; ties go to
/// the component holding the smallest node index.
fn giant_component(edges: &[(usize, usize)], alive: &mut [bool]) -> usize {
    let n = alive.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for &(i, j) in edges {
        if alive[i] && alive[j] {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                parent[hi] = lo;
            }
        }
    }
    let mut size = vec![0usize; n];
    for i in 0..n {
        if alive[i] {
            let r = find(&mut parent, i);
            size[r] += 1;
        }
    }
    let best = match (0..n).filter(|&r| size[r] > 0).max_by(|&a, &b| size[a].cmp(&size[b]).then(b.cmp(&a))) {
        Some(r) => r,
        None => return 0,
    };
    let mut removed = 0;
    for i in 0..n {
        if alive[i] && find(&mut parent, i) != best {
            alive[i] = false;
            removed += 1;
        }
    }
    removed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::load_edgelist;

    #[test]
    fn only_self_loops_is_empty() {
        let net = TemporalNetwork::from_edges(1, &[vec![(0, 0, 1)]]).unwrap();
        assert!(matches!(preprocess(&net), Err(Error::EmptyNetwork)));
    }

    #[test]
    fn keeps_giant_component() {
        // a<->b, b->e, e->a forms the larger component; c<->d is a smaller pair
        let net = load_edgelist(
            "0 a b\n0 b a\n0 b e\n0 e a\n0 c d\n1 d c\n".as_bytes(),
            true,
        )
        .unwrap();
        let (out, report) = preprocess(&net).unwrap();
        assert_eq!(out.labels().unwrap(), &["a", "b", "e"]);
        assert_eq!(report.component_kept_size, 3);
        assert_eq!(report.nodes_removed, 2);
    }

    #[test]
    fn giant_component_tie_goes_to_lowest_index() {
        let net = load_edgelist("0 a b\n0 b a\n0 c d\n1 d c\n".as_bytes(), true).unwrap();
        let (out, _) = preprocess(&net).unwrap();
        assert_eq!(out.labels().unwrap(), &["a", "b"]);
    }

    #[test]
    fn node_with_only_incoming_edges_is_removed() {
        let net = load_edgelist("0 a b\n0 b a\n0 a c\n1 b c".as_bytes(), true).unwrap();
        let (out, report) = preprocess(&net).unwrap();
        assert_eq!(out.n_nodes(), 2);
        assert_eq!(report.rule_trace[1].removed, 1);
    }

    #[test]
    fn self_loops_are_counted() {
        let net = load_edgelist("0 a a\n0 a b\n0 b a\n1 b b".as_bytes(), true).unwrap();
        let (out, report) = preprocess(&net).unwrap();
        assert_eq!(report.self_loops_removed, 2);
        assert!(!out.has_self_loops());
        assert_eq!(out.n_steps(), 2);
    }

    #[test]
    fn cascading_removals_reach_a_fixpoint() {
        // x has no in-edge; once x is gone y has no in-edge either
        let net = load_edgelist("0 x y\n0 y z\n0 z w\n0 w z".as_bytes(), true).unwrap();
        let (once, _) = preprocess(&net).unwrap();
        assert_eq!(once.labels().unwrap(), &["z", "w"]);
        let (twice, report) = preprocess(&once).unwrap();
        assert_eq!(once, twice);
        assert!(report.is_noop());
    }
}
