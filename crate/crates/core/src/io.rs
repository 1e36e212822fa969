//! Plain-text temporal edge lists.
//!
//! One record per line, `t src dst [weight]`, whitespace separated. Lines
//! starting with `#` are comments. Two comment directives written by
//! [`write_edgelist`] are understood on input so that round trips keep
//! isolated nodes and trailing empty snapshots:
//!
//! ```text
//! # nodes: a b c
//! # steps: 3
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{Edge, TemporalNetwork};

#[derive(Default)]
struct NodeIndex {
    labels: Vec<String>,
    index: HashMap<String, u32>,
}

impl NodeIndex {
    fn get_or_insert(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.labels.len() as u32;
        self.labels.push(name.to_owned());
        self.index.insert(name.to_owned(), i);
        i
    }
}

/// Reads a temporal edge list. Node identifiers are mapped to dense indices in
/// order of first appearance. With `binarize`, every positive weight becomes 1.
pub fn load_edgelist<R: BufRead>(source: R, binarize: bool) -> Result<TemporalNetwork> {
    let mut nodes = NodeIndex::default();
    let mut steps: Vec<Vec<Edge>> = Vec::new();
    let mut declared_steps: Option<usize> = None;

    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(rest) = comment.strip_prefix("nodes:") {
                for name in rest.split_whitespace() {
                    nodes.get_or_insert(name);
                }
            } else if let Some(rest) = comment.strip_prefix("steps:") {
                let n = rest.trim().parse::<usize>().map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad steps directive: {e}"),
                })?;
                declared_steps = Some(n);
            }
            continue;
        }

        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected `t src dst [weight]`, found {} fields", fields.len()),
            });
        }
        let t = parse_int(fields[0], lineno, "time")?;
        if t < 0 {
            return Err(Error::Validation(format!("line {lineno}: negative time {t}")));
        }
        let weight = match fields.get(3) {
            Some(w) => parse_int(w, lineno, "weight")?,
            None => 1,
        };
        if weight < 0 {
            return Err(Error::Validation(format!("line {lineno}: negative weight {weight}")));
        }
        let weight = u32::try_from(weight).map_err(|_| Error::Parse {
            line: lineno,
            message: format!("weight {weight} too large"),
        })?;
        let t = usize::try_from(t).map_err(|_| Error::Parse {
            line: lineno,
            message: "time too large".into(),
        })?;
        let src = nodes.get_or_insert(fields[1]);
        let dst = nodes.get_or_insert(fields[2]);
        if steps.len() <= t {
            steps.resize_with(t + 1, Vec::new);
        }
        if weight > 0 {
            steps[t].push((src, dst, if binarize { 1 } else { weight }));
        }
    }

    if let Some(n) = declared_steps {
        if n < steps.len() {
            return Err(Error::Validation(format!(
                "steps directive says {n} but records reach t={}",
                steps.len() - 1
            )));
        }
        steps.resize_with(n, Vec::new);
    }
    if steps.is_empty() {
        return Err(Error::Validation("edge list contains no snapshots".into()));
    }

    let n_nodes = nodes.labels.len();
    let mut net = TemporalNetwork::from_edges(n_nodes, &steps)?;
    if binarize {
        // summed duplicates may exceed 1
        net = net.binarized();
    }
    net.with_labels(nodes.labels)
}

fn parse_int(field: &str, line: usize, what: &str) -> Result<i64> {
    field.parse::<i64>().map_err(|e| Error::Parse {
        line,
        message: format!("bad {what} `{field}`: {e}"),
    })
}

/// Writes `net` in the format read by [`load_edgelist`], including the node and
/// step directives.
pub fn write_edgelist<W: Write>(net: &TemporalNetwork, mut out: W) -> Result<()> {
    let names: Vec<String> = (0..net.n_nodes()).map(|i| net.label(i)).collect();
    if names.iter().any(|n| n.is_empty() || n.contains(char::is_whitespace) || n.starts_with('#')) {
        return Err(Error::Validation(
            "node labels must be non-empty, without whitespace, and not start with '#'".into(),
        ));
    }
    writeln!(out, "# nodes: {}", names.join(" "))?;
    writeln!(out, "# steps: {}", net.n_steps())?;
    for (t, snap) in net.snapshots().iter().enumerate() {
        for (i, j, w) in snap.edges() {
            writeln!(out, "{t} {} {} {w}", names[i], names[j])?;
        }
    }
    out.flush()?;
    Ok(())
}
