use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use dynrecip::eval::ReportRow;
use dynrecip::preprocess::{preprocess, PreprocessReport};
use dynrecip::TemporalNetwork;

use crate::options::InputOpts;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_rows(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["iteration", "objective"])?;
    for (it, value) in trace.iter().enumerate() {
        w.write_record([it.to_string(), value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_network(path: &Path, net: &TemporalNetwork) -> Result<()> {
    let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    let mut out = BufWriter::new(file);
    dynrecip::io::write_edgelist(net, &mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PreprocessOutput {
    #[serde(flatten)]
    pub report: Option<PreprocessReport>,
    /// Node names in the order used by the parameter arrays.
    pub nodes: Vec<String>,
}

/// Reads the edge list and applies preprocessing unless disabled.
pub fn load_input(opts: &InputOpts) -> Result<(TemporalNetwork, PreprocessOutput)> {
    let file = File::open(&opts.input).with_context(|| format!("opening {}", opts.input.display()))?;
    let raw = dynrecip::io::load_edgelist(BufReader::new(file), !opts.weighted)
        .with_context(|| format!("reading {}", opts.input.display()))?;
    let (net, report) = if opts.no_preprocess {
        (raw, None)
    } else {
        let (net, report) = preprocess(&raw)?;
        (net, Some(report))
    };
    let nodes = (0..net.n_nodes()).map(|i| net.label(i)).collect();
    Ok((net, PreprocessOutput { report, nodes }))
}
