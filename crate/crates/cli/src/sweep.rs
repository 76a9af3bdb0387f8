//! Cartesian parameter sweeps over a scenario template.

use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use leaklab_core::scenario::{run_scenario, ScenarioConfig, METRICS_HEADER};
use leaklab_core::stats::fmt_f64;
use leaklab_core::walk::stream_seed;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::scenario_file::{apply_override, to_config};

pub const DEFAULT_MAX_CELLS: u64 = 1_000_000;
/// Cells simulated before their rows are flushed to disk.
const CHUNK: usize = 256;

/// One swept key and the values it takes, in order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub key: String,
    pub values: Vec<Value>,
}

impl Axis {
    /// Parses `key=start:stop:step` (inclusive of `stop`) or `key=v1,v2,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |why: &str| CliError::Invalid(format!("axis `{spec}`: {why}"));
        let (key, rhs) = spec
            .split_once('=')
            .ok_or_else(|| bad("expected key=start:stop:step"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(bad("empty key"));
        }
        let values = if rhs.contains(':') {
            range_values(rhs).map_err(|why| bad(&why))?
        } else {
            rhs.split(',')
                .map(|v| serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_owned())))
                .collect()
        };
        if values.is_empty() {
            return Err(bad("no values"));
        }
        Ok(Self {
            key: key.to_owned(),
            values,
        })
    }
}

fn range_values(rhs: &str) -> Result<Vec<Value>, String> {
    let parts: Vec<&str> = rhs.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err("a range needs exactly start:stop:step".into());
    };
    if let (Ok(a), Ok(b), Ok(s)) = (start.parse::<i64>(), stop.parse::<i64>(), step.parse::<i64>()) {
        if s <= 0 || b < a {
            return Err("need step > 0 and stop >= start".into());
        }
        let n = (b - a) / s + 1;
        if n as u64 > DEFAULT_MAX_CELLS {
            return Err(format!("{n} values"));
        }
        return Ok((0..n).map(|k| Value::from(a + k * s)).collect());
    }
    let num = |x: &str| x.parse::<f64>().map_err(|_| format!("`{x}` is not a number"));
    let (a, b, s) = (num(start)?, num(stop)?, num(step)?);
    if !(a.is_finite() && b.is_finite() && s.is_finite() && s > 0.0 && b >= a) {
        return Err("need finite bounds, step > 0 and stop >= start".into());
    }
    let n = ((b - a) / s + 1e-9).floor() + 1.0;
    if n > DEFAULT_MAX_CELLS as f64 {
        return Err(format!("{n} values"));
    }
    Ok((0..n as u64)
        .map(|k| {
            // Rounded so that 0.1 + 2 * 0.01 prints as 0.12.
            let x = a + k as f64 * s;
            let x = (x * 1e12).round() / 1e12;
            Value::from(x)
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub template: Value,
    /// Root of the per-cell seeds; defaults to the template's `seed`.
    pub root_seed: Option<u64>,
    pub max_cells: u64,
    /// Keep every n-th epoch in the long-format output.
    pub every: u64,
}

impl SweepSpec {
    pub fn cell_count(&self) -> Result<u64> {
        if self.axes.is_empty() {
            return Err(CliError::Invalid("a sweep needs at least one --axis".into()));
        }
        let n = self
            .axes
            .iter()
            .try_fold(1u64, |acc, a| acc.checked_mul(a.values.len() as u64))
            .unwrap_or(u64::MAX);
        if n > self.max_cells {
            return Err(CliError::Invalid(format!(
                "sweep has {n} cells, more than the cap of {}",
                self.max_cells
            )));
        }
        Ok(n)
    }

    pub fn root(&self) -> u64 {
        self.root_seed
            .or_else(|| self.template.get("seed").and_then(Value::as_u64))
            .unwrap_or(0)
    }

    /// Axis values of cell `index`; the last axis varies fastest.
    pub fn coordinates(&self, mut index: u64) -> Vec<&Value> {
        let mut coords = vec![&Value::Null; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let n = axis.values.len() as u64;
            coords[k] = &axis.values[(index % n) as usize];
            index /= n;
        }
        coords
    }

    pub fn cell_seed(&self, index: u64) -> u64 {
        stream_seed(self.root(), index)
    }

    /// Scenario of cell `index`, validated.
    pub fn cell_config(&self, index: u64) -> Result<ScenarioConfig> {
        let mut doc = self.template.clone();
        for (axis, value) in self.axes.iter().zip(self.coordinates(index)) {
            apply_override(&mut doc, &axis.key, value.clone())?;
        }
        apply_override(&mut doc, "seed", Value::from(self.cell_seed(index)))?;
        to_config(doc).map_err(|e| match e {
            CliError::Invalid(msg) => CliError::Invalid(format!("cell {index}: {msg}")),
            CliError::Core(inner) => CliError::Invalid(format!("cell {index}: {inner}")),
            other => other,
        })
    }
}

/// Output of a finished sweep.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub cells: u64,
    pub files: Vec<PathBuf>,
}

/// Axis values are inputs, printed in their shortest round-trip form.
fn fmt_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

struct CellResult {
    rows: String,
    summary: String,
}

fn run_cell(spec: &SweepSpec, index: u64, cfg: &ScenarioConfig) -> Result<CellResult> {
    let outcome = run_scenario(cfg)?;
    let mut prefix = index.to_string();
    for v in spec.coordinates(index) {
        prefix.push(',');
        prefix.push_str(&fmt_value(v));
    }
    let _ = write!(prefix, ",{}", cfg.seed);

    let mut rows = String::new();
    for m in &outcome.metrics {
        if m.epoch.rem_euclid(spec.every as i64) == 0 {
            let _ = writeln!(rows, "{prefix},{}", m.csv_row());
        }
    }
    let opt = |x: Option<i64>| x.map(|v| v.to_string()).unwrap_or_default();
    let summary = format!(
        "{prefix},{},{},{},{},{}\n",
        outcome.exit_code(),
        opt(outcome.verdict.epoch_of_violation),
        opt(outcome.byz_over_third_epoch),
        fmt_f64(outcome.peak_byz_share),
        outcome.final_epoch
    );
    Ok(CellResult { rows, summary })
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

/// Runs every cell and writes `sweep.csv` (one row per cell per kept
/// epoch and branch), `cells.csv` (one row per cell) and `sweep.json`.
/// Cells run in parallel on the current rayon pool; output order is fixed.
pub fn run_sweep(spec: &SweepSpec, out: &Path) -> Result<SweepReport> {
    if spec.every == 0 {
        return Err(CliError::Invalid("--every must be at least 1".into()));
    }
    let cells = spec.cell_count()?;
    // Reject bad cells before any simulation starts.
    let configs = (0..cells).map(|i| spec.cell_config(i)).collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;

    let keys: String = spec.axes.iter().map(|a| format!(",{}", a.key)).collect();
    let long_path = out.join("sweep.csv");
    let cells_path = out.join("cells.csv");
    let mut long = create(&long_path)?;
    let mut summary = create(&cells_path)?;
    let io_long = |e| CliError::io(&long_path, e);
    let io_cells = |e| CliError::io(&cells_path, e);
    writeln!(long, "cell{keys},seed,{METRICS_HEADER}").map_err(io_long)?;
    writeln!(
        summary,
        "cell{keys},seed,exit_code,violation_epoch,byz_over_third_epoch,peak_byz_share,final_epoch"
    )
    .map_err(io_cells)?;

    for (chunk_no, chunk) in configs.chunks(CHUNK).enumerate() {
        let base = (chunk_no * CHUNK) as u64;
        let results = chunk
            .par_iter()
            .enumerate()
            .map(|(k, cfg)| run_cell(spec, base + k as u64, cfg))
            .collect::<Result<Vec<_>>>()?;
        for r in results {
            long.write_all(r.rows.as_bytes()).map_err(io_long)?;
            summary.write_all(r.summary.as_bytes()).map_err(io_cells)?;
        }
    }
    long.flush().map_err(io_long)?;
    summary.flush().map_err(io_cells)?;

    let sidecar = json!({
        "axes": spec.axes,
        "cells": cells,
        "root_seed": spec.root(),
        "every": spec.every,
        "template": spec.template,
        "files": ["sweep.csv", "cells.csv"],
    });
    let sidecar_path = out.join("sweep.json");
    crate::write_file(
        &sidecar_path,
        &(serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n"),
    )?;
    Ok(SweepReport {
        cells,
        files: vec![long_path, cells_path, sidecar_path],
    })
}
