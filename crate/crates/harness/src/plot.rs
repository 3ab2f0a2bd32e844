//! Long-format plot data and a gnuplot script to render it.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::BufRead;

use rvr::trace::{Trace, TraceRecord, CSV_HEADER};

use crate::error::{HarnessError, Result};

/// Columns best read on a logarithmic axis.
pub const LOG_SCALE_COLUMNS: [&str; 3] = ["gap", "grad_norm", "test_mse"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    /// One row per trace record, keyed by `(algorithm, rep, ifo)`, with
    /// the trace CSV columns.
    pub csv: String,
    /// gnuplot script reading `plot_data.csv`.
    pub script: String,
}

pub fn emit_plot_data(traces: &[Trace]) -> PlotData {
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for t in traces {
        for r in &t.records {
            csv.push_str(&r.csv_line());
            csv.push('\n');
        }
    }
    let labels: BTreeSet<&str> = traces.iter().map(|t| t.algorithm.as_str()).collect();
    let has = |pick: fn(&TraceRecord) -> bool| traces.iter().any(|t| t.records.iter().any(pick));
    let cols = CSV_HEADER.split(',').collect::<Vec<_>>();
    let col = |name: &str| cols.iter().position(|c| *c == name).expect("known column") + 1;
    let mut panels = vec![("cost", col("cost")), ("grad_norm", col("grad_norm"))];
    if has(|r| r.gap.is_some()) {
        panels.push(("gap", col("gap")));
    }
    if has(|r| r.test_mse.is_some()) {
        panels.push(("test_mse", col("test_mse")));
    }

    let mut script = String::new();
    let w = &mut script;
    let _ = writeln!(w, "# Render with: gnuplot plot.gp");
    let _ = writeln!(w, "set datafile separator ','");
    let _ = writeln!(w, "set datafile missing ''");
    let _ = writeln!(w, "set key autotitle columnhead");
    let _ = writeln!(w, "set terminal pngcairo size 900,600");
    let _ = writeln!(w, "set xlabel 'IFO'");
    let ifo = col("ifo");
    for (name, c) in panels {
        let _ = writeln!(w, "\nset output '{name}_vs_ifo.png'");
        let _ = writeln!(w, "set ylabel '{name}'");
        if LOG_SCALE_COLUMNS.contains(&name) {
            let _ = writeln!(w, "set logscale y");
        } else {
            let _ = writeln!(w, "unset logscale y");
        }
        let plots: Vec<String> = labels
            .iter()
            .map(|l| format!("'plot_data.csv' using (strcol(1) eq '{l}' && $2 == 0 ? ${ifo} : NaN):{c} with lines title '{l}'"))
            .collect();
        let _ = writeln!(w, "plot {}", plots.join(", \\\n     "));
    }
    PlotData { csv, script }
}

fn parse<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| HarnessError::Config(format!("line {line}: bad {what} `{s}`")))
}

fn parse_opt(s: &str, what: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse(s, what, line).map(Some)
    }
}

/// Read a trace CSV back. `estimator_norm` is not stored and comes back
/// as `None`.
pub fn read_trace_csv(r: impl BufRead) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io("trace", e))?;
        if i == 0 {
            if line != CSV_HEADER {
                return Err(HarnessError::Config(format!("unexpected trace header `{line}`")));
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(HarnessError::Config(format!("line {}: expected 12 fields, found {}", i + 1, f.len())));
        }
        let n = i + 1;
        out.push(TraceRecord {
            algorithm: f[0].to_string(),
            rep: parse(f[1], "rep", n)?,
            epoch: parse(f[2], "epoch", n)?,
            step: parse(f[3], "step", n)?,
            ifo: parse(f[4], "ifo", n)?,
            wall_ms: parse_opt(f[5], "wall_ms", n)?,
            cost: parse(f[6], "cost", n)?,
            grad_norm: parse(f[7], "grad_norm", n)?,
            gap: parse_opt(f[8], "gap", n)?,
            test_mse: parse_opt(f[9], "test_mse", n)?,
            batch_size: parse(f[10], "batch_size", n)?,
            step_size: parse_opt(f[11], "step_size", n)?,
            estimator_norm: None,
        });
    }
    Ok(out)
}
