//! Experiment execution: every optimizer × repetition, one trace file per
//! run, a summary table derived from the traces alone.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rvr::error::Error;
use rvr::manifold::{random_point, ManifoldPoint};
use rvr::optimizers::sampling::{self, tag};
use rvr::optimizers::{c_beta_from_variance, run_monitored, Monitor};
use rvr::trace::Trace;

use crate::config::{ExperimentConfig, OracleMode, OptimizerSpec};
use crate::error::{HarnessError, Result};
use crate::instance::Instance;
use crate::oracle::OracleResult;
use crate::plot::emit_plot_data;

/// Gap targets of the summary's "IFO to gap" columns.
pub const GAP_TARGETS: [f64; 7] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Diverged { epoch: usize, step: usize, reason: String },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub label: String,
    pub rep: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub trace: Trace,
    /// Selected output of a completed run.
    pub output: Option<ManifoldPoint>,
}

/// Per-run summary. Every field is a fold over the trace plus the status.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub rep: usize,
    pub diverged: bool,
    pub records: usize,
    pub total_ifo: u64,
    pub final_cost: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub final_gap: Option<f64>,
    pub final_test_mse: Option<f64>,
    pub ifo_to_gap: [Option<u64>; GAP_TARGETS.len()],
}

pub const SUMMARY_HEADER: &str = "algorithm,rep,status,records,total_ifo,final_cost,final_grad_norm,final_gap,final_test_mse,\
ifo_to_gap_1e-2,ifo_to_gap_1e-3,ifo_to_gap_1e-4,ifo_to_gap_1e-5,ifo_to_gap_1e-6,ifo_to_gap_1e-7,ifo_to_gap_1e-8";

pub fn summarize(trace: &Trace, diverged: bool) -> SummaryRow {
    let last = trace.last();
    SummaryRow {
        algorithm: trace.algorithm.clone(),
        rep: trace.rep,
        diverged,
        records: trace.records.len(),
        total_ifo: trace.total_ifo(),
        final_cost: last.map(|r| r.cost),
        final_grad_norm: last.map(|r| r.grad_norm),
        final_gap: last.and_then(|r| r.gap),
        final_test_mse: last.and_then(|r| r.test_mse),
        ifo_to_gap: GAP_TARGETS.map(|g| trace.ifo_to_gap(g)),
    }
}

fn field<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SummaryRow {
    pub fn csv_line(&self) -> String {
        let mut s = format!(
            "{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.rep,
            if self.diverged { "diverged" } else { "ok" },
            self.records,
            self.total_ifo,
            field(self.final_cost),
            field(self.final_grad_norm),
            field(self.final_gap),
            field(self.final_test_mse),
        );
        for v in &self.ifo_to_gap {
            write!(s, ",{}", field(*v)).expect("writing to a String cannot fail");
        }
        s
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<RunOutcome>,
    pub summary: Vec<SummaryRow>,
    /// The oracle used for the gap column, if any.
    pub oracle: Option<OracleResult>,
}

impl ExperimentReport {
    pub fn diverged(&self) -> usize {
        self.runs.iter().filter(|r| r.status != RunStatus::Completed).count()
    }
}

/// Initial point of repetition `seed`, shared by all optimizers.
pub fn initial_point(instance: &Instance, seed: u64) -> Result<ManifoldPoint> {
    Ok(random_point(instance.problem().manifold(), &mut sampling::stream(seed, tag::INITIAL_POINT, 0, 0))?)
}

/// The oracle for the gap column, or `None` when disabled or uncertified.
pub fn certified_oracle(instance: &Instance, mode: OracleMode) -> Result<Option<OracleResult>> {
    if mode == OracleMode::None {
        return Ok(None);
    }
    let oracle = instance.oracle()?;
    if oracle.is_certified() {
        Ok(Some(oracle))
    } else {
        log::warn!(
            "oracle gradient norm {:e} is not certified; the gap column is omitted",
            oracle.grad_norm
        );
        Ok(None)
    }
}

/// One optimizer on one repetition. Divergence is a status, not an error.
pub fn run_single(
    instance: &Instance,
    config: &ExperimentConfig,
    spec: &OptimizerSpec,
    oracle: Option<&OracleResult>,
    rep: usize,
) -> Result<RunOutcome> {
    let seed = config.seeds[rep];
    let problem = instance.problem();
    let x0 = initial_point(instance, seed)?;
    let c_beta = match spec.alpha1 {
        Some(a) => Some(c_beta_from_variance(problem, &x0, a)?),
        None => None,
    };
    let opt = spec.to_config(&config.budget, seed, c_beta, config.trace_stride)?;
    let metric = |x: &ManifoldPoint| instance.test_metric(x).unwrap_or(Ok(f64::NAN));
    let has_metric = instance.test_metric(&x0).is_some();
    let monitor = Monitor {
        rep,
        optimal_cost: oracle.map(|o| o.cost),
        test_metric: if has_metric { Some(&metric) } else { None },
        timing: config.timing,
    };
    let label = opt.label();
    match run_monitored(problem, &x0, &opt, &monitor) {
        Ok(res) => Ok(RunOutcome {
            label,
            rep,
            seed,
            status: RunStatus::Completed,
            trace: res.trace,
            output: Some(res.output),
        }),
        Err(Error::Divergence { epoch, step, reason, trace }) => {
            log::warn!("{label} rep {rep} diverged at epoch {epoch}, step {step}: {reason}");
            Ok(RunOutcome {
                label,
                rep,
                seed,
                status: RunStatus::Diverged { epoch, step, reason },
                trace: *trace,
                output: None,
            })
        }
        Err(e) => Err(e.into()),
    }
}

/// File-name-safe form of a label.
pub fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn trace_path(dir: &Path, label: &str, rep: usize) -> PathBuf {
    dir.join("traces").join(format!("{}_rep{rep}.csv", file_stem(label)))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Run every optimizer on every repetition. With `out_dir`, writes
/// `traces/<label>_rep<k>.csv`, `summary.csv`, `plot_data.csv`,
/// `plot.gp`, `events.log` and (with an oracle) `oracle.json`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    config.validate()?;
    let instance = config.instance()?;
    let oracle = certified_oracle(&instance, config.oracle)?;
    let mut runs = Vec::with_capacity(config.optimizers.len() * config.seeds.len());
    for rep in 0..config.seeds.len() {
        for spec in &config.optimizers {
            runs.push(run_single(&instance, config, spec, oracle.as_ref(), rep)?);
        }
    }
    let summary: Vec<SummaryRow> =
        runs.iter().map(|r| summarize(&r.trace, r.status != RunStatus::Completed)).collect();
    let report = ExperimentReport { runs, summary, oracle };
    if let Some(dir) = out_dir {
        write_outputs(dir, &report)?;
    }
    Ok(report)
}

fn write_outputs(dir: &Path, report: &ExperimentReport) -> Result<()> {
    let traces = dir.join("traces");
    fs::create_dir_all(&traces).map_err(|e| HarnessError::io(&traces, e))?;
    let mut events = String::new();
    for run in &report.runs {
        write(&trace_path(dir, &run.label, run.rep), &run.trace.to_csv_string())?;
        for e in &run.trace.events {
            writeln!(events, "{} rep {}: {e}", run.label, run.rep).expect("writing to a String cannot fail");
        }
        if let RunStatus::Diverged { epoch, step, reason } = &run.status {
            writeln!(events, "{} rep {}: diverged at epoch {epoch}, step {step}: {reason}", run.label, run.rep)
                .expect("writing to a String cannot fail");
        }
    }
    write(&dir.join("events.log"), &events)?;
    write(&dir.join("summary.csv"), &summary_csv(&report.summary))?;
    let traces: Vec<Trace> = report.runs.iter().map(|r| r.trace.clone()).collect();
    let plot = emit_plot_data(&traces);
    write(&dir.join("plot_data.csv"), &plot.csv)?;
    write(&dir.join("plot.gp"), &plot.script)?;
    if let Some(o) = &report.oracle {
        write(&dir.join("oracle.json"), &serde_json::to_string_pretty(&o.to_json())?)?;
    }
    Ok(())
}
