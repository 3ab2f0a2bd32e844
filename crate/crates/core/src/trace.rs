//! Per-iterate measurements recorded by the solvers, and their CSV form.

use std::io::{self, Write};

/// Column order of the trace CSV.
pub const CSV_HEADER: &str = "algorithm,rep,epoch,step,ifo,wall_ms,cost,grad_norm,gap,test_mse,batch_size,step_size";

/// One measurement row.
///
/// `epoch = 0, step = 0` is the initial point. For double-loop solvers
/// `(epoch, step)` is `(s, t + 1)` after the update that produced
/// `x_{t+1}^s`; single-loop solvers use epoch `⌊k/p⌋ + 1` and step `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub algorithm: String,
    pub rep: usize,
    pub epoch: usize,
    pub step: usize,
    /// Cumulative component-gradient evaluations.
    pub ifo: u64,
    pub wall_ms: Option<f64>,
    pub cost: f64,
    pub grad_norm: f64,
    pub gap: Option<f64>,
    pub test_mse: Option<f64>,
    pub batch_size: usize,
    pub step_size: Option<f64>,
    /// `‖v‖` of the direction used for this step. Kept in memory only.
    pub estimator_norm: Option<f64>,
}

/// Bookkeeping for one outer epoch (or one refresh window of a
/// single-loop solver).
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSummary {
    pub epoch: usize,
    /// `B^s`, the reference batch size.
    pub batch_size: usize,
    /// `m_s`, inner steps actually taken.
    pub inner_steps: usize,
    /// `b_s`, minibatch size of the estimator steps.
    pub minibatch: usize,
    /// Statistic handed to the next epoch's batch-size rule.
    pub beta: f64,
    /// Cumulative IFO at the end of the epoch.
    pub ifo: u64,
    /// `‖v_t‖` of every estimator computed in the epoch, in order.
    pub estimator_norms: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub algorithm: String,
    pub rep: usize,
    pub records: Vec<TraceRecord>,
    pub epochs: Vec<EpochSummary>,
    /// Free-form notes (skipped steps, clipped gaps, ...).
    pub events: Vec<String>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TraceRecord {
    /// One CSV line, without the trailing newline. Missing metrics are
    /// empty fields.
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.rep,
            self.epoch,
            self.step,
            self.ifo,
            opt(self.wall_ms),
            self.cost,
            self.grad_norm,
            opt(self.gap),
            opt(self.test_mse),
            self.batch_size,
            opt(self.step_size),
        )
    }
}

impl Trace {
    pub fn new(algorithm: impl Into<String>, rep: usize) -> Self {
        Self { algorithm: algorithm.into(), rep, ..Default::default() }
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn total_ifo(&self) -> u64 {
        self.records.last().map_or(0, |r| r.ifo)
    }

    /// First cumulative IFO at which the recorded gap is at or below `target`.
    pub fn ifo_to_gap(&self, target: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.gap.is_some_and(|g| g <= target))
            .map(|r| r.ifo)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> io::Result<()> {
        if header {
            writeln!(w, "{CSV_HEADER}")?;
        }
        for r in &self.records {
            writeln!(w, "{}", r.csv_line())?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, true).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace CSV is ASCII")
    }
}
