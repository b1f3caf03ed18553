//! Per-iteration diagnostics emitted to a caller-supplied sink.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::objective::CostBreakdown;

/// One line of a convergence trace. Inner ADMM iterations carry `inner >= 1`
/// and no cost; the record closing an outer iteration has `inner == 0` and
/// the cost at the committed iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub outer: usize,
    pub inner: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostBreakdown>,
    /// `||D z - u||_2`
    pub primal_residual: f64,
    /// Projected gradient infinity norm returned by the smooth solver.
    pub grad_norm: f64,
    pub inner_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub change: Option<f64>,
}

pub trait TraceSink {
    fn record(&mut self, record: &TraceRecord);
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoTrace;

impl TraceSink for NoTrace {
    fn record(&mut self, _: &TraceRecord) {}
}

impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, record: &TraceRecord) {
        self.push(record.clone());
    }
}

/// Writes one JSON object per line. Write errors are counted, not raised, so
/// a full disk cannot abort a solve.
#[derive(Debug)]
pub struct JsonLinesSink<W: Write> {
    writer: W,
    pub write_errors: usize,
}

impl<W: Write> JsonLinesSink<W> {
    pub fn new(writer: W) -> Self {
        Self {
            writer,
            write_errors: 0,
        }
    }

    pub fn into_inner(mut self) -> W {
        let _ = self.writer.flush();
        self.writer
    }
}

impl<W: Write> TraceSink for JsonLinesSink<W> {
    fn record(&mut self, record: &TraceRecord) {
        let ok = serde_json::to_writer(&mut self.writer, record).is_ok() && self.writer.write_all(b"\n").is_ok();
        if !ok {
            self.write_errors += 1;
        }
    }
}
