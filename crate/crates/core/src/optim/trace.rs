use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const TRACE_CSV_HEADER: &str = "t,eta,alpha,frob_norm,reward,error";

/// One sampled iteration. `reward` is the stochastic reward seen at step `t`
/// (absent for the final state), `error` the recovery error of the current
/// eigenvector estimate when it was computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub eta: f64,
    pub alpha: f64,
    pub frob_norm: f64,
    pub reward: Option<f64>,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record; `t` must exceed the last recorded `t`.
    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.t < record.t));
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.alpha)
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// CSV with header `t,eta,alpha,frob_norm,reward,error`; missing values
    /// are empty fields. Floats use the shortest round-trip form (`{:?}`).
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.records.len() + 1));
        s.push_str(TRACE_CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = write!(s, "{},{:?},{:?},{:?},", r.t, r.eta, r.alpha, r.frob_norm);
            if let Some(x) = r.reward {
                let _ = write!(s, "{x:?}");
            }
            s.push(',');
            if let Some(x) = r.error {
                let _ = write!(s, "{x:?}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}
