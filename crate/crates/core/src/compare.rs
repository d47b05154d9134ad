//! Round-by-round comparison of two traces over the same task set.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::plant::RoundRecord;
use crate::task::Time;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDelta {
    pub k: u64,
    /// `b - a` for the round duration.
    pub tau_r: Time,
    /// `b - a` of each task's share of the round's busy time.
    pub shares: Vec<f64>,
    pub switches: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDiff {
    pub tasks: usize,
    pub rounds_a: usize,
    pub rounds_b: usize,
    /// Rounds (among the common prefix) where the two traces differ.
    pub deltas: Vec<RoundDelta>,
    /// First round index at which the records differ in any field.
    pub first_divergence: Option<u64>,
    pub total_switches_a: u64,
    pub total_switches_b: u64,
    /// `b / a` of total switches; `None` when `a` has none.
    pub switch_ratio: Option<f64>,
    pub mean_tau_r_a: f64,
    pub mean_tau_r_b: f64,
}

impl TraceDiff {
    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty() && self.rounds_a == self.rounds_b && self.first_divergence.is_none()
    }
}

fn shares(r: &RoundRecord) -> Vec<f64> {
    let busy = r.busy();
    r.tau_p
        .iter()
        .map(|&x| if busy > 0 { x as f64 / busy as f64 } else { 0.0 })
        .collect()
}

fn mean_tau_r(records: &[RoundRecord]) -> f64 {
    if records.is_empty() {
        0.0
    } else {
        records.iter().map(|r| r.tau_r as f64).sum::<f64>() / records.len() as f64
    }
}

pub fn compare_traces(a: &[RoundRecord], b: &[RoundRecord]) -> Result<TraceDiff> {
    let width = |recs: &[RoundRecord]| recs.first().map(|r| r.tau_p.len());
    let tasks = match (width(a), width(b)) {
        (Some(x), Some(y)) if x != y => {
            return Err(SimError::Config(format!("traces have {x} and {y} tasks")));
        }
        (Some(x), _) | (None, Some(x)) => x,
        (None, None) => 0,
    };
    if a.iter().chain(b).any(|r| r.tau_p.len() != tasks) {
        return Err(SimError::Config("trace rows have inconsistent task counts".into()));
    }
    let mut deltas = Vec::new();
    let mut first_divergence = None;
    for (ra, rb) in a.iter().zip(b) {
        if ra != rb && first_divergence.is_none() {
            first_divergence = Some(ra.k);
        }
        let sa = shares(ra);
        let sb = shares(rb);
        let ds: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| y - x).collect();
        let dt = rb.tau_r - ra.tau_r;
        let dsw = rb.context_switches as i64 - ra.context_switches as i64;
        if dt != 0 || dsw != 0 || ds.iter().any(|&d| d != 0.0) {
            deltas.push(RoundDelta {
                k: ra.k,
                tau_r: dt,
                shares: ds,
                switches: dsw,
            });
        }
    }
    if first_divergence.is_none() && a.len() != b.len() {
        first_divergence = Some(a.len().min(b.len()) as u64 + 1);
    }
    let total_switches_a: u64 = a.iter().map(|r| r.context_switches).sum();
    let total_switches_b: u64 = b.iter().map(|r| r.context_switches).sum();
    Ok(TraceDiff {
        tasks,
        rounds_a: a.len(),
        rounds_b: b.len(),
        deltas,
        first_divergence,
        total_switches_a,
        total_switches_b,
        switch_ratio: (total_switches_a > 0).then(|| total_switches_b as f64 / total_switches_a as f64),
        mean_tau_r_a: mean_tau_r(a),
        mean_tau_r_b: mean_tau_r(b),
    })
}
