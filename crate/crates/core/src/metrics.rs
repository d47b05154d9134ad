//! Post-hoc analysis of traces and the analytic scheduler-cost model.

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plant::RoundRecord;
use crate::sim::SimulationTrace;
use crate::task::Time;

/// Elementary operations executed by a scheduler during one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OpCounts {
    pub sum: u64,
    pub sub: u64,
    pub mul: u64,
    pub shift: u64,
    pub switch: u64,
}

impl OpCounts {
    pub fn is_zero(&self) -> bool {
        *self == OpCounts::default()
    }

    /// Cost of these operations under `c`.
    pub fn cost(&self, c: &CostConstants) -> f64 {
        self.sum as f64 * c.t_sum
            + self.sub as f64 * c.t_sub
            + self.mul as f64 * c.t_mul
            + self.shift as f64 * c.t_shift
            + self.switch as f64 * c.t_cs
    }
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, o: OpCounts) -> OpCounts {
        OpCounts {
            sum: self.sum + o.sum,
            sub: self.sub + o.sub,
            mul: self.mul + o.mul,
            shift: self.shift + o.shift,
            switch: self.switch + o.switch,
        }
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, o: OpCounts) {
        *self = *self + o;
    }
}

/// Average durations of a sum, subtraction, multiplication, bit shift and
/// light context switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostConstants {
    pub t_sum: f64,
    pub t_sub: f64,
    pub t_mul: f64,
    pub t_shift: f64,
    pub t_cs: f64,
}

impl CostConstants {
    pub fn unit() -> Self {
        CostConstants {
            t_sum: 1.0,
            t_sub: 1.0,
            t_mul: 1.0,
            t_shift: 1.0,
            t_cs: 1.0,
        }
    }

    pub fn scaled(&self, f: f64) -> Self {
        CostConstants {
            t_sum: self.t_sum * f,
            t_sub: self.t_sub * f,
            t_mul: self.t_mul * f,
            t_shift: self.t_shift * f,
            t_cs: self.t_cs * f,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("unknown policy `{0}` (expected rr, srr or psc+bcc)")]
    UnknownPolicy(String),
    #[error("task count must be >= 1")]
    NoTasks,
    #[error("weights must be nonnegative with a positive sum")]
    BadWeights,
    #[error("window must be >= 1 round")]
    BadWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostModel {
    Rr,
    Srr,
    PscBcc,
}

impl CostModel {
    pub fn parse(name: &str) -> Result<Self, MetricsError> {
        match name.to_ascii_lowercase().as_str() {
            "rr" => Ok(CostModel::Rr),
            "srr" => Ok(CostModel::Srr),
            "psc+bcc" | "psc-bcc" | "cascade" => Ok(CostModel::PscBcc),
            _ => Err(MetricsError::UnknownPolicy(name.to_string())),
        }
    }

    /// Operation counts the closed-form model charges for one round.
    pub fn model_ops(self, n: u64) -> OpCounts {
        let base = OpCounts {
            shift: n,
            switch: n,
            ..OpCounts::default()
        };
        match self {
            CostModel::Rr => base,
            CostModel::Srr => OpCounts {
                sub: n * n,
                mul: n * n,
                ..base
            },
            CostModel::PscBcc => OpCounts {
                sub: n + 1,
                sum: 2 * n + 1,
                mul: 2 * n + 2,
                ..base
            },
        }
    }
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostModel::Rr => "RR",
            CostModel::Srr => "SRR",
            CostModel::PscBcc => "PSC+BCC",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    /// Scheduler time per round.
    pub sigma: f64,
    /// Round duration.
    pub round_len: f64,
}

/// Per-round scheduler cost and round length:
///
/// ```text
/// sigma_RR      = N t_shift + N t_cs                      tau_r = N q
/// sigma_SRR     = sigma_RR + N^2 (t_sub + t_mul)          tau_r = N_w q
/// sigma_PSC+BCC = sigma_RR + (N+1) t_sub + (2N+1) t_sum
///                          + (2N+2) t_mul                 tau_r = tau_r°
/// ```
pub fn complexity_estimate(
    policy: &str,
    constants: &CostConstants,
    n: u64,
    quantum: f64,
    n_w: u64,
    tau_r_star: f64,
) -> Result<ComplexityEstimate, MetricsError> {
    let model = CostModel::parse(policy)?;
    if n == 0 {
        return Err(MetricsError::NoTasks);
    }
    let sigma = model.model_ops(n).cost(constants);
    let round_len = match model {
        CostModel::Rr => n as f64 * quantum,
        CostModel::Srr => n_w as f64 * quantum,
        CostModel::PscBcc => tau_r_star,
    };
    Ok(ComplexityEstimate { sigma, round_len })
}

/// Instrumented counts compared with the closed-form model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationReport {
    pub model: CostModel,
    pub rounds: usize,
    /// Mean measured sigma per non-idle round.
    pub measured_sigma: f64,
    pub model_sigma: f64,
    pub totals: OpCounts,
}

/// Per-round operation counts of an instrumented trace.
pub fn operation_counter(trace: &SimulationTrace) -> &[OpCounts] {
    &trace.ops
}

pub fn compare_operations(
    trace: &SimulationTrace,
    model: CostModel,
    constants: &CostConstants,
) -> OperationReport {
    let active: Vec<&OpCounts> = trace.ops.iter().filter(|o| !o.is_zero()).collect();
    let totals = active.iter().fold(OpCounts::default(), |acc, o| acc + **o);
    let measured_sigma = if active.is_empty() {
        0.0
    } else {
        totals.cost(constants) / active.len() as f64
    };
    OperationReport {
        model,
        rounds: active.len(),
        measured_sigma,
        model_sigma: model.model_ops(trace.n() as u64).cost(constants),
        totals,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    /// Window length H; each window spans rounds k..=k+H.
    pub window: usize,
    /// Largest residual of each task over all windows.
    pub per_task: Vec<f64>,
    pub max_residual: f64,
    /// Residuals of every window, one row per window start.
    pub windows: Vec<Vec<f64>>,
    pub diagnostic: Option<String>,
}

/// Deviation from proportional sharing over sliding windows of rounds.
///
/// For window `[k, k+H]` and task `i` the residual is
/// `|sum tau_p,i - sum (p_i / sum_j p_j) busy|`, where `busy` is the CPU
/// time given to tasks in a round (idle slack carries zero weight).
pub fn fairness_residual(
    records: &[RoundRecord],
    weights: &[f64],
    window: usize,
) -> Result<FairnessReport, MetricsError> {
    if window == 0 {
        return Err(MetricsError::BadWindow);
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w >= 0.0)) || !(total > 0.0) {
        return Err(MetricsError::BadWeights);
    }
    let n = weights.len();
    let span = window + 1;
    if records.len() < span {
        return Ok(FairnessReport {
            window,
            per_task: vec![0.0; n],
            max_residual: 0.0,
            windows: Vec::new(),
            diagnostic: Some(format!(
                "trace has {} rounds, a window needs {}",
                records.len(),
                span
            )),
        });
    }
    let mut per_task = vec![0.0f64; n];
    let mut windows = Vec::with_capacity(records.len() - span + 1);
    for slice in records.windows(span) {
        let busy: Time = slice.iter().map(RoundRecord::busy).sum();
        let row: Vec<f64> = (0..n)
            .map(|i| {
                let got: Time = slice.iter().map(|r| r.tau_p[i]).sum();
                (got as f64 - weights[i] / total * busy as f64).abs()
            })
            .collect();
        for (m, r) in per_task.iter_mut().zip(&row) {
            *m = m.max(*r);
        }
        windows.push(row);
    }
    let max_residual = per_task.iter().cloned().fold(0.0, f64::max);
    Ok(FairnessReport {
        window,
        per_task,
        max_residual,
        windows,
        diagnostic: None,
    })
}

/// Per-task share of busy CPU time over rounds `from..=to` (record indices).
pub fn busy_shares(records: &[RoundRecord], from: usize, to: usize) -> Vec<f64> {
    let slice = &records[from..=to];
    let n = slice.first().map_or(0, |r| r.tau_p.len());
    let busy: Time = slice.iter().map(RoundRecord::busy).sum();
    (0..n)
        .map(|i| {
            let got: Time = slice.iter().map(|r| r.tau_p[i]).sum();
            if busy > 0 {
                got as f64 / busy as f64
            } else {
                0.0
            }
        })
        .collect()
}

/// Tasks with no remaining work at the start of each round.
pub fn completed_per_round(records: &[RoundRecord]) -> Vec<usize> {
    records
        .iter()
        .map(|r| r.rho.iter().filter(|&&x| x == 0).count())
        .collect()
}
