//! Cascade feedback scheduler.
//!
//! The budget computation component (BCC) is a two-loop cascade. The outer
//! loop is a PI regulator `R_r(z) = k_rr (z - z_rr) / (z - 1)` acting on the
//! round-duration error `tau_r° - tau_r(k)`; its output `u(k)` is the total
//! CPU time the inner loop should hand out. The inner loop is a diagonal
//! integral regulator with gain `k_pi` per task, driving each task's running
//! time towards `theta°_i u(k)`. The integrator states are the budgets.
//!
//! The process selection component (PSC) activates every task with a positive
//! budget, in round-robin order rotating by one task per round.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::metrics::OpCounts;
use crate::plant::{RoundRecord, Schedule, Slot};
use crate::sim::{ControllerSnapshot, PlantView, SchedulerPolicy};
use crate::task::{TaskSpec, Time};

const THETA_SUM_TOLERANCE: f64 = 1e-9;

/// Round-duration and CPU-fraction set points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetPoints {
    pub tau_r_star: f64,
    pub theta_star: Vec<f64>,
}

impl SetPoints {
    pub fn new(tau_r_star: f64, theta_star: Vec<f64>) -> Result<Self> {
        let sp = SetPoints {
            tau_r_star,
            theta_star,
        };
        sp.validate().map_err(SimError::Config)?;
        Ok(sp)
    }

    /// Fractions proportional to each task's work rate.
    pub fn workload_shares(tau_r_star: f64, specs: &[TaskSpec]) -> Result<Self> {
        let total: f64 = specs.iter().map(TaskSpec::utilization).sum();
        if !(total > 0.0) {
            return Err(SimError::Config("task set has no work".into()));
        }
        let theta = specs.iter().map(|s| s.utilization() / total).collect();
        Self::new(tau_r_star, theta)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.tau_r_star > 0.0) || !self.tau_r_star.is_finite() {
            return Err("tau_r_star must be a positive number".into());
        }
        if self.theta_star.is_empty() {
            return Err("theta_star is empty".into());
        }
        if self.theta_star.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err("every theta_star entry must be >= 0".into());
        }
        let sum: f64 = self.theta_star.iter().sum();
        if (sum - 1.0).abs() > THETA_SUM_TOLERANCE {
            return Err(format!("theta_star must sum to 1 (sums to {sum})"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeGains {
    pub k_rr: f64,
    pub z_rr: f64,
    pub k_pi: f64,
}

impl Default for CascadeGains {
    fn default() -> Self {
        CascadeGains {
            k_rr: 1.4,
            z_rr: 0.88,
            k_pi: 0.25,
        }
    }
}

impl CascadeGains {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !self.k_rr.is_finite() {
            return Err("k_rr must be finite".into());
        }
        if !(self.z_rr > 0.0 && self.z_rr < 1.0) {
            return Err("z_rr must lie in (0, 1)".into());
        }
        if !(self.k_pi > 0.0) || !self.k_pi.is_finite() {
            return Err("k_pi must be > 0".into());
        }
        Ok(())
    }
}

/// Outer PI memory: u(k-1) and e(k-1).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PiState {
    pub output_prev: f64,
    pub error_prev: f64,
}

/// One step of `u(k) = u(k-1) + k_rr (e(k) - z_rr e(k-1))`.
pub fn pi_step(state: PiState, error: f64, gains: &CascadeGains) -> (PiState, f64) {
    let output = state.output_prev + gains.k_rr * (error - gains.z_rr * state.error_prev);
    (
        PiState {
            output_prev: output,
            error_prev: error,
        },
        output,
    )
}

/// One step of an inner integrator. A clamped integrator holds its value.
pub fn integral_step(state: f64, error: f64, k_pi: f64, clamped: bool) -> f64 {
    if clamped {
        state
    } else {
        state + k_pi * error
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub pi: PiState,
    /// Inner integrator states; the unrounded budgets.
    pub integrators: Vec<f64>,
    /// Task index the next PSC rotation starts from.
    pub rr_cursor: usize,
    /// Rounds in which every budget collapsed to zero.
    pub degenerate_rounds: u64,
}

impl ControllerState {
    /// Feedforward start at the set point: u = tau_r°, e = 0 and each
    /// budget at its share of the target round.
    pub fn new(set_points: &SetPoints) -> Self {
        ControllerState {
            pi: PiState {
                output_prev: set_points.tau_r_star,
                error_prev: 0.0,
            },
            integrators: feedforward(set_points),
            rr_cursor: 0,
            degenerate_rounds: 0,
        }
    }
}

fn feedforward(set_points: &SetPoints) -> Vec<f64> {
    set_points
        .theta_star
        .iter()
        .map(|theta| theta * set_points.tau_r_star)
        .collect()
}

/// Clamp at zero, then round half-up to whole time-units.
pub fn quantize_budget(raw: f64) -> Time {
    (raw.max(0.0) + 0.5).floor() as Time
}

#[derive(Debug, Clone, PartialEq)]
pub struct BccOutput {
    pub budgets: Vec<Time>,
    /// Integrators held by anti-windup this step.
    pub frozen: Vec<bool>,
    /// Every budget was zero; the feedforward budgets were used instead.
    pub degenerate: bool,
}

/// Budget computation for the next round from the last round's record.
///
/// An integrator is frozen when its budget sits at the zero clamp and the
/// error pushes it further down, or when the error asks for more time but the
/// task did not use what it was given (its delta_b was negative).
pub fn bcc_compute(
    state: &mut ControllerState,
    set_points: &SetPoints,
    gains: &CascadeGains,
    last: Option<&RoundRecord>,
    ops: &mut OpCounts,
) -> BccOutput {
    let n = set_points.theta_star.len();
    let mut frozen = vec![false; n];
    if let Some(rec) = last {
        let error_r = set_points.tau_r_star - rec.tau_r as f64;
        ops.sub += 1;
        let (pi, u) = pi_step(state.pi, error_r, gains);
        // e - z e_prev, k (...), u_prev + ...
        ops.mul += 2;
        ops.sub += 1;
        ops.sum += 1;
        state.pi = pi;
        for i in 0..n {
            let reference = set_points.theta_star[i] * u;
            let error = reference - rec.tau_p[i] as f64;
            ops.mul += 2;
            ops.sub += 1;
            let current = state.integrators[i];
            let clamped = (error > 0.0 && rec.delta_b[i] < 0) || (error < 0.0 && current <= 0.0);
            frozen[i] = clamped;
            if !clamped {
                ops.sum += 1;
            }
            state.integrators[i] = integral_step(current, error, gains.k_pi, clamped);
        }
    }
    let mut budgets: Vec<Time> = state.integrators.iter().map(|&b| quantize_budget(b)).collect();
    let degenerate = budgets.iter().all(|&b| b == 0);
    if degenerate {
        state.degenerate_rounds += 1;
        state.integrators = feedforward(set_points);
        state.pi = PiState {
            output_prev: set_points.tau_r_star,
            error_prev: 0.0,
        };
        budgets = state.integrators.iter().map(|&b| quantize_budget(b)).collect();
    }
    BccOutput {
        budgets,
        frozen,
        degenerate,
    }
}

/// Round-robin selection of the positive-budget tasks, starting at the
/// cursor. The cursor advances by one task per call.
pub fn psc_select(budgets: &[Time], state: &mut ControllerState, round: u64, ops: &mut OpCounts) -> Schedule {
    let n = budgets.len();
    let mut entries = Vec::with_capacity(n);
    for j in 0..n {
        let task = (state.rr_cursor + j) % n;
        ops.shift += 1;
        if budgets[task] > 0 {
            entries.push(Slot {
                task,
                budget: budgets[task],
            });
        }
    }
    if n > 0 {
        state.rr_cursor = (state.rr_cursor + 1) % n;
    }
    Schedule::new(round, entries)
}

/// The PSC+BCC scheduler as a [`SchedulerPolicy`].
///
/// Rounds are reservations: time a task leaves unused turns into idle slack
/// at the end of the round, so the round lasts the sum of its budgets.
#[derive(Debug, Clone)]
pub struct CascadePolicy {
    pub set_points: SetPoints,
    pub gains: CascadeGains,
    pub state: ControllerState,
}

impl CascadePolicy {
    pub fn new(set_points: SetPoints, gains: CascadeGains) -> Result<Self> {
        gains.validate().map_err(SimError::Config)?;
        set_points.validate().map_err(SimError::Config)?;
        let state = ControllerState::new(&set_points);
        Ok(CascadePolicy {
            set_points,
            gains,
            state,
        })
    }
}

impl SchedulerPolicy for CascadePolicy {
    fn name(&self) -> String {
        format!("PSC+BCC tau_r={}", self.set_points.tau_r_star)
    }

    fn schedule(&mut self, view: &PlantView<'_>, ops: &mut OpCounts) -> Result<Schedule> {
        if view.n() != self.set_points.theta_star.len() {
            return Err(SimError::Config(format!(
                "theta_star has {} entries for {} tasks",
                self.set_points.theta_star.len(),
                view.n()
            )));
        }
        let out = bcc_compute(&mut self.state, &self.set_points, &self.gains, view.last, ops);
        let mut schedule = psc_select(&out.budgets, &mut self.state, view.round, ops);
        schedule.min_length = out.budgets.iter().sum();
        Ok(schedule)
    }

    fn snapshot(&self) -> Option<ControllerSnapshot> {
        Some(ControllerSnapshot {
            u: self.state.pi.output_prev,
            c: self.state.integrators.clone(),
        })
    }
}
