//! Task parameters and per-task execution state.

use serde::{Deserialize, Serialize};

/// Discrete simulation time, in time-units.
///
/// Signed so that disturbances (actual minus budget) share the same type.
pub type Time = i64;

/// CPU time needed to complete one Kilo-Whet of work.
pub const TIME_UNITS_PER_KILO_WHET: Time = 25;

/// Period of a 1 Hz task.
pub const TIME_UNITS_PER_SECOND: Time = 20_000;

/// Static parameters of one periodic task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    /// 1-based identifier, equal to the task's position in the set plus one.
    pub id: usize,
    /// Period in time-units. Deadlines coincide with the next release.
    pub period: Time,
    /// CPU work released at each period boundary, in time-units.
    pub work: Time,
    /// Fairness weight. Defaults to the work rate `work / period`.
    pub weight: f64,
}

impl TaskSpec {
    pub fn new(id: usize, period: Time, work: Time) -> Self {
        let weight = if period > 0 {
            work as f64 / period as f64
        } else {
            0.0
        };
        TaskSpec {
            id,
            period,
            work,
            weight,
        }
    }

    /// Task whose work is given in Kilo-Whets per period.
    pub fn from_kilo_whets(id: usize, period: Time, kilo_whets: u32) -> Self {
        Self::new(id, period, Time::from(kilo_whets) * TIME_UNITS_PER_KILO_WHET)
    }

    pub fn utilization(&self) -> f64 {
        self.work as f64 / self.period as f64
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.period <= 0 {
            return Err(format!("task {}: period must be > 0", self.id));
        }
        if self.work < 0 {
            return Err(format!("task {}: work must be >= 0", self.id));
        }
        if !(self.weight >= 0.0) {
            return Err(format!("task {}: weight must be >= 0", self.id));
        }
        Ok(())
    }
}

/// Total demanded CPU fraction of a task set.
pub fn utilization(specs: &[TaskSpec]) -> f64 {
    specs.iter().map(TaskSpec::utilization).sum()
}

/// Dynamic state of one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskState {
    /// Work still owed, in time-units (the remaining execution time rho).
    pub remaining: Time,
    /// Number of period boundaries already processed.
    pub period_index: u64,
    pub cumulative_cpu: Time,
    /// Sticky: set at the first boundary that found unfinished work.
    pub deadline_missed: bool,
    pub misses: u64,
}

impl TaskState {
    /// State at time zero: every task is released simultaneously.
    pub fn released(spec: &TaskSpec) -> Self {
        TaskState {
            remaining: spec.work,
            period_index: 0,
            cumulative_cpu: 0,
            deadline_missed: false,
            misses: 0,
        }
    }

    /// Absolute time of this task's next release, which is also the deadline
    /// of its current work.
    pub fn next_release(&self, spec: &TaskSpec) -> Time {
        (self.period_index as Time + 1) * spec.period
    }
}

pub fn initial_states(specs: &[TaskSpec]) -> Vec<TaskState> {
    specs.iter().map(TaskState::released).collect()
}

/// One processed period boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    /// 0-based task index.
    pub task: usize,
    pub time: Time,
    pub missed: bool,
}

/// Processes every period boundary at or before `now` (absolute time since
/// the common release at t = 0).
///
/// Each boundary adds one period's work to `remaining`; a boundary that finds
/// `remaining > 0` is a deadline miss. Unfinished work is carried over.
/// Returned boundaries are ordered by time, then task index.
pub fn advance_periods(specs: &[TaskSpec], states: &mut [TaskState], now: Time) -> Vec<Boundary> {
    let mut crossed = Vec::new();
    for (task, (spec, state)) in specs.iter().zip(states.iter_mut()).enumerate() {
        loop {
            let boundary = state.next_release(spec);
            if boundary > now {
                break;
            }
            let missed = state.remaining > 0;
            if missed {
                state.deadline_missed = true;
                state.misses += 1;
            }
            state.remaining += spec.work;
            state.period_index += 1;
            crossed.push(Boundary {
                task,
                time: boundary,
                missed,
            });
        }
    }
    crossed.sort_by_key(|b| (b.time, b.task));
    crossed
}

/// Earliest upcoming release over all tasks.
pub fn next_release(specs: &[TaskSpec], states: &[TaskState]) -> Time {
    specs
        .iter()
        .zip(states)
        .map(|(spec, state)| state.next_release(spec))
        .min()
        .unwrap_or(Time::MAX)
}

fn gcd(a: Time, b: Time) -> Time {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Least common multiple of all periods, or `None` if it overflows `limit`.
pub fn lcm_of_periods(specs: &[TaskSpec], limit: Time) -> Option<Time> {
    let mut acc: Time = 1;
    for spec in specs {
        let g = gcd(acc, spec.period);
        acc = (acc / g).checked_mul(spec.period)?;
        if acc > limit {
            return None;
        }
    }
    Some(acc)
}
