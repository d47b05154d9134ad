//! The controlled plant: a single processor executing one round's schedule.
//!
//! A round runs its entries back to back in list order. Each entry runs until
//! its budget (plus any exogenous disturbance) is used up or the task runs out
//! of work, whichever comes first; in the latter case the task yields and the
//! freed time goes to the next entry. Period boundaries are processed at the
//! exact time-unit they fall on, also in the middle of a slot.
//!
//! Observables follow the recurrences
//!
//! ```text
//! tau_p(k) = s(k-1) + delta_b(k-1)
//! tau_r(k) = r1 * tau_p(k)        (measured indexing, default)
//!          = r1 * tau_p(k-1)      (literal indexing)
//! t(k)     = t(k-1) + tau_r(k-1)
//! ```
//!
//! where record `k` describes the round executed with schedule `s(k-1)` and
//! `r1` also counts the zero-weight idle slack of the round.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::task::{advance_periods, initial_states, next_release, Boundary, TaskSpec, TaskState, Time};

/// One activation: a task index (0-based) and its budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub task: usize,
    pub budget: Time,
}

/// One round's ordered activations, the controller output s(k) = S(k) b(k).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Schedule {
    pub round: u64,
    pub entries: Vec<Slot>,
    /// The plant idles at the end of the round until it has lasted at least
    /// this long. Zero for work-conserving policies.
    pub min_length: Time,
}

impl Schedule {
    pub fn new(round: u64, entries: Vec<Slot>) -> Self {
        Schedule {
            round,
            entries,
            min_length: 0,
        }
    }

    /// Round with no activations that idles for `length` time-units.
    pub fn idle(round: u64, length: Time) -> Self {
        Schedule {
            round,
            entries: Vec::new(),
            min_length: length,
        }
    }

    /// n(k): number of entries with a positive budget.
    pub fn selected(&self) -> usize {
        self.entries.iter().filter(|s| s.budget > 0).count()
    }

    /// Dense budget vector s(k) over `n` tasks.
    pub fn budgets(&self, n: usize) -> Vec<Time> {
        let mut dense = vec![0; n];
        for slot in &self.entries {
            if slot.task < n {
                dense[slot.task] += slot.budget;
            }
        }
        dense
    }

    fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for slot in &self.entries {
            if slot.task >= n {
                return Err(SimError::policy(
                    self.round,
                    format!("unknown task index {}", slot.task),
                ));
            }
            if slot.budget < 0 {
                return Err(SimError::policy(
                    self.round,
                    format!("negative budget {} for task {}", slot.budget, slot.task + 1),
                ));
            }
            if seen[slot.task] {
                return Err(SimError::policy(
                    self.round,
                    format!("task {} scheduled twice", slot.task + 1),
                ));
            }
            seen[slot.task] = true;
        }
        if self.min_length < 0 {
            return Err(SimError::policy(self.round, "negative minimum round length"));
        }
        Ok(())
    }
}

/// How `tau_r` and `t` are indexed relative to `tau_p` in a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundIndexing {
    /// `tau_r(k)` is the duration of the round whose running times are `tau_p(k)`.
    #[default]
    Measured,
    /// `tau_r(k) = r1 tau_p(k-1)`, exactly as the plant equations are written.
    Literal,
}

/// Exogenous disturbance acting on top of the intrinsic workload limit.
///
/// A task can never run longer than the work it has, so the workload-limited
/// yield applies in every mode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DisturbanceMode {
    #[default]
    WorkloadLimited,
    /// Uniform integer noise in `[-amplitude, amplitude]` on every activation.
    AdditiveNoise { amplitude: Time },
    /// From `round` on, activations of `task` (0-based) run `magnitude` longer.
    Step { round: u64, task: usize, magnitude: Time },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DisturbanceSpec {
    #[serde(flatten)]
    pub mode: DisturbanceMode,
    #[serde(default)]
    pub seed: u64,
}

impl DisturbanceSpec {
    pub fn workload_limited() -> Self {
        Self::default()
    }

    pub fn validate(&self, n: usize) -> std::result::Result<(), String> {
        match self.mode {
            DisturbanceMode::WorkloadLimited => Ok(()),
            DisturbanceMode::AdditiveNoise { amplitude } if amplitude < 0 => {
                Err("disturbance amplitude must be >= 0".into())
            }
            DisturbanceMode::Step { task, .. } if task >= n => {
                Err(format!("disturbance task index {task} out of range"))
            }
            _ => Ok(()),
        }
    }
}

struct Disturbance {
    mode: DisturbanceMode,
    rng: ChaCha8Rng,
}

impl Disturbance {
    fn new(spec: &DisturbanceSpec) -> Self {
        Disturbance {
            mode: spec.mode,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
        }
    }

    fn extra(&mut self, round: u64, task: usize) -> Time {
        match self.mode {
            DisturbanceMode::WorkloadLimited => 0,
            DisturbanceMode::AdditiveNoise { amplitude } => {
                if amplitude == 0 {
                    0
                } else {
                    self.rng.gen_range(-amplitude..=amplitude)
                }
            }
            DisturbanceMode::Step {
                round: from,
                task: target,
                magnitude,
            } => {
                if round >= from && task == target {
                    magnitude
                } else {
                    0
                }
            }
        }
    }
}

/// The plant's per-round observables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub k: u64,
    pub t: Time,
    pub tau_r: Time,
    /// Actual running time of each task.
    pub tau_p: Vec<Time>,
    /// Actual running time minus budget, per task.
    pub delta_b: Vec<Time>,
    pub context_switches: u64,
    /// Zero-weight idle slack executed at the end of the round.
    pub idle: Time,
    /// Set when the round had nothing to run and one idle time-unit was
    /// inserted to keep time flowing.
    pub forced_idle: bool,
    /// Remaining work of each task at the start of the round.
    pub rho: Vec<Time>,
}

impl RoundRecord {
    /// s(k-1): the budgets that produced this record.
    pub fn budgets(&self) -> Vec<Time> {
        self.tau_p
            .iter()
            .zip(&self.delta_b)
            .map(|(tau, delta)| tau - delta)
            .collect()
    }

    /// CPU time given to tasks in this round (r1 tau_p without the slack).
    pub fn busy(&self) -> Time {
        self.tau_p.iter().sum()
    }
}

/// Processor state plus the bookkeeping needed to emit records.
pub struct Plant {
    specs: Vec<TaskSpec>,
    states: Vec<TaskState>,
    now: Time,
    round: u64,
    indexing: RoundIndexing,
    disturbance: Disturbance,
    last_runner: Option<usize>,
    prev_t: Time,
    prev_tau_r: Time,
    prev_duration: Time,
    misses: Vec<Boundary>,
}

impl Plant {
    pub fn new(specs: &[TaskSpec], disturbance: &DisturbanceSpec, indexing: RoundIndexing) -> Result<Self> {
        if specs.is_empty() {
            return Err(SimError::Config("task set is empty".into()));
        }
        for spec in specs {
            spec.validate().map_err(SimError::Config)?;
        }
        disturbance.validate(specs.len()).map_err(SimError::Config)?;
        Ok(Plant {
            specs: specs.to_vec(),
            states: initial_states(specs),
            now: 0,
            round: 0,
            indexing,
            disturbance: Disturbance::new(disturbance),
            last_runner: None,
            prev_t: 0,
            prev_tau_r: 0,
            prev_duration: 0,
            misses: Vec::new(),
        })
    }

    pub fn specs(&self) -> &[TaskSpec] {
        &self.specs
    }

    pub fn states(&self) -> &[TaskState] {
        &self.states
    }

    /// Physical time elapsed since initialization.
    pub fn now(&self) -> Time {
        self.now
    }

    /// Index of the next schedule to execute.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn misses(&self) -> &[Boundary] {
        &self.misses
    }

    pub fn into_parts(self) -> (Vec<TaskState>, Vec<Boundary>) {
        (self.states, self.misses)
    }

    fn advance_to(&mut self, time: Time) {
        self.now = time;
        let crossed = advance_periods(&self.specs, &mut self.states, time);
        self.misses.extend(crossed.into_iter().filter(|b| b.missed));
    }

    /// Executes one schedule and returns the record describing it.
    pub fn execute_round(&mut self, schedule: &Schedule) -> Result<RoundRecord> {
        let n = self.specs.len();
        schedule.validate(n)?;
        let round = self.round;
        let start = self.now;
        let rho: Vec<Time> = self.states.iter().map(|s| s.remaining).collect();
        let mut tau_p = vec![0; n];
        let mut delta_b = vec![0; n];
        let mut switches = 0;

        for slot in &schedule.entries {
            let task = slot.task;
            let target = (slot.budget + self.disturbance.extra(round, task)).max(0);
            let mut ran = 0;
            while ran < target && self.states[task].remaining > 0 {
                let horizon = next_release(&self.specs, &self.states) - self.now;
                let step = (target - ran).min(self.states[task].remaining).min(horizon);
                if step <= 0 {
                    return Err(SimError::invariant(round, "non-positive execution step"));
                }
                let state = &mut self.states[task];
                state.remaining -= step;
                state.cumulative_cpu += step;
                ran += step;
                let until = self.now + step;
                self.advance_to(until);
            }
            tau_p[task] = ran;
            delta_b[task] = ran - slot.budget;
            if ran > 0 {
                if self.last_runner != Some(task) {
                    switches += 1;
                }
                self.last_runner = Some(task);
            }
        }

        let busy = self.now - start;
        let mut idle = 0;
        let mut forced_idle = false;
        if busy < schedule.min_length {
            idle = schedule.min_length - busy;
        } else if busy == 0 {
            idle = 1;
            forced_idle = true;
        }
        if idle > 0 {
            let until = self.now + idle;
            self.advance_to(until);
        }

        let duration = self.now - start;
        if duration != tau_p.iter().sum::<Time>() + idle {
            return Err(SimError::invariant(round, "round duration does not match running times"));
        }
        if tau_p.iter().any(|&x| x < 0) {
            return Err(SimError::invariant(round, "negative running time"));
        }

        let tau_r = match self.indexing {
            RoundIndexing::Measured => duration,
            RoundIndexing::Literal => self.prev_duration,
        };
        let t = self.prev_t + self.prev_tau_r;
        self.prev_t = t;
        self.prev_tau_r = tau_r;
        self.prev_duration = duration;
        self.round += 1;

        Ok(RoundRecord {
            k: self.round,
            t,
            tau_r,
            tau_p,
            delta_b,
            context_switches: switches,
            idle,
            forced_idle,
            rho,
        })
    }
}
