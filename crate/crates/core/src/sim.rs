//! Round-by-round simulation: the scheduler runs after every round.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::metrics::OpCounts;
use crate::plant::{DisturbanceSpec, Plant, RoundIndexing, RoundRecord, Schedule};
use crate::task::{Boundary, TaskSpec, TaskState, Time};

/// What a scheduler may observe before computing round `round`.
pub struct PlantView<'a> {
    pub round: u64,
    pub now: Time,
    pub specs: &'a [TaskSpec],
    pub states: &'a [TaskState],
    /// Record of the previous round, `None` before the first one.
    pub last: Option<&'a RoundRecord>,
}

impl PlantView<'_> {
    pub fn n(&self) -> usize {
        self.specs.len()
    }

    /// Current deadline of task `i` (its next release).
    pub fn deadline(&self, i: usize) -> Time {
        self.states[i].next_release(&self.specs[i])
    }

    /// Time until the next release of any task.
    pub fn until_next_release(&self) -> Time {
        crate::task::next_release(self.specs, self.states) - self.now
    }

    pub fn has_work(&self, i: usize) -> bool {
        self.states[i].remaining > 0
    }
}

/// Controller internals exported alongside the trace for debugging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSnapshot {
    /// Outer loop output u(k).
    pub u: f64,
    /// Inner integrator states.
    pub c: Vec<f64>,
}

/// A scheduling policy: produces round k's schedule from the plant's state.
pub trait SchedulerPolicy: Send {
    fn name(&self) -> String;

    /// Arithmetic performed while computing the schedule is tallied in `ops`.
    fn schedule(&mut self, view: &PlantView<'_>, ops: &mut OpCounts) -> Result<Schedule>;

    fn snapshot(&self) -> Option<ControllerSnapshot> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: Time,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
    #[serde(default)]
    pub indexing: RoundIndexing,
    /// Collect per-round operation counts.
    #[serde(default)]
    pub instrument: bool,
    /// End the run right after the round in which the first deadline miss
    /// is detected.
    #[serde(default)]
    pub stop_at_first_miss: bool,
}

impl SimConfig {
    pub fn new(horizon: Time) -> Self {
        SimConfig {
            horizon,
            disturbance: DisturbanceSpec::default(),
            indexing: RoundIndexing::Measured,
            instrument: false,
            stop_at_first_miss: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub policy: String,
    pub specs: Vec<TaskSpec>,
    pub indexing: RoundIndexing,
    pub records: Vec<RoundRecord>,
    pub final_states: Vec<TaskState>,
    pub misses: Vec<Boundary>,
    /// Per-round operation counts, empty unless instrumented.
    pub ops: Vec<OpCounts>,
    /// Per-round controller state, empty for policies without one.
    pub controller: Vec<ControllerSnapshot>,
    /// Physical time at the end of the run.
    pub end: Time,
}

impl SimulationTrace {
    pub fn n(&self) -> usize {
        self.specs.len()
    }

    pub fn total_switches(&self) -> u64 {
        self.records.iter().map(|r| r.context_switches).sum()
    }
}

/// Summary of a run produced without keeping the records.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub rounds: u64,
    pub end: Time,
    pub final_states: Vec<TaskState>,
    pub misses: Vec<Boundary>,
}

/// Runs `policy` against `specs` until physical time reaches the horizon,
/// handing every record to `observe` together with the round's physical
/// start time and operation counts.
pub fn run_with_observer<F>(
    specs: &[TaskSpec],
    policy: &mut dyn SchedulerPolicy,
    config: &SimConfig,
    mut observe: F,
) -> Result<RunOutcome>
where
    F: FnMut(&RoundRecord, Time, &OpCounts, Option<ControllerSnapshot>),
{
    if config.horizon <= 0 {
        return Err(SimError::Config("horizon must be > 0".into()));
    }
    let mut plant = Plant::new(specs, &config.disturbance, config.indexing)?;
    let mut last: Option<RoundRecord> = None;
    while plant.now() < config.horizon {
        let mut ops = OpCounts::default();
        let schedule = {
            let view = PlantView {
                round: plant.round(),
                now: plant.now(),
                specs: plant.specs(),
                states: plant.states(),
                last: last.as_ref(),
            };
            policy.schedule(&view, &mut ops)?
        };
        let start = plant.now();
        let record = plant.execute_round(&schedule)?;
        ops.switch += record.context_switches;
        observe(&record, start, &ops, policy.snapshot());
        last = Some(record);
        if config.stop_at_first_miss && !plant.misses().is_empty() {
            break;
        }
    }
    let rounds = plant.round();
    let end = plant.now();
    let (final_states, misses) = plant.into_parts();
    Ok(RunOutcome {
        rounds,
        end,
        final_states,
        misses,
    })
}

/// Runs a simulation and keeps the full trace.
pub fn run_simulation(
    specs: &[TaskSpec],
    policy: &mut dyn SchedulerPolicy,
    config: &SimConfig,
) -> Result<SimulationTrace> {
    let mut records = Vec::new();
    let mut ops_log = Vec::new();
    let mut controller = Vec::new();
    let outcome = run_with_observer(specs, policy, config, |record, _, ops, snap| {
        records.push(record.clone());
        if config.instrument {
            ops_log.push(*ops);
        }
        if let Some(snap) = snap {
            controller.push(snap);
        }
    })?;
    Ok(SimulationTrace {
        policy: policy.name(),
        specs: specs.to_vec(),
        indexing: config.indexing,
        records,
        final_states: outcome.final_states,
        misses: outcome.misses,
        ops: ops_log,
        controller,
        end: outcome.end,
    })
}
