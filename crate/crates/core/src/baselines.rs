//! Reference policies: Round Robin, Selfish Round Robin, EDF and LLF.
//!
//! All of them produce work-conserving rounds; when nothing is runnable they
//! idle until the next release.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::OpCounts;
use crate::plant::{Schedule, Slot};
use crate::sim::{PlantView, SchedulerPolicy};
use crate::task::Time;

fn idle_until_release(view: &PlantView<'_>) -> Schedule {
    Schedule::idle(view.round, view.until_next_release().max(1))
}

/// One round of plain RR: every task with work gets `quantum`, in cyclic order
/// starting at `cursor`. Returns the schedule and the cursor for the next round.
pub fn rr_schedule(view: &PlantView<'_>, quantum: Time, cursor: usize, ops: &mut OpCounts) -> (Schedule, usize) {
    let n = view.n();
    let mut entries = Vec::new();
    let mut next = cursor;
    for j in 0..n {
        let task = (cursor + j) % n;
        if view.has_work(task) {
            ops.shift += 1;
            entries.push(Slot { task, budget: quantum });
            next = (task + 1) % n;
        }
    }
    if entries.is_empty() {
        return (idle_until_release(view), cursor);
    }
    (Schedule::new(view.round, entries), next)
}

#[derive(Debug, Clone)]
pub struct RoundRobin {
    pub quantum: Time,
    cursor: usize,
}

impl RoundRobin {
    pub fn new(quantum: Time) -> Self {
        assert!(quantum > 0, "RR quantum must be positive");
        RoundRobin { quantum, cursor: 0 }
    }
}

impl SchedulerPolicy for RoundRobin {
    fn name(&self) -> String {
        format!("RR q={}", self.quantum)
    }

    fn schedule(&mut self, view: &PlantView<'_>, ops: &mut OpCounts) -> Result<Schedule> {
        let (schedule, cursor) = rr_schedule(view, self.quantum, self.cursor, ops);
        self.cursor = cursor;
        Ok(schedule)
    }
}

/// Selfish RR rates and quantum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrrParams {
    /// Priority growth per round of admitted tasks.
    pub a: f64,
    /// Priority growth per round of waiting tasks.
    pub b: f64,
    pub quantum: Time,
}

impl Default for SrrParams {
    fn default() -> Self {
        SrrParams {
            a: 2.0,
            b: 1.0,
            quantum: 10,
        }
    }
}

impl SrrParams {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.b >= 0.0 && self.a >= self.b) {
            return Err("SRR rates must satisfy a >= b >= 0".into());
        }
        if self.quantum <= 0 {
            return Err("SRR quantum must be > 0".into());
        }
        Ok(())
    }
}

/// Holding and active queues of Selfish RR.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SrrQueues {
    /// Admitted tasks in service order.
    pub active: Vec<usize>,
    /// Common priority of the admitted tasks.
    pub active_priority: f64,
    /// Waiting tasks with their priorities, in arrival order.
    pub waiting: Vec<(usize, f64)>,
}

impl SrrQueues {
    fn contains(&self, task: usize) -> bool {
        self.active.contains(&task) || self.waiting.iter().any(|&(t, _)| t == task)
    }
}

/// One round of Selfish RR.
///
/// Tasks that become runnable enter the holding queue at priority 0. Each
/// round the admitted tasks' priority grows by `a` and every waiting task's by
/// `b`; a waiting task is admitted once it has caught up. With `b >= a`
/// newcomers never fall behind and are admitted at once (plain RR). When the
/// active queue is empty the highest-priority waiting tasks are admitted.
/// The active queue is served RR with the quantum.
pub fn srr_schedule(view: &PlantView<'_>, params: &SrrParams, queues: &mut SrrQueues, ops: &mut OpCounts) -> Schedule {
    let n = view.n();
    queues.active.retain(|&t| view.has_work(t));
    queues.waiting.retain(|&(t, _)| view.has_work(t));
    for task in 0..n {
        if view.has_work(task) && !queues.contains(task) {
            queues.waiting.push((task, 0.0));
        }
    }

    if params.b >= params.a {
        let admitted: Vec<usize> = queues.waiting.drain(..).map(|(t, _)| t).collect();
        queues.active.extend(admitted);
    } else {
        if !queues.active.is_empty() {
            queues.active_priority += params.a;
            ops.sum += 1;
        }
        for entry in queues.waiting.iter_mut() {
            entry.1 += params.b;
            ops.sum += 1;
        }
        if queues.active.is_empty() {
            if let Some(top) = queues.waiting.iter().map(|&(_, p)| p).reduce(f64::max) {
                queues.active_priority = top;
            }
        }
        let threshold = queues.active_priority;
        let mut still_waiting = Vec::with_capacity(queues.waiting.len());
        for (task, priority) in queues.waiting.drain(..) {
            ops.sub += 1;
            if priority - threshold >= 0.0 {
                queues.active.push(task);
            } else {
                still_waiting.push((task, priority));
            }
        }
        queues.waiting = still_waiting;
    }

    if queues.active.is_empty() {
        return idle_until_release(view);
    }
    let entries = queues
        .active
        .iter()
        .map(|&task| {
            ops.shift += 1;
            Slot {
                task,
                budget: params.quantum,
            }
        })
        .collect();
    Schedule::new(view.round, entries)
}

#[derive(Debug, Clone)]
pub struct SelfishRoundRobin {
    pub params: SrrParams,
    pub queues: SrrQueues,
}

impl SelfishRoundRobin {
    pub fn new(params: SrrParams) -> Self {
        SelfishRoundRobin {
            params,
            queues: SrrQueues::default(),
        }
    }
}

impl SchedulerPolicy for SelfishRoundRobin {
    fn name(&self) -> String {
        format!("SRR a={} b={} q={}", self.params.a, self.params.b, self.params.quantum)
    }

    fn schedule(&mut self, view: &PlantView<'_>, ops: &mut OpCounts) -> Result<Schedule> {
        Ok(srr_schedule(view, &self.params, &mut self.queues, ops))
    }
}

/// Event-driven EDF: the unfinished task with the earliest deadline runs until
/// it completes or the next release, whichever is first. Ties go to the
/// lowest task index.
pub fn edf_schedule(view: &PlantView<'_>, ops: &mut OpCounts) -> Schedule {
    let mut best: Option<(Time, usize)> = None;
    for task in 0..view.n() {
        if !view.has_work(task) {
            continue;
        }
        let deadline = view.deadline(task);
        ops.sub += 1;
        if best.is_none_or(|(d, _)| deadline < d) {
            best = Some((deadline, task));
        }
    }
    match best {
        None => idle_until_release(view),
        Some((_, task)) => {
            let budget = view.states[task].remaining.min(view.until_next_release());
            Schedule::new(view.round, vec![Slot { task, budget }])
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Edf;

impl SchedulerPolicy for Edf {
    fn name(&self) -> String {
        "EDF".into()
    }

    fn schedule(&mut self, view: &PlantView<'_>, ops: &mut OpCounts) -> Result<Schedule> {
        Ok(edf_schedule(view, ops))
    }
}

/// LLF: runs the minimum-laxity task for one tick. Ties keep the incumbent,
/// then go to the lowest index. Tasks with negative laxity still run.
pub fn llf_schedule(view: &PlantView<'_>, tick: Time, incumbent: Option<usize>, ops: &mut OpCounts) -> Schedule {
    let mut best: Option<(Time, usize)> = None;
    for task in 0..view.n() {
        if !view.has_work(task) {
            continue;
        }
        let laxity = view.deadline(task) - view.now - view.states[task].remaining;
        ops.sub += 2;
        let better = match best {
            None => true,
            Some((l, _)) => laxity < l || (laxity == l && incumbent == Some(task)),
        };
        if better {
            best = Some((laxity, task));
        }
    }
    match best {
        None => idle_until_release(view),
        Some((_, task)) => {
            let budget = tick.min(view.states[task].remaining);
            Schedule::new(view.round, vec![Slot { task, budget }])
        }
    }
}

#[derive(Debug, Clone)]
pub struct Llf {
    pub tick: Time,
    incumbent: Option<usize>,
}

impl Llf {
    pub fn new(tick: Time) -> Self {
        assert!(tick >= 1, "LLF tick must be >= 1");
        Llf { tick, incumbent: None }
    }
}

impl SchedulerPolicy for Llf {
    fn name(&self) -> String {
        format!("LLF tick={}", self.tick)
    }

    fn schedule(&mut self, view: &PlantView<'_>, ops: &mut OpCounts) -> Result<Schedule> {
        let schedule = llf_schedule(view, self.tick, self.incumbent, ops);
        if let Some(slot) = schedule.entries.first() {
            self.incumbent = Some(slot.task);
        }
        Ok(schedule)
    }
}
