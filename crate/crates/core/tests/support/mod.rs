//! Test-only helpers: a schedule recorder and a replay oracle that checks a
//! trace against the plant recurrences using only the emitted schedules and
//! the task parameters.

#![allow(dead_code)]

use ctsched::metrics::OpCounts;
use ctsched::sim::ControllerSnapshot;
use ctsched::{
    run_simulation, PlantView, Result, RoundIndexing, Schedule, SchedulerPolicy, SimConfig, SimulationTrace, TaskSpec,
    Time,
};
use rand::Rng;

/// Wraps a policy and keeps every schedule it emits.
pub struct Recording {
    inner: Box<dyn SchedulerPolicy>,
    pub schedules: Vec<Schedule>,
}

impl Recording {
    pub fn new(inner: Box<dyn SchedulerPolicy>) -> Self {
        Recording {
            inner,
            schedules: Vec::new(),
        }
    }
}

impl SchedulerPolicy for Recording {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn schedule(&mut self, view: &PlantView<'_>, ops: &mut OpCounts) -> Result<Schedule> {
        let s = self.inner.schedule(view, ops)?;
        self.schedules.push(s.clone());
        Ok(s)
    }

    fn snapshot(&self) -> Option<ControllerSnapshot> {
        self.inner.snapshot()
    }
}

pub fn record(specs: &[TaskSpec], policy: Box<dyn SchedulerPolicy>, cfg: &SimConfig) -> (SimulationTrace, Vec<Schedule>) {
    let mut rec = Recording::new(policy);
    let trace = run_simulation(specs, &mut rec, cfg).expect("simulation failed");
    (trace, rec.schedules)
}

fn dense(schedule: &Schedule, n: usize) -> Vec<Time> {
    let mut b = vec![0; n];
    for e in &schedule.entries {
        b[e.task] = e.budget;
    }
    b
}

/// Replays `trace` against the schedules that produced it. Checks, at every
/// round, the running-time, round-duration and elapsed-time recurrences, the
/// remaining-work recurrence with period reloads, nonnegative running times,
/// the switch count and CPU-time conservation.
pub fn replay(specs: &[TaskSpec], schedules: &[Schedule], trace: &SimulationTrace) -> std::result::Result<(), String> {
    let n = specs.len();
    let recs = &trace.records;
    if recs.len() != schedules.len() {
        return Err(format!("{} records for {} schedules", recs.len(), schedules.len()));
    }
    let mut rho: Vec<Time> = specs.iter().map(|s| s.work).collect();
    let mut start: Time = 0;
    let mut prev_duration: Time = 0;
    let mut t_expect: Time = 0;
    let mut prev_tau_r: Time = 0;
    let mut last_runner: Option<usize> = None;
    let mut cpu = vec![0 as Time; n];
    for (idx, (rec, sched)) in recs.iter().zip(schedules).enumerate() {
        let k = idx as u64 + 1;
        let fail = |what: &str| Err(format!("round {k}: {what}"));
        if rec.k != k {
            return fail("round index");
        }
        let b = dense(sched, n);
        for i in 0..n {
            if rec.tau_p[i] != b[i] + rec.delta_b[i] {
                return fail(&format!("tau_p[{i}] != s + delta_b"));
            }
            if rec.tau_p[i] < 0 {
                return fail("negative running time");
            }
        }
        let duration: Time = rec.tau_p.iter().sum::<Time>() + rec.idle;
        let tau_expect = match trace.indexing {
            RoundIndexing::Measured => duration,
            RoundIndexing::Literal => prev_duration,
        };
        if rec.tau_r != tau_expect {
            return fail(&format!("tau_r {} expected {}", rec.tau_r, tau_expect));
        }
        if idx > 0 {
            t_expect += prev_tau_r;
        }
        if rec.t != t_expect {
            return fail(&format!("t {} expected {}", rec.t, t_expect));
        }
        if trace.indexing == RoundIndexing::Measured && rec.t != start {
            return fail("t differs from physical time");
        }
        if rec.rho != rho {
            return fail(&format!("rho {:?} expected {:?}", rec.rho, rho));
        }
        let end = start + duration;
        for i in 0..n {
            let reloads = end / specs[i].period - start / specs[i].period;
            let next = rho[i] - rec.tau_p[i] + reloads * specs[i].work;
            if reloads == 0 && next != (rho[i] - rec.tau_p[i]).max(0) {
                return fail("remaining work below zero");
            }
            if next < 0 {
                return fail("remaining work negative");
            }
            rho[i] = next;
            cpu[i] += rec.tau_p[i];
        }
        let mut switches = 0;
        for e in &sched.entries {
            if rec.tau_p[e.task] > 0 {
                if last_runner != Some(e.task) {
                    switches += 1;
                }
                last_runner = Some(e.task);
            }
        }
        if rec.context_switches != switches {
            return fail(&format!("switches {} expected {}", rec.context_switches, switches));
        }
        prev_duration = duration;
        prev_tau_r = rec.tau_r;
        start = end;
    }
    for i in 0..n {
        if trace.final_states[i].cumulative_cpu != cpu[i] {
            return Err(format!("task {}: cumulative cpu mismatch", i + 1));
        }
        if trace.final_states[i].remaining != rho[i] {
            return Err(format!("task {}: final remaining work mismatch", i + 1));
        }
    }
    let idle: Time = recs.iter().map(|r| r.idle).sum();
    if cpu.iter().sum::<Time>() + idle != trace.end || start != trace.end {
        return Err("CPU time plus idle does not add up to elapsed time".into());
    }
    Ok(())
}

/// Random harmonic task set: periods `base * 2^j`, work scaled so that the
/// utilization lands just below (`over = false`) or just above the target.
pub fn harmonic_set<R: Rng>(rng: &mut R, target: f64, over: bool) -> Vec<TaskSpec> {
    let n = rng.gen_range(2..=8);
    let base: Time = [50, 100, 125, 200, 250][rng.gen_range(0..5)];
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    (0..n)
        .map(|i| {
            let period = base << rng.gen_range(0..6);
            let exact = target * weights[i] / total * period as f64;
            let work = if over { exact.ceil() } else { exact.floor() } as Time;
            TaskSpec::new(i + 1, period, work.max(if over { 1 } else { 0 }))
        })
        .collect()
}
