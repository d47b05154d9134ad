//! CSV and JSON artifacts: per-round traces, benchmark cells, run summaries.
//!
//! Trace columns are `k, t, tau_r, tau_p_1..N, delta_b_1..N, switches`,
//! followed by `idle, forced_idle, rho_1..N` and, for controller runs,
//! `u_k, c_1..N`. Floats are written in shortest round-trip form so that
//! reading a file back reproduces the values exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hartstone::{BenchmarkResult, PhTestKind};
use crate::plant::RoundRecord;
use crate::sim::{ControllerSnapshot, SimulationTrace};
use crate::task::Time;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed file: {0}")]
    Format(String),
}

type IoResult<T> = std::result::Result<T, IoError>;

fn header(n: usize, controller: bool) -> Vec<String> {
    let mut h: Vec<String> = vec!["k".into(), "t".into(), "tau_r".into()];
    h.extend((1..=n).map(|i| format!("tau_p_{i}")));
    h.extend((1..=n).map(|i| format!("delta_b_{i}")));
    h.push("switches".into());
    h.push("idle".into());
    h.push("forced_idle".into());
    h.extend((1..=n).map(|i| format!("rho_{i}")));
    if controller {
        h.push("u_k".into());
        h.extend((1..=n).map(|i| format!("c_{i}")));
    }
    h
}

/// Records plus optional controller columns, as stored in a trace file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceTable {
    pub n: usize,
    pub records: Vec<RoundRecord>,
    pub controller: Vec<ControllerSnapshot>,
}

impl From<&SimulationTrace> for TraceTable {
    fn from(trace: &SimulationTrace) -> Self {
        TraceTable {
            n: trace.n(),
            records: trace.records.clone(),
            controller: trace.controller.clone(),
        }
    }
}

pub fn write_trace<W: Write>(table: &TraceTable, out: W) -> IoResult<()> {
    let with_ctl = !table.controller.is_empty();
    if with_ctl && table.controller.len() != table.records.len() {
        return Err(IoError::Format("controller rows do not match records".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(table.n, with_ctl))?;
    for (idx, r) in table.records.iter().enumerate() {
        let mut row: Vec<String> = vec![r.k.to_string(), r.t.to_string(), r.tau_r.to_string()];
        row.extend(r.tau_p.iter().map(Time::to_string));
        row.extend(r.delta_b.iter().map(Time::to_string));
        row.push(r.context_switches.to_string());
        row.push(r.idle.to_string());
        row.push(u8::from(r.forced_idle).to_string());
        row.extend(r.rho.iter().map(Time::to_string));
        if with_ctl {
            let c = &table.controller[idx];
            row.push(c.u.to_string());
            row.extend(c.c.iter().map(f64::to_string));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, idx: usize, line: usize) -> IoResult<T> {
    rec.get(idx)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| IoError::Format(format!("row {line}: bad value in column {}", idx + 1)))
}

pub fn read_trace<R: Read>(input: R) -> IoResult<TraceTable> {
    let mut rd = csv::Reader::from_reader(input);
    let head = rd.headers()?.clone();
    let n = head.iter().filter(|h| h.starts_with("tau_p_")).count();
    let with_ctl = head.iter().any(|h| h == "u_k");
    let expected = header(n, with_ctl);
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(IoError::Format("unexpected trace header".into()));
    }
    let mut table = TraceTable {
        n,
        ..TraceTable::default()
    };
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = line + 2;
        let vec = |from: usize| -> IoResult<Vec<Time>> { (from..from + n).map(|i| field(&rec, i, line)).collect() };
        let forced: u8 = field(&rec, 3 + 2 * n + 2, line)?;
        table.records.push(RoundRecord {
            k: field(&rec, 0, line)?,
            t: field(&rec, 1, line)?,
            tau_r: field(&rec, 2, line)?,
            tau_p: vec(3)?,
            delta_b: vec(3 + n)?,
            context_switches: field(&rec, 3 + 2 * n, line)?,
            idle: field(&rec, 3 + 2 * n + 1, line)?,
            forced_idle: forced != 0,
            rho: vec(3 + 2 * n + 3)?,
        });
        if with_ctl {
            let base = 3 + 3 * n + 3;
            table.controller.push(ControllerSnapshot {
                u: field(&rec, base, line)?,
                c: (base + 1..base + 1 + n)
                    .map(|i| field(&rec, i, line))
                    .collect::<IoResult<_>>()?,
            });
        }
    }
    Ok(table)
}

/// One row of the benchmark CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub policy: String,
    pub test: PhTestKind,
    /// Empty when no miss occurred within the iteration cap.
    pub first_miss: Option<u32>,
    pub switches_last_pass: Option<u64>,
}

impl From<&BenchmarkResult> for BenchRow {
    fn from(r: &BenchmarkResult) -> Self {
        BenchRow {
            policy: r.policy.clone(),
            test: r.test,
            first_miss: r.first_miss,
            switches_last_pass: r.switches_last_pass,
        }
    }
}

pub fn write_bench<W: Write>(results: &[BenchmarkResult], out: W) -> IoResult<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(BenchRow::from(r))?;
    }
    if results.is_empty() {
        w.write_record(["policy", "test", "first_miss", "switches_last_pass"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bench<R: Read>(input: R) -> IoResult<Vec<BenchRow>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(IoError::from)).collect()
}

/// Aggregate figures of one run, written as JSON next to the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub tasks: usize,
    pub rounds: usize,
    pub end_time: Time,
    pub misses: usize,
    /// Misses per task.
    pub task_misses: Vec<u64>,
    pub mean_tau_r: f64,
    /// Share of busy CPU time per task over the whole run.
    pub shares: Vec<f64>,
    pub switches: u64,
    pub idle_time: Time,
    pub forced_idle_rounds: usize,
}

impl RunSummary {
    pub fn from_trace(trace: &SimulationTrace) -> Self {
        let rounds = trace.records.len();
        let mean_tau_r = if rounds == 0 {
            0.0
        } else {
            trace.records.iter().map(|r| r.tau_r as f64).sum::<f64>() / rounds as f64
        };
        let shares = if rounds == 0 {
            vec![0.0; trace.n()]
        } else {
            crate::metrics::busy_shares(&trace.records, 0, rounds - 1)
        };
        RunSummary {
            policy: trace.policy.clone(),
            tasks: trace.n(),
            rounds,
            end_time: trace.end,
            misses: trace.misses.len(),
            task_misses: trace.final_states.iter().map(|s| s.misses).collect(),
            mean_tau_r,
            shares,
            switches: trace.total_switches(),
            idle_time: trace.records.iter().map(|r| r.idle).sum(),
            forced_idle_rounds: trace.records.iter().filter(|r| r.forced_idle).count(),
        }
    }
}
