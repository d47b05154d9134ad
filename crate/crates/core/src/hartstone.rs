//! Hartstone PH series: periodic tasks with harmonic frequencies.
//!
//! Each test starts from the five-task baseline and applies a stress
//! transform whose strength grows with the iteration number. A series runs
//! iterations 1, 2, ... from a cold start until one of them misses a deadline.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::par::par_map;
use crate::policy::PolicyConfig;
use crate::sim::{run_with_observer, SimConfig};
use crate::task::{lcm_of_periods, TaskSpec, Time, TIME_UNITS_PER_SECOND};

/// Baseline frequencies in Hz and workloads in Kilo-Whets per period.
pub const BASELINE: [(u32, u32); 5] = [(2, 32), (4, 16), (8, 8), (16, 4), (32, 2)];

/// An LCM larger than this many times the longest period is treated as a
/// near-harmonic set whose hyperperiod is the longest period.
pub const HYPERPERIOD_LCM_FACTOR: Time = 16;

pub const DEFAULT_ITERATION_CAP: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhTestKind {
    /// Task 5's frequency grows by 8 Hz per iteration.
    I,
    /// All frequencies scaled by 1.1, 1.2, ...
    II,
    /// Every task's workload grows by 1, 2, ... Kilo-Whets.
    III,
    /// One more (8 Hz, 8 KW) task per iteration.
    IV,
}

impl PhTestKind {
    pub const ALL: [PhTestKind; 4] = [PhTestKind::I, PhTestKind::II, PhTestKind::III, PhTestKind::IV];

    pub fn label(self) -> &'static str {
        match self {
            PhTestKind::I => "I",
            PhTestKind::II => "II",
            PhTestKind::III => "III",
            PhTestKind::IV => "IV",
        }
    }

    /// The per-test "period duration" published with the reference results.
    /// Reported alongside our numbers; it does not drive the simulation.
    pub fn reported_period_duration(self) -> Time {
        match self {
            PhTestKind::II => 4000,
            _ => 10000,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for PhTestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PhTestKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(PhTestKind::I),
            "II" | "2" => Ok(PhTestKind::II),
            "III" | "3" => Ok(PhTestKind::III),
            "IV" | "4" => Ok(PhTestKind::IV),
            other => Err(SimError::Config(format!("unknown test `{other}` (expected I, II, III or IV)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhTest {
    pub kind: PhTestKind,
    pub iteration: u32,
}

/// `num / den` rounded half-up, for positive operands.
fn div_round(num: Time, den: Time) -> Time {
    (2 * num + den) / (2 * den)
}

/// Period of a task running at `hz_num / hz_den` Hz, rounded to whole
/// time-units, and the relative rate error the rounding introduces.
pub fn period_for(hz_num: Time, hz_den: Time) -> (Time, f64) {
    let exact_num = TIME_UNITS_PER_SECOND * hz_den;
    let period = div_round(exact_num, hz_num);
    let exact = exact_num as f64 / hz_num as f64;
    let err = if period > 0 {
        (period as f64 - exact).abs() / exact
    } else {
        f64::INFINITY
    };
    (period, err)
}

/// The five baseline tasks, 64 KWIPS in total and utilization 0.4.
pub fn baseline_set() -> Vec<TaskSpec> {
    BASELINE
        .iter()
        .enumerate()
        .map(|(i, &(hz, kw))| TaskSpec::from_kilo_whets(i + 1, period_for(Time::from(hz), 1).0, kw))
        .collect()
}

/// A transformed task set with the worst relative rate error caused by
/// rounding periods.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSet {
    pub specs: Vec<TaskSpec>,
    pub rate_error: f64,
}

pub fn transform(test: PhTest) -> Result<IterationSet> {
    if test.iteration < 1 {
        return Err(SimError::Config("iteration must be >= 1".into()));
    }
    let i = Time::from(test.iteration);
    let mut rate_error: f64 = 0.0;
    let mut specs = Vec::new();
    let mut push = |hz_num: Time, hz_den: Time, kw: Time| -> Result<()> {
        let (period, err) = period_for(hz_num, hz_den);
        let id = specs.len() + 1;
        if period < 1 {
            return Err(SimError::Range(format!(
                "test {} iteration {}: task {id} period rounds to {period}",
                test.kind, test.iteration
            )));
        }
        rate_error = rate_error.max(err);
        specs.push(TaskSpec::new(id, period, kw * crate::task::TIME_UNITS_PER_KILO_WHET));
        Ok(())
    };
    for (j, &(hz, kw)) in BASELINE.iter().enumerate() {
        let (hz, kw) = (Time::from(hz), Time::from(kw));
        match test.kind {
            PhTestKind::I if j == 4 => push(hz + 8 * i, 1, kw)?,
            PhTestKind::II => push(hz * (10 + i), 10, kw)?,
            PhTestKind::III => push(hz, 1, kw + i)?,
            _ => push(hz, 1, kw)?,
        }
    }
    if test.kind == PhTestKind::IV {
        for _ in 0..i {
            push(8, 1, 8)?;
        }
    }
    Ok(IterationSet { specs, rate_error })
}

/// Task set of one test iteration.
pub fn apply_iteration(test: PhTest) -> Result<Vec<TaskSpec>> {
    transform(test).map(|s| s.specs)
}

/// LCM of the periods, or the longest period when the LCM exceeds
/// [`HYPERPERIOD_LCM_FACTOR`] times it (sets made near-harmonic by rounding).
pub fn hyperperiod(specs: &[TaskSpec]) -> Time {
    let max = specs.iter().map(|s| s.period).max().unwrap_or(1);
    lcm_of_periods(specs, HYPERPERIOD_LCM_FACTOR * max).unwrap_or(max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesOptions {
    /// Observation window per iteration, in hyperperiods.
    pub hyperperiods: u32,
    pub iteration_cap: u32,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            hyperperiods: 2,
            iteration_cap: DEFAULT_ITERATION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub iteration: u32,
    pub tasks: usize,
    pub hyperperiod: Time,
    pub window: Time,
    pub missed: bool,
    /// Time of the first deadline miss inside the window.
    pub first_miss_time: Option<Time>,
    /// Context switches in rounds starting within the final hyperperiod.
    pub switches_last_hyperperiod: u64,
    pub rounds: u64,
    pub rate_error: f64,
}

/// Simulates one iteration from a cold start over the observation window.
/// The run ends early at the first deadline miss.
pub fn run_iteration(test: PhTest, policy: &PolicyConfig, options: &SeriesOptions) -> Result<IterationResult> {
    if options.hyperperiods < 1 {
        return Err(SimError::Config("observation window must cover >= 1 hyperperiod".into()));
    }
    let set = transform(test)?;
    let hyper = hyperperiod(&set.specs);
    let window = hyper * Time::from(options.hyperperiods);
    let last_start = window - hyper;
    let mut sim = SimConfig::new(window);
    sim.stop_at_first_miss = true;
    let mut boxed = policy.build(&set.specs)?;
    let mut switches = 0;
    let outcome = run_with_observer(&set.specs, boxed.as_mut(), &sim, |record, start, _, _| {
        if start >= last_start {
            switches += record.context_switches;
        }
    })?;
    let first_miss_time = outcome.misses.iter().map(|b| b.time).filter(|&t| t <= window).min();
    Ok(IterationResult {
        iteration: test.iteration,
        tasks: set.specs.len(),
        hyperperiod: hyper,
        window,
        missed: first_miss_time.is_some(),
        first_miss_time,
        switches_last_hyperperiod: switches,
        rounds: outcome.rounds,
        rate_error: set.rate_error,
    })
}

/// One cell of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub policy: String,
    pub test: PhTestKind,
    /// First iteration with a deadline miss; `None` if the cap was reached.
    pub first_miss: Option<u32>,
    /// Switches in the final hyperperiod of the last passing iteration.
    pub switches_last_pass: Option<u64>,
    pub iterations: Vec<IterationResult>,
    /// Why the series ended without a miss, if it did.
    pub note: Option<String>,
}

impl BenchmarkResult {
    /// Iterations completed before the first miss.
    pub fn passing(&self) -> u32 {
        match self.first_miss {
            Some(f) => f - 1,
            None => self.iterations.iter().filter(|r| !r.missed).count() as u32,
        }
    }
}

pub fn run_series(kind: PhTestKind, policy: &PolicyConfig, options: &SeriesOptions) -> Result<BenchmarkResult> {
    policy.validate().map_err(SimError::Config)?;
    let mut result = BenchmarkResult {
        policy: policy.label(),
        test: kind,
        first_miss: None,
        switches_last_pass: None,
        iterations: Vec::new(),
        note: None,
    };
    for iteration in 1..=options.iteration_cap {
        let it = match run_iteration(PhTest { kind, iteration }, policy, options) {
            Ok(it) => it,
            Err(SimError::Range(msg)) => {
                result.note = Some(format!("range error: {msg}"));
                return Ok(result);
            }
            Err(e) => return Err(e),
        };
        let missed = it.missed;
        if !missed {
            result.switches_last_pass = Some(it.switches_last_hyperperiod);
        }
        result.iterations.push(it);
        if missed {
            result.first_miss = Some(iteration);
            return Ok(result);
        }
    }
    result.note = Some(format!("no miss within cap of {} iterations", options.iteration_cap));
    Ok(result)
}

/// Runs every (policy, test) pair, policy-major. Pairs are independent and
/// may run in parallel; the output is the same either way.
pub fn run_grid(
    policies: &[PolicyConfig],
    kinds: &[PhTestKind],
    options: &SeriesOptions,
    parallel: bool,
) -> Result<Vec<BenchmarkResult>> {
    let jobs: Vec<(PolicyConfig, PhTestKind)> = policies
        .iter()
        .flat_map(|p| kinds.iter().map(move |&k| (p.clone(), k)))
        .collect();
    par_map(&jobs, parallel, |(p, k)| run_series(*k, p, options))
        .into_iter()
        .collect()
}

/// Published (passing iterations, switches) per policy, for tests I to IV.
pub const REFERENCE_TABLE: [(&str, [(u32, u64); 4]); 8] = [
    ("EDF", [(14, 265), (24, 42), (7, 43), (7, 73)]),
    ("LLF tick=1", [(14, 993), (24, 1183), (7, 491), (7, 7143)]),
    ("RR q=1", [(3, 3485), (24, 3999), (3, 4867), (7, 9351)]),
    ("RR q=5", [(3, 705), (24, 799), (3, 981), (7, 1870)]),
    ("RR q=10", [(3, 357), (24, 399), (2, 435), (7, 935)]),
    ("PSC+BCC tau_r=500", [(14, 126), (24, 60), (7, 126), (7, 252)]),
    ("PSC+BCC tau_r=1000", [(14, 66), (24, 36), (7, 66), (7, 132)]),
    ("PSC+BCC tau_r=2000", [(14, 48), (24, 24), (7, 42), (7, 84)]),
];

pub fn reference(policy: &str, kind: PhTestKind) -> Option<(u32, u64)> {
    REFERENCE_TABLE
        .iter()
        .find(|(name, _)| *name == policy)
        .map(|(_, cells)| cells[kind.index()])
}

/// One line per cell that differs from the published value.
pub fn deviations(results: &[BenchmarkResult]) -> Vec<String> {
    let mut out = Vec::new();
    for r in results {
        let Some((pass, sw)) = reference(&r.policy, r.test) else {
            continue;
        };
        let got_sw = r.switches_last_pass;
        if r.passing() != pass || got_sw != Some(sw) {
            out.push(format!(
                "{} / test {}: {} ({}) vs published {} ({})",
                r.policy,
                r.test,
                r.passing(),
                got_sw.map_or_else(|| "-".to_string(), |s| s.to_string()),
                pass,
                sw
            ));
        }
    }
    out
}

fn cell(r: Option<&BenchmarkResult>) -> String {
    match r {
        None => String::new(),
        Some(r) => {
            let sw = r.switches_last_pass.map_or_else(|| "-".to_string(), |s| s.to_string());
            let cap = if r.first_miss.is_none() { "+" } else { "" };
            format!("{}{} ({})", r.passing(), cap, sw)
        }
    }
}

/// Text table with one row per policy and one column per test, followed by
/// the published values and the list of deviations.
pub fn format_table(results: &[BenchmarkResult]) -> String {
    let mut kinds: Vec<PhTestKind> = results.iter().map(|r| r.test).collect();
    kinds.sort();
    kinds.dedup();
    let mut policies: Vec<&str> = Vec::new();
    for r in results {
        if !policies.contains(&r.policy.as_str()) {
            policies.push(&r.policy);
        }
    }
    let width = policies.iter().map(|p| p.len()).max().unwrap_or(6).max(20);
    let mut s = String::new();
    let _ = write!(s, "{:<width$}", "test");
    for k in &kinds {
        let _ = write!(s, " | {:>14}", k.label());
    }
    s.push('\n');
    let _ = write!(s, "{:<width$}", "period duration");
    for k in &kinds {
        let _ = write!(s, " | {:>14}", k.reported_period_duration());
    }
    s.push('\n');
    s.push_str(&"-".repeat(width + kinds.len() * 17));
    s.push('\n');
    for p in &policies {
        let _ = write!(s, "{:<width$}", p);
        for k in &kinds {
            let r = results.iter().find(|r| r.policy == *p && r.test == *k);
            let _ = write!(s, " | {:>14}", cell(r));
        }
        s.push('\n');
        if kinds.iter().any(|&k| reference(p, k).is_some()) {
            let _ = write!(s, "{:<width$}", "  published");
            for &k in &kinds {
                let txt = reference(p, k).map_or_else(String::new, |(a, b)| format!("{a} ({b})"));
                let _ = write!(s, " | {:>14}", txt);
            }
            s.push('\n');
        }
    }
    let notes: Vec<String> = results
        .iter()
        .filter_map(|r| r.note.as_ref().map(|n| format!("{} / test {}: {}", r.policy, r.test, n)))
        .collect();
    if !notes.is_empty() {
        s.push_str("\nnotes:\n");
        for n in notes {
            let _ = writeln!(s, "  {n}");
        }
    }
    let dev = deviations(results);
    if !dev.is_empty() {
        s.push_str("\ndeviations from the published table:\n");
        for d in dev {
            let _ = writeln!(s, "  {d}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::utilization;

    #[test]
    fn baseline_matches_table() {
        let b = baseline_set();
        let periods: Vec<Time> = b.iter().map(|s| s.period).collect();
        let work: Vec<Time> = b.iter().map(|s| s.work).collect();
        assert_eq!(periods, vec![10000, 5000, 2500, 1250, 625]);
        assert_eq!(work, vec![800, 400, 200, 100, 50]);
        assert!((utilization(&b) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn kind_one_first_iteration() {
        let s = apply_iteration(PhTest { kind: PhTestKind::I, iteration: 1 }).unwrap();
        assert_eq!(s[4].period, 500);
        assert_eq!(s[4].work, 50);
    }

    #[test]
    fn kind_two_rounds_periods() {
        let s = transform(PhTest { kind: PhTestKind::II, iteration: 1 }).unwrap();
        // 20000 / 2.2 = 9090.9
        assert_eq!(s.specs[0].period, 9091);
        assert!(s.rate_error > 0.0);
    }

    #[test]
    fn kind_three_and_four() {
        let s = apply_iteration(PhTest { kind: PhTestKind::III, iteration: 3 }).unwrap();
        assert_eq!(s[4].work, 125);
        assert!((s[4].utilization() - 0.2).abs() < 1e-12);
        let s = apply_iteration(PhTest { kind: PhTestKind::IV, iteration: 2 }).unwrap();
        assert_eq!(s.len(), 7);
        assert_eq!(s[5], TaskSpec::new(6, 2500, 200));
        assert_eq!(s[6].id, 7);
    }

    #[test]
    fn period_rounding_is_half_up() {
        assert_eq!(period_for(3, 1).0, 6667);
        assert_eq!(period_for(40000, 1).0, 1);
        assert_eq!(period_for(40001, 1).0, 0);
    }

    #[test]
    fn range_error_for_tiny_periods() {
        let err = apply_iteration(PhTest { kind: PhTestKind::I, iteration: 6000 }).unwrap_err();
        assert!(matches!(err, SimError::Range(_)));
    }

    #[test]
    fn hyperperiod_of_harmonic_and_near_harmonic_sets() {
        assert_eq!(hyperperiod(&baseline_set()), 10000);
        let s = apply_iteration(PhTest { kind: PhTestKind::I, iteration: 2 }).unwrap();
        assert_eq!(s[4].period, 417);
        assert_eq!(hyperperiod(&s), 10000);
    }

    #[test]
    fn parse_kinds() {
        assert_eq!("iii".parse::<PhTestKind>().unwrap(), PhTestKind::III);
        assert!("V".parse::<PhTestKind>().is_err());
    }

    #[test]
    fn reference_lookup() {
        assert_eq!(reference("EDF", PhTestKind::IV), Some((7, 73)));
        assert_eq!(reference("SRR", PhTestKind::I), None);
    }
}
