//! JSON run configuration, validated in one pass with all problems reported
//! together.

use std::fmt;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::controllers::{CascadeGains, SetPoints};
use crate::hartstone::{self, PhTestKind, SeriesOptions};
use crate::plant::{DisturbanceSpec, RoundIndexing};
use crate::policy::PolicyConfig;
use crate::sim::SimConfig;
use crate::task::{TaskSpec, Time, TIME_UNITS_PER_KILO_WHET, TIME_UNITS_PER_SECOND};

pub const DEFAULT_SEED: u64 = 0;

/// Every problem found in a configuration document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub problems: Vec<String>,
}

impl ConfigError {
    fn one(msg: impl Into<String>) -> Self {
        ConfigError {
            problems: vec![msg.into()],
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration ({} problem", self.problems.len())?;
        if self.problems.len() != 1 {
            f.write_str("s")?;
        }
        f.write_str(")")?;
        for p in &self.problems {
            write!(f, "\n  - {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// One inline task. Period may be given directly or as a frequency, work in
/// time-units or Kilo-Whets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    #[serde(default)]
    pub period: Option<Time>,
    #[serde(default)]
    pub frequency_hz: Option<f64>,
    #[serde(default)]
    pub work: Option<Time>,
    #[serde(default)]
    pub kilo_whets: Option<u32>,
    #[serde(default)]
    pub weight: Option<f64>,
}

impl TaskEntry {
    fn to_spec(&self, id: usize) -> Result<TaskSpec, String> {
        let period = match (self.period, self.frequency_hz) {
            (Some(p), None) => p,
            (None, Some(f)) if f > 0.0 && f.is_finite() => (TIME_UNITS_PER_SECOND as f64 / f + 0.5).floor() as Time,
            (None, Some(_)) => return Err(format!("tasks[{}].frequency_hz must be > 0", id - 1)),
            _ => return Err(format!("tasks[{}]: give exactly one of period, frequency_hz", id - 1)),
        };
        let work = match (self.work, self.kilo_whets) {
            (Some(w), None) => w,
            (None, Some(kw)) => Time::from(kw) * TIME_UNITS_PER_KILO_WHET,
            _ => return Err(format!("tasks[{}]: give exactly one of work, kilo_whets", id - 1)),
        };
        let mut spec = TaskSpec::new(id, period, work);
        if let Some(w) = self.weight {
            spec.weight = w;
        }
        spec.validate().map_err(|e| format!("tasks[{}]: {e}", id - 1))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskSource {
    /// `"hartstone-baseline"`
    Named(String),
    Inline(Vec<TaskEntry>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetPointsConfig {
    pub tau_r_star: f64,
    #[serde(default)]
    pub theta_star: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub tests: Option<Vec<PhTestKind>>,
    #[serde(default)]
    pub policies: Option<Vec<PolicyConfig>>,
    #[serde(default)]
    pub hyperperiods: Option<u32>,
    #[serde(default)]
    pub iteration_cap: Option<u32>,
}

/// Values from the command line that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub policy: Option<PolicyConfig>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub policy: PolicyConfig,
    pub tasks: Vec<TaskSpec>,
    pub sim: SimConfig,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub bench: Option<BenchConfig>,
}

const KNOWN_KEYS: [&str; 12] = [
    "policy",
    "tasks",
    "set_points",
    "gains",
    "disturbance",
    "horizon",
    "seed",
    "indexing",
    "instrument",
    "out_dir",
    "bench",
    "stop_at_first_miss",
];

struct Collector<'a> {
    map: &'a Map<String, Value>,
    problems: Vec<String>,
}

impl Collector<'_> {
    fn get<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        let v = self.map.get(key)?;
        match serde_json::from_value(v.clone()) {
            Ok(x) => Some(x),
            Err(e) => {
                self.problems.push(format!("{key}: {e}"));
                None
            }
        }
    }

    fn require<T: DeserializeOwned>(&mut self, key: &str) -> Option<T> {
        if !self.map.contains_key(key) {
            self.problems.push(format!("{key}: missing field"));
            return None;
        }
        self.get(key)
    }
}

fn resolve_tasks(src: TaskSource, problems: &mut Vec<String>) -> Option<Vec<TaskSpec>> {
    match src {
        TaskSource::Named(name) if name == "hartstone-baseline" => Some(hartstone::baseline_set()),
        TaskSource::Named(name) => {
            problems.push(format!("tasks: unknown task set `{name}` (expected \"hartstone-baseline\" or a list)"));
            None
        }
        TaskSource::Inline(entries) if entries.is_empty() => {
            problems.push("tasks: task list is empty".into());
            None
        }
        TaskSource::Inline(entries) => {
            let mut out = Vec::new();
            let before = problems.len();
            for (i, e) in entries.iter().enumerate() {
                match e.to_spec(i + 1) {
                    Ok(s) => out.push(s),
                    Err(msg) => problems.push(msg),
                }
            }
            (problems.len() == before).then_some(out)
        }
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::one(format!("not valid JSON: {e}")))?;
        let Value::Object(map) = value else {
            return Err(ConfigError::one("top level must be a JSON object"));
        };
        let mut c = Collector {
            map: &map,
            problems: Vec::new(),
        };
        for key in map.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                c.problems.push(format!("{key}: unknown field"));
            }
        }

        let policy: Option<PolicyConfig> = match &overrides.policy {
            Some(p) => Some(p.clone()),
            None => c.require("policy"),
        };
        let task_src: Option<TaskSource> = c.require("tasks");
        let set_points: Option<SetPointsConfig> = c.get("set_points");
        let gains: Option<CascadeGains> = c.get("gains");
        let disturbance: Option<DisturbanceSpec> = c.get("disturbance");
        let horizon: Option<Time> = c.require("horizon");
        let seed: Option<u64> = c.get("seed");
        let indexing: Option<RoundIndexing> = c.get("indexing");
        let instrument: Option<bool> = c.get("instrument");
        let stop: Option<bool> = c.get("stop_at_first_miss");
        let out_dir: Option<PathBuf> = c.get("out_dir");
        let bench: Option<BenchConfig> = c.get("bench");
        let mut problems = c.problems;

        let tasks = task_src.and_then(|src| resolve_tasks(src, &mut problems));

        let policy = policy.map(|mut p| {
            if let PolicyConfig::Cascade {
                tau_r_star,
                theta_star,
                gains: g,
            } = &mut p
            {
                if let Some(sp) = &set_points {
                    *tau_r_star = sp.tau_r_star;
                    if sp.theta_star.is_some() {
                        theta_star.clone_from(&sp.theta_star);
                    }
                }
                if let Some(gn) = gains {
                    *g = gn;
                }
            } else if set_points.is_some() || gains.is_some() {
                problems.push("set_points/gains: only apply to the cascade policy".into());
            }
            p
        });
        if let Some(p) = &policy {
            if let Err(e) = p.validate() {
                problems.push(format!("policy: {e}"));
            }
            if let (PolicyConfig::Cascade { tau_r_star, theta_star, .. }, Some(tasks)) = (p, &tasks) {
                let check = match theta_star {
                    Some(theta) if theta.len() != tasks.len() => Err(format!(
                        "theta_star has {} entries for {} tasks",
                        theta.len(),
                        tasks.len()
                    )),
                    Some(theta) => SetPoints {
                        tau_r_star: *tau_r_star,
                        theta_star: theta.clone(),
                    }
                    .validate(),
                    None => Ok(()),
                };
                if let Err(e) = check {
                    problems.push(format!("set_points: {e}"));
                }
            }
        }
        if let Some(h) = horizon {
            if h <= 0 {
                problems.push("horizon: must be > 0".into());
            }
        }
        let seed = overrides.seed.or(seed).unwrap_or(DEFAULT_SEED);
        let mut disturbance = disturbance.unwrap_or_default();
        disturbance.seed = seed;
        if let Some(tasks) = &tasks {
            if let Err(e) = disturbance.validate(tasks.len()) {
                problems.push(format!("disturbance: {e}"));
            }
        }
        if let Some(b) = &bench {
            if b.hyperperiods == Some(0) {
                problems.push("bench.hyperperiods: must be >= 1".into());
            }
            if b.iteration_cap == Some(0) {
                problems.push("bench.iteration_cap: must be >= 1".into());
            }
            for (i, p) in b.policies.iter().flatten().enumerate() {
                if let Err(e) = p.validate() {
                    problems.push(format!("bench.policies[{i}]: {e}"));
                }
            }
        }

        if !problems.is_empty() {
            return Err(ConfigError { problems });
        }
        let (Some(policy), Some(tasks), Some(horizon)) = (policy, tasks, horizon) else {
            return Err(ConfigError::one("incomplete configuration"));
        };
        Ok(RunConfig {
            policy,
            tasks,
            sim: SimConfig {
                horizon,
                disturbance,
                indexing: indexing.unwrap_or_default(),
                instrument: instrument.unwrap_or(false),
                stop_at_first_miss: stop.unwrap_or(false),
            },
            seed,
            out_dir: overrides.out_dir.clone().or(out_dir),
            bench,
        })
    }
}

impl BenchConfig {
    pub fn options(&self) -> SeriesOptions {
        let d = SeriesOptions::default();
        SeriesOptions {
            hyperperiods: self.hyperperiods.unwrap_or(d.hyperperiods),
            iteration_cap: self.iteration_cap.unwrap_or(d.iteration_cap),
        }
    }

    /// Parses only a `bench` block, for benchmark runs that need no task set.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::one(format!("not valid JSON: {e}")))?;
        let block = value.get("bench").cloned().unwrap_or(Value::Object(Map::new()));
        let cfg: BenchConfig = serde_json::from_value(block).map_err(|e| ConfigError::one(format!("bench: {e}")))?;
        let mut problems = Vec::new();
        if cfg.hyperperiods == Some(0) {
            problems.push("bench.hyperperiods: must be >= 1".into());
        }
        if cfg.iteration_cap == Some(0) {
            problems.push("bench.iteration_cap: must be >= 1".into());
        }
        for (i, p) in cfg.policies.iter().flatten().enumerate() {
            if let Err(e) = p.validate() {
                problems.push(format!("bench.policies[{i}]: {e}"));
            }
        }
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError { problems })
        }
    }
}
