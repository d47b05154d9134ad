//! Named policy configurations and the factory that instantiates them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::baselines::{Edf, Llf, RoundRobin, SelfishRoundRobin, SrrParams};
use crate::controllers::{CascadeGains, CascadePolicy, SetPoints};
use crate::error::{Result, SimError};
use crate::sim::SchedulerPolicy;
use crate::task::{TaskSpec, Time};

fn default_tick() -> Time {
    1
}

/// A scheduling policy and its parameters, as read from a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicyConfig {
    Rr {
        quantum: Time,
    },
    Srr {
        #[serde(default = "srr_a")]
        a: f64,
        #[serde(default = "srr_b")]
        b: f64,
        #[serde(default = "srr_quantum")]
        quantum: Time,
    },
    Edf,
    Llf {
        #[serde(default = "default_tick")]
        tick: Time,
    },
    #[serde(alias = "psc+bcc")]
    Cascade {
        tau_r_star: f64,
        /// Defaults to each task's share of the total work rate.
        #[serde(default)]
        theta_star: Option<Vec<f64>>,
        #[serde(default)]
        gains: CascadeGains,
    },
}

fn srr_a() -> f64 {
    SrrParams::default().a
}

fn srr_b() -> f64 {
    SrrParams::default().b
}

fn srr_quantum() -> Time {
    SrrParams::default().quantum
}

impl PolicyConfig {
    pub fn cascade(tau_r_star: f64) -> Self {
        PolicyConfig::Cascade {
            tau_r_star,
            theta_star: None,
            gains: CascadeGains::default(),
        }
    }

    /// Parses `edf`, `llf[:tick]`, `rr:q`, `srr[:q]`, `cascade:tau` or
    /// `psc+bcc:tau`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let int = |a: Option<&str>, what: &str| -> Result<Option<Time>> {
            a.map(|s| {
                s.trim()
                    .parse::<Time>()
                    .map_err(|_| SimError::Config(format!("policy `{spec}`: {what} must be an integer")))
            })
            .transpose()
        };
        let cfg = match name.trim().to_ascii_lowercase().as_str() {
            "edf" => PolicyConfig::Edf,
            "llf" => PolicyConfig::Llf {
                tick: int(arg, "tick")?.unwrap_or(1),
            },
            "rr" => PolicyConfig::Rr {
                quantum: int(arg, "quantum")?
                    .ok_or_else(|| SimError::Config(format!("policy `{spec}`: rr needs a quantum, e.g. rr:10")))?,
            },
            "srr" => {
                let d = SrrParams::default();
                PolicyConfig::Srr {
                    a: d.a,
                    b: d.b,
                    quantum: int(arg, "quantum")?.unwrap_or(d.quantum),
                }
            }
            "cascade" | "psc+bcc" => {
                let tau = arg
                    .ok_or_else(|| SimError::Config(format!("policy `{spec}`: needs a round set point, e.g. cascade:1000")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| SimError::Config(format!("policy `{spec}`: set point must be a number")))?;
                PolicyConfig::cascade(tau)
            }
            other => return Err(SimError::Config(format!("unknown policy `{other}`"))),
        };
        cfg.validate().map_err(SimError::Config)?;
        Ok(cfg)
    }

    /// Checks the parameters that do not depend on the task set.
    pub fn validate(&self) -> std::result::Result<(), String> {
        match self {
            PolicyConfig::Rr { quantum } if *quantum <= 0 => Err("rr quantum must be > 0".into()),
            PolicyConfig::Srr { a, b, quantum } => SrrParams {
                a: *a,
                b: *b,
                quantum: *quantum,
            }
            .validate(),
            PolicyConfig::Llf { tick } if *tick < 1 => Err("llf tick must be >= 1".into()),
            PolicyConfig::Cascade {
                tau_r_star, gains, ..
            } => {
                if !(*tau_r_star > 0.0) || !tau_r_star.is_finite() {
                    return Err("cascade tau_r_star must be > 0".into());
                }
                gains.validate()
            }
            _ => Ok(()),
        }
    }

    /// Instantiates the policy for `specs`. The cascade's default fractions
    /// are recomputed from the given set.
    pub fn build(&self, specs: &[TaskSpec]) -> Result<Box<dyn SchedulerPolicy>> {
        self.validate().map_err(SimError::Config)?;
        Ok(match self {
            PolicyConfig::Rr { quantum } => Box::new(RoundRobin::new(*quantum)),
            PolicyConfig::Srr { a, b, quantum } => Box::new(SelfishRoundRobin::new(SrrParams {
                a: *a,
                b: *b,
                quantum: *quantum,
            })),
            PolicyConfig::Edf => Box::new(Edf),
            PolicyConfig::Llf { tick } => Box::new(Llf::new(*tick)),
            PolicyConfig::Cascade {
                tau_r_star,
                theta_star,
                gains,
            } => {
                let sp = match theta_star {
                    Some(theta) => {
                        if theta.len() != specs.len() {
                            return Err(SimError::Config(format!(
                                "theta_star has {} entries for {} tasks",
                                theta.len(),
                                specs.len()
                            )));
                        }
                        SetPoints::new(*tau_r_star, theta.clone())?
                    }
                    None => SetPoints::workload_shares(*tau_r_star, specs)?,
                };
                Box::new(CascadePolicy::new(sp, *gains)?)
            }
        })
    }

    /// Short label used in reports, e.g. `RR q=5` or `PSC+BCC tau_r=1000`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PolicyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyConfig::Rr { quantum } => write!(f, "RR q={quantum}"),
            PolicyConfig::Srr { a, b, quantum } => write!(f, "SRR a={a} b={b} q={quantum}"),
            PolicyConfig::Edf => f.write_str("EDF"),
            PolicyConfig::Llf { tick } => write!(f, "LLF tick={tick}"),
            PolicyConfig::Cascade { tau_r_star, .. } => write!(f, "PSC+BCC tau_r={tau_r_star}"),
        }
    }
}

/// The eight rows of the Hartstone PH comparison.
pub fn table2_policies() -> Vec<PolicyConfig> {
    vec![
        PolicyConfig::Edf,
        PolicyConfig::Llf { tick: 1 },
        PolicyConfig::Rr { quantum: 1 },
        PolicyConfig::Rr { quantum: 5 },
        PolicyConfig::Rr { quantum: 10 },
        PolicyConfig::cascade(500.0),
        PolicyConfig::cascade(1000.0),
        PolicyConfig::cascade(2000.0),
    ]
}
