//! Discrete-time scheduling simulator.
//!
//! A pool of periodic tasks on one processor is modelled as a plant that
//! executes one round at a time. Schedulers are feedback policies that see
//! the last round's observables and emit the next round's ordered budgets.
//! The crate ships a cascade PI/integral scheduler, RR, Selfish RR, EDF and
//! LLF baselines, the Hartstone PH benchmark series and trace metrics.
//!
//! ```
//! use ctsched::{hartstone, run_simulation, PolicyConfig, SimConfig};
//!
//! let specs = hartstone::baseline_set();
//! let mut edf = PolicyConfig::Edf.build(&specs).unwrap();
//! let trace = run_simulation(&specs, edf.as_mut(), &SimConfig::new(10_000)).unwrap();
//! assert!(trace.misses.is_empty());
//! ```

pub mod baselines;
pub mod compare;
pub mod config;
pub mod controllers;
pub mod error;
pub mod hartstone;
pub mod metrics;
pub mod par;
pub mod plant;
pub mod policy;
pub mod sim;
pub mod task;
pub mod trace_io;

pub use error::{Result, SimError};
pub use plant::{DisturbanceMode, DisturbanceSpec, Plant, RoundIndexing, RoundRecord, Schedule, Slot};
pub use policy::PolicyConfig;
pub use sim::{run_simulation, run_with_observer, PlantView, SchedulerPolicy, SimConfig, SimulationTrace};
pub use task::{TaskSpec, TaskState, Time};
