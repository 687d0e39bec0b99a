//! Distributed task allocation on a grid of learning agents.
//!
//! The crate is `no_std` and needs only `alloc`. It contains the simplex
//! policy math ([`policy`]), the WPL and GIGA-WoLF learners ([`learner`]),
//! the discrete-event world ([`sim`]) on top of a grid [`topology`], and the
//! streaming diagnostics ([`metrics`]): windowed average total service time
//! and the mean/spread of per-agent policy entropy.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod learner;
pub mod metrics;
pub mod policy;
pub mod sim;
pub mod topology;

pub use learner::{Algorithm, LearnerConfig, LearnerState};
pub use metrics::{drive, MetricsFrame, WindowRecorder};
pub use policy::{entropy, project, sample, GradientVector, Policy};
pub use sim::{Census, Completion, SimConfig, SimError, SimEvent, TaskId, World};
pub use topology::{build_grid, Topology};
