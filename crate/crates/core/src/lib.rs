//! RIS-assisted downlink simulator with outdated CSI: phase-shift
//! optimization, multi-user power allocation, and dynamic scheduling of
//! channel-estimation skips, evaluated against coherence-time baselines in
//! a seeded Monte Carlo harness.

pub mod channel;
pub mod cli;
pub mod error;
pub mod linkmetrics;
pub mod mathkit;
pub mod phaseopt;
pub mod powalloc;
pub mod scheduler;
pub mod simkit;

pub use error::{Error, Result};
