//! Solver library for joint communication-computation resource allocation in
//! digital-twin synchronization over wireless networks.
//!
//! The problem: K devices stream status data to a central server over N time
//! slots. Minimize total transmission delay subject to twin-accuracy targets,
//! per-device energy budgets, scheduling regularity, and a per-slot resource
//! block cap. The main entry point is [`alternating::solve`], which alternates
//! a device-scheduling dual method, successive convex approximation for power
//! control, and a data-offloading LP. The K=1 case has a dedicated exact
//! pipeline in [`single_device`].

pub mod alternating;
pub mod convex;
pub mod error;
pub mod harness;
pub mod model;
pub mod offloading;
pub mod oracles;
pub mod power;
pub mod scheduling;
pub mod single_device;

pub use error::Error;
pub use model::{Allocation, ChannelRealization, FeasibilityReport, ScenarioConfig};

pub type Result<T> = std::result::Result<T, Error>;
