//! Discrete-time simulation and analysis of robots ferrying messages between
//! static source/sink pairs.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds geometry, the distance-dependent rate model and the
//!   static network description.
//! * [`engine`] advances queues and robot positions one time step at a time
//!   and runs whole simulations epoch by epoch.
//! * [`scheduler`] decides the robot allocation at every epoch boundary
//!   (coarse-grained backpressure, a brute-force oracle, or a fixed program).
//! * [`capacity`] answers capacity-region questions and turns a rate vector
//!   into an executable time-sharing program.
//! * [`analytics`] evaluates the closed-form delay of the one-flow/two-robot
//!   system and post-processes simulation metrics.
//! * [`experiment`] loads configuration files, runs sweeps and writes CSV.

pub mod analytics;
pub mod capacity;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod model;
pub mod quadrature;
pub mod scheduler;

pub use error::{Error, Result};
