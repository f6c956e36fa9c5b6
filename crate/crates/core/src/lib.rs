//! Min-sum scheduling on a single machine of varying speed and under speed scaling.
//!
//! The crate provides exact rational cost evaluation in time-space and weight-space,
//! approximation schemes for given speeds and for discrete speed menus, the closed-form
//! solution for continuous speed scaling, a list-scheduling algorithm for parallel
//! machines with release dates, and exhaustive oracles for verification.

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod generate;
pub mod grid;
pub mod io;
pub mod model;
pub mod oracle;
pub mod parallel;
pub mod ptas;
pub mod rational;
pub mod schedule;
pub mod speed;
pub mod stretch;

pub use error::{Error, Result};
pub use model::{DiscreteSpeedMenu, Instance, InstanceKind, Job, JobId, PowerLaw};
pub use rational::Q;
pub use schedule::{EnergyAssignment, TimeSchedule, WeightSchedule};
pub use speed::{PiecewiseConstantSpeed, SpeedOracle};
