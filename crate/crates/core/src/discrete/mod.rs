//! Speed scaling on a finite menu of speeds.

pub mod envelope;
pub mod fptas;
pub mod lp;
pub mod ptas;

pub use lp::{interval_energy_lp, IntervalLp};
