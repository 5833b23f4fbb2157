//! Quasi-decision procedure for robust bounded sentences over the reals.

pub mod degree;
pub mod formula;
pub mod geometry;
pub mod interval;
pub mod solver;
mod par;

pub use par::{available as parallel_available, with_workers};
