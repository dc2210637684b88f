//! Last-iterate suboptimality bounds for (sub)gradient descent under
//! learning-rate schedules, and the tuning procedures built on them.

pub mod bound;
pub mod error;
pub mod scaling;
pub mod schedule;
pub mod summation;
pub mod simulate;
pub mod table;
pub mod tuning;

pub use error::{Error, Result};
