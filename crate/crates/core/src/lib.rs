//! Fairness transfer across domains.
//!
//! Trains multi-head networks whose auxiliary heads penalize prediction-distribution
//! gaps across sensitive groups and across domains, measures equal-opportunity and
//! equalized-odds distances, and estimates the divergence and complexity terms that
//! bound target-domain unfairness by source-domain unfairness.

pub mod data;
pub mod divergence;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod numcore;
pub mod seed;

pub use error::{Error, Result};
