// `!(x > 0.0)` style checks are there to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod age_metrics;
pub mod delay_models;
pub mod dtn;
pub mod harness;
pub mod policies;
pub mod sim_core;
pub mod random_access;
