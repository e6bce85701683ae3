//! Performance modeling, prediction and simulation of asynchronous
//! parameter-server training on clusters of revocable (transient) cloud GPU
//! servers.

// Index loops read better in the matrix code; negated float comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod advisor;
pub mod data;
pub mod perf;
pub mod regression;
pub mod revocation;
pub mod simulator;
