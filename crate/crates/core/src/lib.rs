//! Accelerated average consensus on undirected graphs with a lazy Metropolis
//! averaging matrix, plus distributed subgradient optimization, formation
//! control and leader following built on the same update.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod consensus;
pub mod error;
pub mod graphs;
pub mod multiagent;
pub mod optimize;
pub mod rng;

pub use error::{Error, Result};
