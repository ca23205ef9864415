//! Spatial random graphs with Gibbs vertex processes: simulation, graph
//! birth-death dynamics and couplings, GOSPA and Wasserstein distances, and
//! Stein-type approximation bounds with empirical verification harnesses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod bounds;
pub mod error;
pub mod experiments;
pub mod gbdp;
pub mod gospa;
pub mod graph;
pub mod point_process;
pub mod space;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};
