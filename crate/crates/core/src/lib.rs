//! Nearly-elastic collision systems and their stochastically regularized
//! limit on the energy graph.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! file system, threads or the command line lives in the `nearelastic` crate.
//!
//! Module map:
//!
//! * [`model1d`]: flat multi-well and general-potential models, energy graph,
//!   oscillation periods.
//! * [`sim1d`]: event-driven simulation of the 1D systems.
//! * [`regularize`]: initial-condition and dynamics noise, strip analysis,
//!   the counterexample geometry.
//! * [`walk`]: alternating random walk and its stopping parity.
//! * [`limitproc`]: edge flows, vertex kernels and sample paths of the limit.
//! * [`billiard2d`]: convex billiard, angle diffusion and wall branching.
//! * [`stats`], [`rng`], [`runner`]: Monte Carlo plumbing.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![forbid(unsafe_code)]
#![warn(missing_debug_implementations)]

extern crate alloc;

mod prelude;

pub mod billiard2d;
pub mod error;
pub mod limitproc;
pub mod math;
pub mod model1d;
pub mod noise;
pub mod path;
pub mod regularize;
pub mod rng;
pub mod runner;
pub mod sim1d;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
