//! Finite-scale estimators for upper metric mean dimension with potential on
//! shift systems.
//!
//! The crate is organised bottom-up:
//!
//! * [`systems`]: shift models, the weighted symbol metric, potentials.
//! * [`bowen`]: Bowen metrics, separated and spanning sets, the 5r lemma.
//! * [`pressure`]: pressure sums, dimension regression, induced pressure and
//!   the Bowen-equation root solver.
//! * [`caratheodory`]: cover, packing, BS and weighted structures on finite
//!   subsets, with critical-exponent extraction.
//! * [`measure`] and [`entropy`]: measures, ball masses and local entropies.
//! * [`config`], [`report`], [`runner`]: the experiment runner behind the CLI;
//!   [`verify`] holds the executable invariant suites.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bowen;
pub mod caratheodory;
pub mod config;
pub mod entropy;
pub mod error;
pub mod measure;
pub mod optimize;
pub mod pressure;
pub mod report;
pub mod runner;
pub mod stats;
pub mod systems;
pub mod verify;

pub use error::{Error, Result};
pub use systems::{PointWindow, Potential, Sidedness, SystemFamily, SystemModel};
