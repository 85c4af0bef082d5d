//! Simulation core for the directed spanning forest (DSF) built on a planar
//! Poisson point process.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the
//! algorithmic parts: lazily generated Poisson stores, the ancestor map,
//! the joint exploration process of `k` paths, renewal detection,
//! coalescence measurements, the dual forest, diffusive scaling and the
//! radial spanning tree. File formats, configuration and the experiment
//! runner live in the `dsf` crate.
//!
//! Coordinates follow the usual convention for directed forests: the
//! abscissa `x` is space and the ordinate `y` is time. Paths always move
//! upward in `y`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod coalesce;
pub mod dual;
mod error;
pub mod explore;
pub mod forest;
pub mod geom;
pub mod math;
pub mod ppp;
pub mod renewal;
pub mod rst;
pub mod scaling;
pub mod stats;

pub use error::{Error, Result};
pub use geom::{HistorySet, Point, Rect, SemiBall};
pub use ppp::{FixedPoints, PointSource, PoissonStore, StoreConfig};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
