//! Error-bounded online trajectory compression and probabilistic range queries.
//!
//! The crate is organised as a pipeline:
//!
//! * [`geometry`]: planar primitives: point/segment distances, discs,
//!   tangent wedges and the candidate regions that drive the compressor.
//! * [`model`]: raw and compressed trajectory data types.
//! * [`compress`]: the one-pass error-bounded compressor, a brute-force
//!   reference compressor and compression statistics.
//! * [`uncertainty`]: stadium-shaped bounding regions of compressed
//!   segments and Monte-Carlo estimation of the probability that a
//!   discarded point fell inside a query rectangle.
//! * [`index`]: an adaptive median-split quadtree over segment endpoints.
//! * [`query`]: filtering-and-verification range queries over compressed
//!   datasets plus precision/recall evaluation against the raw data.
//! * [`synth`]: seeded synthetic trajectory generation for experiments.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the
//! default `std` feature for embedded use. File formats and the command
//! line live in the companion `traj-cli` crate.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod compress;
pub mod geometry;
pub mod index;
pub mod model;
pub mod query;
pub mod synth;
pub mod uncertainty;
