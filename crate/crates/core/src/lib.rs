//! Parallel volumes of compact sets in low dimensions: exact geometry,
//! fractal strings, explicit constructions with prescribed
//! non-differentiability radii, a grid engine, and analysis tools.

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod analysis;
pub mod constructions;
pub mod engine;
pub mod ext;
pub mod fractal;
pub mod geometry;
