//! Path-level calculus of Lévy trees.
//!
//! Trees are handled through their contour (height) functions sampled on a
//! uniform grid. The crate provides the coding of real trees by excursions,
//! the re-rooting transform, spanned subtrees, discrete and Brownian
//! generators, the spine machinery built from finite measures and skip-free
//! walks, tree-indexed Brownian motion, and the statistics used to check the
//! invariance properties of these objects.
//!
//! The crate is `no_std` and only needs `alloc`. IO, reports and the command
//! line live in the `levytree` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod coding;
pub mod error;
pub mod exact;
pub mod functional;
pub mod generators;
pub mod path;
pub mod rmq;
pub mod rng;
pub mod snake;
pub mod spine;
pub mod stats;

pub use coding::{DistanceMatrix, SpannedTree};
pub use error::{Error, Result};
pub use functional::FunctionalSpec;
pub use generators::{LevyModel, OffspringLaw, PlaneTree, WalkPath};
pub use path::{ContourExcursion, FinitePath, LatticePath};
pub use spine::{FiniteMeasure, SpinePath};

/// Absolute tolerance used for floating comparisons on unit-scale paths.
pub const TOLERANCE: f64 = 1e-12;
