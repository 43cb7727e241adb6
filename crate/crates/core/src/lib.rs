//! Persistent homology of 1-dimensional filtered complexes and a learnable
//! projection layer that turns persistence diagrams into fixed-size,
//! Wasserstein-stable feature vectors.
//!
//! The pipeline is:
//!
//! 1. [`filtrations`] builds a [`FilteredComplex`] from a binary image
//!    (directional height function) or a graph (normalized vertex degree).
//! 2. [`persistence`] computes dimension-0 diagrams with union-find and
//!    dimension-1 essential births; a brute-force persistent-Betti oracle
//!    checks both.
//! 3. [`layer`] projects diagrams onto learnable structure elements and
//!    provides exact gradients with respect to their centers and scales.
//! 4. [`nn`] trains a small classifier head end-to-end on the layer output.
//!
//! [`metrics`] (Wasserstein and bottleneck distances) and [`baseline`]
//! (sorted-persistence vectorization with a linear SVM) support evaluation.

// `!(a >= b)` style guards are used to reject NaN along with the failing range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod check;
pub mod error;
pub mod filtrations;
pub mod io;
pub mod layer;
pub mod metrics;
pub mod nn;
pub mod persistence;
pub mod synth;

mod gf2;

pub use error::{Error, Result};
pub use filtrations::{BinaryImage, Direction};
pub use layer::{EssentialParams, LayerGradients, LayerParams, RotatedPoint, StructureElement};
pub use metrics::Norm;
pub use nn::{Checkpoint, Model, ModelConfig};
pub use persistence::{BettiTable, FilteredComplex, PersistenceDiagram};
