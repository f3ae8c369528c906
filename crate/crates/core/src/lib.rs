//! Detection of unidentified floating objects in maritime frames.
//!
//! Each frame is decomposed into a dyadic pyramid. At every level a
//! dictionary is learned from the level's own patches with K-SVD, the level
//! is reconstructed from its sparse codes, and the residual (input minus
//! reconstruction) keeps only noise and structures that do not repeat across
//! the frame. Residuals are Gaussianized, filtered with disk kernels and
//! tested against a Number-of-False-Alarms threshold; significant pixels
//! become boxes that are fused and filtered by interest points.
//!
//! Modules, in pipeline order:
//!
//! - [`imaging`]: buffers, frame I/O, pyramids, patches, disk filtering.
//! - [`sparse`]: ORMP, K-SVD, reconstruction and residuals.
//! - [`acontrario`]: GGD fitting, Gaussianization, NFA tests.
//! - [`geometry`]: boxes, fusion, interest points, refinement.
//! - [`pipeline`]: configuration, frame/sequence drivers, records, evaluation.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acontrario;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod pipeline;
pub mod sparse;

pub use error::{Error, Result};
pub use imaging::{ImageBuffer, Plane};
