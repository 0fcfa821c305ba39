//! View-based 3D shape retrieval with a depth-view autoencoder.
//!
//! The pipeline turns each triangle mesh into a set of depth-buffer images
//! rendered from a sphere of viewpoints, learns a low-dimensional code for
//! every view with a DBN-initialized autoencoder, and matches shapes by an
//! averaged-minimum set-to-set distance over their code sets. A
//! bag-of-features channel built on dense local gradient descriptors can be
//! fused with the code-space distances, and retrieval quality is scored with
//! nearest-neighbor, first-tier and second-tier statistics.
//!
//! The `shapecode` binary drives the same stages from the command line; see
//! the guide in `book/` for a walkthrough of each stage.

pub mod autoencoder;
pub mod bof;
pub mod dbn;
pub mod error;
pub mod matching;
pub mod mesh;
pub mod projection;
pub mod rbm;

pub use error::{Error, Result};
