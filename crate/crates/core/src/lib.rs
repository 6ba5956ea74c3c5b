//! Signed graph representation learning on paired signed/unsigned graphs.
//!
//! A signed graph (for example a functional connectivity matrix) is encoded
//! by two attention heads: a balanced/unbalanced head that propagates
//! features along walks according to the parity of negative edges, and a
//! positive/negative head that runs graph attention separately on the two
//! sign-split subgraphs. The fused node latents feed an inner-product decoder
//! that reconstructs an unsigned graph (for example structural connectivity)
//! and a sum readout followed by an MLP for classification or regression.
//!
//! The crate is `no_std` with `alloc`. Everything that touches files, the
//! command line, or serialization lives in the companion `dsbn` crate.
//!
//! Module map:
//!
//! - [`tensor`]: dense 2-D value type.
//! - [`autodiff`]: define-by-run reverse-mode tape and gradient checking.
//! - [`graph`]: signed/unsigned graphs, preprocessing, balance oracle,
//!   quantile node features.
//! - [`encoder`]: attention scores, BUE/PNE heads, fusion.
//! - [`model`]: decoder, readout, MLP head, losses, saliency, metrics.
//! - [`train`]: Adam, learning-rate schedule, early stopping, k-fold CV.
//! - [`synth`]: seeded generator of paired synthetic subjects.
//! - [`seed`]: splittable seed derivation shared by the generator and trainer.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod autodiff;
pub mod encoder;
mod error;
pub mod graph;
pub(crate) mod math;
pub mod model;
pub mod seed;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::Tensor;
