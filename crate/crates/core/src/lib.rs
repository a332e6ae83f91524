// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod descriptor;
pub mod error;
pub mod eval;
pub mod features;
pub mod fusion;
pub mod geometry;
pub mod islands;
pub mod pipeline;
pub mod synth;
pub mod types;
pub mod vocab;

pub use descriptor::{hamming, similarity, Descriptor, DESCRIPTOR_BITS};
pub use error::{Error, Result};
pub use types::{FrameFeatures, FrameId, KeyPoint, LineSegment};
