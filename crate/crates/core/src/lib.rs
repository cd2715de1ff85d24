#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chords;
pub mod continuation;
pub mod error;
pub mod flow;
pub mod homology;
pub mod index;
pub mod kepler;
pub mod systems;

pub use error::{Error, Result};
