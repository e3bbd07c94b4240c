#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod algebra;
pub mod cli;
pub mod codec;
pub mod constants;
pub mod error;
pub mod format;
pub mod pipelines;
pub mod wavepacket;

pub use error::{Error, Result};
