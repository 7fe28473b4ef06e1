//! Synthetic corpus generation and the precision benchmark.

mod bench;
mod generate;

pub use bench::*;
pub use generate::*;
