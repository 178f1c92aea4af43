//! Scalar sparse matrices: storage, Matrix Market I/O, arrowhead generation
//! and structure analysis.

mod csc;
mod generate;
mod graph;
mod market;
mod stats;

pub use csc::{permute_symmetric, SymmetricCsc};
pub use generate::{generate_arrowhead, ArrowheadSpec};
pub use graph::AdjacencyGraph;
pub use market::{read_matrix_market, read_matrix_market_file, write_matrix_market, write_matrix_market_file};
pub use stats::{structure_stats, structure_stats_with_threshold, StructureStats, DEFAULT_THICKNESS_THRESHOLD};
