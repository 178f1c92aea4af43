//! Sparsity-aware tile Cholesky factorization for symmetric positive-definite
//! block arrowhead matrices.
//!
//! The pipeline has three phases:
//!
//! 1. **Ordering** ([`ordering`]): a fill-reducing permutation chosen among
//!    partial RCM, minimum degree and an arrowhead-aware nested dissection,
//!    accepted only if it lowers the symbolic fill of the factor.
//! 2. **Symbolic** ([`ctsf`], [`symbolic`]): the permuted matrix is packed into
//!    fixed-size dense tiles (only occupied tiles are allocated), the tile-level
//!    factor pattern is computed and the work is cut into per-worker task tables.
//! 3. **Numeric** ([`kernels`], [`scheduler`]): POTRF/TRSM/SYRK/GEMM tasks run
//!    either sequentially (left-looking) or on a static pipelined worker pool
//!    synchronised through a progress table, optionally splitting long
//!    accumulation chains with a GEADD tree reduction.
//!
//! [`api`] ties the phases together.

pub mod api;
pub mod ctsf;
pub mod error;
pub mod kernels;
pub mod matcore;
pub mod ordering;
pub mod scheduler;
pub mod symbolic;

pub use api::{factorize, factorize_many, FactorContext, FactorOptions, OrderingPolicy, ReductionPolicy};
pub use error::{Error, Result};
pub use matcore::{ArrowheadSpec, SymmetricCsc};
pub use ordering::Permutation;
