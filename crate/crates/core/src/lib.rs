//! Weak KAM theory on finite point sets.
//!
//! Starting from a cost kernel `A(x, y)` on a finite set of points this crate
//! computes the critical value, the Peierls barrier `c`, the Aubry set, weak
//! KAM (Kantorovich admissible) pairs, optimal transport for the barrier cost
//! with its dual, and minimizing stationary measures. Every structural
//! identity relating these objects is also exposed as a check returning a
//! residual report.
//!
//! The pipeline is usually
//!
//! 1. [`minplus::normalize`] the kernel so its minimum cycle mean is zero,
//! 2. [`barrier::peierls_barrier`] to get the barrier, Aubry set and `D`,
//! 3. any of [`weakkam`], [`transport`], [`mather`], [`ergodic`] on top.
//!
//! [`barrier::analyze`] bundles the first two steps.

pub mod barrier;
pub mod ergodic;
pub mod error;
pub mod ingest;
pub mod lp;
pub mod mather;
pub mod matrix;
pub mod minplus;
pub mod tolerance;
pub mod transport;
pub mod weakkam;

pub use barrier::BarrierData;
pub use error::{Error, Result};
pub use matrix::{CostKernel, Matrix};
pub use tolerance::Tolerances;
pub use transport::{Coupling, Measure};
pub use weakkam::{KamPair, Potential};
