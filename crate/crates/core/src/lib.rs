//! Joint channel estimation and multi-user detection for cloud radio access
//! networks.
//!
//! The unknown `X = ΛH^H` stacks the channels of all users (rows) towards
//! all RRHs (columns); inactive users contribute all-zero row chunks and far
//! RRHs near-zero element chunks. [`admm::solve`] recovers `X` from pilots
//! `A` and observations `B = AX + N` by minimising a weighted mixed ℓ2,1
//! functional with re-weighted ADMM. [`oracle`] provides an independent
//! reference solver and an optimality checker, [`scenario`] synthesises
//! instances and [`harness`] runs pilot-length sweeps.

pub mod admm;
pub mod error;
pub mod functional;
pub mod harness;
pub mod matrix;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod scenario;
pub mod shrinkage;
pub mod textio;

pub use error::{Error, Result};
pub use matrix::{ChunkLayout, ComplexMatrix, C64};
