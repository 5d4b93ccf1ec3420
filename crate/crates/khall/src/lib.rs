//! Exact symbolic kernel for the K-theoretic Hecke commutator calculus:
//! Laurent/rational-function expansions, formal delta distributions,
//! lambda-operations on split K-classes, the shuffle algebra, and the
//! commutator derivation pipeline.

pub mod dist;
pub mod error;
pub mod hall;
pub mod kclass;
pub mod laurent;
pub mod ratfun;
pub mod ring;
pub mod shuffle;

pub use error::{AlgebraError, Result};
