//! Nilpotent matrices as single commutators.
//!
//! Given a nilpotent `A`, this crate computes `B`, `C` with `A = BC − CB`
//! in two ways:
//!
//! * [`construct::construct_proposition`]: `B` is a block shift of
//!   identities and `C` a recursion over the blocks of `A`;
//! * [`construct::construct_theorem`]: `B` and `C` are built from fourth
//!   roots and contractions so their singular values decay like those of
//!   `|A|^{1/2^{n−3}}` where `Aⁿ = 0`.
//!
//! The pipeline is [`canonicalize::triangularize`] (kernel flag, unitary
//! to strictly block upper triangular form, padding to equal blocks),
//! then a construction, then [`construct::verify_commutator`].
//! [`analysis`] measures singular-value decay of the factors and
//! [`testgen`] produces seeded nilpotent inputs.

pub mod analysis;
pub mod canonicalize;
pub mod construct;
pub mod douglas;
pub mod error;
pub mod matrix;
pub mod mtx;
pub mod parallel;
pub mod pipeline;
pub mod report;
pub mod scan;
pub mod testgen;

pub use error::{Error, Result};
pub use matrix::{Matrix, C64};
