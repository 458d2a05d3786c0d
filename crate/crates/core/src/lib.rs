//! Polyhedral toolkit for set-inclusive generalized equations
//!
//! ```text
//! find x ∈ S  such that  F(x) ⊆ C
//! ```
//!
//! where `S` is a convex polyhedron, `C` a closed convex pointed polyhedral cone and `F` a
//! set-valued mapping whose values are finite unions of `conv{f_j(x)} + cone(K)` with polynomial
//! vertex paths `f_j`. On this class every quantity of the metric `C`-increase theory is
//! computable: excess functions, increase certificates, local error bounds, inner/outer/exact
//! contingent cone approximations of the solution set through fans, and multiplier-type
//! necessary optimality conditions.
//!
//! The crate is `no_std` and only needs `alloc`. IO, problem files and the command line live in
//! the companion `ige` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod cones;
pub mod fans;
pub mod increase;
pub mod mappings;
pub mod numkit;
pub mod optimality;
pub mod sampling;
pub mod setvalues;
pub mod tangency;

pub use error::{Error, Result};
pub use numkit::{Matrix, Tolerances};
