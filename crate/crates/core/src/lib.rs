//! Plane-wave diffraction by collinear cracks in a square mass-spring lattice,
//! solved with an iterative Wiener-Hopf scheme on a rational kernel
//! approximation and checked against an exact lattice Green's-function solution.

pub mod checks;
pub mod error;
pub mod field;
pub mod greens;
pub mod iter;
pub mod kernel;
pub mod lattice;
pub mod quad;
pub mod rfun;
pub mod scenario;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/kernel.md")]
    mod kernel {}
    #[doc = include_str!("../../../book/src/iteration.md")]
    mod iteration {}
    #[doc = include_str!("../../../book/src/field.md")]
    mod field {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
