//! Exact computer algebra for the bosonic CKP hierarchy.
//!
//! The free-boson Fock space is realized on polynomials in auxiliary variables
//! `z_{1/2}, z_{3/2}, …` with coefficients in a supercommutative ring of even and
//! Grassmann-odd times. On top of this engine the crate builds the polynomial family
//! `C_λ`, its Hafnian closed form, scalar product, Cauchy–Littlewood identities, tau
//! functions and Hirota bilinear checks.

pub mod ckp;
pub mod cli;
pub mod error;
pub mod fock;
pub mod matfun;
pub mod partitions;
pub mod ring;
pub mod symfun;

pub use error::CkpError;
