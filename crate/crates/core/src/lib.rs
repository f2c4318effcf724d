//! Newton methods for the zeros of Oja's vector field `F(X) = AX - X X^T A X`.
//!
//! The zeros of `F` come in orbits `X O_p` and are therefore degenerate for
//! the plain Newton iteration. Working on the quotient `R*^{n x p} / O_p`
//! removes the symmetry; the resulting geometric Newton iteration converges
//! quadratically to orthonormal bases of invariant subspaces of `A`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod io;
pub mod krylov;
pub mod linalg;
pub mod newton;

pub use error::{Error, Result};
