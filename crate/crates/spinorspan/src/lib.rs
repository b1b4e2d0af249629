//! Exact computer algebra for pure spinor multiplets, their Tate resolutions
//! and the spans of open-closed homotopy algebras that relate them.
//!
//! All arithmetic is over exact rationals and every infinite object is cut to
//! a finite weight window, so each claim the library checks is checked
//! exactly on a finite basis.

pub mod grading;
pub mod homology;
pub mod linalg;
pub mod linfty;
pub mod multiplets;
pub mod ocha;
pub mod report;
pub mod scalar;
pub mod span;
pub mod tate;
pub mod transfer;

pub use grading::{
    Bidegree, Derivation, FreeSCAlgebra, Generator, Monomial, Poly, TruncationWindow,
};
pub use scalar::Scalar;
