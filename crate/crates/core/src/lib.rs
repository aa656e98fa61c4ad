//! Numerical laboratory for embedding-based adjoints on rigged spaces
//! `H₁ ⊆ B ⊆ H₂` at finite dimension.
//!
//! The crate is `no_std` and needs only `alloc`. IO, file formats and the
//! command line live in the `gk-lab` companion crate.
//!
//! * [`rigging`]: the triple, its norms, conjugate isomorphisms and duality maps.
//! * [`adjoint`]: `A* = W₁⁻¹AᵀW₂`, `A*A`, and property checkers.
//! * [`matfun`]: square roots, exponentials, resolvents, pseudo-inverses, induced norms.
//! * [`approx`]: polar factors, the generalized Yosida approximator, the operator metric.
//! * [`basis`]: unit-norm Markushevich bases.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod adjoint;
pub mod approx;
pub mod basis;
pub mod ensemble;
pub mod error;
pub mod matfun;
pub mod norm;
pub mod report;
pub mod rigging;

pub use adjoint::Operator;
pub use error::{Error, Result};
pub use norm::{BanachNorm, Functional};
pub use report::PropertyReport;
pub use rigging::{make_rigging, Rigging, Space};

pub use nalgebra::{DMatrix, DVector};
