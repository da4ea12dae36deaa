//! Numerical laboratory for nonassociative field theory: associator
//! normal forms, torsion/contorsion identities, the closed-form regular
//! charge and the shooting solver for its profile.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assoc;
pub mod charge;
pub mod numerics;
pub mod par;
pub mod shooting;
pub mod torsion;

pub use par::Execution;
