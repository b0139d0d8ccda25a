//! Synthesis of non-zeno control Lyapunov functions for switched polynomial
//! systems: a CEGIS loop over a moment relaxation, dwell-time certificates and
//! a closed-loop simulator for the resulting switching law.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod error;
pub mod poly;

pub use error::{Error, Result};
pub use nalgebra::DMatrix;
pub use poly::{BoxDomain, Interval, Monomial, Polynomial};
pub mod lp;
pub mod phi;
pub mod plant;
pub mod relax;
pub mod sdp;
pub mod candidate;
pub mod cegis;
pub mod sim;
