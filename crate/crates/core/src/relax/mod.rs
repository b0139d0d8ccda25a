//! Moment relaxation of the template conditions.

mod basis;
mod problem;

pub use basis::{build_basis, MonomialBasis};
pub use problem::{assemble, build_lifted_box, lift_point, quadratic_template, LiftedBox, RelaxedProblem, WitnessMatrix};
