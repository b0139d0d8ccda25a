//! Dense conic interior-point solver and the check step built on it.

mod check;
mod cone;
mod problem;

pub use check::{check_candidate, check_program, CheckOutcome, CounterexampleReport, ProgramReport, Violation};
pub use cone::{solve_cone, ConeProgram, ConeSolution, ConeStatus, ConeTolerances, ConeVec, PsdBlock};
pub use problem::{solve, to_cone, to_sdpa, LinearConstraint, Relation, SdpProblem, SdpSolution, SdpStatus, ToleranceSet};
