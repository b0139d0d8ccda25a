//! Sparse multivariate polynomials, intervals and boxes.

mod interval;
mod json;
mod monomial;
mod polynomial;

pub use interval::{BoxDomain, Interval};
pub use json::{monomial_from_powers, monomial_to_powers, poly_from_terms, poly_to_terms, Term};
pub use monomial::{monomials_up_to, Monomial};
pub use polynomial::{eval_field, Polynomial, ZERO_TOL};
