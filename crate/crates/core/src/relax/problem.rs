use nalgebra::DMatrix;

use super::basis::{build_basis, MonomialBasis};
use crate::error::{Error, Result};
use crate::phi::PhiFunction;
use crate::plant::SwitchedPlant;
use crate::poly::{monomials_up_to, BoxDomain, Interval, Monomial, Polynomial};

/// Interval bounds on every moment, i.e. on every entry of `Z`.
#[derive(Clone, Debug)]
pub struct LiftedBox {
    pub bounds: Vec<Interval>,
}

impl LiftedBox {
    pub fn entry(&self, basis: &MonomialBasis, i: usize, j: usize) -> Interval {
        self.bounds[basis.entry_moment(i, j)]
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.bounds.iter().zip(y).all(|(b, &v)| b.lo - tol <= v && v <= b.hi + tol)
    }
}

pub fn build_lifted_box(basis: &MonomialBasis, domain: &BoxDomain) -> LiftedBox {
    let bounds = basis
        .moments()
        .iter()
        .map(|m| Polynomial::monomial(basis.nvars(), m.clone(), 1.0).interval_eval(domain))
        .collect();
    LiftedBox { bounds }
}

/// A relaxed counterexample: the moment vector of a PSD moment matrix, in
/// original state coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessMatrix {
    pub moments: Vec<f64>,
}

impl WitnessMatrix {
    pub fn matrix(&self, basis: &MonomialBasis) -> DMatrix<f64> {
        basis.moment_matrix(&self.moments)
    }
}

pub fn lift_point(basis: &MonomialBasis, x: &[f64]) -> WitnessMatrix {
    WitnessMatrix { moments: basis.lift_moments(x) }
}

/// All monomials of degree exactly two: the quadratic-form template.
pub fn quadratic_template(n: usize) -> Vec<Monomial> {
    monomials_up_to(n, 2).into_iter().filter(|m| m.degree() == 2).collect()
}

/// Everything the check and find steps need, with polynomial data kept in
/// original coordinates and Gram matrices available on demand.
#[derive(Clone, Debug)]
pub struct RelaxedProblem {
    pub nvars: usize,
    pub basis: MonomialBasis,
    pub lifted_box: LiftedBox,
    pub template: Vec<Monomial>,
    /// `alpha(x) = alpha_scale * sum x_i^2`.
    pub alpha: Polynomial,
    pub alpha_scale: f64,
    /// `-L_{f_q} m_j` for mode `q`, template monomial `j`.
    pub mode_parts: Vec<Vec<Polynomial>>,
    /// `eps_q phi_q` per mode.
    pub decrease: Vec<Polynomial>,
    /// Lower bound imposed on `<G, Z>` to keep witnesses away from the origin
    /// (or out of the target ball).
    pub exclusion: f64,
    /// Per-axis scale `max(|lo|, |hi|)` used to normalize the conic programs.
    pub scale: Vec<f64>,
    pub domain: BoxDomain,
    pub excluded_radius: f64,
}

impl RelaxedProblem {
    pub fn modes(&self) -> usize {
        self.mode_parts.len()
    }

    pub fn v(&self, c: &[f64]) -> Polynomial {
        combine(self.nvars, self.template.iter().map(|m| Polynomial::monomial(self.nvars, m.clone(), 1.0)), c)
    }

    /// `-V'_q(c, .)`.
    pub fn neg_vdot(&self, q: usize, c: &[f64]) -> Polynomial {
        combine(self.nvars, self.mode_parts[q].iter().cloned(), c)
    }

    pub fn f_matrix(&self, c: &[f64]) -> Result<DMatrix<f64>> {
        self.basis.gram(&self.v(c))
    }

    pub fn fq_matrix(&self, q: usize, c: &[f64]) -> Result<DMatrix<f64>> {
        self.basis.gram(&self.neg_vdot(q, c))
    }

    pub fn g_matrix(&self) -> Result<DMatrix<f64>> {
        self.basis.gram(&self.alpha)
    }

    pub fn gq_matrix(&self, q: usize) -> Result<DMatrix<f64>> {
        self.basis.gram(&self.decrease[q])
    }
}

fn combine<I: Iterator<Item = Polynomial>>(n: usize, parts: I, c: &[f64]) -> Polynomial {
    let mut out = Polynomial::zero(n);
    for (p, &cj) in parts.zip(c) {
        if cj != 0.0 {
            out = out.add(&p.scale(cj));
        }
    }
    out
}

/// Assembles the relaxation for `V = sum c_j m_j`, `alpha = alpha_scale |x|^2`
/// and per-mode decrease `eps_q phi_q`.
pub fn assemble(
    plant: &SwitchedPlant,
    template: &[Monomial],
    alpha_scale: f64,
    phis: &[PhiFunction],
    eps: &[f64],
    strict: f64,
) -> Result<RelaxedProblem> {
    let n = plant.n();
    if template.is_empty() {
        return Err(Error::Invalid("empty template".into()));
    }
    if template.iter().any(|m| m.min_nvars() > n) {
        return Err(Error::Invalid("template uses undeclared variables".into()));
    }
    let q = plant.modes.len();
    if phis.len() != q || eps.len() != q {
        return Err(Error::Dimension { expected: q, got: phis.len().min(eps.len()) });
    }
    let alpha = Polynomial::from_terms(n, (0..n).map(|i| (Monomial::var_pow(i, 2), alpha_scale)));
    let mut mode_parts = Vec::with_capacity(q);
    for mode in &plant.modes {
        let parts = template
            .iter()
            .map(|m| Ok(Polynomial::monomial(n, m.clone(), 1.0).lie_derivative(&mode.field)?.scale(-1.0)))
            .collect::<Result<Vec<_>>>()?;
        mode_parts.push(parts);
    }
    let decrease: Vec<Polynomial> = phis.iter().zip(eps).map(|(p, &e)| p.polynomial().with_nvars(n).scale(e)).collect();
    let templ_polys: Vec<Polynomial> = template.iter().map(|m| Polynomial::monomial(n, m.clone(), 1.0)).collect();
    let mut all: Vec<&Polynomial> = templ_polys.iter().collect();
    all.push(&alpha);
    all.extend(mode_parts.iter().flatten());
    all.extend(decrease.iter());
    let basis = build_basis(n, &all)?;
    let lifted_box = build_lifted_box(&basis, &plant.domain);
    let r = plant.spec.excluded_radius();
    Ok(RelaxedProblem {
        nvars: n,
        basis,
        lifted_box,
        template: template.to_vec(),
        alpha,
        alpha_scale,
        mode_parts,
        decrease,
        exclusion: alpha_scale * (r * r + strict),
        scale: plant.domain.radii().into_iter().map(|s| if s > 0.0 { s } else { 1.0 }).collect(),
        domain: plant.domain.clone(),
        excluded_radius: r,
    })
}
