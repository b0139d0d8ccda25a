//! Phi-boundedness, automatic choice of `phi_q`, the constructive Lambda
//! bounds and the dwell-time bound `h^{-1}(eps)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{BoxDomain, Monomial, Polynomial};

/// `phi(x) = sum_i x_i^(2 d_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiFunction {
    pub d: Vec<u32>,
}

impl PhiFunction {
    pub fn new(d: Vec<u32>) -> Self {
        Self { d }
    }

    /// `sum x_i^2`.
    pub fn quadratic(n: usize) -> Self {
        Self { d: vec![1; n] }
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    /// Constant `phi = n`: positive but not definite.
    pub fn is_constant(&self) -> bool {
        self.d.iter().all(|&d| d == 0)
    }

    pub fn is_definite(&self) -> bool {
        self.d.iter().all(|&d| d >= 1)
    }

    pub fn polynomial(&self) -> Polynomial {
        let n = self.n();
        Polynomial::from_terms(n, self.d.iter().enumerate().map(|(i, &d)| (Monomial::var_pow(i, 2 * d), 1.0)))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.d.iter().zip(x).map(|(&d, &v)| v.powi(2 * d as i32)).sum()
    }
}

/// Per-bound constants for one mode: `V'' <= L1 phi` and `phi' <= L2 phi` on the box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub lambda1: f64,
    pub lambda2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwellBound {
    pub lambda: f64,
    pub delta_lb: f64,
    pub per_mode: Vec<f64>,
}

fn monomial_ok(m: &Monomial, d: &[u32]) -> bool {
    if m.is_one() {
        d.contains(&0)
    } else {
        let deg = m.degree();
        m.vars().all(|i| 2 * d.get(i).copied().unwrap_or(0) <= deg)
    }
}

/// Syntactic phi-boundedness: every non-constant monomial has degree at least
/// `2 d_i` for each variable it contains, and a constant term needs some `d_i = 0`
/// so that `phi` is bounded away from zero.
pub fn phi_bounded_check(p: &Polynomial, phi: &PhiFunction) -> bool {
    p.monomials().all(|m| monomial_ok(m, &phi.d))
}

pub fn support_bounded<'a, I: IntoIterator<Item = &'a Monomial>>(support: I, d: &[u32]) -> bool {
    support.into_iter().all(|m| monomial_ok(m, d))
}

/// Monomials that may appear in `L_f^k(sum_j c_j m_j)` for generic coefficients.
pub fn symbolic_lie_support(template: &[Monomial], field: &[Polynomial], order: usize) -> Result<BTreeSet<Monomial>> {
    let n = field.len();
    let mut out = BTreeSet::new();
    for m in template {
        let mut p = Polynomial::monomial(n, m.clone(), 1.0);
        for _ in 0..order {
            p = unit_support_lie(&p, field)?;
        }
        out.extend(p.monomials().cloned());
    }
    Ok(out)
}

// Lie derivative on supports only: every coefficient magnitude set to one so
// that no monomial disappears through accidental cancellation.
fn unit_support_lie(p: &Polynomial, field: &[Polynomial]) -> Result<Polynomial> {
    let n = field.len();
    let mut terms = Vec::new();
    for (m, _) in p.terms() {
        for (i, fi) in field.iter().enumerate() {
            if let Some((_, r)) = m.partial(i) {
                for (fm, _) in fi.terms() {
                    terms.push((r.mul(fm), 1.0));
                }
            }
        }
    }
    if p.nvars() > n {
        return Err(Error::Dimension { expected: p.nvars(), got: n });
    }
    Ok(Polynomial::from_terms(n, terms))
}

/// Outcome of [`select_phi`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiSelection {
    pub phi: PhiFunction,
    /// Set when every exponent collapsed to zero (`phi = n`).
    pub constant_warning: bool,
}

/// Componentwise-maximal exponents making both `V''_q` and `phi'_q` phi-bounded.
pub fn select_phi(template: &[Monomial], field: &[Polynomial]) -> Result<PhiSelection> {
    let n = field.len();
    let vdd = symbolic_lie_support(template, field, 2)?;
    let tdeg = template.iter().map(Monomial::degree).max().unwrap_or(0);
    let cap = (tdeg / 2).max(1);
    let mut d = seed(&vdd, n, cap);
    loop {
        let phi = PhiFunction::new(d.clone());
        let dot = symbolic_lie_support(&phi_monomials(&phi), field, 1)?;
        let next = lower(&d, &dot);
        if next == d {
            break;
        }
        d = next;
    }
    debug_assert!(support_bounded(&vdd, &d));
    let phi = PhiFunction::new(d);
    let constant_warning = phi.is_constant();
    Ok(PhiSelection { phi, constant_warning })
}

fn phi_monomials(phi: &PhiFunction) -> Vec<Monomial> {
    phi.d.iter().enumerate().filter(|(_, &d)| d > 0).map(|(i, &d)| Monomial::var_pow(i, 2 * d)).collect()
}

fn seed(support: &BTreeSet<Monomial>, n: usize, cap: u32) -> Vec<u32> {
    if support.contains(&Monomial::one()) {
        return vec![0; n];
    }
    (0..n)
        .map(|i| {
            support
                .iter()
                .filter(|m| m.exponent(i) > 0)
                .map(|m| m.degree() / 2)
                .min()
                .unwrap_or(cap)
        })
        .collect()
}

fn lower(d: &[u32], support: &BTreeSet<Monomial>) -> Vec<u32> {
    if support.contains(&Monomial::one()) && d.iter().all(|&e| e > 0) {
        return vec![0; d.len()];
    }
    let mut out = d.to_vec();
    for m in support.iter().filter(|m| !m.is_one()) {
        let half = m.degree() / 2;
        for i in m.vars() {
            out[i] = out[i].min(half);
        }
    }
    out
}

/// Constructive bound `Lambda = Lambda0^deg(p) * sum |c_i|` with
/// `Lambda0 = max(1, max |bound|)`, valid whenever `p` is phi-bounded.
pub fn lambda_bound(p: &Polynomial, phi: &PhiFunction, domain: &BoxDomain) -> Result<f64> {
    if !phi_bounded_check(p, phi) {
        return Err(Error::NotPhiBounded);
    }
    if p.is_zero() {
        return Ok(0.0);
    }
    let l0 = domain.max_radius().max(1.0);
    Ok(l0.powi(p.degree() as i32) * p.abs_coeff_sum())
}

/// Like [`lambda_bound`], but only on the box minus the open ball of radius `r`.
/// Outside that ball a quadratic `phi` also dominates the constant and linear
/// terms: `1 <= phi / r^2` and `|x_i| <= phi / r`.
pub fn lambda_bound_excluding(p: &Polynomial, phi: &PhiFunction, domain: &BoxDomain, r: f64) -> Result<f64> {
    if r <= 0.0 || phi_bounded_check(p, phi) || !phi.d.iter().all(|&d| d == 1) {
        return lambda_bound(p, phi, domain);
    }
    let mut high = Polynomial::zero(p.nvars());
    let mut low = 0.0;
    for (m, c) in p.terms() {
        match m.degree() {
            0 => low += c.abs() / (r * r),
            1 => low += c.abs() / r,
            _ => high = high.add(&Polynomial::monomial(p.nvars(), m.clone(), c)),
        }
    }
    Ok(lambda_bound(&high, phi, domain)? + low)
}

/// Largest sampled ratio `p/phi` on the box (advisory; never replaces the certified bound).
pub fn sampled_ratio<R: rand::Rng>(p: &Polynomial, phi: &PhiFunction, domain: &BoxDomain, samples: usize, rng: &mut R) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut x = vec![0.0; domain.dim()];
    for _ in 0..samples {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = rng.random_range(domain.lower[i]..=domain.upper[i]);
        }
        let f = phi.eval(&x);
        if f > 0.0 {
            best = best.max(p.eval_unchecked(&x) / f);
        }
    }
    best
}

/// `Lambda1` for `V''_q` and `Lambda2` for `phi'_q` of one mode.
/// With `excluded > 0` the bounds hold on the box minus the ball of that radius.
pub fn mode_bounds(v: &Polynomial, field: &[Polynomial], phi: &PhiFunction, domain: &BoxDomain, excluded: f64) -> Result<BoundCertificate> {
    let vdd = v.lie_derivative(field)?.lie_derivative(field)?;
    let phid = phi.polynomial().with_nvars(field.len()).lie_derivative(field)?;
    Ok(BoundCertificate {
        lambda1: lambda_bound_excluding(&vdd, phi, domain, excluded)?,
        lambda2: lambda_bound_excluding(&phid, phi, domain, excluded)?,
    })
}

/// `h(delta) = lambda L1 e^(L2 delta) delta / (lambda - e^(L2 delta))`.
pub fn dwell_h(delta: f64, l1: f64, l2: f64, lambda: f64) -> f64 {
    let e = (l2 * delta).exp();
    lambda * l1 * e * delta / (lambda - e)
}

/// Solves `h(delta) = eps` on `(0, ln(lambda)/L2)`.
pub fn dwell_inverse(eps: f64, b: &BoundCertificate, lambda: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
    }
    if !(lambda > 1.0) {
        return Err(Error::Invalid(format!("lambda must exceed 1, got {lambda}")));
    }
    let (l1, l2) = (b.lambda1, b.lambda2);
    if !(l1.is_finite() && l2.is_finite() && l1 >= 0.0 && l2 >= 0.0) {
        return Err(Error::Invalid("Lambda bounds must be finite and nonnegative".into()));
    }
    if l1 == 0.0 {
        return Ok(if l2 == 0.0 { f64::INFINITY } else { lambda.ln() / l2 });
    }
    if l2 == 0.0 {
        return Ok((lambda - 1.0) * eps / (lambda * l1));
    }
    let (mut lo, mut hi) = (0.0_f64, lambda.ln() / l2);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dwell_h(mid, l1, l2, lambda) < eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

pub fn dwell_time(eps: &[f64], bounds: &[BoundCertificate], lambda: f64) -> Result<DwellBound> {
    if eps.len() != bounds.len() || eps.is_empty() {
        return Err(Error::Dimension { expected: bounds.len(), got: eps.len() });
    }
    let per_mode = eps.iter().zip(bounds).map(|(&e, b)| dwell_inverse(e, b, lambda)).collect::<Result<Vec<_>>>()?;
    let delta_lb = per_mode.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DwellBound { lambda, delta_lb, per_mode })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    fn quad_template(n: usize) -> Vec<Monomial> {
        (0..n).map(|i| Monomial::var_pow(i, 2)).collect()
    }

    // x' = y^2, y' = -x^3 - y^3, z' = -z
    fn example_q2() -> Vec<Polynomial> {
        let (x, y, z) = (var(3, 0), var(3, 1), var(3, 2));
        vec![y.pow(2), &x.pow(3).scale(-1.0) - &y.pow(3), z.scale(-1.0)]
    }

    #[test]
    fn example_one_is_not_bounded() {
        let p = &var(2, 0) + &var(2, 1);
        assert!(!phi_bounded_check(&p, &PhiFunction::quadratic(2)));
        assert!(phi_bounded_check(&Polynomial::zero(2), &PhiFunction::quadratic(2)));
    }

    #[test]
    fn example_two_first_mode_gets_constant_phi() {
        let (y, z) = (var(3, 1), var(3, 2));
        let field = vec![y.scale(-1.0), z.clone(), Polynomial::constant(3, 1.0)];
        let sel = select_phi(&quad_template(3), &field).unwrap();
        assert_eq!(sel.phi.d, vec![0, 0, 0]);
        assert!(sel.constant_warning);
    }

    #[test]
    fn example_two_second_mode_admits_quartic_phi() {
        let field = example_q2();
        let vdd = symbolic_lie_support(&quad_template(3), &field, 2).unwrap();
        assert!(support_bounded(&vdd, &[2, 2, 1]));
        let sel = select_phi(&quad_template(3), &field).unwrap();
        assert_eq!(sel.phi.d, vec![2, 2, 1]);
        let dot = symbolic_lie_support(&phi_monomials(&sel.phi), &field, 1).unwrap();
        assert!(support_bounded(&dot, &sel.phi.d));
    }

    #[test]
    fn linear_field_gets_quadratic_phi() {
        let (x, y) = (var(2, 0), var(2, 1));
        let field = vec![&x.scale(-1.0) + &y.scale(0.5), &x.scale(2.0) - &y];
        let sel = select_phi(&quad_template(2), &field).unwrap();
        assert_eq!(sel.phi, PhiFunction::quadratic(2));
    }

    #[test]
    fn lambda_examples() {
        let b1 = BoxDomain::symmetric(1, 1.0);
        assert_eq!(lambda_bound(&Polynomial::zero(1), &PhiFunction::quadratic(1), &b1).unwrap(), 0.0);
        assert_eq!(lambda_bound(&var(1, 0).pow(2), &PhiFunction::quadratic(1), &b1).unwrap(), 1.0);
        let b2 = BoxDomain::symmetric(2, 2.0);
        let p = var(2, 0).pow(2).mul(&var(2, 1)).scale(2.0);
        let l = lambda_bound(&p, &PhiFunction::quadratic(2), &b2).unwrap();
        assert_eq!(l, 16.0);
        // dense grid oracle on the ratio
        let mut worst: f64 = 0.0;
        for i in 0..=200 {
            for j in 0..=200 {
                let x = [-2.0 + 4.0 * i as f64 / 200.0, -2.0 + 4.0 * j as f64 / 200.0];
                let f = x[0] * x[0] + x[1] * x[1];
                if f > 0.0 {
                    worst = worst.max(p.eval(&x).unwrap() / f);
                }
            }
        }
        assert!(worst <= l);
        assert!(lambda_bound(&var(2, 0), &PhiFunction::quadratic(2), &b2).is_err());
    }

    #[test]
    fn dwell_examples() {
        let b = BoundCertificate { lambda1: 1.0, lambda2: 0.0 };
        assert!((dwell_inverse(1.0, &b, 2.0).unwrap() - 0.5).abs() < 1e-15);
        let b = BoundCertificate { lambda1: 1.0, lambda2: 1.0 };
        let d = dwell_inverse(0.1, &b, 2.0).unwrap();
        assert!(d > 0.0 && d < 2f64.ln());
        assert!((dwell_h(d, 1.0, 1.0, 2.0) - 0.1).abs() < 1e-9);
        let tiny = dwell_inverse(1e-12, &b, 2.0).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-11);
        assert!(dwell_inverse(0.0, &b, 2.0).is_err());
        assert!(dwell_inverse(0.1, &b, 1.0).is_err());
        let all = dwell_time(&[0.1, 1.0], &[b, b], 2.0).unwrap();
        assert_eq!(all.delta_lb, all.per_mode[0]);
    }
}
