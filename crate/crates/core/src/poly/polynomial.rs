use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use super::interval::{BoxDomain, Interval};
use super::monomial::Monomial;
use crate::error::{Error, Result};

/// Coefficients with magnitude below this are treated as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Sparse polynomial over `nvars` variables, terms kept in graded-lex order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::from_terms(nvars, [(Monomial::one(), c)])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        Self::from_terms(nvars, [(Monomial::var(i), 1.0)])
    }

    pub fn monomial(nvars: usize, m: Monomial, c: f64) -> Self {
        Self::from_terms(nvars, [(m, c)])
    }

    /// Collects like terms; the variable count grows to cover every monomial.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(nvars: usize, terms: I) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            p.nvars = p.nvars.max(m.min_nvars());
            *p.terms.entry(m).or_insert(0.0) += c;
        }
        p.prune();
        p
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() > ZERO_TOL);
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn with_nvars(mut self, n: usize) -> Self {
        self.nvars = self.nvars.max(n);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.terms.keys()
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn abs_coeff_sum(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Self::from_terms(self.nvars, self.terms.iter().map(|(m, &c)| (m.clone(), c * s)))
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out.nvars = out.nvars.max(other.nvars);
        for (m, &c) in &other.terms {
            *out.terms.entry(m.clone()).or_insert(0.0) += c;
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                *terms.entry(a.mul(b)).or_insert(0.0) += ca * cb;
            }
        }
        let mut out = Polynomial { nvars: self.nvars.max(other.nvars), terms };
        out.prune();
        out
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.nvars, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn partial(&self, var: usize) -> Polynomial {
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .filter_map(|(m, &c)| m.partial(var).map(|(e, r)| (r, c * e as f64))),
        )
    }

    /// Lie derivative `sum_i dp/dx_i * field_i`.
    pub fn lie_derivative(&self, field: &[Polynomial]) -> Result<Polynomial> {
        if field.len() != self.nvars {
            return Err(Error::Dimension { expected: self.nvars, got: field.len() });
        }
        let mut out = Polynomial::zero(self.nvars);
        for (i, fi) in field.iter().enumerate() {
            let d = self.partial(i);
            if !d.is_zero() {
                out = out.add(&d.mul(fi));
            }
        }
        Ok(out)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nvars {
            return Err(Error::Dimension { expected: self.nvars, got: x.len() });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the length check; `x` must cover every variable.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, &c)| c * m.eval(x)).sum()
    }

    pub fn interval_eval(&self, domain: &BoxDomain) -> Interval {
        let mut acc = Interval::point(0.0);
        for (m, &c) in &self.terms {
            let mut t = Interval::point(1.0);
            for &(v, e) in m.powers() {
                t = t.mul(domain.interval(v).powi(e));
            }
            acc = acc.add(t.scale(c));
        }
        acc
    }

    /// Substitutes `x_i -> s_i * x_i`.
    pub fn rescale(&self, s: &[f64]) -> Polynomial {
        Self::from_terms(
            self.nvars,
            self.terms.iter().map(|(m, &c)| (m.clone(), c * m.eval(s))),
        )
    }

    /// Replaces every monomial by a caller-supplied value (a linear functional).
    pub fn apply_functional<F: FnMut(&Monomial) -> f64>(&self, mut value: F) -> f64 {
        self.terms.iter().map(|(m, &c)| c * value(m)).sum()
    }

    pub fn display_with(&self, names: &[String]) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (k, (m, &c)) in self.terms.iter().enumerate() {
            let sign = if c < 0.0 { "-" } else { "+" };
            if k == 0 {
                if c < 0.0 {
                    s.push('-');
                }
            } else {
                s.push_str(&format!(" {sign} "));
            }
            if m.is_one() {
                s.push_str(&format!("{}", c.abs()));
            } else if (c.abs() - 1.0).abs() < ZERO_TOL {
                s.push_str(&m.display_with(names));
            } else {
                s.push_str(&format!("{}*{}", c.abs(), m.display_with(names)));
            }
        }
        s
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::sub(self, rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

/// Evaluates every component of a vector field.
pub fn eval_field(field: &[Polynomial], x: &[f64]) -> Vec<f64> {
    field.iter().map(|p| p.eval_unchecked(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, i: usize) -> Polynomial {
        Polynomial::var(n, i)
    }

    #[test]
    fn add_examples() {
        let x2 = x(1, 0).mul(&x(1, 0));
        assert!(x2.add(&x2.scale(-1.0)).is_zero());
        assert_eq!(x(1, 0).scale(2.0).add(&x(1, 0).scale(3.0)), x(1, 0).scale(5.0));
        let x2y = x(2, 0).mul(&x(2, 0)).mul(&x(2, 1));
        let one = Polynomial::constant(2, 1.0);
        assert_eq!(x2y.add(&one).add(&x2y), x2y.scale(2.0).add(&one));
    }

    #[test]
    fn mul_examples() {
        let (a, b) = (x(2, 0), x(2, 1));
        let lhs = (&a + &b).mul(&(&a - &b));
        assert_eq!(lhs, &a.pow(2) - &b.pow(2));
        assert_eq!(lhs.mul(&Polynomial::constant(2, 1.0)), lhs);
        assert_eq!(a.pow(2).mul(&b.pow(3)), Polynomial::monomial(2, Monomial::from_dense(&[2, 3]), 1.0));
    }

    #[test]
    fn partial_examples() {
        let (a, b) = (x(2, 0), x(2, 1));
        assert_eq!(a.pow(2).mul(&b).partial(0), a.mul(&b).scale(2.0));
        assert!(Polynomial::constant(2, 3.0).partial(0).is_zero());
        assert_eq!((&a.pow(3) + &a.mul(&b)).partial(1), a);
    }

    #[test]
    fn second_lie_derivative_of_quadratic_form() {
        // V = c1 x^2 + c2 y^2 + c3 z^2 under x' = -y, y' = z, z' = 1
        let (c1, c2, c3) = (0.7, -1.3, 2.1);
        let (xv, yv, zv) = (x(3, 0), x(3, 1), x(3, 2));
        let v = &(&xv.pow(2).scale(c1) + &yv.pow(2).scale(c2)) + &zv.pow(2).scale(c3);
        let field = vec![yv.scale(-1.0), zv.clone(), Polynomial::constant(3, 1.0)];
        let vdd = v.lie_derivative(&field).unwrap().lie_derivative(&field).unwrap();
        let expected = &(&(&yv.pow(2) - &xv.mul(&zv)).scale(2.0 * c1) + &(&zv.pow(2) + &yv).scale(2.0 * c2))
            + &Polynomial::constant(3, 2.0 * c3);
        assert_eq!(vdd.len(), expected.len());
        for (m, c) in expected.terms() {
            assert!((vdd.coeff(m) - c).abs() < 1e-12);
        }
        // unit coefficients at (1,1,1): 2(1-1) + 2(1+1) + 2 = 6
        let unit = &(&xv.pow(2) + &yv.pow(2)) + &zv.pow(2);
        let u = unit.lie_derivative(&field).unwrap().lie_derivative(&field).unwrap();
        assert!((u.eval(&[1.0, 1.0, 1.0]).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn lie_derivative_trivia() {
        let c = Polynomial::constant(1, 4.0);
        assert!(c.lie_derivative(&[x(1, 0)]).unwrap().is_zero());
        assert_eq!(x(1, 0).lie_derivative(&[x(1, 0)]).unwrap(), x(1, 0));
        assert!(x(2, 0).lie_derivative(&[x(2, 0)]).is_err());
    }

    #[test]
    fn eval_examples() {
        let p = &x(2, 0).pow(2) + &x(2, 1).pow(2);
        assert_eq!(p.eval(&[3.0, 4.0]).unwrap(), 25.0);
        assert_eq!(Polynomial::zero(2).eval(&[1.0, 2.0]).unwrap(), 0.0);
        assert!(p.eval(&[1.0]).is_err());
    }

    #[test]
    fn interval_examples() {
        let sq = x(1, 0).pow(2);
        let b1 = BoxDomain::new(vec![-1.0], vec![1.0]).unwrap();
        assert_eq!(sq.interval_eval(&b1), Interval::new(0.0, 1.0));
        let b2 = BoxDomain::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(x(2, 0).mul(&x(2, 1)).interval_eval(&b2), Interval::new(-1.0, 1.0));
    }

    #[test]
    fn interval_encloses_grid_range() {
        // x^2 y + 1 on [-2,2] x [0,1]: exact range by dense grid
        let p = &x(2, 0).pow(2).mul(&x(2, 1)) + &Polynomial::constant(2, 1.0);
        let b = BoxDomain::new(vec![-2.0, 0.0], vec![2.0, 1.0]).unwrap();
        let iv = p.interval_eval(&b);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=400 {
            for j in 0..=100 {
                let v = p.eval(&[-2.0 + 4.0 * i as f64 / 400.0, j as f64 / 100.0]).unwrap();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 5.0).abs() < 1e-12);
        assert!(iv.lo <= lo && iv.hi >= hi);
    }
}
