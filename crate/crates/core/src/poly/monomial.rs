use std::cmp::Ordering;
use std::fmt;

/// A monomial stored as sorted `(variable, exponent)` pairs with no zero exponents.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    powers: Vec<(usize, u32)>,
}

impl Monomial {
    pub fn one() -> Self {
        Self { powers: Vec::new() }
    }

    pub fn var(i: usize) -> Self {
        Self { powers: vec![(i, 1)] }
    }

    pub fn var_pow(i: usize, e: u32) -> Self {
        Self::from_pairs([(i, e)])
    }

    /// Builds a monomial from arbitrary pairs; duplicate variables are merged.
    pub fn from_pairs<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Self {
        let mut powers: Vec<(usize, u32)> = Vec::new();
        let mut raw: Vec<(usize, u32)> = pairs.into_iter().filter(|&(_, e)| e > 0).collect();
        raw.sort_unstable();
        for (v, e) in raw {
            match powers.last_mut() {
                Some(last) if last.0 == v => last.1 += e,
                _ => powers.push((v, e)),
            }
        }
        Self { powers }
    }

    pub fn from_dense(exps: &[u32]) -> Self {
        Self::from_pairs(exps.iter().enumerate().map(|(i, &e)| (i, e)))
    }

    pub fn powers(&self) -> &[(usize, u32)] {
        &self.powers
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().map(|p| p.1).sum()
    }

    pub fn is_one(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn exponent(&self, var: usize) -> u32 {
        self.powers
            .binary_search_by_key(&var, |p| p.0)
            .map(|k| self.powers[k].1)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.powers.iter().map(|p| p.0)
    }

    /// Largest variable index plus one (0 for the constant monomial).
    pub fn min_nvars(&self) -> usize {
        self.powers.last().map_or(0, |p| p.0 + 1)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.powers.len() + other.powers.len());
        let (mut i, mut j) = (0, 0);
        while i < self.powers.len() && j < other.powers.len() {
            let (a, b) = (self.powers[i], other.powers[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    out.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.powers[i..]);
        out.extend_from_slice(&other.powers[j..]);
        Monomial { powers: out }
    }

    /// `Some(q)` with `self = q * other` when `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::new();
        for &(v, e) in &self.powers {
            let f = other.exponent(v);
            if f > e {
                return None;
            }
            if e > f {
                out.push((v, e - f));
            }
        }
        if other.powers.iter().any(|&(v, _)| self.exponent(v) == 0) {
            return None;
        }
        Some(Monomial { powers: out })
    }

    /// Derivative with respect to `var`: `(exponent, reduced monomial)`.
    pub fn partial(&self, var: usize) -> Option<(u32, Monomial)> {
        let k = self.powers.binary_search_by_key(&var, |p| p.0).ok()?;
        let e = self.powers[k].1;
        let mut powers = self.powers.clone();
        if e == 1 {
            powers.remove(k);
        } else {
            powers[k].1 -= 1;
        }
        Some((e, Monomial { powers }))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.powers.iter().map(|&(v, e)| x[v].powi(e as i32)).product()
    }

    pub fn to_dense(&self, n: usize) -> Vec<u32> {
        let mut d = vec![0; n];
        for &(v, e) in &self.powers {
            d[v] = e;
        }
        d
    }

    pub fn display_with(&self, names: &[String]) -> String {
        if self.is_one() {
            return "1".into();
        }
        self.powers
            .iter()
            .map(|&(v, e)| {
                let name = names.get(v).cloned().unwrap_or_else(|| format!("x{}", v + 1));
                if e == 1 {
                    name
                } else {
                    format!("{name}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// Graded lexicographic: lower degree first; within a degree a larger exponent
/// on an earlier variable comes first, so `x1^2 < x1*x2 < x2^2`.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.powers.get(i), other.powers.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Less,
                (None, Some(_)) => return Ordering::Greater,
                (Some(a), Some(b)) => {
                    if a.0 != b.0 {
                        // the one carrying the earlier variable has the larger exponent there
                        return if a.0 < b.0 { Ordering::Less } else { Ordering::Greater };
                    }
                    if a.1 != b.1 {
                        return b.1.cmp(&a.1);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_with(&[]))
    }
}

/// All monomials in `n` variables of total degree at most `d`, in graded-lex order.
pub fn monomials_up_to(n: usize, d: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for deg in 0..=d {
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, deg);
    }
    out
}

fn fill(out: &mut Vec<Monomial>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    let n = cur.len();
    if n == 0 {
        if left == 0 {
            out.push(Monomial::one());
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = left;
        out.push(Monomial::from_dense(cur));
        cur[pos] = 0;
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e;
        fill(out, cur, pos + 1, left - e);
    }
    cur[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grlex_order_of_quadratic_basis() {
        let b = monomials_up_to(2, 2);
        let dense: Vec<Vec<u32>> = b.iter().map(|m| m.to_dense(2)).collect();
        assert_eq!(dense, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]]);
        let mut sorted = b.clone();
        sorted.sort();
        assert_eq!(sorted, b);
    }

    #[test]
    fn mul_div_partial() {
        let a = Monomial::from_dense(&[2, 1]);
        let b = Monomial::from_dense(&[0, 3]);
        let p = a.mul(&b);
        assert_eq!(p.to_dense(2), vec![2, 4]);
        assert_eq!(p.div(&b), Some(a.clone()));
        assert_eq!(b.div(&a), None);
        assert_eq!(a.partial(0), Some((2, Monomial::from_dense(&[1, 1]))));
        assert_eq!(a.partial(1), Some((1, Monomial::var(0).mul(&Monomial::var(0)))));
        assert_eq!(b.partial(0), None);
    }

    #[test]
    fn zero_exponents_are_dropped() {
        let m = Monomial::from_pairs([(3, 0), (1, 2), (1, 1)]);
        assert_eq!(m.powers(), &[(1, 3)]);
        assert_eq!(m.degree(), 3);
        assert_eq!(Monomial::from_dense(&[0, 0]), Monomial::one());
    }
}
