use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::poly::{monomials_up_to, Monomial, Polynomial};

/// Monomial vector `m(x)` together with the distinct products `m_i m_j` (the moments).
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    nvars: usize,
    monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    moments: Vec<Monomial>,
    moment_index: HashMap<Monomial, usize>,
    /// Unordered basis pairs `(i <= j)` producing each moment.
    pairs: Vec<Vec<(usize, usize)>>,
    /// Moment index of every matrix entry, row-major.
    entry_moment: Vec<usize>,
}

impl MonomialBasis {
    /// Basis from an explicit monomial list; the constant monomial is forced to position 0.
    pub fn from_monomials(nvars: usize, list: Vec<Monomial>) -> Self {
        let mut set: BTreeSet<Monomial> = list.into_iter().collect();
        set.insert(Monomial::one());
        let monomials: Vec<Monomial> = set.into_iter().collect();
        let index = monomials.iter().enumerate().map(|(k, m)| (m.clone(), k)).collect();
        let mut products = BTreeSet::new();
        for (i, a) in monomials.iter().enumerate() {
            for b in &monomials[i..] {
                products.insert(a.mul(b));
            }
        }
        let moments: Vec<Monomial> = products.into_iter().collect();
        let moment_index: HashMap<Monomial, usize> = moments.iter().enumerate().map(|(k, m)| (m.clone(), k)).collect();
        let size = monomials.len();
        let mut pairs = vec![Vec::new(); moments.len()];
        let mut entry_moment = vec![0; size * size];
        for i in 0..size {
            for j in i..size {
                let k = moment_index[&monomials[i].mul(&monomials[j])];
                pairs[k].push((i, j));
                entry_moment[i * size + j] = k;
                entry_moment[j * size + i] = k;
            }
        }
        Self { nvars, monomials, index, moments, moment_index, pairs, entry_moment }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn size(&self) -> usize {
        self.monomials.len()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn moments(&self) -> &[Monomial] {
        &self.moments
    }

    pub fn moment_count(&self) -> usize {
        self.moments.len()
    }

    pub fn moment_position(&self, m: &Monomial) -> Option<usize> {
        self.moment_index.get(m).copied()
    }

    pub fn pairs(&self, moment: usize) -> &[(usize, usize)] {
        &self.pairs[moment]
    }

    pub fn entry_moment(&self, i: usize, j: usize) -> usize {
        self.entry_moment[i * self.size() + j]
    }

    pub fn represents(&self, p: &Polynomial) -> bool {
        p.monomials().all(|m| self.moment_index.contains_key(m))
    }

    /// Symmetric `A` with `<A, m m^T> = p`, each coefficient split equally over its aliased entries.
    pub fn gram(&self, p: &Polynomial) -> Result<DMatrix<f64>> {
        let n = self.size();
        let mut a = DMatrix::zeros(n, n);
        for (m, c) in p.terms() {
            let k = self.moment_position(m).ok_or_else(|| Error::Invalid(format!("monomial {m:?} outside the basis closure")))?;
            let entries: usize = self.pairs[k].iter().map(|&(i, j)| if i == j { 1 } else { 2 }).sum();
            let w = c / entries as f64;
            for &(i, j) in &self.pairs[k] {
                a[(i, j)] += w;
                if i != j {
                    a[(j, i)] += w;
                }
            }
        }
        Ok(a)
    }

    /// Moment vector `(mu(x))_mu` of the rank-one lift at `x`.
    pub fn lift_moments(&self, x: &[f64]) -> Vec<f64> {
        self.moments.iter().map(|m| m.eval(x)).collect()
    }

    /// Builds the moment matrix `Z` from a moment vector.
    pub fn moment_matrix(&self, y: &[f64]) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| y[self.entry_moment(i, j)])
    }

    /// `L_y(p) = sum_m c_m y_m`.
    pub fn functional(&self, p: &Polynomial, y: &[f64]) -> f64 {
        p.apply_functional(|m| y[self.moment_index[m]])
    }
}

/// Smallest graded-lex basis (within the per-variable half-degree box) whose
/// pairwise products cover every monomial of the given polynomials.
pub fn build_basis(nvars: usize, polys: &[&Polynomial]) -> Result<MonomialBasis> {
    let support: BTreeSet<Monomial> = polys.iter().flat_map(|p| p.monomials().cloned()).collect();
    if support.is_empty() {
        return Err(Error::Invalid("no constraint polynomials to represent".into()));
    }
    let maxdeg = support.iter().map(Monomial::degree).max().unwrap_or(0);
    let half = maxdeg.div_ceil(2);
    let caps: Vec<u32> = (0..nvars).map(|i| support.iter().map(|m| m.exponent(i)).max().unwrap_or(0).div_ceil(2)).collect();
    let pruned: Vec<Monomial> = monomials_up_to(nvars, half)
        .into_iter()
        .filter(|m| m.powers().iter().all(|&(v, e)| e <= caps[v]))
        .collect();
    let basis = MonomialBasis::from_monomials(nvars, pruned);
    if support.iter().all(|m| basis.moment_position(m).is_some()) {
        return Ok(basis);
    }
    Ok(MonomialBasis::from_monomials(nvars, monomials_up_to(nvars, half)))
}
