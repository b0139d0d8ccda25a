use nalgebra::DMatrix;

use super::cone::{solve_cone, ConeProgram, ConeStatus, ConeTolerances, PsdBlock};
use crate::error::{Error, Result};

/// Tolerances shared by the conic solves and the check step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceSet {
    /// Linear constraint violation accepted at optimality.
    pub feas: f64,
    /// Accepted negative eigenvalue of the returned matrix.
    pub psd: f64,
    /// Duality gap accepted at optimality.
    pub gap: f64,
    /// Margin turning strict inequalities into closed ones.
    pub strict: f64,
    /// Largest (normalized) violation still reported as no counterexample.
    pub margin: f64,
    pub max_iters: usize,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self { feas: 1e-7, psd: 1e-8, gap: 1e-6, strict: 1e-6, margin: 1e-6, max_iters: 200 }
    }
}

impl ToleranceSet {
    pub(crate) fn cone(&self) -> ConeTolerances {
        ConeTolerances {
            feastol: self.feas * 0.1,
            abstol: self.gap * 0.01,
            reltol: self.gap * 0.1,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct LinearConstraint {
    pub a: DMatrix<f64>,
    pub rel: Relation,
    pub b: f64,
}

/// `maximize <C, Z> + offset` over symmetric `Z >= 0` with linear constraints
/// `<A_k, Z> rel b_k` and entrywise bounds `lower <= Z <= upper`.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub dim: usize,
    pub objective: DMatrix<f64>,
    pub offset: f64,
    pub constraints: Vec<LinearConstraint>,
    /// Entrywise bounds; infinite entries are unconstrained.
    pub lower: DMatrix<f64>,
    pub upper: DMatrix<f64>,
}

impl SdpProblem {
    /// Problem with no constraints besides `Z >= 0` and the given entrywise box.
    pub fn new(objective: DMatrix<f64>, lower: DMatrix<f64>, upper: DMatrix<f64>) -> Self {
        Self { dim: objective.nrows(), objective, offset: 0.0, constraints: Vec::new(), lower, upper }
    }

    pub fn add_constraint(&mut self, a: DMatrix<f64>, rel: Relation, b: f64) {
        self.constraints.push(LinearConstraint { a, rel, b });
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n == 0 {
            return Err(Error::Invalid("empty SDP".into()));
        }
        let square = |m: &DMatrix<f64>| m.nrows() == n && m.ncols() == n;
        let all = std::iter::once(&self.objective).chain(self.constraints.iter().map(|c| &c.a));
        for m in all {
            if !square(m) {
                return Err(Error::Dimension { expected: n, got: m.nrows() });
            }
            if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                return Err(Error::Invalid("SDP data matrix is not symmetric".into()));
            }
        }
        if !square(&self.lower) || !square(&self.upper) {
            return Err(Error::Dimension { expected: n, got: self.lower.nrows() });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    MaxIter,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub z: DMatrix<f64>,
    pub objective: f64,
    /// Upper bound on the optimum from the dual iterate.
    pub dual_bound: f64,
    /// Largest violation of a linear or box constraint.
    pub primal_residual: f64,
    pub min_eigenvalue: f64,
    pub gap: f64,
    /// Dual residual of the infeasibility certificate when `Infeasible`.
    pub certificate_residual: Option<f64>,
    pub iterations: usize,
}

fn entry_index(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|j| (0..=j).map(move |i| (i, j))).collect()
}

fn pair_coeffs(m: &DMatrix<f64>, idx: &[(usize, usize)]) -> Vec<(usize, f64)> {
    idx.iter()
        .enumerate()
        .filter_map(|(k, &(i, j))| {
            let v = if i == j { m[(i, j)] } else { m[(i, j)] + m[(j, i)] };
            (v != 0.0).then_some((k, v))
        })
        .collect()
}

/// Cone form of an [`SdpProblem`] over the upper-triangular entries of `Z`.
pub fn to_cone(p: &SdpProblem) -> Result<ConeProgram> {
    p.validate()?;
    let n = p.dim;
    let idx = entry_index(n);
    let mut cp = ConeProgram {
        c: pair_coeffs(&p.objective, &idx).into_iter().fold(vec![0.0; idx.len()], |mut c, (k, v)| {
            c[k] = -v;
            c
        }),
        ..Default::default()
    };
    for con in &p.constraints {
        let row = pair_coeffs(&con.a, &idx);
        match con.rel {
            Relation::Le => {
                cp.lp_g.push(row);
                cp.lp_h.push(con.b);
            }
            Relation::Ge => {
                cp.lp_g.push(row.into_iter().map(|(k, v)| (k, -v)).collect());
                cp.lp_h.push(-con.b);
            }
            Relation::Eq => {
                cp.a.push(row);
                cp.b.push(con.b);
            }
        }
    }
    for (k, &(i, j)) in idx.iter().enumerate() {
        let (lo, hi) = (p.lower[(i, j)].max(p.lower[(j, i)]), p.upper[(i, j)].min(p.upper[(j, i)]));
        if hi.is_finite() {
            cp.lp_g.push(vec![(k, 1.0)]);
            cp.lp_h.push(hi);
        }
        if lo.is_finite() {
            cp.lp_g.push(vec![(k, -1.0)]);
            cp.lp_h.push(-lo);
        }
    }
    cp.psd.push(PsdBlock {
        dim: n,
        coeffs: idx.iter().map(|&(i, j)| vec![(i, j, -1.0)]).collect(),
        h: DMatrix::zeros(n, n),
    });
    Ok(cp)
}

pub fn solve(problem: &SdpProblem, tol: &ToleranceSet) -> Result<SdpSolution> {
    let cp = to_cone(problem)?;
    let sol = solve_cone(&cp, &tol.cone());
    let n = problem.dim;
    let idx = entry_index(n);
    let mut z = DMatrix::zeros(n, n);
    if sol.status != ConeStatus::PrimalInfeasible {
        for (k, &(i, j)) in idx.iter().enumerate() {
            z[(i, j)] = sol.x[k];
            z[(j, i)] = sol.x[k];
        }
    }
    let mut resid: f64 = 0.0;
    for con in &problem.constraints {
        let v = con.a.dot(&z) - con.b;
        resid = resid.max(match con.rel {
            Relation::Le => v,
            Relation::Ge => -v,
            Relation::Eq => v.abs(),
        });
    }
    for (i, j) in idx {
        resid = resid.max(problem.lower[(i, j)] - z[(i, j)]).max(z[(i, j)] - problem.upper[(i, j)]);
    }
    let min_eigenvalue = z.clone().symmetric_eigen().eigenvalues.min();
    let status = match sol.status {
        ConeStatus::Optimal => SdpStatus::Optimal,
        ConeStatus::PrimalInfeasible => SdpStatus::Infeasible,
        ConeStatus::MaxIter => SdpStatus::MaxIter,
        ConeStatus::DualInfeasible | ConeStatus::NumericalFailure => SdpStatus::NumericalFailure,
    };
    Ok(SdpSolution {
        status,
        objective: -sol.primal_objective + problem.offset,
        dual_bound: -sol.dual_objective + problem.offset,
        z,
        primal_residual: resid.max(0.0),
        min_eigenvalue,
        gap: sol.gap,
        certificate_residual: (status == SdpStatus::Infeasible).then_some(sol.dres),
        iterations: sol.iterations,
    })
}

/// Plain-text dump in SDPA sparse format: `minimize c'x  s.t.  sum_k F_k x_k - F_0 >= 0`,
/// with the orthant part as a diagonal block and equalities as pairs of rows.
pub fn to_sdpa(p: &ConeProgram) -> String {
    use std::fmt::Write;
    let nvars = p.c.len();
    let l = p.lp_g.len() + 2 * p.a.len();
    let mut blocks: Vec<String> = Vec::new();
    if l > 0 {
        blocks.push(format!("-{l}"));
    }
    blocks.extend(p.psd.iter().map(|b| b.dim.to_string()));
    let mut out = String::new();
    let _ = writeln!(out, "{nvars}");
    let _ = writeln!(out, "{}", blocks.len());
    let _ = writeln!(out, "{}", blocks.join(" "));
    let _ = writeln!(out, "{}", p.c.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" "));
    let mut lines: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    let mut blk = 1;
    if l > 0 {
        // h - G x >= 0, A x - b >= 0, b - A x >= 0
        let mut row = 1;
        for (g, &h) in p.lp_g.iter().zip(&p.lp_h) {
            lines.push((0, blk, row, row, -h));
            lines.extend(g.iter().map(|&(k, v)| (k + 1, blk, row, row, -v)));
            row += 1;
        }
        for (a, &b) in p.a.iter().zip(&p.b) {
            lines.push((0, blk, row, row, b));
            lines.extend(a.iter().map(|&(k, v)| (k + 1, blk, row, row, v)));
            lines.push((0, blk, row + 1, row + 1, -b));
            lines.extend(a.iter().map(|&(k, v)| (k + 1, blk, row + 1, row + 1, -v)));
            row += 2;
        }
        blk += 1;
    }
    for b in &p.psd {
        for j in 0..b.dim {
            for i in 0..=j {
                if b.h[(i, j)] != 0.0 {
                    lines.push((0, blk, i + 1, j + 1, -b.h[(i, j)]));
                }
            }
        }
        for (k, entries) in b.coeffs.iter().enumerate() {
            lines.extend(entries.iter().map(|&(i, j, v)| (k + 1, blk, i.min(j) + 1, i.max(j) + 1, -v)));
        }
        blk += 1;
    }
    lines.sort_by_key(|a| (a.0, a.1, a.2, a.3));
    for (k, b, i, j, v) in lines {
        if v != 0.0 {
            let _ = writeln!(out, "{k} {b} {i} {j} {v:e}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> (DMatrix<f64>, DMatrix<f64>) {
        let lo = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 0.0]);
        let hi = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        (lo, hi)
    }

    #[test]
    fn box_binding_optimum() {
        let (lo, hi) = unit_box();
        let mut p = SdpProblem::new(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]), lo, hi);
        p.add_constraint(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), Relation::Eq, 1.0);
        let sol = solve(&p, &ToleranceSet::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-6);
        assert!((sol.dual_bound - sol.objective).abs() < 1e-6);
        assert!(sol.primal_residual < 1e-7 && sol.min_eigenvalue > -1e-8);
        assert!((sol.z[(1, 1)] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        let e00 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let mut p = SdpProblem::new(
            DMatrix::zeros(2, 2),
            DMatrix::from_element(2, 2, -10.0),
            DMatrix::from_element(2, 2, 10.0),
        );
        p.add_constraint(e00.clone(), Relation::Eq, 1.0);
        p.add_constraint(e00, Relation::Le, 0.0);
        let sol = solve(&p, &ToleranceSet::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
        assert!(sol.certificate_residual.is_some());
    }

    #[test]
    fn asymmetric_data_rejected() {
        let (lo, hi) = unit_box();
        let p = SdpProblem::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), lo, hi);
        assert!(solve(&p, &ToleranceSet::default()).is_err());
    }

    #[test]
    fn sdpa_dump_shape() {
        let (lo, hi) = unit_box();
        let p = SdpProblem::new(DMatrix::identity(2, 2), lo, hi);
        let text = to_sdpa(&to_cone(&p).unwrap());
        let head: Vec<&str> = text.lines().take(3).collect();
        assert_eq!(head, vec!["3", "2", "-6 2"]);
    }
}
