//! The CEGIS find step: a candidate `c` in the box `C0` satisfying, for every
//! witness, the positivity row and at least one mode row.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus};
use crate::relax::{lift_point, RelaxedProblem, WitnessMatrix};
use crate::sdp::Violation;

/// Where a witness came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    InitialVertex { index: usize },
    SdpCounterexample { iteration: usize, violation: Violation, gamma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub moments: Vec<f64>,
    pub provenance: Provenance,
}

impl Witness {
    pub fn matrix(&self) -> WitnessMatrix {
        WitnessMatrix { moments: self.moments.clone() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WitnessSet {
    witnesses: Vec<Witness>,
}

/// Tolerance for the witness-side constraints of [`WitnessSet::add_witness`].
const SIDE_TOL: f64 = 1e-7;
const DUPLICATE_TOL: f64 = 1e-12;

impl WitnessSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn witnesses(&self) -> &[Witness] {
        &self.witnesses
    }

    pub fn contains(&self, z: &WitnessMatrix) -> bool {
        self.witnesses.iter().any(|w| {
            w.moments.len() == z.moments.len() && w.moments.iter().zip(&z.moments).all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL)
        })
    }

    /// Appends `z` unless it duplicates a stored witness; returns whether it was added.
    /// Witnesses violating PSD, the lifted box or the exclusion are rejected.
    pub fn add_witness(&mut self, rp: &RelaxedProblem, z: WitnessMatrix, provenance: Provenance) -> Result<bool> {
        validate_witness(rp, &z)?;
        if self.contains(&z) {
            return Ok(false);
        }
        self.witnesses.push(Witness { moments: z.moments, provenance });
        Ok(true)
    }
}

pub fn validate_witness(rp: &RelaxedProblem, z: &WitnessMatrix) -> Result<()> {
    if z.moments.len() != rp.basis.moment_count() {
        return Err(Error::Dimension { expected: rp.basis.moment_count(), got: z.moments.len() });
    }
    if z.moments.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("witness has non-finite moments".into()));
    }
    let m = z.matrix(&rp.basis);
    let scale = m.amax().max(1.0);
    let min_eig = m.symmetric_eigen().eigenvalues.min();
    if min_eig < -SIDE_TOL * scale {
        return Err(Error::Invalid(format!("witness is not PSD (min eigenvalue {min_eig:.3e})")));
    }
    for (k, (b, &y)) in rp.lifted_box.bounds.iter().zip(&z.moments).enumerate() {
        let slack = SIDE_TOL * b.mag().max(1.0);
        if y < b.lo - slack || y > b.hi + slack {
            return Err(Error::Invalid(format!("witness moment {k} = {y} outside [{}, {}]", b.lo, b.hi)));
        }
    }
    let excl = rp.basis.functional(&rp.alpha, &z.moments);
    if excl <= 0.0 {
        return Err(Error::Invalid(format!("witness exclusion functional {excl:.3e} is not positive")));
    }
    Ok(())
}

/// Rank-one lifts of the vertices of the domain, the initial witnesses.
pub fn initial_witnesses(rp: &RelaxedProblem) -> Result<WitnessSet> {
    let mut set = WitnessSet::new();
    for (index, v) in rp.domain.vertices().iter().enumerate() {
        set.add_witness(rp, lift_point(&rp.basis, v), Provenance::InitialVertex { index })?;
    }
    Ok(set)
}

/// `a . c > b`, kept as `a . c >= b + tau |a|`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintRow {
    pub a: Vec<f64>,
    pub b: f64,
}

impl ConstraintRow {
    fn norm(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Normalized slack `(a.c - b)/|a|`; rows with `a = 0` get `+-inf`.
    pub fn slack(&self, c: &[f64]) -> f64 {
        let n = self.norm();
        let v = self.a.iter().zip(c).map(|(a, c)| a * c).sum::<f64>() - self.b;
        if n > 0.0 {
            v / n
        } else if v > 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessRows {
    pub positivity: ConstraintRow,
    pub modes: Vec<ConstraintRow>,
}

#[derive(Clone, Debug)]
pub struct CandidateConstraintSystem {
    pub rows: Vec<WitnessRows>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub tau: f64,
}

/// Rows of witness `z`: coefficients are `<F_j, Z>` and `<F_{q,j}, Z>`.
pub fn witness_rows(rp: &RelaxedProblem, z: &WitnessMatrix) -> WitnessRows {
    let y = &z.moments;
    let ell = |p: &crate::poly::Polynomial| rp.basis.functional(p, y);
    let positivity = ConstraintRow {
        a: rp.template.iter().map(|m| y[rp.basis.moment_position(m).expect("template in basis")]).collect(),
        b: ell(&rp.alpha),
    };
    let modes = (0..rp.modes())
        .map(|q| ConstraintRow { a: rp.mode_parts[q].iter().map(&ell).collect(), b: ell(&rp.decrease[q]) })
        .collect();
    WitnessRows { positivity, modes }
}

pub fn build_system(rp: &RelaxedProblem, set: &WitnessSet, lower: &[f64], upper: &[f64], tau: f64) -> CandidateConstraintSystem {
    CandidateConstraintSystem {
        rows: set.witnesses().iter().map(|w| witness_rows(rp, &w.matrix())).collect(),
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        tau,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FindResult {
    Candidate { c: Vec<f64>, slack: f64 },
    Unsat,
    /// The branch-and-bound ran out of LP solves.
    Exhausted,
}

/// LP solves allowed per find step.
pub const LP_BUDGET: usize = 20_000;
/// Upper limit on the slack variable, which keeps every leaf LP bounded.
const SLACK_CAP: f64 = 1.0;
/// Rows added per constraint-generation round.
const ROWS_PER_ROUND: usize = 8;
const ROW_TOL: f64 = 1e-9;

struct Search<'a> {
    sys: &'a CandidateConstraintSystem,
    m: usize,
    /// Positivity rows currently in the LP.
    active: Vec<bool>,
    lps: usize,
}

#[derive(Clone, Copy)]
enum Leaf {
    Found,
    Infeasible,
    Budget,
}

impl<'a> Search<'a> {
    /// Maximize `t` subject to the selected rows, each as `a.c/|a| - t >= b/|a|`.
    fn lp(&mut self, rows: &[&ConstraintRow]) -> Option<(Vec<f64>, f64)> {
        let m = self.m;
        let mut prob = LpProblem {
            c: {
                let mut c = vec![0.0; m + 1];
                c[m] = 1.0;
                c
            },
            a: Vec::with_capacity(rows.len()),
            b: Vec::with_capacity(rows.len()),
            lower: self.sys.lower.iter().copied().chain([-SLACK_CAP * 10.0 - 10.0]).collect(),
            upper: self.sys.upper.iter().copied().chain([SLACK_CAP]).collect(),
        };
        for r in rows {
            let n = r.norm();
            let mut a: Vec<f64> = r.a.iter().map(|v| -v / n).collect();
            a.push(1.0);
            prob.a.push(a);
            prob.b.push(-r.b / n);
        }
        for attempt in 0..3 {
            self.lps += 1;
            let sol = lp::solve(&prob);
            match sol.status {
                LpStatus::Optimal => {
                    let t = sol.x[m];
                    return Some((sol.x[..m].to_vec(), t));
                }
                LpStatus::Infeasible => return None,
                _ => {
                    // degenerate cycling: perturb the right-hand side deterministically
                    for (k, b) in prob.b.iter_mut().enumerate() {
                        *b -= 1e-10 * (attempt + 1) as f64 * (1.0 + (k % 7) as f64);
                    }
                }
            }
        }
        None
    }

    fn node(&mut self, assign: &mut Vec<Option<usize>>) -> (Leaf, Option<(Vec<f64>, f64)>) {
        loop {
            if self.lps >= LP_BUDGET {
                return (Leaf::Budget, None);
            }
            let sys = self.sys;
            let rows: Vec<&ConstraintRow> = sys
                .rows
                .iter()
                .enumerate()
                .filter(|(k, _)| self.active[*k])
                .map(|(_, w)| &w.positivity)
                .chain(assign.iter().enumerate().filter_map(|(k, q)| q.map(|q| &sys.rows[k].modes[q])))
                .filter(|r| r.norm() > 0.0)
                .collect();
            let (c, t) = if rows.is_empty() {
                (sys.lower.iter().zip(&sys.upper).map(|(l, u)| 0.5 * (l + u)).collect::<Vec<_>>(), SLACK_CAP)
            } else {
                match self.lp(&rows) {
                    Some(v) => v,
                    None => return (Leaf::Infeasible, None),
                }
            };
            if t < sys.tau - ROW_TOL {
                return (Leaf::Infeasible, None);
            }
            let need = sys.tau - ROW_TOL;
            // constraint generation on positivity rows
            let mut viol: Vec<(f64, usize)> = sys
                .rows
                .iter()
                .enumerate()
                .filter(|(k, _)| !self.active[*k])
                .map(|(k, w)| (w.positivity.slack(&c), k))
                .filter(|(s, _)| *s < need)
                .collect();
            if !viol.is_empty() {
                viol.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                for &(s, k) in viol.iter().take(ROWS_PER_ROUND) {
                    if s == f64::NEG_INFINITY {
                        return (Leaf::Infeasible, None);
                    }
                    self.active[k] = true;
                }
                continue;
            }
            // the disjunctions: find the worst unsatisfied witness
            let mut worst: Option<(f64, usize)> = None;
            for (k, w) in sys.rows.iter().enumerate() {
                if assign[k].is_some() {
                    continue;
                }
                let best = w.modes.iter().map(|r| r.slack(&c)).fold(f64::NEG_INFINITY, f64::max);
                if best < need && worst.is_none_or(|(b, _)| best < b) {
                    worst = Some((best, k));
                }
            }
            let Some((_, k)) = worst else {
                return (Leaf::Found, Some((c, t)));
            };
            let mut order: Vec<(f64, usize)> = sys.rows[k]
                .modes
                .iter()
                .enumerate()
                .map(|(q, r)| (r.slack(&c), q))
                .filter(|(s, _)| *s > f64::NEG_INFINITY)
                .collect();
            order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for (_, q) in order {
                assign[k] = Some(q);
                match self.node(assign) {
                    (Leaf::Found, sol) => return (Leaf::Found, sol),
                    (Leaf::Budget, _) => {
                        assign[k] = None;
                        return (Leaf::Budget, None);
                    }
                    (Leaf::Infeasible, _) => {}
                }
            }
            assign[k] = None;
            return (Leaf::Infeasible, None);
        }
    }
}

/// Branches over per-witness mode selections; each node is an LP maximizing
/// the minimum normalized slack, with positivity rows generated lazily.
pub fn find_candidate(sys: &CandidateConstraintSystem) -> Result<FindResult> {
    let m = sys.lower.len();
    if sys.upper.len() != m {
        return Err(Error::Dimension { expected: m, got: sys.upper.len() });
    }
    if !(sys.tau > 0.0) {
        return Err(Error::Invalid("find-step margin tau must be positive".into()));
    }
    if sys.lower.iter().zip(&sys.upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
        return Err(Error::Invalid("candidate box must be finite and nonempty".into()));
    }
    for w in &sys.rows {
        if w.positivity.a.len() != m || w.modes.iter().any(|r| r.a.len() != m) {
            return Err(Error::Dimension { expected: m, got: w.positivity.a.len() });
        }
    }
    if sys.rows.is_empty() {
        let c = sys.lower.iter().zip(&sys.upper).map(|(l, u)| 0.5 * (l + u)).collect();
        return Ok(FindResult::Candidate { c, slack: f64::INFINITY });
    }
    let mut search = Search { sys, m, active: vec![false; sys.rows.len()], lps: 0 };
    let mut assign = vec![None; sys.rows.len()];
    let (leaf, sol) = search.node(&mut assign);
    log::debug!("find step: {} LP solves, {} active positivity rows", search.lps, search.active.iter().filter(|a| **a).count());
    Ok(match leaf {
        Leaf::Found => {
            let (c, _) = sol.expect("found leaf carries a solution");
            let slack = sys
                .rows
                .iter()
                .map(|w| {
                    let best = w.modes.iter().map(|r| r.slack(&c)).fold(f64::NEG_INFINITY, f64::max);
                    best.min(w.positivity.slack(&c))
                })
                .fold(f64::INFINITY, f64::min);
            FindResult::Candidate { c, slack }
        }
        Leaf::Infeasible => FindResult::Unsat,
        Leaf::Budget => FindResult::Exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::PhiFunction;
    use crate::plant::catalog_entry;
    use crate::relax::{assemble, quadratic_template};

    fn system(id: u32) -> RelaxedProblem {
        let plant = catalog_entry(id).unwrap().plant.to_switched().unwrap();
        let q = plant.modes.len();
        let n = plant.n();
        assemble(&plant, &quadratic_template(n), 0.01, &vec![PhiFunction::quadratic(n); q], &vec![0.01; q], 1e-6).unwrap()
    }

    fn row(a: &[f64], b: f64) -> ConstraintRow {
        ConstraintRow { a: a.to_vec(), b }
    }

    #[test]
    fn no_witnesses_gives_box_center() {
        let sys = CandidateConstraintSystem { rows: vec![], lower: vec![-1.0, 0.0], upper: vec![1.0, 2.0], tau: 1e-4 };
        assert_eq!(find_candidate(&sys).unwrap(), FindResult::Candidate { c: vec![0.0, 1.0], slack: f64::INFINITY });
    }

    #[test]
    fn disjunction_picks_feasible_mode() {
        // c >= 0.5 and (c <= -0.5 or c >= 0.8)
        let sys = CandidateConstraintSystem {
            rows: vec![WitnessRows { positivity: row(&[1.0], 0.5), modes: vec![row(&[-1.0], 0.5), row(&[1.0], 0.8)] }],
            lower: vec![-1.0],
            upper: vec![1.0],
            tau: 1e-4,
        };
        let FindResult::Candidate { c, slack } = find_candidate(&sys).unwrap() else { panic!() };
        assert!(c[0] >= 0.8 + 1e-4 - 1e-9 && slack >= 1e-4 - 1e-9);
        let unsat = CandidateConstraintSystem {
            rows: vec![WitnessRows { positivity: row(&[1.0], 0.5), modes: vec![row(&[-1.0], 0.5), row(&[1.0], 1.5)] }],
            ..sys
        };
        assert_eq!(find_candidate(&unsat).unwrap(), FindResult::Unsat);
    }

    #[test]
    fn vertex_initialization_and_duplicates() {
        let rp = system(1);
        let mut set = initial_witnesses(&rp).unwrap();
        assert_eq!(set.len(), 4);
        let again = lift_point(&rp.basis, &rp.domain.vertices()[0]);
        assert!(!set.add_witness(&rp, again, Provenance::InitialVertex { index: 0 }).unwrap());
        assert_eq!(set.len(), 4);
        let origin = lift_point(&rp.basis, &[0.0, 0.0]);
        assert!(set.add_witness(&rp, origin, Provenance::InitialVertex { index: 9 }).is_err());
    }

    #[test]
    fn rank_one_rows_match_direct_evaluation() {
        let rp = system(1);
        let x = [0.3, -0.7];
        let r = witness_rows(&rp, &lift_point(&rp.basis, &x));
        let c = [0.9, 0.2, 0.5];
        let v = rp.v(&c).eval(&x).unwrap();
        let alpha = 0.01 * (x[0] * x[0] + x[1] * x[1]);
        let lhs: f64 = r.positivity.a.iter().zip(&c).map(|(a, c)| a * c).sum::<f64>() - r.positivity.b;
        assert!((lhs - (v - alpha)).abs() < 1e-12);
        let plant = catalog_entry(1).unwrap().plant.to_switched().unwrap();
        for (q, mode) in plant.modes.iter().enumerate() {
            let vdot = rp.v(&c).lie_derivative(&mode.field).unwrap().eval(&x).unwrap();
            let lhs: f64 = r.modes[q].a.iter().zip(&c).map(|(a, c)| a * c).sum::<f64>() - r.modes[q].b;
            assert!((lhs - (-vdot - 0.01 * (x[0] * x[0] + x[1] * x[1]))).abs() < 1e-12);
        }
    }
}
