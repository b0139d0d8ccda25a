//! The CEGIS check step: search for a relaxed counterexample `Z` to a candidate.
//!
//! Both programs are posed over the moments `y` of `Z` (constant moment fixed
//! to one) in coordinates rescaled to the unit box, with every constraint row
//! normalized to unit coefficient norm so that `gamma` is unit-free.

use nalgebra::DMatrix;

use super::cone::{solve_cone, ConeProgram, ConeSolution, ConeStatus, PsdBlock};
use super::problem::ToleranceSet;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::relax::{RelaxedProblem, WitnessMatrix};

/// Which family of conditions a witness violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Violation {
    /// `V > alpha` fails.
    Positivity,
    /// No mode decreases `V` fast enough.
    Decrease,
}

#[derive(Clone, Debug)]
pub struct ProgramReport {
    pub status: ConeStatus,
    /// Violation margin attained by the returned moments (`-inf` when infeasible).
    pub gamma: f64,
    /// Upper bound on the optimal margin from the dual iterate.
    pub gamma_upper: f64,
    pub iterations: usize,
    pub witness: Option<WitnessMatrix>,
}

#[derive(Clone, Debug)]
pub enum CheckOutcome {
    NoCounterexample,
    Counterexample { witness: WitnessMatrix, violation: Violation, gamma: f64 },
}

#[derive(Clone, Debug)]
pub struct CounterexampleReport {
    pub outcome: CheckOutcome,
    pub positivity: ProgramReport,
    pub decrease: ProgramReport,
}

impl CounterexampleReport {
    pub fn is_clear(&self) -> bool {
        matches!(self.outcome, CheckOutcome::NoCounterexample)
    }
}

struct Row {
    coeffs: Vec<f64>,
    constant: f64,
    norm: f64,
}

struct Layout<'a> {
    rp: &'a RelaxedProblem,
    /// `mu(s)` for every moment.
    moment_scale: Vec<f64>,
}

impl<'a> Layout<'a> {
    fn new(rp: &'a RelaxedProblem) -> Self {
        let moment_scale = rp.basis.moments().iter().map(|m| m.eval(&rp.scale)).collect();
        Self { rp, moment_scale }
    }

    fn nm(&self) -> usize {
        self.rp.basis.moment_count() - 1
    }

    /// `L(p)` as an affine function of the scaled non-constant moments.
    fn row(&self, p: &Polynomial) -> Result<Row> {
        let mut coeffs = vec![0.0; self.nm()];
        let mut constant = 0.0;
        for (m, c) in p.terms() {
            let k = self
                .rp
                .basis
                .moment_position(m)
                .ok_or_else(|| Error::Invalid(format!("monomial {m:?} outside the relaxation basis")))?;
            if k == 0 {
                constant += c;
            } else {
                coeffs[k - 1] += c * self.moment_scale[k];
            }
        }
        let mut norm = coeffs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-14 {
            norm = constant.abs().max(1.0);
        }
        Ok(Row { coeffs, constant, norm })
    }

    fn eval(&self, row: &Row, yhat: &[f64]) -> f64 {
        (row.constant + row.coeffs.iter().zip(yhat).map(|(a, y)| a * y).sum::<f64>()) / row.norm
    }

    fn unscale(&self, yhat: &[f64]) -> WitnessMatrix {
        let mut moments = Vec::with_capacity(yhat.len() + 1);
        moments.push(1.0);
        moments.extend(yhat.iter().zip(&self.moment_scale[1..]).map(|(y, s)| y * s));
        WitnessMatrix { moments }
    }

    /// `maximize gamma  s.t.  L(p_r) <= -gamma` for every row, plus exclusion,
    /// moment box and `M(y) >= 0`.
    fn program(&self, rows: &[Row], exclusion: &Row, threshold: f64) -> ConeProgram {
        let nm = self.nm();
        let mut cp = ConeProgram { c: vec![0.0; nm + 1], ..Default::default() };
        cp.c[nm] = -1.0;
        for r in rows {
            let mut g: Vec<(usize, f64)> =
                r.coeffs.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, v)| (k, v / r.norm)).collect();
            g.push((nm, 1.0));
            cp.lp_g.push(g);
            cp.lp_h.push(-r.constant / r.norm);
        }
        cp.lp_g.push(
            exclusion.coeffs.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, v)| (k, -v / exclusion.norm)).collect(),
        );
        cp.lp_h.push((exclusion.constant - threshold) / exclusion.norm);
        for k in 1..=nm {
            let b = self.rp.lifted_box.bounds[k];
            let s = self.moment_scale[k];
            cp.lp_g.push(vec![(k - 1, 1.0)]);
            cp.lp_h.push(b.hi / s);
            cp.lp_g.push(vec![(k - 1, -1.0)]);
            cp.lp_h.push(-b.lo / s);
        }
        let size = self.rp.basis.size();
        let mut h = DMatrix::zeros(size, size);
        h[(0, 0)] = 1.0;
        let mut coeffs: Vec<Vec<(usize, usize, f64)>> =
            (1..=nm).map(|k| self.rp.basis.pairs(k).iter().map(|&(i, j)| (i, j, -1.0)).collect()).collect();
        coeffs.push(Vec::new());
        cp.psd.push(PsdBlock { dim: size, coeffs, h });
        cp
    }
}

fn program_rows(rp: &RelaxedProblem, c: &[f64], which: Violation) -> Vec<Polynomial> {
    match which {
        Violation::Positivity => vec![rp.v(c).sub(&rp.alpha)],
        Violation::Decrease => (0..rp.modes()).map(|q| rp.neg_vdot(q, c).sub(&rp.decrease[q])).collect(),
    }
}

/// The conic program searching for a witness of `which` (for `--dump-sdp`).
pub fn check_program(rp: &RelaxedProblem, c: &[f64], which: Violation) -> Result<ConeProgram> {
    let layout = Layout::new(rp);
    let rows = program_rows(rp, c, which).iter().map(|p| layout.row(p)).collect::<Result<Vec<_>>>()?;
    Ok(layout.program(&rows, &layout.row(&rp.alpha)?, rp.exclusion))
}

fn witness_ok(layout: &Layout, yhat: &[f64], exclusion: &Row, threshold: f64, tol: &ToleranceSet) -> bool {
    let slack = tol.feas * 10.0;
    let in_box = (1..=layout.nm()).all(|k| {
        let b = layout.rp.lifted_box.bounds[k];
        let s = layout.moment_scale[k];
        yhat[k - 1] >= b.lo / s - slack && yhat[k - 1] <= b.hi / s + slack
    });
    let mut full = vec![1.0];
    full.extend_from_slice(yhat);
    let m = layout.rp.basis.moment_matrix(&full);
    let psd = m.symmetric_eigen().eigenvalues.min() >= -slack;
    let excl = layout.eval(exclusion, yhat) >= (threshold / exclusion.norm) - slack;
    in_box && psd && excl && yhat.iter().all(|v| v.is_finite())
}

fn run(
    layout: &Layout,
    rows: &[Row],
    exclusion: &Row,
    threshold: f64,
    tol: &ToleranceSet,
) -> (ProgramReport, ConeSolution) {
    let cp = layout.program(rows, exclusion, threshold);
    let sol = solve_cone(&cp, &tol.cone());
    let nm = layout.nm();
    if sol.status == ConeStatus::PrimalInfeasible {
        let rep = ProgramReport {
            status: sol.status,
            gamma: f64::NEG_INFINITY,
            gamma_upper: f64::NEG_INFINITY,
            iterations: sol.iterations,
            witness: None,
        };
        return (rep, sol);
    }
    let yhat: Vec<f64> = sol.x.iter().take(nm).copied().collect();
    let gamma = rows.iter().map(|r| -layout.eval(r, &yhat)).fold(f64::INFINITY, f64::min);
    let witness = witness_ok(layout, &yhat, exclusion, threshold, tol).then(|| layout.unscale(&yhat));
    let rep = ProgramReport {
        status: sol.status,
        gamma: if witness.is_some() { gamma } else { f64::NAN },
        gamma_upper: -sol.dual_objective,
        iterations: sol.iterations,
        witness,
    };
    (rep, sol)
}

enum Verdict {
    Clear,
    Violated,
    Unknown,
}

fn verdict(rep: &ProgramReport, sol: &ConeSolution, tol: &ToleranceSet) -> Verdict {
    if rep.status == ConeStatus::PrimalInfeasible {
        return Verdict::Clear;
    }
    if rep.witness.is_some() && rep.gamma > tol.margin {
        return Verdict::Violated;
    }
    let dual_ok = rep.status == ConeStatus::Optimal || sol.dres <= tol.feas * 10.0;
    if dual_ok && rep.gamma_upper <= tol.margin {
        return Verdict::Clear;
    }
    Verdict::Unknown
}

fn solve_one(rp: &RelaxedProblem, c: &[f64], which: Violation, tol: &ToleranceSet) -> Result<(ProgramReport, bool)> {
    let layout = Layout::new(rp);
    let rows = program_rows(rp, c, which).iter().map(|p| layout.row(p)).collect::<Result<Vec<_>>>()?;
    let excl = layout.row(&rp.alpha)?;
    let (rep, sol) = run(&layout, &rows, &excl, rp.exclusion, tol);
    match verdict(&rep, &sol, tol) {
        Verdict::Clear => return Ok((rep, false)),
        Verdict::Violated => return Ok((rep, true)),
        Verdict::Unknown => {}
    }
    log::debug!("check program {which:?} inconclusive ({:?}), retrying with relaxed tolerances", rep.status);
    let relaxed = ToleranceSet { feas: tol.feas * 10.0, gap: tol.gap * 10.0, max_iters: tol.max_iters * 2, ..*tol };
    let (rep2, sol2) = run(&layout, &rows, &excl, rp.exclusion, &relaxed);
    match verdict(&rep2, &sol2, tol) {
        Verdict::Clear => Ok((rep2, false)),
        Verdict::Violated => Ok((rep2, true)),
        Verdict::Unknown => Err(Error::Numerical(format!(
            "{which:?} check program ended with {:?} (gamma {:.3e}, dual bound {:.3e})",
            rep2.status, rep2.gamma, rep2.gamma_upper
        ))),
    }
}

/// Runs both check programs for candidate `c`; the witness with the larger
/// normalized margin is returned when either program finds a violation.
pub fn check_candidate(rp: &RelaxedProblem, c: &[f64], tol: &ToleranceSet) -> Result<CounterexampleReport> {
    if c.len() != rp.template.len() {
        return Err(Error::Dimension { expected: rp.template.len(), got: c.len() });
    }
    let (positivity, pv) = solve_one(rp, c, Violation::Positivity, tol)?;
    let (decrease, dv) = solve_one(rp, c, Violation::Decrease, tol)?;
    let pick = match (pv, dv) {
        (false, false) => None,
        (true, false) => Some(Violation::Positivity),
        (false, true) => Some(Violation::Decrease),
        (true, true) => Some(if positivity.gamma >= decrease.gamma { Violation::Positivity } else { Violation::Decrease }),
    };
    let outcome = match pick {
        None => CheckOutcome::NoCounterexample,
        Some(v) => {
            let rep = if v == Violation::Positivity { &positivity } else { &decrease };
            CheckOutcome::Counterexample { witness: rep.witness.clone().expect("violated program has a witness"), violation: v, gamma: rep.gamma }
        }
    };
    Ok(CounterexampleReport { outcome, positivity, decrease })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::PhiFunction;
    use crate::plant::{catalog_entry, Mode, StabilitySpec, SwitchedPlant};
    use crate::poly::{BoxDomain, Monomial};
    use crate::relax::{assemble, quadratic_template};

    fn system_one() -> RelaxedProblem {
        let plant = catalog_entry(1).unwrap().plant.to_switched().unwrap();
        let q = plant.modes.len();
        assemble(&plant, &quadratic_template(2), 0.01, &vec![PhiFunction::quadratic(2); q], &vec![0.01; q], 1e-6).unwrap()
    }

    #[test]
    fn zero_candidate_violates_positivity() {
        let rp = system_one();
        let rep = check_candidate(&rp, &[0.0, 0.0, 0.0], &ToleranceSet::default()).unwrap();
        assert_eq!(rep.positivity.status, ConeStatus::Optimal);
        assert!(rep.positivity.gamma > 0.0);
        // the witness must realize the reported margin on the original functional
        let w = rep.positivity.witness.as_ref().unwrap();
        let l_alpha = rp.basis.functional(&rp.alpha, &w.moments);
        assert!(l_alpha >= rp.exclusion - 1e-7);
        // best rank-one point: a box corner, L(alpha) = 0.01 * 2
        assert!(l_alpha <= 0.02 + 1e-7);
        assert!(matches!(rep.outcome, CheckOutcome::Counterexample { .. }));
        let z = w.matrix(&rp.basis);
        assert!(z.symmetric_eigen().eigenvalues.min() > -1e-7);
        assert!(rp.lifted_box.contains(&w.moments, 1e-7));
    }

    #[test]
    fn exact_decrease_is_boundary_case() {
        // x' = -x with V = x^2: V' = -2x^2 = -eps*phi for eps = 2
        let plant = SwitchedPlant::new(
            "line",
            vec!["x".into()],
            vec![Mode { id: "q".into(), field: vec![Polynomial::var(1, 0).scale(-1.0)] }],
            BoxDomain::symmetric(1, 1.0),
            StabilitySpec::asymptotic(),
        )
        .unwrap();
        let rp = assemble(&plant, &[Monomial::var_pow(0, 2)], 0.01, &[PhiFunction::quadratic(1)], &[2.0], 1e-6).unwrap();
        let rep = check_candidate(&rp, &[1.0], &ToleranceSet::default()).unwrap();
        assert!(rep.decrease.gamma_upper <= ToleranceSet::default().margin);
        assert!(rep.is_clear(), "{rep:?}");
    }

    #[test]
    fn valid_quadratic_candidate_passes() {
        // x' = -x, y' = -y: V = x^2 + y^2 decreases with margin everywhere
        let f = vec![Polynomial::var(2, 0).scale(-1.0), Polynomial::var(2, 1).scale(-1.0)];
        let plant = SwitchedPlant::new(
            "sink",
            vec!["x".into(), "y".into()],
            vec![Mode { id: "q".into(), field: f }],
            BoxDomain::symmetric(2, 1.0),
            StabilitySpec::asymptotic(),
        )
        .unwrap();
        let t = quadratic_template(2);
        let rp = assemble(&plant, &t, 0.01, &[PhiFunction::quadratic(2)], &[0.1], 1e-6).unwrap();
        let c: Vec<f64> = t.iter().map(|m| if m.vars().count() == 1 { 1.0 } else { 0.0 }).collect();
        let rep = check_candidate(&rp, &c, &ToleranceSet::default()).unwrap();
        assert!(rep.is_clear(), "{rep:?}");
        // flipping a sign breaks positivity
        let bad: Vec<f64> = c.iter().enumerate().map(|(k, v)| if k == 0 { -v } else { *v }).collect();
        let rep = check_candidate(&rp, &bad, &ToleranceSet::default()).unwrap();
        assert!(matches!(rep.outcome, CheckOutcome::Counterexample { .. }));
    }
}
