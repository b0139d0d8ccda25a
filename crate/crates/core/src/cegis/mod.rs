//! The CEGIS loop: alternate the find and check steps from vertex witnesses
//! until a candidate survives, then confirm it by sampling and attach the
//! sublevel threshold and dwell bound.

mod certificate;
mod confirm;
mod sublevel;

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use certificate::{Certificate, ResolvedCertificate};
pub use confirm::{confirm_by_sampling, ConfirmationReport, PointwiseConditions, CONFIRM_TOL};
pub use sublevel::sublevel_threshold;

use crate::candidate::{build_system, find_candidate, initial_witnesses, witness_rows, FindResult, Provenance, WitnessSet};
use crate::error::{Error, Result};
use crate::phi::{dwell_time, mode_bounds, select_phi, BoundCertificate, PhiFunction};
use crate::plant::{Model, PhiPolicy, Plant, SwitchedPlant, TemplateSpec};
use crate::poly::Monomial;
use crate::relax::{assemble, quadratic_template, RelaxedProblem};
use crate::sdp::{check_candidate, CheckOutcome, ToleranceSet, Violation};

pub const DEFAULT_LAMBDA: f64 = 2.0;
pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_TAU: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisConfig {
    pub template: Vec<Monomial>,
    /// Decrease rate per mode.
    pub eps: Vec<f64>,
    pub lambda: f64,
    /// `alpha = alpha_scale * |x|^2`.
    pub alpha_scale: f64,
    /// Half-width of the coefficient box `C0 = [-c0, c0]^m`.
    pub c0: f64,
    pub tol: ToleranceSet,
    /// Strictness margin of the find step, in units of the row norm.
    pub tau: f64,
    pub max_iters: usize,
    pub confirm_samples: usize,
    pub seed: u64,
    pub phi: PhiPolicy,
}

impl SynthesisConfig {
    /// Catalog defaults of a model.
    pub fn for_model(model: &Model) -> Result<Self> {
        let n = model.plant.variables().len();
        let modes = model.plant.to_switched()?.modes.len();
        let template = match &model.defaults.template {
            TemplateSpec::Quadratic => quadratic_template(n),
            TemplateSpec::Monomials(ms) => ms.clone(),
        };
        Ok(Self {
            template,
            eps: vec![model.defaults.eps; modes],
            lambda: model.defaults.lambda.unwrap_or(DEFAULT_LAMBDA),
            alpha_scale: model.defaults.alpha_scale,
            c0: 1.0,
            tol: ToleranceSet::default(),
            tau: DEFAULT_TAU,
            max_iters: model.defaults.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
            confirm_samples: DEFAULT_SAMPLES,
            seed: 0,
            phi: model.defaults.phi,
        })
    }

    fn validate(&self, modes: usize) -> Result<()> {
        if self.template.is_empty() {
            return Err(Error::Invalid("empty template".into()));
        }
        if self.template.iter().any(Monomial::is_one) {
            return Err(Error::Invalid("template must not contain a constant term (V(0) = 0)".into()));
        }
        if self.eps.len() != modes {
            return Err(Error::Dimension { expected: modes, got: self.eps.len() });
        }
        if self.eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
            return Err(Error::Invalid("eps must be finite and nonnegative".into()));
        }
        if !(self.lambda > 1.0) {
            return Err(Error::Invalid(format!("lambda must exceed 1, got {}", self.lambda)));
        }
        if !(self.alpha_scale > 0.0) || !(self.c0 > 0.0) || !(self.tau > 0.0) {
            return Err(Error::Invalid("alpha scale, c0 and tau must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Invalid("iteration cap must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureReason {
    CandidateUnsat,
    IterationCap,
    NumericalFailure,
    ConfirmationFailed,
}

impl FailureReason {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureReason::CandidateUnsat => 2,
            FailureReason::IterationCap => 3,
            FailureReason::NumericalFailure => 4,
            FailureReason::ConfirmationFailed => 5,
        }
    }
}

/// One find/check round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub candidate: Vec<f64>,
    pub slack: f64,
    pub violation: Option<Violation>,
    pub gamma: Option<f64>,
}

/// Wall-clock split between the two steps; never part of a certificate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub find: Duration,
    pub check: Duration,
    pub total: Duration,
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub certificate: Certificate,
    pub history: Vec<IterationRecord>,
    pub witnesses: WitnessSet,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub struct Failure {
    pub reason: FailureReason,
    pub message: String,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub witnesses: WitnessSet,
    pub last_candidate: Option<Vec<f64>>,
    pub confirmation: Option<ConfirmationReport>,
    pub timings: Timings,
}

#[derive(Clone, Debug)]
pub enum SynthesisOutcome {
    Success(Box<Synthesis>),
    Failure(Box<Failure>),
}

impl SynthesisOutcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            SynthesisOutcome::Success(_) => 0,
            SynthesisOutcome::Failure(f) => f.reason.exit_code(),
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            SynthesisOutcome::Success(s) => s.certificate.iterations,
            SynthesisOutcome::Failure(f) => f.iterations,
        }
    }

    pub fn timings(&self) -> Timings {
        match self {
            SynthesisOutcome::Success(s) => s.timings,
            SynthesisOutcome::Failure(f) => f.timings,
        }
    }

    pub fn witness_count(&self) -> usize {
        match self {
            SynthesisOutcome::Success(s) => s.witnesses.len(),
            SynthesisOutcome::Failure(f) => f.witnesses.len(),
        }
    }
}

/// Decrease functions per mode under the configured policy.
pub fn choose_phis(plant: &SwitchedPlant, template: &[Monomial], policy: PhiPolicy) -> Result<Vec<PhiFunction>> {
    plant
        .modes
        .iter()
        .map(|m| match policy {
            PhiPolicy::Quad => Ok(PhiFunction::quadratic(plant.n())),
            PhiPolicy::Auto => {
                let sel = select_phi(template, &m.field)?;
                if sel.constant_warning && plant.spec.excluded_radius() > 0.0 {
                    // Off the target ball a quadratic phi bounds the constant
                    // terms too, and it keeps the decrease margin from
                    // rewarding relaxed witnesses that sit at the origin.
                    return Ok(PhiFunction::quadratic(plant.n()));
                }
                if sel.constant_warning {
                    log::warn!("mode {}: only a constant phi is admissible", m.id);
                }
                Ok(sel.phi)
            }
        })
        .collect()
}

/// The relaxation a configuration induces on a plant.
pub fn relaxation(plant: &SwitchedPlant, config: &SynthesisConfig) -> Result<RelaxedProblem> {
    config.validate(plant.modes.len())?;
    let phis = choose_phis(plant, &config.template, config.phi)?;
    assemble(plant, &config.template, config.alpha_scale, &phis, &config.eps, config.tol.strict)
}

struct Loop<'a> {
    rp: &'a RelaxedProblem,
    config: &'a SynthesisConfig,
    witnesses: WitnessSet,
    history: Vec<IterationRecord>,
    timings: Timings,
    started: Instant,
}

impl Loop<'_> {
    fn fail(mut self, reason: FailureReason, message: String, last: Option<Vec<f64>>, conf: Option<ConfirmationReport>) -> SynthesisOutcome {
        self.timings.total = self.started.elapsed();
        log::info!("synthesis failed ({reason:?}): {message}");
        SynthesisOutcome::Failure(Box::new(Failure {
            reason,
            message,
            iterations: self.history.len(),
            history: self.history,
            witnesses: self.witnesses,
            last_candidate: last,
            confirmation: conf,
            timings: self.timings,
        }))
    }
}

pub fn synthesize_model(model: &Model, config: &SynthesisConfig) -> Result<SynthesisOutcome> {
    let mut out = synthesize(&model.plant, config)?;
    if let SynthesisOutcome::Success(s) = &mut out {
        s.certificate.model_id = model.id;
    }
    Ok(out)
}

/// Runs the full loop. Configuration and model errors are returned as `Err`;
/// every declared failure of the procedure is a [`SynthesisOutcome::Failure`].
pub fn synthesize(plant: &Plant, config: &SynthesisConfig) -> Result<SynthesisOutcome> {
    let switched = plant.to_switched()?;
    config.validate(switched.modes.len())?;
    let phis = choose_phis(&switched, &config.template, config.phi)?;
    let rp = assemble(&switched, &config.template, config.alpha_scale, &phis, &config.eps, config.tol.strict)?;
    let m = config.template.len();
    let lower = vec![-config.c0; m];
    let upper = vec![config.c0; m];
    let mut lp = Loop {
        rp: &rp,
        config,
        witnesses: initial_witnesses(&rp)?,
        history: Vec::new(),
        timings: Timings::default(),
        started: Instant::now(),
    };
    log::info!(
        "{}: {} modes, template of {} monomials, basis {} ({} moments), {} initial witnesses",
        switched.name,
        rp.modes(),
        m,
        rp.basis.size(),
        rp.basis.moment_count(),
        lp.witnesses.len()
    );

    let mut accepted = None;
    for iteration in 1..=config.max_iters {
        let t0 = Instant::now();
        let sys = build_system(lp.rp, &lp.witnesses, &lower, &upper, lp.config.tau);
        let found = find_candidate(&sys);
        lp.timings.find += t0.elapsed();
        let (c, slack) = match found {
            Ok(FindResult::Candidate { c, slack }) => (c, slack),
            Ok(FindResult::Unsat) => {
                let msg = format!("no candidate satisfies the {} witnesses", lp.witnesses.len());
                return Ok(lp.fail(FailureReason::CandidateUnsat, msg, None, None));
            }
            Ok(FindResult::Exhausted) => {
                let msg = "find step exhausted its LP budget".to_string();
                return Ok(lp.fail(FailureReason::IterationCap, msg, None, None));
            }
            Err(e) => return Ok(lp.fail(FailureReason::NumericalFailure, e.to_string(), None, None)),
        };
        let t1 = Instant::now();
        let report = check_candidate(lp.rp, &c, &lp.config.tol);
        lp.timings.check += t1.elapsed();
        let report = match report {
            Ok(r) => r,
            Err(e) => {
                lp.history.push(IterationRecord { iteration, candidate: c.clone(), slack, violation: None, gamma: None });
                return Ok(lp.fail(FailureReason::NumericalFailure, e.to_string(), Some(c), None));
            }
        };
        match report.outcome {
            CheckOutcome::NoCounterexample => {
                log::debug!("iteration {iteration}: candidate accepted by the check step");
                lp.history.push(IterationRecord { iteration, candidate: c.clone(), slack, violation: None, gamma: None });
                accepted = Some(c);
                break;
            }
            CheckOutcome::Counterexample { witness, violation, gamma } => {
                log::debug!("iteration {iteration}: {violation:?} counterexample, gamma {gamma:.3e}");
                lp.history.push(IterationRecord { iteration, candidate: c.clone(), slack, violation: Some(violation), gamma: Some(gamma) });
                let rows = witness_rows(lp.rp, &witness);
                let still_ok = match violation {
                    Violation::Positivity => rows.positivity.slack(&c) >= lp.config.tau,
                    Violation::Decrease => rows.modes.iter().any(|r| r.slack(&c) >= lp.config.tau),
                };
                if still_ok {
                    log::warn!("iteration {iteration}: counterexample does not cut off the candidate");
                }
                let prov = Provenance::SdpCounterexample { iteration, violation, gamma };
                match lp.witnesses.add_witness(lp.rp, witness, prov) {
                    Ok(true) => {}
                    Ok(false) => {
                        let msg = format!("iteration {iteration}: counterexample repeats a known witness");
                        return Ok(lp.fail(FailureReason::NumericalFailure, msg, Some(c), None));
                    }
                    Err(e) => {
                        return Ok(lp.fail(FailureReason::NumericalFailure, format!("rejected witness: {e}"), Some(c), None));
                    }
                }
                // the other program may have found a violation as well
                let (other, kind) = match violation {
                    Violation::Positivity => (&report.decrease, Violation::Decrease),
                    Violation::Decrease => (&report.positivity, Violation::Positivity),
                };
                if let Some(w) = other.witness.as_ref().filter(|_| other.gamma > lp.config.tol.margin) {
                    let prov = Provenance::SdpCounterexample { iteration, violation: kind, gamma: other.gamma };
                    if let Err(e) = lp.witnesses.add_witness(lp.rp, w.clone(), prov) {
                        log::debug!("iteration {iteration}: secondary witness dropped: {e}");
                    }
                }
            }
        }
    }
    let Some(c) = accepted else {
        let msg = format!("no certificate within {} iterations", config.max_iters);
        return Ok(lp.fail(FailureReason::IterationCap, msg, None, None));
    };

    let v = rp.v(&c);
    let fields: Vec<&[crate::poly::Polynomial]> = switched.modes.iter().map(|m| m.field.as_slice()).collect();
    let cond = PointwiseConditions::new(&v, &rp.alpha, fields, &rp.decrease);
    let conf = confirm_by_sampling(&cond, &switched.domain, rp.excluded_radius, config.confirm_samples, config.seed);
    if !conf.passed {
        let msg = format!(
            "{} sampled violations (worst positivity {:.3e}, worst decrease {:.3e})",
            conf.violations, conf.worst_positivity, conf.worst_decrease
        );
        return Ok(lp.fail(FailureReason::ConfirmationFailed, msg, Some(c), Some(conf)));
    }
    if let Some(q) = quadratic_form(&v, &config.template, switched.n()) {
        let min = q.symmetric_eigen().eigenvalues.min();
        if min < -1e-9 {
            let msg = format!("quadratic part of V is indefinite (eigenvalue {min:.3e})");
            return Ok(lp.fail(FailureReason::ConfirmationFailed, msg, Some(c), Some(conf)));
        }
    }
    let beta_lb = match sublevel_threshold(&v, &switched.domain) {
        Ok(b) => b,
        Err(e) => return Ok(lp.fail(FailureReason::ConfirmationFailed, e.to_string(), Some(c), Some(conf))),
    };
    let bounds: Vec<Option<BoundCertificate>> = switched
        .modes
        .iter()
        .zip(&phis)
        .zip(&config.eps)
        .map(|((mode, phi), &e)| if e > 0.0 { mode_bounds(&v, &mode.field, phi, &switched.domain, switched.spec.excluded_radius()).ok() } else { None })
        .collect();
    let dwell = if bounds.iter().all(Option::is_some) {
        let b: Vec<BoundCertificate> = bounds.iter().flatten().copied().collect();
        Some(dwell_time(&config.eps, &b, config.lambda)?)
    } else {
        None
    };
    let certificate = Certificate::assemble(certificate::CertificateParts {
        plant: &switched,
        template: &config.template,
        c: &c,
        v: &v,
        phis: &phis,
        eps: &config.eps,
        bounds: &bounds,
        dwell: dwell.as_ref(),
        lambda: config.lambda,
        alpha_scale: config.alpha_scale,
        beta_lb,
        iterations: lp.history.len(),
        witness_count: lp.witnesses.len(),
        confirmation: conf,
    });
    lp.timings.total = lp.started.elapsed();
    Ok(SynthesisOutcome::Success(Box::new(Synthesis {
        certificate,
        history: lp.history,
        witnesses: lp.witnesses,
        timings: lp.timings,
    })))
}

/// Symmetric matrix of the degree-two part of `V` when the template is purely quadratic.
fn quadratic_form(v: &crate::poly::Polynomial, template: &[Monomial], n: usize) -> Option<DMatrix<f64>> {
    if !template.iter().all(|m| m.degree() == 2) {
        return None;
    }
    let mut q = DMatrix::zeros(n, n);
    for (m, c) in v.terms() {
        let vars: Vec<usize> = m.vars().collect();
        match vars.as_slice() {
            [i] => q[(*i, *i)] += c,
            [i, j] => {
                q[(*i, *j)] += 0.5 * c;
                q[(*j, *i)] += 0.5 * c;
            }
            _ => return None,
        }
    }
    Some(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::catalog_entry;

    fn run(id: u32) -> SynthesisOutcome {
        let model = catalog_entry(id).unwrap();
        let mut cfg = SynthesisConfig::for_model(&model).unwrap();
        cfg.confirm_samples = 20_000;
        synthesize_model(&model, &cfg).unwrap()
    }

    #[test]
    fn system_nine_in_one_iteration() {
        match run(9) {
            SynthesisOutcome::Success(s) => {
                assert_eq!(s.certificate.iterations, 1);
                assert!(s.certificate.beta_lb > 0.0);
                assert!(s.certificate.confirmation.passed);
            }
            SynthesisOutcome::Failure(f) => panic!("{f:?}"),
        }
    }

    #[test]
    fn system_one_succeeds() {
        let SynthesisOutcome::Success(s) = run(1) else { panic!("system 1 failed") };
        let cert = &s.certificate;
        assert!(cert.iterations >= 1 && cert.iterations <= 180);
        assert!(cert.dwell_lb.is_some_and(|d| d > 0.0));
        let json = cert.to_json();
        assert_eq!(Certificate::from_json(&json).unwrap(), *cert);
    }
}
