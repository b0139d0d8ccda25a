//! Closed-loop execution of the switching law with fixed-step RK4 and
//! bisection-refined switch instants, plus the trace audit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cegis::ResolvedCertificate;
use crate::plant::{SpecKind, SwitchedPlant};
use crate::poly::{eval_field, BoxDomain, Polynomial};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("initial state is outside the certified sublevel set")]
    OutsideSublevel,
    #[error("state {0:?} is outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("switch required at {x:?} but no mode decreases V fast enough")]
    NoEligibleMode { x: Vec<f64> },
    #[error("invalid simulation parameters: {0}")]
    Invalid(String),
}

/// Switching law: leave mode `q` once `V'_q >= -eps_q phi_q / lambda`, for the
/// eligible mode (`V'_p < -eps_p phi_p`) of steepest normalized descent.
pub struct SwitchingLaw<'a> {
    pub plant: &'a SwitchedPlant,
    pub cert: &'a ResolvedCertificate,
    pub lambda: f64,
    grad: Vec<Polynomial>,
}

/// Slack for the "no eligible mode" diagnosis at states where every
/// condition degenerates to equality (the origin, or eps = 0 on a level set).
const DEGENERATE_TOL: f64 = 1e-12;

impl<'a> SwitchingLaw<'a> {
    pub fn new(plant: &'a SwitchedPlant, cert: &'a ResolvedCertificate) -> Self {
        Self::with_lambda(plant, cert, cert.lambda)
    }

    pub fn with_lambda(plant: &'a SwitchedPlant, cert: &'a ResolvedCertificate, lambda: f64) -> Self {
        let grad = (0..plant.n()).map(|i| cert.v.clone().with_nvars(plant.n()).partial(i)).collect();
        Self { plant, cert, lambda, grad }
    }

    pub fn v(&self, x: &[f64]) -> f64 {
        self.cert.v.eval_unchecked(x)
    }

    pub fn vdot(&self, q: usize, x: &[f64]) -> f64 {
        let f = eval_field(&self.plant.modes[q].field, x);
        self.grad.iter().zip(&f).map(|(g, fi)| g.eval_unchecked(x) * fi).sum()
    }

    fn decrease(&self, q: usize, x: &[f64]) -> f64 {
        self.cert.decrease[q].eval_unchecked(x)
    }

    /// True when the guard forces leaving `q` at `x`.
    pub fn must_switch(&self, q: usize, x: &[f64]) -> bool {
        let vd = self.vdot(q, x);
        let eta = -self.decrease(q, x) / self.lambda;
        vd >= eta && !(vd == 0.0 && eta == 0.0 && x.iter().all(|v| *v == 0.0))
    }

    fn steepest(&self, x: &[f64], eligible_only: bool) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for q in 0..self.plant.modes.len() {
            let vd = self.vdot(q, x);
            if eligible_only && !(vd < -self.decrease(q, x)) {
                continue;
            }
            let phi = self.cert.phi[q].eval_unchecked(x);
            let key = if phi > 0.0 { vd / phi } else { vd };
            if best.is_none_or(|(k, _)| key < k) {
                best = Some((key, q));
            }
        }
        best.map(|(_, q)| q)
    }

    pub fn select_mode(&self, q: usize, x: &[f64]) -> Result<usize, SimError> {
        if !self.plant.domain.contains(x) {
            return Err(SimError::OutsideDomain(x.to_vec()));
        }
        if !self.must_switch(q, x) {
            return Ok(q);
        }
        if let Some(p) = self.steepest(x, true) {
            return Ok(p);
        }
        let best = (0..self.plant.modes.len())
            .map(|p| -self.vdot(p, x) - self.decrease(p, x))
            .fold(f64::NEG_INFINITY, f64::max);
        if best >= -DEGENERATE_TOL {
            Ok(q)
        } else {
            Err(SimError::NoEligibleMode { x: x.to_vec() })
        }
    }

    /// Mode used at time zero: the steepest eligible one, else the steepest overall.
    pub fn initial_mode(&self, x: &[f64]) -> usize {
        self.steepest(x, true).or_else(|| self.steepest(x, false)).unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Horizon,
    /// `|x|` fell below the convergence floor (AS).
    Converged,
    /// Entered the target ball (RS).
    TargetReached,
    DomainExit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub t: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub modes: Vec<usize>,
    pub v: Vec<f64>,
    pub vdot: Vec<f64>,
    pub switches: Vec<SwitchEvent>,
    pub step: f64,
    pub termination: Option<Termination>,
}

impl Trace {
    pub fn switch_times(&self) -> Vec<f64> {
        self.switches.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t, x1..xn, mode, V, Vdot` with a header row.
    pub fn to_csv(&self, names: &[String], mode_ids: &[String]) -> String {
        use std::fmt::Write;
        let mut out = String::from("t");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push_str(",mode,V,Vdot\n");
        for k in 0..self.times.len() {
            let _ = write!(out, "{:.9e}", self.times[k]);
            for x in &self.states[k] {
                let _ = write!(out, ",{x:.12e}");
            }
            let m = mode_ids.get(self.modes[k]).cloned().unwrap_or_else(|| self.modes[k].to_string());
            let _ = writeln!(out, ",{m},{:.12e},{:.12e}", self.v[k], self.vdot[k]);
        }
        out
    }
}

/// States with norm below this count as converged in AS runs.
pub const CONVERGED_NORM: f64 = 1e-9;

/// Default integration step: `dwell / 20` clamped to `[1e-4, 1e-2]`, else `1e-3`.
pub fn default_step(dwell: Option<f64>) -> f64 {
    match dwell {
        Some(d) if d.is_finite() && d > 0.0 => (d / 20.0).clamp(1e-4, 1e-2),
        _ => 1e-3,
    }
}

fn rk4(field: &[Polynomial], x: &[f64], h: f64) -> Vec<f64> {
    let add = |a: &[f64], b: &[f64], s: f64| a.iter().zip(b).map(|(u, v)| u + s * v).collect::<Vec<_>>();
    let k1 = eval_field(field, x);
    let k2 = eval_field(field, &add(x, &k1, 0.5 * h));
    let k3 = eval_field(field, &add(x, &k2, 0.5 * h));
    let k4 = eval_field(field, &add(x, &k3, h));
    (0..x.len()).map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn simulate(law: &SwitchingLaw, x0: &[f64], horizon: f64, step: f64) -> Result<Trace, SimError> {
    let plant = law.plant;
    if x0.len() != plant.n() {
        return Err(SimError::Invalid(format!("x0 has {} components, expected {}", x0.len(), plant.n())));
    }
    if !(step > 0.0) || !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(SimError::Invalid("step must be positive and the horizon finite".into()));
    }
    if !law.cert.in_sublevel(&plant.domain, x0) {
        return Err(SimError::OutsideSublevel);
    }
    let target = match plant.spec.kind {
        SpecKind::AS => None,
        SpecKind::RS => Some(plant.spec.target_radius),
    };
    let mut tr = Trace { step, ..Default::default() };
    let mut q = law.initial_mode(x0);
    let mut x = x0.to_vec();
    let mut t = 0.0;
    let push = |tr: &mut Trace, t: f64, x: &[f64], q: usize| {
        tr.times.push(t);
        tr.states.push(x.to_vec());
        tr.modes.push(q);
        tr.v.push(law.v(x));
        tr.vdot.push(law.vdot(q, x));
    };
    push(&mut tr, t, &x, q);
    let resolution = step / 100.0;
    loop {
        if norm(&x) < CONVERGED_NORM && target.is_none() {
            tr.termination = Some(Termination::Converged);
            break;
        }
        if target.is_some_and(|r| norm(&x) < r) {
            tr.termination = Some(Termination::TargetReached);
            break;
        }
        if t >= horizon - 1e-12 {
            tr.termination = Some(Termination::Horizon);
            break;
        }
        let h = step.min(horizon - t);
        let field = &plant.modes[q].field;
        let next = rk4(field, &x, h);
        if !plant.domain.contains(&next) {
            push(&mut tr, t + h, &next, q);
            tr.termination = Some(Termination::DomainExit);
            break;
        }
        if law.must_switch(q, &next) {
            // earliest guard crossing within the step, to step/100
            let (mut lo, mut hi) = (0.0, h);
            while hi - lo > resolution {
                let mid = 0.5 * (lo + hi);
                if law.must_switch(q, &rk4(field, &x, mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let xs = rk4(field, &x, hi);
            t += hi;
            x = xs;
            let p = law.select_mode(q, &x)?;
            if p != q {
                tr.switches.push(SwitchEvent { t, from: q, to: p });
                q = p;
            }
            push(&mut tr, t, &x, q);
            continue;
        }
        t += h;
        x = next;
        push(&mut tr, t, &x, q);
    }
    Ok(tr)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub samples: usize,
    pub switches: usize,
    /// Smallest gap between consecutive switches (`null` with fewer than two).
    pub min_switch_gap: Option<f64>,
    pub dwell_lb: Option<f64>,
    pub dwell_violations: usize,
    pub max_v_increase: f64,
    pub v_tolerance: f64,
    pub v_increase_violations: usize,
    pub sublevel_violations: usize,
    pub target_entry: Option<f64>,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub termination: Option<Termination>,
    pub passed: bool,
}

/// Checks a trace against the certificate: dwell gaps, decrease of `V`,
/// and containment in `P*`.
pub fn audit_trace(trace: &Trace, cert: &ResolvedCertificate, domain: &BoxDomain, spec_radius: Option<f64>) -> AuditReport {
    let step = trace.step;
    let gaps: Vec<f64> = trace.switches.windows(2).map(|w| w[1].t - w[0].t).collect();
    let min_switch_gap = gaps.iter().copied().reduce(f64::min);
    let dwell_violations = match cert.dwell_lb {
        Some(d) => gaps.iter().filter(|&&g| g < d - step).count(),
        None => 0,
    };
    let vscale = trace.v.iter().copied().fold(1.0_f64, |a, b| a.max(b.abs()));
    let v_tolerance = 10.0 * step.powi(4) * vscale;
    let mut max_v_increase = f64::NEG_INFINITY;
    let mut v_increase_violations = 0;
    for w in trace.v.windows(2) {
        let inc = w[1] - w[0];
        max_v_increase = max_v_increase.max(inc);
        if inc > v_tolerance {
            v_increase_violations += 1;
        }
    }
    if trace.v.len() < 2 {
        max_v_increase = 0.0;
    }
    let sublevel_violations = trace.states.iter().filter(|x| !cert.in_sublevel(domain, x)).count();
    let target_entry = spec_radius.and_then(|r| trace.states.iter().zip(&trace.times).find(|(x, _)| norm(x) < r).map(|(_, t)| *t));
    let initial_norm = trace.states.first().map(|x| norm(x)).unwrap_or(0.0);
    let final_norm = trace.states.last().map(|x| norm(x)).unwrap_or(0.0);
    let passed = dwell_violations == 0
        && v_increase_violations == 0
        && sublevel_violations == 0
        && trace.termination != Some(Termination::DomainExit);
    AuditReport {
        samples: trace.len(),
        switches: trace.switches.len(),
        min_switch_gap,
        dwell_lb: cert.dwell_lb,
        dwell_violations,
        max_v_increase,
        v_tolerance,
        v_increase_violations,
        sublevel_violations,
        target_entry,
        initial_norm,
        final_norm,
        termination: trace.termination,
        passed,
    }
}
