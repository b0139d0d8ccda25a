use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::poly::{eval_field, BoxDomain, Polynomial};

/// Worst pointwise margins of a candidate over random samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationReport {
    pub samples: usize,
    pub seed: u64,
    /// `min (V - alpha)` over the samples.
    pub worst_positivity: f64,
    /// `min max_q (-V'_q - eps_q phi_q)` over the samples.
    pub worst_decrease: f64,
    pub violations: usize,
    pub worst_point: Option<Vec<f64>>,
    pub passed: bool,
}

/// Margin below which a sampled condition counts as violated.
pub const CONFIRM_TOL: f64 = 1e-7;

/// The pointwise conditions checked by sampling and by the simulator.
pub struct PointwiseConditions<'a> {
    pub v: &'a Polynomial,
    pub grad: Vec<Polynomial>,
    pub alpha: &'a Polynomial,
    pub fields: Vec<&'a [Polynomial]>,
    pub decrease: &'a [Polynomial],
}

impl<'a> PointwiseConditions<'a> {
    pub fn new(v: &'a Polynomial, alpha: &'a Polynomial, fields: Vec<&'a [Polynomial]>, decrease: &'a [Polynomial]) -> Self {
        let grad = (0..v.nvars()).map(|i| v.partial(i)).collect();
        Self { v, grad, alpha, fields, decrease }
    }

    pub fn vdot(&self, q: usize, x: &[f64]) -> f64 {
        let f = eval_field(self.fields[q], x);
        self.grad.iter().zip(&f).map(|(g, fi)| g.eval_unchecked(x) * fi).sum()
    }

    pub fn positivity(&self, x: &[f64]) -> f64 {
        self.v.eval_unchecked(x) - self.alpha.eval_unchecked(x)
    }

    pub fn decrease_margin(&self, x: &[f64]) -> f64 {
        (0..self.fields.len())
            .map(|q| -self.vdot(q, x) - self.decrease[q].eval_unchecked(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Uniform samples from the box minus the ball of radius `excluded`.
pub fn confirm_by_sampling(
    cond: &PointwiseConditions,
    domain: &BoxDomain,
    excluded: f64,
    samples: usize,
    seed: u64,
) -> ConfirmationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = domain.dim();
    let mut x = vec![0.0; n];
    let mut worst_positivity = f64::INFINITY;
    let mut worst_decrease = f64::INFINITY;
    let mut violations = 0;
    let mut worst_point = None;
    let mut worst = f64::INFINITY;
    let mut drawn = 0;
    let mut attempts = 0usize;
    while drawn < samples && attempts < samples.saturating_mul(100) {
        attempts += 1;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = if domain.lower[i] < domain.upper[i] { rng.random_range(domain.lower[i]..domain.upper[i]) } else { domain.lower[i] };
        }
        if excluded > 0.0 && x.iter().map(|v| v * v).sum::<f64>() < excluded * excluded {
            continue;
        }
        drawn += 1;
        let p = cond.positivity(&x);
        let d = cond.decrease_margin(&x);
        worst_positivity = worst_positivity.min(p);
        worst_decrease = worst_decrease.min(d);
        if p < -CONFIRM_TOL || d < -CONFIRM_TOL {
            violations += 1;
        }
        if p.min(d) < worst {
            worst = p.min(d);
            worst_point = Some(x.clone());
        }
    }
    ConfirmationReport {
        samples: drawn,
        seed,
        worst_positivity,
        worst_decrease,
        violations,
        worst_point,
        passed: violations == 0 && drawn > 0,
    }
}
