use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::{BoxDomain, Polynomial};

/// Relative gap at which the boundary minimization stops.
const REL_GAP: f64 = 0.01;
/// Boxes processed before settling for the current bound.
const BOX_BUDGET: usize = 40_000;

struct Cell {
    lb: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    seq: usize,
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cell {
    // min-heap on the bound, FIFO among ties
    fn cmp(&self, o: &Self) -> Ordering {
        o.lb.total_cmp(&self.lb).then(o.seq.cmp(&self.seq))
    }
}

struct Bounder<'a> {
    v: &'a Polynomial,
    grad: Vec<Polynomial>,
}

impl Bounder<'_> {
    /// Larger of the natural interval extension and the centered form
    /// `V(m) - sum_i sup|dV/dx_i| w_i / 2`.
    fn lower_bound(&self, lower: &[f64], upper: &[f64]) -> (f64, f64) {
        let b = BoxDomain { lower: lower.to_vec(), upper: upper.to_vec() };
        let mid: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
        let vm = self.v.eval_unchecked(&mid);
        let mut centered = vm;
        for (i, g) in self.grad.iter().enumerate() {
            let w = upper[i] - lower[i];
            if w > 0.0 {
                centered -= g.interval_eval(&b).mag() * 0.5 * w;
            }
        }
        (self.v.interval_eval(&b).lo.max(centered), vm)
    }
}

/// `V = x'Qx + g'x + k` when `V` has degree at most two and `Q` is PSD.
fn convex_quadratic(v: &Polynomial, n: usize) -> Option<(DMatrix<f64>, DVector<f64>, f64)> {
    if v.degree() > 2 {
        return None;
    }
    let (mut q, mut g, mut k) = (DMatrix::zeros(n, n), DVector::zeros(n), 0.0);
    for (m, c) in v.terms() {
        let vars: Vec<usize> = m.vars().collect();
        match (m.degree(), vars.as_slice()) {
            (0, _) => k += c,
            (1, [i]) => g[*i] += c,
            (2, [i]) => q[(*i, *i)] += c,
            (2, [i, j]) => {
                q[(*i, *j)] += 0.5 * c;
                q[(*j, *i)] += 0.5 * c;
            }
            _ => return None,
        }
    }
    let min_eig = q.clone().symmetric_eigen().eigenvalues.min();
    (min_eig >= 0.0).then_some((q, g, k))
}

/// Certified minimum of a convex quadratic over a box: projected coordinate
/// descent, then the linearization bound `f(x) + min_y grad f(x).(y - x)`.
fn convex_box_min(q: &DMatrix<f64>, g: &DVector<f64>, k: f64, lower: &[f64], upper: &[f64]) -> f64 {
    let n = lower.len();
    let mut x = DVector::from_fn(n, |i, _| 0.0_f64.clamp(lower[i], upper[i]));
    // r = 2Qx + g is the gradient
    let mut r = 2.0 * q * &x + g;
    let bound = |x: &DVector<f64>, r: &DVector<f64>| {
        let f = x.dot(&(q * x)) + g.dot(x) + k;
        let lin: f64 = (0..n).map(|i| if r[i] >= 0.0 { r[i] * (lower[i] - x[i]) } else { r[i] * (upper[i] - x[i]) }).sum();
        (f + lin, f)
    };
    for _ in 0..2000 {
        for i in 0..n {
            let qii = q[(i, i)];
            let target = if qii > 0.0 {
                (x[i] - r[i] / (2.0 * qii)).clamp(lower[i], upper[i])
            } else if r[i] > 0.0 {
                lower[i]
            } else {
                upper[i]
            };
            let d = target - x[i];
            if d != 0.0 {
                x[i] = target;
                r.axpy(2.0 * d, &q.column(i), 1.0);
            }
        }
        let (lb, f) = bound(&x, &r);
        if f - lb <= 1e-10 * (1.0 + f.abs()) {
            break;
        }
    }
    // recompute the gradient from scratch so drift cannot inflate the bound
    let r = 2.0 * q * &x + g;
    bound(&x, &r).0
}

/// Certified lower bound on `min V` over the boundary of the box. Convex
/// quadratics are minimized face by face; anything else goes through a
/// best-first subdivision of the faces.
pub fn sublevel_threshold(v: &Polynomial, domain: &BoxDomain) -> Result<f64> {
    let n = domain.dim();
    let v = &v.clone().with_nvars(n);
    if let Some((q, g, k)) = convex_quadratic(v, n) {
        let mut best = f64::INFINITY;
        for i in 0..n {
            for s in [domain.lower[i], domain.upper[i]] {
                let (mut lo, mut hi) = (domain.lower.clone(), domain.upper.clone());
                lo[i] = s;
                hi[i] = s;
                best = best.min(convex_box_min(&q, &g, k, &lo, &hi));
            }
        }
        if best > 0.0 {
            return Ok(best);
        }
        return Err(Error::Numerical(format!("no positive lower bound for V on the boundary ({best:.3e})")));
    }
    let bounder = Bounder { v, grad: (0..n).map(|i| v.partial(i)).collect() };
    let mut heap = BinaryHeap::new();
    let mut best_upper = f64::INFINITY;
    let mut seq = 0;
    for i in 0..n {
        let sides: &[f64] = if domain.lower[i] == domain.upper[i] { &[domain.lower[i]][..] } else { &[domain.lower[i], domain.upper[i]][..] };
        for &s in sides {
            let (mut lo, mut hi) = (domain.lower.clone(), domain.upper.clone());
            lo[i] = s;
            hi[i] = s;
            let (lb, vm) = bounder.lower_bound(&lo, &hi);
            best_upper = best_upper.min(vm);
            heap.push(Cell { lb, lower: lo, upper: hi, seq });
            seq += 1;
        }
    }
    let mut processed = 0;
    while let Some(cell) = heap.pop() {
        let gap_ok = cell.lb > 0.0 && best_upper - cell.lb <= REL_GAP * best_upper.abs();
        if gap_ok || processed >= BOX_BUDGET {
            if cell.lb > 0.0 {
                return Ok(cell.lb);
            }
            return Err(Error::Numerical(format!(
                "no positive lower bound for V on the boundary (best bound {:.3e}, sampled minimum {:.3e})",
                cell.lb, best_upper
            )));
        }
        if best_upper <= 0.0 {
            return Err(Error::Numerical(format!("V is nonpositive on the boundary ({best_upper:.3e})")));
        }
        processed += 1;
        let (k, _) = (0..n)
            .map(|i| (i, cell.upper[i] - cell.lower[i]))
            .fold((0, f64::NEG_INFINITY), |acc, (i, w)| if w > acc.1 { (i, w) } else { acc });
        let split = 0.5 * (cell.lower[k] + cell.upper[k]);
        for half in 0..2 {
            let (mut lo, mut hi) = (cell.lower.clone(), cell.upper.clone());
            if half == 0 {
                hi[k] = split;
            } else {
                lo[k] = split;
            }
            let (lb, vm) = bounder.lower_bound(&lo, &hi);
            best_upper = best_upper.min(vm);
            heap.push(Cell { lb: lb.max(cell.lb), lower: lo, upper: hi, seq });
            seq += 1;
        }
    }
    Err(Error::Numerical("boundary minimization ran out of cells".into()))
}
