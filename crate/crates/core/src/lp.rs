//! Dense two-phase tableau simplex for small bounded LPs.

/// `maximize c.x  s.t.  a x <= b,  lower <= x <= upper` (lower bounds finite).
#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

const EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;
/// Degenerate pivots tolerated under the Dantzig rule before switching to Bland.
const STALL_LIMIT: usize = 50;

struct Tableau {
    rows: usize,
    width: usize,
    t: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    d: Vec<f64>,
    z: f64,
    blocked: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.t[r * w + j];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        self.rhs[r] /= p;
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        let prhs = self.rhs[r];
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + j];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                self.rhs[i] -= f * prhs;
                if self.rhs[i].abs() < 1e-13 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, pv) in self.d.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.z += f * prhs;
        }
        self.basis[r] = j;
        self.pivots += 1;
    }

    /// Runs primal simplex on the current objective row.
    fn optimize(&mut self) -> LpStatus {
        let mut stall = 0;
        loop {
            if self.pivots >= MAX_PIVOTS {
                return LpStatus::IterationLimit;
            }
            let bland = stall > STALL_LIMIT;
            let mut enter = None;
            let mut best = EPS;
            for j in 0..self.width {
                if self.blocked[j] || self.d[j] <= EPS {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if self.d[j] > best {
                    best = self.d[j];
                    enter = Some(j);
                }
            }
            let Some(j) = enter else { return LpStatus::Optimal };
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.at(i, j);
                if a > EPS {
                    let r = self.rhs[i].max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => r < ratio - 1e-12 || (r <= ratio + 1e-12 && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        ratio = r;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else { return LpStatus::Unbounded };
            stall = if ratio < 1e-12 { stall + 1 } else { 0 };
            self.pivot(r, j);
        }
    }
}

pub fn solve(p: &LpProblem) -> LpSolution {
    let n = p.c.len();
    assert_eq!(p.lower.len(), n, "lower bound length");
    assert_eq!(p.upper.len(), n, "upper bound length");
    assert!(p.lower.iter().all(|l| l.is_finite()), "lower bounds must be finite");
    let fail = |status| LpSolution { status, x: p.lower.clone(), objective: f64::NAN, pivots: 0 };
    if p.lower.iter().zip(&p.upper).any(|(l, u)| l > u) {
        return fail(LpStatus::Infeasible);
    }

    // shift x = lower + x', x' >= 0
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::with_capacity(p.a.len() + n);
    for (ai, &bi) in p.a.iter().zip(&p.b) {
        let shift: f64 = ai.iter().zip(&p.lower).map(|(a, l)| a * l).sum();
        let coeffs: Vec<(usize, f64)> = ai.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(j, &a)| (j, a)).collect();
        rows.push((coeffs, bi - shift));
    }
    for j in 0..n {
        if p.upper[j].is_finite() {
            rows.push((vec![(j, 1.0)], p.upper[j] - p.lower[j]));
        }
    }
    let m = rows.len();
    let negative: Vec<usize> = (0..m).filter(|&i| rows[i].1 < 0.0).collect();
    let width = n + m + negative.len();
    let mut tab = Tableau {
        rows: m,
        width,
        t: vec![0.0; m * width],
        rhs: vec![0.0; m],
        basis: vec![0; m],
        d: vec![0.0; width],
        z: 0.0,
        blocked: vec![false; width],
        pivots: 0,
    };
    let mut art = 0;
    for (i, (coeffs, rhs)) in rows.iter().enumerate() {
        let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
        for &(j, a) in coeffs {
            tab.t[i * width + j] = sign * a;
        }
        tab.t[i * width + n + i] = sign;
        tab.rhs[i] = sign * rhs;
        if sign < 0.0 {
            let col = n + m + art;
            tab.t[i * width + col] = 1.0;
            tab.basis[i] = col;
            art += 1;
        } else {
            tab.basis[i] = n + i;
        }
    }

    if !negative.is_empty() {
        // phase 1: maximize -sum(artificials)
        for &i in &negative {
            for j in 0..n + m {
                tab.d[j] += tab.t[i * width + j];
            }
            tab.z -= tab.rhs[i];
        }
        let status = tab.optimize();
        if status == LpStatus::IterationLimit {
            return fail(status);
        }
        let scale = 1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
        if tab.z < -1e-8 * scale {
            return LpSolution { status: LpStatus::Infeasible, x: p.lower.clone(), objective: f64::NAN, pivots: tab.pivots };
        }
        for j in n + m..width {
            tab.blocked[j] = true;
        }
        for i in 0..m {
            if tab.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| tab.at(i, j).abs() > 1e-9) {
                    tab.pivot(i, j);
                }
            }
        }
    }

    // phase 2 objective row
    tab.d.iter_mut().for_each(|v| *v = 0.0);
    tab.d[..n].copy_from_slice(&p.c);
    tab.z = p.c.iter().zip(&p.lower).map(|(c, l)| c * l).sum();
    for i in 0..m {
        let bj = tab.basis[i];
        if bj < n && p.c[bj] != 0.0 {
            let cb = p.c[bj];
            for j in 0..width {
                tab.d[j] -= cb * tab.t[i * width + j];
            }
            tab.z += cb * tab.rhs[i];
        }
    }
    let status = tab.optimize();
    let mut x = p.lower.clone();
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] += tab.rhs[i];
        }
    }
    for (xj, &u) in x.iter_mut().zip(&p.upper) {
        *xj = xj.min(u);
    }
    let objective = p.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpSolution { status, x, objective, pivots: tab.pivots }
}

/// Whether `point` lies in the convex hull of `vertices`.
pub fn in_convex_hull(point: &[f64], vertices: &[Vec<f64>]) -> bool {
    let k = vertices.len();
    if k == 0 {
        return false;
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut push_eq = |row: Vec<f64>, rhs: f64| {
        a.push(row.clone());
        b.push(rhs + 1e-9);
        a.push(row.iter().map(|v| -v).collect());
        b.push(-rhs + 1e-9);
    };
    push_eq(vec![1.0; k], 1.0);
    for (d, &pd) in point.iter().enumerate() {
        push_eq(vertices.iter().map(|v| v[d]).collect(), pd);
    }
    let lp = LpProblem { c: vec![0.0; k], a, b, lower: vec![0.0; k], upper: vec![1.0; k] };
    solve(&lp).status == LpStatus::Optimal
}
