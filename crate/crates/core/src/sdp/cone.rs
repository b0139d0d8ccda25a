//! Primal-dual interior point method for
//! `minimize c'x  s.t.  G x + s = h,  A x = b,  s in R+^l x S+^n1 x ...`
//! on the homogeneous self-dual embedding, with Nesterov-Todd scaling and a
//! Mehrotra predictor-corrector step.

use nalgebra::{DMatrix, DVector};

/// One semidefinite block of `G x + s = h`: `G_blk(x) = sum_k x_k S_k`.
#[derive(Clone, Debug)]
pub struct PsdBlock {
    pub dim: usize,
    /// Entries `(i, j, v)` with `i <= j` of the symmetric `S_k`, one list per variable.
    pub coeffs: Vec<Vec<(usize, usize, f64)>>,
    pub h: DMatrix<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct ConeProgram {
    pub c: Vec<f64>,
    /// Sparse rows of the nonnegative-orthant part of `G`.
    pub lp_g: Vec<Vec<(usize, f64)>>,
    pub lp_h: Vec<f64>,
    pub psd: Vec<PsdBlock>,
    pub a: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct ConeTolerances {
    pub feastol: f64,
    pub abstol: f64,
    pub reltol: f64,
    pub max_iters: usize,
}

impl Default for ConeTolerances {
    fn default() -> Self {
        Self { feastol: 1e-8, abstol: 1e-8, reltol: 1e-7, max_iters: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
    NumericalFailure,
}

/// Element of the cone space: orthant part plus one symmetric matrix per block.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeVec {
    pub lp: DVector<f64>,
    pub psd: Vec<DMatrix<f64>>,
}

impl ConeVec {
    fn zeros(l: usize, dims: &[usize]) -> Self {
        Self { lp: DVector::zeros(l), psd: dims.iter().map(|&n| DMatrix::zeros(n, n)).collect() }
    }

    fn identity(l: usize, dims: &[usize]) -> Self {
        Self { lp: DVector::from_element(l, 1.0), psd: dims.iter().map(|&n| DMatrix::identity(n, n)).collect() }
    }

    pub fn dot(&self, o: &ConeVec) -> f64 {
        self.lp.dot(&o.lp) + self.psd.iter().zip(&o.psd).map(|(a, b)| a.dot(b)).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, a: f64, o: &ConeVec) {
        self.lp.axpy(a, &o.lp, 1.0);
        for (m, n) in self.psd.iter_mut().zip(&o.psd) {
            *m += n * a;
        }
    }

    fn scaled(&self, a: f64) -> ConeVec {
        ConeVec { lp: &self.lp * a, psd: self.psd.iter().map(|m| m * a).collect() }
    }

    fn sub(&self, o: &ConeVec) -> ConeVec {
        let mut r = self.clone();
        r.axpy(-1.0, o);
        r
    }

    /// Smallest eigenvalue over all blocks (orthant entries count as eigenvalues).
    fn min_eig(&self) -> f64 {
        let mut m = self.lp.iter().copied().fold(f64::INFINITY, f64::min);
        for b in &self.psd {
            if b.nrows() > 0 {
                m = m.min(b.clone().symmetric_eigen().eigenvalues.min());
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct ConeSolution {
    pub status: ConeStatus,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub s: ConeVec,
    pub z: ConeVec,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub pres: f64,
    pub dres: f64,
    pub iterations: usize,
}

struct BlockScaling {
    r: DMatrix<f64>,
    rinv: DMatrix<f64>,
    /// `R^{-T} R^{-1}`, so that `(W'W)^{-1}(u) = T u T`.
    t: DMatrix<f64>,
    lam: DVector<f64>,
}

struct Scaling {
    d: DVector<f64>,
    lam_lp: DVector<f64>,
    blocks: Vec<BlockScaling>,
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

impl Scaling {
    fn identity(l: usize, dims: &[usize]) -> Self {
        Self {
            d: DVector::from_element(l, 1.0),
            lam_lp: DVector::from_element(l, 1.0),
            blocks: dims
                .iter()
                .map(|&n| BlockScaling {
                    r: DMatrix::identity(n, n),
                    rinv: DMatrix::identity(n, n),
                    t: DMatrix::identity(n, n),
                    lam: DVector::from_element(n, 1.0),
                })
                .collect(),
        }
    }

    fn compute(s: &ConeVec, z: &ConeVec) -> Option<Self> {
        if s.lp.iter().chain(z.lp.iter()).any(|&v| !(v > 0.0)) {
            return None;
        }
        let d = s.lp.zip_map(&z.lp, |a, b| (a / b).sqrt());
        let lam_lp = s.lp.zip_map(&z.lp, |a, b| (a * b).sqrt());
        let mut blocks = Vec::with_capacity(s.psd.len());
        for (sm, zm) in s.psd.iter().zip(&z.psd) {
            let ls = sm.clone().cholesky()?.l();
            let lz = zm.clone().cholesky()?.l();
            let svd = (lz.transpose() * &ls).svd(true, true);
            let u = svd.u?;
            let vt = svd.v_t?;
            let lam = svd.singular_values;
            if lam.iter().any(|&v| !(v > 0.0)) {
                return None;
            }
            let isq = lam.map(|v| 1.0 / v.sqrt());
            let r = &ls * vt.transpose() * DMatrix::from_diagonal(&isq);
            let rinv = DMatrix::from_diagonal(&isq) * u.transpose() * lz.transpose();
            let mut t = rinv.transpose() * &rinv;
            symmetrize(&mut t);
            blocks.push(BlockScaling { r, rinv, t, lam });
        }
        Some(Self { d, lam_lp, blocks })
    }

    /// `W u`.
    fn w(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: u.lp.component_mul(&self.d),
            psd: self.blocks.iter().zip(&u.psd).map(|(b, m)| b.r.transpose() * m * &b.r).collect(),
        }
    }

    /// `W^{-T} u`.
    fn w_inv_t(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: u.lp.component_div(&self.d),
            psd: self.blocks.iter().zip(&u.psd).map(|(b, m)| &b.rinv * m * b.rinv.transpose()).collect(),
        }
    }

    /// `W^T u`.
    fn wt(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: u.lp.component_mul(&self.d),
            psd: self.blocks.iter().zip(&u.psd).map(|(b, m)| &b.r * m * b.r.transpose()).collect(),
        }
    }

    /// `(W^T W)^{-1} u`.
    fn tinv(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: u.lp.zip_map(&self.d, |a, d| a / (d * d)),
            psd: self.blocks.iter().zip(&u.psd).map(|(b, m)| &b.t * m * &b.t).collect(),
        }
    }

    /// Solves `lambda o u = v` for `u`.
    fn lam_diamond(&self, v: &ConeVec) -> ConeVec {
        ConeVec {
            lp: v.lp.component_div(&self.lam_lp),
            psd: self
                .blocks
                .iter()
                .zip(&v.psd)
                .map(|(b, m)| DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| 2.0 * m[(i, j)] / (b.lam[i] + b.lam[j])))
                .collect(),
        }
    }

    fn lam_vec(&self) -> ConeVec {
        ConeVec { lp: self.lam_lp.clone(), psd: self.blocks.iter().map(|b| DMatrix::from_diagonal(&b.lam)).collect() }
    }

    /// Largest step keeping `lambda + a * v` in the cone (`v` already scaled).
    fn max_step(&self, v: &ConeVec) -> f64 {
        let mut worst: f64 = 0.0;
        for (l, dv) in self.lam_lp.iter().zip(v.lp.iter()) {
            worst = worst.max(-dv / l);
        }
        for (b, m) in self.blocks.iter().zip(&v.psd) {
            if m.nrows() == 0 {
                continue;
            }
            let mut sc = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / (b.lam[i] * b.lam[j]).sqrt());
            symmetrize(&mut sc);
            worst = worst.max(-sc.symmetric_eigen().eigenvalues.min());
        }
        if worst <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / worst
        }
    }
}

fn circ(a: &ConeVec, b: &ConeVec) -> ConeVec {
    ConeVec {
        lp: a.lp.component_mul(&b.lp),
        psd: a.psd.iter().zip(&b.psd).map(|(x, y)| (x * y + y * x) * 0.5).collect(),
    }
}

struct Ops<'a> {
    p: &'a ConeProgram,
    n: usize,
    l: usize,
}

impl<'a> Ops<'a> {
    fn g(&self, x: &DVector<f64>) -> ConeVec {
        let lp = DVector::from_iterator(self.l, self.p.lp_g.iter().map(|r| r.iter().map(|&(k, v)| v * x[k]).sum::<f64>()));
        let psd = self
            .p
            .psd
            .iter()
            .map(|blk| {
                let mut m = DMatrix::zeros(blk.dim, blk.dim);
                for (k, entries) in blk.coeffs.iter().enumerate() {
                    let xk = x[k];
                    if xk == 0.0 {
                        continue;
                    }
                    for &(i, j, v) in entries {
                        m[(i, j)] += v * xk;
                        if i != j {
                            m[(j, i)] += v * xk;
                        }
                    }
                }
                m
            })
            .collect();
        ConeVec { lp, psd }
    }

    fn gt(&self, u: &ConeVec) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (r, &ur) in self.p.lp_g.iter().zip(u.lp.iter()) {
            for &(k, v) in r {
                out[k] += v * ur;
            }
        }
        for (blk, m) in self.p.psd.iter().zip(&u.psd) {
            for (k, entries) in blk.coeffs.iter().enumerate() {
                let mut acc = 0.0;
                for &(i, j, v) in entries {
                    acc += if i == j { v * m[(i, j)] } else { v * (m[(i, j)] + m[(j, i)]) };
                }
                out[k] += acc;
            }
        }
        out
    }

    fn a(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.p.a.len(), self.p.a.iter().map(|r| r.iter().map(|&(k, v)| v * x[k]).sum::<f64>()))
    }

    fn at(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (r, &yr) in self.p.a.iter().zip(y.iter()) {
            for &(k, v) in r {
                out[k] += v * yr;
            }
        }
        out
    }

    fn h(&self) -> ConeVec {
        ConeVec { lp: DVector::from_vec(self.p.lp_h.clone()), psd: self.p.psd.iter().map(|b| b.h.clone()).collect() }
    }

    /// `G' (W'W)^{-1} G` assembled from the sparse structure of `G`.
    fn reduced_hessian(&self, w: &Scaling) -> DMatrix<f64> {
        let n = self.n;
        let mut hm = DMatrix::zeros(n, n);
        for (r, &d) in self.p.lp_g.iter().zip(w.d.iter()) {
            let inv = 1.0 / (d * d);
            for &(a, va) in r {
                for &(b, vb) in r {
                    hm[(a, b)] += inv * va * vb;
                }
            }
        }
        for (blk, sc) in self.p.psd.iter().zip(&w.blocks) {
            let t = &sc.t;
            let dim = blk.dim;
            let mut tst = DMatrix::zeros(dim, dim);
            for (b, eb) in blk.coeffs.iter().enumerate() {
                if eb.is_empty() {
                    continue;
                }
                tst.fill(0.0);
                for &(k, l, v) in eb {
                    // T (v E_kl + v E_lk) T
                    for i in 0..dim {
                        let tik = t[(i, k)] * v;
                        let til = t[(i, l)] * v;
                        for j in 0..dim {
                            if k == l {
                                tst[(i, j)] += tik * t[(l, j)];
                            } else {
                                tst[(i, j)] += tik * t[(l, j)] + til * t[(k, j)];
                            }
                        }
                    }
                }
                for (a, ea) in blk.coeffs.iter().enumerate().skip(b) {
                    let mut acc = 0.0;
                    for &(i, j, v) in ea {
                        acc += if i == j { v * tst[(i, j)] } else { 2.0 * v * tst[(i, j)] };
                    }
                    hm[(a, b)] += acc;
                    if a != b {
                        hm[(b, a)] += acc;
                    }
                }
            }
        }
        hm
    }
}

/// Factorized KKT system for one scaling.
struct Kkt<'a, 'b> {
    ops: &'b Ops<'a>,
    w: &'b Scaling,
    mat: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl<'a, 'b> Kkt<'a, 'b> {
    fn new(ops: &'b Ops<'a>, w: &'b Scaling) -> Option<Self> {
        let n = ops.n;
        let p = ops.p.a.len();
        let hm = ops.reduced_hessian(w);
        let mut mat = DMatrix::zeros(n + p, n + p);
        mat.view_mut((0, 0), (n, n)).copy_from(&hm);
        for (r, row) in ops.p.a.iter().enumerate() {
            for &(k, v) in row {
                mat[(n + r, k)] += v;
                mat[(k, n + r)] += v;
            }
        }
        let scale = (0..n).map(|i| mat[(i, i)].abs()).fold(1.0, f64::max);
        let mut reg = mat.clone();
        for i in 0..n {
            reg[(i, i)] += 1e-13 * scale;
        }
        for i in n..n + p {
            reg[(i, i)] -= 1e-13 * scale;
        }
        let lu = reg.lu();
        if !lu.is_invertible() {
            return None;
        }
        Some(Self { ops, w, mat, lu })
    }

    fn solve_xy(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let mut sol = self.lu.solve(rhs)?;
        let resid = rhs - &self.mat * &sol;
        if let Some(corr) = self.lu.solve(&resid) {
            sol += corr;
        }
        if sol.iter().all(|v| v.is_finite()) {
            Some(sol)
        } else {
            None
        }
    }

    /// Solves `[0 A' G'; A 0 0; G 0 -W'W] [x; y; z] = [r1; r2; r3]`.
    fn solve(&self, r1: &DVector<f64>, r2: &DVector<f64>, r3: &ConeVec) -> Option<(DVector<f64>, DVector<f64>, ConeVec)> {
        let n = self.ops.n;
        let p = self.ops.p.a.len();
        let top = r1 + self.ops.gt(&self.w.tinv(r3));
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&top);
        rhs.rows_mut(n, p).copy_from(r2);
        let sol = self.solve_xy(&rhs)?;
        let x = sol.rows(0, n).into_owned();
        let y = sol.rows(n, p).into_owned();
        let z = self.w.tinv(&self.ops.g(&x).sub(r3));
        Some((x, y, z))
    }
}

pub fn solve_cone(p: &ConeProgram, tol: &ConeTolerances) -> ConeSolution {
    let n = p.c.len();
    let l = p.lp_g.len();
    let dims: Vec<usize> = p.psd.iter().map(|b| b.dim).collect();
    assert_eq!(p.lp_h.len(), l);
    assert_eq!(p.b.len(), p.a.len());
    let ops = Ops { p, n, l };
    let c = DVector::from_vec(p.c.clone());
    let b = DVector::from_vec(p.b.clone());
    let h = ops.h();
    let degree = (l + dims.iter().sum::<usize>()) as f64;

    let failure = |status, it| ConeSolution {
        status,
        x: DVector::zeros(n),
        y: DVector::zeros(p.a.len()),
        s: ConeVec::zeros(l, &dims),
        z: ConeVec::zeros(l, &dims),
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        pres: f64::NAN,
        dres: f64::NAN,
        iterations: it,
    };

    // least-squares starting point
    let w0 = Scaling::identity(l, &dims);
    let Some(k0) = Kkt::new(&ops, &w0) else { return failure(ConeStatus::NumericalFailure, 0) };
    let zero_cone = ConeVec::zeros(l, &dims);
    let Some((mut x, _, zx)) = k0.solve(&DVector::zeros(n), &b, &h) else { return failure(ConeStatus::NumericalFailure, 0) };
    let mut s = zx.scaled(-1.0);
    let Some((_, mut y, mut z)) = k0.solve(&(-&c), &DVector::zeros(p.a.len()), &zero_cone) else {
        return failure(ConeStatus::NumericalFailure, 0);
    };
    let e = ConeVec::identity(l, &dims);
    let ts = -s.min_eig();
    if ts >= -1e-8 * s.norm().max(1.0) {
        s.axpy(1.0 + ts, &e);
    }
    let tz = -z.min_eig();
    if tz >= -1e-8 * z.norm().max(1.0) {
        z.axpy(1.0 + tz, &e);
    }
    let (mut tau, mut kappa) = (1.0_f64, 1.0_f64);

    let resx0 = c.norm().max(1.0);
    let resy0 = b.norm().max(1.0);
    let resz0 = h.norm().max(1.0);

    let mut last = None;
    for it in 0..=tol.max_iters {
        let hrx = -(ops.at(&y) + ops.gt(&z));
        let rx = &hrx - &c * tau;
        let hry = ops.a(&x);
        let ry = &hry - &b * tau;
        let mut hrz = ops.g(&x);
        hrz.axpy(1.0, &s);
        let rz = hrz.sub(&h.scaled(tau));
        let cx = c.dot(&x);
        let by = b.dot(&y);
        let hz = h.dot(&z);
        let rt = kappa + cx + by + hz;

        let gap = s.dot(&z) / (tau * tau);
        let pcost = cx / tau;
        let dcost = -(by + hz) / tau;
        let relgap = if pcost < 0.0 {
            Some(gap / -pcost)
        } else if dcost > 0.0 {
            Some(gap / dcost)
        } else {
            None
        };
        let pres = (ry.norm() / tau / resy0).max(rz.norm() / tau / resz0);
        let dres = rx.norm() / tau / resx0;
        let pinfres = if hz + by < 0.0 { Some(hrx.norm() / resx0 / (-hz - by)) } else { None };
        let dinfres = if cx < 0.0 { Some((hry.norm() / resy0).max(hrz.norm() / resz0) / (-cx)) } else { None };

        let snapshot = |status| ConeSolution {
            status,
            x: &x / tau,
            y: &y / tau,
            s: s.scaled(1.0 / tau),
            z: z.scaled(1.0 / tau),
            primal_objective: pcost,
            dual_objective: dcost,
            gap,
            pres,
            dres,
            iterations: it,
        };

        if pres <= tol.feastol && dres <= tol.feastol && (gap <= tol.abstol || relgap.is_some_and(|r| r <= tol.reltol)) {
            return snapshot(ConeStatus::Optimal);
        }
        if pinfres.is_some_and(|r| r <= tol.feastol) {
            let sc = 1.0 / (-hz - by);
            let mut sol = snapshot(ConeStatus::PrimalInfeasible);
            sol.y = &y * sc;
            sol.z = z.scaled(sc);
            return sol;
        }
        if dinfres.is_some_and(|r| r <= tol.feastol) {
            let sc = 1.0 / -cx;
            let mut sol = snapshot(ConeStatus::DualInfeasible);
            sol.x = &x * sc;
            sol.s = s.scaled(sc);
            return sol;
        }
        if it == tol.max_iters {
            return snapshot(ConeStatus::MaxIter);
        }
        last = Some(snapshot(ConeStatus::NumericalFailure));
        log::trace!("it {it} pcost {pcost:.6e} dcost {dcost:.6e} gap {gap:.2e} pres {pres:.2e} dres {dres:.2e} tau {tau:.2e} kappa {kappa:.2e}");

        let Some(w) = Scaling::compute(&s, &z) else { break };
        let Some(kkt) = Kkt::new(&ops, &w) else { break };
        let mu = (s.dot(&z) + tau * kappa) / (degree + 1.0);
        let lam = w.lam_vec();
        let lam_sq = circ(&lam, &lam);

        let Some((x1, y1, z1)) = kkt.solve(&(-&c), &b, &h) else { break };
        let q1 = c.dot(&x1) + b.dot(&y1) + h.dot(&z1);

        // returns (dx, dy, dz, dtau, ds, dkappa)
        let direction = |eta: f64, rc: &ConeVec, rtk: f64| {
            let dl = w.lam_diamond(rc);
            let mut r3 = rz.scaled(-eta);
            r3.axpy(-1.0, &w.wt(&dl));
            let (x2, y2, z2) = kkt.solve(&(&rx * eta), &(-(&ry * eta)), &r3)?;
            let q2 = c.dot(&x2) + b.dot(&y2) + h.dot(&z2);
            let dtau = (-eta * rt - rtk / tau - q2) / (q1 - kappa / tau);
            let dx = x2 + &x1 * dtau;
            let dy = y2 + &y1 * dtau;
            let mut dz = z2;
            dz.axpy(dtau, &z1);
            let mut ds = w.wt(&dl);
            ds.axpy(-1.0, &w.wt(&w.w(&dz)));
            let dkappa = (rtk - kappa * dtau) / tau;
            if !dtau.is_finite() || !dkappa.is_finite() {
                return None;
            }
            Some((dx, dy, dz, dtau, ds, dkappa))
        };
        let step_len = |dz: &ConeVec, dtau: f64, ds: &ConeVec, dkappa: f64| {
            let mut a = w.max_step(&w.w_inv_t(ds)).min(w.max_step(&w.w(dz)));
            if dtau < 0.0 {
                a = a.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                a = a.min(-kappa / dkappa);
            }
            a
        };

        let rc_aff = lam_sq.scaled(-1.0);
        let Some((_, _, dza, dtaua, dsa, dkappaa)) = direction(1.0, &rc_aff, -tau * kappa) else { break };
        let alpha_aff = step_len(&dza, dtaua, &dsa, dkappaa).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3);

        let mut rc = lam_sq.scaled(-1.0);
        rc.axpy(-1.0, &circ(&w.w_inv_t(&dsa), &w.w(&dza)));
        rc.axpy(sigma * mu, &e);
        let rtk = -tau * kappa - dtaua * dkappaa + sigma * mu;
        let Some((dx, dy, dz, dtau, ds, dkappa)) = direction(1.0 - sigma, &rc, rtk) else { break };
        let alpha = (0.99 * step_len(&dz, dtau, &ds, dkappa)).min(1.0);

        x.axpy(alpha, &dx, 1.0);
        y.axpy(alpha, &dy, 1.0);
        z.axpy(alpha, &dz);
        s.axpy(alpha, &ds);
        for m in z.psd.iter_mut().chain(s.psd.iter_mut()) {
            symmetrize(m);
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;
        if !(tau > 0.0 && kappa > 0.0) {
            break;
        }
    }
    last.unwrap_or_else(|| failure(ConeStatus::NumericalFailure, 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min -x1 - x2  s.t. x1 + 2 x2 <= 4, 3 x1 + x2 <= 6, x >= 0  -> x = (1.6, 1.2), obj -2.8
        let p = ConeProgram {
            c: vec![-1.0, -1.0],
            lp_g: vec![vec![(0, 1.0), (1, 2.0)], vec![(0, 3.0), (1, 1.0)], vec![(0, -1.0)], vec![(1, -1.0)]],
            lp_h: vec![4.0, 6.0, 0.0, 0.0],
            ..Default::default()
        };
        let sol = solve_cone(&p, &ConeTolerances::default());
        assert_eq!(sol.status, ConeStatus::Optimal);
        assert!((sol.primal_objective + 2.8).abs() < 1e-6, "{}", sol.primal_objective);
        assert!((sol.x[0] - 1.6).abs() < 1e-5 && (sol.x[1] - 1.2).abs() < 1e-5);
    }

    #[test]
    fn lp_with_equality_and_infeasibility() {
        // min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0 -> 1
        let mut p = ConeProgram {
            c: vec![1.0, 2.0],
            lp_g: vec![vec![(0, -1.0)], vec![(1, -1.0)]],
            lp_h: vec![0.0, 0.0],
            a: vec![vec![(0, 1.0), (1, 1.0)]],
            b: vec![1.0],
            ..Default::default()
        };
        let sol = solve_cone(&p, &ConeTolerances::default());
        assert_eq!(sol.status, ConeStatus::Optimal);
        assert!((sol.primal_objective - 1.0).abs() < 1e-6);
        p.b = vec![-1.0];
        assert_eq!(solve_cone(&p, &ConeTolerances::default()).status, ConeStatus::PrimalInfeasible);
    }

    #[test]
    fn max_eigenvalue_as_sdp() {
        // min t s.t. t I - M >= 0: largest eigenvalue of M
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let coeffs = vec![vec![(0, 0, -1.0), (1, 1, -1.0), (2, 2, -1.0)]];
        let p = ConeProgram { c: vec![1.0], psd: vec![PsdBlock { dim: 3, coeffs, h: -m.clone() }], ..Default::default() };
        let sol = solve_cone(&p, &ConeTolerances::default());
        assert_eq!(sol.status, ConeStatus::Optimal);
        let lmax = 2.0 + 2f64.sqrt();
        assert!((sol.primal_objective - lmax).abs() < 1e-6, "{}", sol.primal_objective);
        assert!((sol.dual_objective - lmax).abs() < 1e-6);
    }
}
