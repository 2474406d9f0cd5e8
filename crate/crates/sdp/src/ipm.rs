//! Native primal-dual interior-point method for [`ConicProgram`]s.
//!
//! Homogeneous self-dual embedding with Nesterov–Todd scaling and a Mehrotra
//! predictor-corrector step. Equality rows are eliminated up front through an
//! SVD null-space basis, and the remaining inequality data are equilibrated
//! (Ruiz) before iterating. The reduced Newton system is solved through a QR
//! factorization of the scaled constraint matrix rather than normal equations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use std::time::Instant;

use crate::cone::Cone;
use crate::program::{ConicProgram, ConicSolution, SolveStatus, SolverSettings};
use crate::svec::{smat_sized, svec_len, svec_unchecked};
use crate::ConicSolver;

const STEP_FRACTION: f64 = 0.99;
const RUIZ_PASSES: usize = 15;
const KKT_REFINE: usize = 5;

#[derive(Debug, Clone, Copy, Default)]
pub struct IpmSolver;

impl ConicSolver for IpmSolver {
    fn id(&self) -> &str {
        "native-ipm"
    }

    fn solve(&self, program: &ConicProgram, settings: &SolverSettings) -> ConicSolution {
        solve(program, settings)
    }
}

#[derive(Debug, Clone, Copy)]
enum Block {
    Nonneg { start: usize, dim: usize },
    Psd { start: usize, side: usize },
}

enum Scaling {
    Nonneg { w: DVector<f64>, lam: DVector<f64> },
    Psd { r: DMatrix<f64>, rinv: DMatrix<f64>, lam: DVector<f64> },
}

#[derive(Clone, Copy)]
enum Op {
    W,
    WT,
    WInv,
    WInvT,
}

struct Cones {
    blocks: Vec<Block>,
    m: usize,
    degree: usize,
}

fn sym_eigvals(m: DMatrix<f64>) -> DVector<f64> {
    SymmetricEigen::new(m).eigenvalues
}

impl Cones {
    fn identity(&self) -> DVector<f64> {
        let mut e = DVector::zeros(self.m);
        for b in &self.blocks {
            match *b {
                Block::Nonneg { start, dim } => e.rows_mut(start, dim).fill(1.0),
                Block::Psd { start, side } => {
                    for i in 0..side {
                        e[start + svec_len(i + 1) - 1] = 1.0;
                    }
                }
            }
        }
        e
    }

    fn min_eig(&self, v: &DVector<f64>) -> f64 {
        let mut lo = f64::INFINITY;
        for b in &self.blocks {
            let here = match *b {
                Block::Nonneg { start, dim } => v.rows(start, dim).min(),
                Block::Psd { start, side } => {
                    sym_eigvals(smat_sized(v.rows(start, svec_len(side)).as_slice(), side)).min()
                }
            };
            lo = lo.min(here);
        }
        lo
    }

    fn scaling(&self, s: &DVector<f64>, z: &DVector<f64>) -> Option<Vec<Scaling>> {
        let mut out = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            match *b {
                Block::Nonneg { start, dim } => {
                    let (sb, zb) = (s.rows(start, dim), z.rows(start, dim));
                    if sb.min() <= 0.0 || zb.min() <= 0.0 {
                        return None;
                    }
                    let w = sb.zip_map(&zb, |a, b| (a / b).sqrt());
                    let lam = sb.zip_map(&zb, |a, b| (a * b).sqrt());
                    out.push(Scaling::Nonneg { w, lam });
                }
                Block::Psd { start, side } => {
                    let len = svec_len(side);
                    let sm = smat_sized(s.rows(start, len).as_slice(), side);
                    let zm = smat_sized(z.rows(start, len).as_slice(), side);
                    let l1 = sm.cholesky()?.l();
                    let l2 = zm.cholesky()?.l();
                    let svd = (l2.transpose() * &l1).svd(true, true);
                    let (u, vt) = (svd.u?, svd.v_t?);
                    let lam = svd.singular_values;
                    if lam.min() <= 0.0 || !lam.iter().all(|x| x.is_finite()) {
                        return None;
                    }
                    let isq = lam.map(|x| 1.0 / x.sqrt());
                    let d = DMatrix::from_diagonal(&isq);
                    let r = &l1 * vt.transpose() * &d;
                    let rinv = &d * u.transpose() * l2.transpose();
                    out.push(Scaling::Psd { r, rinv, lam });
                }
            }
        }
        Some(out)
    }

    fn lambda(&self, sc: &[Scaling]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (b, k) in self.blocks.iter().zip(sc) {
            match (*b, k) {
                (Block::Nonneg { start, dim }, Scaling::Nonneg { lam, .. }) => {
                    out.rows_mut(start, dim).copy_from(lam)
                }
                (Block::Psd { start, side }, Scaling::Psd { lam, .. }) => {
                    for i in 0..side {
                        out[start + svec_len(i + 1) - 1] = lam[i];
                    }
                }
                _ => unreachable!(),
            }
        }
        out
    }

    fn apply(&self, sc: &[Scaling], v: &DVector<f64>, op: Op) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (b, k) in self.blocks.iter().zip(sc) {
            match (*b, k) {
                (Block::Nonneg { start, dim }, Scaling::Nonneg { w, .. }) => {
                    let vb = v.rows(start, dim);
                    let res = match op {
                        Op::W | Op::WT => vb.component_mul(w),
                        Op::WInv | Op::WInvT => vb.component_div(w),
                    };
                    out.rows_mut(start, dim).copy_from(&res);
                }
                (Block::Psd { start, side }, Scaling::Psd { r, rinv, .. }) => {
                    let len = svec_len(side);
                    let x = smat_sized(v.rows(start, len).as_slice(), side);
                    let y = match op {
                        Op::W => r.transpose() * x * r,
                        Op::WT => r * x * r.transpose(),
                        Op::WInv => rinv.transpose() * x * rinv,
                        Op::WInvT => rinv * x * rinv.transpose(),
                    };
                    out.rows_mut(start, len).copy_from(&svec_unchecked(&y));
                }
                _ => unreachable!(),
            }
        }
        out
    }

    fn apply_cols(&self, sc: &[Scaling], g: &DMatrix<f64>, op: Op) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(g.nrows(), g.ncols());
        for j in 0..g.ncols() {
            let col = self.apply(sc, &g.column(j).into_owned(), op);
            out.set_column(j, &col);
        }
        out
    }

    fn circ(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for b in &self.blocks {
            match *b {
                Block::Nonneg { start, dim } => out
                    .rows_mut(start, dim)
                    .copy_from(&u.rows(start, dim).component_mul(&v.rows(start, dim))),
                Block::Psd { start, side } => {
                    let len = svec_len(side);
                    let a = smat_sized(u.rows(start, len).as_slice(), side);
                    let c = smat_sized(v.rows(start, len).as_slice(), side);
                    let p = (&a * &c + &c * &a) * 0.5;
                    out.rows_mut(start, len).copy_from(&svec_unchecked(&p));
                }
            }
        }
        out
    }

    /// Solves `λ ∘ x = d` for `x`.
    fn ldiv(&self, sc: &[Scaling], d: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (b, k) in self.blocks.iter().zip(sc) {
            match (*b, k) {
                (Block::Nonneg { start, dim }, Scaling::Nonneg { lam, .. }) => {
                    out.rows_mut(start, dim).copy_from(&d.rows(start, dim).component_div(lam))
                }
                (Block::Psd { start, side }, Scaling::Psd { lam, .. }) => {
                    let len = svec_len(side);
                    let mut x = smat_sized(d.rows(start, len).as_slice(), side);
                    for j in 0..side {
                        for i in 0..side {
                            x[(i, j)] *= 2.0 / (lam[i] + lam[j]);
                        }
                    }
                    out.rows_mut(start, len).copy_from(&svec_unchecked(&x));
                }
                _ => unreachable!(),
            }
        }
        out
    }

    /// Largest `α` with `λ + α·dir` in the cone (may be infinite).
    fn max_step(&self, sc: &[Scaling], dir: &DVector<f64>) -> f64 {
        let mut alpha = f64::INFINITY;
        for (b, k) in self.blocks.iter().zip(sc) {
            match (*b, k) {
                (Block::Nonneg { start, dim }, Scaling::Nonneg { lam, .. }) => {
                    for i in 0..dim {
                        let d = dir[start + i];
                        if d < 0.0 {
                            alpha = alpha.min(-lam[i] / d);
                        }
                    }
                }
                (Block::Psd { start, side }, Scaling::Psd { lam, .. }) => {
                    let mut x = smat_sized(dir.rows(start, svec_len(side)).as_slice(), side);
                    for j in 0..side {
                        for i in 0..side {
                            x[(i, j)] /= (lam[i] * lam[j]).sqrt();
                        }
                    }
                    let lo = sym_eigvals(x).min();
                    if lo < 0.0 {
                        alpha = alpha.min(-1.0 / lo);
                    }
                }
                _ => unreachable!(),
            }
        }
        alpha
    }
}

/// Factorization of the scaled constraint matrix `V = W⁻ᵀG`.
struct Kkt {
    v: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

impl Kkt {
    fn new(v: DMatrix<f64>) -> Option<Self> {
        let n = v.ncols();
        let qr = v.clone().qr();
        let (q, r) = (qr.q(), qr.r());
        let dmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let dmin = (0..n).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        let chol = if n == 0 || dmin > 1e-13 * dmax {
            None
        } else {
            let mut h = v.transpose() * &v;
            let reg = 1e-12 * h.diagonal().max().max(1e-300);
            for i in 0..n {
                h[(i, i)] += reg;
            }
            Some(h.cholesky()?)
        };
        Some(Self { v, q, r, chol })
    }

    /// Solves `VᵀV x = r1 + Vᵀ t`.
    fn solve_x(&self, r1: &DVector<f64>, t: &DVector<f64>) -> DVector<f64> {
        match &self.chol {
            None => {
                let rt = self.r.transpose();
                let a = rt.solve_lower_triangular(r1).unwrap_or_else(|| r1.clone());
                let rhs = a + self.q.transpose() * t;
                self.r.solve_upper_triangular(&rhs).unwrap_or(rhs)
            }
            Some(ch) => {
                let rhs = r1 + self.v.transpose() * t;
                let mut x = ch.solve(&rhs);
                for _ in 0..3 {
                    let res = &rhs - self.v.transpose() * (&self.v * &x);
                    x += ch.solve(&res);
                }
                x
            }
        }
    }
}

/// Solves `[0 Gᵀ; G −WᵀW][x; z] = [r1; r2]`, refining against the unfactored
/// system because `W` becomes very ill-conditioned near the optimum.
fn kkt_solve(
    cones: &Cones,
    sc: &[Scaling],
    kkt: &Kkt,
    g: &DMatrix<f64>,
    r1: &DVector<f64>,
    r2: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let once = |r1: &DVector<f64>, r2: &DVector<f64>| {
        let t = cones.apply(sc, r2, Op::WInvT);
        let x = kkt.solve_x(r1, &t);
        let z = cones.apply(sc, &(&kkt.v * &x - t), Op::WInv);
        (x, z)
    };
    let (mut x, mut z) = once(r1, r2);
    for _ in 0..KKT_REFINE {
        let e1 = r1 - g.transpose() * &z;
        let wz = cones.apply(sc, &cones.apply(sc, &z, Op::W), Op::WT);
        let e2 = r2 - g * &x + wz;
        let (dx, dz) = once(&e1, &e2);
        x += dx;
        z += dz;
    }
    (x, z)
}

struct Reduced {
    g: DMatrix<f64>,
    h: DVector<f64>,
    c: DVector<f64>,
    cones: Cones,
    xp: DVector<f64>,
    basis: DMatrix<f64>,
}

/// Removes the zero-cone rows by parameterizing their solution set.
fn reduce(p: &ConicProgram) -> Result<Reduced, ()> {
    let a = p.a.to_dense();
    let n = p.num_vars();
    let mut eq_rows = Vec::new();
    let mut blocks = Vec::new();
    let mut keep = Vec::new();
    let mut row = 0;
    for cone in &p.cones {
        match *cone {
            Cone::Zero(d) => eq_rows.extend(row..row + d),
            Cone::Nonneg(d) => {
                if d > 0 {
                    blocks.push(Block::Nonneg { start: keep.len(), dim: d });
                    keep.extend(row..row + d);
                }
            }
            Cone::Psd(s) => {
                if s > 0 {
                    blocks.push(Block::Psd { start: keep.len(), side: s });
                    keep.extend(row..row + svec_len(s));
                }
            }
        }
        row += cone.dim();
    }
    let (xp, basis) = if eq_rows.is_empty() {
        (DVector::zeros(n), DMatrix::identity(n, n))
    } else {
        let rows = eq_rows.len().max(n);
        let mut aeq = DMatrix::zeros(rows, n);
        let mut beq = DVector::zeros(rows);
        for (k, &r) in eq_rows.iter().enumerate() {
            aeq.set_row(k, &a.row(r));
            beq[k] = p.b[r];
        }
        let svd = aeq.clone().svd(true, true);
        let (u, vt) = (svd.u.ok_or(())?, svd.v_t.ok_or(())?);
        let sv = &svd.singular_values;
        let tol = 1e-11 * sv.max().max(f64::MIN_POSITIVE) * (rows as f64);
        let mut xp = DVector::zeros(n);
        let mut null = Vec::new();
        for k in 0..sv.len() {
            let vk = vt.row(k).transpose();
            if sv[k] > tol {
                xp += vk * (u.column(k).dot(&beq) / sv[k]);
            } else {
                null.push(vk);
            }
        }
        let resid = (&aeq * &xp - &beq).amax();
        if resid > 1e-9 * beq.amax().max(1.0) {
            return Err(());
        }
        let basis = if null.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&null)
        };
        (xp, basis)
    };
    let m = keep.len();
    let mut g = DMatrix::zeros(m, n);
    let mut h = DVector::zeros(m);
    for (k, &r) in keep.iter().enumerate() {
        g.set_row(k, &a.row(r));
        h[k] = p.b[r];
    }
    let h = h - &g * &xp;
    let g = g * &basis;
    let c = basis.transpose() * &p.c;
    let (g, c, basis) = drop_free_directions(g, c, basis);
    let degree = blocks
        .iter()
        .map(|b| match *b {
            Block::Nonneg { dim, .. } => dim,
            Block::Psd { side, .. } => side,
        })
        .sum();
    Ok(Reduced { g, h, c, cones: Cones { blocks, m, degree }, xp, basis })
}

/// Removes directions that no cone row sees. When the objective is (up to
/// roundoff) orthogonal to them they only leave an irreducible dual residual;
/// otherwise they are kept so the iteration can detect unboundedness.
fn drop_free_directions(g: DMatrix<f64>, c: DVector<f64>, basis: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let (m, nf) = g.shape();
    if nf == 0 || m == 0 {
        return (g, c, basis);
    }
    let mut padded = DMatrix::zeros(m.max(nf), nf);
    padded.view_mut((0, 0), (m, nf)).copy_from(&g);
    let svd = padded.svd(false, true);
    let Some(vt) = svd.v_t else { return (g, c, basis) };
    let sv = &svd.singular_values;
    let tol = 1e-12 * sv.max() * (m.max(nf) as f64);
    let range: Vec<_> = (0..sv.len()).filter(|&k| sv[k] > tol).map(|k| vt.row(k).transpose()).collect();
    if range.len() == nf {
        return (g, c, basis);
    }
    let vr = if range.is_empty() { DMatrix::zeros(nf, 0) } else { DMatrix::from_columns(&range) };
    let c_range = vr.transpose() * &c;
    let leak = (&c - &vr * &c_range).norm();
    if leak > 1e-7 * c.norm().max(f64::MIN_POSITIVE) {
        return (g, c, basis);
    }
    (g * &vr, c_range, basis * vr)
}

/// Ruiz equilibration: returns row scales `e` and column scales `d` with
/// `Ĝ = diag(e) G diag(d)`; rows of one PSD block share a scale.
fn equilibrate(g: &DMatrix<f64>, cones: &Cones) -> (DVector<f64>, DVector<f64>) {
    let (m, n) = g.shape();
    let mut e = DVector::from_element(m, 1.0);
    let mut d = DVector::from_element(n, 1.0);
    let mut work = g.clone();
    for _ in 0..RUIZ_PASSES {
        let mut re = DVector::from_element(m, 1.0);
        for b in &cones.blocks {
            match *b {
                Block::Nonneg { start, dim } => {
                    for i in start..start + dim {
                        let nrm = work.row(i).amax();
                        if nrm > 0.0 {
                            re[i] = 1.0 / nrm.sqrt();
                        }
                    }
                }
                Block::Psd { start, side } => {
                    let len = svec_len(side);
                    let nrm = work.rows(start, len).amax();
                    if nrm > 0.0 {
                        re.rows_mut(start, len).fill(1.0 / nrm.sqrt());
                    }
                }
            }
        }
        let mut ce = DVector::from_element(n, 1.0);
        for j in 0..n {
            let nrm = work.column(j).amax();
            if nrm > 0.0 {
                ce[j] = 1.0 / nrm.sqrt();
            }
        }
        for j in 0..n {
            for i in 0..m {
                work[(i, j)] *= re[i] * ce[j];
            }
        }
        e.component_mul_assign(&re);
        d.component_mul_assign(&ce);
    }
    (e, d)
}

/// Solves `p` to the tolerances in `settings`. Never panics on bad data;
/// the outcome is reported through [`ConicSolution::status`].
pub fn solve(p: &ConicProgram, settings: &SolverSettings) -> ConicSolution {
    let start = Instant::now();
    let n = p.num_vars();
    let finish = |status: SolveStatus, x: DVector<f64>, iterations: usize, gap: f64| {
        let x = if x.iter().all(|v| v.is_finite()) { x } else { DVector::zeros(n) };
        ConicSolution {
            status,
            objective: p.objective_at(&x),
            primal_residual: primal_residual(p, &x),
            x,
            solve_time: start.elapsed(),
            solver_id: "native-ipm".to_string(),
            iterations,
            gap,
        }
    };
    if p.validate().is_err() {
        return finish(SolveStatus::NumericalFailure, DVector::zeros(n), 0, f64::NAN);
    }
    let red = match reduce(p) {
        Ok(r) => r,
        Err(()) => return finish(SolveStatus::Infeasible, DVector::zeros(n), 0, f64::NAN),
    };
    let nf = red.basis.ncols();
    if nf == 0 || red.cones.m == 0 {
        // Nothing left to optimize or no cone rows: decide directly.
        if red.cones.m == 0 {
            let status = if red.c.amax() <= settings.tol_feas * p.c.amax().max(1.0) {
                SolveStatus::Optimal
            } else {
                SolveStatus::Unbounded
            };
            return finish(status, red.xp, 0, 0.0);
        }
        let slack_ok = red.cones.min_eig(&red.h) >= -settings.tol_feas * red.h.amax().max(1.0);
        let status = if slack_ok { SolveStatus::Optimal } else { SolveStatus::Infeasible };
        return finish(status, red.xp, 0, 0.0);
    }

    let (e, d) = equilibrate(&red.g, &red.cones);
    let cones = &red.cones;
    let mut g = red.g.clone();
    for j in 0..nf {
        for i in 0..cones.m {
            g[(i, j)] *= e[i] * d[j];
        }
    }
    let h0 = red.h.component_mul(&e);
    let c0 = red.c.component_mul(&d);
    let kb = 1.0 / h0.amax().max(1.0);
    let kc = 1.0 / c0.amax().max(1.0);
    let h = &h0 * kb;
    let c = &c0 * kc;
    let hnorm = h.norm().max(1.0);
    let cnorm = c.norm().max(1.0);

    let unscale = |x: &DVector<f64>| -> DVector<f64> {
        &red.xp + &red.basis * (x.component_mul(&d) / kb)
    };

    // Least-squares starting point.
    let ident: Vec<Scaling> = cones
        .blocks
        .iter()
        .map(|b| match *b {
            Block::Nonneg { dim, .. } => Scaling::Nonneg {
                w: DVector::from_element(dim, 1.0),
                lam: DVector::from_element(dim, 1.0),
            },
            Block::Psd { side, .. } => Scaling::Psd {
                r: DMatrix::identity(side, side),
                rinv: DMatrix::identity(side, side),
                lam: DVector::from_element(side, 1.0),
            },
        })
        .collect();
    let kkt0 = match Kkt::new(g.clone()) {
        Some(k) => k,
        None => return finish(SolveStatus::NumericalFailure, unscale(&DVector::zeros(nf)), 0, f64::NAN),
    };
    let (mut x, neg_s) = kkt_solve(cones, &ident, &kkt0, &g, &DVector::zeros(nf), &h);
    let mut s = -neg_s;
    let (_, mut z) = kkt_solve(cones, &ident, &kkt0, &g, &-&c, &DVector::zeros(cones.m));
    let unit = cones.identity();
    for v in [&mut s, &mut z] {
        let shift = -cones.min_eig(v);
        if shift >= -1e-8 {
            *v += &unit * (1.0 + shift);
        }
    }
    let (mut tau, mut kappa) = (1.0_f64, 1.0_f64);
    let nu = cones.degree as f64;

    let mut last_gap = f64::NAN;
    let mut stalls = 0;
    for iter in 0..=settings.max_iter {
        let rx = g.transpose() * &z + &c * tau;
        let rz = &s + &g * &x - &h * tau;
        let cx = c.dot(&x);
        let hz = h.dot(&z);
        let rtau = kappa + cx + hz;
        let sz = s.dot(&z);
        let mu = (sz + tau * kappa) / (nu + 1.0);

        // Residuals relative to the magnitudes of their terms.
        let gx = (&g * &x).norm() / tau;
        let gz = (g.transpose() * &z).norm() / tau;
        let pres = rz.norm() / tau / hnorm.max(gx).max(s.norm() / tau);
        let dres = rx.norm() / tau / cnorm.max(gz);
        let pcost = cx / tau;
        let dcost = -hz / tau;
        let gap = sz / (tau * tau);
        let relgap = gap.abs().min((pcost - dcost).abs().max(gap)) / pcost.abs().min(dcost.abs()).max(1.0);
        last_gap = relgap;
        if !(pres.is_finite() && dres.is_finite() && mu.is_finite()) {
            return finish(SolveStatus::NumericalFailure, unscale(&(&x / tau)), iter, relgap);
        }
        log::trace!(
            "ipm {iter:3} pcost {pcost:+.6e} dcost {dcost:+.6e} pres {pres:.2e} dres {dres:.2e} gap {relgap:.2e} tau {tau:.2e} kappa {kappa:.2e}"
        );
        if pres <= settings.tol_feas && dres <= settings.tol_feas && relgap <= settings.tol_gap {
            return finish(SolveStatus::Optimal, unscale(&(&x / tau)), iter, relgap);
        }
        if hz < 0.0 && (g.transpose() * &z).norm() <= settings.tol_feas * -hz {
            return finish(SolveStatus::Infeasible, unscale(&(&x / tau)), iter, relgap);
        }
        if cx < 0.0 && (&g * &x + &s).norm() <= settings.tol_feas * -cx {
            return finish(SolveStatus::Unbounded, unscale(&(&x / tau)), iter, relgap);
        }
        if iter == settings.max_iter {
            break;
        }

        let sc = match cones.scaling(&s, &z) {
            Some(sc) => sc,
            None => return finish(SolveStatus::NumericalFailure, unscale(&(&x / tau)), iter, relgap),
        };
        let lam = cones.lambda(&sc);
        let v = cones.apply_cols(&sc, &g, Op::WInvT);
        let kkt = match Kkt::new(v) {
            Some(k) => k,
            None => return finish(SolveStatus::NumericalFailure, unscale(&(&x / tau)), iter, relgap),
        };
        let (x1, z1) = kkt_solve(cones, &sc, &kkt, &g, &-&c, &h);
        let denom1 = c.dot(&x1) + h.dot(&z1) - kappa / tau;

        let direction = |eta: f64, ds: &DVector<f64>, dtau: f64| {
            let lds = cones.ldiv(&sc, ds);
            let r2 = -(&rz * eta) - cones.apply(&sc, &lds, Op::WT);
            let (x2, z2) = kkt_solve(cones, &sc, &kkt, &g, &-(&rx * eta), &r2);
            let dt = (-eta * rtau - dtau / tau - c.dot(&x2) - h.dot(&z2)) / denom1;
            let dx = x2 + &x1 * dt;
            let dz = z2 + &z1 * dt;
            let dz_t = cones.apply(&sc, &dz, Op::W);
            let ds_t = lds - &dz_t;
            let dk = (dtau - kappa * dt) / tau;
            (dx, dz, dz_t, ds_t, dt, dk)
        };
        let step_len = |dz_t: &DVector<f64>, ds_t: &DVector<f64>, dt: f64, dk: f64| {
            let mut a = cones.max_step(&sc, ds_t).min(cones.max_step(&sc, dz_t));
            if dt < 0.0 {
                a = a.min(-tau / dt);
            }
            if dk < 0.0 {
                a = a.min(-kappa / dk);
            }
            a
        };

        // Predictor.
        let ds_aff = -cones.circ(&lam, &lam);
        let (_, _, dz_a, ds_a, dt_a, dk_a) = direction(1.0, &ds_aff, -tau * kappa);
        let alpha_aff = step_len(&dz_a, &ds_a, dt_a, dk_a).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let ds_cc = &ds_aff - cones.circ(&ds_a, &dz_a) + &unit * (sigma * mu);
        let dtau_cc = -tau * kappa - dt_a * dk_a + sigma * mu;
        let (dx, dz, dz_t, ds_t, dt, dk) = direction(1.0 - sigma, &ds_cc, dtau_cc);
        let alpha = (STEP_FRACTION * step_len(&dz_t, &ds_t, dt, dk)).min(1.0);
        if !alpha.is_finite() || alpha < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                return finish(SolveStatus::NumericalFailure, unscale(&(&x / tau)), iter, relgap);
            }
        } else {
            stalls = 0;
        }
        let ds = cones.apply(&sc, &ds_t, Op::WT);
        x += dx * alpha;
        s += ds * alpha;
        z += dz * alpha;
        tau += dt * alpha;
        kappa += dk * alpha;
    }
    finish(SolveStatus::MaxIter, unscale(&(&x / tau)), settings.max_iter, last_gap)
}

/// Scaled violation of the original constraints at `x`.
fn primal_residual(p: &ConicProgram, x: &DVector<f64>) -> f64 {
    let slack = &p.b - p.a.to_dense() * x;
    let mut worst: f64 = 0.0;
    let mut row = 0;
    for cone in &p.cones {
        let d = cone.dim();
        let part = slack.rows(row, d);
        let v = match *cone {
            Cone::Zero(_) => part.amax(),
            Cone::Nonneg(_) => (-part.min()).max(0.0),
            Cone::Psd(side) => {
                if side == 0 {
                    0.0
                } else {
                    (-sym_eigvals(smat_sized(part.as_slice(), side)).min()).max(0.0)
                }
            }
        };
        worst = worst.max(if d == 0 { 0.0 } else { v });
        row += d;
    }
    worst / p.b.amax().max(1.0)
}
