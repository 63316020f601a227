//! Homogeneous self-dual interior-point method for real block-diagonal SDPs
//!
//! ```text
//! minimize    c^T x
//! subject to  G x + s = h,   s in S_+ (block diagonal)
//! ```
//!
//! with dual `maximize -h^T z  s.t.  G^T z + c = 0, z in S_+`. Nesterov-Todd
//! scaling, Mehrotra predictor-corrector, Schur complement on the normal
//! equations.

use std::io::Write;

use super::dense::{cholesky, cholesky_solve, min_eigenvalue, svd, RMat};
use super::{SolverOptions, SolverStatus};

/// Sparse symmetric column entry `(a, b, v)` with `a <= b`; off-diagonal
/// entries stand for `v (E_ab + E_ba)`.
pub type Entry = (u32, u32, f64);

#[derive(Debug, Clone)]
pub struct RealBlock {
    pub size: usize,
    pub h: RMat,
    /// One sparse symmetric matrix per decision variable.
    pub cols: Vec<Vec<Entry>>,
}

#[derive(Debug, Clone)]
pub struct RealSdp {
    pub c: Vec<f64>,
    pub blocks: Vec<RealBlock>,
}

#[derive(Debug, Clone)]
pub struct RealSolution {
    pub status: SolverStatus,
    pub x: Vec<f64>,
    pub s: Vec<RMat>,
    pub z: Vec<RMat>,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

fn col_dot(col: &[Entry], m: &RMat) -> f64 {
    col.iter()
        .map(|&(a, b, v)| {
            let (a, b) = (a as usize, b as usize);
            if a == b {
                v * m[(a, a)]
            } else {
                v * (m[(a, b)] + m[(b, a)])
            }
        })
        .sum()
}

fn add_col(m: &mut RMat, col: &[Entry], c: f64) {
    for &(a, b, v) in col {
        let (a, b) = (a as usize, b as usize);
        m[(a, b)] += c * v;
        if a != b {
            m[(b, a)] += c * v;
        }
    }
}

/// `Q G Q` for a sparse symmetric `G` and symmetric `Q`, written into `out`.
fn sandwich_into(q: &RMat, col: &[Entry], out: &mut [f64]) {
    let n = q.n();
    out.fill(0.0);
    for &(a, b, v) in col {
        let qa = q.row(a as usize);
        let qb = q.row(b as usize);
        for (r, orow) in out.chunks_exact_mut(n).enumerate() {
            let x = v * qa[r];
            if a == b {
                for (o, &c) in orow.iter_mut().zip(qa) {
                    *o += x * c;
                }
            } else {
                let y = v * qb[r];
                for ((o, &ca), &cb) in orow.iter_mut().zip(qa).zip(qb) {
                    *o += x * cb + y * ca;
                }
            }
        }
    }
}

fn col_dot_flat(col: &[Entry], m: &[f64], n: usize) -> f64 {
    col.iter()
        .map(|&(a, b, v)| {
            let (a, b) = (a as usize, b as usize);
            if a == b {
                v * m[a * n + a]
            } else {
                v * (m[a * n + b] + m[b * n + a])
            }
        })
        .sum()
}

impl RealSdp {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    fn g_mul(&self, x: &[f64]) -> Vec<RMat> {
        self.blocks
            .iter()
            .map(|blk| {
                let mut m = RMat::zeros(blk.size);
                for (col, &xi) in blk.cols.iter().zip(x) {
                    if xi != 0.0 {
                        add_col(&mut m, col, xi);
                    }
                }
                m
            })
            .collect()
    }

    fn gt_mul(&self, z: &[RMat]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars()];
        for (blk, zb) in self.blocks.iter().zip(z) {
            for (o, col) in out.iter_mut().zip(&blk.cols) {
                *o += col_dot(col, zb);
            }
        }
        out
    }

    /// `H_ij = sum_b tr(G_i Q_b G_j Q_b)`.
    fn schur(&self, q: &[RMat]) -> RMat {
        let n = self.num_vars();
        let mut h = RMat::zeros(n);
        for (blk, qb) in self.blocks.iter().zip(q) {
            let nb = blk.size;
            let mut p = vec![0.0; nb * nb];
            let active: Vec<usize> = (0..n).filter(|&k| !blk.cols[k].is_empty()).collect();
            for (jj, &j) in active.iter().enumerate() {
                sandwich_into(qb, &blk.cols[j], &mut p);
                for &i in &active[jj..] {
                    h[(i, j)] += col_dot_flat(&blk.cols[i], &p, nb);
                }
            }
        }
        for j in 0..n {
            for i in (j + 1)..n {
                h[(j, i)] = h[(i, j)];
            }
        }
        h
    }
}

fn blocks_dot(a: &[RMat], b: &[RMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn blocks_norm(a: &[RMat]) -> f64 {
    blocks_dot(a, a).sqrt()
}

fn vdot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn vnorm(a: &[f64]) -> f64 {
    vdot(a, a).sqrt()
}

/// Nesterov-Todd scaling of one block: `W z = r^T z r`, `W^T u = r u r^T`,
/// scaled point `lambda = W z = W^{-T} s` (diagonal).
struct Scaling {
    r: RMat,
    rinv: RMat,
    lambda: Vec<f64>,
    q: RMat,
}

fn nt_scaling(s: &RMat, z: &RMat) -> Option<Scaling> {
    let ls = cholesky(s)?;
    let lz = cholesky(z)?;
    let (u, lam, v) = svd(&lz.transpose().matmul(&ls));
    if lam.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    let n = s.n();
    let isq: Vec<f64> = lam.iter().map(|x| 1.0 / x.sqrt()).collect();
    let lsv = ls.matmul(&v);
    let r = RMat::from_fn(n, |i, j| lsv[(i, j)] * isq[j]);
    let ut_lzt = u.transpose().matmul(&lz.transpose());
    let rinv = RMat::from_fn(n, |i, j| isq[i] * ut_lzt[(i, j)]);
    let q = rinv.transpose().matmul(&rinv);
    Some(Scaling { r, rinv, lambda: lam, q })
}

/// `lambda \ d`: solves `lambda o X = d` for diagonal `lambda`.
fn lambda_div(lambda: &[f64], d: &RMat) -> RMat {
    RMat::from_fn(lambda.len(), |i, j| 2.0 * d[(i, j)] / (lambda[i] + lambda[j]))
}

/// Largest `alpha` with `diag(lambda) + alpha X` PSD (infinite if none binds).
fn max_step(lambda: &[f64], x: &RMat) -> f64 {
    let isq: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
    let m = RMat::from_fn(lambda.len(), |i, j| x[(i, j)] * isq[i] * isq[j]);
    let lmin = min_eigenvalue(&m);
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

fn shift_into_cone(m: &mut [RMat]) {
    let lmin = m
        .iter()
        .map(min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let nrm = blocks_norm(m);
    let t = -lmin;
    if t >= -1e-8 * nrm.max(1.0) {
        for b in m.iter_mut() {
            b.add_identity(1.0 + t);
        }
    }
}

pub fn solve_real(
    p: &RealSdp,
    opts: &SolverOptions,
    mut log: Option<&mut dyn Write>,
) -> Result<RealSolution, String> {
    let n = p.num_vars();
    let h: Vec<RMat> = p.blocks.iter().map(|b| b.h.clone()).collect();
    let nu: usize = p.blocks.iter().map(|b| b.size).sum();
    let resx0 = vnorm(&p.c).max(1.0);
    let resz0 = blocks_norm(&h).max(1.0);

    let ident: Vec<RMat> = p.blocks.iter().map(|b| RMat::identity(b.size)).collect();
    let gram = p.schur(&ident);
    let gram_l = cholesky(&gram).ok_or("constraint map is rank deficient")?;
    let mut x = cholesky_solve(&gram_l, &p.gt_mul(&h));
    let gx = p.g_mul(&x);
    let mut s: Vec<RMat> = h
        .iter()
        .zip(&gx)
        .map(|(hb, gb)| {
            let mut m = hb.clone();
            m.add_scaled(-1.0, gb);
            m
        })
        .collect();
    let w = cholesky_solve(&gram_l, &p.c);
    let mut z: Vec<RMat> = p.g_mul(&w).into_iter().map(|m| m.scaled(-1.0)).collect();
    shift_into_cone(&mut s);
    shift_into_cone(&mut z);
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let mut status = SolverStatus::MaxIterations;
    let mut iterations = 0;
    let (mut pres, mut dres, mut gap) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut best: Option<Snapshot> = None;

    for iter in 0..=opts.max_iterations {
        iterations = iter;
        let gx = p.g_mul(&x);
        let gtz = p.gt_mul(&z);
        let rx: Vec<f64> = gtz.iter().zip(&p.c).map(|(a, c)| a + c * tau).collect();
        let rz: Vec<RMat> = (0..p.blocks.len())
            .map(|b| {
                let mut m = s[b].clone();
                m.add_scaled(1.0, &gx[b]);
                m.add_scaled(-tau, &h[b]);
                m
            })
            .collect();
        let cx = vdot(&p.c, &x);
        let hz = blocks_dot(&h, &z);
        let rt = kappa + cx + hz;
        let sz = blocks_dot(&s, &z);
        let mu = (sz + tau * kappa) / (nu as f64 + 1.0);

        pres = blocks_norm(&rz) / tau / resz0;
        dres = vnorm(&rx) / tau / resx0;
        gap = sz / (tau * tau);
        let pcost = cx / tau;
        let dcost = -hz / tau;

        let merit = (pres / opts.feas_tol)
            .max(dres / opts.feas_tol)
            .max(gap / opts.gap_tol);
        if best.as_ref().is_none_or(|b| merit < b.merit) {
            best = Some(Snapshot {
                x: x.clone(),
                s: s.clone(),
                z: z.clone(),
                tau,
                pres,
                dres,
                gap,
                iterations: iter,
                merit,
            });
        }

        if let Some(w) = log.as_deref_mut() {
            let _ = writeln!(
                w,
                "iter {iter:3}  pcost {pcost:+.9e}  dcost {dcost:+.9e}  gap {gap:.2e}  pres {pres:.2e}  dres {dres:.2e}  tau/kappa {:.2e}",
                tau / kappa
            );
        }

        if pres <= opts.feas_tol && dres <= opts.feas_tol && gap <= opts.gap_tol {
            status = SolverStatus::Optimal;
            break;
        }
        let pinf = if hz < 0.0 {
            vnorm(&gtz) / resx0 / (-hz)
        } else {
            f64::INFINITY
        };
        let gxs: Vec<RMat> = gx
            .iter()
            .zip(&s)
            .map(|(g, sb)| {
                let mut m = g.clone();
                m.add_scaled(1.0, sb);
                m
            })
            .collect();
        let dinf = if cx < 0.0 {
            blocks_norm(&gxs) / resz0 / (-cx)
        } else {
            f64::INFINITY
        };
        if pinf <= opts.feas_tol {
            status = SolverStatus::Infeasible;
            break;
        }
        if dinf <= opts.feas_tol {
            status = SolverStatus::Unbounded;
            break;
        }
        if tau / kappa < opts.infeasibility_ratio {
            status = if cx < 0.0 && hz >= 0.0 {
                SolverStatus::Unbounded
            } else {
                SolverStatus::Infeasible
            };
            break;
        }
        if iter == opts.max_iterations {
            return Ok(finish_best(p, best.expect("first iterate recorded")));
        }

        let mut scal = Vec::with_capacity(p.blocks.len());
        for (sb, zb) in s.iter().zip(&z) {
            match nt_scaling(sb, zb) {
                Some(w) => scal.push(w),
                None => return Ok(finish_best(p, best.expect("first iterate recorded"))),
            }
        }
        let q: Vec<RMat> = scal.iter().map(|w| w.q.clone()).collect();
        let hmat = p.schur(&q);
        let factor = cholesky(&hmat).or_else(|| {
            let mut reg = hmat.clone();
            let d = (0..n).map(|i| hmat[(i, i)]).fold(0.0, f64::max);
            reg.add_identity(1e-13 * d.max(1.0));
            cholesky(&reg)
        });
        let Some(hl) = factor else {
            return Ok(finish_best(p, best.expect("first iterate recorded")));
        };
        let rrt: Vec<RMat> = scal.iter().map(|w| w.r.matmul(&w.r.transpose())).collect();
        let kkt_once = |bx: &[f64], bz: &[RMat]| -> (Vec<f64>, Vec<RMat>) {
            let qbq: Vec<RMat> = bz
                .iter()
                .zip(&q)
                .map(|(b, qb)| qb.matmul(b).matmul(qb))
                .collect();
            let rhs: Vec<f64> = p
                .gt_mul(&qbq)
                .iter()
                .zip(bx)
                .map(|(a, b)| a + b)
                .collect();
            let dx = cholesky_solve(&hl, &rhs);
            let gdx = p.g_mul(&dx);
            let dz = gdx
                .into_iter()
                .zip(bz)
                .zip(&q)
                .map(|((mut g, b), qb)| {
                    g.add_scaled(-1.0, b);
                    let mut m = qb.matmul(&g).matmul(qb);
                    m.symmetrize();
                    m
                })
                .collect();
            (dx, dz)
        };
        // Solves  G^T dz = bx,  G dx - W^T W dz = bz  with iterative refinement.
        let kkt = |bx: &[f64], bz: &[RMat]| -> (Vec<f64>, Vec<RMat>) {
            let (mut dx, mut dz) = kkt_once(bx, bz);
            for _ in 0..opts.refinement_steps {
                let gtdz = p.gt_mul(&dz);
                let ex: Vec<f64> = bx.iter().zip(&gtdz).map(|(b, g)| b - g).collect();
                let gdx = p.g_mul(&dx);
                let ez: Vec<RMat> = (0..bz.len())
                    .map(|b| {
                        let mut m = bz[b].clone();
                        m.add_scaled(-1.0, &gdx[b]);
                        m.add_scaled(1.0, &rrt[b].matmul(&dz[b]).matmul(&rrt[b]));
                        m
                    })
                    .collect();
                let (cx, cz) = kkt_once(&ex, &ez);
                for (a, c) in dx.iter_mut().zip(&cx) {
                    *a += c;
                }
                for (a, c) in dz.iter_mut().zip(&cz) {
                    a.add_scaled(1.0, c);
                }
            }
            (dx, dz)
        };

        let neg_c: Vec<f64> = p.c.iter().map(|v| -v).collect();
        let (x1, z1) = kkt(&neg_c, &h);
        let denom = vdot(&p.c, &x1) + blocks_dot(&h, &z1) - kappa / tau;

        let lam_sq: Vec<RMat> = scal
            .iter()
            .map(|w| RMat::diag(&w.lambda.iter().map(|l| -l * l).collect::<Vec<_>>()))
            .collect();

        let mut sigma = 0.0;
        let mut aff: Option<(Vec<RMat>, Vec<RMat>, f64, f64)> = None;
        let mut step = None;
        for phase in 0..2 {
            let eta = if phase == 0 { 1.0 } else { 1.0 - sigma };
            let mut ds = lam_sq.clone();
            let mut dk = -tau * kappa;
            if let Some((dsa, dza, dta, dka)) = &aff {
                for b in 0..ds.len() {
                    ds[b].add_scaled(-1.0, &dsa[b].jordan(&dza[b]));
                    ds[b].add_identity(sigma * mu);
                }
                dk += -dta * dka + sigma * mu;
            }
            let t: Vec<RMat> = ds
                .iter()
                .zip(&scal)
                .map(|(d, w)| lambda_div(&w.lambda, d))
                .collect();
            let bx: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let bz: Vec<RMat> = rz
                .iter()
                .zip(&t)
                .zip(&scal)
                .map(|((r, tb), w)| {
                    let mut m = r.scaled(-eta);
                    m.add_scaled(-1.0, &w.r.congruence(tb));
                    m
                })
                .collect();
            let (x2, z2) = kkt(&bx, &bz);
            let dtau = (-eta * rt - vdot(&p.c, &x2) - blocks_dot(&h, &z2) - dk / tau) / denom;
            let dx: Vec<f64> = x2.iter().zip(&x1).map(|(a, b)| a + dtau * b).collect();
            let dz: Vec<RMat> = z2
                .iter()
                .zip(&z1)
                .map(|(a, b)| {
                    let mut m = a.clone();
                    m.add_scaled(dtau, b);
                    m
                })
                .collect();
            let dkappa = (dk - kappa * dtau) / tau;
            let dzt: Vec<RMat> = dz
                .iter()
                .zip(&scal)
                .map(|(d, w)| {
                    let mut m = w.r.transpose().matmul(d).matmul(&w.r);
                    m.symmetrize();
                    m
                })
                .collect();
            // ds from the linearized primal equation G dx + ds - h dtau = -eta rz,
            // so the primal residual contracts exactly along the step.
            let gdx = p.g_mul(&dx);
            let ds: Vec<RMat> = (0..rz.len())
                .map(|b| {
                    let mut m = rz[b].scaled(-eta);
                    m.add_scaled(-1.0, &gdx[b]);
                    m.add_scaled(dtau, &h[b]);
                    m.symmetrize();
                    m
                })
                .collect();
            let dst: Vec<RMat> = ds
                .iter()
                .zip(&scal)
                .map(|(d, w)| {
                    let mut m = w.rinv.congruence(d);
                    m.symmetrize();
                    m
                })
                .collect();

            let mut amax = f64::INFINITY;
            for ((w, a), b) in scal.iter().zip(&dst).zip(&dzt) {
                amax = amax.min(max_step(&w.lambda, a)).min(max_step(&w.lambda, b));
            }
            if dtau < 0.0 {
                amax = amax.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                amax = amax.min(-kappa / dkappa);
            }

            if phase == 0 {
                let alpha = amax.min(1.0);
                sigma = (1.0 - alpha).powi(3);
                aff = Some((dst, dzt, dtau, dkappa));
            } else {
                let alpha = (0.99 * amax).min(1.0);
                step = Some((alpha, dx, ds, dz, dtau, dkappa));
            }
        }

        let (alpha, dx, ds, dz, dtau, dkappa) = step.expect("corrector step computed");
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += alpha * d;
        }
        for (sb, d) in s.iter_mut().zip(&ds) {
            sb.add_scaled(alpha, d);
            sb.symmetrize();
        }
        for (zb, d) in z.iter_mut().zip(&dz) {
            zb.add_scaled(alpha, d);
            zb.symmetrize();
        }
        tau += alpha * dtau;
        kappa += alpha * dkappa;
    }

    Ok(finish(p, x, s, z, tau, status, pres, dres, gap, iterations))
}

/// Iterate with the smallest tolerance-scaled residual seen so far.
struct Snapshot {
    x: Vec<f64>,
    s: Vec<RMat>,
    z: Vec<RMat>,
    tau: f64,
    pres: f64,
    dres: f64,
    gap: f64,
    iterations: usize,
    merit: f64,
}

/// Returned when the iteration stops without meeting the tolerances.
fn finish_best(p: &RealSdp, b: Snapshot) -> RealSolution {
    finish(
        p,
        b.x,
        b.s,
        b.z,
        b.tau,
        SolverStatus::MaxIterations,
        b.pres,
        b.dres,
        b.gap,
        b.iterations,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    p: &RealSdp,
    x: Vec<f64>,
    s: Vec<RMat>,
    z: Vec<RMat>,
    tau: f64,
    status: SolverStatus,
    pres: f64,
    dres: f64,
    gap: f64,
    iterations: usize,
) -> RealSolution {
    let h: Vec<RMat> = p.blocks.iter().map(|b| b.h.clone()).collect();
    let (x, s, z) = match status {
        SolverStatus::Infeasible | SolverStatus::Unbounded => (x, s, z),
        _ => (
            x.iter().map(|v| v / tau).collect(),
            s.iter().map(|m| m.scaled(1.0 / tau)).collect(),
            z.iter().map(|m| m.scaled(1.0 / tau)).collect::<Vec<_>>(),
        ),
    };
    let primal_value = vdot(&p.c, &x);
    let dual_value = -blocks_dot(&h, &z);
    RealSolution {
        status,
        x,
        s,
        z,
        primal_value,
        dual_value,
        gap,
        primal_residual: pres,
        dual_residual: dres,
        iterations,
    }
}
