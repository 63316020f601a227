//! Real dense square matrices and the factorizations the interior-point
//! iteration needs: Cholesky, symmetric Jacobi eigenvalues, one-sided Jacobi
//! SVD.

use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct RMat {
    n: usize,
    data: Vec<f64>,
}

impl RMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, b: &RMat) -> RMat {
        let n = self.n;
        let mut out = RMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &b.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += a * bv;
                }
            }
        }
        out
    }

    /// `self * b * self^T`.
    pub fn congruence(&self, b: &RMat) -> RMat {
        self.matmul(b).matmul(&self.transpose())
    }

    pub fn add_scaled(&mut self, c: f64, other: &RMat) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn scaled(&self, c: f64) -> RMat {
        RMat {
            n: self.n,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add_identity(&mut self, c: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += c;
        }
    }

    /// Frobenius inner product `tr(A^T B)`.
    pub fn dot(&self, other: &RMat) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// Jordan product `(AB + BA) / 2`.
    pub fn jordan(&self, b: &RMat) -> RMat {
        let mut p = self.matmul(b);
        let q = b.matmul(self);
        for (x, y) in p.data.iter_mut().zip(&q.data) {
            *x = 0.5 * (*x + y);
        }
        p
    }

    pub fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for RMat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for RMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower Cholesky factor; `None` unless the matrix is numerically positive
/// definite.
pub fn cholesky(a: &RMat) -> Option<RMat> {
    let n = a.n;
    let mut l = RMat::zeros(n);
    for j in 0..n {
        let rj = &l.data[j * n..j * n + j];
        let d = a.data[j * n + j] - dot(rj, rj);
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l.data[j * n + j] = djj;
        for i in (j + 1)..n {
            let s = a.data[i * n + j] - dot(&l.data[i * n..i * n + j], &l.data[j * n..j * n + j]);
            l.data[i * n + j] = s / djj;
        }
    }
    Some(l)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

/// Solve `L L^T x = b` given the lower factor.
pub fn cholesky_solve(l: &RMat, b: &[f64]) -> Vec<f64> {
    let n = l.n;
    let mut y = b.to_vec();
    for i in 0..n {
        let s = y[i] - dot(&l.data[i * n..i * n + i], &y[..i]);
        y[i] = s / l.data[i * n + i];
    }
    for i in (0..n).rev() {
        let yi = y[i] / l.data[i * n + i];
        y[i] = yi;
        for k in 0..i {
            y[k] -= l.data[i * n + k] * yi;
        }
    }
    y
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix
/// by cyclic Jacobi rotations.
pub fn sym_eig(a: &RMat) -> (Vec<f64>, RMat) {
    let n = a.n;
    let mut m = a.clone();
    m.symmetrize();
    let mut v = RMat::identity(n);
    let scale = m.norm().max(f64::MIN_POSITIVE);
    for _ in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
        }
        if off.sqrt() <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = RMat::from_fn(n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(a: &RMat) -> f64 {
    if a.n == 0 {
        return f64::INFINITY;
    }
    sym_eig(a).0[0]
}

/// SVD `A = U diag(s) V^T` by one-sided Jacobi; singular values descending.
pub fn svd(a: &RMat) -> (RMat, Vec<f64>, RMat) {
    let n = a.n;
    let mut u = a.clone();
    let mut v = RMat::identity(n);
    for _ in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..n {
                    alpha += u[(k, p)] * u[(k, p)];
                    beta += u[(k, q)] * u[(k, q)];
                    gamma += u[(k, p)] * u[(k, q)];
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let up = u[(k, p)];
                    let uq = u[(k, q)];
                    u[(k, p)] = c * up - s * uq;
                    u[(k, q)] = s * up + c * uq;
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = c * vp - s * vq;
                    v[(k, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|k| u[(k, j)] * u[(k, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let s: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    let uu = RMat::from_fn(n, |r, c| {
        let j = order[c];
        if sigma[j] > 0.0 {
            u[(r, j)] / sigma[j]
        } else {
            0.0
        }
    });
    let vv = RMat::from_fn(n, |r, c| v[(r, order[c])]);
    (uu, s, vv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RMat {
        RMat::from_fn(4, |i, j| {
            let (i, j) = (i as f64, j as f64);
            1.0 / (1.0 + i + j) + if i == j { 2.0 } else { 0.0 }
        })
    }

    #[test]
    fn cholesky_solves() {
        let a = sample();
        let l = cholesky(&a).unwrap();
        let b = vec![1.0, -2.0, 0.5, 3.0];
        let x = cholesky_solve(&l, &b);
        let ax = a.mat_vec(&x);
        for (p, q) in ax.iter().zip(&b) {
            assert!((p - q).abs() < 1e-13);
        }
        assert!(cholesky(&RMat::diag(&[1.0, -1.0])).is_none());
    }

    #[test]
    fn sym_eig_reconstructs() {
        let a = sample();
        let (w, v) = sym_eig(&a);
        let back = v.matmul(&RMat::diag(&w)).matmul(&v.transpose());
        assert!(back.data.iter().zip(&a.data).all(|(x, y)| (x - y).abs() < 1e-13));
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn svd_reconstructs() {
        let a = RMat::from_fn(4, |i, j| ((i * 3 + j * 7) % 5) as f64 - 1.5 + if i == j { 0.3 } else { 0.0 });
        let (u, s, v) = svd(&a);
        let back = u.matmul(&RMat::diag(&s)).matmul(&v.transpose());
        assert!(back.data.iter().zip(&a.data).all(|(x, y)| (x - y).abs() < 1e-12));
        assert!(s.windows(2).all(|p| p[0] >= p[1]));
    }
}
