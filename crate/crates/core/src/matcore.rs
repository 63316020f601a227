//! Dense complex linear algebra for the small matrices used throughout the
//! crate (states, process matrices, superoperators; at most 16x16).
//!
//! The Hermitian eigensolver is a cyclic complex Jacobi iteration. It is
//! unconditionally stable and, at these sizes, costs next to nothing.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Every numerical threshold the library compares against, in one place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceProfile {
    /// Absolute bound on `max |A - A^dagger|` for Hermitian inputs.
    pub hermitian: f64,
    /// Allowed deviation of a state's trace from one.
    pub trace: f64,
    /// Most negative eigenvalue still accepted for a density matrix.
    pub psd: f64,
    /// Most negative process-matrix eigenvalue still reported as CP.
    pub cp: f64,
    /// Robustness or witness excess that counts as a detection.
    pub detection: f64,
    /// Largest condition estimate accepted by [`inverse`].
    pub condition_bound: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            trace: 1e-10,
            psd: 1e-10,
            cp: 1e-9,
            detection: 1e-6,
            condition_bound: 1e12,
        }
    }
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(shape_err(
                format!("{} entries for {rows}x{cols}", rows * cols),
                data.len(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        Self::diag(&entries.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    /// `|v><v|` for a (not necessarily normalized) ket.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Hilbert-Schmidt inner product `tr(A^dagger B)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn kron(&self, other: &Self) -> Self {
        kron(self, other)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Tensor product; entry `(i*rB + k, j*cB + l)` is `A_ij * B_kl`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    ComplexMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// Trace over the first factor of a `(d1*d2)`-dimensional square matrix.
pub fn partial_trace_first(m: &ComplexMatrix, d1: usize, d2: usize) -> Result<ComplexMatrix> {
    check_square_dim(m, d1 * d2)?;
    Ok(ComplexMatrix::from_fn(d2, d2, |k, l| {
        (0..d1).map(|i| m[(i * d2 + k, i * d2 + l)]).sum()
    }))
}

/// Trace over the second factor of a `(d1*d2)`-dimensional square matrix.
pub fn partial_trace_second(m: &ComplexMatrix, d1: usize, d2: usize) -> Result<ComplexMatrix> {
    check_square_dim(m, d1 * d2)?;
    Ok(ComplexMatrix::from_fn(d1, d1, |i, j| {
        (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
    }))
}

fn check_square_dim(m: &ComplexMatrix, n: usize) -> Result<()> {
    if m.rows != n || m.cols != n {
        return Err(shape_err(format!("{n}x{n}"), format!("{}x{}", m.rows, m.cols)));
    }
    Ok(())
}

/// Eigen-decomposition `A = V diag(values) V^dagger` with eigenvalues in
/// descending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * self.values[k] * v[(j, k)].conj())
                .sum()
        })
    }

    pub fn min(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn max(&self) -> f64 {
        *self.values.first().unwrap_or(&0.0)
    }

    /// Rebuild with each eigenvalue replaced by `f(lambda)`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        HermitianEigen {
            values: self.values.iter().map(|&x| f(x)).collect(),
            vectors: self.vectors.clone(),
        }
        .reconstruct()
    }
}

/// Hermitian eigensolver (cyclic Jacobi). The Hermiticity check is scaled by
/// `max(1, max|A|)` so ill-conditioned intermediate maps with large entries
/// are not rejected for rounding noise.
pub fn eig_hermitian(a: &ComplexMatrix) -> Result<HermitianEigen> {
    eig_hermitian_tol(a, ToleranceProfile::default().hermitian)
}

pub fn eig_hermitian_tol(a: &ComplexMatrix, herm_tol: f64) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(shape_err("square matrix", format!("{}x{}", a.rows, a.cols)));
    }
    let dev = a.hermiticity_deviation();
    if dev > herm_tol * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let n = a.rows;
    let mut m = a.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let b = apq.norm();
                if b <= 1e-300 || b <= 1e-18 * scale {
                    continue;
                }
                let phase = apq / b;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * b);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Unitary acting on columns p, q: [[c, s], [-s e^{-i phi}, c e^{-i phi}]].
                let u_pp = C64::new(c, 0.0);
                let u_pq = C64::new(s, 0.0);
                let u_qp = -phase.conj() * s;
                let u_qq = phase.conj() * c;
                // m <- m * U
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * u_pp + mkq * u_qp;
                    m[(k, q)] = mkp * u_pq + mkq * u_qq;
                }
                // m <- U^dagger * m
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = u_pp.conj() * mpk + u_qp.conj() * mqk;
                    m[(q, k)] = u_pq.conj() * mpk + u_qq.conj() * mqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

fn norm_one(a: &ComplexMatrix) -> f64 {
    (0..a.cols)
        .map(|j| (0..a.rows).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting. Fails with
/// [`Error::NonInvertibleSubprocess`] when the 1-norm condition estimate
/// exceeds `condition_bound`.
pub fn inverse_with_bound(a: &ComplexMatrix, condition_bound: f64) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(shape_err("square matrix", format!("{}x{}", a.rows, a.cols)));
    }
    let n = a.rows;
    let anorm = norm_one(a);
    let mut m = a.clone();
    let mut inv = ComplexMatrix::identity(n);
    for col in 0..n {
        let (piv, pmag) = (col..n)
            .map(|r| (r, m[(r, col)].norm()))
            .fold((col, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if pmag <= f64::MIN_POSITIVE * 1e10 || pmag <= anorm * 1e-300 {
            return Err(Error::NonInvertibleSubprocess {
                condition: f64::INFINITY,
            });
        }
        if piv != col {
            for k in 0..n {
                m.data.swap(piv * n + k, col * n + k);
                inv.data.swap(piv * n + k, col * n + k);
            }
        }
        let p = m[(col, col)];
        let pinv = ONE / p;
        for k in 0..n {
            m[(col, k)] *= pinv;
            inv[(col, k)] *= pinv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[(r, col)];
            if f == ZERO {
                continue;
            }
            for k in 0..n {
                let mck = m[(col, k)];
                let ick = inv[(col, k)];
                m[(r, k)] -= f * mck;
                inv[(r, k)] -= f * ick;
            }
        }
    }
    let condition = anorm * norm_one(&inv);
    if !condition.is_finite() || condition > condition_bound {
        return Err(Error::NonInvertibleSubprocess { condition });
    }
    Ok(inv)
}

pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    inverse_with_bound(a, ToleranceProfile::default().condition_bound)
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(a: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(a)?.values.iter().map(|x| x.abs()).sum())
}

/// Trace norm `tr sqrt(A^dagger A)` of an arbitrary square matrix.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    let ata = a.dagger().matmul(a);
    Ok(eig_hermitian(&ata)?
        .values
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .sum())
}

/// Square root of a positive semidefinite matrix; negative rounding noise in
/// the spectrum is clipped.
pub fn sqrt_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(eig_hermitian(a)?.map_values(|x| x.max(0.0).sqrt()))
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(shape_err(rho.dim(), sigma.dim()));
    }
    let sr = sqrt_psd(rho.matrix())?;
    let inner = sr.matmul(sigma.matrix()).matmul(&sr).hermitian_part();
    let t: f64 = eig_hermitian(&inner)?
        .values
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .sum();
    Ok(t * t)
}

/// `||rho1 - rho2||_1 / 2`.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(shape_err(
            format!("dimension {}", rho1.dim()),
            format!("dimension {}", rho2.dim()),
        ));
    }
    trace_distance_matrices(rho1.matrix(), rho2.matrix())
}

/// Trace distance on raw Hermitian matrices (no state validation).
pub fn trace_distance_matrices(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(shape_err(
            format!("{}x{}", a.rows, a.cols),
            format!("{}x{}", b.rows, b.cols),
        ));
    }
    let diff = (a - b).hermitian_part();
    Ok(0.5 * trace_norm_hermitian(&diff)?)
}

/// Unit-trace positive semidefinite matrix.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(m, &ToleranceProfile::default())
    }

    pub fn with_tolerances(m: ComplexMatrix, tol: &ToleranceProfile) -> Result<Self> {
        if !m.is_square() || m.rows() == 0 {
            return Err(Error::InvalidState(format!(
                "density matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let dev = m.hermiticity_deviation();
        if dev > tol.hermitian {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = eig_hermitian(&m)?.min();
        if min < -tol.psd {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min:e} is negative"
            )));
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Validate after symmetrizing away rounding noise; for states produced by
    /// long chains of floating-point operations.
    pub fn from_hermitian_part(m: &ComplexMatrix) -> Result<Self> {
        Self::new(m.hermitian_part())
    }

    /// Pure state from a ket; the ket is normalized here.
    pub fn from_ket(ket: &[C64]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero ket".into()));
        }
        let k: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Self::new(ComplexMatrix::outer(&k))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(ComplexMatrix::identity(d).scale_real(1.0 / d as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(kron(&self.0, &other.0))
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix({:?})", self.0)
    }
}

/// Named single-qubit kets in the `{|H>, |V>}` basis.
pub mod kets {
    use super::{C64, ONE, ZERO};
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn h() -> Vec<C64> {
        vec![ONE, ZERO]
    }
    pub fn v() -> Vec<C64> {
        vec![ZERO, ONE]
    }
    pub fn plus() -> Vec<C64> {
        vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)]
    }
    pub fn minus() -> Vec<C64> {
        vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)]
    }
    pub fn r() -> Vec<C64> {
        vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2)]
    }
    pub fn l() -> Vec<C64> {
        vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, -FRAC_1_SQRT_2)]
    }

    pub fn tensor(a: &[C64], b: &[C64]) -> Vec<C64> {
        a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
    }

    /// `(a + sign * b) / sqrt(2)`.
    pub fn superpose(a: &[C64], b: &[C64], sign: f64) -> Vec<C64> {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (x + y * sign) * FRAC_1_SQRT_2)
            .collect()
    }

    /// Look up a single-qubit label: H, V, +, -, R, L.
    pub fn by_label(label: char) -> Option<Vec<C64>> {
        Some(match label {
            'H' => h(),
            'V' => v(),
            '+' => plus(),
            '-' => minus(),
            'R' => r(),
            'L' => l(),
            _ => return None,
        })
    }
}

/// Pauli matrices.
pub mod pauli {
    use super::{ComplexMatrix, C64};

    pub fn i2() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }
    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }
    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_vec(
            2,
            2,
            vec![
                C64::new(0.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 0.0),
            ],
        )
        .unwrap()
    }
    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: usize, data: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real(rows, data.len() / rows, data).unwrap()
    }

    #[test]
    fn eig_two_by_two_symmetric() {
        let e = eig_hermitian(&real(2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_identity() {
        let e = eig_hermitian(&ComplexMatrix::identity(4)).unwrap();
        assert!(e.values.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn eig_negative_diagonal_entry() {
        let r = 1.5;
        let m = ComplexMatrix::diag_real(&[(1.0 + r) / 2.0, (1.0 - r) / 2.0]);
        let e = eig_hermitian(&m).unwrap();
        assert!((e.values[0] - 1.25).abs() < 1e-15);
        assert!((e.values[1] + 0.25).abs() < 1e-15);
        // Same spectrum after a unitary basis change exercises the off-diagonal path.
        let u = ComplexMatrix::from_vec(
            2,
            2,
            vec![
                C64::new(0.6, 0.0),
                C64::new(0.0, 0.8),
                C64::new(0.0, 0.8),
                C64::new(0.6, 0.0),
            ],
        )
        .unwrap();
        let rotated = u.matmul(&m).matmul(&u.dagger());
        let e2 = eig_hermitian(&rotated).unwrap();
        assert!((e2.values[0] - 1.25).abs() < 1e-13);
        assert!((e2.values[1] + 0.25).abs() < 1e-13);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = real(2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn trace_distance_examples() {
        let p = DensityMatrix::from_ket(&kets::plus()).unwrap();
        let m = DensityMatrix::from_ket(&kets::minus()).unwrap();
        assert!((trace_distance(&p, &m).unwrap() - 1.0).abs() < 1e-14);
        assert!(trace_distance(&p, &p).unwrap().abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(2);
        let h = DensityMatrix::from_ket(&kets::h()).unwrap();
        assert!((trace_distance(&mixed, &h).unwrap() - 0.5).abs() < 1e-14);
        let bell = DensityMatrix::maximally_mixed(4);
        assert!(trace_distance(&bell, &h).is_err());
    }

    #[test]
    fn kron_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let xi = kron(&pauli::x(), &i2);
        let expected = real(
            4,
            &[
                0., 0., 1., 0., //
                0., 0., 0., 1., //
                1., 0., 0., 0., //
                0., 1., 0., 0.,
            ],
        );
        assert_eq!(xi, expected);
        let hh = ComplexMatrix::outer(&kets::h());
        let vv = ComplexMatrix::outer(&kets::v());
        let hv = ComplexMatrix::outer(&kets::tensor(&kets::h(), &kets::v()));
        assert_eq!(kron(&hh, &vv), hv);
    }

    #[test]
    fn inverse_examples() {
        let d = ComplexMatrix::diag_real(&[1.0, 0.5]);
        let inv = inverse(&d).unwrap();
        assert!(inv.max_abs_diff(&ComplexMatrix::diag_real(&[1.0, 2.0])) < 1e-15);
        assert_eq!(inverse(&ComplexMatrix::identity(3)).unwrap(), ComplexMatrix::identity(3));
        let bad = ComplexMatrix::diag_real(&[1.0, 1e-15]);
        match inverse(&bad) {
            Err(Error::NonInvertibleSubprocess { condition }) => assert!(condition > 1e12),
            other => panic!("expected NonInvertibleSubprocess, got {other:?}"),
        }
        let singular = real(2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            inverse(&singular),
            Err(Error::NonInvertibleSubprocess { .. })
        ));
    }

    #[test]
    fn partial_traces_of_product() {
        let a = DensityMatrix::from_ket(&kets::r()).unwrap();
        let b = DensityMatrix::from_ket(&kets::minus()).unwrap();
        let ab = a.kron(&b);
        let tr1 = partial_trace_first(ab.matrix(), 2, 2).unwrap();
        let tr2 = partial_trace_second(ab.matrix(), 2, 2).unwrap();
        assert!(tr1.max_abs_diff(b.matrix()) < 1e-15);
        assert!(tr2.max_abs_diff(a.matrix()) < 1e-15);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[0.5, 0.5])).is_ok());
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[0.7, 0.5])).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[1.2, -0.2])).is_err());
    }

    #[test]
    fn fidelity_of_pure_states() {
        let p = DensityMatrix::from_ket(&kets::plus()).unwrap();
        let h = DensityMatrix::from_ket(&kets::h()).unwrap();
        assert!((fidelity(&p, &h).unwrap() - 0.5).abs() < 1e-12);
        assert!((fidelity(&p, &p).unwrap() - 1.0).abs() < 1e-12);
    }
}
