//! Quantum operations carried simultaneously as chi matrix, Choi matrix and
//! superoperator.
//!
//! Conventions (d = system dimension):
//!
//! * chi: `Phi(rho) = sum_mn chi_mn B_m rho B_n^dagger`, where `B_m` is the
//!   basis element rescaled so that `tr(B_m^dagger B_m) = d`. With this
//!   scaling a trace-preserving map has `tr chi = 1`. The single-qubit basis
//!   `{I, X, -iY, Z}` already has that norm; the two-qubit matrix units
//!   `E_m` are scaled by 2.
//! * Choi: `J = sum_ij |i><j| (x) Phi(|i><j|)` (input factor first), so
//!   `tr J = d` for trace-preserving maps.
//! * superoperator: acts on row-major vectorizations,
//!   `vec(rho)[i*d + j] = rho_ij`; composition is the matrix product.

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::matcore::{
    eig_hermitian, inverse_with_bound, kron, partial_trace_second, pauli, ComplexMatrix,
    DensityMatrix, ToleranceProfile, C64, ONE, ZERO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisLabel {
    /// `(I, X, -iY, Z)`.
    SingleQubitM,
    /// `E_m = |h><r| (x) |l><s|`, `m = s + 2r + 4l + 8h + 1`.
    TwoQubitE,
}

impl BasisLabel {
    pub fn for_dim(dim: usize) -> Result<Self> {
        match dim {
            2 => Ok(Self::SingleQubitM),
            4 => Ok(Self::TwoQubitE),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::SingleQubitM => 2,
            Self::TwoQubitE => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBasis {
    pub label: BasisLabel,
    /// Basis elements exactly as named (unscaled).
    pub elements: Vec<ComplexMatrix>,
    scale: f64,
}

impl OperatorBasis {
    pub fn new(label: BasisLabel) -> Self {
        match label {
            BasisLabel::SingleQubitM => Self {
                label,
                elements: vec![
                    pauli::i2(),
                    pauli::x(),
                    pauli::y().scale(C64::new(0.0, -1.0)),
                    pauli::z(),
                ],
                scale: 1.0,
            },
            BasisLabel::TwoQubitE => {
                let mut elements = vec![ComplexMatrix::zeros(4, 4); 16];
                for h in 0..2 {
                    for r in 0..2 {
                        for l in 0..2 {
                            for s in 0..2 {
                                let m = s + 2 * r + 4 * l + 8 * h;
                                let mut e = ComplexMatrix::zeros(4, 4);
                                e[(h * 2 + l, r * 2 + s)] = ONE;
                                elements[m] = e;
                            }
                        }
                    }
                }
                Self {
                    label,
                    elements,
                    scale: 2.0,
                }
            }
        }
    }

    pub fn for_dim(dim: usize) -> Result<Self> {
        Ok(Self::new(BasisLabel::for_dim(dim)?))
    }

    pub fn dim(&self) -> usize {
        self.label.dim()
    }

    /// Factor applied to each element so that `tr(B^dagger B) = d`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn scaled_element(&self, m: usize) -> ComplexMatrix {
        self.elements[m].scale_real(self.scale)
    }

    /// Columns `v_m[i*d + k] = (B_m)_{k i}`; satisfies `V^dagger V = d I`
    /// and `J = V chi V^dagger`.
    fn choi_vectors(&self) -> ComplexMatrix {
        let d = self.dim();
        let n = d * d;
        let mut v = ComplexMatrix::zeros(n, n);
        for m in 0..n {
            let b = &self.elements[m];
            for i in 0..d {
                for k in 0..d {
                    v[(i * d + k, m)] = b[(k, i)] * self.scale;
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpReport {
    pub is_cp: bool,
    pub min_eigenvalue: f64,
    pub negative_sum: f64,
}

/// A linear map on `d x d` matrices in all three representations.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessRep {
    dim: usize,
    basis: OperatorBasis,
    chi: ComplexMatrix,
    choi: ComplexMatrix,
    superop: ComplexMatrix,
}

/// Serialized form; loaders recompute Choi and superoperator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessRecord {
    pub dim: usize,
    pub basis_label: BasisLabel,
    pub chi_re: Vec<Vec<f64>>,
    pub chi_im: Vec<Vec<f64>>,
}

fn check_dim(m: &ComplexMatrix, n: usize) -> Result<()> {
    if m.rows() != n || m.cols() != n {
        return Err(shape_err(
            format!("{n}x{n}"),
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    Ok(())
}

/// `S[(k,l),(i,j)] = J[(i,k),(j,l)]`.
fn choi_to_superop_raw(j: &ComplexMatrix, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        let (k, l) = (r / d, r % d);
        let (i, jj) = (c / d, c % d);
        j[(i * d + k, jj * d + l)]
    })
}

fn superop_to_choi_raw(s: &ComplexMatrix, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, k) = (r / d, r % d);
        let (j, l) = (c / d, c % d);
        s[(k * d + l, i * d + j)]
    })
}

pub fn chi_to_choi(basis: &OperatorBasis, chi: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = basis.dim();
    check_dim(chi, d * d)?;
    let v = basis.choi_vectors();
    Ok(v.matmul(chi).matmul(&v.dagger()))
}

pub fn choi_to_chi(basis: &OperatorBasis, choi: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = basis.dim();
    check_dim(choi, d * d)?;
    let v = basis.choi_vectors();
    let dd = (d * d) as f64;
    Ok(v.dagger().matmul(choi).matmul(&v).scale_real(1.0 / dd))
}

pub fn choi_to_superop(dim: usize, choi: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_dim(choi, dim * dim)?;
    Ok(choi_to_superop_raw(choi, dim))
}

pub fn superop_to_choi(dim: usize, superop: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_dim(superop, dim * dim)?;
    Ok(superop_to_choi_raw(superop, dim))
}

pub fn chi_to_superop(basis: &OperatorBasis, chi: &ComplexMatrix) -> Result<ComplexMatrix> {
    choi_to_superop(basis.dim(), &chi_to_choi(basis, chi)?)
}

pub fn superop_to_chi(basis: &OperatorBasis, superop: &ComplexMatrix) -> Result<ComplexMatrix> {
    choi_to_chi(basis, &superop_to_choi(basis.dim(), superop)?)
}

fn vec_row_major(m: &ComplexMatrix) -> Vec<C64> {
    m.as_slice().to_vec()
}

fn unvec_row_major(v: Vec<C64>, d: usize) -> ComplexMatrix {
    ComplexMatrix::from_vec(d, d, v).expect("length d*d")
}

impl ProcessRep {
    pub fn from_chi(basis: OperatorBasis, chi: ComplexMatrix) -> Result<Self> {
        let dim = basis.dim();
        let choi = chi_to_choi(&basis, &chi)?;
        let superop = choi_to_superop_raw(&choi, dim);
        Ok(Self {
            dim,
            basis,
            chi,
            choi,
            superop,
        })
    }

    pub fn from_choi(dim: usize, choi: ComplexMatrix) -> Result<Self> {
        let basis = OperatorBasis::for_dim(dim)?;
        let chi = choi_to_chi(&basis, &choi)?;
        let superop = choi_to_superop_raw(&choi, dim);
        Ok(Self {
            dim,
            basis,
            chi,
            choi,
            superop,
        })
    }

    pub fn from_superop(dim: usize, superop: ComplexMatrix) -> Result<Self> {
        let basis = OperatorBasis::for_dim(dim)?;
        check_dim(&superop, dim * dim)?;
        let choi = superop_to_choi_raw(&superop, dim);
        let chi = choi_to_chi(&basis, &choi)?;
        Ok(Self {
            dim,
            basis,
            chi,
            choi,
            superop,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_superop(dim, ComplexMatrix::identity(dim * dim))
    }

    /// `rho -> U rho U^dagger`.
    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        Self::from_kraus(std::slice::from_ref(u))
    }

    /// `rho -> sum_k K_k rho K_k^dagger`.
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
        let d = first.rows();
        let mut s = ComplexMatrix::zeros(d * d, d * d);
        for k in kraus {
            check_dim(k, d)?;
            s = &s + &kron(k, &k.conj());
        }
        Self::from_superop(d, s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn chi(&self) -> &ComplexMatrix {
        &self.chi
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn superop(&self) -> &ComplexMatrix {
        &self.superop
    }

    /// Apply to an arbitrary `d x d` operator.
    pub fn apply_matrix(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_dim(rho, self.dim)?;
        Ok(unvec_row_major(
            self.superop.mat_vec(&vec_row_major(rho)),
            self.dim,
        ))
    }

    /// Output may fail to be a state when the map is not positive, so the
    /// raw matrix is returned.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<ComplexMatrix> {
        self.apply_matrix(rho.matrix())
    }

    /// Direct evaluation of `sum chi_mn B_m rho B_n^dagger`; independent of
    /// the superoperator path and used to cross-check it.
    pub fn apply_via_chi(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_dim(rho, self.dim)?;
        let n = self.dim * self.dim;
        let b: Vec<ComplexMatrix> = (0..n).map(|m| self.basis.scaled_element(m)).collect();
        let left: Vec<ComplexMatrix> = b.iter().map(|bm| bm.matmul(rho)).collect();
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for m in 0..n {
            for k in 0..n {
                let c = self.chi[(m, k)];
                if c == ZERO {
                    continue;
                }
                out = &out + &left[m].matmul(&b[k].dagger()).scale(c);
            }
        }
        Ok(out)
    }

    /// `self` after `first`: superoperator product `S_self * S_first`.
    pub fn compose(&self, first: &ProcessRep) -> Result<ProcessRep> {
        if self.dim != first.dim {
            return Err(shape_err(
                format!("dimension {}", self.dim),
                format!("dimension {}", first.dim),
            ));
        }
        Self::from_superop(self.dim, self.superop.matmul(&first.superop))
    }

    /// Convex (or general linear) combination `sum w_k P_k`.
    pub fn linear_combination(terms: &[(f64, &ProcessRep)]) -> Result<ProcessRep> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty combination".into()))?;
        let d = first.dim;
        let mut s = ComplexMatrix::zeros(d * d, d * d);
        for (w, p) in terms {
            if p.dim != d {
                return Err(shape_err(format!("dimension {d}"), format!("dimension {}", p.dim)));
            }
            s = &s + &p.superop.scale_real(*w);
        }
        Self::from_superop(d, s)
    }

    /// Trace-preservation residual `max |tr_out J - I|`.
    pub fn tp_residual(&self) -> f64 {
        let d = self.dim;
        let red = partial_trace_second(&self.choi, d, d).expect("square Choi");
        red.max_abs_diff(&ComplexMatrix::identity(d))
    }

    pub fn is_tp(&self, tol: f64) -> bool {
        self.tp_residual() <= tol
    }

    /// Eigenvalue test of chi. The Hermiticity check is relative to the
    /// largest entry because intermediate maps near non-invertibility carry
    /// large entries.
    pub fn cp_report(&self, tol: f64) -> Result<CpReport> {
        let herm_tol = ToleranceProfile::default().hermitian * 100.0;
        let scale = self.chi.max_abs().max(1.0);
        let dev = self.chi.hermiticity_deviation();
        if dev > herm_tol * scale {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let eig = eig_hermitian(&self.chi.hermitian_part())?;
        let min = eig.min();
        let negative_sum = eig
            .values
            .iter()
            .filter(|&&x| x < -tol)
            .map(|x| -x)
            .sum();
        Ok(CpReport {
            is_cp: min >= -tol,
            min_eigenvalue: min,
            negative_sum,
        })
    }

    pub fn to_record(&self) -> ProcessRecord {
        let n = self.dim * self.dim;
        ProcessRecord {
            dim: self.dim,
            basis_label: self.basis.label,
            chi_re: (0..n)
                .map(|i| (0..n).map(|j| self.chi[(i, j)].re).collect())
                .collect(),
            chi_im: (0..n)
                .map(|i| (0..n).map(|j| self.chi[(i, j)].im).collect())
                .collect(),
        }
    }

    pub fn from_record(rec: &ProcessRecord) -> Result<Self> {
        let basis = OperatorBasis::new(rec.basis_label);
        if basis.dim() != rec.dim {
            return Err(Error::InvalidArgument(format!(
                "basis {:?} does not match dimension {}",
                rec.basis_label, rec.dim
            )));
        }
        let n = rec.dim * rec.dim;
        if rec.chi_re.len() != n
            || rec.chi_im.len() != n
            || rec.chi_re.iter().chain(&rec.chi_im).any(|r| r.len() != n)
        {
            return Err(shape_err(format!("{n}x{n} chi"), "ragged arrays"));
        }
        let chi = ComplexMatrix::from_fn(n, n, |i, j| C64::new(rec.chi_re[i][j], rec.chi_im[i][j]));
        Self::from_chi(basis, chi)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_record(&serde_json::from_str(s)?)
    }
}

/// `P_later o P_earlier`.
pub fn compose(p2: &ProcessRep, p1: &ProcessRep) -> Result<ProcessRep> {
    p2.compose(p1)
}

/// The unique linear `Lambda` with `Lambda o P_t1 = P_t2`, computed as
/// `S(t2) S(t1)^{-1}`.
pub fn intermediate(p_t2: &ProcessRep, p_t1: &ProcessRep) -> Result<ProcessRep> {
    intermediate_with_bound(p_t2, p_t1, ToleranceProfile::default().condition_bound)
}

pub fn intermediate_with_bound(
    p_t2: &ProcessRep,
    p_t1: &ProcessRep,
    condition_bound: f64,
) -> Result<ProcessRep> {
    if p_t2.dim != p_t1.dim {
        return Err(shape_err(
            format!("dimension {}", p_t2.dim),
            format!("dimension {}", p_t1.dim),
        ));
    }
    let inv = inverse_with_bound(&p_t1.superop, condition_bound)?;
    ProcessRep::from_superop(p_t2.dim, p_t2.superop.matmul(&inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::kets;

    fn dephasing_superop(k: C64) -> ComplexMatrix {
        ComplexMatrix::diag(&[ONE, k, k.conj(), ONE])
    }

    fn dephasing(k: f64) -> ProcessRep {
        ProcessRep::from_superop(2, dephasing_superop(C64::new(k, 0.0))).unwrap()
    }

    #[test]
    fn basis_elements_are_orthogonal_with_norm_d() {
        for label in [BasisLabel::SingleQubitM, BasisLabel::TwoQubitE] {
            let b = OperatorBasis::new(label);
            let d = b.dim() as f64;
            for m in 0..b.elements.len() {
                for n in 0..b.elements.len() {
                    let ip = b.scaled_element(m).hs_inner(&b.scaled_element(n));
                    let expected = if m == n { d } else { 0.0 };
                    assert!((ip - C64::new(expected, 0.0)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn two_qubit_index_convention() {
        let b = OperatorBasis::new(BasisLabel::TwoQubitE);
        // m = 6 (index 5): s=1, r=0, l=1, h=0 -> |0><0| (x) |1><1| = |HV><HV|.
        assert_eq!(b.elements[5][(1, 1)], ONE);
        // m = 16: all ones -> |VV><VV|.
        assert_eq!(b.elements[15][(3, 3)], ONE);
        // m = 2 (index 1): s=1 -> |H><H| (x) |H><V| = |HH><HV|.
        assert_eq!(b.elements[1][(0, 1)], ONE);
    }

    #[test]
    fn identity_chi_is_first_unit() {
        let id = ProcessRep::identity(2).unwrap();
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected[(0, 0)] = ONE;
        assert!(id.chi().max_abs_diff(&expected) < 1e-15);
        let id4 = ProcessRep::identity(4).unwrap();
        assert!((id4.chi().trace() - ONE).norm() < 1e-14);
    }

    #[test]
    fn apply_examples() {
        let plus = DensityMatrix::from_ket(&kets::plus()).unwrap();
        let id = ProcessRep::identity(2).unwrap();
        assert!(id.apply(&plus).unwrap().max_abs_diff(plus.matrix()) < 1e-15);
        let full = dephasing(0.0).apply(&plus).unwrap();
        assert!(full.max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
        let half = dephasing(0.5).apply(&plus).unwrap();
        let expected = ComplexMatrix::from_real(2, 2, &[0.5, 0.25, 0.25, 0.5]).unwrap();
        assert!(half.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn chi_and_superop_paths_agree() {
        let p = dephasing(0.3);
        let r = DensityMatrix::from_ket(&kets::r()).unwrap();
        let a = p.apply(&r).unwrap();
        let b = p.apply_via_chi(r.matrix()).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn compose_examples() {
        let id = ProcessRep::identity(2).unwrap();
        let p = dephasing(0.7);
        assert!(id.compose(&p).unwrap().superop().max_abs_diff(p.superop()) < 1e-15);
        let c = dephasing(0.5).compose(&dephasing(0.8)).unwrap();
        assert!(c.superop().max_abs_diff(dephasing(0.4).superop()) < 1e-15);
        let z = ProcessRep::unitary(&pauli::z()).unwrap();
        let zz = z.compose(&z).unwrap();
        assert!(zz.superop().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn intermediate_examples() {
        let p = dephasing(0.4);
        let same = intermediate(&p, &p).unwrap();
        assert!(same.superop().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-14);

        let lam = intermediate(&dephasing(0.6), &dephasing(0.4)).unwrap();
        let rep = lam.cp_report(1e-9).unwrap();
        assert!(!rep.is_cp);
        assert!((rep.min_eigenvalue + 0.25).abs() < 1e-12);
        assert!((rep.negative_sum - 0.25).abs() < 1e-12);

        let lam = intermediate(&dephasing(0.4), &dephasing(0.8)).unwrap();
        assert!(lam.cp_report(1e-9).unwrap().is_cp);

        let singular = dephasing(0.0);
        assert!(matches!(
            intermediate(&dephasing(0.5), &singular),
            Err(Error::NonInvertibleSubprocess { .. })
        ));
    }

    #[test]
    fn conversion_examples() {
        let p = dephasing(1.0);
        assert!(p.superop().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        let basis = OperatorBasis::new(BasisLabel::SingleQubitM);
        let chi = superop_to_chi(&basis, p.superop()).unwrap();
        let back = chi_to_superop(&basis, &chi).unwrap();
        assert!(back.max_abs_diff(p.superop()) < 1e-14);
        assert!((p.choi().trace() - C64::new(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let p = ProcessRep::from_superop(2, dephasing_superop(C64::new(0.3, 0.2))).unwrap();
        let back = ProcessRep::from_json(&p.to_json().unwrap()).unwrap();
        assert!(back.superop().max_abs_diff(p.superop()) < 1e-14);
    }

    #[test]
    fn unsupported_dimension() {
        assert!(matches!(
            ProcessRep::identity(3),
            Err(Error::UnsupportedDimension(3))
        ));
    }
}
