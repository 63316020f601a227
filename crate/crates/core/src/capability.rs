//! Robustness of a non-CP intermediate map and the tomography-free witness
//! kernel, both as semidefinite programs.
//!
//! Robustness:
//!
//! ```text
//! beta = min tr(X) - 1   s.t.  X >= 0,  X - chi(Lambda) >= 0,  tr X >= 1
//! ```
//!
//! For a unit-trace Hermitian `chi(Lambda)` the optimum equals the sum of
//! the magnitudes of its negative eigenvalues, which is computed
//! independently as `oracle_beta`.
//!
//! Witness kernel: minimize `sum_X tr Lambda~(rho^X_t1)` over Choi matrices
//! `J >= 0` subject to `Lambda~(rho^X_t1) >= rho^X_t2`. A value above the
//! number of states certifies that no CP map connects the observed states.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::matcore::{eig_hermitian, kron, ComplexMatrix, DensityMatrix, ToleranceProfile, ZERO};
use crate::procrep::ProcessRep;
use crate::sdp::{
    identity_map, trace_map, Field, LinearMap, SdpProblem, SolverOptions, SolverStatus,
};

#[derive(Debug, Clone)]
pub struct RobustnessResult {
    pub beta: f64,
    pub chi_cp_witness: ProcessRep,
    pub oracle_beta: f64,
    pub agreement: f64,
    pub gap: f64,
    pub status: SolverStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRecord {
    pub beta: f64,
    pub oracle_beta: f64,
    pub gap: f64,
}

impl RobustnessResult {
    pub fn record(&self) -> RobustnessRecord {
        RobustnessRecord {
            beta: self.beta,
            oracle_beta: self.oracle_beta,
            gap: self.gap,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WitnessResult {
    pub value: f64,
    pub threshold: f64,
    pub violated: bool,
    pub lambda_tilde: ComplexMatrix,
    pub gap: f64,
    pub status: SolverStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub value: f64,
    pub threshold: f64,
    pub violated: bool,
}

impl WitnessResult {
    pub fn record(&self) -> WitnessRecord {
        WitnessRecord {
            value: self.value,
            threshold: self.threshold,
            violated: self.violated,
        }
    }
}

/// Sum of the magnitudes of the negative eigenvalues of chi.
pub fn oracle_beta(lambda: &ProcessRep) -> Result<f64> {
    let eig = eig_hermitian(&lambda.chi().hermitian_part())?;
    Ok(eig.values.iter().filter(|&&x| x < 0.0).fold(0.0, |acc, x| acc - x))
}

pub fn robustness(lambda: &ProcessRep) -> Result<RobustnessResult> {
    robustness_with(lambda, &SolverOptions::default())
}

pub fn robustness_with(lambda: &ProcessRep, opts: &SolverOptions) -> Result<RobustnessResult> {
    let chi = lambda.chi();
    let tr = chi.trace();
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "intermediate map must have unit-trace chi, got {tr}"
        )));
    }
    let dev = chi.hermiticity_deviation();
    if dev > 1e-9 * chi.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let chi_h = chi.hermitian_part();
    let n = chi_h.rows();

    let mut p = SdpProblem::new();
    let x = p.add_variable("chi_cp", n, Field::Complex);
    p.set_objective(x, ComplexMatrix::identity(n))?;
    p.add_psd(x)?;
    p.add_constraint("chi_cp - lambda", vec![(x, identity_map())], chi_h.scale_real(-1.0))?;
    p.add_constraint("tr chi_cp >= 1", vec![(x, trace_map())], ComplexMatrix::diag_real(&[-1.0]))?;
    let sol = p.solve(opts)?.require_optimal()?;

    let xv = sol.value(x).hermitian_part();
    let tr_x = xv.trace().re;
    let beta = (sol.primal_value - 1.0).max(0.0);
    let oracle = oracle_beta(lambda)?;
    let witness = ProcessRep::from_chi(lambda.basis().clone(), xv.scale_real(1.0 / tr_x))?;
    Ok(RobustnessResult {
        beta,
        chi_cp_witness: witness,
        oracle_beta: oracle,
        agreement: (beta - oracle).abs(),
        gap: sol.gap,
        status: sol.status,
        iterations: sol.iterations,
    })
}

/// `beta(Lambda) > detection_tol`.
pub fn identify(lambda: &ProcessRep) -> Result<bool> {
    Ok(robustness(lambda)?.beta > ToleranceProfile::default().detection)
}

/// `K -> sum_ij rho_ij K[(i,k),(j,l)]` for an `r x r` input `rho` and
/// output dimension `d`; equals `tr_in[(rho^T (x) I) K]`.
fn choi_action(rho: &ComplexMatrix, d: usize) -> LinearMap {
    let rho = rho.clone();
    let r = rho.rows();
    Arc::new(move |k: &ComplexMatrix| {
        ComplexMatrix::from_fn(d, d, |a, b| {
            let mut acc = ZERO;
            for i in 0..r {
                for j in 0..r {
                    let c = rho[(i, j)];
                    if c != ZERO {
                        acc += c * k[(i * d + a, j * d + b)];
                    }
                }
            }
            acc
        })
    })
}

/// Orthonormal basis (columns) of the numerical range of a PSD matrix.
fn support_basis(s: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = eig_hermitian(s)?;
    let cutoff = 1e-9 * eig.max().max(f64::MIN_POSITIVE);
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > cutoff).collect();
    Ok(ComplexMatrix::from_fn(s.rows(), keep.len(), |i, j| eig.vectors[(i, keep[j])]))
}

/// Options used for witness solves: tighter than the defaults so that the
/// value sits within 1e-8 of its floor when no violation exists.
pub fn witness_options() -> SolverOptions {
    SolverOptions {
        feas_tol: 1e-9,
        gap_tol: 1e-9,
        ..SolverOptions::default()
    }
}

/// Only the action of `Lambda~` on the support of the `t1` states matters,
/// so the Choi variable lives on `support (x) output`: with `V` an isometry
/// onto that support, inputs become `V^dagger rho V` and the full Choi
/// matrix is `(conj V (x) I) K (conj V (x) I)^dagger`. Without this
/// restriction the unconstrained Choi directions leave the dual without an
/// interior point.
fn witness(pairs: &[(&DensityMatrix, &DensityMatrix)]) -> Result<WitnessResult> {
    let d = pairs[0].0.dim();
    for (a, b) in pairs {
        if a.dim() != d || b.dim() != d {
            return Err(shape_err(format!("dimension {d}"), format!("{} / {}", a.dim(), b.dim())));
        }
    }
    let mut sum_t1 = ComplexMatrix::zeros(d, d);
    for (t1, _) in pairs {
        sum_t1 = &sum_t1 + t1.matrix();
    }
    let v = support_basis(&sum_t1)?;
    let r = v.cols();
    let reduce = |m: &ComplexMatrix| v.dagger().matmul(m).matmul(&v);

    let mut p = SdpProblem::new();
    let kv = p.add_variable("choi", r * d, Field::Complex);
    // Re tr((S'^T (x) I) K).
    p.set_objective(kv, kron(&reduce(&sum_t1).transpose(), &ComplexMatrix::identity(d)))?;
    p.add_psd(kv)?;
    for (idx, (t1, t2)) in pairs.iter().enumerate() {
        p.add_constraint(
            format!("state {idx}"),
            vec![(kv, choi_action(&reduce(t1.matrix()), d))],
            t2.matrix().scale_real(-1.0),
        )?;
    }
    let threshold = pairs.len() as f64;
    // The best iterate is accepted at 1e-8 when the tight solve stalls.
    let sol = p.solve(&witness_options())?;
    let fallback = SolverOptions {
        feas_tol: 1e-8,
        gap_tol: 1e-8,
        ..SolverOptions::default()
    };
    let sol = if sol.status == SolverStatus::Optimal || sol.meets(&fallback) {
        sol
    } else {
        sol.require_optimal()?
    };
    let value = sol.primal_value;
    let lift = kron(&v.conj(), &ComplexMatrix::identity(d));
    let lambda_tilde = lift
        .matmul(&sol.value(kv).hermitian_part())
        .matmul(&lift.dagger());
    Ok(WitnessResult {
        value,
        threshold,
        violated: value > threshold + ToleranceProfile::default().detection,
        lambda_tilde,
        gap: sol.gap,
        status: sol.status,
    })
}

pub fn witness_two(
    rho_a_t1: &DensityMatrix,
    rho_b_t1: &DensityMatrix,
    rho_a_t2: &DensityMatrix,
    rho_b_t2: &DensityMatrix,
) -> Result<WitnessResult> {
    witness(&[(rho_a_t1, rho_a_t2), (rho_b_t1, rho_b_t2)])
}

pub fn witness_one(rho_a_t1: &DensityMatrix, rho_a_t2: &DensityMatrix) -> Result<WitnessResult> {
    witness(&[(rho_a_t1, rho_a_t2)])
}

/// Evolve each initial state with the total maps at `t1` and `t2`.
pub fn evolved_states(
    p_t1: &ProcessRep,
    p_t2: &ProcessRep,
    initial: &DensityMatrix,
) -> Result<(DensityMatrix, DensityMatrix)> {
    let a = DensityMatrix::from_hermitian_part(&p_t1.apply(initial)?)?;
    let b = DensityMatrix::from_hermitian_part(&p_t2.apply(initial)?)?;
    Ok((a, b))
}

/// Witness for two initial states under total maps `p_t1`, `p_t2`.
pub fn witness_two_from_dynamics(
    p_t1: &ProcessRep,
    p_t2: &ProcessRep,
    rho_a0: &DensityMatrix,
    rho_b0: &DensityMatrix,
) -> Result<WitnessResult> {
    let (a1, a2) = evolved_states(p_t1, p_t2, rho_a0)?;
    let (b1, b2) = evolved_states(p_t1, p_t2, rho_b0)?;
    witness_two(&a1, &b1, &a2, &b2)
}

pub fn witness_one_from_dynamics(
    p_t1: &ProcessRep,
    p_t2: &ProcessRep,
    rho_a0: &DensityMatrix,
) -> Result<WitnessResult> {
    let (a1, a2) = evolved_states(p_t1, p_t2, rho_a0)?;
    witness_one(&a1, &a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dephasing::dephasing_by_factor;
    use crate::matcore::{kets, C64};
    use crate::procrep::intermediate;

    fn deph(k: f64) -> ProcessRep {
        dephasing_by_factor(C64::new(k, 0.0)).unwrap()
    }

    #[test]
    fn identity_has_zero_robustness() {
        let r = robustness(&ProcessRep::identity(2).unwrap()).unwrap();
        assert!(r.beta < 1e-7);
        assert!(r.oracle_beta.abs() < 1e-15);
    }

    #[test]
    fn ratio_one_point_five_gives_quarter() {
        let lam = intermediate(&deph(0.6), &deph(0.4)).unwrap();
        let r = robustness(&lam).unwrap();
        assert!((r.beta - 0.25).abs() < 1e-6, "{}", r.beta);
        assert!((r.oracle_beta - 0.25).abs() < 1e-12);
        assert!(r.chi_cp_witness.cp_report(1e-7).unwrap().is_cp);
        assert!(identify(&lam).unwrap());
    }

    #[test]
    fn rejects_non_unit_trace() {
        let s = ComplexMatrix::identity(4).scale_real(2.0);
        let p = ProcessRep::from_superop(2, s).unwrap();
        assert!(robustness(&p).is_err());
    }

    #[test]
    fn witness_h_v_is_two() {
        let h = DensityMatrix::from_ket(&kets::h()).unwrap();
        let v = DensityMatrix::from_ket(&kets::v()).unwrap();
        let w = witness_two_from_dynamics(&deph(0.4), &deph(0.6), &h, &v).unwrap();
        assert!((w.value - 2.0).abs() < 1e-7, "{}", w.value);
        assert!(!w.violated);
    }

    #[test]
    fn witness_detects_coherence_revival() {
        let p = DensityMatrix::from_ket(&kets::plus()).unwrap();
        let m = DensityMatrix::from_ket(&kets::minus()).unwrap();
        let w = witness_two_from_dynamics(&deph(0.4), &deph(0.6), &p, &m).unwrap();
        assert!(w.violated, "{}", w.value);
        let w = witness_two_from_dynamics(&deph(0.8), &deph(0.4), &p, &m).unwrap();
        assert!((w.value - 2.0).abs() < 1e-7, "{}", w.value);
    }

    #[test]
    fn single_state_witness_is_one() {
        let p = DensityMatrix::from_ket(&kets::plus()).unwrap();
        let w = witness_one_from_dynamics(&deph(0.4), &deph(0.6), &p).unwrap();
        assert!((w.value - 1.0).abs() < 1e-7, "{}", w.value);
    }
}
