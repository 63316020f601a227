//! Seeded random states, unitaries, channels and trace-preserving non-CP
//! maps for property tests and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::matcore::{eig_hermitian, ComplexMatrix, DensityMatrix, C64};
use crate::procrep::ProcessRep;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(n, n, rng).hermitian_part()
}

pub fn random_ket<R: Rng>(d: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| gaussian_complex(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

pub fn random_pure_state<R: Rng>(d: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::from_ket(&random_ket(d, rng)).expect("normalized ket")
}

/// Hilbert-Schmidt distributed mixed state.
pub fn random_state<R: Rng>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, d, rng);
    let w = g.matmul(&g.dagger());
    let tr = w.trace().re;
    DensityMatrix::from_hermitian_part(&w.scale_real(1.0 / tr)).expect("Wishart matrix is a state")
}

/// Haar-distributed unitary by Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.column(j);
        for q in &cols {
            let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= proj * qi;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / n).collect());
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Random CPTP map with `rank` Kraus operators, `K_i = G_i (G^dagger G)^{-1/2}`.
pub fn random_channel<R: Rng>(d: usize, rank: usize, rng: &mut R) -> Result<ProcessRep> {
    let blocks: Vec<ComplexMatrix> = (0..rank).map(|_| ginibre(d, d, rng)).collect();
    let mut gram = ComplexMatrix::zeros(d, d);
    for g in &blocks {
        gram = &gram + &g.dagger().matmul(g);
    }
    let inv_sqrt = eig_hermitian(&gram.hermitian_part())?.map_values(|x| 1.0 / x.sqrt());
    let kraus: Vec<ComplexMatrix> = blocks.iter().map(|g| g.matmul(&inv_sqrt)).collect();
    ProcessRep::from_kraus(&kraus)
}

/// Random CPTP map close to the identity: `(1 - p) id + p Phi`.
pub fn random_near_identity_channel<R: Rng>(d: usize, p: f64, rng: &mut R) -> Result<ProcessRep> {
    let phi = random_channel(d, 2, rng)?;
    let id = ProcessRep::identity(d)?;
    ProcessRep::linear_combination(&[(1.0 - p, &id), (p, &phi)])
}

/// Trace-preserving, Hermiticity-preserving map `(1 + p) Phi1 - p Phi2` with
/// `Phi1`, `Phi2` random channels; typically not CP for `p > 0`.
pub fn random_tp_map<R: Rng>(d: usize, p: f64, rng: &mut R) -> Result<ProcessRep> {
    let a = random_channel(d, 1 + rng.random_range(0..d), rng)?;
    let b = random_channel(d, 1 + rng.random_range(0..d), rng)?;
    ProcessRep::linear_combination(&[(1.0 + p, &a), (-p, &b)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channels_are_cptp() {
        let mut r = rng(7);
        for d in [2, 4] {
            let p = random_channel(d, 3, &mut r).unwrap();
            assert!(p.tp_residual() < 1e-12);
            assert!(p.cp_report(1e-9).unwrap().is_cp);
            assert!((p.chi().trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(3);
        let u = random_unitary(4, &mut r);
        assert!(u.dagger().matmul(&u).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-13);
    }

    #[test]
    fn tp_map_is_tp() {
        let mut r = rng(11);
        let p = random_tp_map(2, 0.3, &mut r).unwrap();
        assert!(p.tp_residual() < 1e-12);
    }
}
