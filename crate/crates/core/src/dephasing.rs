//! Closed-form dephasing models for polarization qubits.
//!
//! Time is the effective path difference in units of the reference
//! wavelength (780 nm). Single-photon dephasing comes from a Gaussian-mixture
//! frequency spectrum; two-photon dephasing from a bivariate Gaussian joint
//! spectrum with frequency correlation `K`, where the two quartz plates act
//! one after another (`tau1` up to the switchover, then `tau2`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, C64, ONE};
use crate::procrep::{BasisLabel, OperatorBasis, ProcessRep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPeak {
    pub weight: f64,
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinglePhotonModel {
    pub peaks: Vec<SpectrumPeak>,
    pub delta_n: f64,
}

impl SinglePhotonModel {
    pub fn new(peaks: Vec<SpectrumPeak>, delta_n: f64) -> Result<Self> {
        let m = Self { peaks, delta_n };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.peaks.is_empty() {
            return Err(Error::InvalidArgument("spectrum needs at least one peak".into()));
        }
        if self.delta_n == 0.0 || !self.delta_n.is_finite() {
            return Err(Error::InvalidArgument("delta_n must be finite and nonzero".into()));
        }
        for p in &self.peaks {
            if !(p.weight > 0.0 && p.weight <= 1.0) || !(p.width > 0.0) || !p.center.is_finite() {
                return Err(Error::InvalidArgument(format!("invalid spectrum peak {p:?}")));
            }
        }
        let total: f64 = self.peaks.iter().map(|p| p.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "peak weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    /// One Gaussian peak: monotone coherence decay.
    pub fn gaussian_single_peak() -> Self {
        Self {
            peaks: vec![SpectrumPeak {
                weight: 1.0,
                center: 0.0,
                width: 0.003,
            }],
            delta_n: 1.0,
        }
    }

    /// Two equal peaks split by 0.02: `|kappa|` vanishes at `t ~ 157` and
    /// revives afterwards.
    pub fn two_peak() -> Self {
        Self {
            peaks: vec![
                SpectrumPeak {
                    weight: 0.5,
                    center: -0.01,
                    width: 0.003,
                },
                SpectrumPeak {
                    weight: 0.5,
                    center: 0.01,
                    width: 0.003,
                },
            ],
            delta_n: 1.0,
        }
    }

    /// Decoherence factor `sum_k w_k exp(i c_k dn t - s_k^2 dn^2 t^2 / 2)`.
    pub fn kappa(&self, t: f64) -> C64 {
        let dn = self.delta_n;
        self.peaks
            .iter()
            .map(|p| {
                let amp = p.weight * (-0.5 * (p.width * dn * t).powi(2)).exp();
                C64::from_polar(amp, p.center * dn * t)
            })
            .sum()
    }

    pub fn process_at(&self, t: f64) -> Result<ProcessRep> {
        chi_single(self.kappa(t))
    }
}

pub fn kappa_single(m: &SinglePhotonModel, t: f64) -> C64 {
    m.kappa(t)
}

/// Single-qubit dephasing with process matrix (basis `I, X, -iY, Z`)
///
/// ```text
/// chi_11 = (2 + k + k*)/4   chi_14 = (k - k*)/4
/// chi_41 = (k* - k)/4       chi_44 = (2 - k - k*)/4
/// ```
///
/// The map multiplies the `|H><V|` coherence by `k*`.
pub fn chi_single(kappa: C64) -> Result<ProcessRep> {
    if kappa.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "|kappa| = {} exceeds 1",
            kappa.norm()
        )));
    }
    let k = kappa;
    let kc = kappa.conj();
    let mut chi = ComplexMatrix::zeros(4, 4);
    chi[(0, 0)] = (C64::new(2.0, 0.0) + k + kc) * 0.25;
    chi[(0, 3)] = (k - kc) * 0.25;
    chi[(3, 0)] = (kc - k) * 0.25;
    chi[(3, 3)] = (C64::new(2.0, 0.0) - k - kc) * 0.25;
    ProcessRep::from_chi(OperatorBasis::new(BasisLabel::SingleQubitM), chi)
}

/// Single-qubit dephasing that multiplies `|H><V|` by `kappa`.
pub fn dephasing_by_factor(kappa: C64) -> Result<ProcessRep> {
    ProcessRep::from_superop(2, ComplexMatrix::diag(&[ONE, kappa, kappa.conj(), ONE]))
}

/// Sequential activation of the two quartz plates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub switchover: f64,
}

impl Schedule {
    /// `(tau1, tau2) = (min(t, T1), max(0, t - T1))`.
    pub fn split(&self, t: f64) -> (f64, f64) {
        (t.min(self.switchover), (t - self.switchover).max(0.0))
    }
}

pub const DEFAULT_SWITCHOVER: f64 = 199.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonModel {
    #[serde(rename = "K")]
    pub k: f64,
    pub omega0: f64,
    pub delta_fwhm: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub delta_n: f64,
    #[serde(default = "default_switchover")]
    pub switchover: f64,
}

fn default_switchover() -> f64 {
    DEFAULT_SWITCHOVER
}

pub const PRESET_NAMES: [&str; 4] = ["cond_I", "cond_II", "cond_III", "cond_IV"];

impl TwoPhotonModel {
    pub fn new(k: f64, omega0: f64, delta_fwhm: f64, c: f64, delta_n: f64) -> Result<Self> {
        let m = Self {
            k,
            omega0,
            delta_fwhm,
            c,
            delta_n,
            switchover: DEFAULT_SWITCHOVER,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.abs() <= 1.0) {
            return Err(Error::InvalidArgument(format!("|K| = {} exceeds 1", self.k.abs())));
        }
        if !(self.c > 0.0) || !(self.delta_fwhm > 0.0) || !(self.switchover > 0.0) {
            return Err(Error::InvalidArgument(
                "C, delta_fwhm and switchover must be positive".into(),
            ));
        }
        if self.delta_n == 0.0 || !self.delta_n.is_finite() || !self.omega0.is_finite() {
            return Err(Error::InvalidArgument("delta_n must be finite and nonzero".into()));
        }
        Ok(())
    }

    pub fn cond_i() -> Self {
        Self::table_row(-0.9174, 389.7235, 0.1799, 0.0233, 0.0444)
    }

    pub fn cond_ii() -> Self {
        Self::table_row(-0.6655, 389.7692, 0.5181, 0.1950, 0.0156)
    }

    pub fn cond_iii() -> Self {
        Self::table_row(-0.5564, 389.7436, 0.7305, 0.3844, 0.0115)
    }

    pub fn cond_iv() -> Self {
        Self::table_row(-0.1645, 390.0128, 1.8885, 2.5760, 0.0045)
    }

    fn table_row(k: f64, omega0: f64, delta_fwhm: f64, c: f64, delta_n: f64) -> Self {
        Self {
            k,
            omega0,
            delta_fwhm,
            c,
            delta_n,
            switchover: DEFAULT_SWITCHOVER,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "cond_I" => Some(Self::cond_i()),
            "cond_II" => Some(Self::cond_ii()),
            "cond_III" => Some(Self::cond_iii()),
            "cond_IV" => Some(Self::cond_iv()),
            _ => None,
        }
    }

    pub fn presets() -> Vec<(&'static str, Self)> {
        PRESET_NAMES
            .iter()
            .map(|&n| (n, Self::preset(n).expect("known preset")))
            .collect()
    }

    /// `Y~ = dn^2 C / 2`.
    pub fn y_tilde(&self) -> f64 {
        0.5 * self.delta_n * self.delta_n * self.c
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            switchover: self.switchover,
        }
    }

    /// End of the second plate's window.
    pub fn t_max(&self) -> f64 {
        2.0 * self.switchover
    }

    /// `G = exp(1/2 [i w0 dn (t1 + t2) - C dn^2 (t1^2 + t2^2 + 2 K t1 t2)])`.
    pub fn g(&self, tau1: f64, tau2: f64) -> C64 {
        let dn = self.delta_n;
        let re = -self.c * dn * dn * (tau1 * tau1 + tau2 * tau2 + 2.0 * self.k * tau1 * tau2);
        let im = self.omega0 * dn * (tau1 + tau2);
        C64::new(0.5 * re, 0.5 * im).exp()
    }

    /// Coherence multipliers over `(HH, HV, VH, VV)`.
    pub fn factor_matrix(&self, tau1: f64, tau2: f64) -> ComplexMatrix {
        let k1 = self.g(tau1, 0.0);
        let k2 = self.g(0.0, tau2);
        let k12 = self.g(tau1, tau2);
        let l12 = self.g(tau1, -tau2);
        let mut f = ComplexMatrix::identity(4);
        let upper = [
            (0, 1, k2),
            (2, 3, k2),
            (0, 2, k1),
            (1, 3, k1),
            (0, 3, k12),
            (1, 2, l12),
        ];
        for (a, b, v) in upper {
            f[(a, b)] = v;
            f[(b, a)] = v.conj();
        }
        f
    }

    pub fn process_at(&self, t: f64) -> Result<ProcessRep> {
        let (t1, t2) = self.schedule().split(t);
        chi_two(self, t1, t2)
    }

    /// Photon-1 marginal dynamics at total time `t`.
    pub fn local_process_at(&self, t: f64) -> Result<ProcessRep> {
        let (t1, _) = self.schedule().split(t);
        chi_local(self, t1)
    }
}

pub fn g_joint(m: &TwoPhotonModel, tau1: f64, tau2: f64) -> C64 {
    m.g(tau1, tau2)
}

/// Two-qubit correlated dephasing in the matrix-unit basis. Only the
/// entries between the projector indices 1, 6, 11, 16 are nonzero; they are
/// the coherence multipliers divided by 4.
pub fn chi_two(m: &TwoPhotonModel, tau1: f64, tau2: f64) -> Result<ProcessRep> {
    if !(tau1 >= 0.0) || !(tau2 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "plate times must be nonnegative, got ({tau1}, {tau2})"
        )));
    }
    let f = m.factor_matrix(tau1, tau2);
    let idx = [0usize, 5, 10, 15];
    let mut chi = ComplexMatrix::zeros(16, 16);
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            chi[(ia, ib)] = f[(a, b)] * 0.25;
        }
    }
    ProcessRep::from_chi(OperatorBasis::new(BasisLabel::TwoQubitE), chi)
}

/// Local photon-1 map `1/2 [[1, 0, 0, k1], 0, 0, [k1*, 0, 0, 1]]` in the
/// matrix-unit layout, re-expressed in the `I, X, -iY, Z` basis.
pub fn chi_local(m: &TwoPhotonModel, tau1: f64) -> Result<ProcessRep> {
    if !(tau1 >= 0.0) {
        return Err(Error::InvalidArgument(format!("tau1 must be nonnegative, got {tau1}")));
    }
    dephasing_by_factor(m.g(tau1, 0.0))
}

/// Either physical model, for code that handles both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DephasingModel {
    SinglePhoton(SinglePhotonModel),
    TwoPhoton(TwoPhotonModel),
}

impl DephasingModel {
    pub fn dim(&self) -> usize {
        match self {
            Self::SinglePhoton(_) => 2,
            Self::TwoPhoton(_) => 4,
        }
    }

    pub fn process_at(&self, t: f64) -> Result<ProcessRep> {
        match self {
            Self::SinglePhoton(m) => m.process_at(t),
            Self::TwoPhoton(m) => m.process_at(t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::SinglePhoton(m) => m.validate(),
            Self::TwoPhoton(m) => m.validate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{kets, partial_trace_second, DensityMatrix, ZERO};

    #[test]
    fn kappa_examples() {
        let m = SinglePhotonModel::gaussian_single_peak();
        assert!((m.kappa(0.0) - ONE).norm() < 1e-15);
        let t = 1.0 / (0.003 * m.delta_n);
        assert!((m.kappa(t).norm() - (-0.5f64).exp()).abs() < 1e-12);
        let two = SinglePhotonModel::two_peak();
        for &t in &[10.0f64, 100.0, 157.0, 250.0] {
            let expected = (-0.5 * (0.003 * t).powi(2)).exp() * (0.01 * t).cos().abs();
            assert!((two.kappa(t).norm() - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn chi_single_examples() {
        let id = chi_single(ONE).unwrap();
        assert!(id.superop().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        let full = chi_single(ZERO).unwrap();
        assert!(full.chi().max_abs_diff(&ComplexMatrix::diag_real(&[0.5, 0.0, 0.0, 0.5])) < 1e-15);
        let i = chi_single(C64::new(0.0, 1.0)).unwrap();
        assert!((i.chi()[(0, 3)] - C64::new(0.0, 0.5)).norm() < 1e-15);
        assert!((i.chi()[(3, 0)] - C64::new(0.0, -0.5)).norm() < 1e-15);
        assert!((i.chi()[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-15);
        assert!(chi_single(C64::new(1.1, 0.0)).is_err());
    }

    #[test]
    fn chi_single_multiplies_coherence_by_conjugate() {
        let k = C64::new(0.3, 0.4);
        let a = chi_single(k).unwrap();
        let b = dephasing_by_factor(k.conj()).unwrap();
        assert!(a.superop().max_abs_diff(b.superop()) < 1e-15);
    }

    #[test]
    fn g_joint_examples() {
        let m = TwoPhotonModel::cond_i();
        assert!((m.g(0.0, 0.0) - ONE).norm() < 1e-15);
        assert!((m.g(199.0, 0.0).norm() - 0.4027).abs() < 5e-4);
        assert!((m.g(199.0, 199.0).norm() - 0.8605).abs() < 5e-4);
        assert!((m.g(199.0, -199.0).norm() - 0.0306).abs() < 5e-4);
    }

    #[test]
    fn chi_two_examples() {
        let m = TwoPhotonModel::cond_i();
        let id = chi_two(&m, 0.0, 0.0).unwrap();
        assert!(id.superop().max_abs_diff(&ComplexMatrix::identity(16)) < 1e-14);
        let p = chi_two(&m, 199.0, 199.0).unwrap();
        assert!(p.tp_residual() < 1e-12);
        assert!(p.cp_report(1e-9).unwrap().is_cp);

        let phi = kets::superpose(&kets::tensor(&kets::h(), &kets::h()), &kets::tensor(&kets::v(), &kets::v()), 1.0);
        let rho = DensityMatrix::from_ket(&phi).unwrap();
        let out = m.process_at(199.0).unwrap().apply(&rho).unwrap();
        assert!((out[(0, 3)].norm() - m.g(199.0, 0.0).norm() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn local_matches_marginal_of_global() {
        let m = TwoPhotonModel::cond_ii();
        let global = chi_two(&m, 120.0, 0.0).unwrap();
        let local = chi_local(&m, 120.0).unwrap();
        let plus = DensityMatrix::from_ket(&kets::plus()).unwrap();
        let r = DensityMatrix::from_ket(&kets::r()).unwrap();
        let out = global.apply(&plus.kron(&r)).unwrap();
        let marginal = partial_trace_second(&out, 2, 2).unwrap();
        let direct = local.apply(&plus).unwrap();
        assert!(marginal.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn schedule_split() {
        let s = Schedule { switchover: 199.0 };
        assert_eq!(s.split(100.0), (100.0, 0.0));
        assert_eq!(s.split(300.0), (199.0, 101.0));
    }
}
