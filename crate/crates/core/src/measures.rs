//! Non-Markovianity measures over a dynamics family `t -> E_t`:
//! the integrated robustness `N_beta`, the BLP trace-distance measure and
//! the RHP Choi-norm measure.
//!
//! Grid points are evaluated in parallel; results are assembled in grid
//! order so the output does not depend on scheduling.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capability::{oracle_beta, robustness};
use crate::catalog;
use crate::dephasing::{DephasingModel, SinglePhotonModel, TwoPhotonModel};
use crate::error::{Error, Result};
use crate::matcore::{
    trace_distance_matrices, trace_norm_hermitian, DensityMatrix, ToleranceProfile,
    C64,
};
use crate::procrep::{intermediate_with_bound, ProcessRep};

pub type Evaluator = Arc<dyn Fn(f64) -> Result<ProcessRep> + Send + Sync>;

/// Refinement cap: `2^10` intervals.
pub const MAX_GRID_POINTS: usize = 1025;
pub const DEFAULT_INTERVALS: usize = 32;
/// Window used for single-photon families unless given explicitly; covers
/// the first zero and revival of the two-peak model.
pub const SINGLE_PHOTON_T_MAX: f64 = 400.0;

#[derive(Clone)]
pub struct DynamicsFamily {
    evaluator: Evaluator,
    dim: usize,
    t_max: f64,
    grid: Vec<f64>,
}

impl fmt::Debug for DynamicsFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicsFamily")
            .field("dim", &self.dim)
            .field("t_max", &self.t_max)
            .field("grid_size", &self.grid.len())
            .finish()
    }
}

fn uniform_grid(t_max: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals)
        .map(|i| t_max * i as f64 / intervals as f64)
        .collect()
}

impl DynamicsFamily {
    pub fn new(dim: usize, t_max: f64, grid: Vec<f64>, evaluator: Evaluator) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
        }
        let fam = Self {
            evaluator,
            dim,
            t_max,
            grid: Vec::new(),
        };
        let e0 = fam.process_at(0.0)?;
        let id = ProcessRep::identity(dim)?;
        let dev = e0.superop().max_abs_diff(id.superop());
        if dev > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "evaluator(0) deviates from the identity by {dev:e}"
            )));
        }
        fam.with_grid(grid)
    }

    pub fn uniform(dim: usize, t_max: f64, intervals: usize, evaluator: Evaluator) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidArgument("grid needs at least one interval".into()));
        }
        Self::new(dim, t_max, uniform_grid(t_max, intervals), evaluator)
    }

    pub fn single_photon(m: &SinglePhotonModel, t_max: f64) -> Result<Self> {
        m.validate()?;
        let m = m.clone();
        Self::uniform(2, t_max, DEFAULT_INTERVALS, Arc::new(move |t| m.process_at(t)))
    }

    /// Global two-photon dynamics over both plate windows.
    pub fn two_photon(m: &TwoPhotonModel) -> Result<Self> {
        m.validate()?;
        let t_max = m.t_max();
        let m = *m;
        Self::uniform(4, t_max, DEFAULT_INTERVALS, Arc::new(move |t| m.process_at(t)))
    }

    /// Photon-1 marginal of the two-photon dynamics.
    pub fn two_photon_local(m: &TwoPhotonModel) -> Result<Self> {
        m.validate()?;
        let t_max = m.t_max();
        let m = *m;
        Self::uniform(2, t_max, DEFAULT_INTERVALS, Arc::new(move |t| m.local_process_at(t)))
    }

    pub fn from_model(model: &DephasingModel, t_max: Option<f64>) -> Result<Self> {
        let fam = match model {
            DephasingModel::SinglePhoton(m) => {
                Self::single_photon(m, t_max.unwrap_or(SINGLE_PHOTON_T_MAX))?
            }
            DephasingModel::TwoPhoton(m) => Self::two_photon(m)?,
        };
        match t_max {
            Some(t) if t != fam.t_max => {
                let ev = fam.evaluator.clone();
                Self::uniform(fam.dim, t, DEFAULT_INTERVALS, ev)
            }
            _ => Ok(fam),
        }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::InvalidArgument("grid is empty".into()));
        }
        for (i, &t) in grid.iter().enumerate() {
            if !(0.0..=self.t_max).contains(&t) {
                return Err(Error::InvalidArgument(format!(
                    "grid point {t} outside [0, {}]",
                    self.t_max
                )));
            }
            if i > 0 && t <= grid[i - 1] {
                return Err(Error::InvalidArgument(format!(
                    "grid not strictly increasing at index {i}"
                )));
            }
        }
        self.grid = grid;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Smallest spacing of the grid.
    pub fn grid_step(&self) -> f64 {
        self.grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn process_at(&self, t: f64) -> Result<ProcessRep> {
        let p = (self.evaluator)(t)?;
        if p.dim() != self.dim {
            return Err(Error::Shape {
                expected: format!("dimension {}", self.dim),
                found: format!("dimension {}", p.dim()),
            });
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeasureKind {
    NBeta,
    NBlp,
    NRhp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub kind: MeasureKind,
    pub value: f64,
    pub grid_size: usize,
    pub discretization_note: String,
    pub converged: bool,
    /// Grid points dropped because the subprocess was not invertible.
    pub excluded: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetaMethod {
    /// Robustness SDP.
    Sdp,
    /// Negative-eigenvalue sum of chi.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureOptions {
    pub rel_tol: f64,
    pub max_points: usize,
    pub beta_method: BetaMethod,
    pub condition_bound: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-3,
            max_points: MAX_GRID_POINTS,
            beta_method: BetaMethod::Sdp,
            condition_bound: ToleranceProfile::default().condition_bound,
        }
    }
}

struct Adaptive {
    value: f64,
    points: usize,
    converged: bool,
    excluded: Vec<f64>,
}

fn refine(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.extend(grid.last());
    out
}

fn close(a: f64, b: f64, rel_tol: f64) -> bool {
    let s = a.abs().max(b.abs());
    s < 1e-12 || (a - b).abs() <= rel_tol * s
}

/// Halve the step until the measure changes by less than `rel_tol`
/// (relative) or the point cap is reached. `sample` returns `None` for
/// excluded points.
fn adaptive<S, M>(initial: Vec<f64>, opts: &MeasureOptions, sample: S, measure: M) -> Result<Adaptive>
where
    S: Fn(f64) -> Result<Option<f64>> + Sync,
    M: Fn(&[(f64, f64)]) -> f64,
{
    let mut cache: HashMap<u64, Option<f64>> = HashMap::new();
    let mut grid = initial;
    let mut prev: Option<f64> = None;
    loop {
        let missing: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|t| !cache.contains_key(&t.to_bits()))
            .collect();
        let vals: Vec<Result<Option<f64>>> = missing.par_iter().map(|&t| sample(t)).collect();
        for (t, v) in missing.iter().zip(vals) {
            cache.insert(t.to_bits(), v?);
        }
        let samples: Vec<(f64, f64)> = grid
            .iter()
            .filter_map(|t| cache[&t.to_bits()].map(|v| (*t, v)))
            .collect();
        let value = measure(&samples);
        let converged = grid.len() < 2 || prev.is_some_and(|p| close(p, value, opts.rel_tol));
        if converged || 2 * grid.len() - 1 > opts.max_points {
            let excluded = grid
                .iter()
                .copied()
                .filter(|t| cache[&t.to_bits()].is_none())
                .collect();
            return Ok(Adaptive {
                value,
                points: grid.len(),
                converged,
                excluded,
            });
        }
        prev = Some(value);
        grid = refine(&grid);
    }
}

fn trapezoid(samples: &[(f64, f64)]) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}

fn positive_increments(samples: &[(f64, f64)]) -> f64 {
    samples.windows(2).map(|w| (w[1].1 - w[0].1).max(0.0)).sum()
}

fn excluded_note(excluded: &[f64]) -> String {
    if excluded.is_empty() {
        String::new()
    } else {
        format!("; {} non-invertible points excluded at {excluded:?}", excluded.len())
    }
}

fn convergence_note(a: &Adaptive, opts: &MeasureOptions) -> String {
    if a.converged {
        format!("converged to relative change < {:e}", opts.rel_tol)
    } else {
        format!("not converged at the {}-point cap", opts.max_points)
    }
}

fn beta_of(lambda: &ProcessRep, method: BetaMethod) -> Result<f64> {
    match method {
        BetaMethod::Sdp => Ok(robustness(lambda)?.beta),
        BetaMethod::Spectral => oracle_beta(lambda),
    }
}

/// `Lambda_{t2,t}`, or `None` when `E_t` is not invertible.
fn intermediate_at(
    f: &DynamicsFamily,
    p_t2: &ProcessRep,
    t: f64,
    condition_bound: f64,
) -> Result<Option<ProcessRep>> {
    let p_t = f.process_at(t)?;
    match intermediate_with_bound(p_t2, &p_t, condition_bound) {
        Ok(l) => Ok(Some(l)),
        Err(Error::NonInvertibleSubprocess { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn check_t2(f: &DynamicsFamily, t2: f64) -> Result<()> {
    if !(t2 > 0.0 && t2 <= f.t_max) {
        return Err(Error::InvalidArgument(format!(
            "t2 = {t2} outside (0, {}]",
            f.t_max
        )));
    }
    Ok(())
}

/// Division points used for `t2`: `0`, the family grid inside `(0, t2)`, and `t2`.
fn division_grid(f: &DynamicsFamily, t2: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(f.grid.iter().copied().filter(|&t| t > 0.0 && t < t2));
    g.push(t2);
    g
}

/// `beta(Lambda_{t2,t1})` for every division point `t1` of the family grid below `t2`.
pub fn beta_series(f: &DynamicsFamily, t2: f64, method: BetaMethod) -> Result<Vec<(f64, Option<f64>)>> {
    check_t2(f, t2)?;
    let p_t2 = f.process_at(t2)?;
    let bound = ToleranceProfile::default().condition_bound;
    division_grid(f, t2)
        .par_iter()
        .map(|&t| {
            Ok((
                t,
                match intermediate_at(f, &p_t2, t, bound)? {
                    Some(l) => Some(beta_of(&l, method)?),
                    None => None,
                },
            ))
        })
        .collect()
}

/// `N_beta = int_0^t2 beta(Lambda_{t2,t}) dt`.
pub fn n_beta(f: &DynamicsFamily, t2: f64) -> Result<MeasureReport> {
    n_beta_with(f, t2, &MeasureOptions::default())
}

pub fn n_beta_with(f: &DynamicsFamily, t2: f64, opts: &MeasureOptions) -> Result<MeasureReport> {
    check_t2(f, t2)?;
    let p_t2 = f.process_at(t2)?;
    let sample = |t: f64| -> Result<Option<f64>> {
        if t == t2 {
            return Ok(Some(0.0));
        }
        match intermediate_at(f, &p_t2, t, opts.condition_bound)? {
            Some(l) => Ok(Some(beta_of(&l, opts.beta_method)?)),
            None => Ok(None),
        }
    };
    let a = adaptive(division_grid(f, t2), opts, sample, trapezoid)?;
    Ok(MeasureReport {
        kind: MeasureKind::NBeta,
        value: a.value.max(0.0),
        grid_size: a.points,
        discretization_note: format!(
            "composite trapezoid over {} division points on [0, {t2}], beta via {:?}; {}{}",
            a.points,
            opts.beta_method,
            convergence_note(&a, opts),
            excluded_note(&a.excluded)
        ),
        converged: a.converged,
        excluded: a.excluded,
    })
}

fn check_pair(f: &DynamicsFamily, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<()> {
    for r in [rho1, rho2] {
        if r.dim() != f.dim {
            return Err(Error::Shape {
                expected: format!("{0}x{0} state", f.dim),
                found: format!("{0}x{0} state", r.dim()),
            });
        }
    }
    Ok(())
}

fn d_at(f: &DynamicsFamily, t: f64, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    let p = f.process_at(t)?;
    trace_distance_matrices(&p.apply(rho1)?, &p.apply(rho2)?)
}

/// `D(t)` between the evolved states over the family grid.
pub fn d_trace_dynamics(
    f: &DynamicsFamily,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
) -> Result<Vec<(f64, f64)>> {
    check_pair(f, rho1, rho2)?;
    f.grid
        .par_iter()
        .map(|&t| Ok((t, d_at(f, t, rho1, rho2)?)))
        .collect()
}

/// Trace distance of `|phi+>` and `|phi->` under the two-photon model,
/// `exp(-dn^2 C (tau1^2 + tau2^2 + 2 K tau1 tau2) / 2)`. For the
/// anti-correlated regime `K <= 0` this is the familiar
/// `exp(-dn^2 C (tau1^2 + tau2^2 - 2|K| tau1 tau2) / 2)`.
pub fn d_closed_form(m: &TwoPhotonModel, tau1: f64, tau2: f64) -> f64 {
    let q = tau1 * tau1 + tau2 * tau2 + 2.0 * m.k * tau1 * tau2;
    (-0.5 * m.delta_n * m.delta_n * m.c * q).exp()
}

/// Sum of the positive increments of `D(t)` over `[0, t_max]` for one pair.
pub fn n_blp(f: &DynamicsFamily, rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<MeasureReport> {
    n_blp_with(f, rho1, rho2, &MeasureOptions::default())
}

pub fn n_blp_with(
    f: &DynamicsFamily,
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    opts: &MeasureOptions,
) -> Result<MeasureReport> {
    check_pair(f, rho1, rho2)?;
    let mut initial = f.grid.clone();
    if initial[0] > 0.0 {
        initial.insert(0, 0.0);
    }
    let sample = |t: f64| d_at(f, t, rho1, rho2).map(Some);
    let a = adaptive(initial, opts, sample, positive_increments)?;
    Ok(MeasureReport {
        kind: MeasureKind::NBlp,
        value: a.value,
        grid_size: a.points,
        discretization_note: format!(
            "positive increments of D over {} points on [0, {}] (integral truncated at t_max); {}",
            a.points,
            f.t_max,
            convergence_note(&a, opts)
        ),
        converged: a.converged,
        excluded: a.excluded,
    })
}

#[derive(Debug, Clone)]
pub struct StatePair {
    pub label_a: String,
    pub label_b: String,
    pub rho_a: DensityMatrix,
    pub rho_b: DensityMatrix,
}

impl StatePair {
    pub fn from_labels(a: &str, b: &str) -> Result<Self> {
        Ok(Self {
            label_a: a.to_string(),
            label_b: b.to_string(),
            rho_a: catalog::state(a)?,
            rho_b: catalog::state(b)?,
        })
    }
}

#[derive(Debug, Clone)]
pub enum PairGrid {
    /// Antipodal single-qubit pure states on a polar/azimuthal grid,
    /// `theta = i pi / n_theta`, `phi = 2 pi j / n_phi`.
    Bloch { n_theta: usize, n_phi: usize },
    Catalog(Vec<StatePair>),
}

const TWO_QUBIT_BLP_PAIRS: [(&str, &str); 12] = [
    ("phi+", "phi-"),
    ("phi+", "psi+"),
    ("phi+", "psi-"),
    ("phi-", "psi+"),
    ("phi-", "psi-"),
    ("psi+", "psi-"),
    ("HH", "VV"),
    ("HV", "VH"),
    ("++", "--"),
    ("+-", "-+"),
    ("RR", "LL"),
    ("RL", "LR"),
];

impl PairGrid {
    /// 12x12 Bloch grid for one qubit; Bell and product pairs for two.
    pub fn default_for_dim(dim: usize) -> Result<Self> {
        match dim {
            2 => Ok(Self::Bloch {
                n_theta: 12,
                n_phi: 12,
            }),
            4 => Ok(Self::Catalog(
                TWO_QUBIT_BLP_PAIRS
                    .iter()
                    .map(|(a, b)| StatePair::from_labels(a, b))
                    .collect::<Result<_>>()?,
            )),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn pairs(&self) -> Result<Vec<StatePair>> {
        match self {
            Self::Catalog(p) => Ok(p.clone()),
            Self::Bloch { n_theta, n_phi } => {
                let mut out = Vec::with_capacity(n_theta * n_phi);
                for i in 0..*n_theta {
                    let theta = PI * i as f64 / *n_theta as f64;
                    for j in 0..*n_phi {
                        let phi = 2.0 * PI * j as f64 / *n_phi as f64;
                        let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
                        let e = C64::from_polar(1.0, phi);
                        let a = [C64::new(c, 0.0), e * s];
                        let b = [C64::new(s, 0.0), -e * c];
                        out.push(StatePair {
                            label_a: format!("bloch(theta={theta:.4},phi={phi:.4})"),
                            label_b: "antipode".into(),
                            rho_a: DensityMatrix::from_ket(&a)?,
                            rho_b: DensityMatrix::from_ket(&b)?,
                        });
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Exhaustive BLP evaluation over a pair grid; the best pair gives a lower
/// bound on the maximized measure. Ties keep the first pair in grid order.
pub fn blp_pair_search(f: &DynamicsFamily, grid: &PairGrid) -> Result<(StatePair, MeasureReport)> {
    let pairs = grid.pairs()?;
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("pair grid is empty".into()));
    }
    let reports: Vec<MeasureReport> = pairs
        .par_iter()
        .map(|p| n_blp(f, &p.rho_a, &p.rho_b))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in reports.iter().enumerate() {
        if r.value > reports[best].value + 1e-12 {
            best = i;
        }
    }
    let mut report = reports[best].clone();
    report.discretization_note = format!(
        "best of {} pairs (lower bound on the maximum over all pairs); {}",
        pairs.len(),
        report.discretization_note
    );
    Ok((pairs[best].clone(), report))
}

/// RHP integrand `(||(Lambda_{t+eps,t} (x) id)(|Psi><Psi|)||_1 - 1) / eps` at
/// every grid point with `t + eps <= t_max`.
pub fn rhp_series(f: &DynamicsFamily, eps: f64) -> Result<Vec<(f64, Option<f64>)>> {
    if !(eps > 0.0 && eps <= f.t_max) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} outside (0, {}]",
            f.t_max
        )));
    }
    let bound = ToleranceProfile::default().condition_bound;
    let d = f.dim as f64;
    let points: Vec<f64> = f
        .grid
        .iter()
        .copied()
        .filter(|&t| t + eps <= f.t_max * (1.0 + 1e-12))
        .collect();
    points
        .par_iter()
        .map(|&t| {
            let later = f.process_at((t + eps).min(f.t_max))?;
            let value = match intermediate_at(f, &later, t, bound)? {
                Some(l) => {
                    let norm = trace_norm_hermitian(&l.choi().hermitian_part().scale_real(1.0 / d))?;
                    Some((norm - 1.0).max(0.0) / eps)
                }
                None => None,
            };
            Ok((t, value))
        })
        .collect()
}

/// `N_RHP` with step `eps` (default: one grid step), as a left Riemann sum
/// of the integrand over the grid.
pub fn n_rhp(f: &DynamicsFamily, eps: Option<f64>) -> Result<MeasureReport> {
    let eps = eps.unwrap_or_else(|| f.grid_step());
    let series = rhp_series(f, eps)?;
    let mut value = 0.0;
    let mut excluded = Vec::new();
    for (k, &(t, v)) in series.iter().enumerate() {
        let w = f.grid.get(k + 1).map_or(eps, |&next| next - t);
        match v {
            Some(v) => value += v * w,
            None => excluded.push(t),
        }
    }
    Ok(MeasureReport {
        kind: MeasureKind::NRhp,
        value,
        grid_size: series.len(),
        discretization_note: format!(
            "eps = {eps} (finite stand-in for the limit eps -> 0), left Riemann sum over {} points, integral truncated at t_max = {}{}",
            series.len(),
            f.t_max,
            excluded_note(&excluded)
        ),
        converged: true,
        excluded,
    })
}

/// Write `(t, value)` rows under the header `t_lambda0,value`.
pub fn write_series_csv<W: Write>(w: W, series: &[(f64, f64)]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t_lambda0", "value"]).map_err(std::io::Error::from)?;
    for (t, v) in series {
        wr.write_record([t.to_string(), v.to_string()])
            .map_err(std::io::Error::from)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dephasing::PRESET_NAMES;

    fn phi_pair() -> (DensityMatrix, DensityMatrix) {
        (catalog::state("phi+").unwrap(), catalog::state("phi-").unwrap())
    }

    #[test]
    fn closed_form_examples() {
        let m = TwoPhotonModel::cond_i();
        assert!((d_closed_form(&m, 0.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((d_closed_form(&m, 199.0, 0.0) - 0.4027).abs() < 1e-4);
        let iv = TwoPhotonModel::cond_iv();
        let k = iv.k.abs();
        let expect = (-iv.y_tilde() * 39601.0 * (1.0 - k * k)).exp();
        assert!((d_closed_form(&iv, 199.0, k * 199.0) - expect).abs() < 1e-14);
        assert!((expect - 0.366).abs() < 1e-3);
    }

    #[test]
    fn closed_form_matches_process_path() {
        let (a, b) = phi_pair();
        for name in PRESET_NAMES {
            let m = TwoPhotonModel::preset(name).unwrap();
            let f = DynamicsFamily::two_photon(&m).unwrap();
            for (t, d) in d_trace_dynamics(&f, &a, &b).unwrap() {
                let (t1, t2) = m.schedule().split(t);
                assert!((d - d_closed_form(&m, t1, t2)).abs() < 1e-10);
                assert!((d_closed_form(&m, t1, t2) - m.g(t1, t2).norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn d_dynamics_examples() {
        let (a, b) = phi_pair();
        let m = TwoPhotonModel::cond_i();
        let f = DynamicsFamily::two_photon(&m).unwrap();
        assert!((d_at(&f, 0.0, &a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert!((d_at(&f, 199.0, &a, &b).unwrap() - 0.4027).abs() < 1e-4);
        let peak = 199.0 + m.k.abs() * 199.0;
        assert!((d_at(&f, peak, &a, &b).unwrap() - 0.8659).abs() < 1e-4);
    }

    #[test]
    fn blp_condition_one() {
        let (a, b) = phi_pair();
        let f = DynamicsFamily::two_photon(&TwoPhotonModel::cond_i()).unwrap();
        let r = n_blp(&f, &a, &b).unwrap();
        assert!((r.value - 0.46).abs() < 0.02, "{r:?}");
        assert!(r.converged);
    }

    #[test]
    fn markovian_family_is_null() {
        let f = DynamicsFamily::single_photon(&SinglePhotonModel::gaussian_single_peak(), 280.0)
            .unwrap();
        let r = n_beta(&f, 280.0).unwrap();
        assert!(r.value <= 1e-6, "{r:?}");
        let plus = catalog::state("+").unwrap();
        let minus = catalog::state("-").unwrap();
        assert!(n_blp(&f, &plus, &minus).unwrap().value <= 1e-6);
        assert!(n_rhp(&f, None).unwrap().value <= 1e-6);
    }

    #[test]
    fn two_peak_is_detected() {
        let f = DynamicsFamily::single_photon(&SinglePhotonModel::two_peak(), SINGLE_PHOTON_T_MAX)
            .unwrap();
        let r = n_rhp(&f, None).unwrap();
        assert!(r.value > 0.0);
        let series = beta_series(&f, 280.0, BetaMethod::Spectral).unwrap();
        assert!(series.iter().any(|(_, b)| b.is_some_and(|b| b > 1e-6)));
    }

    #[test]
    fn pair_search_single_qubit_is_equatorial() {
        let f = DynamicsFamily::single_photon(&SinglePhotonModel::two_peak(), SINGLE_PHOTON_T_MAX)
            .unwrap();
        let (best, r) = blp_pair_search(&f, &PairGrid::default_for_dim(2).unwrap()).unwrap();
        let x = crate::matcore::pauli::x();
        let z = crate::matcore::pauli::z();
        let zexp = best.rho_a.matrix().matmul(&z).trace().re;
        assert!(zexp.abs() < 1e-12, "{}", best.label_a);
        assert!(best.rho_a.matrix().matmul(&x).trace().re.abs() > 0.99);
        assert!(r.value > 0.1);
    }

    #[test]
    fn grid_validation() {
        let ev: Evaluator = Arc::new(|_| ProcessRep::identity(2));
        assert!(DynamicsFamily::new(2, 1.0, vec![0.0, 0.5, 0.5], ev.clone()).is_err());
        assert!(DynamicsFamily::new(2, 1.0, vec![0.0, 2.0], ev.clone()).is_err());
        let bad: Evaluator = Arc::new(|_| crate::dephasing::dephasing_by_factor(C64::new(0.5, 0.0)));
        assert!(DynamicsFamily::new(2, 1.0, vec![0.0], bad).is_err());
        assert!(DynamicsFamily::uniform(2, 1.0, 4, ev).is_ok());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &[(0.0, 1.0), (0.5, 0.25)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t_lambda0,value\n0,1\n0.5,0.25"));
    }
}
