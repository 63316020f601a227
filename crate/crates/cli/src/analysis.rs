//! Execution of the analyses selected in a run.

use std::collections::BTreeMap;

use anyhow::{anyhow, Result};
use nmk_core::capability::{robustness, witness_two_from_dynamics};
use nmk_core::catalog::{self, pairs_for_dim};
use nmk_core::dephasing::DephasingModel;
use nmk_core::fitkit::{extract, synthesize, ExtractedParams};
use nmk_core::measures::{
    beta_series, d_trace_dynamics, n_beta, n_blp, n_rhp, rhp_series, BetaMethod, DynamicsFamily,
    MeasureReport, SINGLE_PHOTON_T_MAX,
};
use nmk_core::procrep::intermediate;
use nmk_core::sdp::SolverStatus;
use nmk_core::tomo::{settings_budget, simulated_qpt, Protocol};
use nmk_core::ToleranceProfile;
use serde::Serialize;

use crate::config::{Analysis, Run};

/// Relative noise applied to synthetic fit data.
pub const FIT_NOISE: f64 = 0.01;

pub type Series = Vec<(f64, f64)>;

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessPoint {
    pub t1: f64,
    pub t2: f64,
    pub beta: f64,
    pub oracle_beta: f64,
    pub gap: f64,
    pub status: SolverStatus,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessRow {
    pub state_a: String,
    pub state_b: String,
    pub class: String,
    pub value: f64,
    pub threshold: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessTable {
    pub t1: f64,
    pub t2: f64,
    pub rows: Vec<WitnessRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairMeasure {
    pub state_a: String,
    pub state_b: String,
    #[serde(flatten)]
    pub report: MeasureReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct TomoPoint {
    pub t1: f64,
    pub t2: f64,
    pub shots: Option<u64>,
    pub seed: u64,
    pub settings: u32,
    pub beta_exact: f64,
    pub beta_estimate: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitOutcome {
    pub noise: f64,
    pub seed: u64,
    #[serde(flatten)]
    pub params: ExtractedParams,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum AnalysisResult {
    Robustness(Vec<RobustnessPoint>),
    Witness(Vec<WitnessTable>),
    Measure(MeasureReport),
    PairMeasure(PairMeasure),
    Tomo(Vec<TomoPoint>),
    Fit(FitOutcome),
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub schema: &'static str,
    pub model_name: String,
    pub model: DephasingModel,
    pub t2: f64,
    pub division: String,
    pub shots: Option<u64>,
    pub seed: u64,
    pub results: BTreeMap<&'static str, AnalysisResult>,
}

/// Results plus the CSV series written next to them.
pub struct RunOutput {
    pub record: RunRecord,
    pub series: Vec<(String, Series)>,
}

fn family(model: &DephasingModel) -> Result<DynamicsFamily> {
    Ok(match model {
        DephasingModel::TwoPhoton(m) => DynamicsFamily::two_photon(m)?,
        DephasingModel::SinglePhoton(m) => DynamicsFamily::single_photon(m, SINGLE_PHOTON_T_MAX)?,
    })
}

/// Default BLP pair: the Bell pair for two photons, `(+, -)` for one.
pub fn blp_pair(dim: usize) -> (&'static str, &'static str) {
    if dim == 4 {
        ("phi+", "phi-")
    } else {
        ("+", "-")
    }
}

pub fn robustness_at(model: &DephasingModel, t1: f64, t2: f64) -> Result<RobustnessPoint> {
    let lambda = intermediate(&model.process_at(t2)?, &model.process_at(t1)?)?;
    let r = robustness(&lambda)?;
    Ok(RobustnessPoint {
        t1,
        t2,
        beta: r.beta,
        oracle_beta: r.oracle_beta,
        gap: r.gap,
        status: r.status,
        violated: r.beta > ToleranceProfile::default().detection,
    })
}

pub fn witness_table(model: &DephasingModel, t1: f64, t2: f64) -> Result<WitnessTable> {
    let p1 = model.process_at(t1)?;
    let p2 = model.process_at(t2)?;
    let rows = pairs_for_dim(model.dim())?
        .into_iter()
        .map(|row| {
            let w = witness_two_from_dynamics(
                &p1,
                &p2,
                &catalog::state(row.a)?,
                &catalog::state(row.b)?,
            )?;
            Ok(WitnessRow {
                state_a: catalog::display_label(row.a),
                state_b: catalog::display_label(row.b),
                class: row.class.to_string(),
                value: w.value,
                threshold: w.threshold,
                violated: w.violated,
            })
        })
        .collect::<Result<_>>()?;
    Ok(WitnessTable { t1, t2, rows })
}

pub fn tomo_point(model: &DephasingModel, t1: f64, t2: f64, shots: Option<u64>, seed: u64) -> Result<TomoPoint> {
    let p1 = model.process_at(t1)?;
    let p2 = model.process_at(t2)?;
    let beta_exact = robustness(&intermediate(&p2, &p1)?)?.beta;
    let q1 = simulated_qpt(&p1, shots, seed)?;
    let q2 = simulated_qpt(&p2, shots, seed.wrapping_add(1000))?;
    let beta_estimate = robustness(&intermediate(&q2, &q1)?)?.beta;
    let protocol = if model.dim() == 4 {
        Protocol::Criterion11TwoQubit
    } else {
        Protocol::Criterion11OneQubit
    };
    Ok(TomoPoint {
        t1,
        t2,
        shots,
        seed,
        settings: settings_budget(protocol).settings,
        beta_exact,
        beta_estimate,
        error: beta_estimate - beta_exact,
    })
}

fn present(series: Vec<(f64, Option<f64>)>) -> Series {
    series
        .into_iter()
        .filter_map(|(t, v)| v.map(|v| (t, v)))
        .collect()
}

pub fn execute(run: &Run) -> Result<RunOutput> {
    let model = &run.model.model;
    let mut results = BTreeMap::new();
    let mut series = Vec::new();
    for &a in &run.analyses {
        let result = match a {
            Analysis::Robustness => {
                let points: Vec<RobustnessPoint> = run
                    .t1s
                    .iter()
                    .map(|&t1| robustness_at(model, t1, run.t2))
                    .collect::<Result<_>>()?;
                if points.len() > 1 {
                    series.push((
                        "robustness".to_string(),
                        points.iter().map(|p| (p.t1, p.beta)).collect(),
                    ));
                }
                AnalysisResult::Robustness(points)
            }
            Analysis::Witness => AnalysisResult::Witness(
                run.t1s
                    .iter()
                    .map(|&t1| witness_table(model, t1, run.t2))
                    .collect::<Result<_>>()?,
            ),
            Analysis::NBeta => {
                let f = family(model)?;
                series.push((
                    "n_beta".to_string(),
                    present(beta_series(&f, run.t2, BetaMethod::Sdp)?),
                ));
                AnalysisResult::Measure(n_beta(&f, run.t2)?)
            }
            Analysis::NBlp => {
                let f = family(model)?;
                let (a, b) = blp_pair(model.dim());
                let (ra, rb) = (catalog::state(a)?, catalog::state(b)?);
                series.push(("n_blp".to_string(), d_trace_dynamics(&f, &ra, &rb)?));
                AnalysisResult::PairMeasure(PairMeasure {
                    state_a: catalog::display_label(a),
                    state_b: catalog::display_label(b),
                    report: n_blp(&f, &ra, &rb)?,
                })
            }
            Analysis::NRhp => {
                let f = family(model)?;
                series.push(("n_rhp".to_string(), present(rhp_series(&f, f.grid_step())?)));
                AnalysisResult::Measure(n_rhp(&f, None)?)
            }
            Analysis::TomoSim => AnalysisResult::Tomo(
                run.t1s
                    .iter()
                    .map(|&t1| tomo_point(model, t1, run.t2, run.shots, run.seed))
                    .collect::<Result<_>>()?,
            ),
            Analysis::Fit => {
                let m = run
                    .model
                    .two_photon()
                    .ok_or_else(|| anyhow!("fit needs a two-photon model"))?;
                let params = extract(&synthesize(m, FIT_NOISE, run.seed)?, m.switchover)?;
                AnalysisResult::Fit(FitOutcome {
                    noise: FIT_NOISE,
                    seed: run.seed,
                    params,
                })
            }
        };
        results.insert(a.name(), result);
    }
    Ok(RunOutput {
        record: RunRecord {
            schema: crate::output::SCHEMA,
            model_name: run.model.name.clone(),
            model: model.clone(),
            t2: run.t2,
            division: run.division.to_string(),
            shots: run.shots,
            seed: run.seed,
            results,
        },
        series,
    })
}
