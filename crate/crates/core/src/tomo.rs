//! Simulated finite-shot state and process tomography with Pauli product
//! settings, linear inversion, and PSD projection by eigenvalue clipping.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::matcore::{eig_hermitian, inverse, kron, pauli, ComplexMatrix, DensityMatrix, C64};
use crate::procrep::ProcessRep;
use crate::randgen::rng;

/// Counts for one measurement setting. Outcomes are sign strings, one
/// character per qubit (`"+"`, `"-"`, `"+-"`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub observable: String,
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
    pub seed: Option<u64>,
}

/// Outcome probabilities for one setting; the infinite-shot counterpart of
/// a [`MeasurementRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingData {
    pub observable: String,
    pub probabilities: BTreeMap<String, f64>,
}

impl MeasurementRecord {
    pub fn validate(&self) -> Result<()> {
        let n = parse_observable(&self.observable)?.len();
        let total: u64 = self.counts.values().sum();
        if total != self.shots || self.shots == 0 {
            return Err(Error::InvalidArgument(format!(
                "counts for {} sum to {total}, shots = {}",
                self.observable, self.shots
            )));
        }
        for k in self.counts.keys() {
            if k.len() != n || !k.chars().all(|c| c == '+' || c == '-') {
                return Err(Error::InvalidArgument(format!(
                    "outcome '{k}' does not match observable {}",
                    self.observable
                )));
            }
        }
        Ok(())
    }

    pub fn frequencies(&self) -> SettingData {
        let n = self.shots as f64;
        SettingData {
            observable: self.observable.clone(),
            probabilities: self
                .counts
                .iter()
                .map(|(k, &c)| (k.clone(), c as f64 / n))
                .collect(),
        }
    }
}

fn pauli_of(c: char) -> Option<ComplexMatrix> {
    match c {
        'X' => Some(pauli::x()),
        'Y' => Some(pauli::y()),
        'Z' => Some(pauli::z()),
        _ => None,
    }
}

fn parse_observable(label: &str) -> Result<Vec<ComplexMatrix>> {
    let ops: Option<Vec<_>> = label.chars().map(pauli_of).collect();
    match ops {
        Some(v) if (1..=2).contains(&v.len()) => Ok(v),
        _ => Err(Error::InvalidArgument(format!("invalid observable label '{label}'"))),
    }
}

/// Pauli settings for `n_qubits`: `X Y Z` or the nine products `XX ... ZZ`.
pub fn settings(n_qubits: usize) -> Result<Vec<String>> {
    let single = ["X", "Y", "Z"];
    match n_qubits {
        1 => Ok(single.iter().map(|s| s.to_string()).collect()),
        2 => Ok(single
            .iter()
            .flat_map(|a| single.iter().map(move |b| format!("{a}{b}")))
            .collect()),
        n => Err(Error::InvalidArgument(format!("no settings for {n} qubits"))),
    }
}

fn n_qubits(dim: usize) -> Result<usize> {
    match dim {
        2 => Ok(1),
        4 => Ok(2),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn outcomes(n: usize) -> Vec<String> {
    (0..1usize << n)
        .map(|k| {
            (0..n)
                .map(|q| if (k >> (n - 1 - q)) & 1 == 0 { '+' } else { '-' })
                .collect()
        })
        .collect()
}

/// Projector onto the eigenspace of a product observable labelled by `outcome`.
fn projector(ops: &[ComplexMatrix], outcome: &str) -> ComplexMatrix {
    let mut p = ComplexMatrix::identity(1);
    for (op, sign) in ops.iter().zip(outcome.chars()) {
        let s = if sign == '+' { 0.5 } else { -0.5 };
        let one = &ComplexMatrix::identity(2).scale_real(0.5) + &op.scale_real(s);
        p = kron(&p, &one);
    }
    p
}

/// Born probabilities of every outcome of `observable`.
pub fn exact_setting(rho: &DensityMatrix, observable: &str) -> Result<SettingData> {
    let ops = parse_observable(observable)?;
    if 1usize << ops.len() != rho.dim() {
        return Err(Error::InvalidArgument(format!(
            "observable {observable} does not act on a {}-dimensional state",
            rho.dim()
        )));
    }
    let probabilities = outcomes(ops.len())
        .into_iter()
        .map(|o| {
            let p = projector(&ops, &o).matmul(rho.matrix()).trace().re.clamp(0.0, 1.0);
            (o, p)
        })
        .collect();
    Ok(SettingData {
        observable: observable.to_string(),
        probabilities,
    })
}

/// Multinomial sample of `shots` outcomes from the Born probabilities.
pub fn simulate_counts(
    rho: &DensityMatrix,
    observable: &str,
    shots: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let exact = exact_setting(rho, observable)?;
    let total: f64 = exact.probabilities.values().sum();
    let mut r = rng(seed);
    let mut remaining = shots;
    let mut mass = 1.0;
    let mut counts = BTreeMap::new();
    let n = exact.probabilities.len();
    for (k, (o, &p)) in exact.probabilities.iter().enumerate() {
        let p = p / total;
        let c = if k + 1 == n {
            remaining
        } else if remaining == 0 || mass <= 0.0 {
            0
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(&mut r)
        };
        remaining -= c;
        mass -= p;
        counts.insert(o.clone(), c);
    }
    Ok(MeasurementRecord {
        observable: observable.to_string(),
        shots,
        counts,
        seed: Some(seed),
    })
}

/// Clip negative eigenvalues and renormalize to unit trace. PSD input is
/// returned unchanged.
pub fn project_to_state(m: &ComplexMatrix) -> Result<DensityMatrix> {
    let h = m.hermitian_part();
    let eig = eig_hermitian(&h)?;
    if eig.min() >= 0.0 {
        let tr = h.trace().re;
        return DensityMatrix::from_hermitian_part(&h.scale_real(1.0 / tr));
    }
    let clipped: Vec<f64> = eig.values.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidState("estimate has no positive eigenvalue".into()));
    }
    let proj = eig.map_values(|x| x.max(0.0) / total);
    DensityMatrix::from_hermitian_part(&proj)
}

/// Linear inversion from per-setting outcome probabilities, then PSD
/// projection. Requires all 3 (one qubit) or 9 (two qubits) settings.
pub fn qst_from_data(data: &[SettingData]) -> Result<DensityMatrix> {
    project_to_state(&qst_linear(data)?)
}

/// Unit-trace Hermitian linear-inversion estimate, not projected.
pub fn qst_linear(data: &[SettingData]) -> Result<ComplexMatrix> {
    let first = data
        .first()
        .ok_or_else(|| Error::InvalidArgument("no measurement settings".into()))?;
    let n = parse_observable(&first.observable)?.len();
    let needed = settings(n)?;
    let mut by_label: BTreeMap<&str, &SettingData> = BTreeMap::new();
    for d in data {
        if by_label.insert(d.observable.as_str(), d).is_some() {
            return Err(Error::InvalidArgument(format!(
                "setting {} given twice",
                d.observable
            )));
        }
    }
    for s in &needed {
        if !by_label.contains_key(s.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "incomplete observable set: missing {s}"
            )));
        }
    }
    if by_label.len() != needed.len() {
        return Err(Error::InvalidArgument("observables of mixed qubit number".into()));
    }

    // Expectation of the Pauli product with identities where `mask` is unset.
    let expectation = |label: &str, mask: &[bool]| -> f64 {
        by_label[label]
            .probabilities
            .iter()
            .map(|(o, &p)| {
                let minus = o
                    .chars()
                    .zip(mask)
                    .filter(|(c, &m)| m && *c == '-')
                    .count();
                if minus % 2 == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum()
    };

    let paulis = ['I', 'X', 'Y', 'Z'];
    let op = |c: char| pauli_of(c).unwrap_or_else(|| ComplexMatrix::identity(2));
    let dim = 1usize << n;
    let mut rho = ComplexMatrix::zeros(dim, dim);
    let labels: Vec<Vec<char>> = if n == 1 {
        paulis.iter().map(|&a| vec![a]).collect()
    } else {
        paulis
            .iter()
            .flat_map(|&a| paulis.iter().map(move |&b| vec![a, b]))
            .collect()
    };
    for l in labels {
        let mask: Vec<bool> = l.iter().map(|&c| c != 'I').collect();
        let value = if mask.iter().all(|m| !m) {
            1.0
        } else {
            // Average over every setting that measures this product.
            let matching: Vec<&String> = needed
                .iter()
                .filter(|s| s.chars().zip(&l).all(|(sc, &lc)| lc == 'I' || sc == lc))
                .collect();
            matching.iter().map(|s| expectation(s, &mask)).sum::<f64>() / matching.len() as f64
        };
        let mut term = ComplexMatrix::identity(1);
        for &c in &l {
            term = kron(&term, &op(c));
        }
        rho = &rho + &term.scale_real(value / dim as f64);
    }
    Ok(rho)
}

pub fn qst(records: &[MeasurementRecord]) -> Result<DensityMatrix> {
    for r in records {
        r.validate()?;
    }
    let data: Vec<SettingData> = records.iter().map(MeasurementRecord::frequencies).collect();
    qst_from_data(&data)
}

/// Noiseless reconstruction from exact Born probabilities.
pub fn qst_exact(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let data: Vec<SettingData> = settings(n_qubits(rho.dim())?)?
        .iter()
        .map(|s| exact_setting(rho, s))
        .collect::<Result<_>>()?;
    qst_from_data(&data)
}

/// `{H, V, +, R}` for one qubit, their 16 products for two.
pub fn input_states(dim: usize) -> Result<Vec<(String, DensityMatrix)>> {
    let single = ["H", "V", "+", "R"];
    let labels: Vec<String> = match n_qubits(dim)? {
        1 => single.iter().map(|s| s.to_string()).collect(),
        _ => single
            .iter()
            .flat_map(|a| single.iter().map(move |b| format!("{a}{b}")))
            .collect(),
    };
    labels
        .into_iter()
        .map(|l| {
            let s = catalog::state(&l)?;
            Ok((l, s))
        })
        .collect()
}

fn vec_row_major(m: &ComplexMatrix) -> Vec<C64> {
    m.as_slice().to_vec()
}

/// Linear process reconstruction `S = Out In^dagger (In In^dagger)^{-1}` from
/// input states and their outputs (column-stacked row-major vecs). With
/// `cp_project`, negative Choi eigenvalues are clipped and the trace
/// restored, which keeps the result CP but only approximately TP.
pub fn qpt(
    inputs: &[DensityMatrix],
    outputs: &[DensityMatrix],
    cp_project: bool,
) -> Result<ProcessRep> {
    if inputs.len() != outputs.len() || inputs.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{} inputs but {} outputs",
            inputs.len(),
            outputs.len()
        )));
    }
    let d = inputs[0].dim();
    let d2 = d * d;
    if inputs.iter().chain(outputs).any(|r| r.dim() != d) {
        return Err(Error::InvalidArgument("states of mixed dimension".into()));
    }
    if inputs.len() < d2 {
        return Err(Error::InvalidArgument(format!(
            "rank-deficient input set: {} states for a {d}-dimensional system (need {d2})",
            inputs.len()
        )));
    }
    let m = inputs.len();
    let vin: Vec<Vec<C64>> = inputs.iter().map(|r| vec_row_major(r.matrix())).collect();
    let vout: Vec<Vec<C64>> = outputs.iter().map(|r| vec_row_major(r.matrix())).collect();
    let a_in = ComplexMatrix::from_fn(d2, m, |i, k| vin[k][i]);
    let a_out = ComplexMatrix::from_fn(d2, m, |i, k| vout[k][i]);
    let gram = a_in.matmul(&a_in.dagger());
    let inv = inverse(&gram).map_err(|_| {
        Error::InvalidArgument("rank-deficient input set: input states do not span the operator space".into())
    })?;
    let s = a_out.matmul(&a_in.dagger()).matmul(&inv);
    let p = ProcessRep::from_superop(d, s)?;
    if !cp_project {
        return Ok(p);
    }
    let choi = p.choi().hermitian_part();
    let eig = eig_hermitian(&choi)?;
    if eig.min() >= 0.0 {
        return Ok(p);
    }
    let clipped = eig.map_values(|x| x.max(0.0));
    let tr = clipped.trace().re;
    ProcessRep::from_choi(d, clipped.scale_real(d as f64 / tr))
}

/// Sub-seed for setting `k` of a simulated experiment.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    seed ^ (k.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// QST of `rho`, exact when `shots` is `None`.
pub fn simulated_qst(rho: &DensityMatrix, shots: Option<u64>, seed: u64) -> Result<DensityMatrix> {
    match shots {
        None => qst_exact(rho),
        Some(n) => {
            let records: Vec<MeasurementRecord> = settings(n_qubits(rho.dim())?)?
                .iter()
                .enumerate()
                .map(|(k, s)| simulate_counts(rho, s, n, derive_seed(seed, k as u64)))
                .collect::<Result<_>>()?;
            qst(&records)
        }
    }
}

/// Full simulated QPT of `process`: prepare the standard inputs, apply the
/// process, reconstruct each output by QST, and invert.
pub fn simulated_qpt(process: &ProcessRep, shots: Option<u64>, seed: u64) -> Result<ProcessRep> {
    let inputs: Vec<DensityMatrix> = input_states(process.dim())?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let per_state = 1u64 << 8;
    let outputs: Vec<DensityMatrix> = inputs
        .iter()
        .enumerate()
        .map(|(k, rho)| {
            let out = DensityMatrix::from_hermitian_part(&process.apply(rho)?)
                .or_else(|_| project_to_state(&process.apply(rho)?))?;
            simulated_qst(&out, shots, derive_seed(seed, k as u64 * per_state))
        })
        .collect::<Result<_>>()?;
    qpt(&inputs, &outputs, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "QST1")]
    Qst1,
    #[serde(rename = "QST2")]
    Qst2,
    #[serde(rename = "QPT1")]
    Qpt1,
    #[serde(rename = "QPT2")]
    Qpt2,
    #[serde(rename = "Criterion11_1q")]
    Criterion11OneQubit,
    #[serde(rename = "Criterion11_2q")]
    Criterion11TwoQubit,
    #[serde(rename = "Witness_1q")]
    WitnessOneQubit,
    #[serde(rename = "Witness_2q")]
    WitnessTwoQubit,
}

impl Protocol {
    pub const ALL: [Protocol; 8] = [
        Protocol::Qst1,
        Protocol::Qst2,
        Protocol::Qpt1,
        Protocol::Qpt2,
        Protocol::Criterion11OneQubit,
        Protocol::Criterion11TwoQubit,
        Protocol::WitnessOneQubit,
        Protocol::WitnessTwoQubit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Qst1 => "QST1",
            Self::Qst2 => "QST2",
            Self::Qpt1 => "QPT1",
            Self::Qpt2 => "QPT2",
            Self::Criterion11OneQubit => "Criterion11_1q",
            Self::Criterion11TwoQubit => "Criterion11_2q",
            Self::WitnessOneQubit => "Witness_1q",
            Self::WitnessTwoQubit => "Witness_2q",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown protocol '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingsBudget {
    pub protocol: Protocol,
    pub settings: u32,
}

/// Measurement settings per protocol: QST needs `3^n`, QPT repeats QST on
/// `4^n` inputs, the process-matrix criterion needs QPT at two times, and
/// the witness needs QST of four final states.
pub fn settings_budget(protocol: Protocol) -> SettingsBudget {
    let qst = |n: u32| 3u32.pow(n);
    let qpt = |n: u32| 4u32.pow(n) * qst(n);
    let settings = match protocol {
        Protocol::Qst1 => qst(1),
        Protocol::Qst2 => qst(2),
        Protocol::Qpt1 => qpt(1),
        Protocol::Qpt2 => qpt(2),
        Protocol::Criterion11OneQubit => 2 * qpt(1),
        Protocol::Criterion11TwoQubit => 2 * qpt(2),
        Protocol::WitnessOneQubit => 4 * qst(1),
        Protocol::WitnessTwoQubit => 4 * qst(2),
    };
    SettingsBudget { protocol, settings }
}

/// Write records as `observable,outcome,count` rows.
pub fn write_records_csv<W: Write>(w: W, records: &[MeasurementRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["observable", "outcome", "count"])
        .map_err(std::io::Error::from)?;
    for r in records {
        for (o, c) in &r.counts {
            wr.write_record([r.observable.as_str(), o.as_str(), &c.to_string()])
                .map_err(std::io::Error::from)?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// Read `observable,outcome,count` rows, grouping by observable in order of
/// first appearance.
pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<MeasurementRecord>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rd.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["observable", "outcome", "count"] {
        return Err(Error::Parse {
            line: 1,
            message: "expected header observable,outcome,count".into(),
        });
    }
    let mut out: Vec<MeasurementRecord> = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let bad = |message: String| Error::Parse { line, message };
        if row.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", row.len())));
        }
        let count: u64 = row[2]
            .parse()
            .map_err(|_| bad(format!("invalid count '{}'", &row[2])))?;
        parse_observable(&row[0]).map_err(|e| bad(e.to_string()))?;
        let idx = match out.iter().position(|r| r.observable == row[0]) {
            Some(k) => k,
            None => {
                out.push(MeasurementRecord {
                    observable: row[0].to_string(),
                    shots: 0,
                    counts: BTreeMap::new(),
                    seed: None,
                });
                out.len() - 1
            }
        };
        let rec = &mut out[idx];
        if rec.counts.insert(row[1].to_string(), count).is_some() {
            return Err(bad(format!("duplicate outcome {} for {}", &row[1], &row[0])));
        }
        rec.shots += count;
    }
    if out.is_empty() {
        return Err(Error::NoData);
    }
    for r in &out {
        r.validate()?;
    }
    Ok(out)
}
