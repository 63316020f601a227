//! Parameter extraction for the two-photon model: Gaussian fit of the pump
//! spectrum, trace-distance fits for each quartz plate, and the derived
//! `C`, `dn`, `K`.
//!
//! ```text
//! f1(x) = X exp(-Y x^2)                                       plate 1
//! f2(x) = X exp(-Y (T^2 + (x - T)^2 - 2 |K| T (x - T)))       plate 2, x >= T
//! f3(w) = A exp(-(w - w0)^2 / (2 s^2)),  delta = s sqrt(8 ln 2)
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dephasing::{TwoPhotonModel, DEFAULT_SWITCHOVER};
use crate::error::{Error, Result};
use crate::randgen::rng;

/// The photon FWHM is taken to be this multiple of the pump FWHM.
pub const PHOTON_TO_PUMP_BANDWIDTH: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XYSeries {
    pub points: Vec<(f64, f64)>,
    pub meta: String,
}

impl XYSeries {
    pub fn new(points: Vec<(f64, f64)>, meta: impl Into<String>) -> Result<Self> {
        for (i, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite point at index {i}")));
            }
            if i > 0 && x <= points[i - 1].0 {
                return Err(Error::InvalidArgument(format!(
                    "x not strictly increasing at index {i}"
                )));
            }
        }
        Ok(Self {
            points,
            meta: meta.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BTreeMap<String, f64>,
    pub residual_rms: f64,
    pub iterations: usize,
    pub converged: bool,
    pub notes: Vec<String>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged when every Jacobian column is this close to orthogonal to
    /// the residual (cosine) at the returned point.
    pub gtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gtol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
struct Lm {
    p: Vec<f64>,
    rss: f64,
    iterations: usize,
    converged: bool,
}

fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c] == 0.0 || !a[piv][c].is_finite() {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in (c + 1)..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Damped Gauss-Newton with Marquardt diagonal scaling. `model(x, p, grad)`
/// returns `f(x; p)` and writes `df/dp` into `grad`.
fn levenberg_marquardt<F>(xs: &[f64], ys: &[f64], p0: Vec<f64>, model: F, opts: &LmOptions) -> Lm
where
    F: Fn(f64, &[f64], &mut [f64]) -> f64,
{
    let np = p0.len();
    let y_norm = ys.iter().map(|y| y * y).sum::<f64>().sqrt();
    let eval = |p: &[f64]| -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut r = Vec::with_capacity(xs.len());
        let mut jac = Vec::with_capacity(xs.len());
        for (&x, &y) in xs.iter().zip(ys) {
            let mut g = vec![0.0; np];
            r.push(y - model(x, p, &mut g));
            jac.push(g);
        }
        (r, jac)
    };
    let rss_of = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let mut p = p0;
    let (mut r, mut jac) = eval(&p);
    let mut rss = rss_of(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        let mut a = vec![vec![0.0; np]; np];
        let mut g = vec![0.0; np];
        for (ri, row) in r.iter().zip(&jac) {
            for i in 0..np {
                g[i] += row[i] * ri;
                for k in 0..np {
                    a[i][k] += row[i] * row[k];
                }
            }
        }
        let r_norm = rss.sqrt();
        let cosine = (0..np)
            .map(|i| {
                let col = a[i][i].sqrt();
                if col == 0.0 {
                    0.0
                } else {
                    g[i].abs() / (col * r_norm)
                }
            })
            .fold(0.0, f64::max);
        converged = r_norm <= 1e-13 * y_norm.max(f64::MIN_POSITIVE) || cosine <= opts.gtol;
        if converged && (cosine <= 1e-12 || r_norm <= 1e-13 * y_norm) {
            break;
        }
        iterations += 1;
        let dmax = (0..np).map(|i| a[i][i]).fold(0.0, f64::max);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = a.clone();
            for (i, row) in damped.iter_mut().enumerate() {
                row[i] += lambda * a[i][i].max(1e-300 * dmax.max(1e-300));
            }
            let Some(step) = solve_small(damped, g.clone()) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&step).map(|(a, b)| a + b).collect();
            let (rt, jt) = eval(&trial);
            let rss_t = rss_of(&rt);
            if rss_t.is_finite() && rss_t < rss {
                let small = step
                    .iter()
                    .zip(&p)
                    .all(|(s, v)| s.abs() <= 1e-15 * v.abs().max(1e-300));
                p = trial;
                r = rt;
                jac = jt;
                rss = rss_t;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = !small;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    Lm {
        p,
        rss,
        iterations,
        converged,
    }
}

fn check_points(data: &XYSeries, min: usize) -> Result<()> {
    if data.len() < min {
        return Err(Error::InvalidArgument(format!(
            "need at least {min} points, got {}",
            data.len()
        )));
    }
    Ok(())
}

fn result(lm: &Lm, n: usize, params: Vec<(&str, f64)>, notes: Vec<String>) -> FitResult {
    let mut notes = notes;
    if !lm.converged {
        notes.push("did not converge; best iterate returned".into());
    }
    FitResult {
        params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        residual_rms: (lm.rss / n as f64).sqrt(),
        iterations: lm.iterations,
        converged: lm.converged,
        notes,
    }
}

/// Fit `X exp(-Y x^2)`, started from the log-linear regression.
pub fn fit_f1(data: &XYSeries) -> Result<FitResult> {
    fit_f1_with(data, &LmOptions::default())
}

pub fn fit_f1_with(data: &XYSeries, opts: &LmOptions) -> Result<FitResult> {
    check_points(data, 3)?;
    if data.points.iter().any(|p| !(p.1 > 0.0)) {
        return Err(Error::InvalidArgument("f1 needs y > 0".into()));
    }
    let (xs, ys) = (data.xs(), data.ys());
    let u: Vec<f64> = xs.iter().map(|x| x * x).collect();
    let v: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = u.len() as f64;
    let (mu, mv) = (u.iter().sum::<f64>() / n, v.iter().sum::<f64>() / n);
    let suu: f64 = u.iter().map(|a| (a - mu).powi(2)).sum();
    let suv: f64 = u.iter().zip(&v).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let slope = if suu > 0.0 { suv / suu } else { 0.0 };
    let p0 = vec![(mv - slope * mu).exp(), -slope];
    let lm = levenberg_marquardt(
        &xs,
        &ys,
        p0,
        |x, p, g| {
            let e = (-p[1] * x * x).exp();
            g[0] = e;
            g[1] = -p[0] * x * x * e;
            p[0] * e
        },
        opts,
    );
    Ok(result(
        &lm,
        xs.len(),
        vec![("X_tilde", lm.p[0]), ("Y_tilde", lm.p[1])],
        vec!["Y_tilde = dn^2 C / 2".into()],
    ))
}

/// One-parameter fit of the plate-2 revival with `X`, `Y` held fixed. The
/// magnitude of `K` is fitted from five starting points; `K` is reported
/// as `-|K|` (anti-correlated frequencies).
pub fn fit_f2(data: &XYSeries, x_tilde: f64, y_tilde: f64) -> Result<FitResult> {
    fit_f2_with(data, x_tilde, y_tilde, DEFAULT_SWITCHOVER, &LmOptions::default())
}

pub fn fit_f2_with(
    data: &XYSeries,
    x_tilde: f64,
    y_tilde: f64,
    switchover: f64,
    opts: &LmOptions,
) -> Result<FitResult> {
    check_points(data, 2)?;
    let (xs, ys) = (data.xs(), data.ys());
    let t = switchover;
    let model = |x: f64, p: &[f64], g: &mut [f64]| {
        let u = x - t;
        let f = x_tilde * (-y_tilde * (t * t + u * u - 2.0 * p[0] * t * u)).exp();
        g[0] = f * 2.0 * y_tilde * t * u;
        f
    };
    let best = [0.1, 0.3, 0.5, 0.7, 0.9]
        .iter()
        .map(|&a0| levenberg_marquardt(&xs, &ys, vec![a0], model, opts))
        .min_by(|a, b| a.rss.total_cmp(&b.rss))
        .expect("five starts");
    let k = -best.p[0].abs();
    Ok(result(
        &best,
        xs.len(),
        vec![("K", k)],
        vec![format!("switchover T = {t}"), "multistart |K| in {0.1, 0.3, 0.5, 0.7, 0.9}".into()],
    ))
}

/// Gaussian with free amplitude; reports `omega0`, `sigma0`, and the FWHM
/// `delta = sigma0 sqrt(8 ln 2)`.
pub fn fit_f3(data: &XYSeries) -> Result<FitResult> {
    fit_f3_with(data, &LmOptions::default())
}

pub fn fit_f3_with(data: &XYSeries, opts: &LmOptions) -> Result<FitResult> {
    check_points(data, 4)?;
    let (xs, ys) = (data.xs(), data.ys());
    let w: f64 = ys.iter().map(|y| y.max(0.0)).sum();
    if !(w > 0.0) {
        return Err(Error::InvalidArgument("spectrum has no positive values".into()));
    }
    let mean = xs.iter().zip(&ys).map(|(x, y)| x * y.max(0.0)).sum::<f64>() / w;
    let var = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean).powi(2) * y.max(0.0))
        .sum::<f64>()
        / w;
    let amp = ys.iter().cloned().fold(f64::MIN, f64::max);
    let p0 = vec![amp, mean, var.sqrt().max(1e-12)];
    let lm = levenberg_marquardt(
        &xs,
        &ys,
        p0,
        |x, p, g| {
            let d = x - p[1];
            let s2 = p[2] * p[2];
            let e = (-d * d / (2.0 * s2)).exp();
            g[0] = e;
            g[1] = p[0] * e * d / s2;
            g[2] = p[0] * e * d * d / (s2 * p[2]);
            p[0] * e
        },
        opts,
    );
    let sigma = lm.p[2].abs();
    Ok(result(
        &lm,
        xs.len(),
        vec![
            ("amplitude", lm.p[0]),
            ("omega0", lm.p[1]),
            ("sigma0", sigma),
            ("delta", sigma * fwhm_factor()),
        ],
        Vec::new(),
    ))
}

fn fwhm_factor() -> f64 {
    (8.0 * 2f64.ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    #[serde(rename = "C")]
    pub c: f64,
    pub delta_n: f64,
}

/// `C = (2 delta / sqrt(8 ln 2))^2` and `dn = sqrt(2 Y / C)`.
pub fn derive_params(y_tilde: f64, delta: f64) -> Result<DerivedParams> {
    if !(y_tilde > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "derive_params needs positive inputs, got Y = {y_tilde}, delta = {delta}"
        )));
    }
    let c = (PHOTON_TO_PUMP_BANDWIDTH * delta / fwhm_factor()).powi(2);
    Ok(DerivedParams {
        c,
        delta_n: (2.0 * y_tilde / c).sqrt(),
    })
}

pub fn load_series(path: impl AsRef<Path>) -> Result<XYSeries> {
    let path = path.as_ref();
    read_series(File::open(path)?, path.display().to_string())
}

/// Write CSV with header `x,y`; `read_series` reads it back exactly.
pub fn write_series<W: Write>(w: W, data: &XYSeries) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["x", "y"]).map_err(std::io::Error::from)?;
    for (x, y) in &data.points {
        wr.write_record([x.to_string(), y.to_string()])
            .map_err(std::io::Error::from)?;
    }
    wr.flush()?;
    Ok(())
}

/// Parse CSV with header `x,y`.
pub fn read_series<R: Read>(r: R, meta: impl Into<String>) -> Result<XYSeries> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r);
    let header = rd.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != ["x", "y"] {
        return Err(Error::Parse {
            line: 1,
            message: "expected header x,y".into(),
        });
    }
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if row.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", row.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("invalid number '{s}'"),
                })
        };
        let (x, y) = (num(&row[0])?, num(&row[1])?);
        if let Some(&(px, _)) = points.last() {
            if x <= px {
                return Err(Error::Parse {
                    line,
                    message: format!("x = {x} not greater than previous x = {px}"),
                });
            }
        }
        points.push((x, y));
    }
    if points.is_empty() {
        return Err(Error::NoData);
    }
    XYSeries::new(points, meta)
}

/// The three series the extraction pipeline consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitInputs {
    pub spectrum: XYSeries,
    pub plate1: XYSeries,
    pub plate2: XYSeries,
}

/// Extracted parameters in the layout of the model presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractedParams {
    #[serde(rename = "K")]
    pub k: f64,
    pub omega0: f64,
    pub delta: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub delta_n: f64,
    pub f1: FitResult,
    pub f2: FitResult,
    pub f3: FitResult,
    pub photon_to_pump_bandwidth: f64,
}

/// Sample the pump spectrum and the two plate windows of `D(t)` for
/// `|phi+>, |phi->` from a model, with multiplicative Gaussian noise of
/// relative size `noise`.
pub fn synthesize(m: &TwoPhotonModel, noise: f64, seed: u64) -> Result<FitInputs> {
    m.validate()?;
    let mut r = rng(seed);
    let mut jitter = |y: f64| {
        let e: f64 = StandardNormal.sample(&mut r);
        y * (1.0 + noise * e)
    };
    let sigma0 = m.delta_fwhm / fwhm_factor();
    let spectrum: Vec<(f64, f64)> = (0..=80)
        .map(|i| {
            let w = m.omega0 + sigma0 * (-4.0 + 0.1 * i as f64);
            let d = (w - m.omega0) / sigma0;
            (w, (-0.5 * d * d).exp())
        })
        .collect();
    let t = m.switchover;
    let y = m.y_tilde();
    let plate1: Vec<(f64, f64)> = (0..=40)
        .map(|i| {
            let x = t * i as f64 / 40.0;
            (x, (-y * x * x).exp())
        })
        .collect();
    let plate2: Vec<(f64, f64)> = (1..=40)
        .map(|i| {
            let x = t + t * i as f64 / 40.0;
            let u = x - t;
            (x, (-y * (t * t + u * u + 2.0 * m.k * t * u)).exp())
        })
        .collect();
    let mut noisy = |pts: Vec<(f64, f64)>| -> Vec<(f64, f64)> {
        pts.into_iter().map(|(x, v)| (x, jitter(v))).collect()
    };
    Ok(FitInputs {
        spectrum: XYSeries::new(noisy(spectrum), "synthetic spectrum")?,
        plate1: XYSeries::new(noisy(plate1), "synthetic D(t), plate 1")?,
        plate2: XYSeries::new(noisy(plate2), "synthetic D(t), plate 2")?,
    })
}

/// Spectrum fit, plate-1 fit, plate-2 fit, then `C` and `dn`.
pub fn extract(inputs: &FitInputs, switchover: f64) -> Result<ExtractedParams> {
    let f3 = fit_f3(&inputs.spectrum)?;
    let f1 = fit_f1(&inputs.plate1)?;
    let f2 = fit_f2_with(
        &inputs.plate2,
        f1.param("X_tilde"),
        f1.param("Y_tilde"),
        switchover,
        &LmOptions::default(),
    )?;
    let delta = f3.param("delta");
    let derived = derive_params(f1.param("Y_tilde"), delta)?;
    Ok(ExtractedParams {
        k: f2.param("K"),
        omega0: f3.param("omega0"),
        delta,
        c: derived.c,
        delta_n: derived.delta_n,
        f1,
        f2,
        f3,
        photon_to_pump_bandwidth: PHOTON_TO_PUMP_BANDWIDTH,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, xs: impl Iterator<Item = f64>) -> XYSeries {
        XYSeries::new(xs.map(|x| (x, f(x))).collect(), "test").unwrap()
    }

    #[test]
    fn f1_noise_free() {
        let y = 2.2966e-5;
        let d = series(|x| (-y * x * x).exp(), (0..=40).map(|i| 5.0 * i as f64));
        let r = fit_f1(&d).unwrap();
        assert!(r.converged);
        assert!((r.param("X_tilde") - 1.0).abs() < 1e-8);
        assert!((r.param("Y_tilde") / y - 1.0).abs() < 1e-8);
    }

    #[test]
    fn f1_constant() {
        let d = series(|_| 0.7, (0..10).map(f64::from));
        let r = fit_f1(&d).unwrap();
        assert!((r.param("X_tilde") - 0.7).abs() < 1e-12);
        assert!(r.param("Y_tilde").abs() < 1e-14);
        assert!(fit_f1(&series(|_| 0.0, (0..10).map(f64::from))).is_err());
    }

    #[test]
    fn f2_recovers_k() {
        let m = TwoPhotonModel::cond_i();
        let inputs = synthesize(&m, 0.0, 0).unwrap();
        let r = fit_f2(&inputs.plate2, 1.0, m.y_tilde()).unwrap();
        assert!((r.param("K") - m.k).abs() < 1e-6);
        let mut flat = m;
        flat.k = 0.0;
        let r0 = fit_f2(&synthesize(&flat, 0.0, 0).unwrap().plate2, 1.0, m.y_tilde()).unwrap();
        assert!(r0.param("K").abs() <= 1e-8);
    }

    #[test]
    fn f3_recovers_gaussian() {
        for m in [TwoPhotonModel::cond_i(), TwoPhotonModel::cond_iv()] {
            let inputs = synthesize(&m, 0.0, 0).unwrap();
            let r = fit_f3(&inputs.spectrum).unwrap();
            assert!(r.converged);
            assert!((r.param("omega0") - m.omega0).abs() < 1e-6);
            assert!((r.param("delta") - m.delta_fwhm).abs() < 1e-6);
        }
    }

    #[test]
    fn derived_values() {
        let p = derive_params(2.2966e-5, 0.1799).unwrap();
        assert!((p.c - 0.0233).abs() < 1e-4);
        assert!((p.delta_n - 0.0444).abs() < 1e-4);
        assert!((derive_params(1.0, 1.8885).unwrap().c - 2.5760).abs() < 5e-3);
        assert!(derive_params(0.0, 1.0).is_err());
    }

    #[test]
    fn series_parsing() {
        let s = read_series("x,y\n0,1\n1,0.5".as_bytes(), "t").unwrap();
        assert_eq!(s.len(), 2);
        match read_series("x,y\n0,1\n2,3\n1,0.5\n".as_bytes(), "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let e = read_series("x,y\n".as_bytes(), "t").unwrap_err();
        assert_eq!(e.to_string(), "no data rows");
        assert!(matches!(read_series("x,y\n0,abc\n".as_bytes(), "t"), Err(Error::Parse { line: 2, .. })));
        let orig = synthesize(&TwoPhotonModel::cond_ii(), 0.01, 4).unwrap().plate2;
        let mut buf = Vec::new();
        write_series(&mut buf, &orig).unwrap();
        let back = read_series(buf.as_slice(), orig.meta.clone()).unwrap();
        assert_eq!(back, orig);
    }

    #[test]
    fn pipeline_noise_free() {
        let m = TwoPhotonModel::cond_ii();
        let p = extract(&synthesize(&m, 0.0, 0).unwrap(), m.switchover).unwrap();
        assert!((p.k - m.k).abs() < 1e-6);
        assert!((p.c / m.c - 1.0).abs() < 0.01);
        assert!((p.delta_n / m.delta_n - 1.0).abs() < 0.01);
    }
}
