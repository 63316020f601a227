use std::panic;
use std::process::ExitCode;
use std::time::Instant;

use nmk_core::capability::{
    oracle_beta, robustness, witness_one_from_dynamics, witness_two_from_dynamics,
};
use nmk_core::catalog::{self, pairs_for_dim, CatalogRow};
use nmk_core::dephasing::{SinglePhotonModel, TwoPhotonModel, DEFAULT_SWITCHOVER, PRESET_NAMES};
use nmk_core::fitkit::{extract, synthesize};
use nmk_core::matcore::fidelity;
use nmk_core::measures::{n_beta, n_blp, n_rhp, DynamicsFamily, SINGLE_PHOTON_T_MAX};
use nmk_core::procrep::{compose, intermediate};
use nmk_core::randgen::{random_channel, random_tp_map, rng};
use nmk_core::tomo::{settings_budget, simulated_qpt, simulated_qst, Protocol};
use nmk_core::{ProcessRep, Result};
use rand::Rng;

const T1: f64 = DEFAULT_SWITCHOVER;
const T2: f64 = 2.0 * DEFAULT_SWITCHOVER;
const SINGLE_T1: f64 = 140.0;
const SINGLE_T2: f64 = 280.0;

type Check = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn presets() -> Vec<(&'static str, TwoPhotonModel)> {
    PRESET_NAMES
        .iter()
        .map(|n| (*n, TwoPhotonModel::preset(n).unwrap()))
        .collect()
}

fn beta_at(p1: &ProcessRep, p2: &ProcessRep) -> Result<f64> {
    Ok(robustness(&intermediate(p2, p1)?)?.beta)
}

fn witness_row(p1: &ProcessRep, p2: &ProcessRep, row: &CatalogRow) -> Result<f64> {
    let a = catalog::state(row.a)?;
    let b = catalog::state(row.b)?;
    Ok(witness_two_from_dynamics(p1, p2, &a, &b)?.value)
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    hi - lo
}

fn class_values(p1: &ProcessRep, p2: &ProcessRep, class: &str) -> Result<Vec<f64>> {
    pairs_for_dim(p1.dim())?
        .iter()
        .filter(|r| r.class == class)
        .map(|r| witness_row(p1, p2, r))
        .collect()
}

fn oracle_equivalence() -> Result<Outcome> {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    let mut non_cp = 0;
    for k in 0..200 {
        let d = if k % 2 == 0 { 2 } else { 4 };
        let p = r.random_range(0.0..0.8);
        let map = random_tp_map(d, p, &mut r)?;
        let res = robustness(&map)?;
        if res.oracle_beta > 1e-9 {
            non_cp += 1;
        }
        worst = worst.max((res.beta - res.oracle_beta).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && secs < 30.0,
        format!("200 maps ({non_cp} non-CP), max |beta - oracle| = {worst:.2e}, {secs:.1} s"),
    )
}

fn blp_reproduction() -> Result<Outcome> {
    let start = Instant::now();
    let targets = [0.46, 0.20, 0.13, 0.01];
    let a = catalog::state("phi+")?;
    let b = catalog::state("phi-")?;
    let mut pass = true;
    let mut parts = Vec::new();
    for ((name, m), target) in presets().into_iter().zip(targets) {
        let value = n_blp(&DynamicsFamily::two_photon(&m)?, &a, &b)?.value;
        let y = m.y_tilde() * T1 * T1;
        let analytic = (-y * (1.0 - m.k * m.k)).exp() - (-y).exp();
        pass &= (value - target).abs() <= 0.02 && (analytic - value).abs() <= 0.02;
        parts.push(format!("{name} {value:.4} (analytic {analytic:.4}, target {target})"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 5.0;
    outcome(pass, format!("{}, {secs:.2} s", parts.join("; ")))
}

fn beta_ordering() -> Result<Outcome> {
    let mut global = Vec::new();
    let mut local_max: f64 = 0.0;
    for (_, m) in presets() {
        global.push(beta_at(&m.process_at(T1)?, &m.process_at(T2)?)?);
        let local = beta_at(&m.local_process_at(T1)?, &m.local_process_at(T2)?)?;
        local_max = local_max.max(local);
    }
    let ordered = global.windows(2).all(|w| w[0] > w[1]);
    let above = global.iter().all(|&b| b > 1e-4);
    outcome(
        ordered && above && local_max <= 1e-9,
        format!(
            "global beta I-IV = {:.6}, {:.6}, {:.6}, {:.6}; max local beta = {local_max:.1e}",
            global[0], global[1], global[2], global[3]
        ),
    )
}

fn markovian_null() -> Result<Outcome> {
    let m = SinglePhotonModel::gaussian_single_peak();
    let p2 = m.process_at(SINGLE_T2)?;
    let mut beta_max: f64 = 0.0;
    for k in 1..=50 {
        let t1 = SINGLE_T2 * k as f64 / 51.0;
        beta_max = beta_max.max(beta_at(&m.process_at(t1)?, &p2)?);
    }
    let f = DynamicsFamily::single_photon(&m, SINGLE_PHOTON_T_MAX)?;
    let nb = n_beta(&f, SINGLE_T2)?.value;
    let nr = n_rhp(&f, None)?.value;
    let p1 = m.process_at(SINGLE_T1)?;
    let mut w_dev: f64 = 0.0;
    for row in pairs_for_dim(2)? {
        w_dev = w_dev.max((witness_row(&p1, &p2, &row)? - 2.0).abs());
    }
    outcome(
        beta_max <= 1e-9 && nb <= 1e-9 && nr <= 1e-9 && w_dev <= 1e-7,
        format!(
            "max beta over 50 divisions = {beta_max:.1e}, n_beta = {nb:.1e}, n_rhp = {nr:.1e}, \
             max |W - 2| over 15 pairs = {w_dev:.1e}"
        ),
    )
}

fn non_markovian_detection() -> Result<Outcome> {
    let m = SinglePhotonModel::two_peak();
    let p1 = m.process_at(SINGLE_T1)?;
    let p2 = m.process_at(SINGLE_T2)?;
    let beta = beta_at(&p1, &p2)?;
    let nr = n_rhp(&DynamicsFamily::single_photon(&m, SINGLE_PHOTON_T_MAX)?, None)?.value;
    let pm = witness_row(&p1, &p2, &CatalogRow { a: "+", b: "-", class: "" })?;
    let hv = witness_row(&p1, &p2, &CatalogRow { a: "H", b: "V", class: "" })?;
    outcome(
        beta > 0.0 && nr > 0.0 && pm > 2.0 && (hv - 2.0).abs() <= 1e-7,
        format!(
            "at ({SINGLE_T1}, {SINGLE_T2}): beta = {beta:.6}, W(+,-) = {pm:.6}, W(H,V) = {hv:.9}; n_rhp = {nr:.4}"
        ),
    )
}

fn table_structure() -> Result<Outcome> {
    let tol = 1e-6;
    let mut pass = true;
    let mut notes = Vec::new();

    let single = [
        ("two_peak", SinglePhotonModel::two_peak()),
        ("gaussian", SinglePhotonModel::gaussian_single_peak()),
    ];
    for (name, m) in &single {
        for (t1, t2) in [(SINGLE_T1, SINGLE_T2), (100.0, 250.0)] {
            let p1 = m.process_at(t1)?;
            let p2 = m.process_at(t2)?;
            let mixed = class_values(&p1, &p2, "mixed-basis")?;
            let antipodal = class_values(&p1, &p2, "coherent-antipodal")?;
            let coherent = class_values(&p1, &p2, "coherent-mixed")?;
            let ok = mixed.len() == 8
                && spread(&mixed) <= tol
                && spread(&antipodal) <= tol
                && spread(&coherent) <= tol;
            pass &= ok;
            notes.push(format!(
                "{name} ({t1}, {t2}) 1q classes 8/2/4 = {:.6}/{:.6}/{:.6} {}",
                mixed[0],
                antipodal[0],
                coherent[0],
                if ok { "equal" } else { "UNEQUAL" }
            ));
        }
    }
    notes.push("the 13-row mixed-basis count does not match the 8 rows listed".into());

    let mut floor_dev: f64 = 0.0;
    let mut bell_spread: f64 = 0.0;
    let mut bell_desc = Vec::new();
    for (name, m) in presets() {
        let p1 = m.process_at(T1)?;
        let p2 = m.process_at(T2)?;
        for v in class_values(&p1, &p2, "product-floor")? {
            floor_dev = floor_dev.max((v - 2.0).abs());
        }
        let bell = class_values(&p1, &p2, "bell")?;
        bell_spread = bell_spread.max(spread(&bell));
        bell_desc.push(format!(
            "{name} [{}]",
            bell.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ")
        ));
    }
    let floor_ok = floor_dev <= 1e-7;
    let bell_ok = bell_spread <= tol;
    pass &= floor_ok && bell_ok;
    notes.push(format!(
        "2q product floor rows max |W - 2| = {floor_dev:.1e} {}",
        if floor_ok { "ok" } else { "FAIL" }
    ));
    notes.push(format!(
        "2q Bell rows spread = {bell_spread:.4} {}: {}",
        if bell_ok { "ok" } else { "FAIL" },
        bell_desc.join(", ")
    ));

    let m = TwoPhotonModel::cond_i();
    let row = CatalogRow { a: "phi+", b: "phi-", class: "" };
    let mut best = (0.0, f64::MAX, 0.0);
    for k in 2..=16 {
        let t2 = 50.0 * k as f64;
        let v = witness_row(&m.process_at(t2 / 2.0)?, &m.process_at(t2)?, &row)?;
        if (v - 3.7245).abs() < best.1 {
            best = (t2, (v - 3.7245).abs(), v);
        }
    }
    notes.push(format!(
        "diagnostic: cond_I W(phi+, phi-) closest to 3.7245 is {:.4} at t2 = {}",
        best.2, best.0
    ));
    outcome(pass, notes.join("; "))
}

fn measure_properties() -> Result<Outcome> {
    let mut r = rng(7);
    let mut mp1: f64 = 0.0;
    let mut mp1_detect = true;
    let mut mp2: f64 = 0.0;
    let mut mp3: f64 = 0.0;
    for k in 0..50 {
        let d = if k % 2 == 0 { 2 } else { 4 };
        let cp = random_channel(d, 1 + k % d, &mut r)?;
        mp1 = mp1.max(robustness(&cp)?.beta);
        let non_cp = random_tp_map(d, 0.6, &mut r)?;
        let res = robustness(&non_cp)?;
        mp1_detect &= (res.beta > 1e-6) == (oracle_beta(&non_cp)? > 1e-6);

        let lambda = random_tp_map(d, r.random_range(0.0..0.8), &mut r)?;
        let phi = random_channel(d, 2, &mut r)?;
        let before = robustness(&lambda)?.beta;
        let after = robustness(&compose(&phi, &lambda)?)?.beta;
        mp2 = mp2.max(after - before);

        let a = random_tp_map(d, 0.5, &mut r)?;
        let b = random_tp_map(d, 0.5, &mut r)?;
        let w = r.random_range(0.0..=1.0);
        let mix = ProcessRep::linear_combination(&[(w, &a), (1.0 - w, &b)])?;
        let excess = robustness(&mix)?.beta
            - (w * robustness(&a)?.beta + (1.0 - w) * robustness(&b)?.beta);
        mp3 = mp3.max(excess);
    }
    outcome(
        mp1 <= 1e-6 && mp1_detect && mp2 <= 1e-6 && mp3 <= 1e-6,
        format!(
            "50 trials each: max beta(CP) = {mp1:.1e}, non-CP detected = {mp1_detect}, \
             max monotonicity excess = {mp2:.1e}, max convexity excess = {mp3:.1e}"
        ),
    )
}

fn witness_floors() -> Result<Outcome> {
    let mut dynamics: Vec<(ProcessRep, ProcessRep)> = Vec::new();
    for (_, m) in presets() {
        dynamics.push((m.process_at(T1)?, m.process_at(T2)?));
    }
    for m in [SinglePhotonModel::two_peak(), SinglePhotonModel::gaussian_single_peak()] {
        dynamics.push((m.process_at(SINGLE_T1)?, m.process_at(SINGLE_T2)?));
    }
    let mut r = rng(11);
    for k in 0..10 {
        let d = if k % 2 == 0 { 2 } else { 4 };
        dynamics.push((random_channel(d, 2, &mut r)?, random_channel(d, 3, &mut r)?));
    }
    let mut two_min = f64::MAX;
    let mut one_dev: f64 = 0.0;
    let mut count = (0, 0);
    for (p1, p2) in &dynamics {
        let rows = pairs_for_dim(p1.dim())?;
        let mut labels: Vec<&str> = rows.iter().flat_map(|r| [r.a, r.b]).collect();
        labels.sort_unstable();
        labels.dedup();
        for row in &rows {
            two_min = two_min.min(witness_row(p1, p2, row)?);
            count.0 += 1;
        }
        for l in labels {
            let v = witness_one_from_dynamics(p1, p2, &catalog::state(l)?)?.value;
            one_dev = one_dev.max((v - 1.0).abs());
            count.1 += 1;
        }
    }
    outcome(
        two_min >= 2.0 - 1e-8 && one_dev <= 1e-7,
        format!(
            "{} two-state witnesses, min = {two_min:.10}; {} single-state witnesses, max |W - 1| = {one_dev:.1e}",
            count.0, count.1
        ),
    )
}

fn settings_accounting() -> Result<Outcome> {
    let expected = [12, 144, 24, 288, 12, 36];
    let protocols = [
        Protocol::Qpt1,
        Protocol::Qpt2,
        Protocol::Criterion11OneQubit,
        Protocol::Criterion11TwoQubit,
        Protocol::WitnessOneQubit,
        Protocol::WitnessTwoQubit,
    ];
    let got: Vec<u32> = protocols.iter().map(|&p| settings_budget(p).settings).collect();
    let diff_one = got[2] - got[4];
    let diff_two = got[3] - got[5];
    outcome(
        got == expected && diff_one == 12 && diff_two == 252,
        format!("budgets {got:?}, differences {diff_one} and {diff_two}"),
    )
}

fn tomography_pipeline() -> Result<Outcome> {
    let shots = 1_000_000;
    let mut beta_ok = true;
    let mut parts = Vec::new();
    for (name, m) in [("cond_I", TwoPhotonModel::cond_i()), ("cond_IV", TwoPhotonModel::cond_iv())] {
        let p1 = m.process_at(T1)?;
        let p2 = m.process_at(T2)?;
        let exact = beta_at(&p1, &p2)?;
        let mut errs = Vec::new();
        for seed in 0..3u64 {
            let q1 = simulated_qpt(&p1, Some(shots), seed)?;
            let q2 = simulated_qpt(&p2, Some(shots), seed + 1000)?;
            errs.push(beta_at(&q1, &q2)? - exact);
        }
        beta_ok &= errs.iter().all(|e| e.abs() <= 0.01);
        parts.push(format!(
            "{name} beta {exact:.6}, errors [{}]",
            errs.iter().map(|e| format!("{e:+.4}")).collect::<Vec<_>>().join(" ")
        ));
    }

    let worst = |labels: &[&str]| -> Result<f64> {
        let mut w = f64::MAX;
        for l in labels {
            let rho = catalog::state(l)?;
            for seed in 0..20 {
                w = w.min(fidelity(&rho, &simulated_qst(&rho, Some(100_000), seed)?)?);
            }
        }
        Ok(w)
    };
    let one = worst(&["H", "V", "+", "-", "R", "L"])?;
    let two = worst(&["HH", "++", "phi+", "S1"])?;
    parts.push(format!("1q QST worst fidelity at 1e5 shots {one:.6}"));
    parts.push(format!("diagnostic: 2q pure-state worst fidelity {two:.6}"));
    outcome(beta_ok && one > 0.999, parts.join("; "))
}

fn fit_round_trip() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m) in presets() {
        let mut dk: f64 = 0.0;
        let mut dd: f64 = 0.0;
        for seed in 0..20 {
            let e = extract(&synthesize(&m, 0.01, seed)?, T1)?;
            dk = dk.max((e.k - m.k).abs());
            dd = dd.max((e.delta - m.delta_fwhm).abs() / m.delta_fwhm);
        }
        pass &= dk <= 0.02 && dd <= 0.02;
        parts.push(format!("{name} max |dK| {dk:.4}, max rel d(delta) {dd:.4}"));
    }
    outcome(pass, format!("20 seeds, 1% noise: {}", parts.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("BLP reproduction", blp_reproduction),
        ("global/local beta ordering", beta_ordering),
        ("Markovian null", markovian_null),
        ("non-Markovian detection", non_markovian_detection),
        ("witness table structure", table_structure),
        ("measure properties", measure_properties),
        ("witness floors", witness_floors),
        ("settings accounting", settings_accounting),
        ("tomography pipeline", tomography_pipeline),
        ("fit round trip", fit_round_trip),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(check);
        let (pass, detail) = match result {
            Ok(Ok(o)) => (o.pass, o.detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail}",
            k + 1,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
