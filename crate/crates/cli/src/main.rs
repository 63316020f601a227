//! `nmk`: presets, scenario runs, witness tables, parameter fits and
//! simulated tomography for dephasing dynamics.

mod analysis;
mod config;
mod output;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use nmk_core::dephasing::{SinglePhotonModel, TwoPhotonModel};
use nmk_core::fitkit::{extract, load_series, synthesize, write_series, ExtractedParams, FitInputs};
use nmk_core::tomo::{qst, read_records_csv};
use serde::Serialize;

use crate::analysis::{tomo_point, witness_table, TomoPoint, FIT_NOISE};
use crate::config::{Analysis, Division, Overrides, BUILTIN_SINGLE};
use crate::output::{table_csv, table_text, to_json, write_text, SCHEMA};

#[derive(Parser)]
#[command(name = "nmk", version, about = "Non-Markovianity from non-CP intermediate maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected analyses and emit JSON records and CSV series.
    Run(Common),
    /// Evaluate the witness over the state-pair catalog of the model.
    Table(Common),
    /// Extract model parameters from a spectrum and two trace-distance curves.
    Fit(FitArgs),
    /// State tomography from recorded counts, or the simulated process pipeline.
    Tomo(TomoArgs),
    /// List the built-in models.
    Presets {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in model: cond_I..cond_IV, gaussian_single_peak, two_peak.
    #[arg(long)]
    preset: Option<String>,
    /// Built-in model name or model file (TOML with a `kind` key).
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    t2: Option<f64>,
    /// half, an explicit t1, or grid[:N].
    #[arg(long)]
    division: Option<Division>,
    /// Comma-separated: robustness, witness, n_beta, n_blp, n_rhp, tomo_sim, fit.
    #[arg(long, value_delimiter = ',')]
    analysis: Vec<Analysis>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            config: self.config.clone(),
            preset: self.preset.clone(),
            model: self.model.clone(),
            t2: self.t2,
            division: self.division,
            analysis: self.analysis.clone(),
            shots: self.shots,
            seed: self.seed,
            out: self.out.clone(),
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Spectrum CSV (header x,y).
    #[arg(long, requires_all = ["plate1", "plate2"])]
    spectrum: Option<PathBuf>,
    /// Trace distance over the first plate window.
    #[arg(long)]
    plate1: Option<PathBuf>,
    /// Trace distance over the second plate window.
    #[arg(long)]
    plate2: Option<PathBuf>,
    #[arg(long, default_value_t = nmk_core::dephasing::DEFAULT_SWITCHOVER)]
    switchover: f64,
    /// Synthesize the inputs from a two-photon preset instead of reading files.
    #[arg(long, conflicts_with = "spectrum")]
    preset: Option<String>,
    #[arg(long, default_value_t = FIT_NOISE)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TomoArgs {
    /// Measurement records CSV (observable,outcome,count) for state tomography.
    #[arg(long, conflicts_with_all = ["config", "preset", "model", "analysis"])]
    records: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Config(anyhow::Error),
    Analysis(anyhow::Error),
}

impl Failure {
    fn exit(self) -> ExitCode {
        let (code, e) = match self {
            Failure::Config(e) => (1, e),
            Failure::Analysis(e) => (2, e),
        };
        eprintln!("error: {e:#}");
        ExitCode::from(code)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn analysis_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Analysis(e.into())
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>, name: &str) -> Outcome {
    let json = to_json(value).map_err(analysis_err)?;
    if let Some(dir) = out {
        write_text(dir, name, &json).map_err(analysis_err)?;
    }
    print!("{json}");
    Ok(())
}

fn cmd_run(args: &Common) -> Outcome {
    let run = args.overrides().resolve(&[]).map_err(config_err)?;
    let result = analysis::execute(&run).map_err(analysis_err)?;
    if let Some(dir) = &run.output_dir {
        for (name, series) in &result.series {
            output::write_series(dir, &format!("{name}.csv"), series).map_err(analysis_err)?;
        }
    }
    emit(&result.record, run.output_dir.as_ref(), "result.json")
}

#[derive(Serialize)]
struct TableRecord<'a> {
    schema: &'static str,
    model_name: &'a str,
    tables: Vec<analysis::WitnessTable>,
}

fn cmd_table(args: &Common) -> Outcome {
    let run = args.overrides().resolve(&[Analysis::Witness]).map_err(config_err)?;
    let tables = run
        .t1s
        .iter()
        .map(|&t1| witness_table(&run.model.model, t1, run.t2))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(analysis_err)?;
    let mut text = String::new();
    for (k, t) in tables.iter().enumerate() {
        if k > 0 {
            text.push('\n');
        }
        text += &table_text(&run.model.name, t);
    }
    if let Some(dir) = &run.output_dir {
        let many = tables.len() > 1;
        for t in &tables {
            let name = if many {
                format!("table_t1_{}.csv", t.t1)
            } else {
                "table.csv".to_string()
            };
            write_text(dir, &name, &table_csv(t).map_err(analysis_err)?).map_err(analysis_err)?;
        }
        write_text(dir, "table.txt", &text).map_err(analysis_err)?;
        let record = TableRecord {
            schema: SCHEMA,
            model_name: &run.model.name,
            tables: tables.clone(),
        };
        write_text(dir, "table.json", &to_json(&record).map_err(analysis_err)?)
            .map_err(analysis_err)?;
    }
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct FitRecord {
    schema: &'static str,
    source: String,
    switchover: f64,
    #[serde(flatten)]
    params: ExtractedParams,
}

fn cmd_fit(args: &FitArgs) -> Outcome {
    let (source, inputs) = match (&args.spectrum, &args.preset) {
        (Some(spectrum), _) => {
            let load = |p: &Option<PathBuf>| {
                let p = p.as_ref().ok_or_else(|| anyhow!("--plate1 and --plate2 are required"))?;
                load_series(p).with_context(|| format!("reading {}", p.display()))
            };
            let inputs = FitInputs {
                spectrum: load(&Some(spectrum.clone())).map_err(config_err)?,
                plate1: load(&args.plate1).map_err(config_err)?,
                plate2: load(&args.plate2).map_err(config_err)?,
            };
            ("files".to_string(), inputs)
        }
        (None, Some(name)) => {
            let m = TwoPhotonModel::preset(name)
                .ok_or_else(|| config_err(anyhow!("unknown two-photon preset '{name}'")))?;
            if !(args.noise >= 0.0) {
                return Err(config_err(anyhow!("noise must be nonnegative")));
            }
            let inputs = synthesize(&m, args.noise, args.seed).map_err(analysis_err)?;
            (format!("synthetic {name}, noise {}, seed {}", args.noise, args.seed), inputs)
        }
        (None, None) => {
            return Err(config_err(anyhow!(
                "give --spectrum/--plate1/--plate2 or --preset"
            )))
        }
    };
    if !(args.switchover > 0.0) {
        return Err(config_err(anyhow!("switchover must be positive")));
    }
    let params = extract(&inputs, args.switchover).map_err(analysis_err)?;
    if let (Some(dir), Some(_)) = (&args.out, &args.preset) {
        for (name, series) in [
            ("spectrum.csv", &inputs.spectrum),
            ("plate1.csv", &inputs.plate1),
            ("plate2.csv", &inputs.plate2),
        ] {
            let mut buf = Vec::new();
            write_series(&mut buf, series).map_err(analysis_err)?;
            write_text(dir, name, &String::from_utf8_lossy(&buf)).map_err(analysis_err)?;
        }
    }
    let record = FitRecord {
        schema: SCHEMA,
        source,
        switchover: args.switchover,
        params,
    };
    emit(&record, args.out.as_ref(), "fit.json")
}

#[derive(Serialize)]
struct StateRecord {
    schema: &'static str,
    dim: usize,
    settings: usize,
    /// Row-major entries as `[re, im]`.
    rho: Vec<Vec<[f64; 2]>>,
    purity: f64,
}

#[derive(Serialize)]
struct TomoRecord {
    schema: &'static str,
    model_name: String,
    points: Vec<TomoPoint>,
}

/// Shots per setting when `tomo` is run without `--shots`.
const DEFAULT_TOMO_SHOTS: u64 = 1_000_000;

fn cmd_tomo(args: &TomoArgs) -> Outcome {
    if let Some(path) = &args.records {
        let file = File::open(path)
            .with_context(|| format!("cannot open {}", path.display()))
            .map_err(config_err)?;
        let records = read_records_csv(BufReader::new(file)).map_err(config_err)?;
        let rho = qst(&records).map_err(analysis_err)?;
        let m = rho.matrix();
        let d = rho.dim();
        let record = StateRecord {
            schema: SCHEMA,
            dim: d,
            settings: records.len(),
            rho: (0..d)
                .map(|i| (0..d).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
            purity: m.matmul(m).trace().re,
        };
        return emit(&record, args.common.out.as_ref(), "state.json");
    }
    let mut run = args
        .common
        .overrides()
        .resolve(&[Analysis::TomoSim])
        .map_err(config_err)?;
    run.shots = run.shots.or(Some(DEFAULT_TOMO_SHOTS));
    let points = run
        .t1s
        .iter()
        .map(|&t1| tomo_point(&run.model.model, t1, run.t2, run.shots, run.seed))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(analysis_err)?;
    let record = TomoRecord {
        schema: SCHEMA,
        model_name: run.model.name.clone(),
        points,
    };
    emit(&record, run.output_dir.as_ref(), "tomo.json")
}

#[derive(Serialize)]
struct PresetsRecord {
    schema: &'static str,
    two_photon: BTreeMap<&'static str, TwoPhotonModel>,
    single_photon: BTreeMap<&'static str, SinglePhotonModel>,
}

fn cmd_presets(json: bool) -> Outcome {
    let singles = vec![
        (BUILTIN_SINGLE[0], SinglePhotonModel::gaussian_single_peak()),
        (BUILTIN_SINGLE[1], SinglePhotonModel::two_peak()),
    ];
    if json {
        let record = PresetsRecord {
            schema: SCHEMA,
            two_photon: TwoPhotonModel::presets().into_iter().collect(),
            single_photon: singles.into_iter().collect(),
        };
        return emit(&record, None, "");
    }
    println!("two-photon presets (t2 default = 2 x switchover)");
    println!(
        "  {:<9} {:>8} {:>10} {:>8} {:>8} {:>8} {:>10}",
        "name", "K", "omega0", "delta", "C", "dn", "switchover"
    );
    for (name, m) in TwoPhotonModel::presets() {
        println!(
            "  {name:<9} {:>8.4} {:>10.4} {:>8.4} {:>8.4} {:>8.4} {:>10}",
            m.k, m.omega0, m.delta_fwhm, m.c, m.delta_n, m.switchover
        );
    }
    println!("single-photon models (t2 default = {})", config::SINGLE_PHOTON_T2);
    for (name, m) in singles {
        let peaks: Vec<String> = m
            .peaks
            .iter()
            .map(|p| format!("{}@{} w{}", p.weight, p.center, p.width))
            .collect();
        println!("  {name:<21} dn {}  peaks {}", m.delta_n, peaks.join(", "));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Table(a) => cmd_table(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Tomo(a) => cmd_tomo(a),
        Command::Presets { json } => cmd_presets(*json),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
