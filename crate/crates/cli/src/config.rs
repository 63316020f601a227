//! Run configuration: TOML files plus command-line overrides.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use nmk_core::dephasing::{DephasingModel, SinglePhotonModel, TwoPhotonModel};
use serde::{Deserialize, Serialize};

/// Default `t2` for single-photon models: straddles the two-peak coherence zero.
pub const SINGLE_PHOTON_T2: f64 = 280.0;

pub const BUILTIN_SINGLE: [&str; 2] = ["gaussian_single_peak", "two_peak"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Robustness,
    Witness,
    NBeta,
    NBlp,
    NRhp,
    TomoSim,
    Fit,
}

impl Analysis {
    pub const ALL: [Analysis; 7] = [
        Analysis::Robustness,
        Analysis::Witness,
        Analysis::NBeta,
        Analysis::NBlp,
        Analysis::NRhp,
        Analysis::TomoSim,
        Analysis::Fit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Robustness => "robustness",
            Analysis::Witness => "witness",
            Analysis::NBeta => "n_beta",
            Analysis::NBlp => "n_blp",
            Analysis::NRhp => "n_rhp",
            Analysis::TomoSim => "tomo_sim",
            Analysis::Fit => "fit",
        }
    }
}

impl FromStr for Analysis {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Analysis::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| {
                let known: Vec<&str> = Analysis::ALL.iter().map(|a| a.name()).collect();
                anyhow!("unknown analysis '{s}' (expected one of {})", known.join(", "))
            })
    }
}

/// Where `t1` sits inside `[0, t2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Division {
    Named(DivisionName),
    At(f64),
    Grid { grid: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisionName {
    Half,
}

impl Default for Division {
    fn default() -> Self {
        Division::Named(DivisionName::Half)
    }
}

impl FromStr for Division {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "half" {
            return Ok(Division::default());
        }
        if let Some(rest) = s.strip_prefix("grid") {
            let n = match rest.strip_prefix(':') {
                Some(n) => n.parse().with_context(|| format!("invalid grid size in '{s}'"))?,
                None if rest.is_empty() => 32,
                None => bail!("invalid division '{s}'"),
            };
            return Ok(Division::Grid { grid: n });
        }
        s.parse::<f64>()
            .map(Division::At)
            .map_err(|_| anyhow!("invalid division '{s}' (expected half, a time t1, or grid[:N])"))
    }
}

impl fmt::Display for Division {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Division::Named(DivisionName::Half) => f.write_str("half"),
            Division::At(t) => write!(f, "{t}"),
            Division::Grid { grid } => write!(f, "grid:{grid}"),
        }
    }
}

impl Division {
    /// Division times `t1` for a given `t2`.
    pub fn times(&self, t2: f64) -> Result<Vec<f64>> {
        match *self {
            Division::Named(DivisionName::Half) => Ok(vec![0.5 * t2]),
            Division::At(t1) => {
                if !(t1 > 0.0 && t1 < t2) {
                    bail!("invalid division: need 0 < t1 < t2, got t1 = {t1}, t2 = {t2}");
                }
                Ok(vec![t1])
            }
            Division::Grid { grid } => {
                if grid == 0 {
                    bail!("invalid division: grid needs at least one point");
                }
                Ok((1..=grid).map(|k| t2 * k as f64 / (grid + 1) as f64).collect())
            }
        }
    }
}

/// A model given by name (preset, built-in, or model file) or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Name(String),
    Inline(DephasingModel),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedModel {
    pub name: String,
    pub model: DephasingModel,
}

impl ResolvedModel {
    pub fn default_t2(&self) -> f64 {
        match &self.model {
            DephasingModel::TwoPhoton(m) => m.t_max(),
            DephasingModel::SinglePhoton(_) => SINGLE_PHOTON_T2,
        }
    }

    pub fn two_photon(&self) -> Option<&TwoPhotonModel> {
        match &self.model {
            DephasingModel::TwoPhoton(m) => Some(m),
            DephasingModel::SinglePhoton(_) => None,
        }
    }
}

pub fn builtin_model(name: &str) -> Option<DephasingModel> {
    if let Some(m) = TwoPhotonModel::preset(name) {
        return Some(DephasingModel::TwoPhoton(m));
    }
    match name {
        "gaussian_single_peak" => Some(DephasingModel::SinglePhoton(
            SinglePhotonModel::gaussian_single_peak(),
        )),
        "two_peak" => Some(DephasingModel::SinglePhoton(SinglePhotonModel::two_peak())),
        _ => None,
    }
}

/// Read a model file (TOML with a `kind` key).
pub fn load_model_file(path: &Path) -> Result<DephasingModel> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read model file {}", path.display()))?;
    let model: DephasingModel =
        toml::from_str(&text).with_context(|| format!("invalid model file {}", path.display()))?;
    model.validate().map_err(|e| anyhow!("invalid model in {}: {e}", path.display()))?;
    Ok(model)
}

impl ModelSpec {
    /// Names resolve to built-ins first, then to files relative to `base`.
    /// A missing file whose stem is a built-in name falls back to the built-in.
    pub fn resolve(&self, base: Option<&Path>) -> Result<ResolvedModel> {
        match self {
            ModelSpec::Inline(m) => {
                m.validate().map_err(|e| anyhow!("invalid inline model: {e}"))?;
                Ok(ResolvedModel {
                    name: "inline".into(),
                    model: m.clone(),
                })
            }
            ModelSpec::Name(name) => {
                if let Some(model) = builtin_model(name) {
                    return Ok(ResolvedModel {
                        name: name.clone(),
                        model,
                    });
                }
                let mut path = PathBuf::from(name);
                if path.is_relative() {
                    if let Some(b) = base {
                        if !path.exists() {
                            path = b.join(&path);
                        }
                    }
                }
                let stem = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                if path.exists() {
                    return Ok(ResolvedModel {
                        name: stem,
                        model: load_model_file(&path)?,
                    });
                }
                match builtin_model(&stem) {
                    Some(model) => Ok(ResolvedModel { name: stem, model }),
                    None => bail!("unknown preset or model file '{name}'"),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub t2: Option<f64>,
    #[serde(default)]
    pub division: Division,
    #[serde(default)]
    pub analysis: Vec<Analysis>,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// Values given on the command line; each overrides the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub model: Option<String>,
    pub t2: Option<f64>,
    pub division: Option<Division>,
    pub analysis: Vec<Analysis>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// A validated run: model resolved, divisions expanded.
#[derive(Debug, Clone)]
pub struct Run {
    pub model: ResolvedModel,
    pub t2: f64,
    pub division: Division,
    pub t1s: Vec<f64>,
    pub analyses: Vec<Analysis>,
    pub shots: Option<u64>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    /// Merge the config file (if any) with the overrides. `default_analyses`
    /// applies when neither source lists any.
    pub fn resolve(&self, default_analyses: &[Analysis]) -> Result<Run> {
        let file = match &self.config {
            Some(p) => Some(RunConfig::load(p)?),
            None => None,
        };
        let base = self.config.as_deref().and_then(Path::parent);
        if self.preset.is_some() && self.model.is_some() {
            bail!("--preset and --model are mutually exclusive");
        }
        let spec = match (&self.preset, &self.model) {
            (Some(p), _) => {
                if builtin_model(p).is_none() {
                    bail!("unknown preset '{p}'");
                }
                ModelSpec::Name(p.clone())
            }
            (None, Some(m)) => ModelSpec::Name(m.clone()),
            (None, None) => match &file {
                Some(f) => f.model.clone(),
                None => bail!("no model given (use --preset, --model or --config)"),
            },
        };
        let model_base = if self.preset.is_some() || self.model.is_some() {
            None
        } else {
            base
        };
        let model = spec.resolve(model_base)?;
        let t2 = self
            .t2
            .or(file.as_ref().and_then(|f| f.t2))
            .unwrap_or_else(|| model.default_t2());
        if !(t2 > 0.0 && t2.is_finite()) {
            bail!("t2 must be positive, got {t2}");
        }
        let division = self
            .division
            .or(file.as_ref().map(|f| f.division))
            .unwrap_or_default();
        let t1s = division.times(t2)?;
        let mut analyses = if !self.analysis.is_empty() {
            self.analysis.clone()
        } else {
            file.as_ref().map(|f| f.analysis.clone()).unwrap_or_default()
        };
        if analyses.is_empty() {
            analyses = default_analyses.to_vec();
        }
        if analyses.is_empty() {
            bail!("no analysis selected");
        }
        analyses.sort();
        analyses.dedup();
        let shots = self.shots.or(file.as_ref().and_then(|f| f.shots));
        if shots == Some(0) {
            bail!("shots must be positive");
        }
        let seed = self.seed.or(file.as_ref().and_then(|f| f.seed)).unwrap_or(0);
        let output_dir = self.out.clone().or_else(|| {
            file.as_ref().and_then(|f| f.output_dir.clone()).map(|d| match base {
                Some(b) if d.is_relative() => b.join(d),
                _ => d,
            })
        });
        Ok(Run {
            model,
            t2,
            division,
            t1s,
            analyses,
            shots,
            seed,
            output_dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_parsing() {
        assert_eq!("half".parse::<Division>().unwrap(), Division::default());
        assert_eq!("150".parse::<Division>().unwrap(), Division::At(150.0));
        assert_eq!("grid:8".parse::<Division>().unwrap(), Division::Grid { grid: 8 });
        assert_eq!("grid".parse::<Division>().unwrap(), Division::Grid { grid: 32 });
        assert!("third".parse::<Division>().is_err());
        assert!(Division::At(400.0).times(398.0).is_err());
        assert_eq!(Division::Grid { grid: 3 }.times(8.0).unwrap(), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn config_toml() {
        let cfg: RunConfig = toml::from_str(
            "model = \"cond_II\"\nt2 = 300.0\ndivision = { grid = 4 }\nanalysis = [\"n_blp\", \"robustness\"]\nseed = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.division, Division::Grid { grid: 4 });
        assert_eq!(cfg.analysis, vec![Analysis::NBlp, Analysis::Robustness]);
        let inline: RunConfig = toml::from_str(
            "division = 120.0\n[model]\nkind = \"single_photon\"\ndelta_n = 1.0\n[[model.peaks]]\nweight = 1.0\ncenter = 0.0\nwidth = 0.003\n",
        )
        .unwrap();
        assert!(matches!(inline.model, ModelSpec::Inline(DephasingModel::SinglePhoton(_))));
        assert_eq!(inline.division, Division::At(120.0));
        assert!(toml::from_str::<RunConfig>("model = \"cond_I\"\nbogus = 1\n").is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let o = Overrides {
            preset: Some("cond_III".into()),
            division: Some(Division::At(100.0)),
            ..Default::default()
        };
        let run = o.resolve(&[Analysis::Robustness]).unwrap();
        assert_eq!(run.t2, 398.0);
        assert_eq!(run.t1s, vec![100.0]);
        assert_eq!(run.analyses, vec![Analysis::Robustness]);
        let bad = Overrides {
            preset: Some("cond_V".into()),
            ..Default::default()
        };
        assert!(bad.resolve(&[Analysis::Robustness]).is_err());
    }
}
