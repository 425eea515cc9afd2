//! Campaign specification: TOML file with `[scenario]`, `[algorithms]` and
//! `[params]` sections.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::channel::ScenarioConfig;
use crate::convex::SolverSettings;
use crate::error::{Error, Result};
use crate::heuristic::{HeuristicParams, Regularizer};
use crate::mmf_sdr::MmfParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Sea,
    SdrUpper,
    SdrD,
    SdrG,
    Heuristic,
    Unicast,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Sea,
        Algorithm::SdrUpper,
        Algorithm::SdrD,
        Algorithm::SdrG,
        Algorithm::Heuristic,
        Algorithm::Unicast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sea => "sea",
            Algorithm::SdrUpper => "sdr_upper",
            Algorithm::SdrD => "sdr_d",
            Algorithm::SdrG => "sdr_g",
            Algorithm::Heuristic => "heuristic",
            Algorithm::Unicast => "unicast",
        }
    }

    /// Needs the relaxed semidefinite solution.
    pub fn uses_relaxation(self) -> bool {
        matches!(self, Algorithm::Sea | Algorithm::SdrUpper | Algorithm::SdrD | Algorithm::SdrG)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Parses a comma-separated algorithm list, dropping duplicates.
pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for name in list.split(',').filter(|s| !s.trim().is_empty()) {
        let a: Algorithm = name.parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

/// Knobs for every algorithm plus bookkeeping flags.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignParams {
    pub mmf: MmfParams,
    /// Phase-alignment steps per group; `None` means the total UE count.
    pub iterations: Option<usize>,
    pub emphasis: f64,
    pub regularizer: Regularizer,
    pub unicast_eps: f64,
    /// Write measured runtimes; when false the column is zero so output is
    /// reproducible byte for byte.
    pub record_runtime: bool,
}

impl Default for CampaignParams {
    fn default() -> Self {
        CampaignParams {
            mmf: MmfParams::default(),
            iterations: None,
            emphasis: 1.1,
            regularizer: Regularizer::NoiseOverPower,
            unicast_eps: 0.01,
            record_runtime: true,
        }
    }
}

impl CampaignParams {
    pub fn heuristic(&self, scenario: &ScenarioConfig) -> HeuristicParams {
        HeuristicParams {
            iterations: self.iterations,
            emphasis: self.emphasis,
            p_max: scenario.max_power_per_ap,
            noise: scenario.noise_power(),
            regularizer: self.regularizer,
            unicast_eps: self.unicast_eps,
            solver: self.mmf.solver,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    pub scenario: ScenarioConfig,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub out_dir: PathBuf,
    pub params: CampaignParams,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        CampaignSpec {
            scenario: ScenarioConfig::default(),
            algorithms: vec![Algorithm::Sea, Algorithm::Heuristic, Algorithm::Unicast],
            trials: 20,
            out_dir: PathBuf::from("results"),
            params: CampaignParams::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileAlgorithms {
    list: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileParams {
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    eps: Option<f64>,
    kappa: Option<f64>,
    zeta: Option<f64>,
    tol_rank: Option<f64>,
    max_elim: Option<usize>,
    n_candidates: Option<usize>,
    mmpc_eps: Option<f64>,
    iterations: Option<usize>,
    emphasis: Option<f64>,
    regularizer: Option<String>,
    unicast_eps: Option<f64>,
    record_runtime: Option<bool>,
    tol_gap: Option<f64>,
    tol_feas: Option<f64>,
    max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSpec {
    scenario: Option<toml::Table>,
    algorithms: Option<FileAlgorithms>,
    params: Option<FileParams>,
}

fn scenario_from_table(mut table: toml::Table) -> Result<ScenarioConfig> {
    let preset = match table.remove("preset") {
        Some(toml::Value::String(s)) => s,
        Some(_) => return Err(Error::Config("`preset` must be a string".into())),
        None => "small".to_string(),
    };
    let base = ScenarioConfig::preset(&preset)?;
    let mut merged = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
    for (k, v) in table {
        if !merged.contains_key(&k) {
            return Err(Error::Config(format!("unknown scenario key `{k}`")));
        }
        match (merged.get_mut(&k), v) {
            (Some(toml::Value::Table(dst)), toml::Value::Table(src)) => dst.extend(src),
            (Some(dst), v) => *dst = v,
            (None, _) => unreachable!(),
        }
    }
    toml::Value::Table(merged)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

impl CampaignSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: FileSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut spec = CampaignSpec {
            scenario: scenario_from_table(file.scenario.unwrap_or_default())?,
            ..CampaignSpec::default()
        };
        if let Some(list) = file.algorithms.and_then(|a| a.list) {
            spec.algorithms = parse_algorithms(&list.join(","))?;
        }
        if let Some(p) = file.params {
            let m = &mut spec.params.mmf;
            let set = |dst: &mut f64, v: Option<f64>| {
                if let Some(v) = v {
                    *dst = v;
                }
            };
            set(&mut m.eps, p.eps);
            set(&mut m.kappa, p.kappa);
            set(&mut m.zeta, p.zeta);
            set(&mut m.tol_rank, p.tol_rank);
            set(&mut m.mmpc_eps, p.mmpc_eps);
            set(&mut m.solver.tol_gap, p.tol_gap);
            set(&mut m.solver.tol_feas, p.tol_feas);
            m.max_elim = p.max_elim.unwrap_or(m.max_elim);
            m.n_candidates = p.n_candidates.unwrap_or(m.n_candidates);
            m.solver.max_iter = p.max_iter.unwrap_or(m.solver.max_iter);
            set(&mut spec.params.emphasis, p.emphasis);
            set(&mut spec.params.unicast_eps, p.unicast_eps);
            spec.params.iterations = p.iterations.or(spec.params.iterations);
            spec.params.record_runtime = p.record_runtime.unwrap_or(spec.params.record_runtime);
            if let Some(r) = p.regularizer {
                spec.params.regularizer = match r.as_str() {
                    "noise_over_power" => Regularizer::NoiseOverPower,
                    "noise" => Regularizer::Noise,
                    other => return Err(Error::Config(format!("unknown regularizer `{other}`"))),
                };
            }
            spec.trials = p.trials.unwrap_or(spec.trials);
            if let Some(seed) = p.seed {
                spec.scenario.rng_seed = seed;
            }
            if let Some(out) = p.out {
                spec.out_dir = out;
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("at least one trial required".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithm set is empty".into()));
        }
        let m = &self.params.mmf;
        if !(m.eps > 0.0 && m.mmpc_eps > 0.0 && self.params.unicast_eps > 0.0) {
            return Err(Error::Config("bisection accuracies must be positive".into()));
        }
        if !(m.kappa > 0.0 && m.kappa < 1.0) || !(m.zeta > 0.0) {
            return Err(Error::Config("need 0 < kappa < 1 and zeta > 0".into()));
        }
        if !(m.tol_rank > 0.0 && m.tol_rank < 1.0) {
            return Err(Error::Config("tol_rank must lie in (0, 1)".into()));
        }
        self.params.heuristic(&self.scenario).validate()
    }

    pub fn solver(&self) -> &SolverSettings {
        &self.params.mmf.solver
    }
}
