//! TOML experiment configs.
//!
//! One file describes one experiment: which routine to run, where the
//! artifacts go, the map or field under study, and a flat `[params]`
//! table whose relevant keys depend on the experiment. Unknown keys
//! are rejected so typos fail at parse time instead of silently
//! falling back to defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rotlab_core::cover::MapFamily;
use rotlab_core::flows::FieldFamily;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Rotset,
    Rotnum,
    Farey,
    LineVerify,
    LineSearch,
    Perorb,
    PseudoTest,
    Sweep,
    FlowCheck,
    AreaCheck,
    ReturnStats,
    MorphismCheck,
    Prop12Check,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Rotset => "rotset",
            Experiment::Rotnum => "rotnum",
            Experiment::Farey => "farey",
            Experiment::LineVerify => "line-verify",
            Experiment::LineSearch => "line-search",
            Experiment::Perorb => "perorb",
            Experiment::PseudoTest => "pseudo-test",
            Experiment::Sweep => "sweep",
            Experiment::FlowCheck => "flow-check",
            Experiment::AreaCheck => "area-check",
            Experiment::ReturnStats => "return-stats",
            Experiment::MorphismCheck => "morphism-check",
            Experiment::Prop12Check => "prop12-check",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Directory receiving result.json, data.csv and meta.json.
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Map under study, for every experiment that drives a map.
    #[serde(default)]
    pub map: Option<MapFamily>,
    /// Second map for two-map experiments: the inner factor g of
    /// morphism-check, with [map] as the outer factor f.
    #[serde(default)]
    pub map_b: Option<MapFamily>,
    /// Vector field for flow experiments.
    #[serde(default)]
    pub field: Option<FieldFamily>,
    #[serde(default)]
    pub params: Params,
}

/// Flat parameter table. Every field is optional here; the experiment
/// dispatcher decides which ones it needs and which defaults apply.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    // Monte Carlo sampling.
    pub n_samples: Option<usize>,
    pub max_iter: Option<u64>,
    pub recur_tol: Option<f64>,
    pub spread_tol: Option<f64>,
    pub backward: Option<bool>,

    // Single-orbit start point and scan length.
    pub x: Option<f64>,
    pub u: Option<f64>,
    pub horizon: Option<u64>,

    // Farey interval queries.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub max_den: Option<i64>,

    // Essential lines: base position, iterate count, reference angle,
    // Farey interval as "p/q" strings, and the search budget.
    pub x0: Option<f64>,
    pub n: Option<usize>,
    pub rho: Option<f64>,
    pub interval: Option<[String; 2]>,
    pub budget: Option<usize>,

    // Periodic orbit searches.
    pub p: Option<i64>,
    pub q: Option<i64>,
    pub grid: Option<usize>,
    pub grid_cap: Option<usize>,
    pub max_newton: Option<usize>,
    pub residual_tol: Option<f64>,

    // Deck translation exponent for prop12-check.
    pub k: Option<i64>,

    // Perturbation sweeps.
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub theta_steps: Option<usize>,

    // Flows.
    pub ts: Option<Vec<f64>>,
    pub step: Option<f64>,
    pub t_max: Option<f64>,

    // Area checks: one area integral per base position.
    pub x0s: Option<Vec<f64>>,
}

pub fn load(path: &Path) -> Result<RunConfig, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
}
