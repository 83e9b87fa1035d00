//! Config files: a single scenario or a lethality × planner sweep, in JSON or
//! TOML, told apart by a top-level `kind` field.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use pathbelief::planner::Algorithm;
use pathbelief::{check_probability, ScenarioConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfigFile {
    Scenario(ScenarioConfig),
    Sweep(SweepSpec),
}

fn compared_planners() -> Vec<Algorithm> {
    vec![Algorithm::KappaBnitp, Algorithm::RelaxedBnitp, Algorithm::RelaxedItp]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub lethality_values: Vec<f64>,
    #[serde(default = "compared_planners")]
    pub planners: Vec<Algorithm>,
}

impl SweepSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        self.base.validate().context("base scenario")?;
        if self.lethality_values.is_empty() {
            bail!("lethality_values must not be empty");
        }
        for (i, &p) in self.lethality_values.iter().enumerate() {
            check_probability(&format!("lethality_values[{i}]"), p)?;
        }
        let mut labels: Vec<String> = self.lethality_values.iter().map(|p| p.to_string()).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.lethality_values.len() {
            bail!("lethality_values contains duplicates");
        }
        if self.planners.is_empty() {
            bail!("planners must not be empty");
        }
        let mut names: Vec<&str> = self.planners.iter().map(|a| a.name()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.planners.len() {
            bail!("planners contains duplicates");
        }
        Ok(())
    }

    /// Scenario of one grid point.
    pub fn grid_point(&self, lethality: f64, planner: Algorithm) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        cfg.name = format!("leth{lethality}_{planner}");
        cfg.sensor.p_lethal = lethality;
        cfg.planner.algorithm = planner;
        cfg
    }
}

/// Command-line overrides applied on top of a loaded file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub planner: Option<Algorithm>,
}

impl Overrides {
    pub fn apply_scenario(&self, cfg: &mut ScenarioConfig) {
        if let Some(n) = self.trials {
            cfg.num_trials = n;
        }
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(a) = self.planner {
            cfg.planner.algorithm = a;
        }
    }

    /// A planner override restricts the sweep to that planner.
    pub fn apply_sweep(&self, spec: &mut SweepSpec) {
        self.apply_scenario(&mut spec.base);
        if let Some(a) = self.planner {
            spec.planners = vec![a];
        }
    }
}

pub fn parse_config(text: &str, toml_syntax: bool) -> anyhow::Result<ConfigFile> {
    if toml_syntax {
        Ok(toml::from_str(text)?)
    } else {
        Ok(serde_json::from_str(text)?)
    }
}

/// Reads a config file; `.toml` files are parsed as TOML, anything else as JSON.
pub fn load_config(path: &Path) -> anyhow::Result<ConfigFile> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let toml_syntax = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    parse_config(&text, toml_syntax).with_context(|| format!("invalid config {}", path.display()))
}
