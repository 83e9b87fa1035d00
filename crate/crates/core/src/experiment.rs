//! Sequential deployments, single trials and Monte Carlo replication.
//!
//! Seeds form a tree: the master seed yields one seed per trial, a trial seed
//! yields the world seed and one seed per deployment, and a deployment seed
//! yields the planner and traversal seeds (see [`crate::seed`]). Every output
//! is a function of the configuration and the master seed only, whatever
//! order the trials run in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::{BeliefError, BeliefState, CellBelief};
use crate::likelihood::{enumerate_omega, LikelihoodError};
use crate::metrics::{EntropyTrace, TraceRow};
use crate::planner::{plan_path, Path, PlannerConfig, PlannerError};
use crate::seed::{derive_seed, Stream};
use crate::world::{
    generate_world, simulate_traversal, GridDims, GroundTruth, SensorParams, WorldError, WorldGenParams,
};
use crate::{check_probability, ParamError};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid scenario: {0}")]
    Param(#[from] ParamError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Likelihood(#[from] LikelihoodError),
}

fn default_name() -> String {
    "scenario".to_string()
}

fn half() -> f64 {
    0.5
}

/// Everything needed to reproduce a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub dims: GridDims,
    #[serde(default)]
    pub world_gen: WorldGenParams,
    #[serde(default)]
    pub sensor: SensorParams,
    #[serde(default)]
    pub planner: PlannerConfig,
    /// Number of sequential deployments per trial (M).
    pub num_agents: usize,
    pub num_trials: usize,
    #[serde(default = "half")]
    pub prior_z: f64,
    #[serde(default = "half")]
    pub prior_x: f64,
    #[serde(default = "half")]
    pub prior_kappa: f64,
    #[serde(default)]
    pub master_seed: u64,
    /// Keep the belief after every deployment.
    #[serde(default)]
    pub snapshots: bool,
}

impl ScenarioConfig {
    /// 9×9 grid, M = 100, 25 trials, 5 % malfunction, 95 % / 5 % target
    /// sensor, at the given lethality.
    pub fn desk_protocol(p_lethal: f64) -> Self {
        ScenarioConfig {
            name: "protocol".to_string(),
            dims: GridDims { width: 9, height: 9 },
            world_gen: WorldGenParams::default(),
            sensor: SensorParams {
                p_lethal,
                p_malfunction: 0.05,
                target_tpr: 0.95,
                target_fpr: 0.05,
            },
            planner: PlannerConfig::default(),
            num_agents: 100,
            num_trials: 25,
            prior_z: 0.5,
            prior_x: 0.5,
            prior_kappa: 0.5,
            master_seed: 0,
            snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.dims.validate().map_err(|e| e.within("dims"))?;
        self.world_gen.validate().map_err(|e| e.within("world_gen"))?;
        self.sensor.validate().map_err(|e| e.within("sensor"))?;
        self.planner.validate(self.dims)?;
        check_probability("prior_z", self.prior_z)?;
        check_probability("prior_x", self.prior_x)?;
        check_probability("prior_kappa", self.prior_kappa)?;
        for (field, value) in [("num_agents", self.num_agents), ("num_trials", self.num_trials)] {
            if value < 1 {
                return Err(ParamError::TooSmall {
                    field: field.to_string(),
                    min: 1,
                    value: value as u64,
                }
                .into());
            }
        }
        Ok(())
    }

    pub fn prior(&self) -> CellBelief {
        CellBelief::new(self.prior_z, self.prior_x, self.prior_kappa)
    }
}

/// What happened in one deployment, as seen by the operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentLog {
    pub deployment: usize,
    pub path: Path,
    pub theta: bool,
    pub readings_present: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// Entropy of the prior maps, before the first deployment.
    pub initial: TraceRow,
    pub trace: EntropyTrace,
    pub final_belief: BeliefState,
    pub ground_truth: GroundTruth,
    pub log: Vec<DeploymentLog>,
    /// Belief after each deployment, when enabled in the scenario.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<BeliefState>,
}

/// One plan / traverse / update cycle.
pub fn run_deployment(
    belief: &BeliefState,
    world: &GroundTruth,
    cfg: &ScenarioConfig,
    m: usize,
    seed: u64,
) -> Result<(BeliefState, DeploymentLog), ExperimentError> {
    let mut planner_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Planner, 0));
    let path = plan_path(belief, &cfg.planner, &cfg.sensor, &mut planner_rng)?;
    let outcome = simulate_traversal(world, &path, &cfg.sensor, derive_seed(seed, Stream::Traversal, 0))?;
    let model = cfg.planner.algorithm.model();
    let next = match &outcome.readings {
        Some(readings) if !outcome.theta => model.update_no_trigger(belief, &path, readings, &cfg.sensor)?,
        _ => {
            let table = enumerate_omega(belief, &path, &cfg.sensor)?;
            model.update_trigger(belief, &path, &cfg.sensor, &table)?
        }
    };
    let log = DeploymentLog {
        deployment: m,
        path,
        theta: outcome.theta,
        readings_present: outcome.readings.is_some(),
    };
    Ok((next, log))
}

pub fn trial_seed(master_seed: u64, trial: usize) -> u64 {
    derive_seed(master_seed, Stream::Trial, trial as u64)
}

/// Generates a world and runs `num_agents` deployments on it.
pub fn run_trial(cfg: &ScenarioConfig, trial: usize, seed: u64) -> Result<TrialResult, ExperimentError> {
    cfg.validate()?;
    let gen = cfg.world_gen.with_seed(derive_seed(seed, Stream::World, 0));
    let world = generate_world(cfg.dims, gen)?;
    let mut belief = BeliefState::uniform(cfg.dims, cfg.prior())?;
    let initial = TraceRow::of(0, &belief);
    let mut trace = EntropyTrace::new(cfg.name.clone(), cfg.planner.algorithm.name(), seed);
    let mut log = Vec::with_capacity(cfg.num_agents);
    let mut snapshots = Vec::new();
    for m in 0..cfg.num_agents {
        let (next, entry) = run_deployment(&belief, &world, cfg, m, derive_seed(seed, Stream::Deployment, m as u64))?;
        belief = next;
        trace
            .record_deployment(m, &belief)
            .expect("deployments are recorded in order");
        log.push(entry);
        if cfg.snapshots {
            snapshots.push(belief.clone());
        }
    }
    Ok(TrialResult {
        trial,
        seed,
        initial,
        trace,
        final_belief: belief,
        ground_truth: world,
        log,
        snapshots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub deployment: usize,
    pub mean_h_z: f64,
    pub mean_h_x: f64,
    pub mean_h_total: f64,
    /// Sample standard deviation; zero for a single trial.
    pub std_h_total: f64,
}

/// Per-deployment statistics across trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub initial_mean_h_total: f64,
    pub rows: Vec<AggregateRow>,
}

impl Aggregate {
    pub fn of(trials: &[TrialResult]) -> Self {
        let n = trials.len();
        let deployments = trials.first().map_or(0, |t| t.trace.len());
        let mean = |f: &dyn Fn(&TrialResult) -> f64| trials.iter().map(f).sum::<f64>() / n as f64;
        let rows = (0..deployments)
            .map(|m| {
                let mean_h_total = mean(&|t| t.trace.per_deployment[m].h_total);
                let var = if n > 1 {
                    trials
                        .iter()
                        .map(|t| (t.trace.per_deployment[m].h_total - mean_h_total).powi(2))
                        .sum::<f64>()
                        / (n - 1) as f64
                } else {
                    0.0
                };
                AggregateRow {
                    deployment: m,
                    mean_h_z: mean(&|t| t.trace.per_deployment[m].h_z),
                    mean_h_x: mean(&|t| t.trace.per_deployment[m].h_x),
                    mean_h_total,
                    std_h_total: var.sqrt(),
                }
            })
            .collect();
        Aggregate {
            trials: n,
            initial_mean_h_total: mean(&|t| t.initial.h_total),
            rows,
        }
    }

    /// Mean trace in the per-trial trace layout.
    pub fn mean_trace(&self) -> Vec<TraceRow> {
        self.rows
            .iter()
            .map(|r| TraceRow {
                deployment: r.deployment,
                h_z: r.mean_h_z,
                h_x: r.mean_h_x,
                h_total: r.mean_h_total,
            })
            .collect()
    }

    pub fn final_mean_h_total(&self) -> Option<f64> {
        self.rows.last().map(|r| r.mean_h_total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub trials: Vec<TrialResult>,
    pub aggregate: Aggregate,
}

/// Runs all trials in parallel. Results are ordered by trial index.
pub fn run_monte_carlo(cfg: &ScenarioConfig) -> Result<MonteCarloResult, ExperimentError> {
    cfg.validate()?;
    let trials = (0..cfg.num_trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, i, trial_seed(cfg.master_seed, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = Aggregate::of(&trials);
    Ok(MonteCarloResult { trials, aggregate })
}

/// Same as [`run_monte_carlo`] on the calling thread.
pub fn run_monte_carlo_serial(cfg: &ScenarioConfig) -> Result<MonteCarloResult, ExperimentError> {
    cfg.validate()?;
    let trials = (0..cfg.num_trials)
        .map(|i| run_trial(cfg, i, trial_seed(cfg.master_seed, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = Aggregate::of(&trials);
    Ok(MonteCarloResult { trials, aggregate })
}
