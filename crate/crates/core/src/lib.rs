//! Belief tracking and information-gathering planning for agents that report
//! through a path-based sensor.
//!
//! Agents are deployed one at a time from a base cell into a grid that holds
//! hazards (`Z`) and targets (`X`). A surviving agent returns noisy per-cell
//! target readings (`Y`). A destroyed agent only tells us that it was
//! destroyed *somewhere* along its path (`Θ = 1`). The belief state keeps
//! three per-cell maps: `P(Z=1)`, `P(X=1)` and the hazard/target correlation
//! `κ = P(X=1 | Z=1)`.
//!
//! Module map:
//! - [`world`]: ground-truth generation and traversal simulation.
//! - [`belief`]: belief maps and the posterior updates for both sensor outcomes.
//! - [`likelihood`]: destruction hypotheses and their trigger weights.
//! - [`planner`]: paths, expected information gain and greedy planners.
//! - [`metrics`]: Shannon entropy of belief maps and per-deployment traces.
//! - [`experiment`]: sequential deployments, trials and Monte Carlo runs.
//! - [`oracle`]: brute-force joint enumeration used to verify the updates.

pub mod belief;
pub mod experiment;
pub mod likelihood;
pub mod metrics;
pub mod oracle;
pub mod planner;
pub mod seed;
pub mod world;

pub use belief::{BeliefState, CellBelief, InferenceModel};
pub use experiment::{MonteCarloResult, ScenarioConfig, TrialResult};
pub use likelihood::OmegaLikelihoods;
pub use metrics::EntropyTrace;
pub use planner::{Algorithm, Path, PlannerConfig};
pub use world::{Cell, GridDims, GroundTruth, SensorParams, TraversalOutcome, WorldGenParams};

/// Checks that `value` is a probability; `field` names it in the error.
pub fn check_probability(field: &str, value: f64) -> Result<(), ParamError> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ParamError::OutOfRange {
            field: field.to_string(),
            value,
        })
    }
}

/// Invalid model or scenario parameter.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("{field} must be a probability in [0, 1], got {value}")]
    OutOfRange { field: String, value: f64 },
    #[error("{field} must be at least {min}, got {value}")]
    TooSmall { field: String, min: u64, value: u64 },
}

impl ParamError {
    /// Name of the offending field.
    pub fn field(&self) -> &str {
        match self {
            ParamError::OutOfRange { field, .. } | ParamError::TooSmall { field, .. } => field,
        }
    }

    /// Qualifies the field with the enclosing section, e.g. `world_gen.p_hazard`.
    pub fn within(self, section: &str) -> Self {
        match self {
            ParamError::OutOfRange { field, value } => ParamError::OutOfRange {
                field: format!("{section}.{field}"),
                value,
            },
            ParamError::TooSmall { field, min, value } => ParamError::TooSmall {
                field: format!("{section}.{field}"),
                min,
                value,
            },
        }
    }
}
