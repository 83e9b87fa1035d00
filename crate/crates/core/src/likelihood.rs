//! Destruction hypotheses for a triggered path sensor.
//!
//! A single agent can be destroyed at most once, so the space of destruction
//! vectors that can explain `Θ = 1` is indexed by the position `j` of the
//! fatal visit. Its trigger weight is the probability of surviving every
//! earlier position and being destroyed at `j`, with each factor taken as the
//! marginal over the current hazard belief of the visited cell. Vectors with
//! two or more destructions have weight zero and are never materialised; the
//! all-survive vector cannot trigger the sensor and is omitted as well.

use serde::{Deserialize, Serialize};

use crate::belief::{BeliefState, CellBelief};
use crate::planner::Path;
use crate::world::{Cell, SensorParams};

#[derive(Debug, thiserror::Error)]
pub enum LikelihoodError {
    #[error("cannot enumerate destruction hypotheses for an empty path")]
    EmptyPath,
    #[error("cell {0} is outside the belief grid")]
    OutOfBounds(Cell),
}

/// One single-destruction hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Path position (not cell) of the fatal visit.
    pub position: usize,
    pub weight: f64,
}

/// All single-destruction hypotheses of one path, in position order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaLikelihoods {
    cells: Vec<Cell>,
    hypotheses: Vec<Hypothesis>,
}

impl OmegaLikelihoods {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn weights(&self) -> Vec<f64> {
        self.hypotheses.iter().map(|h| h.weight).collect()
    }

    /// Probability that the path sensor fires at all.
    pub fn total(&self) -> f64 {
        self.hypotheses.iter().map(|h| h.weight).sum()
    }
}

/// `P(Δ=1) = z p_lethal + (1 - z) p_malfunction`.
pub fn marginal_destruction_prob(cell: &CellBelief, sensor: &SensorParams) -> f64 {
    cell.z * sensor.p_lethal + (1.0 - cell.z) * sensor.p_malfunction
}

pub fn enumerate_omega(
    belief: &BeliefState,
    path: &Path,
    sensor: &SensorParams,
) -> Result<OmegaLikelihoods, LikelihoodError> {
    let cells = path.cells();
    if cells.is_empty() {
        return Err(LikelihoodError::EmptyPath);
    }
    if let Some(&c) = cells.iter().find(|c| !belief.dims.contains(**c)) {
        return Err(LikelihoodError::OutOfBounds(c));
    }
    let hypotheses = hypothesis_weights(belief, cells, sensor)
        .into_iter()
        .enumerate()
        .map(|(position, weight)| Hypothesis { position, weight })
        .collect();
    Ok(OmegaLikelihoods {
        cells: cells.to_vec(),
        hypotheses,
    })
}

pub(crate) fn hypothesis_weights(belief: &BeliefState, cells: &[Cell], sensor: &SensorParams) -> Vec<f64> {
    let mut survive = 1.0;
    cells
        .iter()
        .map(|&c| {
            let p = marginal_destruction_prob(&belief.cell(c), sensor);
            let w = survive * p;
            survive *= 1.0 - p;
            w
        })
        .collect()
}
