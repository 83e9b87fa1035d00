//! Ground truth generation and traversal simulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::planner::Path;
use crate::{check_probability, ParamError};

/// Grid size in cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDims {
    pub width: usize,
    pub height: usize,
}

impl GridDims {
    pub fn new(width: usize, height: usize) -> Result<Self, ParamError> {
        let dims = GridDims { width, height };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (field, value) in [("width", self.width), ("height", self.height)] {
            if value < 1 {
                return Err(ParamError::TooSmall {
                    field: field.to_string(),
                    min: 1,
                    value: value as u64,
                });
            }
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    /// Row-major index of an in-bounds cell.
    pub fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        cell.row * self.width + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell {
            col: index % self.width,
            row: index / self.width,
        }
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell_at(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Cell { col, row }
    }

    /// Chebyshev (king-move) distance.
    pub fn chebyshev(&self, other: Cell) -> usize {
        self.col.abs_diff(other.col).max(self.row.abs_diff(other.row))
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// Parameters of the hazard/target generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldGenParams {
    pub p_hazard: f64,
    /// `P(X=1 | Z=1)`.
    pub kappa_true: f64,
    /// `P(X=1 | Z=0)`.
    pub p_target_free: f64,
    #[serde(default)]
    pub seed: u64,
}

impl WorldGenParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        check_probability("p_hazard", self.p_hazard)?;
        check_probability("kappa_true", self.kappa_true)?;
        check_probability("p_target_free", self.p_target_free)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl Default for WorldGenParams {
    fn default() -> Self {
        WorldGenParams {
            p_hazard: 0.2,
            kappa_true: 0.8,
            p_target_free: 0.1,
            seed: 0,
        }
    }
}

/// Conditional probabilities of the destruction and target sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    /// `P(Δ=1 | Z=1)` per visit.
    pub p_lethal: f64,
    /// `P(Δ=1 | Z=0)` per visit.
    pub p_malfunction: f64,
    /// `P(Y=1 | X=1)`.
    pub target_tpr: f64,
    /// `P(Y=1 | X=0)`.
    pub target_fpr: f64,
}

impl SensorParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        check_probability("p_lethal", self.p_lethal)?;
        check_probability("p_malfunction", self.p_malfunction)?;
        check_probability("target_tpr", self.target_tpr)?;
        check_probability("target_fpr", self.target_fpr)
    }

    /// `P(Δ=1 | Z=hazard)`.
    #[inline]
    pub fn p_destroy(&self, hazard: bool) -> f64 {
        if hazard {
            self.p_lethal
        } else {
            self.p_malfunction
        }
    }

    /// `P(Y=reading | X=target)`.
    #[inline]
    pub fn p_reading(&self, reading: bool, target: bool) -> f64 {
        let p_one = if target { self.target_tpr } else { self.target_fpr };
        if reading {
            p_one
        } else {
            1.0 - p_one
        }
    }

    pub fn with_lethality(mut self, p_lethal: f64) -> Self {
        self.p_lethal = p_lethal;
        self
    }
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams {
            p_lethal: 0.5,
            p_malfunction: 0.05,
            target_tpr: 0.95,
            target_fpr: 0.05,
        }
    }
}

/// Hidden hazard and target layout. Arrays are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub dims: GridDims,
    pub hazard: Vec<bool>,
    pub target: Vec<bool>,
    pub gen_params: WorldGenParams,
}

impl GroundTruth {
    pub fn has_hazard(&self, cell: Cell) -> bool {
        self.hazard[self.dims.index(cell)]
    }

    pub fn has_target(&self, cell: Cell) -> bool {
        self.target[self.dims.index(cell)]
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let world: GroundTruth = serde_json::from_str(text)?;
        world.dims.validate()?;
        world.gen_params.validate()?;
        let n = world.dims.cell_count();
        if world.hazard.len() != n || world.target.len() != n {
            return Err(WorldError::Shape {
                expected: n,
                hazard: world.hazard.len(),
                target: world.target.len(),
            });
        }
        Ok(world)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("cell {cell} is outside the {width}x{height} grid")]
    OutOfBounds { cell: Cell, width: usize, height: usize },
    #[error("ground truth arrays must hold {expected} cells (hazard {hazard}, target {target})")]
    Shape {
        expected: usize,
        hazard: usize,
        target: usize,
    },
    #[error("invalid ground truth document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Samples a world: hazards are Bernoulli(`p_hazard`), targets are drawn from
/// `kappa_true` on hazard cells and `p_target_free` elsewhere.
pub fn generate_world(dims: GridDims, gen: WorldGenParams) -> Result<GroundTruth, WorldError> {
    dims.validate()?;
    gen.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(gen.seed);
    let n = dims.cell_count();
    let mut hazard = Vec::with_capacity(n);
    let mut target = Vec::with_capacity(n);
    for _ in 0..n {
        let z = rng.gen_bool(gen.p_hazard);
        let p_x = if z { gen.kappa_true } else { gen.p_target_free };
        hazard.push(z);
        target.push(rng.gen_bool(p_x));
    }
    Ok(GroundTruth {
        dims,
        hazard,
        target,
        gen_params: gen,
    })
}

/// What the operator observes after a deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalOutcome {
    /// Path-based sensor flag: `true` when the agent was destroyed.
    pub theta: bool,
    /// One reading per path position, present only when the agent survived.
    pub readings: Option<Vec<bool>>,
    #[serde(skip)]
    destruction_index: Option<usize>,
}

impl TraversalOutcome {
    pub fn survived(readings: Vec<bool>) -> Self {
        TraversalOutcome {
            theta: false,
            readings: Some(readings),
            destruction_index: None,
        }
    }

    /// Simulator diagnostics: the position where the agent was lost. Inference
    /// code never sees this.
    pub fn destruction_index(&self) -> Option<usize> {
        self.destruction_index
    }
}

/// Walks the agent along `path`. Every visit is an independent destruction
/// draw; readings are drawn only if the whole path is survived.
pub fn simulate_traversal(
    world: &GroundTruth,
    path: &Path,
    sensor: &SensorParams,
    seed: u64,
) -> Result<TraversalOutcome, WorldError> {
    sensor.validate()?;
    if let Some(&cell) = path.cells().iter().find(|c| !world.dims.contains(**c)) {
        return Err(WorldError::OutOfBounds {
            cell,
            width: world.dims.width,
            height: world.dims.height,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, &cell) in path.cells().iter().enumerate() {
        if rng.gen_bool(sensor.p_destroy(world.has_hazard(cell))) {
            return Ok(TraversalOutcome {
                theta: true,
                readings: None,
                destruction_index: Some(i),
            });
        }
    }
    let readings = path
        .cells()
        .iter()
        .map(|&cell| {
            let p = sensor.p_reading(true, world.has_target(cell));
            rng.gen_bool(p)
        })
        .collect();
    Ok(TraversalOutcome::survived(readings))
}
