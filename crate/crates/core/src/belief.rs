//! Per-cell belief maps and their posterior updates.
//!
//! Each cell carries a small Bayesian network: hazard `Z` causes destruction
//! `Δ` and, with probability `κ`, a target `X`; the target sensor reading `Y`
//! depends on `X` only. The belief state stores the marginals `P(Z=1)`,
//! `P(X=1)` and `κ = P(X=1 | Z=1)`. The missing conditional `P(X=1 | Z=0)`
//! follows from total probability (see [`derived_x_given_not_z`]).
//!
//! Two update families exist, one per path-sensor outcome:
//!
//! * **Survived** (`Θ = 0`): every visited cell saw `Δ = 0` and produced a
//!   reading. Evidence is local to each cell, so each visit is a two-by-two
//!   Bayes update of that cell. Repeated cells are updated once per visit.
//! * **Triggered** (`Θ = 1`): the agent was lost at an unknown position. The
//!   hypotheses "first destruction at position `j`" partition the event. Under
//!   hypothesis `j` the visits before `j` were survived, the visit at `j` was
//!   fatal and later visits never happened. A cell's posterior sums these
//!   hypotheses, with every other cell on the path marginalised out.

use serde::{Deserialize, Serialize};

use crate::likelihood::{self, OmegaLikelihoods};
use crate::planner::Path;
use crate::world::{Cell, GridDims, SensorParams};
use crate::{check_probability, ParamError};

#[derive(Debug, thiserror::Error)]
pub enum BeliefError {
    #[error("expected {expected} readings (one per path position), got {got}")]
    ReadingsLength { expected: usize, got: usize },
    #[error("likelihood table was built for a different path")]
    TableMismatch,
    #[error("cell {0} is outside the belief grid")]
    OutOfBounds(Cell),
    #[error("belief maps must hold {expected} cells, got {got}")]
    Shape { expected: usize, got: usize },
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("invalid belief document: {0}")]
    Json(#[from] serde_json::Error),
}

/// The three probabilities tracked for one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellBelief {
    /// `P(Z=1)`
    pub z: f64,
    /// `P(X=1)`
    pub x: f64,
    /// `P(X=1 | Z=1)`
    pub kappa: f64,
}

/// Posterior of a single cell after an update.
pub type CellPosterior = CellBelief;

impl CellBelief {
    pub fn new(z: f64, x: f64, kappa: f64) -> Self {
        CellBelief { z, x, kappa }
    }

    fn validate(&self) -> Result<(), ParamError> {
        check_probability("z", self.z)?;
        check_probability("x", self.x)?;
        check_probability("kappa", self.kappa)
    }
}

/// `P(X=1 | Z=0)` recovered from `x = κ z + P(X=1|Z=0) (1 - z)`, clamped to
/// `[0, 1]`. When `z = 1` the conditional is unconstrained and `x` is used.
pub fn derived_x_given_not_z(cell: &CellBelief) -> f64 {
    if cell.z >= 1.0 {
        return cell.x;
    }
    ((cell.x - cell.kappa * cell.z) / (1.0 - cell.z)).clamp(0.0, 1.0)
}

/// Joint probability of one cell's network,
/// `P(z) P(x|z) P(δ|z) P(y|x)`.
pub fn cell_joint(z: bool, x: bool, delta: bool, y: bool, cell: &CellBelief, sensor: &SensorParams) -> f64 {
    let p_z = bernoulli(cell.z, z);
    let p_x1 = if z { cell.kappa } else { derived_x_given_not_z(cell) };
    let p_x = bernoulli(p_x1, x);
    let p_delta = bernoulli(sensor.p_destroy(z), delta);
    p_z * p_x * p_delta * sensor.p_reading(y, x)
}

#[inline]
fn bernoulli(p_one: f64, value: bool) -> f64 {
    if value {
        p_one
    } else {
        1.0 - p_one
    }
}

/// Which network the updates run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceModel {
    /// Full per-cell network with the `Z -> X` edge.
    KappaNetwork,
    /// Same inference without the `Z -> X` edge: `P(x|z) = P(x)`. The κ map
    /// is left untouched.
    Independent,
    /// One belief map per hypothesised destruction position, mixed by the
    /// hypothesis weights; cells are updated independently inside each
    /// hypothesis and there is no `Z -> X` edge.
    MultiUniverse,
}

impl InferenceModel {
    /// `[P(X=1 | Z=0), P(X=1 | Z=1)]` under this model.
    #[inline]
    pub(crate) fn target_given_hazard(self, cell: &CellBelief) -> [f64; 2] {
        match self {
            InferenceModel::KappaNetwork => [derived_x_given_not_z(cell), cell.kappa],
            InferenceModel::Independent | InferenceModel::MultiUniverse => [cell.x, cell.x],
        }
    }

    fn tracks_kappa(self) -> bool {
        matches!(self, InferenceModel::KappaNetwork)
    }

    /// Prior joint `P(Z=z, X=x)` indexed `[z][x]`.
    pub(crate) fn joint_prior(self, cell: &CellBelief) -> [[f64; 2]; 2] {
        let px = self.target_given_hazard(cell);
        let mut w = [[0.0; 2]; 2];
        for z in 0..2 {
            let pz = bernoulli(cell.z, z == 1);
            w[z][1] = pz * px[z];
            w[z][0] = pz * (1.0 - px[z]);
        }
        w
    }

    /// Posterior after a survived traversal with the given readings.
    pub fn update_no_trigger(
        self,
        belief: &BeliefState,
        path: &Path,
        readings: &[bool],
        sensor: &SensorParams,
    ) -> Result<BeliefState, BeliefError> {
        belief.check_cells(path.cells())?;
        if readings.len() != path.len() {
            return Err(BeliefError::ReadingsLength {
                expected: path.len(),
                got: readings.len(),
            });
        }
        let mut next = belief.clone();
        apply_no_trigger(self, &mut next, path.cells(), readings, sensor);
        Ok(next)
    }

    /// Posterior after the path sensor fired.
    pub fn update_trigger(
        self,
        belief: &BeliefState,
        path: &Path,
        sensor: &SensorParams,
        table: &OmegaLikelihoods,
    ) -> Result<BeliefState, BeliefError> {
        belief.check_cells(path.cells())?;
        if table.cells() != path.cells() {
            return Err(BeliefError::TableMismatch);
        }
        let mut next = belief.clone();
        let posts = trigger_posteriors(self, belief, path.cells(), &table.weights(), sensor);
        next.apply(&posts.cells, self);
        Ok(next)
    }
}

/// Belief maps over the whole grid, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub dims: GridDims,
    pub z_map: Vec<f64>,
    pub x_map: Vec<f64>,
    pub kappa_map: Vec<f64>,
}

impl BeliefState {
    /// Every cell starts from the same prior.
    pub fn uniform(dims: GridDims, prior: CellBelief) -> Result<Self, BeliefError> {
        dims.validate()?;
        prior.validate()?;
        let n = dims.cell_count();
        Ok(BeliefState {
            dims,
            z_map: vec![prior.z; n],
            x_map: vec![prior.x; n],
            kappa_map: vec![prior.kappa; n],
        })
    }

    pub fn cell(&self, cell: Cell) -> CellBelief {
        let i = self.dims.index(cell);
        CellBelief {
            z: self.z_map[i],
            x: self.x_map[i],
            kappa: self.kappa_map[i],
        }
    }

    pub fn set_cell(&mut self, cell: Cell, value: CellBelief) {
        let i = self.dims.index(cell);
        self.z_map[i] = value.z;
        self.x_map[i] = value.x;
        self.kappa_map[i] = value.kappa;
    }

    pub fn validate(&self) -> Result<(), BeliefError> {
        self.dims.validate()?;
        let n = self.dims.cell_count();
        for (name, map) in [
            ("z_map", &self.z_map),
            ("x_map", &self.x_map),
            ("kappa_map", &self.kappa_map),
        ] {
            if map.len() != n {
                return Err(BeliefError::Shape {
                    expected: n,
                    got: map.len(),
                });
            }
            for &p in map.iter() {
                check_probability(name, p)?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self, BeliefError> {
        let belief: BeliefState = serde_json::from_str(text)?;
        belief.validate()?;
        Ok(belief)
    }

    fn check_cells(&self, cells: &[Cell]) -> Result<(), BeliefError> {
        match cells.iter().find(|c| !self.dims.contains(**c)) {
            Some(&c) => Err(BeliefError::OutOfBounds(c)),
            None => Ok(()),
        }
    }

    fn apply(&mut self, posts: &[(Cell, CellBelief)], model: InferenceModel) {
        for &(cell, post) in posts {
            let i = self.dims.index(cell);
            self.z_map[i] = post.z;
            self.x_map[i] = post.x;
            if model.tracks_kappa() {
                self.kappa_map[i] = post.kappa;
            }
        }
    }
}

/// κ-network update for a survived traversal.
pub fn update_no_trigger(
    belief: &BeliefState,
    path: &Path,
    readings: &[bool],
    sensor: &SensorParams,
) -> Result<BeliefState, BeliefError> {
    InferenceModel::KappaNetwork.update_no_trigger(belief, path, readings, sensor)
}

/// κ-network update for a triggered path sensor.
pub fn update_trigger(
    belief: &BeliefState,
    path: &Path,
    sensor: &SensorParams,
    table: &OmegaLikelihoods,
) -> Result<BeliefState, BeliefError> {
    InferenceModel::KappaNetwork.update_trigger(belief, path, sensor, table)
}

/// One survived visit with reading `y`.
pub(crate) fn observe_visit(model: InferenceModel, cell: CellBelief, y: bool, sensor: &SensorParams) -> CellBelief {
    let prior = model.joint_prior(&cell);
    let mut w = [[0.0; 2]; 2];
    for z in 0..2 {
        let survive = 1.0 - sensor.p_destroy(z == 1);
        for x in 0..2 {
            w[z][x] = prior[z][x] * survive * sensor.p_reading(y, x == 1);
        }
    }
    let hazard = w[1][0] + w[1][1];
    let total = hazard + w[0][0] + w[0][1];
    if total.is_nan() || total <= 0.0 {
        return cell;
    }
    let kappa = if model.tracks_kappa() && hazard > 0.0 {
        w[1][1] / hazard
    } else {
        cell.kappa
    };
    CellBelief {
        z: hazard / total,
        x: (w[0][1] + w[1][1]) / total,
        kappa,
    }
}

pub(crate) fn apply_no_trigger(
    model: InferenceModel,
    belief: &mut BeliefState,
    cells: &[Cell],
    readings: &[bool],
    sensor: &SensorParams,
) {
    for (&cell, &y) in cells.iter().zip(readings) {
        let post = observe_visit(model, belief.cell(cell), y, sensor);
        let i = belief.dims.index(cell);
        belief.z_map[i] = post.z;
        belief.x_map[i] = post.x;
        if model.tracks_kappa() {
            belief.kappa_map[i] = post.kappa;
        }
    }
}

/// Distinct cells of a visit sequence and, per position, the index of the
/// distinct cell visited there.
pub(crate) struct Visits {
    pub distinct: Vec<Cell>,
    pub slot: Vec<usize>,
}

impl Visits {
    pub fn of(cells: &[Cell]) -> Self {
        let mut distinct: Vec<Cell> = Vec::new();
        let slot = cells
            .iter()
            .map(|c| match distinct.iter().position(|d| d == c) {
                Some(i) => i,
                None => {
                    distinct.push(*c);
                    distinct.len() - 1
                }
            })
            .collect();
        Visits { distinct, slot }
    }
}

/// Visited-cell posteriors after a trigger, plus the trigger probability the
/// model assigns to the path.
pub(crate) struct TriggerPosteriors {
    pub p_trigger: f64,
    pub cells: Vec<(Cell, CellBelief)>,
}

/// Per-cell likelihood of "first destruction at position `j`" given the
/// cell's own hazard state, `[z=0, z=1]`, laid out `[distinct * len + j]`.
/// Visits of the cell before `j` were survived; the visit at `j`, if it is
/// this cell, was fatal.
fn hypothesis_factors(visits: &Visits, len: usize, sensor: &SensorParams) -> Vec<[f64; 2]> {
    let n = visits.distinct.len();
    let mut out = vec![[1.0; 2]; n * len];
    let survive = [1.0 - sensor.p_malfunction, 1.0 - sensor.p_lethal];
    let destroy = [sensor.p_malfunction, sensor.p_lethal];
    for d in 0..n {
        let mut before = [1.0, 1.0];
        for j in 0..len {
            let here = visits.slot[j] == d;
            for z in 0..2 {
                out[d * len + j][z] = if here { before[z] * destroy[z] } else { before[z] };
            }
            if here {
                for z in 0..2 {
                    before[z] *= survive[z];
                }
            }
        }
    }
    out
}

pub(crate) fn trigger_posteriors(
    model: InferenceModel,
    belief: &BeliefState,
    cells: &[Cell],
    weights: &[f64],
    sensor: &SensorParams,
) -> TriggerPosteriors {
    debug_assert_eq!(cells.len(), weights.len());
    let visits = Visits::of(cells);
    let len = cells.len();
    let n = visits.distinct.len();
    let priors: Vec<CellBelief> = visits.distinct.iter().map(|&c| belief.cell(c)).collect();
    let factors = hypothesis_factors(&visits, len, sensor);
    let factor = |d: usize, j: usize, z: usize| factors[d * len + j][z];

    if model == InferenceModel::MultiUniverse {
        return multi_universe(&visits, &priors, weights, len, &factor);
    }

    // marginal[d][j] = sum_z P(z) factor(d, j, z)
    let mut marginal = vec![0.0; n * len];
    for d in 0..n {
        let z = priors[d].z;
        for j in 0..len {
            marginal[d * len + j] = (1.0 - z) * factor(d, j, 0) + z * factor(d, j, 1);
        }
    }

    let mut num = vec![[0.0f64; 2]; n];
    let mut p_trigger = 0.0;
    let mut prefix = vec![1.0; n + 1];
    for j in 0..len {
        for d in 0..n {
            prefix[d + 1] = prefix[d] * marginal[d * len + j];
        }
        p_trigger += prefix[n];
        let mut suffix = 1.0;
        for d in (0..n).rev() {
            let others = prefix[d] * suffix;
            num[d][0] += factor(d, j, 0) * others;
            num[d][1] += factor(d, j, 1) * others;
            suffix *= marginal[d * len + j];
        }
    }

    let cells = visits
        .distinct
        .iter()
        .zip(&priors)
        .zip(&num)
        .map(|((&cell, prior), num)| {
            let hazard = prior.z * num[1];
            let clear = (1.0 - prior.z) * num[0];
            let total = hazard + clear;
            if total.is_nan() || total <= 0.0 {
                return (cell, *prior);
            }
            let px = model.target_given_hazard(prior);
            // Given Z the target is independent of Θ, so κ keeps its value.
            let kappa_num = prior.kappa * hazard;
            let kappa_den = kappa_num + (1.0 - prior.kappa) * hazard;
            let kappa = if kappa_den > 0.0 {
                kappa_num / kappa_den
            } else {
                prior.kappa
            };
            let post = CellBelief {
                z: hazard / total,
                x: (px[0] * clear + px[1] * hazard) / total,
                kappa,
            };
            (cell, post)
        })
        .collect();
    TriggerPosteriors { p_trigger, cells }
}

fn multi_universe(
    visits: &Visits,
    priors: &[CellBelief],
    weights: &[f64],
    len: usize,
    factor: &dyn Fn(usize, usize, usize) -> f64,
) -> TriggerPosteriors {
    let total: f64 = weights.iter().sum();
    let cells = visits
        .distinct
        .iter()
        .enumerate()
        .map(|(d, &cell)| {
            let prior = priors[d];
            if total.is_nan() || total <= 0.0 {
                return (cell, prior);
            }
            let mut z = 0.0;
            for (j, &w) in weights.iter().enumerate().take(len) {
                let hazard = prior.z * factor(d, j, 1);
                let norm = hazard + (1.0 - prior.z) * factor(d, j, 0);
                let z_j = if norm > 0.0 { hazard / norm } else { prior.z };
                z += w * z_j;
            }
            (cell, CellBelief { z: z / total, ..prior })
        })
        .collect();
    TriggerPosteriors {
        p_trigger: total,
        cells,
    }
}

/// Trigger posteriors for a bare visit sequence; weights come from the
/// marginal hypothesis table.
pub(crate) fn trigger_posteriors_for(
    model: InferenceModel,
    belief: &BeliefState,
    cells: &[Cell],
    sensor: &SensorParams,
) -> TriggerPosteriors {
    let weights = likelihood::hypothesis_weights(belief, cells, sensor);
    trigger_posteriors(model, belief, cells, &weights, sensor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::enumerate_omega;
    use crate::oracle::{self, OracleCell};
    use approx::assert_abs_diff_eq;

    fn dims3() -> GridDims {
        GridDims::new(3, 3).unwrap()
    }

    fn sensor(p_lethal: f64, p_malfunction: f64, tpr: f64, fpr: f64) -> SensorParams {
        SensorParams {
            p_lethal,
            p_malfunction,
            target_tpr: tpr,
            target_fpr: fpr,
        }
    }

    fn oracle_cells(model: InferenceModel, belief: &BeliefState) -> Vec<OracleCell> {
        belief
            .dims
            .cells()
            .map(|c| match model {
                InferenceModel::KappaNetwork => OracleCell::from_belief(c, &belief.cell(c)),
                _ => OracleCell::independent(c, &belief.cell(c)),
            })
            .collect()
    }

    #[test]
    fn joint_deterministic_chain() {
        let cell = CellBelief::new(1.0, 1.0, 1.0);
        let s = sensor(1.0, 0.3, 1.0, 0.2);
        let mut total = 0.0;
        for bits in 0..16u8 {
            let (z, x, d, y) = (bits & 1 != 0, bits & 2 != 0, bits & 4 != 0, bits & 8 != 0);
            let p = cell_joint(z, x, d, y, &cell, &s);
            total += p;
            if z && x && d && y {
                assert_abs_diff_eq!(p, 1.0);
            } else {
                assert_abs_diff_eq!(p, 0.0);
            }
        }
        assert_abs_diff_eq!(total, 1.0);
    }

    #[test]
    fn joint_symmetric() {
        let cell = CellBelief::new(0.5, 0.5, 0.5);
        assert_abs_diff_eq!(derived_x_given_not_z(&cell), 0.5);
        let s = sensor(0.5, 0.5, 0.5, 0.5);
        for bits in 0..16u8 {
            let p = cell_joint(bits & 1 != 0, bits & 2 != 0, bits & 4 != 0, bits & 8 != 0, &cell, &s);
            assert_abs_diff_eq!(p, 1.0 / 16.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn joint_mixed_values() {
        // x chosen so the derived P(X|Z=0) is 0.1: 0.8*0.3 + 0.1*0.7 = 0.31.
        let cell = CellBelief::new(0.3, 0.31, 0.8);
        assert_abs_diff_eq!(derived_x_given_not_z(&cell), 0.1, epsilon = 1e-12);
        let s = sensor(0.6, 0.05, 0.95, 0.05);
        assert_abs_diff_eq!(cell_joint(true, true, false, true, &cell, &s), 0.0912, epsilon = 1e-12);
        let total: f64 = (0..16u8)
            .map(|b| cell_joint(b & 1 != 0, b & 2 != 0, b & 4 != 0, b & 8 != 0, &cell, &s))
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn derived_conditional_examples() {
        assert_abs_diff_eq!(derived_x_given_not_z(&CellBelief::new(0.5, 0.5, 0.5)), 0.5);
        assert_abs_diff_eq!(
            derived_x_given_not_z(&CellBelief::new(0.5, 0.45, 0.8)),
            0.1,
            epsilon = 1e-12
        );
        assert_eq!(derived_x_given_not_z(&CellBelief::new(0.2, 0.1, 1.0)), 0.0);
        assert_eq!(derived_x_given_not_z(&CellBelief::new(1.0, 0.3, 0.9)), 0.3);
        assert_eq!(derived_x_given_not_z(&CellBelief::new(0.0, 1.0, 0.0)), 1.0);
    }

    #[test]
    fn noiseless_positive_reading() {
        let d = Cell::new(0, 0);
        let belief = BeliefState::uniform(dims3(), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        let path = Path::new(vec![d]).unwrap();
        let post = update_no_trigger(&belief, &path, &[true], &sensor(0.7, 0.0, 1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(post.cell(d).x, 1.0);
    }

    #[test]
    fn survival_lowers_hazard() {
        let d = Cell::new(1, 1);
        let belief = BeliefState::uniform(dims3(), CellBelief::new(0.5, 0.4, 0.4)).unwrap();
        let path = Path::new(vec![d]).unwrap();
        let post = update_no_trigger(&belief, &path, &[true], &sensor(0.9, 0.05, 0.5, 0.5)).unwrap();
        let expected = (0.1 * 0.5) / (0.1 * 0.5 + 0.95 * 0.5);
        assert_abs_diff_eq!(post.cell(d).z, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(post.cell(d).z, 0.0952381, epsilon = 1e-7);
    }

    #[test]
    fn uninformative_visit_is_identity() {
        let d = Cell::new(2, 0);
        let prior = CellBelief::new(0.3, 0.8 * 0.3 + 0.25 * 0.7, 0.8);
        let belief = BeliefState::uniform(dims3(), prior).unwrap();
        let path = Path::new(vec![d]).unwrap();
        let s = sensor(0.4, 0.4, 0.5, 0.5);
        for y in [false, true] {
            let post = update_no_trigger(&belief, &path, &[y], &s).unwrap();
            let c = post.cell(d);
            assert_abs_diff_eq!(c.z, prior.z, epsilon = 1e-15);
            assert_abs_diff_eq!(c.x, prior.x, epsilon = 1e-15);
            assert_abs_diff_eq!(c.kappa, prior.kappa, epsilon = 1e-15);
        }
    }

    #[test]
    fn readings_length_checked() {
        let d = Cell::new(0, 0);
        let belief = BeliefState::uniform(dims3(), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        let path = Path::new(vec![d, d]).unwrap();
        let err = update_no_trigger(&belief, &path, &[true], &SensorParams::default()).unwrap_err();
        assert!(matches!(err, BeliefError::ReadingsLength { expected: 2, got: 1 }));
    }

    #[test]
    fn single_cell_trigger() {
        let d = Cell::new(0, 0);
        let belief = BeliefState::uniform(dims3(), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        let path = Path::new(vec![d]).unwrap();
        let s = sensor(0.9, 0.05, 0.95, 0.05);
        let table = enumerate_omega(&belief, &path, &s).unwrap();
        let post = update_trigger(&belief, &path, &s, &table).unwrap();
        let expected = (0.9 * 0.5) / (0.9 * 0.5 + 0.05 * 0.5);
        assert_abs_diff_eq!(post.cell(d).z, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(post.cell(d).z, 0.947368, epsilon = 1e-6);
    }

    #[test]
    fn uninformative_trigger() {
        let d = Cell::new(0, 0);
        let belief = BeliefState::uniform(dims3(), CellBelief::new(0.35, 0.5, 0.5)).unwrap();
        let path = Path::new(vec![d]).unwrap();
        let s = sensor(0.3, 0.3, 0.95, 0.05);
        let table = enumerate_omega(&belief, &path, &s).unwrap();
        let post = update_trigger(&belief, &path, &s, &table).unwrap();
        assert_abs_diff_eq!(post.cell(d).z, 0.35, epsilon = 1e-15);
    }

    #[test]
    fn table_mismatch_rejected() {
        let d = Cell::new(0, 0);
        let belief = BeliefState::uniform(dims3(), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        let s = SensorParams::default();
        let a = Path::new(vec![d, Cell::new(1, 0), d]).unwrap();
        let b = Path::new(vec![d, Cell::new(0, 1), d]).unwrap();
        let table = enumerate_omega(&belief, &a, &s).unwrap();
        assert!(matches!(
            update_trigger(&belief, &b, &s, &table),
            Err(BeliefError::TableMismatch)
        ));
    }

    #[test]
    fn two_distinct_cells_trigger_matches_enumeration() {
        // Open two-cell walk: only reachable through the crate-internal API.
        let a = Cell::new(0, 0);
        let b = Cell::new(1, 0);
        let belief = BeliefState::uniform(dims3(), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        let s = sensor(0.9, 0.05, 0.95, 0.05);
        let cells = [a, b];
        let posts = trigger_posteriors_for(InferenceModel::KappaNetwork, &belief, &cells, &s);
        let exact = oracle::enumerate_trigger(&oracle_cells(InferenceModel::KappaNetwork, &belief), &cells, &s);
        for (cell, post) in posts.cells {
            let o = exact.posterior(cell).unwrap();
            assert_abs_diff_eq!(post.z, o.z, epsilon = 1e-9);
            assert_abs_diff_eq!(post.x, o.x, epsilon = 1e-9);
            assert_abs_diff_eq!(post.kappa, o.kappa, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(posts.p_trigger, exact.evidence, epsilon = 1e-12);
        // Hand check for the first cell: P(Z1=1, Θ=1) = 0.5 * (0.9 + 0.1 * 0.475).
        let p_theta = 1.0 - 0.525 * 0.525;
        let z1 = 0.5 * (0.9 + 0.1 * 0.475) / p_theta;
        let (_, first) = trigger_posteriors_for(InferenceModel::KappaNetwork, &belief, &cells, &s).cells[0];
        assert_abs_diff_eq!(first.z, z1, epsilon = 1e-12);
    }

    #[test]
    fn repeated_cell_trigger_matches_enumeration() {
        let d = Cell::new(1, 1);
        let n = Cell::new(2, 1);
        let mut belief = BeliefState::uniform(dims3(), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        belief.set_cell(d, CellBelief::new(0.2, 0.6, 0.9));
        belief.set_cell(n, CellBelief::new(0.7, 0.3, 0.35));
        let s = sensor(0.6, 0.1, 0.9, 0.2);
        for cells in [vec![d, d], vec![d, n, d], vec![d, n, n, d]] {
            let path = Path::new(cells.clone()).unwrap();
            let table = enumerate_omega(&belief, &path, &s).unwrap();
            let post = update_trigger(&belief, &path, &s, &table).unwrap();
            let exact = oracle::enumerate_trigger(&oracle_cells(InferenceModel::KappaNetwork, &belief), &cells, &s);
            for c in [d, n] {
                if let Some(o) = exact.posterior(c) {
                    assert_abs_diff_eq!(post.cell(c).z, o.z, epsilon = 1e-9);
                    assert_abs_diff_eq!(post.cell(c).x, o.x, epsilon = 1e-9);
                    assert_abs_diff_eq!(post.cell(c).kappa, o.kappa, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn unvisited_cells_untouched() {
        let d = Cell::new(0, 0);
        let mut belief = BeliefState::uniform(dims3(), CellBelief::new(0.4, 0.5, 0.6)).unwrap();
        belief.set_cell(Cell::new(2, 2), CellBelief::new(0.1, 0.2, 0.3));
        let path = Path::new(vec![d, Cell::new(1, 0), d]).unwrap();
        let s = SensorParams::default();
        let post = update_no_trigger(&belief, &path, &[true, false, true], &s).unwrap();
        let table = enumerate_omega(&belief, &path, &s).unwrap();
        let trig = update_trigger(&belief, &path, &s, &table).unwrap();
        for c in belief.dims.cells().filter(|c| !path.cells().contains(c)) {
            assert_eq!(post.cell(c), belief.cell(c));
            assert_eq!(trig.cell(c), belief.cell(c));
        }
    }

    #[test]
    fn multi_universe_mixes_per_position_posteriors() {
        let a = Cell::new(0, 0);
        let b = Cell::new(1, 0);
        let belief = BeliefState::uniform(dims3(), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        let s = sensor(0.9, 0.05, 0.95, 0.05);
        let posts = trigger_posteriors_for(InferenceModel::MultiUniverse, &belief, &[a, b], &s);
        // Universe 0 (lost at a): z_a = 0.947368; universe 1: z_a = 0.0952381.
        let (w0, w1) = (0.475, 0.525 * 0.475);
        let za = (w0 * (0.45 / 0.475) + w1 * (0.05 / 0.525)) / (w0 + w1);
        assert_abs_diff_eq!(posts.cells[0].1.z, za, epsilon = 1e-12);
        assert_abs_diff_eq!(posts.cells[0].1.x, 0.5);
    }

    #[test]
    fn zero_probability_evidence_keeps_prior() {
        let d = Cell::new(0, 0);
        let belief = BeliefState::uniform(dims3(), CellBelief::new(1.0, 0.5, 0.5)).unwrap();
        let path = Path::new(vec![d]).unwrap();
        let post = update_no_trigger(&belief, &path, &[true], &sensor(1.0, 0.0, 0.9, 0.1)).unwrap();
        assert_eq!(post.cell(d), belief.cell(d));
    }

    #[test]
    fn json_round_trip_keeps_full_precision() {
        let mut belief = BeliefState::uniform(dims3(), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        belief.set_cell(
            Cell::new(1, 2),
            CellBelief::new(0.1 + 0.2, 1.0 / 3.0, 2f64.sqrt() / 2.0),
        );
        let back = BeliefState::from_json(&belief.to_json().unwrap()).unwrap();
        assert_eq!(back, belief);
        let mut bad = belief.clone();
        bad.z_map[0] = 1.5;
        assert!(BeliefState::from_json(&serde_json::to_string(&bad).unwrap()).is_err());
    }
}
