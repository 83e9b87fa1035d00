//! Deployment paths, expected information gain and path construction.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{self, BeliefState, InferenceModel, Visits};
use crate::metrics::binary_entropy;
use crate::world::{Cell, GridDims, SensorParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PathError {
    #[error("a path needs at least one cell")]
    Empty,
    #[error("path must start and end at the same base cell ({first} != {last})")]
    NotAnchored { first: Cell, last: Cell },
    #[error("path position {0} and the next one are not 9-connected")]
    Disconnected(usize),
    #[error("path length {len} exceeds the budget {budget}")]
    OverBudget { len: usize, budget: usize },
    #[error("path starts at {got}, expected base {expected}")]
    WrongBase { expected: Cell, got: Cell },
    #[error("cell {0} is outside the grid")]
    OutOfBounds(Cell),
}

/// A closed walk from the base station back to it. Consecutive cells differ
/// by at most one step in each axis (8 neighbours or staying put).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Cell>", into = "Vec<Cell>")]
pub struct Path {
    cells: Vec<Cell>,
}

impl Path {
    pub fn new(cells: Vec<Cell>) -> Result<Self, PathError> {
        let (first, last) = match (cells.first(), cells.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => return Err(PathError::Empty),
        };
        if first != last {
            return Err(PathError::NotAnchored { first, last });
        }
        if let Some(i) = cells.windows(2).position(|w| w[0].chebyshev(w[1]) > 1) {
            return Err(PathError::Disconnected(i));
        }
        Ok(Path { cells })
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn base(&self) -> Cell {
        self.cells[0]
    }

    /// Checks grid bounds, the base cell and the length budget.
    pub fn check_against(&self, dims: GridDims, base: Cell, budget: usize) -> Result<(), PathError> {
        if let Some(&c) = self.cells.iter().find(|c| !dims.contains(**c)) {
            return Err(PathError::OutOfBounds(c));
        }
        if self.base() != base {
            return Err(PathError::WrongBase {
                expected: base,
                got: self.base(),
            });
        }
        if self.len() > budget {
            return Err(PathError::OverBudget {
                len: self.len(),
                budget,
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<Cell>> for Path {
    type Error = PathError;

    fn try_from(cells: Vec<Cell>) -> Result<Self, Self::Error> {
        Path::new(cells)
    }
}

impl From<Path> for Vec<Cell> {
    fn from(path: Path) -> Self {
        path.cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Greedy planner and updates on the κ network.
    KappaBnitp,
    /// Greedy planner and updates without the hazard→target edge.
    RelaxedBnitp,
    /// Greedy planner and updates by multi-universe weighting.
    RelaxedItp,
    /// Uniformly random feasible steps; κ-network updates.
    Random,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::KappaBnitp,
        Algorithm::RelaxedBnitp,
        Algorithm::RelaxedItp,
        Algorithm::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::KappaBnitp => "kappa_bnitp",
            Algorithm::RelaxedBnitp => "relaxed_bnitp",
            Algorithm::RelaxedItp => "relaxed_itp",
            Algorithm::Random => "random",
        }
    }

    /// Inference model used both for planning and for belief updates.
    pub fn model(self) -> InferenceModel {
        match self {
            Algorithm::KappaBnitp | Algorithm::Random => InferenceModel::KappaNetwork,
            Algorithm::RelaxedBnitp => InferenceModel::Independent,
            Algorithm::RelaxedItp => InferenceModel::MultiUniverse,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown planner '{0}' (expected kappa_bnitp, relaxed_bnitp, relaxed_itp or random)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Maximum path length in cells, both base visits included.
    pub budget_l: usize,
    pub base: Cell,
    pub algorithm: Algorithm,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            budget_l: 20,
            base: Cell::new(0, 0),
            algorithm: Algorithm::KappaBnitp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlannerError {
    #[error("base {0} is outside the grid")]
    BaseOutOfBounds(Cell),
    #[error("budget_l must be at least 2, got {0}")]
    BudgetTooSmall(usize),
    #[error(transparent)]
    Path(#[from] PathError),
}

impl PlannerConfig {
    pub fn validate(&self, dims: GridDims) -> Result<(), PlannerError> {
        if !dims.contains(self.base) {
            return Err(PlannerError::BaseOutOfBounds(self.base));
        }
        if self.budget_l < 2 {
            return Err(PlannerError::BudgetTooSmall(self.budget_l));
        }
        Ok(())
    }
}

/// Expected entropy reduction of the `z` and `x` maps from traversing `path`,
/// on the κ network.
pub fn expected_info_gain(belief: &BeliefState, path: &Path, sensor: &SensorParams) -> f64 {
    expected_walk_gain(InferenceModel::KappaNetwork, belief, path.cells(), sensor)
}

/// Expected entropy reduction over the visited cells for an arbitrary walk
/// (for example a partially built path), under `model`.
///
/// Both sensor outcomes are enumerated exactly. On a trigger the model's
/// trigger update is applied. On survival the readings of a cell visited `n`
/// times only matter through their number of positives `k`, so each cell sums
/// over `k = 0..=n` with binomial weights.
pub fn expected_walk_gain(model: InferenceModel, belief: &BeliefState, cells: &[Cell], sensor: &SensorParams) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    let visits = Visits::of(cells);
    let mut counts = vec![0usize; visits.distinct.len()];
    for &slot in &visits.slot {
        counts[slot] += 1;
    }

    let prior: f64 = visits
        .distinct
        .iter()
        .map(|&c| {
            let b = belief.cell(c);
            binary_entropy(b.z) + binary_entropy(b.x)
        })
        .sum();

    let trig = belief::trigger_posteriors_for(model, belief, cells, sensor);
    let p_trigger = trig.p_trigger.clamp(0.0, 1.0);
    let h_trigger: f64 = trig
        .cells
        .iter()
        .map(|(_, p)| binary_entropy(p.z) + binary_entropy(p.x))
        .sum();

    let h_survive: f64 = visits
        .distinct
        .iter()
        .zip(&counts)
        .map(|(&c, &n)| survived_entropy(model, &belief.cell(c), n, sensor))
        .sum();

    prior - p_trigger * h_trigger - (1.0 - p_trigger) * h_survive
}

/// Expected posterior entropy of one cell visited `n` times, given that
/// every visit was survived.
fn survived_entropy(model: InferenceModel, cell: &belief::CellBelief, n: usize, sensor: &SensorParams) -> f64 {
    let prior = model.joint_prior(cell);
    let survive = [
        (1.0 - sensor.p_malfunction).powi(n as i32),
        (1.0 - sensor.p_lethal).powi(n as i32),
    ];
    let rate = [sensor.target_fpr, sensor.target_tpr];
    let mut w = [[0.0; 2]; 2];
    let mut p_survive = 0.0;
    for z in 0..2 {
        for x in 0..2 {
            w[z][x] = prior[z][x] * survive[z];
            p_survive += w[z][x];
        }
    }
    if p_survive.is_nan() || p_survive <= 0.0 {
        return binary_entropy(cell.z) + binary_entropy(cell.x);
    }
    let mut expected = 0.0;
    let mut binom = 1.0;
    for k in 0..=n {
        if k > 0 {
            binom *= (n - k + 1) as f64 / k as f64;
        }
        let mut a = [[0.0; 2]; 2];
        let mut total = 0.0;
        for z in 0..2 {
            for x in 0..2 {
                let r = rate[x];
                a[z][x] = w[z][x] * r.powi(k as i32) * (1.0 - r).powi((n - k) as i32);
                total += a[z][x];
            }
        }
        if total.is_nan() || total <= 0.0 {
            continue;
        }
        let p_k = binom * total / p_survive;
        let z_post = (a[1][0] + a[1][1]) / total;
        let x_post = (a[0][1] + a[1][1]) / total;
        expected += p_k * (binary_entropy(z_post) + binary_entropy(x_post));
    }
    expected
}

/// Step offsets in tie-break order: the eight neighbours row-major, then
/// staying in place.
pub const STEP_ORDER: [(isize, isize); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (0, 0),
];

/// Gains closer than this (relative) count as ties and keep the earlier step.
const TIE_TOLERANCE: f64 = 1e-12;

/// Steps from the end of `prefix` that keep the base reachable once the
/// step is taken, in [`STEP_ORDER`].
pub fn feasible_steps(dims: GridDims, cfg: &PlannerConfig, prefix: &[Cell]) -> Vec<Cell> {
    let Some(&current) = prefix.last() else {
        return vec![cfg.base];
    };
    let remaining_after = cfg.budget_l.saturating_sub(prefix.len() + 1);
    STEP_ORDER
        .iter()
        .filter_map(|&(dc, dr)| {
            let col = current.col.checked_add_signed(dc)?;
            let row = current.row.checked_add_signed(dr)?;
            let cell = Cell::new(col, row);
            (dims.contains(cell) && cell.chebyshev(cfg.base) <= remaining_after).then_some(cell)
        })
        .collect()
}

/// Gain of the walk `prefix + [step]` for every feasible step.
pub fn step_gains(
    belief: &BeliefState,
    cfg: &PlannerConfig,
    sensor: &SensorParams,
    prefix: &[Cell],
) -> Vec<(Cell, f64)> {
    let model = cfg.algorithm.model();
    let mut walk = prefix.to_vec();
    feasible_steps(belief.dims, cfg, prefix)
        .into_iter()
        .map(|step| {
            walk.push(step);
            let g = expected_walk_gain(model, belief, &walk, sensor);
            walk.pop();
            (step, g)
        })
        .collect()
}

/// Builds the next deployment path greedily, one step at a time.
///
/// Each step is the feasible move whose appended walk has the largest
/// expected information gain; the base always stays reachable within the
/// remaining budget, so the path closes at the base after `budget_l` cells.
/// `rng` is only consumed by [`Algorithm::Random`].
pub fn plan_path<R: Rng + ?Sized>(
    belief: &BeliefState,
    cfg: &PlannerConfig,
    sensor: &SensorParams,
    rng: &mut R,
) -> Result<Path, PlannerError> {
    cfg.validate(belief.dims)?;
    let mut cells = Vec::with_capacity(cfg.budget_l);
    cells.push(cfg.base);
    while cells.len() < cfg.budget_l {
        let next = match cfg.algorithm {
            Algorithm::Random => *feasible_steps(belief.dims, cfg, &cells)
                .choose(rng)
                .expect("staying or stepping toward the base is always feasible"),
            _ => best_step(&step_gains(belief, cfg, sensor, &cells)),
        };
        cells.push(next);
    }
    Ok(Path::new(cells)?)
}

fn best_step(gains: &[(Cell, f64)]) -> Cell {
    let mut best = gains[0];
    for &(cell, g) in &gains[1..] {
        if g > best.1 + TIE_TOLERANCE * best.1.abs().max(1.0) {
            best = (cell, g);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::CellBelief;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dims(w: usize, h: usize) -> GridDims {
        GridDims::new(w, h).unwrap()
    }

    #[test]
    fn path_invariants() {
        let d = Cell::new(1, 1);
        assert_eq!(Path::new(vec![]), Err(PathError::Empty));
        assert!(matches!(
            Path::new(vec![d, Cell::new(2, 1)]),
            Err(PathError::NotAnchored { .. })
        ));
        assert_eq!(Path::new(vec![d, Cell::new(3, 1), d]), Err(PathError::Disconnected(0)));
        let p = Path::new(vec![d, Cell::new(2, 2), d]).unwrap();
        assert!(p.check_against(dims(3, 3), d, 3).is_ok());
        assert!(matches!(
            p.check_against(dims(3, 3), d, 2),
            Err(PathError::OverBudget { .. })
        ));
        assert!(matches!(
            p.check_against(dims(2, 2), d, 3),
            Err(PathError::OutOfBounds(_))
        ));
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Path>(&json).unwrap(), p);
        assert!(serde_json::from_str::<Path>(r#"[{"col":0,"row":0},{"col":2,"row":0}]"#).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("itp".parse::<Algorithm>().is_err());
    }

    #[test]
    fn certain_cells_give_no_gain() {
        let d = Cell::new(0, 0);
        let mut b = BeliefState::uniform(dims(3, 3), CellBelief::new(0.0, 1.0, 0.5)).unwrap();
        b.set_cell(Cell::new(1, 0), CellBelief::new(1.0, 0.0, 0.0));
        let path = Path::new(vec![d, Cell::new(1, 0), d]).unwrap();
        let g = expected_info_gain(&b, &path, &SensorParams::default());
        assert_abs_diff_eq!(g, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn uninformative_sensor_gives_no_gain() {
        let d = Cell::new(1, 1);
        let b = BeliefState::uniform(dims(3, 3), CellBelief::new(0.3, 0.4, 0.7)).unwrap();
        let path = Path::new(vec![d, Cell::new(2, 2), Cell::new(2, 1), d]).unwrap();
        let s = SensorParams {
            p_lethal: 0.2,
            p_malfunction: 0.2,
            target_tpr: 0.6,
            target_fpr: 0.6,
        };
        for model in [
            InferenceModel::KappaNetwork,
            InferenceModel::Independent,
            InferenceModel::MultiUniverse,
        ] {
            let g = expected_walk_gain(model, &b, path.cells(), &s);
            assert_abs_diff_eq!(g, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_cell_two_outcome_gain() {
        let d = Cell::new(0, 0);
        // x certain so only the hazard map carries entropy.
        let b = BeliefState::uniform(dims(2, 2), CellBelief::new(0.5, 0.0, 0.0)).unwrap();
        let s = SensorParams {
            p_lethal: 0.9,
            p_malfunction: 0.05,
            target_tpr: 0.95,
            target_fpr: 0.05,
        };
        let h = |p: f64| -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        let p_trig = 0.5 * 0.9 + 0.5 * 0.05;
        let z_trig = 0.45 / p_trig;
        let z_surv = 0.05 / (1.0 - p_trig);
        let expected = h(0.5) - p_trig * h(z_trig) - (1.0 - p_trig) * h(z_surv);
        let g = expected_info_gain(&b, &Path::new(vec![d]).unwrap(), &s);
        assert_abs_diff_eq!(g, expected, epsilon = 1e-12);
        assert!(g > 0.0);
    }

    #[test]
    fn budget_two_forces_out_and_back() {
        let d = Cell::new(1, 1);
        let b = BeliefState::uniform(dims(3, 3), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for algorithm in Algorithm::ALL {
            let cfg = PlannerConfig {
                budget_l: 2,
                base: d,
                algorithm,
            };
            let p = plan_path(&b, &cfg, &SensorParams::default(), &mut rng).unwrap();
            assert_eq!(p.cells(), &[d, d]);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let b = BeliefState::uniform(dims(3, 3), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = PlannerConfig {
            budget_l: 5,
            base: Cell::new(3, 0),
            algorithm: Algorithm::KappaBnitp,
        };
        assert_eq!(
            plan_path(&b, &cfg, &SensorParams::default(), &mut rng),
            Err(PlannerError::BaseOutOfBounds(Cell::new(3, 0)))
        );
        let cfg = PlannerConfig {
            budget_l: 1,
            base: Cell::new(0, 0),
            ..cfg
        };
        assert_eq!(
            plan_path(&b, &cfg, &SensorParams::default(), &mut rng),
            Err(PlannerError::BudgetTooSmall(1))
        );
    }

    #[test]
    fn feasibility_filter_respects_return_budget() {
        let d = Cell::new(0, 0);
        let cfg = PlannerConfig {
            budget_l: 4,
            base: d,
            algorithm: Algorithm::KappaBnitp,
        };
        // After [d, (1,1)] one more free cell remains before the forced return.
        let steps = feasible_steps(dims(5, 5), &cfg, &[d, Cell::new(1, 1)]);
        assert!(steps.iter().all(|c| c.chebyshev(d) <= 1));
        assert_eq!(steps.last(), Some(&Cell::new(1, 1)));
        assert_eq!(
            feasible_steps(dims(5, 5), &cfg, &[d, Cell::new(1, 1), Cell::new(1, 0)]),
            vec![d]
        );
    }

    #[test]
    fn ties_keep_first_in_order() {
        let a = Cell::new(0, 0);
        let b = Cell::new(1, 0);
        assert_eq!(best_step(&[(a, 1.0), (b, 1.0 + 1e-15)]), a);
        assert_eq!(best_step(&[(a, 1.0), (b, 1.0 + 1e-9)]), b);
    }
}
