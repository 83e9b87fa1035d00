//! Brute-force reference inference.
//!
//! Enumerates every assignment of hazard and target bits of the cells on a
//! path together with one destruction bit per visit, weights it by the full
//! joint probability and conditions on the observed outcome. Destruction bits
//! are drawn for every visit independently and the sensor fires when any of
//! them is set, so "which visit was fatal" never enters explicitly. This code
//! shares nothing with the update routines it is used to check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::belief::{self, BeliefState, CellBelief, CellPosterior};
use crate::likelihood::enumerate_omega;
use crate::planner::{self, Algorithm, Path, PlannerConfig};
use crate::seed::{derive_seed, Stream};
use crate::world::{Cell, GridDims, SensorParams};

/// Largest instance the randomized check accepts.
pub const MAX_CELLS: usize = 9;
pub const MAX_PATH_LEN: usize = 4;

/// Per-cell model fed to the enumeration: `P(Z=1)` and
/// `[P(X=1 | Z=0), P(X=1 | Z=1)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCell {
    pub cell: Cell,
    pub z: f64,
    pub x_given_z: [f64; 2],
}

impl OracleCell {
    /// Completes the conditional table of a stored belief triple by total
    /// probability, clamped to `[0, 1]`.
    pub fn from_belief(cell: Cell, b: &CellBelief) -> Self {
        let x_not_z = if b.z < 1.0 {
            let v = (b.x - b.kappa * b.z) / (1.0 - b.z);
            v.clamp(0.0, 1.0)
        } else {
            b.x
        };
        OracleCell {
            cell,
            z: b.z,
            x_given_z: [x_not_z, b.kappa],
        }
    }

    /// Model without the hazard→target edge.
    pub fn independent(cell: Cell, b: &CellBelief) -> Self {
        OracleCell {
            cell,
            z: b.z,
            x_given_z: [b.x, b.x],
        }
    }
}

/// Conditioned marginals of the path cells.
#[derive(Debug, Clone)]
pub struct Enumeration {
    /// Probability of the conditioning event.
    pub evidence: f64,
    posteriors: Vec<(Cell, CellPosterior)>,
}

impl Enumeration {
    pub fn posterior(&self, cell: Cell) -> Option<CellPosterior> {
        self.posteriors.iter().find(|(c, _)| *c == cell).map(|(_, p)| *p)
    }

    pub fn posteriors(&self) -> &[(Cell, CellPosterior)] {
        &self.posteriors
    }
}

fn lookup(model: &[OracleCell], cell: Cell) -> OracleCell {
    *model
        .iter()
        .find(|m| m.cell == cell)
        .unwrap_or_else(|| panic!("no oracle model for cell {cell}"))
}

fn pick(p_one: f64, bit: bool) -> f64 {
    if bit {
        p_one
    } else {
        1.0 - p_one
    }
}

/// Core enumeration. `accept` sees the destruction bits of all visits and
/// returns the likelihood factor of the observation (0 rejects).
fn enumerate(
    model: &[OracleCell],
    path: &[Cell],
    sensor: &SensorParams,
    accept: &dyn Fn(&[bool], &[bool]) -> f64,
) -> Enumeration {
    let mut distinct: Vec<Cell> = Vec::new();
    for &c in path {
        if !distinct.contains(&c) {
            distinct.push(c);
        }
    }
    let n = distinct.len();
    let l = path.len();
    let cells: Vec<OracleCell> = distinct.iter().map(|&c| lookup(model, c)).collect();
    let slot: Vec<usize> = path
        .iter()
        .map(|c| distinct.iter().position(|d| d == c).unwrap())
        .collect();

    let mut evidence = 0.0;
    let mut hz = vec![0.0; n];
    let mut tg = vec![0.0; n];
    let mut both = vec![0.0; n];
    let mut z_bits = vec![false; n];
    let mut x_bits = vec![false; n];
    let mut visit_targets = vec![false; l];
    let mut deltas = vec![false; l];

    for zm in 0u32..(1 << n) {
        for xm in 0u32..(1 << n) {
            let mut prior = 1.0;
            for d in 0..n {
                z_bits[d] = zm >> d & 1 == 1;
                x_bits[d] = xm >> d & 1 == 1;
                let z = z_bits[d];
                prior *= pick(cells[d].z, z);
                prior *= pick(cells[d].x_given_z[z as usize], x_bits[d]);
            }
            if prior == 0.0 {
                continue;
            }
            for i in 0..l {
                visit_targets[i] = x_bits[slot[i]];
            }
            for dm in 0u32..(1 << l) {
                let mut p = prior;
                for i in 0..l {
                    deltas[i] = dm >> i & 1 == 1;
                    let p_destroy = if z_bits[slot[i]] {
                        sensor.p_lethal
                    } else {
                        sensor.p_malfunction
                    };
                    p *= pick(p_destroy, deltas[i]);
                }
                let p = p * accept(&deltas, &visit_targets);
                if p == 0.0 {
                    continue;
                }
                evidence += p;
                for d in 0..n {
                    if z_bits[d] {
                        hz[d] += p;
                    }
                    if x_bits[d] {
                        tg[d] += p;
                    }
                    if z_bits[d] && x_bits[d] {
                        both[d] += p;
                    }
                }
            }
        }
    }

    let posteriors = distinct
        .iter()
        .enumerate()
        .map(|(d, &c)| {
            let post = if evidence > 0.0 {
                CellPosterior {
                    z: hz[d] / evidence,
                    x: tg[d] / evidence,
                    kappa: if hz[d] > 0.0 {
                        both[d] / hz[d]
                    } else {
                        cells[d].x_given_z[1]
                    },
                }
            } else {
                CellPosterior {
                    z: cells[d].z,
                    x: cells[d].x_given_z[0] * (1.0 - cells[d].z) + cells[d].x_given_z[1] * cells[d].z,
                    kappa: cells[d].x_given_z[1],
                }
            };
            (c, post)
        })
        .collect();
    Enumeration { evidence, posteriors }
}

/// Posterior given that the path sensor fired.
pub fn enumerate_trigger(model: &[OracleCell], path: &[Cell], sensor: &SensorParams) -> Enumeration {
    enumerate(model, path, sensor, &|deltas, _| {
        if deltas.iter().any(|&d| d) {
            1.0
        } else {
            0.0
        }
    })
}

/// Posterior given survival of the whole path and the per-visit readings.
pub fn enumerate_survival(
    model: &[OracleCell],
    path: &[Cell],
    readings: &[bool],
    sensor: &SensorParams,
) -> Enumeration {
    assert_eq!(path.len(), readings.len());
    enumerate(model, path, sensor, &|deltas, targets| {
        if deltas.iter().any(|&d| d) {
            return 0.0;
        }
        targets
            .iter()
            .zip(readings)
            .map(|(&x, &y)| {
                let p_one = if x { sensor.target_tpr } else { sensor.target_fpr };
                pick(p_one, y)
            })
            .product()
    })
}

fn entropy(p: f64) -> f64 {
    let t = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    t(p) + t(1.0 - p)
}

/// Expected entropy drop of the path cells' `z` and `x` marginals, summing
/// over the trigger outcome and every reading vector of the survival outcome.
pub fn enumerate_expected_gain(model: &[OracleCell], path: &[Cell], sensor: &SensorParams) -> f64 {
    let mut distinct: Vec<Cell> = Vec::new();
    for &c in path {
        if !distinct.contains(&c) {
            distinct.push(c);
        }
    }
    let prior: f64 = distinct
        .iter()
        .map(|&c| {
            let m = lookup(model, c);
            let x = m.x_given_z[0] * (1.0 - m.z) + m.x_given_z[1] * m.z;
            entropy(m.z) + entropy(x)
        })
        .sum();
    let h = |e: &Enumeration| -> f64 { e.posteriors.iter().map(|(_, p)| entropy(p.z) + entropy(p.x)).sum() };

    let trig = enumerate_trigger(model, path, sensor);
    let mut posterior = trig.evidence * h(&trig);
    let mut total = trig.evidence;
    for ym in 0u32..(1 << path.len()) {
        let readings: Vec<bool> = (0..path.len()).map(|i| ym >> i & 1 == 1).collect();
        let e = enumerate_survival(model, path, &readings, sensor);
        posterior += e.evidence * h(&e);
        total += e.evidence;
    }
    debug_assert!((total - 1.0).abs() < 1e-9);
    prior - posterior
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(
        "instance too large for exhaustive enumeration: grid {width}x{height} (max {MAX_CELLS} cells), \
         path budget {budget} (max {MAX_PATH_LEN})"
    )]
    TooLarge { width: usize, height: usize, budget: usize },
}

/// Outcome of a randomized oracle sweep.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub instances: usize,
    pub triggered: usize,
    pub max_abs_deviation: f64,
    pub worst_instance: Option<usize>,
}

impl OracleReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_abs_deviation <= tolerance
    }
}

/// Settings of [`randomized_check`].
#[derive(Debug, Clone, Copy)]
pub struct OracleSettings {
    pub dims: GridDims,
    pub budget: usize,
    pub instances: usize,
    pub seed: u64,
    /// Fixed sensor; random per instance when `None`.
    pub sensor: Option<SensorParams>,
    /// Added to the implementation's hazard posteriors before comparison.
    /// Test hook for negative controls; zero in normal use.
    pub perturbation: f64,
}

/// Compares the κ-network updates with exhaustive enumeration on random
/// beliefs, paths and outcomes.
pub fn randomized_check(settings: &OracleSettings) -> Result<OracleReport, OracleError> {
    let dims = settings.dims;
    if dims.cell_count() > MAX_CELLS
        || dims.width > 3
        || dims.height > 3
        || settings.budget > MAX_PATH_LEN
        || settings.budget < 1
    {
        return Err(OracleError::TooLarge {
            width: dims.width,
            height: dims.height,
            budget: settings.budget,
        });
    }

    let mut report = OracleReport {
        instances: settings.instances,
        triggered: 0,
        max_abs_deviation: 0.0,
        worst_instance: None,
    };
    for i in 0..settings.instances {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(settings.seed, Stream::Oracle, i as u64));
        let belief = random_belief(dims, &mut rng);
        let sensor = settings.sensor.unwrap_or_else(|| SensorParams {
            p_lethal: rng.gen_range(0.02..0.98),
            p_malfunction: rng.gen_range(0.02..0.98),
            target_tpr: rng.gen_range(0.02..0.98),
            target_fpr: rng.gen_range(0.02..0.98),
        });
        let path = random_path(dims, settings.budget, &mut rng);
        let model: Vec<OracleCell> = dims
            .cells()
            .map(|c| OracleCell::from_belief(c, &belief.cell(c)))
            .collect();

        let triggered = rng.gen_bool(0.5);
        let (mut updated, exact) = if triggered {
            report.triggered += 1;
            let table = enumerate_omega(&belief, &path, &sensor).expect("path is in bounds");
            let updated = belief::update_trigger(&belief, &path, &sensor, &table).expect("valid inputs");
            (updated, enumerate_trigger(&model, path.cells(), &sensor))
        } else {
            let readings: Vec<bool> = (0..path.len()).map(|_| rng.gen_bool(0.5)).collect();
            let updated = belief::update_no_trigger(&belief, &path, &readings, &sensor).expect("valid inputs");
            (updated, enumerate_survival(&model, path.cells(), &readings, &sensor))
        };
        for z in updated.z_map.iter_mut() {
            *z += settings.perturbation;
        }

        let mut deviation = 0.0f64;
        for c in dims.cells() {
            let got = updated.cell(c);
            let want = exact.posterior(c).unwrap_or(belief.cell(c));
            deviation = deviation
                .max((got.z - want.z).abs())
                .max((got.x - want.x).abs())
                .max((got.kappa - want.kappa).abs());
        }
        if deviation > report.max_abs_deviation || deviation.is_nan() {
            report.max_abs_deviation = if deviation.is_nan() { f64::INFINITY } else { deviation };
            report.worst_instance = Some(i);
        }
    }
    Ok(report)
}

/// Belief with a consistent `(z, κ, P(X|Z=0))` triple in most cells and an
/// arbitrary (possibly clamped) `x` in the rest.
pub fn random_belief<R: Rng>(dims: GridDims, rng: &mut R) -> BeliefState {
    let mut b = BeliefState::uniform(dims, CellBelief::new(0.5, 0.5, 0.5)).expect("valid dims");
    for c in dims.cells() {
        let z = rng.gen_range(0.01..0.99);
        let kappa = rng.gen_range(0.01..0.99);
        let x = if rng.gen_bool(0.8) {
            let q: f64 = rng.gen_range(0.01..0.99);
            kappa * z + q * (1.0 - z)
        } else {
            rng.gen_range(0.01..0.99)
        };
        b.set_cell(c, CellBelief::new(z, x, kappa));
    }
    b
}

/// Random anchored walk of length `1..=budget` from a random base.
pub fn random_path<R: Rng>(dims: GridDims, budget: usize, rng: &mut R) -> Path {
    let base = dims.cell_at(rng.gen_range(0..dims.cell_count()));
    let len = rng.gen_range(1..=budget);
    let cfg = PlannerConfig {
        budget_l: len,
        base,
        algorithm: Algorithm::Random,
    };
    let mut cells = vec![base];
    while cells.len() < len {
        let steps = planner::feasible_steps(dims, &cfg, &cells);
        cells.push(steps[rng.gen_range(0..steps.len())]);
    }
    Path::new(cells).expect("feasible steps keep the walk anchored")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trigger_single_cell_hand_value() {
        let c = Cell::new(0, 0);
        let model = [OracleCell {
            cell: c,
            z: 0.5,
            x_given_z: [0.5, 0.5],
        }];
        let s = SensorParams {
            p_lethal: 0.9,
            p_malfunction: 0.05,
            target_tpr: 0.95,
            target_fpr: 0.05,
        };
        let e = enumerate_trigger(&model, &[c], &s);
        assert!((e.evidence - 0.475).abs() < 1e-15);
        assert!((e.posterior(c).unwrap().z - 0.45 / 0.475).abs() < 1e-15);
    }

    #[test]
    fn refuses_large_instances() {
        let settings = OracleSettings {
            dims: GridDims::new(4, 3).unwrap(),
            budget: 4,
            instances: 1,
            seed: 0,
            sensor: None,
            perturbation: 0.0,
        };
        assert!(randomized_check(&settings).is_err());
        let settings = OracleSettings {
            dims: GridDims::new(3, 3).unwrap(),
            budget: 5,
            ..settings
        };
        assert!(randomized_check(&settings).is_err());
    }

    #[test]
    fn perturbation_is_detected() {
        let settings = OracleSettings {
            dims: GridDims::new(3, 3).unwrap(),
            budget: 4,
            instances: 5,
            seed: 1,
            sensor: None,
            perturbation: 1e-6,
        };
        let report = randomized_check(&settings).unwrap();
        assert!(!report.passed(1e-9));
    }
}
