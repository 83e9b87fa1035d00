//! Shannon entropy of belief maps, in nats.
//!
//! Cells are treated as independent Bernoulli variables, so the entropy of a
//! map is the sum of per-cell binary entropies. The reported total is
//! `h_z + h_x`; the κ map is excluded because the baseline planners do not
//! maintain one.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::belief::BeliefState;

/// Header of the per-trial trace CSV (schema version 1).
pub const TRACE_CSV_HEADER: &str = "deployment,h_z,h_x,h_total";

/// Binary entropy with `0 ln 0 = 0`.
#[inline]
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    term(p) + term(1.0 - p)
}

pub fn map_entropy(map: &[f64]) -> f64 {
    map.iter().map(|&p| binary_entropy(p)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub deployment: usize,
    pub h_z: f64,
    pub h_x: f64,
    pub h_total: f64,
}

impl TraceRow {
    pub fn of(deployment: usize, belief: &BeliefState) -> Self {
        let h_z = map_entropy(&belief.z_map);
        let h_x = map_entropy(&belief.x_map);
        TraceRow {
            deployment,
            h_z,
            h_x,
            h_total: h_z + h_x,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("deployment {got} recorded out of order (expected {expected})")]
pub struct OutOfOrder {
    pub expected: usize,
    pub got: usize,
}

/// Entropy after each deployment of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTrace {
    pub scenario: String,
    pub planner: String,
    pub seed: u64,
    pub per_deployment: Vec<TraceRow>,
}

impl EntropyTrace {
    pub fn new(scenario: impl Into<String>, planner: impl Into<String>, seed: u64) -> Self {
        EntropyTrace {
            scenario: scenario.into(),
            planner: planner.into(),
            seed,
            per_deployment: Vec::new(),
        }
    }

    /// Appends the entropy of `belief` as deployment `m`, which must equal
    /// the current length.
    pub fn record_deployment(&mut self, m: usize, belief: &BeliefState) -> Result<(), OutOfOrder> {
        if m != self.per_deployment.len() {
            return Err(OutOfOrder {
                expected: self.per_deployment.len(),
                got: m,
            });
        }
        self.per_deployment.push(TraceRow::of(m, belief));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.per_deployment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_deployment.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        write_trace_csv(out, &self.per_deployment)
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Writes rows under [`TRACE_CSV_HEADER`]. Floats use the shortest
/// round-trip representation, so equal values always produce equal bytes.
pub fn write_trace_csv<W: Write>(mut out: W, rows: &[TraceRow]) -> io::Result<()> {
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.deployment, r.h_z, r.h_x, r.h_total)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::belief::CellBelief;
    use crate::world::GridDims;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_map_is_maximal() {
        let h = map_entropy(&vec![0.5; 81]);
        assert_abs_diff_eq!(h, 81.0 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(h, 56.144922, epsilon = 1e-6);
    }

    #[test]
    fn certain_map_is_zero() {
        assert_eq!(map_entropy(&[0.0, 1.0, 1.0, 0.0]), 0.0);
    }

    #[test]
    fn single_cell_value() {
        let expected = -(0.9f64 * 0.9f64.ln() + 0.1 * 0.1f64.ln());
        assert_abs_diff_eq!(map_entropy(&[0.9]), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(map_entropy(&[0.9]), 0.325083, epsilon = 1e-6);
    }

    #[test]
    fn record_uniform_belief() {
        let b = BeliefState::uniform(GridDims::new(9, 9).unwrap(), CellBelief::new(0.5, 0.5, 0.5)).unwrap();
        let mut t = EntropyTrace::new("s", "kappa_bnitp", 1);
        t.record_deployment(0, &b).unwrap();
        assert_abs_diff_eq!(t.per_deployment[0].h_total, 2.0 * 81.0 * 2f64.ln(), epsilon = 1e-12);
        t.record_deployment(1, &b).unwrap();
        assert_eq!(t.per_deployment[0].h_total, t.per_deployment[1].h_total);
        assert_eq!(t.record_deployment(5, &b), Err(OutOfOrder { expected: 2, got: 5 }));
    }

    #[test]
    fn csv_layout() {
        let b = BeliefState::uniform(GridDims::new(1, 1).unwrap(), CellBelief::new(1.0, 0.0, 0.5)).unwrap();
        let mut t = EntropyTrace::new("s", "p", 0);
        t.record_deployment(0, &b).unwrap();
        assert_eq!(t.to_csv(), "deployment,h_z,h_x,h_total\n0,0,0,0\n");
    }

    proptest! {
        #[test]
        fn bounds_and_symmetry(map in proptest::collection::vec(0.0f64..=1.0, 1..50)) {
            let h = map_entropy(&map);
            prop_assert!(h >= 0.0);
            prop_assert!(h <= map.len() as f64 * 2f64.ln() + 1e-12);
            let flipped: Vec<f64> = map.iter().map(|p| 1.0 - p).collect();
            prop_assert!((map_entropy(&flipped) - h).abs() < 1e-9);
        }

        #[test]
        fn additive_over_partitions(map in proptest::collection::vec(0.0f64..=1.0, 2..50), cut in 0usize..50) {
            let cut = cut % map.len();
            let (a, b) = map.split_at(cut);
            prop_assert!((map_entropy(a) + map_entropy(b) - map_entropy(&map)).abs() < 1e-9);
        }
    }
}
