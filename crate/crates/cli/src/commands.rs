use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use pathbelief::experiment::{run_monte_carlo, trial_seed, MonteCarloResult};
use pathbelief::metrics::write_trace_csv;
use pathbelief::oracle::{randomized_check, OracleReport, OracleSettings};
use pathbelief::ScenarioConfig;

use crate::config::SweepSpec;
use crate::output::{create_dir, write_atomic, write_json, Manifest, SeedRecord, COMBINED_CSV_HEADER};
use crate::Failure;

/// Present in a sweep directory until every output, including the combined
/// CSV, has been written.
pub const INCOMPLETE_MARKER: &str = "SWEEP_INCOMPLETE";
pub const COMBINED_CSV: &str = "combined.csv";
pub const MANIFEST: &str = "manifest.json";

/// Largest deviation from exhaustive enumeration that still counts as a pass.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

pub fn trial_trace_name(trial: usize) -> String {
    format!("trace_trial_{trial:03}.csv")
}

pub fn sweep_trace_name(lethality: f64, planner: &str) -> String {
    format!("trace_leth{lethality}_{planner}.csv")
}

fn seed_record(cfg: &ScenarioConfig) -> SeedRecord {
    SeedRecord {
        scenario: cfg.name.clone(),
        master_seed: cfg.master_seed,
        trial_seeds: (0..cfg.num_trials).map(|i| trial_seed(cfg.master_seed, i)).collect(),
    }
}

fn csv_bytes(rows: &[pathbelief::metrics::TraceRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, rows).expect("writing to a Vec cannot fail");
    buf
}

/// Runs every trial of `cfg` and writes one trace per trial, the mean trace,
/// the aggregate, a manifest and, if enabled, belief snapshots.
pub fn cmd_run(cfg: &ScenarioConfig, out: &Path) -> Result<MonteCarloResult, Failure> {
    cfg.validate().map_err(|e| Failure::Validation(e.into()))?;
    create_dir(out).map_err(Failure::Runtime)?;
    let result = run_monte_carlo(cfg).map_err(|e| Failure::Runtime(e.into()))?;

    let mut manifest = Manifest::new("run", cfg);
    manifest.seeds.push(seed_record(cfg));
    let mut write = |name: String, bytes: Vec<u8>| -> anyhow::Result<()> {
        write_atomic(&out.join(&name), &bytes)?;
        manifest.files.push(name);
        Ok(())
    };
    for t in &result.trials {
        write(trial_trace_name(t.trial), csv_bytes(&t.trace.per_deployment)).map_err(Failure::Runtime)?;
    }
    write("mean_trace.csv".into(), csv_bytes(&result.aggregate.mean_trace())).map_err(Failure::Runtime)?;
    let aggregate = serde_json::to_vec_pretty(&result.aggregate).expect("aggregate serializes");
    write("aggregate.json".into(), aggregate).map_err(Failure::Runtime)?;

    if cfg.snapshots {
        let dir = out.join("snapshots");
        create_dir(&dir).map_err(Failure::Runtime)?;
        for t in &result.trials {
            let name = format!("snapshots/trial_{:03}.json", t.trial);
            write_json(&out.join(&name), &t.snapshots).map_err(Failure::Runtime)?;
            manifest.files.push(name);
        }
    }
    write_json(&out.join(MANIFEST), &manifest).map_err(Failure::Runtime)?;
    Ok(result)
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub lethality: f64,
    pub planner: &'static str,
    pub file: PathBuf,
    pub final_mean_h_total: f64,
}

/// Runs the lethality × planner grid. Each grid point gets a mean-trace CSV;
/// `combined.csv` holds every trial of every point in long format and is
/// written last, after which the incomplete marker is removed.
///
/// `fail_after` aborts the sweep with an error once that many grid points are
/// done, leaving the directory as an interrupted run would.
pub fn cmd_sweep(spec: &SweepSpec, out: &Path, fail_after: Option<usize>) -> Result<Vec<SweepPoint>, Failure> {
    spec.validate().map_err(Failure::Validation)?;
    create_dir(out).map_err(Failure::Runtime)?;
    let marker = out.join(INCOMPLETE_MARKER);
    let combined_path = out.join(COMBINED_CSV);
    write_atomic(&marker, b"sweep in progress; outputs in this directory are partial\n").map_err(Failure::Runtime)?;
    if combined_path.exists() {
        fs::remove_file(&combined_path)
            .context("cannot remove stale combined CSV")
            .map_err(Failure::Runtime)?;
    }

    let mut manifest = Manifest::new("sweep", spec);
    let mut combined = format!("{COMBINED_CSV_HEADER}\n");
    let mut points = Vec::new();
    for &lethality in &spec.lethality_values {
        for &planner in &spec.planners {
            if fail_after == Some(points.len()) {
                return Err(Failure::Runtime(anyhow!(
                    "sweep interrupted after {} grid points",
                    points.len()
                )));
            }
            let cfg = spec.grid_point(lethality, planner);
            let result = run_monte_carlo(&cfg).map_err(|e| Failure::Runtime(e.into()))?;
            let name = sweep_trace_name(lethality, planner.name());
            let file = out.join(&name);
            write_atomic(&file, &csv_bytes(&result.aggregate.mean_trace())).map_err(Failure::Runtime)?;
            for t in &result.trials {
                for r in &t.trace.per_deployment {
                    writeln!(
                        combined,
                        "{lethality},{planner},{},{},{},{},{}",
                        t.trial, r.deployment, r.h_z, r.h_x, r.h_total
                    )
                    .expect("writing to a String cannot fail");
                }
            }
            manifest.seeds.push(seed_record(&cfg));
            manifest.files.push(name);
            let final_mean_h_total = result.aggregate.final_mean_h_total().unwrap_or(f64::NAN);
            eprintln!("lethality {lethality} {planner}: final mean h_total {final_mean_h_total:.4}");
            points.push(SweepPoint {
                lethality,
                planner: planner.name(),
                file,
                final_mean_h_total,
            });
        }
    }

    write_atomic(&combined_path, combined.as_bytes()).map_err(Failure::Runtime)?;
    manifest.files.push(COMBINED_CSV.into());
    write_json(&out.join(MANIFEST), &manifest).map_err(Failure::Runtime)?;
    fs::remove_file(&marker)
        .context("cannot remove the incomplete marker")
        .map_err(Failure::Runtime)?;
    Ok(points)
}

/// Checks the belief updates against exhaustive enumeration on random
/// instances of the configured grid, path budget and sensor.
pub fn cmd_oracle(cfg: &ScenarioConfig, instances: usize, perturbation: f64) -> Result<OracleReport, Failure> {
    cfg.validate().map_err(|e| Failure::Validation(e.into()))?;
    let settings = OracleSettings {
        dims: cfg.dims,
        budget: cfg.planner.budget_l,
        instances,
        seed: cfg.master_seed,
        sensor: Some(cfg.sensor),
        perturbation,
    };
    randomized_check(&settings).map_err(|e| Failure::Validation(e.into()))
}
