//! Outage experiment: closed-form approximation against the brute-force
//! oracle, per (group size, Rayleigh scale) combination.

use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ofcdm_core::metrics::{outage_cdf_approx, outage_cdf_oracle, OutageParams};
use ofcdm_core::SystemConfig;

use crate::config_file::config_digest;
use crate::output::write_artifact;
use crate::CliError;

/// Default oracle sample count.
pub const DEFAULT_SAMPLES: u64 = 1_000_000;

/// Default normalized threshold grid: `gamma_th / mean`, spanning four mean
/// amplitude-sum standard scales.
pub const DEFAULT_GRID: &str = "0:0.025:3.2";

/// Fully resolved outage experiment.
#[derive(Debug, Clone)]
pub struct OutageExperiment {
    pub group_sizes: Vec<u32>,
    pub sigmas: Vec<f64>,
    /// Thresholds normalized by the mean amplitude sum.
    pub normalized_grid: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    /// Correction constants for group sizes outside the built-in table.
    pub custom_constants: Option<(f64, f64, f64)>,
}

/// One (group size, sigma) curve.
#[derive(Debug, Clone)]
pub struct OutageCurve {
    pub group_size: u32,
    pub sigma: f64,
    /// Rows: (normalized threshold, approx CDF, oracle CDF, absolute error).
    pub rows: Vec<(f64, f64, f64, f64)>,
}

impl OutageCurve {
    pub fn max_abs_err(&self) -> f64 {
        self.rows.iter().fold(0.0f64, |m, r| m.max(r.3))
    }
}

/// Runs every combination; combinations fan out to the rayon pool while each
/// oracle stays internally deterministic.
pub fn run_outage(exp: &OutageExperiment) -> Result<Vec<OutageCurve>, CliError> {
    if exp.samples == 0 {
        return Err(CliError::Config(
            "--trials 0 would draw an empty oracle".into(),
        ));
    }
    let mut combos = Vec::new();
    for &my in &exp.group_sizes {
        for &sigma in &exp.sigmas {
            let params = match exp.custom_constants {
                Some((a0, a1, a2)) => OutageParams::with_constants(my, sigma, a0, a1, a2),
                None => OutageParams::from_table(my, sigma),
            }
            .map_err(|e| CliError::Config(e.to_string()))?;
            combos.push(params);
        }
    }
    let curves: Result<Vec<OutageCurve>, String> = combos
        .par_iter()
        .map(|params| {
            let mean = params.mean_amplitude_sum();
            let raw_grid: Vec<f64> = exp.normalized_grid.iter().map(|x| x * mean).collect();
            let oracle = outage_cdf_oracle(
                &raw_grid,
                params.group_size,
                params.sigma,
                exp.samples,
                exp.seed,
            )
            .map_err(|e| e.to_string())?;
            let mut rows = Vec::with_capacity(raw_grid.len());
            for (i, &g) in raw_grid.iter().enumerate() {
                let approx = outage_cdf_approx(g, params).map_err(|e| e.to_string())?;
                rows.push((
                    exp.normalized_grid[i],
                    approx.value,
                    oracle[i],
                    (approx.value - oracle[i]).abs(),
                ));
            }
            Ok(OutageCurve {
                group_size: params.group_size,
                sigma: params.sigma,
                rows,
            })
        })
        .collect();
    curves.map_err(CliError::Config)
}

fn curve_csv(curve: &OutageCurve) -> String {
    let mut body = String::from("gamma_th,approx_cdf,oracle_cdf,abs_err\n");
    for &(x, a, o, e) in &curve.rows {
        let _ = writeln!(body, "{x:.4},{a:.6},{o:.6},{e:.6}");
    }
    body
}

/// Writes one CSV per combination; returns the paths.
pub fn write_outputs(
    curves: &[OutageCurve],
    base: &SystemConfig,
    seed: u64,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let digest = config_digest(base);
    let mut paths = Vec::new();
    for curve in curves {
        let name = format!(
            "outage_my{}_sigma{:.2}.csv",
            curve.group_size, curve.sigma
        );
        paths.push(write_artifact(
            dir,
            &name,
            "outage",
            &digest,
            seed,
            &curve_csv(curve),
        )?);
    }
    Ok(paths)
}

/// One stdout line per combination.
pub fn summary_text(curves: &[OutageCurve]) -> String {
    let mut text = String::new();
    for c in curves {
        let _ = writeln!(
            text,
            "outage my={} sigma={:.2} max_abs_err={:.5}",
            c.group_size,
            c.sigma,
            c.max_abs_err()
        );
    }
    text
}
