//! BER experiment: probing versus baseline curves per spreading shape.

use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ofcdm_core::metrics::{ber_point, BerCurve, BerPoint};
use ofcdm_core::protocol::SimMode;
use ofcdm_core::SystemConfig;

use crate::config_file::config_digest;
use crate::output::{fmt_rate, write_artifact};
use crate::CliError;

/// Default frames simulated per grid point at desk scale.
pub const DEFAULT_FRAMES_PER_POINT: u64 = 9_000;

/// Default Eb/N0 grid (dB).
pub const DEFAULT_GRID: &str = "0:2:16";

/// Fully resolved BER experiment.
#[derive(Debug, Clone)]
pub struct BerExperiment {
    pub base: SystemConfig,
    /// Spreading shapes `(group_size, time_spread)` to sweep.
    pub shapes: Vec<(u32, u32)>,
    pub grid_db: Vec<f64>,
    pub frames_per_point: u64,
    pub ber_target: f64,
}

/// Gain summary for one spreading shape.
#[derive(Debug, Clone)]
pub struct ShapeSummary {
    pub group_size: u32,
    pub time_spread: u32,
    pub probing_crossing_db: Option<f64>,
    pub baseline_crossing_db: Option<f64>,
}

impl ShapeSummary {
    /// Horizontal Eb/N0 gain of probing over the baseline at the target BER.
    pub fn gain_db(&self) -> Option<f64> {
        Some(self.baseline_crossing_db? - self.probing_crossing_db?)
    }
}

/// Curves and summaries of one full BER run.
#[derive(Debug, Clone)]
pub struct BerRunOutput {
    pub curves: Vec<BerCurve>,
    pub summaries: Vec<ShapeSummary>,
    pub ber_target: f64,
}

fn shape_config(base: &SystemConfig, group_size: u32, time_spread: u32) -> SystemConfig {
    let mut cfg = base.clone();
    cfg.group_size = group_size;
    cfg.time_spread = time_spread;
    cfg.group_count = if group_size == 0 {
        0
    } else {
        cfg.total_subcarriers / group_size
    };
    cfg.spacing = cfg.group_count;
    cfg
}

/// Runs every `(shape, mode, grid point)` simulation, fanning points out to
/// the current rayon pool. Every point owns a seed derived from the master
/// seed and its coordinates, so results do not depend on the pool size.
pub fn run_ber(exp: &BerExperiment) -> Result<BerRunOutput, CliError> {
    if exp.frames_per_point == 0 {
        return Err(CliError::Config(
            "--trials 0 would simulate an empty experiment".into(),
        ));
    }
    if !(exp.ber_target > 0.0 && exp.ber_target < 0.5) {
        return Err(CliError::Config(format!(
            "BER target must be in (0, 0.5), got {}",
            exp.ber_target
        )));
    }
    let mut configs = Vec::new();
    for &(my, n) in &exp.shapes {
        let cfg = shape_config(&exp.base, my, n);
        cfg.validate()
            .map_err(|e| CliError::Config(format!("spreading shape {my}x{n}: {e}")))?;
        configs.push(cfg);
    }

    let modes = [SimMode::Probing, SimMode::Baseline];
    let tasks: Vec<(usize, usize, usize)> = (0..configs.len())
        .flat_map(|s| {
            (0..modes.len()).flat_map(move |m| (0..exp.grid_db.len()).map(move |p| (s, m, p)))
        })
        .collect();

    let results: Result<Vec<BerPoint>, String> = tasks
        .par_iter()
        .map(|&(s, m, p)| {
            ber_point(
                &configs[s],
                modes[m],
                exp.grid_db[p],
                p as u64,
                exp.frames_per_point,
            )
            .map_err(|e| e.to_string())
        })
        .collect();
    let results = results.map_err(CliError::Config)?;

    let points_per_curve = exp.grid_db.len();
    let mut curves = Vec::new();
    for (s, cfg) in configs.iter().enumerate() {
        for (m, &mode) in modes.iter().enumerate() {
            let offset = (s * modes.len() + m) * points_per_curve;
            curves.push(BerCurve {
                mode,
                group_size: cfg.group_size,
                time_spread: cfg.time_spread,
                points: results[offset..offset + points_per_curve].to_vec(),
            });
        }
    }

    let summaries = exp
        .shapes
        .iter()
        .map(|&(my, n)| {
            let find = |mode: SimMode| {
                curves
                    .iter()
                    .find(|c| c.mode == mode && c.group_size == my && c.time_spread == n)
                    .and_then(|c| c.crossing_db(exp.ber_target))
            };
            ShapeSummary {
                group_size: my,
                time_spread: n,
                probing_crossing_db: find(SimMode::Probing),
                baseline_crossing_db: find(SimMode::Baseline),
            }
        })
        .collect();

    Ok(BerRunOutput {
        curves,
        summaries,
        ber_target: exp.ber_target,
    })
}

fn mode_name(mode: SimMode) -> &'static str {
    match mode {
        SimMode::Probing => "probing",
        SimMode::Baseline => "baseline",
    }
}

fn curve_csv(curve: &BerCurve) -> String {
    let mut body = String::from("ebn0_db,ber,trials,ci99\n");
    for p in &curve.points {
        let _ = writeln!(
            body,
            "{:.1},{},{},{}",
            p.ebn0_db,
            fmt_rate(p.ber()),
            p.bits,
            fmt_rate(p.ci99_half_width()),
        );
    }
    body
}

/// One human-readable line per spreading shape.
pub fn summary_text(out: &BerRunOutput) -> String {
    let fmt_db = |v: Option<f64>| match v {
        Some(db) => format!("{db:.2}dB"),
        None => "n/a".to_string(),
    };
    let mut text = String::new();
    for s in &out.summaries {
        let _ = writeln!(
            text,
            "csf={}x{} target_ber={:.1e} probing={} baseline={} gain={}",
            s.group_size,
            s.time_spread,
            out.ber_target,
            fmt_db(s.probing_crossing_db),
            fmt_db(s.baseline_crossing_db),
            fmt_db(s.gain_db()),
        );
    }
    text
}

/// Writes one CSV per curve plus the gain summary; returns the paths.
pub fn write_outputs(
    out: &BerRunOutput,
    base: &SystemConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let seed = base.master_seed;
    let mut paths = Vec::new();
    for curve in &out.curves {
        let digest = config_digest(&shape_config(base, curve.group_size, curve.time_spread));
        let name = format!(
            "ber_{}_{}x{}.csv",
            mode_name(curve.mode),
            curve.group_size,
            curve.time_spread
        );
        paths.push(write_artifact(
            dir,
            &name,
            "ber",
            &digest,
            seed,
            &curve_csv(curve),
        )?);
    }
    paths.push(write_artifact(
        dir,
        "ber_summary.txt",
        "ber",
        &config_digest(base),
        seed,
        &summary_text(out),
    )?);
    Ok(paths)
}
