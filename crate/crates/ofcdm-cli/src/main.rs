//! `ofcdm-sim`: experiment runner for the OFCDM probing-admission simulator.
//!
//! Subcommands: `ber`, `outage`, `trace`, `validate`. Runs are reproducible
//! from (config file, seed); outputs are byte-identical across reruns and
//! worker-pool sizes. Exit codes: 0 success, 1 validation failure, 2
//! configuration error.

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use ofcdm_cli::{ber, config_file, grid, outage, trace, validate, CliError, RunContext};

#[derive(Debug, Parser)]
#[command(name = "ofcdm-sim", version, about = "OFCDM probing-admission link simulator")]
struct Cli {
    /// Scenario file (flat key = value); defaults to the reference scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV, trace, and report files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Experiment size: frames per BER grid point, oracle samples for
    /// outage, frames for trace.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Grid spec `start:step:stop`: Eb/N0 in dB for ber, normalized
    /// thresholds for outage.
    #[arg(long, global = true)]
    grid: Option<String>,

    /// Worker pool size (default: one per CPU). Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// BER vs Eb/N0 curves: probing and baseline schedulers per spreading
    /// shape, plus the horizontal gain at a target BER.
    Ber {
        /// Spreading shapes to sweep, e.g. `16x4,8x8`.
        #[arg(long, default_value = "16x4,8x8")]
        csf: String,
        /// BER level at which the horizontal gain is reported.
        #[arg(long, default_value_t = 1e-2)]
        ber_target: f64,
    },
    /// Closed-form outage CDF against the brute-force oracle.
    Outage {
        /// Group sizes to sweep.
        #[arg(long, default_value = "8,16")]
        group_sizes: String,
        /// Rayleigh scales to sweep.
        #[arg(long, default_value = "0.5,1.0")]
        sigmas: String,
    },
    /// Frame-by-frame event trace with a post-hoc argmax/collision check.
    Trace,
    /// Full invariant and oracle battery; nonzero exit on any failure.
    Validate,
}

fn load_context(cli: &Cli) -> Result<RunContext, CliError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            config_file::parse_config(&text).map_err(CliError::Config)?
        }
        None => config_file::FileConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.system.master_seed = seed;
    }
    config
        .system
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(RunContext {
        config,
        out_dir: cli.out.clone(),
        workers: cli.workers,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = load_context(&cli)?;
    match &cli.command {
        Command::Ber { csf, ber_target } => {
            let shapes = grid::parse_spreading_shapes(csf).map_err(CliError::Config)?;
            let grid_db = grid::parse_grid(cli.grid.as_deref().unwrap_or(ber::DEFAULT_GRID))
                .map_err(CliError::Config)?;
            let exp = ber::BerExperiment {
                base: ctx.config.system.clone(),
                shapes,
                grid_db,
                frames_per_point: cli.trials.unwrap_or(ber::DEFAULT_FRAMES_PER_POINT),
                ber_target: *ber_target,
            };
            let out = ctx.with_pool(|| ber::run_ber(&exp))??;
            let paths = ber::write_outputs(&out, &exp.base, &ctx.out_dir)?;
            print!("{}", ber::summary_text(&out));
            for p in paths {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Outage {
            group_sizes,
            sigmas,
        } => {
            let group_sizes: Vec<u32> = grid::parse_list(group_sizes)
                .map_err(CliError::Config)?
                .into_iter()
                .map(|v| v as u32)
                .collect();
            let sigmas = grid::parse_list(sigmas).map_err(CliError::Config)?;
            let normalized_grid =
                grid::parse_grid(cli.grid.as_deref().unwrap_or(outage::DEFAULT_GRID))
                    .map_err(CliError::Config)?;
            let exp = outage::OutageExperiment {
                group_sizes,
                sigmas,
                normalized_grid,
                samples: cli.trials.unwrap_or(outage::DEFAULT_SAMPLES),
                seed: ctx.config.system.master_seed,
                custom_constants: ctx.config.outage_constants,
            };
            let curves = ctx.with_pool(|| outage::run_outage(&exp))??;
            let paths =
                outage::write_outputs(&curves, &ctx.config.system, exp.seed, &ctx.out_dir)?;
            print!("{}", outage::summary_text(&curves));
            for p in paths {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Trace => {
            let frames = cli.trials.unwrap_or(trace::DEFAULT_FRAMES);
            if frames == 0 {
                return Err(CliError::Config("--trials 0 would trace nothing".into()));
            }
            let (path, check) = trace::write_trace(&ctx.config.system, frames, &ctx.out_dir)?;
            println!(
                "trace check: frames={} active_frames={} grants={} argmax_violations={} \
                 probe_collisions={} grant_tone_collisions={}",
                check.frames,
                check.active_frames,
                check.grants,
                check.argmax_violations,
                check.probe_collisions,
                check.grant_tone_collisions
            );
            println!("wrote {}", path.display());
            if check.argmax_violations > 0
                || check.probe_collisions > 0
                || check.grant_tone_collisions > 0
            {
                return Err(CliError::Validation("trace replay found violations".into()));
            }
            Ok(())
        }
        Command::Validate => {
            let report = validate::run_validate(&ctx.config.system, &ctx.out_dir)?;
            print!("{report}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
