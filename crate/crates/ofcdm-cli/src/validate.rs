//! The `validate` subcommand: a self-contained check battery over the whole
//! stack, reporting every check even after failures.

use std::fmt::Write as _;
use std::path::Path;

use ofcdm_core::metrics::{
    ber_monte_carlo, double_factorial_odd, outage_cdf_oracle, psi, table1_constants,
};
use ofcdm_core::protocol::SimMode;
use ofcdm_core::SystemConfig;

use crate::checks;
use crate::config_file::config_digest;
use crate::output::write_artifact;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

/// Runs the full battery with the config's master seed. Never short-circuits:
/// the report always lists every check.
pub fn run_all_checks(cfg: &SystemConfig) -> Vec<CheckResult> {
    let seed = cfg.master_seed;
    let mut results = Vec::new();

    let q_err = checks::q_function_max_abs_error(100);
    results.push(check(
        "q_function_accuracy",
        q_err <= 1e-7,
        format!("max abs error {q_err:.3e} (limit 1e-7)"),
    ));

    let df = double_factorial_odd(8);
    let psi81 = psi(8, 1.0);
    let t8 = table1_constants(8);
    let t16 = table1_constants(16);
    let kernels_ok = df == Ok(2_027_025)
        && matches!(psi81, Ok(v) if (v - 0.76780).abs() <= 1e-4)
        && t8 == Ok((0.0257, 0.1172, 0.9491))
        && t16 == Ok((0.0291, 0.0133, 0.9338));
    results.push(check(
        "numeric_kernels_exact",
        kernels_ok,
        format!("(2*8-1)!!={df:?}, psi(8,1)={psi81:?}"),
    ));

    let desired = checks::desired_power_check(20_000, seed ^ 0xD);
    results.push(check(
        "desired_power_match",
        desired.rel_error() <= 0.01,
        format!(
            "empirical {:.4} vs {:.4} (rel {:.4}, limit 1%)",
            desired.empirical,
            desired.predicted,
            desired.rel_error()
        ),
    ));

    let noise = checks::noise_power_check(20_000, seed ^ 0xA);
    results.push(check(
        "noise_power_match",
        noise.rel_error() <= 0.02,
        format!(
            "empirical {:.4} vs {:.4} (rel {:.4}, limit 2%)",
            noise.empirical,
            noise.predicted,
            noise.rel_error()
        ),
    ));

    let mai = checks::interference_power_check(24, 2_000, seed ^ 0xB);
    results.push(check(
        "interference_power_match",
        mai.rel_error() <= 0.15,
        format!(
            "aggregate {:.3} vs {:.3} (rel {:.4}, limit 15%)",
            mai.empirical,
            mai.predicted,
            mai.rel_error()
        ),
    ));

    let ber = checks::conditional_ber_check(40_000, seed ^ 0xC);
    results.push(check(
        "conditional_ber_gaussian",
        ber.inside_interval(),
        format!(
            "ber {:.5} vs predicted {:.5} +/- {:.5} over {} frames",
            ber.ber, ber.predicted, ber.ci99_half_width, ber.frames
        ),
    ));

    let battery = checks::protocol_invariant_battery(200, 40, seed ^ 0xE);
    results.push(check(
        "probe_grant_collision_freedom",
        battery.probe_collisions == 0 && battery.grant_tone_collisions == 0,
        format!(
            "{} scenarios, {} frames, probe collisions {}, grant collisions {}",
            battery.scenarios, battery.frames, battery.probe_collisions,
            battery.grant_tone_collisions
        ),
    ));
    results.push(check(
        "grant_argmax_optimality",
        battery.argmax_violations == 0,
        format!(
            "{} grants checked, {} violations",
            battery.grants_checked, battery.argmax_violations
        ),
    ));
    results.push(check(
        "burst_lifecycle_accounting",
        battery.burst_span_mismatches == 0 && battery.occupancy_mismatches == 0,
        format!(
            "{} bursts checked, {} span mismatches, {} occupancy mismatches",
            battery.bursts_checked, battery.burst_span_mismatches,
            battery.occupancy_mismatches
        ),
    ));

    let gap = checks::outage_sup_gap(8, 1.0, 1_000_000, 129, seed ^ 0xF);
    results.push(check(
        "outage_approximation_accuracy",
        gap <= 0.02,
        format!("sup gap {gap:.5} (limit 0.02)"),
    ));

    let grid: Vec<f64> = (0..65).map(|i| i as f64 * 0.5).collect();
    let oracle = outage_cdf_oracle(&grid, 8, 1.0, 50_000, seed ^ 0x10).unwrap();
    results.push(check(
        "oracle_cdf_monotone",
        oracle.windows(2).all(|w| w[1] >= w[0]),
        "empirical CDF nondecreasing over 65 thresholds".to_string(),
    ));

    let mut mini = SystemConfig::with_spreading(16, 4, 2, 4);
    mini.burst_bits = 4;
    mini.arrival_rate = 0.3;
    mini.master_seed = seed;
    let a = ber_monte_carlo(&mini, SimMode::Probing, &[4.0, 8.0], 200);
    let b = ber_monte_carlo(&mini, SimMode::Probing, &[4.0, 8.0], 200);
    results.push(check(
        "determinism_rerun",
        a.is_ok() && a == b,
        "two identical mini runs produced identical curves".to_string(),
    ));

    results
}

/// Renders the report table.
pub fn report_text(results: &[CheckResult]) -> String {
    let mut text = String::new();
    for r in results {
        let _ = writeln!(
            text,
            "{} {:34} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let _ = writeln!(text, "{} checks, {} failed", results.len(), failed);
    text
}

/// Runs the battery, writes the report, prints it, and fails with exit code 1
/// when any check failed.
pub fn run_validate(cfg: &SystemConfig, dir: &Path) -> Result<String, CliError> {
    let results = run_all_checks(cfg);
    let text = report_text(&results);
    write_artifact(
        dir,
        "validate_report.txt",
        "validate",
        &config_digest(cfg),
        cfg.master_seed,
        &text,
    )?;
    if results.iter().any(|r| !r.passed) {
        Err(CliError::Validation(text))
    } else {
        Ok(text)
    }
}
