//! Flat key-value scenario files.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank lines
//! ignored. Keys mirror the scenario parameter names; unknown keys are
//! errors. Missing keys fall back to the reference scenario (see README).
//! The optional `outage_alpha0/1/2` triple supplies correction constants for
//! outage runs with group sizes outside the built-in table.

use ofcdm_core::SystemConfig;
use sha2::{Digest, Sha256};

/// Parsed scenario file: the system config plus optional outage constants.
#[derive(Debug, Clone)]
pub struct FileConfig {
    pub system: SystemConfig,
    pub outage_constants: Option<(f64, f64, f64)>,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            system: SystemConfig::reference(),
            outage_constants: None,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "total_subcarriers",
    "group_size",
    "group_count",
    "spacing",
    "time_spread",
    "max_users",
    "chip_energy",
    "noise_density",
    "rayleigh_scale",
    "burst_bits",
    "arrival_rate",
    "master_seed",
    "outage_alpha0",
    "outage_alpha1",
    "outage_alpha2",
];

/// Parses a scenario file, reporting every problem found.
pub fn parse_config(text: &str) -> Result<FileConfig, String> {
    let mut cfg = SystemConfig::reference();
    let mut errors: Vec<String> = Vec::new();
    let mut group_count_given = false;
    let mut spacing_given = false;
    let mut alphas: [Option<f64>; 3] = [None, None, None];

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {}: expected `key = value`", lineno + 1));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            errors.push(format!("line {}: unknown key `{key}`", lineno + 1));
            continue;
        }
        let mut parse_u32 = |field: &mut u32| match value.parse::<u32>() {
            Ok(v) => *field = v,
            Err(_) => errors.push(format!("line {}: `{key}` wants an unsigned integer", lineno + 1)),
        };
        match key {
            "total_subcarriers" => parse_u32(&mut cfg.total_subcarriers),
            "group_size" => parse_u32(&mut cfg.group_size),
            "group_count" => {
                parse_u32(&mut cfg.group_count);
                group_count_given = true;
            }
            "spacing" => {
                parse_u32(&mut cfg.spacing);
                spacing_given = true;
            }
            "time_spread" => parse_u32(&mut cfg.time_spread),
            "max_users" => parse_u32(&mut cfg.max_users),
            "burst_bits" => parse_u32(&mut cfg.burst_bits),
            "master_seed" => match value.parse::<u64>() {
                Ok(v) => cfg.master_seed = v,
                Err(_) => errors.push(format!(
                    "line {}: `master_seed` wants an unsigned integer",
                    lineno + 1
                )),
            },
            "chip_energy" | "noise_density" | "rayleigh_scale" | "arrival_rate"
            | "outage_alpha0" | "outage_alpha1" | "outage_alpha2" => {
                match value.parse::<f64>() {
                    Ok(v) => match key {
                        "chip_energy" => cfg.chip_energy = v,
                        "noise_density" => cfg.noise_density = v,
                        "rayleigh_scale" => cfg.rayleigh_scale = v,
                        "arrival_rate" => cfg.arrival_rate = v,
                        "outage_alpha0" => alphas[0] = Some(v),
                        "outage_alpha1" => alphas[1] = Some(v),
                        _ => alphas[2] = Some(v),
                    },
                    Err(_) => {
                        errors.push(format!("line {}: `{key}` wants a number", lineno + 1))
                    }
                }
            }
            _ => unreachable!("key list is exhaustive"),
        }
    }

    // derived fields follow the primary ones unless pinned explicitly
    if cfg.group_size != 0 && cfg.total_subcarriers % cfg.group_size == 0 {
        let derived = cfg.total_subcarriers / cfg.group_size;
        if !group_count_given {
            cfg.group_count = derived;
        }
        if !spacing_given {
            cfg.spacing = cfg.group_count;
        }
    }

    let outage_constants = match alphas {
        [None, None, None] => None,
        [Some(a0), Some(a1), Some(a2)] => Some((a0, a1, a2)),
        _ => {
            errors.push(
                "outage_alpha0, outage_alpha1, outage_alpha2 must be given together".into(),
            );
            None
        }
    };

    if !errors.is_empty() {
        return Err(errors.join("\n"));
    }
    Ok(FileConfig {
        system: cfg,
        outage_constants,
    })
}

/// Canonical serialization of the effective scenario, used for digests and
/// for documenting runs.
pub fn canonical_text(cfg: &SystemConfig) -> String {
    format!(
        "arrival_rate={}\nburst_bits={}\nchip_energy={}\ngroup_count={}\ngroup_size={}\n\
         master_seed={}\nmax_users={}\nnoise_density={}\nrayleigh_scale={}\nspacing={}\n\
         time_spread={}\ntotal_subcarriers={}\n",
        cfg.arrival_rate,
        cfg.burst_bits,
        cfg.chip_energy,
        cfg.group_count,
        cfg.group_size,
        cfg.master_seed,
        cfg.max_users,
        cfg.noise_density,
        cfg.rayleigh_scale,
        cfg.spacing,
        cfg.time_spread,
        cfg.total_subcarriers
    )
}

/// First 16 hex digits of the SHA-256 of the canonical scenario text.
pub fn config_digest(cfg: &SystemConfig) -> String {
    let hash = Sha256::digest(canonical_text(cfg).as_bytes());
    hash[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_reference_scenario() {
        let fc = parse_config("").unwrap();
        assert_eq!(fc.system, SystemConfig::reference());
        assert!(fc.outage_constants.is_none());
    }

    #[test]
    fn parses_full_scenario() {
        let text = "\
# scenario
total_subcarriers = 128
group_size = 8
time_spread = 8
max_users = 32
chip_energy = 1.0
noise_density = 0.5
rayleigh_scale = 0.7071067811865476
burst_bits = 100
arrival_rate = 0.05
master_seed = 99
";
        let fc = parse_config(text).unwrap();
        assert_eq!(fc.system.group_size, 8);
        assert_eq!(fc.system.group_count, 16);
        assert_eq!(fc.system.spacing, 16);
        assert_eq!(fc.system.master_seed, 99);
        assert!(fc.system.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = parse_config("grp_size = 8\n").unwrap_err();
        assert!(err.contains("unknown key `grp_size`"), "{err}");
    }

    #[test]
    fn all_errors_are_reported() {
        let err = parse_config("bogus = 1\ngroup_size = x\n").unwrap_err();
        assert!(err.contains("bogus"));
        assert!(err.contains("group_size"));
    }

    #[test]
    fn outage_constants_come_as_a_triple() {
        let err = parse_config("outage_alpha0 = 0.01\n").unwrap_err();
        assert!(err.contains("together"));
        let ok =
            parse_config("outage_alpha0 = 0.01\noutage_alpha1 = 0.1\noutage_alpha2 = 0.9\n")
                .unwrap();
        assert_eq!(ok.outage_constants, Some((0.01, 0.1, 0.9)));
    }

    #[test]
    fn digest_tracks_every_field() {
        let a = SystemConfig::reference();
        let mut b = a.clone();
        b.master_seed += 1;
        assert_ne!(config_digest(&a), config_digest(&b));
        assert_eq!(config_digest(&a), config_digest(&a.clone()));
        assert_eq!(config_digest(&a).len(), 16);
    }
}
