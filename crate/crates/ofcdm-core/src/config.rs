//! Scenario configuration and validation.

use alloc::vec::Vec;

/// All parameters of one simulated scenario.
///
/// Counts are in chips and frames; energies are dimensionless per-chip scales.
/// The nominal system bandwidth (20 MHz in the reference scenario) never
/// enters any computation: a frame is indexed as `total_subcarriers` rows by
/// `time_spread` chip columns and time is counted in frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Total number of subcarriers `M` in one OFCDM frame.
    pub total_subcarriers: u32,
    /// Subcarriers per group `M_y` (frequency-domain spreading length).
    pub group_size: u32,
    /// Number of groups `Y`; must equal `M / M_y`.
    pub group_count: u32,
    /// Subcarrier spacing between consecutive members of a group; equals `Y`
    /// under the interleaved grouping convention.
    pub spacing: u32,
    /// Chips per frame `N` (time-domain spreading length).
    pub time_spread: u32,
    /// Maximum number of users the receiver serves.
    pub max_users: u32,
    /// Energy per chip.
    pub chip_energy: f64,
    /// One-sided noise power density per chip.
    pub noise_density: f64,
    /// Rayleigh fading scale; mean-square gain is `2 * sigma^2`.
    pub rayleigh_scale: f64,
    /// Bits per burst (one bit per data frame).
    pub burst_bits: u32,
    /// Poisson burst arrival rate per user per frame.
    pub arrival_rate: f64,
    /// Master seed; every random stream in a run derives from it.
    pub master_seed: u64,
}

/// A single named configuration violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigViolation {
    /// `group_size` does not divide `total_subcarriers`.
    GroupSizeDoesNotDivideTotal,
    /// `group_count` differs from `total_subcarriers / group_size`.
    GroupCountMismatch,
    /// `spacing` differs from `group_count`.
    SpacingMismatch,
    /// More users than distinct probe identifier cells (`max_users > Y * N`).
    TooManyUsersForIdentifiers,
    /// `chip_energy <= 0`.
    ChipEnergyNotPositive,
    /// `noise_density < 0` or not finite.
    NoiseDensityNegative,
    /// `rayleigh_scale <= 0` or not finite.
    RayleighScaleNotPositive,
    /// `time_spread == 0`.
    TimeSpreadZero,
    /// `group_size == 0`.
    GroupSizeZero,
    /// `total_subcarriers == 0`.
    NoSubcarriers,
    /// `burst_bits == 0`.
    BurstBitsZero,
    /// `arrival_rate < 0` or not finite.
    ArrivalRateNegative,
}

impl core::fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let msg = match self {
            ConfigViolation::GroupSizeDoesNotDivideTotal => {
                "group_size must divide total_subcarriers"
            }
            ConfigViolation::GroupCountMismatch => {
                "group_count must equal total_subcarriers / group_size"
            }
            ConfigViolation::SpacingMismatch => "spacing must equal group_count",
            ConfigViolation::TooManyUsersForIdentifiers => {
                "max_users exceeds group_count * time_spread identifier cells"
            }
            ConfigViolation::ChipEnergyNotPositive => "chip_energy must be > 0",
            ConfigViolation::NoiseDensityNegative => "noise_density must be >= 0",
            ConfigViolation::RayleighScaleNotPositive => "rayleigh_scale must be > 0",
            ConfigViolation::TimeSpreadZero => "time_spread must be >= 1",
            ConfigViolation::GroupSizeZero => "group_size must be >= 1",
            ConfigViolation::NoSubcarriers => "total_subcarriers must be >= 1",
            ConfigViolation::BurstBitsZero => "burst_bits must be >= 1",
            ConfigViolation::ArrivalRateNegative => "arrival_rate must be >= 0",
        };
        f.write_str(msg)
    }
}

/// Validation failure carrying every violation found, not just the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<ConfigViolation>,
}

impl core::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "invalid configuration ({} violations):", self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ConfigError {}

impl SystemConfig {
    /// Reference uplink scenario: 128 subcarriers, 16x4 spreading, 32 users.
    pub fn reference() -> Self {
        Self::with_spreading(128, 16, 4, 32)
    }

    /// Builds a config with derived `group_count`/`spacing` and neutral
    /// energy/noise defaults (`chip_energy = 1`, unit mean-square fading).
    pub fn with_spreading(
        total_subcarriers: u32,
        group_size: u32,
        time_spread: u32,
        max_users: u32,
    ) -> Self {
        let group_count = if group_size == 0 {
            0
        } else {
            total_subcarriers / group_size
        };
        SystemConfig {
            total_subcarriers,
            group_size,
            group_count,
            spacing: group_count,
            time_spread,
            max_users,
            chip_energy: 1.0,
            noise_density: 1.0,
            rayleigh_scale: core::f64::consts::FRAC_1_SQRT_2,
            burst_bits: 1000,
            arrival_rate: 0.02,
            master_seed: 1,
        }
    }

    /// Mean energy per bit: `chip_energy * M_y * N * E[gain^2]`.
    pub fn energy_per_bit(&self) -> f64 {
        self.chip_energy
            * self.group_size as f64
            * self.time_spread as f64
            * 2.0
            * self.rayleigh_scale
            * self.rayleigh_scale
    }

    /// Noise density realizing a target Eb/N0 (in dB) for this scenario.
    pub fn noise_density_for_ebn0_db(&self, ebn0_db: f64) -> f64 {
        self.energy_per_bit() / libm::pow(10.0, ebn0_db / 10.0)
    }

    /// Checks every invariant; returns the full violation list on failure.
    ///
    /// Validation is idempotent: validating a valid config changes nothing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut violations = Vec::new();
        if self.total_subcarriers == 0 {
            violations.push(ConfigViolation::NoSubcarriers);
        }
        if self.group_size == 0 {
            violations.push(ConfigViolation::GroupSizeZero);
        }
        if self.time_spread == 0 {
            violations.push(ConfigViolation::TimeSpreadZero);
        }
        if self.group_size != 0 && self.total_subcarriers % self.group_size != 0 {
            violations.push(ConfigViolation::GroupSizeDoesNotDivideTotal);
        }
        if self.group_size != 0
            && self.total_subcarriers % self.group_size == 0
            && self.group_count != self.total_subcarriers / self.group_size
        {
            violations.push(ConfigViolation::GroupCountMismatch);
        }
        if self.spacing != self.group_count {
            violations.push(ConfigViolation::SpacingMismatch);
        }
        if self.max_users as u64 > self.group_count as u64 * self.time_spread as u64 {
            violations.push(ConfigViolation::TooManyUsersForIdentifiers);
        }
        if !(self.chip_energy > 0.0) || !self.chip_energy.is_finite() {
            violations.push(ConfigViolation::ChipEnergyNotPositive);
        }
        if !(self.noise_density >= 0.0) || !self.noise_density.is_finite() {
            violations.push(ConfigViolation::NoiseDensityNegative);
        }
        if !(self.rayleigh_scale > 0.0) || !self.rayleigh_scale.is_finite() {
            violations.push(ConfigViolation::RayleighScaleNotPositive);
        }
        if self.burst_bits == 0 {
            violations.push(ConfigViolation::BurstBitsZero);
        }
        if !(self.arrival_rate >= 0.0) || !self.arrival_rate.is_finite() {
            violations.push(ConfigViolation::ArrivalRateNegative);
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations })
        }
    }

    /// Validating consumer-style helper: returns the config back untouched.
    pub fn validated(self) -> Result<Self, ConfigError> {
        self.validate()?;
        Ok(self)
    }
}
