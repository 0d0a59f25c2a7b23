//! Spreading codes, frame composition, despreading, and the power/SINR chain.
//!
//! The air interface is modeled at complex baseband with one sample per
//! (subcarrier, chip) cell; carrier terms are carried as phasors `e^{j*phi}`.
//! A data user writes `sqrt(ec) * b * cF_m * cT_n * gain_m * e^{j*phi_m}` into
//! every cell of its group; a probing user writes a code-less tone into one
//! chip column of its identifier row. The receiver derotates by the reference
//! user's phase and combines chips weighted by the reference gains
//! (maximal-ratio combining), which is what the analytic power expressions
//! below describe.
//!
//! Power bookkeeping is on the complex correlation: desired power
//! `N^2 ec (sum gain^2)^2`, noise power `N No sum gain^2`, and the
//! central-limit interference approximation. BPSK detection takes the real
//! part, whose noise carries half the complex power, giving the familiar
//! `Q(sqrt(2 gamma))` error rate.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::grouping::{ProbeIdentifier, SubcarrierGroup};
use crate::rng::{Domain, Stream};

/// A user's 2D spreading code for one frame: `M_y` frequency chips by `N`
/// time chips, all in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadingCode {
    pub freq_chips: Vec<i8>,
    pub time_chips: Vec<i8>,
}

/// Bookkeeping marker for a probing tone at `(group_row, chip_column)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeMarker {
    pub group_row: u32,
    pub chip_column: u32,
    pub user: u32,
}

/// Sparse cell writes of one transmission, plus an optional probe marker.
#[derive(Debug, Clone)]
pub struct FrameContribution {
    /// `(subcarrier, chip, amplitude)`, indices 1-based.
    pub cells: Vec<(u32, u32, Complex64)>,
    pub probe: Option<ProbeMarker>,
}

/// The received frame: `M x N` complex samples plus probe bookkeeping.
#[derive(Debug, Clone)]
pub struct FrameGrid {
    pub total_subcarriers: u32,
    pub time_spread: u32,
    /// Row-major: cell `(m, n)` (1-based) is `samples[(m-1) * N + (n-1)]`.
    pub samples: Vec<Complex64>,
    pub probe_map: Vec<ProbeMarker>,
}

impl FrameGrid {
    #[inline]
    pub fn cell(&self, subcarrier: u32, chip: u32) -> Complex64 {
        self.samples[((subcarrier - 1) * self.time_spread + (chip - 1)) as usize]
    }
}

/// Despreading result for one user.
#[derive(Debug, Clone, Copy)]
pub struct DespreadOutput {
    /// Complex correlation before detection (carries full signal power).
    pub correlation: Complex64,
    /// Real decision statistic.
    pub statistic: f64,
    /// Detected BPSK bit; a zero statistic resolves to `+1`.
    pub bit: i8,
}

/// Power components and the resulting SINR for one user on one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub desired: f64,
    pub interference: f64,
    pub noise: f64,
    pub sinr: f64,
}

impl PowerBreakdown {
    pub fn new(desired: f64, interference: f64, noise: f64) -> Self {
        let denom = interference + noise;
        let sinr = if denom > 0.0 {
            desired / denom
        } else {
            f64::INFINITY
        };
        PowerBreakdown {
            desired,
            interference,
            noise,
            sinr,
        }
    }
}

/// PHY-layer errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhyError {
    /// Data bit outside `{-1, +1}`.
    InvalidBit(i8),
    /// Code length does not match the group size / time spread.
    CodeLengthMismatch {
        freq_len: usize,
        time_len: usize,
        group_size: usize,
        time_spread: u32,
    },
    /// Channel slices not aligned with the group.
    ChannelLengthMismatch { got: usize, expected: usize },
    /// A cell write lands outside the frame dimensions.
    CellOutOfRange { subcarrier: u32, chip: u32 },
    /// Identifier does not belong to the transmitting user.
    ForeignIdentifier { user: u32, owner: u32 },
    /// Two probing tones landed on the same cell.
    ProbeCollision { group_row: u32, chip_column: u32 },
    /// Noise grid dimensions disagree with the frame dimensions.
    NoiseDimensionMismatch { got: usize, expected: usize },
    /// Walsh time codes need a power-of-two spreading length.
    TimeSpreadNotPowerOfTwo(u32),
}

impl core::fmt::Display for PhyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PhyError::InvalidBit(b) => write!(f, "BPSK bit must be +1 or -1, got {b}"),
            PhyError::CodeLengthMismatch {
                freq_len,
                time_len,
                group_size,
                time_spread,
            } => write!(
                f,
                "code is {freq_len}x{time_len} but the plan needs {group_size}x{time_spread}"
            ),
            PhyError::ChannelLengthMismatch { got, expected } => {
                write!(f, "channel slice has {got} entries, group needs {expected}")
            }
            PhyError::CellOutOfRange { subcarrier, chip } => {
                write!(f, "cell ({subcarrier}, {chip}) outside the frame")
            }
            PhyError::ForeignIdentifier { user, owner } => {
                write!(f, "user {user} transmitted on identifier owned by user {owner}")
            }
            PhyError::ProbeCollision {
                group_row,
                chip_column,
            } => write!(f, "probe collision at ({group_row}, {chip_column})"),
            PhyError::NoiseDimensionMismatch { got, expected } => {
                write!(f, "noise grid has {got} cells, frame needs {expected}")
            }
            PhyError::TimeSpreadNotPowerOfTwo(n) => {
                write!(f, "orthogonal time codes need a power-of-two length, got {n}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PhyError {}

/// Fresh i.i.d. equiprobable `+1/-1` chips keyed by
/// `(master_seed, user, frame)`; the same key always yields the same code.
pub fn generate_pn_code(
    user: u32,
    frame_index: u64,
    group_size: u32,
    time_spread: u32,
    master_seed: u64,
) -> SpreadingCode {
    let mut stream = Stream::derived(master_seed, Domain::Code, &[frame_index, user as u64]);
    SpreadingCode {
        freq_chips: (0..group_size).map(|_| stream.chip()).collect(),
        time_chips: (0..time_spread).map(|_| stream.chip()).collect(),
    }
}

/// Row `(user - 1) mod N` of the order-`N` Hadamard matrix, as a time code.
///
/// Only used by tests that want exact multiuser orthogonality; experiments
/// always run with pseudonoise codes.
pub fn walsh_time_code(user: u32, time_spread: u32) -> Result<Vec<i8>, PhyError> {
    if time_spread == 0 || !time_spread.is_power_of_two() {
        return Err(PhyError::TimeSpreadNotPowerOfTwo(time_spread));
    }
    let row = (user - 1) % time_spread;
    Ok((0..time_spread)
        .map(|col| {
            if (row & col).count_ones() % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// Spreads one BPSK bit over the user's group for a whole frame.
///
/// `gains`/`phases` are the user's channel over `group.members`, in member
/// order. Cell `(m, n)` receives
/// `sqrt(chip_energy) * bit * cF_m * cT_n * gain_m * e^{j*phase_m}`.
pub fn spread_bit(
    bit: i8,
    code: &SpreadingCode,
    gains: &[f64],
    phases: &[f64],
    group: &SubcarrierGroup,
    chip_energy: f64,
) -> Result<FrameContribution, PhyError> {
    if bit != 1 && bit != -1 {
        return Err(PhyError::InvalidBit(bit));
    }
    let group_size = group.members.len();
    if code.freq_chips.len() != group_size || code.time_chips.is_empty() {
        return Err(PhyError::CodeLengthMismatch {
            freq_len: code.freq_chips.len(),
            time_len: code.time_chips.len(),
            group_size,
            time_spread: code.time_chips.len() as u32,
        });
    }
    if gains.len() != group_size || phases.len() != group_size {
        return Err(PhyError::ChannelLengthMismatch {
            got: gains.len().min(phases.len()),
            expected: group_size,
        });
    }
    let amp = libm::sqrt(chip_energy) * bit as f64;
    let mut cells = Vec::with_capacity(group_size * code.time_chips.len());
    for (i, &m) in group.members.iter().enumerate() {
        let phasor = Complex64::new(libm::cos(phases[i]), libm::sin(phases[i]));
        let base = phasor * (amp * gains[i] * code.freq_chips[i] as f64);
        for (n0, &ct) in code.time_chips.iter().enumerate() {
            cells.push((m, n0 as u32 + 1, base * ct as f64));
        }
    }
    Ok(FrameContribution { cells, probe: None })
}

/// Places a probing tone on the user's identifier cell: every member of the
/// identifier's group row, one chip column wide.
pub fn place_probe(
    user: u32,
    identifier: &ProbeIdentifier,
    gains: &[f64],
    phases: &[f64],
    group: &SubcarrierGroup,
    chip_energy: f64,
) -> Result<FrameContribution, PhyError> {
    if identifier.user != user {
        return Err(PhyError::ForeignIdentifier {
            user,
            owner: identifier.user,
        });
    }
    let group_size = group.members.len();
    if gains.len() != group_size || phases.len() != group_size {
        return Err(PhyError::ChannelLengthMismatch {
            got: gains.len().min(phases.len()),
            expected: group_size,
        });
    }
    let amp = libm::sqrt(chip_energy);
    let cells = group
        .members
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let phasor = Complex64::new(libm::cos(phases[i]), libm::sin(phases[i]));
            (m, identifier.chip_column, phasor * (amp * gains[i]))
        })
        .collect();
    Ok(FrameContribution {
        cells,
        probe: Some(ProbeMarker {
            group_row: identifier.group_row,
            chip_column: identifier.chip_column,
            user,
        }),
    })
}

/// Sums data and probing contributions cellwise, adds noise, and collects the
/// probe map. Distinct probes on the same cell are impossible under injective
/// identifiers and are reported as an internal error.
pub fn compose_frame(
    data: &[FrameContribution],
    probes: &[FrameContribution],
    noise: Option<&[Complex64]>,
    total_subcarriers: u32,
    time_spread: u32,
) -> Result<FrameGrid, PhyError> {
    let cells = total_subcarriers as usize * time_spread as usize;
    let mut samples = match noise {
        Some(grid) => {
            if grid.len() != cells {
                return Err(PhyError::NoiseDimensionMismatch {
                    got: grid.len(),
                    expected: cells,
                });
            }
            grid.to_vec()
        }
        None => vec![Complex64::new(0.0, 0.0); cells],
    };
    let mut probe_map: Vec<ProbeMarker> = Vec::new();
    for contrib in data.iter().chain(probes.iter()) {
        for &(m, n, z) in &contrib.cells {
            if m == 0 || m > total_subcarriers || n == 0 || n > time_spread {
                return Err(PhyError::CellOutOfRange {
                    subcarrier: m,
                    chip: n,
                });
            }
            samples[((m - 1) * time_spread + (n - 1)) as usize] += z;
        }
        if let Some(marker) = contrib.probe {
            if probe_map.iter().any(|p| {
                p.group_row == marker.group_row && p.chip_column == marker.chip_column
            }) {
                return Err(PhyError::ProbeCollision {
                    group_row: marker.group_row,
                    chip_column: marker.chip_column,
                });
            }
            probe_map.push(marker);
        }
    }
    Ok(FrameGrid {
        total_subcarriers,
        time_spread,
        samples,
        probe_map,
    })
}

/// Coherent despreading of one user: derotate each cell by the user's phase,
/// weight by its gain and code chips, and sum over the group and the frame.
pub fn despread(
    frame: &FrameGrid,
    code: &SpreadingCode,
    gains: &[f64],
    phases: &[f64],
    group: &SubcarrierGroup,
) -> Result<DespreadOutput, PhyError> {
    let group_size = group.members.len();
    if code.freq_chips.len() != group_size {
        return Err(PhyError::CodeLengthMismatch {
            freq_len: code.freq_chips.len(),
            time_len: code.time_chips.len(),
            group_size,
            time_spread: frame.time_spread,
        });
    }
    if gains.len() != group_size || phases.len() != group_size {
        return Err(PhyError::ChannelLengthMismatch {
            got: gains.len().min(phases.len()),
            expected: group_size,
        });
    }
    if code.time_chips.len() != frame.time_spread as usize {
        return Err(PhyError::CodeLengthMismatch {
            freq_len: code.freq_chips.len(),
            time_len: code.time_chips.len(),
            group_size,
            time_spread: frame.time_spread,
        });
    }
    let mut corr = Complex64::new(0.0, 0.0);
    for (i, &m) in group.members.iter().enumerate() {
        let derotate = Complex64::new(libm::cos(phases[i]), -libm::sin(phases[i]));
        let weight = gains[i] * code.freq_chips[i] as f64;
        let row = ((m - 1) * frame.time_spread) as usize;
        let mut row_sum = Complex64::new(0.0, 0.0);
        for (n0, &ct) in code.time_chips.iter().enumerate() {
            row_sum += frame.samples[row + n0] * ct as f64;
        }
        corr += derotate * row_sum * weight;
    }
    let statistic = corr.re;
    Ok(DespreadOutput {
        correlation: corr,
        statistic,
        bit: if statistic >= 0.0 { 1 } else { -1 },
    })
}

#[inline]
fn sum_sq(gains: &[f64]) -> f64 {
    gains.iter().map(|g| g * g).sum()
}

/// Desired-signal power of the despread correlation:
/// `N^2 * chip_energy * (sum gain^2)^2`.
pub fn desired_power(gains: &[f64], time_spread: u32, chip_energy: f64) -> f64 {
    let a = sum_sq(gains);
    (time_spread as f64) * (time_spread as f64) * chip_energy * a * a
}

/// Noise power of the despread correlation: `N * No * sum gain^2`.
pub fn noise_power(gains: &[f64], time_spread: u32, noise_density: f64) -> f64 {
    time_spread as f64 * noise_density * sum_sq(gains)
}

/// Gaussian-approximated multiple-access interference power: same-group data
/// users contribute a full frame of chips each, probing tones one column.
///
/// `data_users_in_group` counts the reference user itself, so a lone user sees
/// zero interference.
pub fn interference_power(
    gains: &[f64],
    time_spread: u32,
    chip_energy: f64,
    data_users_in_group: u32,
    probe_tones: u32,
    mean_square_fading: f64,
) -> f64 {
    debug_assert!(data_users_in_group >= 1, "reference user must be counted");
    let interferers = data_users_in_group.saturating_sub(1) as f64;
    sum_sq(gains)
        * (time_spread as f64 * chip_energy * interferers * mean_square_fading
            + probe_tones as f64 * chip_energy * mean_square_fading)
}

/// SINR of an active data user on its group.
///
/// A zero denominator (lone user, no probes, no noise) is reported as
/// `f64::INFINITY` so noiseless sweeps stay total.
pub fn sinr_data_user(
    gains: &[f64],
    time_spread: u32,
    chip_energy: f64,
    data_users_in_group: u32,
    probe_tones: u32,
    mean_square_fading: f64,
    noise_density: f64,
) -> f64 {
    let desired = desired_power(gains, time_spread, chip_energy);
    let interference = interference_power(
        gains,
        time_spread,
        chip_energy,
        data_users_in_group,
        probe_tones,
        mean_square_fading,
    );
    let noise = noise_power(gains, time_spread, noise_density);
    PowerBreakdown::new(desired, interference, noise).sinr
}

/// Prospective SINR of a probing candidate on a group it would join.
///
/// Every current data user of the group would interfere (factor `K_y`, not
/// `K_y - 1`), and the candidate's own probing tone is excluded from the
/// probe tally.
pub fn sinr_probe_user(
    gains: &[f64],
    time_spread: u32,
    chip_energy: f64,
    data_users_in_group: u32,
    other_probe_tones: u32,
    mean_square_fading: f64,
    noise_density: f64,
) -> f64 {
    let desired = desired_power(gains, time_spread, chip_energy);
    let interference = sum_sq(gains)
        * (time_spread as f64 * chip_energy * data_users_in_group as f64 * mean_square_fading
            + other_probe_tones as f64 * chip_energy * mean_square_fading);
    let noise = noise_power(gains, time_spread, noise_density);
    PowerBreakdown::new(desired, interference, noise).sinr
}
