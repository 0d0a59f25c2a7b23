//! BER estimation and outage-probability analysis.
//!
//! BER comes from two routes: error counting over full protocol/PHY Monte
//! Carlo runs ([`ber_monte_carlo`]), and the semi-analytic BPSK map
//! `Pe = Q(sqrt(2 * mean_sinr))` ([`ber_semi_analytic`]).
//!
//! Outage probability is the CDF of the post-combining signal amplitude,
//! which for an `M_y`-subcarrier group is governed by a sum of `M_y` i.i.d.
//! Rayleigh variables. [`outage_cdf_approx`] evaluates a closed-form
//! approximation of that sum's CDF (a gamma-family leading term plus a fitted
//! single-bump correction); [`outage_cdf_oracle`] estimates the same CDF by
//! brute-force sampling so the approximation can be checked against it.

use alloc::vec;
use alloc::vec::Vec;

use crate::config::SystemConfig;
use crate::protocol::{ProtocolError, SimMode, Simulation};
use crate::rng::{derive_key, Domain, Stream};

/// Metrics-layer errors.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    /// Mean SINR must be nonnegative.
    NegativeMeanSinr(f64),
    /// An aggregate over an empty series was requested.
    EmptySeries,
    /// Group size must be at least 1.
    GroupSizeZero,
    /// The odd double factorial exceeds 128-bit integer range.
    DoubleFactorialOverflow(u32),
    /// No fitted correction constants for this group size.
    UnsupportedGroupSize { got: u32, supported: [u32; 2] },
    /// Rayleigh scale must be positive.
    SigmaNotPositive(f64),
    /// Outage thresholds must be nonnegative.
    NegativeThreshold(f64),
    /// The oracle needs enough samples to be meaningful.
    TooFewSamples { got: u64, min: u64 },
    /// BER grids must be strictly increasing and nonempty.
    InvalidGrid(&'static str),
    /// At least one frame per grid point is required.
    ZeroFrames,
    /// The underlying simulation failed.
    Protocol(ProtocolError),
}

impl core::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MetricsError::NegativeMeanSinr(g) => write!(f, "mean SINR must be >= 0, got {g}"),
            MetricsError::EmptySeries => write!(f, "empty series"),
            MetricsError::GroupSizeZero => write!(f, "group size must be >= 1"),
            MetricsError::DoubleFactorialOverflow(n) => {
                write!(f, "(2*{n}-1)!! exceeds 128-bit range")
            }
            MetricsError::UnsupportedGroupSize { got, supported } => write!(
                f,
                "no fitted constants for group size {got}; supported sizes: {} and {}",
                supported[0], supported[1]
            ),
            MetricsError::SigmaNotPositive(s) => write!(f, "sigma must be > 0, got {s}"),
            MetricsError::NegativeThreshold(t) => write!(f, "threshold must be >= 0, got {t}"),
            MetricsError::TooFewSamples { got, min } => {
                write!(f, "oracle needs at least {min} samples, got {got}")
            }
            MetricsError::InvalidGrid(why) => write!(f, "invalid grid: {why}"),
            MetricsError::ZeroFrames => write!(f, "at least one frame per grid point is required"),
            MetricsError::Protocol(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MetricsError {}

impl From<ProtocolError> for MetricsError {
    fn from(e: ProtocolError) -> Self {
        MetricsError::Protocol(e)
    }
}

/// Standard normal tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// BPSK error probability at a given mean SINR: `Q(sqrt(2 * mean_sinr))`.
///
/// An infinite SINR maps to zero error probability.
pub fn ber_semi_analytic(mean_sinr: f64) -> Result<f64, MetricsError> {
    if mean_sinr.is_nan() || mean_sinr < 0.0 {
        return Err(MetricsError::NegativeMeanSinr(mean_sinr));
    }
    if mean_sinr.is_infinite() {
        return Ok(0.0);
    }
    Ok(q_function(libm::sqrt(2.0 * mean_sinr)))
}

/// Exact odd double factorial `(2n-1)!! = (2n-1)(2n-3)...3*1`.
pub fn double_factorial_odd(group_size: u32) -> Result<u128, MetricsError> {
    if group_size == 0 {
        return Err(MetricsError::GroupSizeZero);
    }
    let mut acc: u128 = 1;
    let mut k = 2 * group_size as u128 - 1;
    while k > 1 {
        acc = acc
            .checked_mul(k)
            .ok_or(MetricsError::DoubleFactorialOverflow(group_size))?;
        k -= 2;
    }
    Ok(acc)
}

/// The scale constant quoted with the approximation:
/// `psi = (sigma / M_y) * ((2*M_y - 1)!!)^(1/M_y)`.
pub fn psi(group_size: u32, sigma: f64) -> Result<f64, MetricsError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(MetricsError::SigmaNotPositive(sigma));
    }
    let df = double_factorial_odd(group_size)? as f64;
    Ok(sigma / group_size as f64 * libm::pow(df, 1.0 / group_size as f64))
}

/// Fitted correction constants `(alpha0, alpha1, alpha2)` for the supported
/// group sizes.
pub fn table1_constants(group_size: u32) -> Result<(f64, f64, f64), MetricsError> {
    match group_size {
        8 => Ok((0.0257, 0.1172, 0.9491)),
        16 => Ok((0.0291, 0.0133, 0.9338)),
        other => Err(MetricsError::UnsupportedGroupSize {
            got: other,
            supported: [8, 16],
        }),
    }
}

/// Parameters of the closed-form outage CDF approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageParams {
    pub group_size: u32,
    pub sigma: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Quoted scale constant, see [`psi`].
    pub psi: f64,
}

impl OutageParams {
    /// Parameters with the built-in constants for group sizes 8 and 16.
    pub fn from_table(group_size: u32, sigma: f64) -> Result<Self, MetricsError> {
        let (alpha0, alpha1, alpha2) = table1_constants(group_size)?;
        Self::with_constants(group_size, sigma, alpha0, alpha1, alpha2)
    }

    /// Parameters with caller-supplied correction constants (for group sizes
    /// outside the built-in table).
    pub fn with_constants(
        group_size: u32,
        sigma: f64,
        alpha0: f64,
        alpha1: f64,
        alpha2: f64,
    ) -> Result<Self, MetricsError> {
        let psi = psi(group_size, sigma)?;
        Ok(OutageParams {
            group_size,
            sigma,
            alpha0,
            alpha1,
            alpha2,
            psi,
        })
    }

    /// Scale of the sum's distribution in threshold-normalized units:
    /// `((2*M_y - 1)!!)^(1/M_y)`, i.e. `M_y * psi / sigma`.
    fn unit_scale(&self) -> f64 {
        self.group_size as f64 * self.psi / self.sigma
    }

    /// Mean of the underlying amplitude sum, `M_y * sigma * sqrt(pi/2)`;
    /// the natural normalizer for threshold axes.
    pub fn mean_amplitude_sum(&self) -> f64 {
        self.group_size as f64 * self.sigma * libm::sqrt(core::f64::consts::FRAC_PI_2)
    }
}

/// Approximate CDF value, clamped for reporting with the raw value retained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfValue {
    /// Clamped to `[0, 1]`.
    pub value: f64,
    /// Unclamped evaluation, for accuracy diagnostics.
    pub raw: f64,
}

/// Closed-form approximation of the outage CDF at threshold `gamma_th`.
///
/// Amplitudes scale linearly with `sigma`, so the evaluation normalizes the
/// threshold by `sigma` and works at unit scale: a gamma-family series
/// matching the exact small-threshold behavior of the Rayleigh sum, minus a
/// fitted bump centered on the distribution body. In the correction,
/// `alpha1` shifts the bump and `alpha2` sets its exponential width; the
/// quoted constants only achieve their advertised accuracy in these roles.
pub fn outage_cdf_approx(
    gamma_th: f64,
    params: &OutageParams,
) -> Result<CdfValue, MetricsError> {
    if gamma_th.is_nan() || gamma_th < 0.0 {
        return Err(MetricsError::NegativeThreshold(gamma_th));
    }
    if params.group_size == 0 {
        return Err(MetricsError::GroupSizeZero);
    }
    if gamma_th == 0.0 {
        return Ok(CdfValue { value: 0.0, raw: 0.0 });
    }
    let my = params.group_size;
    let u = gamma_th / params.sigma;
    let scale = params.unit_scale();

    // Leading term: regularized lower incomplete gamma of integer order M_y
    // at t = u^2 / (2 * scale), via the complementary Poisson series.
    let t = u * u / (2.0 * scale);
    let mut series = 0.0;
    let mut term = 1.0;
    for m in 0..my {
        if m > 0 {
            term *= t / m as f64;
        }
        series += term;
    }
    let main = 1.0 - libm::exp(-t) * series;

    // Fitted correction bump, evaluated in log space for range safety.
    let x = u - params.alpha1;
    let two_my = 2 * my as i32 - 1;
    let ln_num = libm::log(u)
        + libm::log(params.alpha0)
        + two_my as f64 * libm::log(libm::fabs(x))
        - params.alpha2 * x * x / (2.0 * scale);
    let ln_den = (my as f64 - 1.0) * core::f64::consts::LN_2
        + my as f64 * libm::log(scale / params.alpha2)
        + libm::lgamma(my as f64);
    let magnitude = libm::exp(ln_num - ln_den);
    let correction = if x < 0.0 { -magnitude } else { magnitude };

    let raw = main - correction;
    Ok(CdfValue {
        value: raw.clamp(0.0, 1.0),
        raw,
    })
}

/// One draw of the amplitude sum: `M_y` i.i.d. Rayleigh(`sigma`) variables.
pub fn draw_rayleigh_sum(group_size: u32, sigma: f64, stream: &mut Stream) -> f64 {
    (0..group_size).map(|_| stream.rayleigh(sigma)).sum()
}

const ORACLE_CHUNK: u64 = 65_536;

/// Brute-force empirical CDF of the Rayleigh amplitude sum on a threshold
/// grid. Deterministic per seed and independent of how chunks are evaluated.
pub fn outage_cdf_oracle(
    grid: &[f64],
    group_size: u32,
    sigma: f64,
    samples: u64,
    seed: u64,
) -> Result<Vec<f64>, MetricsError> {
    if group_size == 0 {
        return Err(MetricsError::GroupSizeZero);
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(MetricsError::SigmaNotPositive(sigma));
    }
    if samples < 10_000 {
        return Err(MetricsError::TooFewSamples {
            got: samples,
            min: 10_000,
        });
    }
    for &g in grid {
        if g.is_nan() || g < 0.0 {
            return Err(MetricsError::NegativeThreshold(g));
        }
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].partial_cmp(&grid[b]).expect("finite grid"));
    let sorted: Vec<f64> = order.iter().map(|&i| grid[i]).collect();

    // counts[k]: samples whose first covering grid point is sorted[k]
    let mut counts = vec![0u64; sorted.len() + 1];
    let chunks = samples.div_ceil(ORACLE_CHUNK);
    for chunk in 0..chunks {
        let n = ORACLE_CHUNK.min(samples - chunk * ORACLE_CHUNK);
        let mut stream = Stream::derived(seed, Domain::OutageOracle, &[group_size as u64, chunk]);
        for _ in 0..n {
            let s = draw_rayleigh_sum(group_size, sigma, &mut stream);
            let idx = sorted.partition_point(|&g| g < s);
            counts[idx] += 1;
        }
    }
    let mut cum = 0u64;
    let mut cdf_sorted = Vec::with_capacity(sorted.len());
    for &c in counts.iter().take(sorted.len()) {
        cum += c;
        cdf_sorted.push(cum as f64 / samples as f64);
    }
    let mut out = vec![0.0; grid.len()];
    for (k, &orig) in order.iter().enumerate() {
        out[orig] = cdf_sorted[k];
    }
    Ok(out)
}

/// Mean SINR over a series, with infinite entries counted and excluded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSinr {
    pub mean: f64,
    /// Entries excluded from the mean because they were infinite
    /// (interference-free noiseless frames).
    pub infinite_count: usize,
}

/// Arithmetic mean of a SINR series. Infinite entries are excluded from the
/// mean and reported in `infinite_count`; an all-infinite series yields an
/// infinite mean.
pub fn mean_sinr(series: &[f64]) -> Result<MeanSinr, MetricsError> {
    if series.is_empty() {
        return Err(MetricsError::EmptySeries);
    }
    let mut sum = 0.0;
    let mut finite = 0usize;
    let mut infinite = 0usize;
    for &s in series {
        if s.is_infinite() {
            infinite += 1;
        } else {
            sum += s;
            finite += 1;
        }
    }
    let mean = if finite == 0 {
        f64::INFINITY
    } else {
        sum / finite as f64
    };
    Ok(MeanSinr {
        mean,
        infinite_count: infinite,
    })
}

/// One Eb/N0 grid point of a BER curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub ebn0_db: f64,
    pub bit_errors: u64,
    /// Bits transmitted, i.e. the number of Bernoulli trials behind the
    /// estimate.
    pub bits: u64,
}

impl BerPoint {
    /// Error-rate estimate; `None` when no bits were transmitted.
    pub fn ber(&self) -> Option<f64> {
        (self.bits > 0).then(|| self.bit_errors as f64 / self.bits as f64)
    }

    /// 99% binomial confidence half-width around the estimate.
    pub fn ci99_half_width(&self) -> Option<f64> {
        self.ber().map(|p| {
            2.5758293035489 * libm::sqrt((p * (1.0 - p)).max(0.0) / self.bits as f64)
        })
    }
}

/// A BER-versus-Eb/N0 curve for one scheduler mode and spreading shape.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub mode: SimMode,
    pub group_size: u32,
    pub time_spread: u32,
    pub points: Vec<BerPoint>,
}

impl BerCurve {
    /// Eb/N0 (dB) where the curve crosses `target`, by log-linear
    /// interpolation between bracketing grid points.
    pub fn crossing_db(&self, target: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter_map(|p| p.ber().map(|b| (p.ebn0_db, b)))
            .filter(|&(_, b)| b > 0.0)
            .collect();
        for w in pts.windows(2) {
            let (x0, b0) = w[0];
            let (x1, b1) = w[1];
            if (b0 >= target && b1 <= target) || (b0 <= target && b1 >= target) {
                if b0 == b1 {
                    return Some(x0);
                }
                let l0 = libm::log(b0);
                let l1 = libm::log(b1);
                let lt = libm::log(target);
                return Some(x0 + (x1 - x0) * (lt - l0) / (l1 - l0));
            }
        }
        None
    }
}

/// Full-chain Monte Carlo BER: runs the protocol and PHY for `frames` frames
/// at every grid point, counting transmitted bits and bit errors.
///
/// Each grid point runs an independent simulation seeded from
/// `(master_seed, mode, spreading shape, point index)`, so curves are
/// reproducible bit-for-bit and grid points may be evaluated in any order or
/// in parallel.
pub fn ber_monte_carlo(
    cfg: &SystemConfig,
    mode: SimMode,
    ebn0_grid_db: &[f64],
    frames: u64,
) -> Result<BerCurve, MetricsError> {
    if frames == 0 {
        return Err(MetricsError::ZeroFrames);
    }
    if ebn0_grid_db.is_empty() {
        return Err(MetricsError::InvalidGrid("empty Eb/N0 grid"));
    }
    if ebn0_grid_db.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MetricsError::InvalidGrid("Eb/N0 grid must be strictly increasing"));
    }
    let mut points = Vec::with_capacity(ebn0_grid_db.len());
    for (i, &db) in ebn0_grid_db.iter().enumerate() {
        points.push(ber_point(cfg, mode, db, i as u64, frames)?);
    }
    Ok(BerCurve {
        mode,
        group_size: cfg.group_size,
        time_spread: cfg.time_spread,
        points,
    })
}

/// One grid point of [`ber_monte_carlo`]; exposed so runners can fan points
/// out to a worker pool.
pub fn ber_point(
    cfg: &SystemConfig,
    mode: SimMode,
    ebn0_db: f64,
    point_index: u64,
    frames: u64,
) -> Result<BerPoint, MetricsError> {
    if frames == 0 {
        return Err(MetricsError::ZeroFrames);
    }
    let mode_tag = match mode {
        SimMode::Probing => 1u64,
        SimMode::Baseline => 2u64,
    };
    let seed = derive_key(
        cfg.master_seed,
        Domain::Experiment,
        &[
            mode_tag,
            cfg.group_size as u64,
            cfg.time_spread as u64,
            point_index,
        ],
    );
    let mut point_cfg = cfg.clone();
    point_cfg.noise_density = cfg.noise_density_for_ebn0_db(ebn0_db);
    let mut sim = Simulation::new(point_cfg, mode, seed)?;
    let mut bit_errors = 0u64;
    let mut bits = 0u64;
    for _ in 0..frames {
        let rec = sim.advance_frame()?;
        bit_errors += rec.bit_errors as u64;
        bits += rec.bits as u64;
    }
    Ok(BerPoint {
        ebn0_db,
        bit_errors,
        bits,
    })
}
