//! Counter-based seeded random streams.
//!
//! Every random quantity in a simulation is drawn from a stream keyed by the
//! master seed plus a domain tag and the relevant indices (frame, user, chunk).
//! Streams are random-access: value `i` of a stream depends only on the key and
//! `i`, never on how many values were drawn before it. This makes results
//! independent of evaluation order and of how work is split across workers.
//!
//! The generator is SplitMix64: the state walks a Weyl sequence and each output
//! is a strong 64-bit finalizer of the state. That is plenty for link-level
//! Monte Carlo and keeps the crate free of RNG dependencies.

use libm::{cos, log, sin, sqrt};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_SALT: u64 = 0xA076_1D64_78BD_642F;

/// Domain separation tags for derived streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Per-user per-frame fading gains and phases.
    Channel = 1,
    /// Per-frame receiver noise grid.
    Noise = 2,
    /// Per-user per-frame spreading code chips.
    Code = 3,
    /// Per-user per-frame payload bit.
    Payload = 4,
    /// Per-user per-frame burst arrival draw.
    Arrival = 5,
    /// Per-user per-burst baseline group assignment.
    BaselineGroup = 6,
    /// Outage oracle sample chunks.
    OutageOracle = 7,
    /// Per-experiment sub-seed derivation (grid points, sweeps).
    Experiment = 8,
}

#[inline]
fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a stream key from a seed, a domain tag, and extra index parts.
pub fn derive_key(seed: u64, domain: Domain, parts: &[u64]) -> u64 {
    let mut h = finalize(seed ^ SEED_SALT).wrapping_add(finalize(domain as u64));
    for &p in parts {
        h = finalize(h.wrapping_add(finalize(p.wrapping_add(GOLDEN))));
    }
    finalize(h)
}

/// A deterministic random stream with sequential and random access.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(key: u64) -> Self {
        Stream { key, counter: 0 }
    }

    pub fn derived(seed: u64, domain: Domain, parts: &[u64]) -> Self {
        Stream::new(derive_key(seed, domain, parts))
    }

    /// Value at position `i`, independent of the stream's cursor.
    #[inline]
    pub fn value_at(key: u64, i: u64) -> u64 {
        finalize(key.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    #[inline]
    pub fn key(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = Self::value_at(self.key, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        u64_to_unit(self.next_u64())
    }

    /// Uniform in `(0, 1]`; safe as a logarithm argument.
    #[inline]
    pub fn uniform_open_closed(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal pair via the Box-Muller transform.
    #[inline]
    pub fn gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open_closed();
        let u2 = self.uniform();
        let r = sqrt(-2.0 * log(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        (r * cos(theta), r * sin(theta))
    }

    /// Rayleigh amplitude with scale `sigma` (inverse-CDF draw).
    #[inline]
    pub fn rayleigh(&mut self, sigma: f64) -> f64 {
        sigma * sqrt(-2.0 * log(self.uniform_open_closed()))
    }

    /// Uniform phase in `[0, 2*pi)`.
    #[inline]
    pub fn phase(&mut self) -> f64 {
        2.0 * core::f64::consts::PI * self.uniform()
    }

    /// Equiprobable `+1`/`-1` chip.
    #[inline]
    pub fn chip(&mut self) -> i8 {
        if self.next_u64() & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `[0, bound)` via the multiply-shift reduction.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }
}

#[inline]
pub(crate) fn u64_to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Random-access helpers for per-subcarrier channel draws.
///
/// Gain and phase of subcarrier `m` (0-based) sit at fixed stream positions,
/// so a caller may materialize any subset of subcarriers and still see exactly
/// the values a full draw would produce.
#[derive(Debug, Clone, Copy)]
pub struct ChannelStream {
    key: u64,
}

impl ChannelStream {
    pub fn new(seed: u64, frame: u64, user: u32) -> Self {
        ChannelStream {
            key: derive_key(seed, Domain::Channel, &[frame, user as u64]),
        }
    }

    #[inline]
    pub fn gain(&self, subcarrier0: u32, sigma: f64) -> f64 {
        let u = open_closed(Stream::value_at(self.key, 2 * subcarrier0 as u64));
        sigma * sqrt(-2.0 * log(u))
    }

    #[inline]
    pub fn phase(&self, subcarrier0: u32) -> f64 {
        2.0 * core::f64::consts::PI
            * u64_to_unit(Stream::value_at(self.key, 2 * subcarrier0 as u64 + 1))
    }
}

#[inline]
fn open_closed(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}
