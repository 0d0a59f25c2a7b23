//! Per-frame Rayleigh fading and receiver noise.
//!
//! Fading is independent across users, subcarriers, and frames, and constant
//! within one frame (slow fading relative to the symbol duration). The
//! receiver is genie-aided: it knows every active user's gains and phases.
//!
//! Noise is drawn per frame cell as circularly-symmetric complex Gaussian with
//! total power `noise_density` per chip (each quadrature carries half). Under
//! this convention the despread complex correlation has noise power
//! `N * N_o * sum(gain^2)` and a single user's decision-statistic error rate
//! is exactly `Q(sqrt(2 * P_d / P_n))`.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::grouping::SubcarrierGroup;
use crate::rng::{ChannelStream, Domain, Stream};

/// Which subcarriers of a user's channel were materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChannelScope {
    /// All `M` subcarriers, indexed 0-based by subcarrier.
    Full,
    /// Only the members of one group, in member order.
    OnGroup { group_index: u32, members: Vec<u32> },
}

/// One user's fading realization for one frame.
#[derive(Debug, Clone)]
pub struct UserChannel {
    pub scope: ChannelScope,
    /// Rayleigh amplitude gains, aligned with the scope.
    pub gains: Vec<f64>,
    /// Channel phases in `[0, 2*pi)`, aligned with the scope.
    pub phases: Vec<f64>,
}

impl UserChannel {
    /// Gains over the given group, in member order.
    ///
    /// Returns `None` when this realization does not cover the group.
    pub fn gains_on_group(&self, group: &SubcarrierGroup) -> Option<Vec<f64>> {
        self.view_on_group(group).map(|(g, _)| g)
    }

    /// Gains and phases over the given group, in member order.
    pub fn view_on_group(&self, group: &SubcarrierGroup) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.scope {
            ChannelScope::Full => {
                let g = group
                    .members
                    .iter()
                    .map(|&m| self.gains[(m - 1) as usize])
                    .collect();
                let p = group
                    .members
                    .iter()
                    .map(|&m| self.phases[(m - 1) as usize])
                    .collect();
                Some((g, p))
            }
            ChannelScope::OnGroup { group_index, .. } => {
                if *group_index == group.index {
                    Some((self.gains.clone(), self.phases.clone()))
                } else {
                    None
                }
            }
        }
    }
}

/// Fading realization of every active user for one frame.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Indexed by `user - 1`; `None` for users with no draw this frame.
    pub per_user: Vec<Option<UserChannel>>,
    pub sigma: f64,
}

/// What to materialize for one user.
#[derive(Debug, Clone)]
pub enum ChannelNeed<'a> {
    /// All subcarriers (needed to evaluate a candidate on every group).
    Full,
    /// Only one group's members (enough for a data transmission).
    Group(&'a SubcarrierGroup),
}

/// Channel/noise parameter errors.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    /// `sigma <= 0` or not finite.
    ScaleNotPositive(f64),
    /// `noise_density < 0` or not finite.
    NoiseDensityNegative(f64),
    /// An operation touched a user whose channel was not drawn.
    MissingChannel { user: u32 },
    /// Probing and data occupant sets intersect.
    OccupantsOverlap { user: u32 },
}

impl core::fmt::Display for ChannelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ChannelError::ScaleNotPositive(s) => write!(f, "rayleigh scale must be > 0, got {s}"),
            ChannelError::NoiseDensityNegative(n) => {
                write!(f, "noise density must be >= 0, got {n}")
            }
            ChannelError::MissingChannel { user } => {
                write!(f, "no channel realization drawn for user {user}")
            }
            ChannelError::OccupantsOverlap { user } => {
                write!(f, "user {user} appears in both probing and data occupant sets")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ChannelError {}

/// Draws the fading realization for one frame.
///
/// Gains are Rayleigh with scale `sigma`, phases uniform, all mutually
/// independent. Each user's values sit at fixed positions of a stream keyed by
/// `(master_seed, frame, user)`, so the same user and frame always see the
/// same channel regardless of which other users are active or how much of the
/// band is materialized for them.
pub fn draw_frame_channel(
    needs: &[(u32, ChannelNeed<'_>)],
    total_subcarriers: u32,
    sigma: f64,
    master_seed: u64,
    frame: u64,
) -> Result<ChannelRealization, ChannelError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(ChannelError::ScaleNotPositive(sigma));
    }
    let max_user = needs.iter().map(|&(u, _)| u).max().unwrap_or(0) as usize;
    let mut per_user: Vec<Option<UserChannel>> = vec![None; max_user];
    for (user, need) in needs {
        let cs = ChannelStream::new(master_seed, frame, *user);
        let chan = match need {
            ChannelNeed::Full => {
                let mut gains = Vec::with_capacity(total_subcarriers as usize);
                let mut phases = Vec::with_capacity(total_subcarriers as usize);
                for m0 in 0..total_subcarriers {
                    gains.push(cs.gain(m0, sigma));
                    phases.push(cs.phase(m0));
                }
                UserChannel {
                    scope: ChannelScope::Full,
                    gains,
                    phases,
                }
            }
            ChannelNeed::Group(group) => {
                let mut gains = Vec::with_capacity(group.members.len());
                let mut phases = Vec::with_capacity(group.members.len());
                for &m in &group.members {
                    gains.push(cs.gain(m - 1, sigma));
                    phases.push(cs.phase(m - 1));
                }
                UserChannel {
                    scope: ChannelScope::OnGroup {
                        group_index: group.index,
                        members: group.members.clone(),
                    },
                    gains,
                    phases,
                }
            }
        };
        per_user[(*user - 1) as usize] = Some(chan);
    }
    Ok(ChannelRealization { per_user, sigma })
}

impl ChannelRealization {
    pub fn user(&self, user: u32) -> Result<&UserChannel, ChannelError> {
        self.per_user
            .get((user - 1) as usize)
            .and_then(|c| c.as_ref())
            .ok_or(ChannelError::MissingChannel { user })
    }
}

/// Mean-square fading over a group's occupants: the average of `gain^2` over
/// every occupant and every member subcarrier.
///
/// An empty occupant set has no defined average; the a-priori mean
/// `2 * sigma^2` is returned instead (an empty group contributes no
/// interference, so the value only shows up in diagnostics).
pub fn group_mean_square_fading(
    occupants: &[u32],
    realization: &ChannelRealization,
    group: &SubcarrierGroup,
) -> Result<f64, ChannelError> {
    if occupants.is_empty() {
        return Ok(2.0 * realization.sigma * realization.sigma);
    }
    let mut sum = 0.0;
    for &user in occupants {
        let chan = realization.user(user)?;
        let gains = chan
            .gains_on_group(group)
            .ok_or(ChannelError::MissingChannel { user })?;
        sum += gains.iter().map(|g| g * g).sum::<f64>();
    }
    Ok(sum / (occupants.len() as f64 * group.members.len() as f64))
}

/// As [`group_mean_square_fading`], taking the probing and data occupant sets
/// separately and rejecting any overlap between them.
pub fn group_mean_square_fading_split(
    probing: &[u32],
    data: &[u32],
    realization: &ChannelRealization,
    group: &SubcarrierGroup,
) -> Result<f64, ChannelError> {
    for &u in probing {
        if data.contains(&u) {
            return Err(ChannelError::OccupantsOverlap { user: u });
        }
    }
    let mut all = Vec::with_capacity(probing.len() + data.len());
    all.extend_from_slice(probing);
    all.extend_from_slice(data);
    group_mean_square_fading(&all, realization, group)
}

/// I.i.d. circularly-symmetric complex Gaussian noise for one frame grid,
/// `total_subcarriers` rows by `time_spread` columns, row-major.
///
/// Cell power is `noise_density`; each quadrature has variance
/// `noise_density / 2`, so the post-derotation real part seen by the detector
/// carries half the cell power.
pub fn draw_noise(
    total_subcarriers: u32,
    time_spread: u32,
    noise_density: f64,
    master_seed: u64,
    frame: u64,
) -> Result<Vec<Complex64>, ChannelError> {
    if !(noise_density >= 0.0) || !noise_density.is_finite() {
        return Err(ChannelError::NoiseDensityNegative(noise_density));
    }
    let cells = total_subcarriers as usize * time_spread as usize;
    if noise_density == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); cells]);
    }
    let mut stream = Stream::derived(master_seed, Domain::Noise, &[frame]);
    let comp_sigma = libm::sqrt(noise_density / 2.0);
    let mut grid = Vec::with_capacity(cells);
    for _ in 0..cells {
        let (re, im) = stream.gaussian_pair();
        grid.push(Complex64::new(comp_sigma * re, comp_sigma * im));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::build_subcarrier_groups;

    fn full_needs(users: u32) -> Vec<(u32, ChannelNeed<'static>)> {
        (1..=users).map(|u| (u, ChannelNeed::Full)).collect()
    }

    #[test]
    fn same_seed_gives_identical_realization() {
        let a = draw_frame_channel(&full_needs(4), 16, 0.7, 99, 5).unwrap();
        let b = draw_frame_channel(&full_needs(4), 16, 0.7, 99, 5).unwrap();
        for u in 1..=4 {
            assert_eq!(a.user(u).unwrap().gains, b.user(u).unwrap().gains);
            assert_eq!(a.user(u).unwrap().phases, b.user(u).unwrap().phases);
        }
    }

    #[test]
    fn group_scope_matches_full_scope_values() {
        let groups = build_subcarrier_groups(32, 8).unwrap();
        let g = &groups[2];
        let full = draw_frame_channel(&[(1, ChannelNeed::Full)], 32, 1.0, 7, 3).unwrap();
        let part = draw_frame_channel(&[(1, ChannelNeed::Group(g))], 32, 1.0, 7, 3).unwrap();
        let (fg, fp) = full.user(1).unwrap().view_on_group(g).unwrap();
        let (pg, pp) = part.user(1).unwrap().view_on_group(g).unwrap();
        assert_eq!(fg, pg);
        assert_eq!(fp, pp);
    }

    #[test]
    fn non_positive_scale_is_rejected() {
        assert!(draw_frame_channel(&full_needs(1), 8, 0.0, 1, 0).is_err());
        assert!(draw_frame_channel(&full_needs(1), 8, -1.0, 1, 0).is_err());
    }

    #[test]
    fn mean_square_of_constant_field_is_one() {
        let groups = build_subcarrier_groups(8, 4).unwrap();
        let mut real = draw_frame_channel(&full_needs(2), 8, 1.0, 1, 0).unwrap();
        for chan in real.per_user.iter_mut().flatten() {
            for g in &mut chan.gains {
                *g = 1.0;
            }
        }
        let e = group_mean_square_fading(&[1, 2], &real, &groups[0]).unwrap();
        assert_eq!(e, 1.0);
    }

    #[test]
    fn mean_square_matches_direct_substitution() {
        let groups = build_subcarrier_groups(2, 2).unwrap();
        let mut real = draw_frame_channel(&full_needs(2), 2, 1.0, 1, 0).unwrap();
        // one user, gains {1, 3} -> (1 + 9) / 2 = 5
        real.per_user[0].as_mut().unwrap().gains = alloc::vec![1.0, 3.0];
        let e1 = group_mean_square_fading(&[1], &real, &groups[0]).unwrap();
        assert_eq!(e1, 5.0);
        // two users, gains {1, 2} and {3, 4} -> (1 + 4 + 9 + 16) / 4 = 7.5
        real.per_user[0].as_mut().unwrap().gains = alloc::vec![1.0, 2.0];
        real.per_user[1].as_mut().unwrap().gains = alloc::vec![3.0, 4.0];
        let e2 = group_mean_square_fading(&[1, 2], &real, &groups[0]).unwrap();
        assert_eq!(e2, 7.5);
    }

    #[test]
    fn empty_occupants_fall_back_to_prior_mean() {
        let groups = build_subcarrier_groups(8, 4).unwrap();
        let real = draw_frame_channel(&full_needs(1), 8, 0.5, 1, 0).unwrap();
        let e = group_mean_square_fading(&[], &real, &groups[0]).unwrap();
        assert!((e - 0.5).abs() < 1e-15);
    }

    #[test]
    fn split_occupants_reject_overlap() {
        let groups = build_subcarrier_groups(8, 4).unwrap();
        let real = draw_frame_channel(&full_needs(3), 8, 1.0, 1, 0).unwrap();
        let err = group_mean_square_fading_split(&[1, 2], &[2, 3], &real, &groups[0]);
        assert!(matches!(err, Err(ChannelError::OccupantsOverlap { user: 2 })));
        assert!(group_mean_square_fading_split(&[1], &[2, 3], &real, &groups[0]).is_ok());
    }

    #[test]
    fn zero_noise_density_gives_zero_grid() {
        let grid = draw_noise(8, 4, 0.0, 1, 0).unwrap();
        assert!(grid.iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }

    #[test]
    fn noise_is_reproducible() {
        let a = draw_noise(8, 4, 2.0, 11, 3).unwrap();
        let b = draw_noise(8, 4, 2.0, 11, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_noise_density_is_rejected() {
        assert!(draw_noise(8, 4, -1.0, 1, 0).is_err());
    }
}
