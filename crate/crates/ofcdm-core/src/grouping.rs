//! Interleaved subcarrier groups and probe identifiers.
//!
//! The `M` subcarriers are split into `Y = M / M_y` noncontiguous groups with
//! spacing `mu = Y`: group `y` holds subcarriers `{y, y+mu, ..., y+(M_y-1)mu}`
//! (1-based). Maximal interleaving gives every group the full frequency
//! diversity of the band. Each user additionally owns one `(group row, chip
//! column)` identifier cell used for its probing tone, so simultaneous probes
//! from different users can never collide.

use alloc::vec::Vec;

/// One noncontiguous group of `M_y` subcarriers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubcarrierGroup {
    /// Group index `y`, 1-based.
    pub index: u32,
    /// Member subcarriers, 1-based, in increasing order.
    pub members: Vec<u32>,
}

/// A user's personal probing cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeIdentifier {
    /// Owning user, 1-based.
    pub user: u32,
    /// Group row `y` the probing tone occupies, 1-based.
    pub group_row: u32,
    /// Chip column `n` the probing tone occupies, 1-based.
    pub chip_column: u32,
}

/// Errors from group construction and identifier assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupingError {
    /// `group_size` does not divide `total_subcarriers`.
    NotDivisible {
        total_subcarriers: u32,
        group_size: u32,
    },
    /// More users than identifier cells.
    IdentifierCapacity {
        users: u32,
        group_count: u32,
        time_spread: u32,
    },
}

impl core::fmt::Display for GroupingError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GroupingError::NotDivisible {
                total_subcarriers,
                group_size,
            } => write!(
                f,
                "group size {group_size} does not divide {total_subcarriers} subcarriers"
            ),
            GroupingError::IdentifierCapacity {
                users,
                group_count,
                time_spread,
            } => write!(
                f,
                "{users} users exceed {} identifier cells ({group_count} groups x {time_spread} chips)",
                group_count * time_spread
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GroupingError {}

/// Builds the `Y = M / M_y` interleaved groups partitioning `{1..M}`.
pub fn build_subcarrier_groups(
    total_subcarriers: u32,
    group_size: u32,
) -> Result<Vec<SubcarrierGroup>, GroupingError> {
    if group_size == 0 || total_subcarriers % group_size != 0 {
        return Err(GroupingError::NotDivisible {
            total_subcarriers,
            group_size,
        });
    }
    let group_count = total_subcarriers / group_size;
    let groups = (1..=group_count)
        .map(|y| SubcarrierGroup {
            index: y,
            members: (0..group_size).map(|j| y + j * group_count).collect(),
        })
        .collect();
    Ok(groups)
}

/// Assigns identifier cells row-major: user `u` gets row `((u-1) mod Y) + 1`,
/// column `floor((u-1) / Y) + 1`. The map is injective for `B <= Y * N`.
pub fn assign_probe_identifiers(
    users: u32,
    group_count: u32,
    time_spread: u32,
) -> Result<Vec<ProbeIdentifier>, GroupingError> {
    if users as u64 > group_count as u64 * time_spread as u64 {
        return Err(GroupingError::IdentifierCapacity {
            users,
            group_count,
            time_spread,
        });
    }
    Ok((1..=users)
        .map(|u| ProbeIdentifier {
            user: u,
            group_row: ((u - 1) % group_count) + 1,
            chip_column: ((u - 1) / group_count) + 1,
        })
        .collect())
}
