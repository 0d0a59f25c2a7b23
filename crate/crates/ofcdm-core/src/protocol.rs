//! The receiver-centric two-phase admission state machine.
//!
//! Users cycle `Idle -> Probing -> AwaitingGrant -> Data -> Idle`. A burst
//! arrival puts an idle user into the probing phase for exactly one frame: it
//! emits a tone on its personal identifier cell. At the end of that frame the
//! receiver locates every tone, evaluates the candidate's prospective SINR on
//! all groups, and picks the argmax. The grant occupies the next (downlink)
//! frame; the user then transmits one bit per frame on the granted group until
//! its burst completes. A burst of `xi` bits therefore spans `xi + 2` frames.
//!
//! The conventional baseline scheduler skips both overhead frames: an arrival
//! starts transmitting immediately on a uniformly random group, with no
//! probing tones anywhere (`xi` frames per burst).
//!
//! Grant delivery is modeled as error-free signaling with a one-frame delay.
//! Candidates probing in the same frame own distinct identifier cells, so
//! their tones never collide; the receiver emits one downlink tone per
//! distinct `(group, column)` grant cell.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{draw_frame_channel, group_mean_square_fading, ChannelError, ChannelNeed};
use crate::config::{ConfigError, SystemConfig};
use crate::grouping::{
    assign_probe_identifiers, build_subcarrier_groups, GroupingError, ProbeIdentifier,
    SubcarrierGroup,
};
use crate::phy::{
    compose_frame, despread, generate_pn_code, place_probe, sinr_data_user, sinr_probe_user,
    spread_bit, FrameContribution, FrameGrid, PhyError, ProbeMarker,
};
use crate::rng::{Domain, Stream};

/// Scheduler variant under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Receiver-centric probing admission with the two-frame overhead.
    Probing,
    /// Conventional scheduler: uniform random group at arrival, no probing.
    Baseline,
}

/// Per-user protocol phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserPhase {
    Idle,
    Probing,
    AwaitingGrant,
    Data,
}

/// Per-user protocol state.
#[derive(Debug, Clone)]
pub struct UserState {
    pub phase: UserPhase,
    /// Present exactly while `phase` is `AwaitingGrant` or `Data`.
    pub assigned_group: Option<u32>,
    /// Bits left in the current burst; positive exactly while not idle.
    pub bits_remaining: u32,
    pub probe_identifier: ProbeIdentifier,
    /// Frame of the current burst's arrival.
    pub burst_started_at: Option<u64>,
}

/// Data and probing user counts per group (index 0 holds group 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupOccupancy {
    pub data_users: Vec<u32>,
    pub probing_users: Vec<u32>,
}

impl GroupOccupancy {
    fn empty(group_count: u32) -> Self {
        GroupOccupancy {
            data_users: vec![0; group_count as usize],
            probing_users: vec![0; group_count as usize],
        }
    }
}

/// A grant decision: candidate, chosen group, and the per-group prospective
/// SINR values it was the argmax of.
#[derive(Debug, Clone)]
pub struct GrantRecord {
    pub user: u32,
    pub group: u32,
    pub chip_column: u32,
    pub gammas: Vec<f64>,
}

/// Downlink tone cell answering a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrantTone {
    pub group: u32,
    pub chip_column: u32,
}

/// A completed burst, for lifecycle accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurstRecord {
    pub user: u32,
    pub started_at: u64,
    pub completed_at: u64,
    pub data_frames: u32,
}

impl BurstRecord {
    /// Frames from arrival to completion, inclusive.
    pub fn span(&self) -> u64 {
        self.completed_at - self.started_at + 1
    }
}

/// Everything that happened in one simulated frame.
#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub frame: u64,
    pub arrivals: Vec<u32>,
    /// Probing tones present in this uplink frame.
    pub probes: Vec<ProbeMarker>,
    /// Downlink tones delivering last frame's grant decisions.
    pub grant_tones: Vec<GrantTone>,
    /// Grant decisions made at the end of this frame.
    pub grants: Vec<GrantRecord>,
    /// Post-despreading SINR of every data user, in user order.
    pub data_sinr: Vec<(u32, f64)>,
    pub bits: u32,
    pub bit_errors: u32,
    pub completed_bursts: Vec<BurstRecord>,
    /// Occupancy while this frame was on the air (after arrivals).
    pub occupancy: GroupOccupancy,
}

impl FrameRecord {
    /// True when any user was active during this frame.
    pub fn is_active(&self) -> bool {
        !self.arrivals.is_empty()
            || !self.probes.is_empty()
            || !self.grant_tones.is_empty()
            || self.bits > 0
    }
}

/// Protocol-level errors.
#[derive(Debug, Clone, PartialEq)]
pub enum ProtocolError {
    Config(ConfigError),
    Grouping(GroupingError),
    Channel(ChannelError),
    Phy(PhyError),
    /// A probe marker does not invert to the user claimed by the map.
    UnknownProbeCell { group_row: u32, chip_column: u32 },
    /// Internal state-machine contract violation.
    InconsistentState(&'static str),
    /// Burst duration asked for a zero-bit burst.
    ZeroBurstBits,
}

impl core::fmt::Display for ProtocolError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ProtocolError::Config(e) => write!(f, "{e}"),
            ProtocolError::Grouping(e) => write!(f, "{e}"),
            ProtocolError::Channel(e) => write!(f, "{e}"),
            ProtocolError::Phy(e) => write!(f, "{e}"),
            ProtocolError::UnknownProbeCell {
                group_row,
                chip_column,
            } => write!(
                f,
                "probe marker at ({group_row}, {chip_column}) does not match any identifier"
            ),
            ProtocolError::InconsistentState(what) => write!(f, "inconsistent state: {what}"),
            ProtocolError::ZeroBurstBits => write!(f, "burst must contain at least one bit"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ProtocolError {}

impl From<ConfigError> for ProtocolError {
    fn from(e: ConfigError) -> Self {
        ProtocolError::Config(e)
    }
}
impl From<GroupingError> for ProtocolError {
    fn from(e: GroupingError) -> Self {
        ProtocolError::Grouping(e)
    }
}
impl From<ChannelError> for ProtocolError {
    fn from(e: ChannelError) -> Self {
        ProtocolError::Channel(e)
    }
}
impl From<PhyError> for ProtocolError {
    fn from(e: PhyError) -> Self {
        ProtocolError::Phy(e)
    }
}

/// Recovers `(group, column, user)` for every probing tone in the frame by
/// inverting the identifier map, rejecting markers that do not match it.
pub fn scan_probes(
    frame: &FrameGrid,
    identifiers: &[ProbeIdentifier],
) -> Result<Vec<ProbeMarker>, ProtocolError> {
    let mut found = Vec::with_capacity(frame.probe_map.len());
    for marker in &frame.probe_map {
        let owner = identifiers
            .iter()
            .find(|id| id.group_row == marker.group_row && id.chip_column == marker.chip_column);
        match owner {
            Some(id) if id.user == marker.user => found.push(*marker),
            _ => {
                return Err(ProtocolError::UnknownProbeCell {
                    group_row: marker.group_row,
                    chip_column: marker.chip_column,
                })
            }
        }
    }
    found.sort_by_key(|m| m.user);
    Ok(found)
}

/// Argmax over per-group SINR values, 1-based; ties break to the lowest index.
pub fn select_best_group(gammas: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, &g) in gammas.iter().enumerate() {
        if g > gammas[best] {
            best = i;
        }
    }
    best as u32 + 1
}

/// Downlink tone cell for a grant: the chosen group row at the candidate's
/// identifier column.
pub fn respond_probe(identifier: &ProbeIdentifier, chosen_group: u32) -> GrantTone {
    GrantTone {
        group: chosen_group,
        chip_column: identifier.chip_column,
    }
}

/// Number of frames one burst occupies on the air.
pub fn burst_duration(burst_bits: u32, mode: SimMode) -> Result<u64, ProtocolError> {
    if burst_bits == 0 {
        return Err(ProtocolError::ZeroBurstBits);
    }
    Ok(match mode {
        SimMode::Probing => burst_bits as u64 + 2,
        SimMode::Baseline => burst_bits as u64,
    })
}

/// Uniform random group for a baseline-mode arrival.
pub fn baseline_assign(user: u32, frame: u64, group_count: u32, seed: u64) -> u32 {
    let mut stream = Stream::derived(seed, Domain::BaselineGroup, &[frame, user as u64]);
    stream.below(group_count as u64) as u32 + 1
}

/// Independent per-user burst arrivals: each idle user starts a burst this
/// frame with probability `1 - e^{-lambda}`.
pub fn draw_arrivals(idle_users: &[u32], arrival_rate: f64, seed: u64, frame: u64) -> Vec<u32> {
    let p = 1.0 - libm::exp(-arrival_rate);
    idle_users
        .iter()
        .copied()
        .filter(|&u| {
            Stream::derived(seed, Domain::Arrival, &[frame, u as u64]).bernoulli(p)
        })
        .collect()
}

/// One running simulation: configuration, per-user state, and bookkeeping.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SystemConfig,
    mode: SimMode,
    seed: u64,
    groups: Vec<SubcarrierGroup>,
    identifiers: Vec<ProbeIdentifier>,
    users: Vec<UserState>,
    occupancy: GroupOccupancy,
    pending_grants: Vec<GrantRecord>,
    frame_index: u64,
}

impl Simulation {
    /// Builds a simulation from a validated config; all randomness derives
    /// from `seed`.
    pub fn new(cfg: SystemConfig, mode: SimMode, seed: u64) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        let groups = build_subcarrier_groups(cfg.total_subcarriers, cfg.group_size)?;
        let identifiers =
            assign_probe_identifiers(cfg.max_users, cfg.group_count, cfg.time_spread)?;
        let users = identifiers
            .iter()
            .map(|&probe_identifier| UserState {
                phase: UserPhase::Idle,
                assigned_group: None,
                bits_remaining: 0,
                probe_identifier,
                burst_started_at: None,
            })
            .collect();
        let occupancy = GroupOccupancy::empty(cfg.group_count);
        Ok(Simulation {
            cfg,
            mode,
            seed,
            groups,
            identifiers,
            users,
            occupancy,
            pending_grants: Vec::new(),
            frame_index: 0,
        })
    }

    /// Seeded with the config's own master seed.
    pub fn from_config(cfg: SystemConfig, mode: SimMode) -> Result<Self, ProtocolError> {
        let seed = cfg.master_seed;
        Simulation::new(cfg, mode, seed)
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn mode(&self) -> SimMode {
        self.mode
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn users(&self) -> &[UserState] {
        &self.users
    }

    pub fn groups(&self) -> &[SubcarrierGroup] {
        &self.groups
    }

    pub fn identifiers(&self) -> &[ProbeIdentifier] {
        &self.identifiers
    }

    /// Incrementally-maintained occupancy counters.
    pub fn occupancy(&self) -> &GroupOccupancy {
        &self.occupancy
    }

    /// Occupancy rebuilt from the user states, for consistency checks.
    pub fn recompute_occupancy(&self) -> GroupOccupancy {
        let mut occ = GroupOccupancy::empty(self.cfg.group_count);
        for user in &self.users {
            match user.phase {
                UserPhase::Probing => {
                    occ.probing_users[(user.probe_identifier.group_row - 1) as usize] += 1;
                }
                UserPhase::Data => {
                    let g = user.assigned_group.expect("data user has a group");
                    occ.data_users[(g - 1) as usize] += 1;
                }
                UserPhase::Idle | UserPhase::AwaitingGrant => {}
            }
        }
        occ
    }

    /// Advances the system by one frame.
    pub fn advance_frame(&mut self) -> Result<FrameRecord, ProtocolError> {
        let frame = self.frame_index;
        let cfg = self.cfg.clone();

        // Grants decided last frame go out on the downlink now; one tone per
        // distinct cell (coinciding grants carry the same group to the same
        // column and need only one tone).
        let delivering = core::mem::take(&mut self.pending_grants);
        let mut grant_tones: Vec<GrantTone> = Vec::new();
        for g in &delivering {
            let tone = GrantTone {
                group: g.group,
                chip_column: g.chip_column,
            };
            if !grant_tones.contains(&tone) {
                grant_tones.push(tone);
            }
        }

        // Burst arrivals: idle users enter the probing phase (or go straight
        // to a random group's data phase in baseline mode).
        let idle: Vec<u32> = self
            .users
            .iter()
            .filter(|u| u.phase == UserPhase::Idle)
            .map(|u| u.probe_identifier.user)
            .collect();
        let arrivals = draw_arrivals(&idle, cfg.arrival_rate, self.seed, frame);
        for &u in &arrivals {
            let state = &mut self.users[(u - 1) as usize];
            state.bits_remaining = cfg.burst_bits;
            state.burst_started_at = Some(frame);
            match self.mode {
                SimMode::Probing => {
                    state.phase = UserPhase::Probing;
                    self.occupancy.probing_users
                        [(state.probe_identifier.group_row - 1) as usize] += 1;
                }
                SimMode::Baseline => {
                    let g = baseline_assign(u, frame, cfg.group_count, self.seed);
                    state.phase = UserPhase::Data;
                    state.assigned_group = Some(g);
                    self.occupancy.data_users[(g - 1) as usize] += 1;
                }
            }
        }

        let probers: Vec<u32> = self
            .users
            .iter()
            .filter(|u| u.phase == UserPhase::Probing)
            .map(|u| u.probe_identifier.user)
            .collect();
        let data_users: Vec<(u32, u32)> = self
            .users
            .iter()
            .filter(|u| u.phase == UserPhase::Data)
            .map(|u| {
                let g = u
                    .assigned_group
                    .ok_or(ProtocolError::InconsistentState("data user without group"))?;
                Ok((u.probe_identifier.user, g))
            })
            .collect::<Result<_, ProtocolError>>()?;

        // Channel: candidates are evaluated on every group and need the whole
        // band; data users only need their own group.
        let mut needs: Vec<(u32, ChannelNeed<'_>)> = Vec::new();
        for &u in &probers {
            needs.push((u, ChannelNeed::Full));
        }
        for &(u, g) in &data_users {
            needs.push((u, ChannelNeed::Group(&self.groups[(g - 1) as usize])));
        }
        let realization = draw_frame_channel(
            &needs,
            cfg.total_subcarriers,
            cfg.rayleigh_scale,
            self.seed,
            frame,
        )?;

        // Uplink frame composition.
        let mut tx_bits: Vec<(u32, i8)> = Vec::with_capacity(data_users.len());
        let mut data_contribs: Vec<FrameContribution> = Vec::with_capacity(data_users.len());
        for &(u, g) in &data_users {
            let group = &self.groups[(g - 1) as usize];
            let code = generate_pn_code(u, frame, cfg.group_size, cfg.time_spread, self.seed);
            let bit = Stream::derived(self.seed, Domain::Payload, &[frame, u as u64]).chip();
            let (gains, phases) = realization
                .user(u)?
                .view_on_group(group)
                .ok_or(ProtocolError::InconsistentState("channel misses data group"))?;
            data_contribs.push(spread_bit(
                bit,
                &code,
                &gains,
                &phases,
                group,
                cfg.chip_energy,
            )?);
            tx_bits.push((u, bit));
        }
        let mut probe_contribs: Vec<FrameContribution> = Vec::with_capacity(probers.len());
        for &u in &probers {
            let id = self.identifiers[(u - 1) as usize];
            let row_group = &self.groups[(id.group_row - 1) as usize];
            let (gains, phases) = realization
                .user(u)?
                .view_on_group(row_group)
                .ok_or(ProtocolError::InconsistentState("channel misses probe row"))?;
            probe_contribs.push(place_probe(
                u,
                &id,
                &gains,
                &phases,
                row_group,
                cfg.chip_energy,
            )?);
        }
        let any_active = !data_contribs.is_empty() || !probe_contribs.is_empty();
        let noise = if cfg.noise_density > 0.0 && any_active {
            Some(crate::channel::draw_noise(
                cfg.total_subcarriers,
                cfg.time_spread,
                cfg.noise_density,
                self.seed,
                frame,
            )?)
        } else {
            None
        };
        let frame_grid = compose_frame(
            &data_contribs,
            &probe_contribs,
            noise.as_deref(),
            cfg.total_subcarriers,
            cfg.time_spread,
        )?;

        let occupancy_snapshot = self.recompute_occupancy();
        debug_assert_eq!(occupancy_snapshot, self.occupancy);

        // Per-group receiver-side statistics for this frame.
        let group_count = cfg.group_count as usize;
        let mut occupants: Vec<Vec<u32>> = vec![Vec::new(); group_count];
        for &(u, g) in &data_users {
            occupants[(g - 1) as usize].push(u);
        }
        for &u in &probers {
            let row = self.identifiers[(u - 1) as usize].group_row;
            occupants[(row - 1) as usize].push(u);
        }
        let mut probe_tally = vec![0u32; group_count];
        for marker in &frame_grid.probe_map {
            probe_tally[(marker.group_row - 1) as usize] += 1;
        }
        let mut mean_sq = vec![0.0f64; group_count];
        let need_all_groups = !probers.is_empty();
        for y in 0..group_count {
            if need_all_groups || !occupants[y].is_empty() {
                mean_sq[y] =
                    group_mean_square_fading(&occupants[y], &realization, &self.groups[y])?;
            }
        }

        // Despread every data user against its own code and channel.
        let mut bit_errors = 0u32;
        let mut data_sinr = Vec::with_capacity(data_users.len());
        for (idx, &(u, g)) in data_users.iter().enumerate() {
            let group = &self.groups[(g - 1) as usize];
            let code = generate_pn_code(u, frame, cfg.group_size, cfg.time_spread, self.seed);
            let (gains, phases) = realization
                .user(u)?
                .view_on_group(group)
                .ok_or(ProtocolError::InconsistentState("channel misses data group"))?;
            let rx = despread(&frame_grid, &code, &gains, &phases, group)?;
            if rx.bit != tx_bits[idx].1 {
                bit_errors += 1;
            }
            let y = (g - 1) as usize;
            let sinr = sinr_data_user(
                &gains,
                cfg.time_spread,
                cfg.chip_energy,
                self.occupancy.data_users[y],
                probe_tally[y],
                mean_sq[y],
                cfg.noise_density,
            );
            data_sinr.push((u, sinr));
        }

        // Steps 1-3: locate probes, evaluate every group for each candidate,
        // grant the argmax. The tone answering each grant goes out next frame.
        let markers = scan_probes(&frame_grid, &self.identifiers)?;
        let mut grants: Vec<GrantRecord> = Vec::with_capacity(markers.len());
        for marker in &markers {
            let candidate = marker.user;
            let chan = realization.user(candidate)?;
            let mut gammas = Vec::with_capacity(group_count);
            for y in 0..group_count {
                let group = &self.groups[y];
                let gains = chan
                    .gains_on_group(group)
                    .ok_or(ProtocolError::InconsistentState("candidate lacks full band"))?;
                let own_tone = u32::from(marker.group_row == group.index);
                gammas.push(sinr_probe_user(
                    &gains,
                    cfg.time_spread,
                    cfg.chip_energy,
                    self.occupancy.data_users[y],
                    probe_tally[y] - own_tone,
                    mean_sq[y],
                    cfg.noise_density,
                ));
            }
            let best = select_best_group(&gammas);
            grants.push(GrantRecord {
                user: candidate,
                group: best,
                chip_column: marker.chip_column,
                gammas,
            });
            let state = &mut self.users[(candidate - 1) as usize];
            state.phase = UserPhase::AwaitingGrant;
            state.assigned_group = Some(best);
            self.occupancy.probing_users[(marker.group_row - 1) as usize] -= 1;
        }

        // Data users consume one bit; completed bursts return to idle.
        let mut completed = Vec::new();
        for &(u, g) in &data_users {
            let state = &mut self.users[(u - 1) as usize];
            state.bits_remaining -= 1;
            if state.bits_remaining == 0 {
                let started = state
                    .burst_started_at
                    .ok_or(ProtocolError::InconsistentState("burst without start frame"))?;
                completed.push(BurstRecord {
                    user: u,
                    started_at: started,
                    completed_at: frame,
                    data_frames: cfg.burst_bits,
                });
                state.phase = UserPhase::Idle;
                state.assigned_group = None;
                state.burst_started_at = None;
                self.occupancy.data_users[(g - 1) as usize] -= 1;
            }
        }

        // Grants delivered this frame take effect now: the user transmits
        // data starting with the next frame.
        for g in &delivering {
            let state = &mut self.users[(g.user - 1) as usize];
            if state.phase != UserPhase::AwaitingGrant {
                return Err(ProtocolError::InconsistentState(
                    "grant delivered to a user not awaiting it",
                ));
            }
            state.phase = UserPhase::Data;
            state.assigned_group = Some(g.group);
            self.occupancy.data_users[(g.group - 1) as usize] += 1;
        }

        self.pending_grants = grants.clone();
        self.frame_index += 1;

        Ok(FrameRecord {
            frame,
            arrivals,
            probes: markers,
            grant_tones,
            grants,
            data_sinr,
            bits: tx_bits.len() as u32,
            bit_errors,
            completed_bursts: completed,
            occupancy: occupancy_snapshot,
        })
    }
}
