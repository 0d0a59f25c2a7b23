//! Reusable verification primitives shared by the `validate` subcommand and
//! the acceptance suite.

use ofcdm_core::channel::{draw_frame_channel, draw_noise, ChannelNeed};
use ofcdm_core::grouping::build_subcarrier_groups;
use ofcdm_core::metrics::{
    outage_cdf_approx, outage_cdf_oracle, q_function, OutageParams,
};
use ofcdm_core::phy::{
    compose_frame, desired_power, despread, generate_pn_code, interference_power, noise_power,
    spread_bit,
};
use ofcdm_core::protocol::{select_best_group, SimMode, Simulation};
use ofcdm_core::rng::{Domain, Stream};
use ofcdm_core::SystemConfig;

/// High-precision standard normal tail, independent of the production
/// implementation: an all-positive-terms series for small arguments and the
/// Laplace continued fraction for the tail. Absolute error well below 1e-15
/// on `[-8, 8]`.
pub fn normal_tail_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - normal_tail_oracle(-x);
    }
    let pdf = (-0.5 * x * x).exp() / (2.0 * core::f64::consts::PI).sqrt();
    if x < 3.0 {
        // Q(x) = 1/2 - pdf(x) * sum_{k>=0} x^(2k+1) / (2k+1)!!
        let mut term = x;
        let mut sum = x;
        let mut k = 1u32;
        while term.abs() > 1e-20 * sum.abs() && k < 500 {
            term *= x * x / (2 * k + 1) as f64;
            sum += term;
            k += 1;
        }
        0.5 - pdf * sum
    } else {
        // Q(x) = pdf(x) / (x + 1/(x + 2/(x + 3/(x + ...))))
        let mut t = x;
        for n in (1..=256u32).rev() {
            t = x + n as f64 / t;
        }
        pdf / t
    }
}

/// Largest absolute error of the production Q-function against the oracle on
/// an even grid over `[-8, 8]`.
pub fn q_function_max_abs_error(points: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let x = -8.0 + 16.0 * i as f64 / (points - 1) as f64;
        worst = worst.max((q_function(x) - normal_tail_oracle(x)).abs());
    }
    worst
}

/// Outcome of a Monte Carlo power-formula comparison.
#[derive(Debug, Clone, Copy)]
pub struct PowerCheck {
    pub empirical: f64,
    pub predicted: f64,
}

impl PowerCheck {
    pub fn rel_error(&self) -> f64 {
        (self.empirical - self.predicted).abs() / self.predicted
    }
}

const MY: u32 = 8;
const N_CHIPS: u32 = 8;
const SIGMA: f64 = core::f64::consts::FRAC_1_SQRT_2;

fn fixed_group_channel(seed: u64, users: u32, tag: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let groups = build_subcarrier_groups(MY, MY).unwrap();
    let needs: Vec<(u32, ChannelNeed)> = (1..=users)
        .map(|u| (u, ChannelNeed::Group(&groups[0])))
        .collect();
    let real = draw_frame_channel(&needs, MY, SIGMA, seed, tag).unwrap();
    (1..=users)
        .map(|u| real.user(u).unwrap().view_on_group(&groups[0]).unwrap())
        .collect()
}

/// Variance of the despread correlation of a lone user over random codes and
/// bits, against the analytic desired power.
pub fn desired_power_check(frames: u64, seed: u64) -> PowerCheck {
    let groups = build_subcarrier_groups(MY, MY).unwrap();
    let g = &groups[0];
    let (gains, phases) = fixed_group_channel(seed, 1, 0).remove(0);
    let mut sum_sq = 0.0;
    for f in 0..frames {
        let code = generate_pn_code(1, f, MY, N_CHIPS, seed);
        let bit = Stream::derived(seed, Domain::Payload, &[f, 1]).chip();
        let tx = spread_bit(bit, &code, &gains, &phases, g, 1.0).unwrap();
        let frame = compose_frame(&[tx], &[], None, MY, N_CHIPS).unwrap();
        let rx = despread(&frame, &code, &gains, &phases, g).unwrap();
        sum_sq += rx.correlation.norm_sqr();
    }
    PowerCheck {
        empirical: sum_sq / frames as f64,
        predicted: desired_power(&gains, N_CHIPS, 1.0),
    }
}

/// Variance of the noise-only despread correlation against the analytic
/// noise power.
pub fn noise_power_check(frames: u64, seed: u64) -> PowerCheck {
    let groups = build_subcarrier_groups(MY, MY).unwrap();
    let g = &groups[0];
    let no = 2.0;
    let (gains, phases) = fixed_group_channel(seed, 1, 0).remove(0);
    let mut sum_sq = 0.0;
    for f in 0..frames {
        let code = generate_pn_code(1, f, MY, N_CHIPS, seed);
        let noise = draw_noise(MY, N_CHIPS, no, seed, f).unwrap();
        let frame = compose_frame(&[], &[], Some(&noise), MY, N_CHIPS).unwrap();
        let rx = despread(&frame, &code, &gains, &phases, g).unwrap();
        sum_sq += rx.correlation.norm_sqr();
    }
    PowerCheck {
        empirical: sum_sq / frames as f64,
        predicted: noise_power(&gains, N_CHIPS, no),
    }
}

/// Multiple-access interference power with eight same-group users against
/// the central-limit expression, aggregated over channel realizations (the
/// expression is an ensemble statement).
pub fn interference_power_check(realizations: u64, frames_each: u64, seed: u64) -> PowerCheck {
    let groups = build_subcarrier_groups(MY, MY).unwrap();
    let g = &groups[0];
    let users = 8u32;
    let mut emp_sum = 0.0;
    let mut pred_sum = 0.0;
    for r in 0..realizations {
        let views = fixed_group_channel(seed, users, r);
        let (ref_gains, ref_phases) = &views[0];
        let mean_sq = views
            .iter()
            .flat_map(|(gv, _)| gv.iter().map(|x| x * x))
            .sum::<f64>()
            / (users as usize * g.members.len()) as f64;
        pred_sum += interference_power(ref_gains, N_CHIPS, 1.0, users, 0, mean_sq);
        let mut sum_sq = 0.0;
        for f in 0..frames_each {
            let fkey = r * frames_each + f;
            let mut contribs = Vec::new();
            for u in 2..=users {
                let code = generate_pn_code(u, fkey, MY, N_CHIPS, seed ^ 0x5A5A);
                let bit =
                    Stream::derived(seed ^ 0x5A5A, Domain::Payload, &[fkey, u as u64]).chip();
                let (gv, pv) = &views[(u - 1) as usize];
                contribs.push(spread_bit(bit, &code, gv, pv, g, 1.0).unwrap());
            }
            let ref_code = generate_pn_code(1, fkey, MY, N_CHIPS, seed ^ 0x5A5A);
            let frame = compose_frame(&contribs, &[], None, MY, N_CHIPS).unwrap();
            let rx = despread(&frame, &ref_code, ref_gains, ref_phases, g).unwrap();
            sum_sq += rx.correlation.norm_sqr();
        }
        emp_sum += sum_sq / frames_each as f64;
    }
    PowerCheck {
        empirical: emp_sum,
        predicted: pred_sum,
    }
}

/// Outcome of the conditional-BER comparison.
#[derive(Debug, Clone, Copy)]
pub struct BerCheck {
    pub ber: f64,
    pub predicted: f64,
    pub ci99_half_width: f64,
    pub frames: u64,
}

impl BerCheck {
    pub fn inside_interval(&self) -> bool {
        (self.ber - self.predicted).abs() <= self.ci99_half_width
    }
}

/// Chip-level BER of a lone user on one fixed fading realization, against
/// the Gaussian tail of the analytic desired/noise powers.
pub fn conditional_ber_check(frames: u64, seed: u64) -> BerCheck {
    let groups = build_subcarrier_groups(MY, MY).unwrap();
    let g = &groups[0];
    let (gains, phases) = fixed_group_channel(seed, 1, 0).remove(0);
    let a = gains.iter().map(|x| x * x).sum::<f64>();
    let no = 2.4 * N_CHIPS as f64 * a; // operating point near Pe ~ 4e-2
    let mut errors = 0u64;
    for f in 0..frames {
        let code = generate_pn_code(1, f, MY, N_CHIPS, seed);
        let bit = Stream::derived(seed, Domain::Payload, &[f, 1]).chip();
        let tx = spread_bit(bit, &code, &gains, &phases, g, 1.0).unwrap();
        let noise = draw_noise(MY, N_CHIPS, no, seed, f).unwrap();
        let frame = compose_frame(&[tx], &[], Some(&noise), MY, N_CHIPS).unwrap();
        let rx = despread(&frame, &code, &gains, &phases, g).unwrap();
        if rx.bit != bit {
            errors += 1;
        }
    }
    let pd = desired_power(&gains, N_CHIPS, 1.0);
    let pn = noise_power(&gains, N_CHIPS, no);
    let predicted = q_function((2.0 * pd / pn).sqrt());
    BerCheck {
        ber: errors as f64 / frames as f64,
        predicted,
        ci99_half_width: 2.5758293035489
            * (predicted * (1.0 - predicted) / frames as f64).sqrt(),
        frames,
    }
}

/// Returns the first duplicated cell, if any.
pub fn find_cell_collision(cells: &[(u32, u32)]) -> Option<(u32, u32)> {
    let mut sorted = cells.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).find(|w| w[0] == w[1]).map(|w| w[0])
}

/// Counters aggregated over the randomized protocol battery.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProtocolBattery {
    pub scenarios: u64,
    pub frames: u64,
    pub grants_checked: u64,
    pub bursts_checked: u64,
    pub probe_collisions: u64,
    pub grant_tone_collisions: u64,
    pub argmax_violations: u64,
    pub burst_span_mismatches: u64,
    pub occupancy_mismatches: u64,
}

/// Runs `scenarios` randomized configurations for `frames_each` frames in
/// both scheduler modes, counting every invariant violation.
pub fn protocol_invariant_battery(
    scenarios: u64,
    frames_each: u64,
    seed: u64,
) -> ProtocolBattery {
    let mut out = ProtocolBattery::default();
    for scenario in 0..scenarios {
        for mode in [SimMode::Probing, SimMode::Baseline] {
            let mut s = Stream::derived(seed, Domain::Experiment, &[scenario]);
            let shapes: [(u32, u32, u32); 4] =
                [(16, 4, 2), (32, 8, 4), (64, 8, 4), (128, 16, 4)];
            let (m, my, n) = shapes[s.below(4) as usize];
            let group_count = m / my;
            let capacity = group_count * n;
            let max_users = 1 + s.below(capacity.min(24) as u64) as u32;
            let mut cfg = SystemConfig::with_spreading(m, my, n, max_users);
            cfg.burst_bits = 1 + s.below(5) as u32;
            cfg.arrival_rate = 0.05 + 0.4 * s.uniform();
            cfg.noise_density = 0.5;
            cfg.master_seed = s.next_u64();
            let expected_span = match mode {
                SimMode::Probing => cfg.burst_bits as u64 + 2,
                SimMode::Baseline => cfg.burst_bits as u64,
            };
            let mut sim = Simulation::from_config(cfg.clone(), mode).unwrap();
            out.scenarios += 1;
            for _ in 0..frames_each {
                let rec = sim.advance_frame().unwrap();
                out.frames += 1;
                let probe_cells: Vec<(u32, u32)> = rec
                    .probes
                    .iter()
                    .map(|p| (p.group_row, p.chip_column))
                    .collect();
                if find_cell_collision(&probe_cells).is_some() {
                    out.probe_collisions += 1;
                }
                let tone_cells: Vec<(u32, u32)> = rec
                    .grant_tones
                    .iter()
                    .map(|t| (t.group, t.chip_column))
                    .collect();
                if find_cell_collision(&tone_cells).is_some() {
                    out.grant_tone_collisions += 1;
                }
                for g in &rec.grants {
                    out.grants_checked += 1;
                    if select_best_group(&g.gammas) != g.group {
                        out.argmax_violations += 1;
                    }
                }
                for b in &rec.completed_bursts {
                    out.bursts_checked += 1;
                    if b.span() != expected_span || b.data_frames != cfg.burst_bits {
                        out.burst_span_mismatches += 1;
                    }
                }
                if &sim.recompute_occupancy() != sim.occupancy() {
                    out.occupancy_mismatches += 1;
                }
            }
        }
    }
    out
}

impl ProtocolBattery {
    pub fn clean(&self) -> bool {
        self.probe_collisions == 0
            && self.grant_tone_collisions == 0
            && self.argmax_violations == 0
            && self.burst_span_mismatches == 0
            && self.occupancy_mismatches == 0
    }
}

/// Sup-norm gap between the closed-form outage CDF and the brute-force
/// oracle over an even grid spanning `[0, 4 * group_size * sigma]`.
pub fn outage_sup_gap(
    group_size: u32,
    sigma: f64,
    samples: u64,
    points: usize,
    seed: u64,
) -> f64 {
    let params = OutageParams::from_table(group_size, sigma).unwrap();
    let hi = 4.0 * group_size as f64 * sigma;
    let grid: Vec<f64> = (0..points)
        .map(|i| hi * i as f64 / (points - 1) as f64)
        .collect();
    let oracle = outage_cdf_oracle(&grid, group_size, sigma, samples, seed).unwrap();
    grid.iter()
        .enumerate()
        .map(|(i, &g)| (outage_cdf_approx(g, &params).unwrap().value - oracle[i]).abs())
        .fold(0.0f64, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_known_tail_values() {
        assert!((normal_tail_oracle(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_tail_oracle(1.0) - 0.15865525393145705).abs() < 1e-15);
        assert!((normal_tail_oracle(3.0) - 1.3498980316300946e-3).abs() < 1e-17);
        // continuity across the series / continued-fraction switch
        let lo = normal_tail_oracle(3.0 - 1e-12);
        let hi = normal_tail_oracle(3.0 + 1e-12);
        assert!((lo - hi).abs() < 1e-14);
    }

    #[test]
    fn collision_finder_detects_injected_duplicates() {
        assert_eq!(find_cell_collision(&[(1, 2), (3, 4)]), None);
        assert_eq!(find_cell_collision(&[(1, 2), (3, 4), (1, 2)]), Some((1, 2)));
    }

    #[test]
    fn q_function_tracks_oracle() {
        assert!(q_function_max_abs_error(100) <= 1e-7);
    }
}
