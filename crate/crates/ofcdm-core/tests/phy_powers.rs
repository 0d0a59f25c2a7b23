//! Empirical verification of the analytic power chain and detection.

use num_complex::Complex64;
use ofcdm_core::channel::{draw_frame_channel, draw_noise, ChannelNeed};
use ofcdm_core::grouping::{assign_probe_identifiers, build_subcarrier_groups};
use ofcdm_core::metrics::q_function;
use ofcdm_core::phy::{
    compose_frame, desired_power, despread, generate_pn_code, interference_power, noise_power,
    place_probe, sinr_data_user, spread_bit,
};
use ofcdm_core::protocol::scan_probes;
use ofcdm_core::rng::{Domain, Stream};
use proptest::prelude::*;

/// Deterministic fixed channel for one user over one group.
fn fixed_channel(len: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut s = Stream::derived(seed, Domain::Channel, &[0, 0]);
    let gains = (0..len)
        .map(|_| s.rayleigh(core::f64::consts::FRAC_1_SQRT_2))
        .collect();
    let phases = (0..len).map(|_| s.phase()).collect();
    (gains, phases)
}

#[test]
fn desired_component_variance_matches_formula() {
    let groups = build_subcarrier_groups(8, 8).unwrap();
    let g = &groups[0];
    let n_chips = 8u32;
    let (gains, phases) = fixed_channel(8, 41);
    let frames = 20_000u64;
    let mut sum_sq = 0.0;
    for f in 0..frames {
        let code = generate_pn_code(1, f, 8, n_chips, 91);
        let bit = Stream::derived(91, Domain::Payload, &[f, 1]).chip();
        let tx = spread_bit(bit, &code, &gains, &phases, g, 1.0).unwrap();
        let frame = compose_frame(&[tx], &[], None, 8, n_chips).unwrap();
        let rx = despread(&frame, &code, &gains, &phases, g).unwrap();
        sum_sq += rx.correlation.norm_sqr();
        assert_eq!(rx.bit, bit);
    }
    let emp = sum_sq / frames as f64;
    let formula = desired_power(&gains, n_chips, 1.0);
    let rel = (emp - formula).abs() / formula;
    assert!(rel < 0.01, "desired power {emp} vs {formula} (rel {rel})");
}

#[test]
fn noise_component_variance_matches_formula() {
    let groups = build_subcarrier_groups(8, 8).unwrap();
    let g = &groups[0];
    let n_chips = 8u32;
    let no = 2.0;
    let (gains, phases) = fixed_channel(8, 42);
    let frames = 20_000u64;
    let mut sum_sq = 0.0;
    for f in 0..frames {
        let code = generate_pn_code(1, f, 8, n_chips, 92);
        let noise = draw_noise(8, n_chips, no, 92, f).unwrap();
        let frame = compose_frame(&[], &[], Some(&noise), 8, n_chips).unwrap();
        let rx = despread(&frame, &code, &gains, &phases, g).unwrap();
        sum_sq += rx.correlation.norm_sqr();
    }
    let emp = sum_sq / frames as f64;
    let formula = noise_power(&gains, n_chips, no);
    let rel = (emp - formula).abs() / formula;
    assert!(rel < 0.02, "noise power {emp} vs {formula} (rel {rel})");
}

#[test]
fn interference_variance_matches_gaussian_approximation() {
    // Eight same-group users, fixed channel per realization, noiseless.
    // The central-limit expression is an ensemble statement, so the check
    // averages the empirical and predicted powers over several realizations.
    let groups = build_subcarrier_groups(8, 8).unwrap();
    let g = &groups[0];
    let n_chips = 8u32;
    let users = 8u32;
    let realizations = 24u64;
    let frames_each = 2_000u64;
    let mut emp_sum = 0.0;
    let mut pred_sum = 0.0;
    for r in 0..realizations {
        let needs: Vec<(u32, ChannelNeed)> =
            (1..=users).map(|u| (u, ChannelNeed::Group(g))).collect();
        let real = draw_frame_channel(&needs, 8, core::f64::consts::FRAC_1_SQRT_2, 1234, r)
            .unwrap();
        let views: Vec<(Vec<f64>, Vec<f64>)> = (1..=users)
            .map(|u| real.user(u).unwrap().view_on_group(g).unwrap())
            .collect();
        let (ref_gains, ref_phases) = &views[0];

        let mut mean_sq = 0.0;
        for (gv, _) in &views {
            mean_sq += gv.iter().map(|x| x * x).sum::<f64>();
        }
        mean_sq /= (users as usize * g.members.len()) as f64;
        pred_sum += interference_power(ref_gains, n_chips, 1.0, users, 0, mean_sq);

        let mut sum_sq = 0.0;
        for f in 0..frames_each {
            let fkey = r * frames_each + f;
            let mut contribs = Vec::new();
            let mut ref_code = None;
            for u in 1..=users {
                let code = generate_pn_code(u, fkey, 8, n_chips, 777);
                let bit = Stream::derived(777, Domain::Payload, &[fkey, u as u64]).chip();
                if u == 1 {
                    ref_code = Some(code.clone());
                    continue; // measure interference only: reference silent
                }
                let (gv, pv) = &views[(u - 1) as usize];
                contribs.push(spread_bit(bit, &code, gv, pv, g, 1.0).unwrap());
            }
            let frame = compose_frame(&contribs, &[], None, 8, n_chips).unwrap();
            let rx = despread(&frame, &ref_code.unwrap(), ref_gains, ref_phases, g).unwrap();
            sum_sq += rx.correlation.norm_sqr();
        }
        emp_sum += sum_sq / frames_each as f64;
    }
    let ratio = emp_sum / pred_sum;
    assert!(
        (ratio - 1.0).abs() < 0.15,
        "interference power ratio {ratio} outside 15%"
    );
}

#[test]
fn probe_tone_interference_matches_formula() {
    // One probing tone against a data user: variance of the cross term is
    // chip_energy * mean_sq per tone, scaled by the reference gains.
    let groups = build_subcarrier_groups(16, 8).unwrap();
    let g = &groups[0]; // members 1, 3, 5, ...
    let ids = assign_probe_identifiers(2, 2, 4).unwrap();
    let prober = ids[0]; // user 1 probes on row 1 = group 1
    let n_chips = 4u32;
    let realizations = 24u64;
    let frames_each = 2_000u64;
    let mut emp_sum = 0.0;
    let mut pred_sum = 0.0;
    for r in 0..realizations {
        let needs: Vec<(u32, ChannelNeed)> = vec![
            (1, ChannelNeed::Group(g)),
            (2, ChannelNeed::Group(g)),
        ];
        let real =
            draw_frame_channel(&needs, 16, core::f64::consts::FRAC_1_SQRT_2, 555, r).unwrap();
        let (probe_gains, probe_phases) = real.user(1).unwrap().view_on_group(g).unwrap();
        let (ref_gains, ref_phases) = real.user(2).unwrap().view_on_group(g).unwrap();

        let mean_sq = (probe_gains.iter().chain(ref_gains.iter()))
            .map(|x| x * x)
            .sum::<f64>()
            / (2 * g.members.len()) as f64;
        pred_sum += ref_gains.iter().map(|x| x * x).sum::<f64>() * mean_sq;

        let probe_tx =
            place_probe(1, &prober, &probe_gains, &probe_phases, g, 1.0).unwrap();
        let mut sum_sq = 0.0;
        for f in 0..frames_each {
            let fkey = r * frames_each + f;
            let code = generate_pn_code(2, fkey, 8, n_chips, 888);
            let frame =
                compose_frame(&[], &[probe_tx.clone()], None, 16, n_chips).unwrap();
            let rx = despread(&frame, &code, &ref_gains, &ref_phases, g).unwrap();
            sum_sq += rx.correlation.norm_sqr();
        }
        emp_sum += sum_sq / frames_each as f64;
    }
    let ratio = emp_sum / pred_sum;
    assert!(
        (ratio - 1.0).abs() < 0.15,
        "probe interference ratio {ratio} outside 15%"
    );
}

#[test]
fn noiseless_roundtrip_over_fading_is_error_free() {
    let groups = build_subcarrier_groups(32, 8).unwrap();
    let g = &groups[3];
    let n_chips = 4u32;
    for f in 0..100u64 {
        let real = draw_frame_channel(
            &[(1, ChannelNeed::Group(g))],
            32,
            core::f64::consts::FRAC_1_SQRT_2,
            64,
            f,
        )
        .unwrap();
        let (gains, phases) = real.user(1).unwrap().view_on_group(g).unwrap();
        let code = generate_pn_code(1, f, 8, n_chips, 64);
        let bit = Stream::derived(64, Domain::Payload, &[f, 1]).chip();
        let tx = spread_bit(bit, &code, &gains, &phases, g, 1.0).unwrap();
        let frame = compose_frame(&[tx], &[], None, 32, n_chips).unwrap();
        let rx = despread(&frame, &code, &gains, &phases, g).unwrap();
        assert_eq!(rx.bit, bit, "frame {f}");
    }
}

#[test]
fn conditional_ber_matches_gaussian_tail() {
    // Fixed channel, single user, pure noise: the decision statistic is
    // exactly Gaussian, so the error rate must sit inside the 99% binomial
    // interval around Q(sqrt(2 Pd / Pn)).
    let groups = build_subcarrier_groups(8, 8).unwrap();
    let g = &groups[0];
    let n_chips = 8u32;
    let (gains, phases) = fixed_channel(8, 48);
    let a = gains.iter().map(|x| x * x).sum::<f64>();
    let no = 3.0 * n_chips as f64 * a; // places Q(sqrt(2Pd/Pn)) near 5e-2
    let frames = 30_000u64;
    let mut errors = 0u64;
    for f in 0..frames {
        let code = generate_pn_code(1, f, 8, n_chips, 93);
        let bit = Stream::derived(93, Domain::Payload, &[f, 1]).chip();
        let tx = spread_bit(bit, &code, &gains, &phases, g, 1.0).unwrap();
        let noise = draw_noise(8, n_chips, no, 93, f).unwrap();
        let frame = compose_frame(&[tx], &[], Some(&noise), 8, n_chips).unwrap();
        let rx = despread(&frame, &code, &gains, &phases, g).unwrap();
        if rx.bit != bit {
            errors += 1;
        }
    }
    let ber = errors as f64 / frames as f64;
    let pd = desired_power(&gains, n_chips, 1.0);
    let pn = noise_power(&gains, n_chips, no);
    let predicted = q_function((2.0 * pd / pn).sqrt());
    let ci99 = 2.5758 * (predicted * (1.0 - predicted) / frames as f64).sqrt();
    assert!(
        (ber - predicted).abs() < ci99,
        "ber {ber} vs predicted {predicted} +/- {ci99}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probes_from_distinct_identifiers_never_overlap(
        rows in 2u32..=16,
        cols in 1u32..=8,
        pick in prop::collection::vec(any::<bool>(), 1..=64),
        seed in any::<u64>(),
    ) {
        let capacity = rows * cols;
        let users: Vec<u32> = pick
            .iter()
            .take(capacity as usize)
            .enumerate()
            .filter_map(|(i, &p)| p.then_some(i as u32 + 1))
            .collect();
        prop_assume!(!users.is_empty());
        let total = rows * 4;
        let groups = build_subcarrier_groups(total, 4).unwrap();
        let ids = assign_probe_identifiers(capacity, rows, cols).unwrap();
        let mut contribs = Vec::new();
        for &u in &users {
            let id = ids[(u - 1) as usize];
            let row_group = &groups[(id.group_row - 1) as usize];
            let real = draw_frame_channel(
                &[(u, ChannelNeed::Group(row_group))],
                total,
                1.0,
                seed,
                0,
            )
            .unwrap();
            let (gv, pv) = real.user(u).unwrap().view_on_group(row_group).unwrap();
            contribs.push(place_probe(u, &id, &gv, &pv, row_group, 1.0).unwrap());
        }
        let frame = compose_frame(&[], &contribs, None, total, cols).unwrap();
        // pairwise-distinct cells
        let mut cells: Vec<(u32, u32)> = frame
            .probe_map
            .iter()
            .map(|m| (m.group_row, m.chip_column))
            .collect();
        cells.sort_unstable();
        let before = cells.len();
        cells.dedup();
        prop_assert_eq!(cells.len(), before);
        // the receiver recovers exactly the probing users
        let markers = scan_probes(&frame, &ids).unwrap();
        let mut recovered: Vec<u32> = markers.iter().map(|m| m.user).collect();
        recovered.sort_unstable();
        let mut expected = users.clone();
        expected.sort_unstable();
        prop_assert_eq!(recovered, expected);
    }

    #[test]
    fn data_sinr_strictly_decreases_with_load(
        k in 1u32..20,
        probes in 0u32..16,
        mean_sq in 0.05f64..4.0,
        no in 0.01f64..10.0,
    ) {
        let gains = [0.9, 0.4, 1.3, 0.7];
        let base = sinr_data_user(&gains, 4, 1.0, k, probes, mean_sq, no);
        let more_users = sinr_data_user(&gains, 4, 1.0, k + 1, probes, mean_sq, no);
        let more_probes = sinr_data_user(&gains, 4, 1.0, k, probes + 1, mean_sq, no);
        prop_assert!(more_users < base);
        prop_assert!(more_probes < base);
    }
}
