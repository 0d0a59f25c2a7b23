//! Protocol behavior over randomized scenarios, plus traffic statistics.

use ofcdm_core::config::SystemConfig;
use ofcdm_core::metrics::ber_monte_carlo;
use ofcdm_core::protocol::{
    baseline_assign, draw_arrivals, select_best_group, SimMode, Simulation,
};

#[test]
fn baseline_assignment_is_uniform() {
    let group_count = 16u32;
    let draws = 400_000u64;
    let mut counts = vec![0u64; group_count as usize];
    for f in 0..draws {
        let g = baseline_assign(3, f, group_count, 2025);
        counts[(g - 1) as usize] += 1;
    }
    let expected = draws as f64 / group_count as f64;
    // chi-square goodness of fit, 15 dof, significance 0.01
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    assert!(chi2 < 30.58, "chi-square {chi2}");
    for &c in &counts {
        let rel = (c as f64 - expected).abs() / expected;
        assert!(rel < 0.02, "per-group relative deviation {rel}");
    }
}

#[test]
fn baseline_assignment_is_deterministic() {
    let a: Vec<u32> = (0..64).map(|f| baseline_assign(7, f, 8, 42)).collect();
    let b: Vec<u32> = (0..64).map(|f| baseline_assign(7, f, 8, 42)).collect();
    assert_eq!(a, b);
}

#[test]
fn arrival_frequency_matches_poisson_thinning() {
    let lambda = 0.1;
    let users: Vec<u32> = (1..=100).collect();
    let frames = 10_000u64;
    let mut hits = 0u64;
    for f in 0..frames {
        hits += draw_arrivals(&users, lambda, 4, f).len() as u64;
    }
    let freq = hits as f64 / (frames as f64 * users.len() as f64);
    let expected = 1.0 - (-lambda).exp();
    assert!(
        (freq - expected).abs() < 0.001,
        "arrival frequency {freq}, expected {expected}"
    );
}

/// Randomized scenario runner shared by the invariant checks below.
fn run_scenario(scenario: u64, mode: SimMode) {
    let mut s = ofcdm_core::rng::Stream::derived(
        0xC0FFEE,
        ofcdm_core::rng::Domain::Experiment,
        &[scenario],
    );
    let shapes: [(u32, u32, u32); 4] = [(16, 4, 2), (32, 8, 4), (64, 8, 4), (128, 16, 4)];
    let (m, my, n) = shapes[s.below(4) as usize];
    let group_count = m / my;
    let capacity = group_count * n;
    let max_users = 1 + s.below(capacity.min(24) as u64) as u32;
    let mut cfg = SystemConfig::with_spreading(m, my, n, max_users);
    cfg.burst_bits = 1 + s.below(5) as u32;
    cfg.arrival_rate = 0.05 + 0.4 * s.uniform();
    cfg.noise_density = 0.5;
    cfg.master_seed = s.next_u64();
    let mut sim = Simulation::from_config(cfg.clone(), mode).unwrap();

    let frames = 50u64;
    let mut pending_spans: Vec<u64> = Vec::new();
    for _ in 0..frames {
        let rec = sim.advance_frame().unwrap();

        // no two uplink probes on one cell
        let mut cells: Vec<(u32, u32)> = rec
            .probes
            .iter()
            .map(|p| (p.group_row, p.chip_column))
            .collect();
        cells.sort_unstable();
        let len = cells.len();
        cells.dedup();
        assert_eq!(cells.len(), len, "probe collision in scenario {scenario}");

        // no two downlink grant tones on one cell
        let mut tones: Vec<(u32, u32)> = rec
            .grant_tones
            .iter()
            .map(|t| (t.group, t.chip_column))
            .collect();
        tones.sort_unstable();
        let len = tones.len();
        tones.dedup();
        assert_eq!(tones.len(), len, "grant collision in scenario {scenario}");

        // every grant is the argmax of its logged per-group values
        for g in &rec.grants {
            assert_eq!(
                select_best_group(&g.gammas),
                g.group,
                "non-optimal grant in scenario {scenario}"
            );
            assert_eq!(g.gammas.len(), cfg.group_count as usize);
        }

        if mode == SimMode::Baseline {
            assert!(rec.probes.is_empty());
            assert!(rec.grant_tones.is_empty());
        }

        for b in &rec.completed_bursts {
            pending_spans.push(b.span());
            assert_eq!(b.data_frames, cfg.burst_bits);
        }

        assert_eq!(&sim.recompute_occupancy(), sim.occupancy());
    }
    let expected_span = match mode {
        SimMode::Probing => cfg.burst_bits as u64 + 2,
        SimMode::Baseline => cfg.burst_bits as u64,
    };
    for span in pending_spans {
        assert_eq!(span, expected_span);
    }
}

#[test]
fn randomized_scenarios_respect_protocol_invariants() {
    for scenario in 0..100 {
        run_scenario(scenario, SimMode::Probing);
        run_scenario(scenario, SimMode::Baseline);
    }
}

#[test]
fn ber_curve_is_bitwise_reproducible() {
    let mut cfg = SystemConfig::with_spreading(16, 4, 2, 4);
    cfg.burst_bits = 5;
    cfg.arrival_rate = 0.3;
    cfg.master_seed = 77;
    let a = ber_monte_carlo(&cfg, SimMode::Probing, &[2.0, 6.0], 300).unwrap();
    let b = ber_monte_carlo(&cfg, SimMode::Probing, &[2.0, 6.0], 300).unwrap();
    assert_eq!(a, b);
}

#[test]
fn lone_user_at_high_snr_sees_no_errors() {
    let mut cfg = SystemConfig::with_spreading(16, 4, 2, 1);
    cfg.burst_bits = 20;
    cfg.arrival_rate = 0.5;
    cfg.master_seed = 31;
    let curve = ber_monte_carlo(&cfg, SimMode::Probing, &[60.0], 400).unwrap();
    let p = &curve.points[0];
    assert!(p.bits > 0);
    assert_eq!(p.bit_errors, 0);
    assert_eq!(p.ber(), Some(0.0));
}

#[test]
fn ber_curve_rejects_bad_grids_and_zero_frames() {
    let cfg = SystemConfig::with_spreading(16, 4, 2, 4);
    assert!(ber_monte_carlo(&cfg, SimMode::Probing, &[], 10).is_err());
    assert!(ber_monte_carlo(&cfg, SimMode::Probing, &[3.0, 1.0], 10).is_err());
    assert!(ber_monte_carlo(&cfg, SimMode::Probing, &[0.0], 0).is_err());
}
