//! Outage approximation accuracy against the brute-force oracle.

use ofcdm_core::metrics::{
    draw_rayleigh_sum, outage_cdf_approx, outage_cdf_oracle, OutageParams,
};
use ofcdm_core::rng::{Domain, Stream};

fn threshold_grid(group_size: u32, sigma: f64, points: usize) -> Vec<f64> {
    let hi = 4.0 * group_size as f64 * sigma;
    (0..points)
        .map(|i| hi * i as f64 / (points - 1) as f64)
        .collect()
}

#[test]
fn approximation_tracks_oracle_for_size_eight() {
    let params = OutageParams::from_table(8, 1.0).unwrap();
    let grid = threshold_grid(8, 1.0, 129);
    let oracle = outage_cdf_oracle(&grid, 8, 1.0, 1_000_000, 91).unwrap();
    let mut max_gap: f64 = 0.0;
    for (i, &g) in grid.iter().enumerate() {
        let approx = outage_cdf_approx(g, &params).unwrap().value;
        max_gap = max_gap.max((approx - oracle[i]).abs());
    }
    assert!(max_gap <= 0.02, "sup gap {max_gap}");
}

#[test]
fn oracle_cdf_is_monotone_nondecreasing() {
    let grid = threshold_grid(8, 0.5, 65);
    let cdf = outage_cdf_oracle(&grid, 8, 0.5, 50_000, 5).unwrap();
    assert!(cdf.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(cdf[0], 0.0);
    assert!(cdf[cdf.len() - 1] > 0.999);
}

#[test]
fn single_rayleigh_oracle_matches_analytic_cdf() {
    let sigma = 0.9;
    let cdf = outage_cdf_oracle(&[sigma], 1, sigma, 1_000_000, 17).unwrap();
    let expected = 1.0 - (-0.5f64).exp();
    assert!(
        (cdf[0] - expected).abs() < 0.005,
        "F(sigma) = {}, expected {expected}",
        cdf[0]
    );
}

#[test]
fn amplitude_sum_mean_is_group_size_scaled() {
    let mut stream = Stream::derived(123, Domain::OutageOracle, &[0]);
    let samples = 200_000;
    let mut sum = 0.0;
    for _ in 0..samples {
        sum += draw_rayleigh_sum(8, 1.0, &mut stream);
    }
    let mean = sum / samples as f64;
    let expected = 8.0 * (core::f64::consts::PI / 2.0).sqrt();
    let rel = (mean - expected).abs() / expected;
    assert!(rel < 0.005, "mean {mean} vs {expected} (rel {rel})");
}

#[test]
fn raw_values_stay_inside_diagnostic_bounds() {
    for &(my, sigma) in &[(8u32, 0.5f64), (8, 1.0), (16, 0.5), (16, 1.0)] {
        let params = OutageParams::from_table(my, sigma).unwrap();
        for &g in &threshold_grid(my, sigma, 257) {
            let v = outage_cdf_approx(g, &params).unwrap();
            assert!(
                v.raw >= -0.005 && v.raw <= 1.005,
                "raw {} at threshold {g} for ({my}, {sigma})",
                v.raw
            );
            assert!((0.0..=1.0).contains(&v.value));
        }
    }
}

#[test]
fn oracle_is_deterministic_per_seed() {
    let grid = threshold_grid(8, 1.0, 17);
    let a = outage_cdf_oracle(&grid, 8, 1.0, 50_000, 7).unwrap();
    let b = outage_cdf_oracle(&grid, 8, 1.0, 50_000, 7).unwrap();
    let c = outage_cdf_oracle(&grid, 8, 1.0, 50_000, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
