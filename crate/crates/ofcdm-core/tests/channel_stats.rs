//! Distributional checks of the fading and noise generators.

use ofcdm_core::channel::{draw_frame_channel, draw_noise, ChannelNeed};
use ofcdm_core::rng::ChannelStream;

const SIGMA_UNIT_POWER: f64 = core::f64::consts::FRAC_1_SQRT_2;

fn gain_samples(count: usize, sigma: f64, seed: u64) -> Vec<f64> {
    // 1000 subcarriers per frame, one user, as many frames as needed.
    let per_frame = 1000u32;
    let frames = count.div_ceil(per_frame as usize);
    let mut out = Vec::with_capacity(count);
    for f in 0..frames {
        let real =
            draw_frame_channel(&[(1, ChannelNeed::Full)], per_frame, sigma, seed, f as u64)
                .unwrap();
        out.extend_from_slice(&real.user(1).unwrap().gains);
    }
    out.truncate(count);
    out
}

#[test]
fn mean_square_gain_is_twice_sigma_squared() {
    let n = 1_000_000;
    let samples = gain_samples(n, SIGMA_UNIT_POWER, 2024);
    let mean_sq = samples.iter().map(|g| g * g).sum::<f64>() / n as f64;
    assert!(
        (mean_sq - 1.0).abs() < 0.01,
        "E[gain^2] = {mean_sq}, expected 1.0 +/- 0.01"
    );
}

#[test]
fn gain_cdf_matches_rayleigh_at_sigma() {
    let n = 1_000_000;
    let sigma = 0.8;
    let samples = gain_samples(n, sigma, 55);
    let frac = samples.iter().filter(|&&g| g <= sigma).count() as f64 / n as f64;
    let expected = 1.0 - (-0.5f64).exp();
    assert!(
        (frac - expected).abs() < 0.005,
        "F(sigma) = {frac}, expected {expected} +/- 0.005"
    );
}

#[test]
fn kolmogorov_smirnov_against_rayleigh() {
    let n = 100_000;
    let sigma = 1.3;
    let mut samples = gain_samples(n, sigma, 7);
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut d_stat: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = 1.0 - (-x * x / (2.0 * sigma * sigma)).exp();
        let emp_hi = (i + 1) as f64 / n as f64;
        let emp_lo = i as f64 / n as f64;
        d_stat = d_stat.max((emp_hi - f).abs()).max((f - emp_lo).abs());
    }
    // critical value at significance 0.01
    let d_crit = 1.628 / (n as f64).sqrt();
    assert!(
        d_stat < d_crit,
        "KS statistic {d_stat} exceeds critical {d_crit}"
    );
}

#[test]
fn gains_are_independent_across_frames() {
    let n = 100_000u64;
    let sigma = SIGMA_UNIT_POWER;
    let series: Vec<f64> = (0..=n)
        .map(|f| ChannelStream::new(99, f, 1).gain(0, sigma))
        .collect();
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let var = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / series.len() as f64;
    let mut cov = 0.0;
    for w in series.windows(2) {
        cov += (w[0] - mean) * (w[1] - mean);
    }
    cov /= n as f64;
    let r = cov / var;
    assert!(r.abs() < 0.01, "lag-1 correlation {r}");
}

#[test]
fn noise_cell_power_matches_density() {
    // Complex cell power is the density; each quadrature carries half, so the
    // post-derotation real part seen by the detector has variance No/2.
    let no = 2.0;
    let mut sum_sq = 0.0;
    let mut sum_rot_re_sq = 0.0;
    let mut cells = 0usize;
    let rot = num_complex::Complex64::new((0.7f64).cos(), -(0.7f64).sin());
    for frame in 0..250 {
        let grid = draw_noise(100, 40, no, 31, frame).unwrap();
        for z in &grid {
            sum_sq += z.norm_sqr();
            let r = (rot * z).re;
            sum_rot_re_sq += r * r;
        }
        cells += grid.len();
    }
    let cell_power = sum_sq / cells as f64;
    let rot_re_var = sum_rot_re_sq / cells as f64;
    assert!(
        (cell_power - no).abs() / no < 0.02,
        "cell power {cell_power}, expected {no} +/- 2%"
    );
    assert!(
        (rot_re_var - no / 2.0).abs() / (no / 2.0) < 0.02,
        "rotated real-part variance {rot_re_var}, expected {} +/- 2%",
        no / 2.0
    );
}
