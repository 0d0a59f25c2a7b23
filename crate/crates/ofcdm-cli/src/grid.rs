//! `start:step:stop` grid specifications.

/// Parses a grid spec: either a single value or `start:step:stop` inclusive
/// of both ends (the stop is included up to a small rounding slack).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<f64, String> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{s}` is not a number in grid `{spec}`"))
    };
    match parts.as_slice() {
        [one] => Ok(vec![num(one)?]),
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if !(step > 0.0) {
                return Err(format!("grid step must be positive in `{spec}`"));
            }
            if stop < start {
                return Err(format!("grid stop below start in `{spec}`"));
            }
            let count = ((stop - start) / step + 1.0 + 1e-9).floor() as usize;
            Ok((0..count).map(|i| start + step * i as f64).collect())
        }
        _ => Err(format!("grid `{spec}` must be `value` or `start:step:stop`")),
    }
}

/// Parses a comma-separated list of numbers (`"0.5,1"`).
pub fn parse_list(spec: &str) -> Result<Vec<f64>, String> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{s}` is not a number in list `{spec}`"))
        })
        .collect()
}

/// Parses spreading shapes like `"16x4,8x8"` into `(group_size, time_spread)`
/// pairs.
pub fn parse_spreading_shapes(spec: &str) -> Result<Vec<(u32, u32)>, String> {
    spec.split(',')
        .map(|s| {
            let (a, b) = s
                .trim()
                .split_once(['x', 'X'])
                .ok_or_else(|| format!("`{s}` is not of the form MxN"))?;
            let my = a
                .trim()
                .parse::<u32>()
                .map_err(|_| format!("`{a}` is not an integer in `{s}`"))?;
            let n = b
                .trim()
                .parse::<u32>()
                .map_err(|_| format!("`{b}` is not an integer in `{s}`"))?;
            Ok((my, n))
        })
        .collect()
}
