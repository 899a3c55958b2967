//! Sweep grids: `start:stop:step` (inclusive) or comma-separated values.

/// Parses a real-valued grid. Range points are rounded to 12 decimals so
/// `0.1:1.0:0.05` yields `0.15`, not `0.15000000000000002`.
pub fn parse_real_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if text.is_empty() {
        return Err("grid is empty".into());
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(format!("range grid must be start:stop:step, got '{text}'"));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("invalid number '{s}' in grid"));
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(format!("range grid needs a positive step, got '{text}'"));
        }
        if stop < start {
            return Err(format!("range grid stops before it starts: '{text}'"));
        }
        let n = ((stop - start) / step + 1e-9).floor() as u64 + 1;
        return Ok((0..n).map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12).collect());
    }
    text.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| format!("invalid number '{s}' in grid"))).collect()
}

/// Parses a grid of positive integers.
pub fn parse_int_grid(text: &str) -> Result<Vec<usize>, String> {
    parse_real_grid(text)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 && v <= usize::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(format!("grid value {v} is not a whole number"))
            }
        })
        .collect()
}
