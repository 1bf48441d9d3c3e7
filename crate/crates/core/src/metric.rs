//! Deviation measures used by every check and report.

/// Largest absolute componentwise difference.
pub fn abs_dev(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "comparing slices of unequal length");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest componentwise difference scaled by `max(1, |a|, |b|)` — absolute
/// near the origin, relative for large entries.
pub fn rel_dev(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "comparing slices of unequal length");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Largest absolute entry.
pub fn max_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rel_dev_scales_large_entries() {
        assert_eq!(abs_dev(&[1e9], &[1e9 + 1.0]), 1.0);
        assert!(rel_dev(&[1e9], &[1e9 + 1.0]) < 1.1e-9);
        assert_eq!(rel_dev(&[0.0], &[0.5]), 0.5);
    }
}
