//! Normal-approximation summaries across seeds.

/// Mean and 95% half-width `1.96 · sd / √n` (sample sd). A single value has
/// half-width 0; an empty slice gives `None`.
pub fn mean_ci(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((mean, 1.96 * var.sqrt() / (n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed() {
        assert_eq!(mean_ci(&[]), None);
        assert_eq!(mean_ci(&[2.0]), Some((2.0, 0.0)));
        // sd of {1, 2, 3} is 1.
        let (m, h) = mean_ci(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((h - 1.96 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_ci(&[0.5; 4]), Some((0.5, 0.0)));
    }
}
