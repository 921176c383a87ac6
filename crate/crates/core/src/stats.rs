//! Mean and population standard deviation.

/// Returns `(mean, population std)`; `(0, 0)` for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_convention() {
        assert_eq!(mean_std(&[0.0, 1.0]), (0.5, 0.5));
        assert_eq!(mean_std(&[0.2]), (0.2, 0.0));
        assert_eq!(mean_std(&[]), (0.0, 0.0));
    }
}
