use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mean: f64,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    /// Fraction of trials with error at most the threshold.
    pub success_rate: f64,
}

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7, the
/// numpy and R default). `p` is clamped to `[0, 1]`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

pub fn summarize(errors: &[f64], threshold: f64) -> CellStats {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len().max(1) as f64;
    CellStats {
        mean: sorted.iter().sum::<f64>() / n,
        median: quantile(&sorted, 0.5),
        q25: quantile(&sorted, 0.25),
        q75: quantile(&sorted, 0.75),
        success_rate: sorted.iter().filter(|&&e| e <= threshold).count() as f64 / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&x, 0.5), 2.5);
        assert_eq!(quantile(&x, 0.25), 1.75);
        assert_eq!(quantile(&x, 0.75), 3.25);
        assert_eq!(quantile(&x, 0.0), 1.0);
        assert_eq!(quantile(&x, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn summary_counts_threshold_inclusively() {
        let s = summarize(&[0.1, 0.05, 2.0, 0.3], 0.1);
        assert_eq!(s.success_rate, 0.5);
        assert_eq!(s.median, 0.2);
        assert!((s.mean - 0.6125).abs() < 1e-15);
    }
}
