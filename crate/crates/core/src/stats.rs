//! Small statistics toolbox: empirical CCDFs, a two-sample
//! Kolmogorov–Smirnov test, DKW confidence bands, and normal-approximation
//! confidence intervals.

/// Mean and symmetric normal-approximation confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

/// 95% two-sided normal CI for the mean.
pub fn mean_ci95(samples: &[f64]) -> MeanCi {
    mean_ci(samples, 1.959963984540054)
}

pub fn mean_ci(samples: &[f64], z: f64) -> MeanCi {
    let n = samples.len();
    if n == 0 {
        return MeanCi {
            mean: f64::NAN,
            lo: f64::NAN,
            hi: f64::NAN,
            n,
        };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanCi {
            mean,
            lo: mean,
            hi: mean,
            n,
        };
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    let half = z * (var / n as f64).sqrt();
    MeanCi {
        mean,
        lo: mean - half,
        hi: mean + half,
        n,
    }
}

/// Fraction of samples strictly above `x` (empirical CCDF) on a sorted
/// slice.
pub fn ccdf_at(sorted: &[f64], x: f64) -> f64 {
    let idx = sorted.partition_point(|v| *v <= x);
    (sorted.len() - idx) as f64 / sorted.len() as f64
}

/// Two-sample uniform band from the DKW inequality: each empirical CDF is
/// within `sqrt(ln(2/alpha) / 2n)` of its law with probability `1 - alpha`,
/// so the sum bounds the comparison of two empirical curves.
pub fn dkw_band(n_x: usize, n_y: usize, confidence: f64) -> f64 {
    assert!((0.0..1.0).contains(&(1.0 - confidence)), "bad confidence");
    let alpha = 1.0 - confidence;
    let eps = |n: usize| ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt();
    eps(n_x) + eps(n_y)
}

/// Result of the two-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample KS test with the asymptotic p-value (and the usual
/// small-sample correction of the effective size).
pub fn ks2_test(a: &[f64], b: &[f64]) -> KsResult {
    assert!(!a.is_empty() && !b.is_empty(), "empty sample");
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let (n, m) = (xs.len(), ys.len());
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i].min(ys[j]);
        while i < n && xs[i] <= x {
            i += 1;
        }
        while j < m && ys[j] <= x {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        d = d.max(diff);
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    }
}

/// Survival function of the Kolmogorov distribution,
/// `Q(x) = 2 Σ (-1)^{k-1} exp(-2 k² x²)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * x * x).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_ci_shrinks_with_samples() {
        let small: Vec<f64> = (0..100).map(|i| (i % 10) as f64).collect();
        let large: Vec<f64> = (0..400).map(|i| (i % 10) as f64).collect();
        let a = mean_ci95(&small);
        let b = mean_ci95(&large);
        assert!((a.mean - b.mean).abs() < 1e-9);
        assert!(b.hi - b.lo < a.hi - a.lo);
    }

    #[test]
    fn ccdf_counts_strictly_above() {
        let sorted = [1.0, 2.0, 2.0, 3.0];
        assert_eq!(ccdf_at(&sorted, 0.5), 1.0);
        assert_eq!(ccdf_at(&sorted, 2.0), 0.25);
        assert_eq!(ccdf_at(&sorted, 3.0), 0.0);
    }

    #[test]
    fn kolmogorov_sf_reference_points() {
        // Known values of the Kolmogorov distribution: Q(1.0), the 5%
        // critical point at 1.3581, and Q(0.5) = 1 - 0.0361.
        assert!((kolmogorov_sf(1.0) - 0.26999967).abs() < 1e-6);
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 2e-4);
        assert!((kolmogorov_sf(0.5) - 0.963945).abs() < 1e-5);
        assert!(kolmogorov_sf(0.3) > 0.999);
    }

    #[test]
    fn ks_accepts_same_law_and_rejects_shifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..800).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..800).map(|_| rng.random::<f64>()).collect();
        let same = ks2_test(&a, &b);
        assert!(same.p_value > 0.01, "p={}", same.p_value);
        let shifted: Vec<f64> = b.iter().map(|x| x + 0.2).collect();
        let diff = ks2_test(&a, &shifted);
        assert!(diff.p_value < 1e-6, "p={}", diff.p_value);
    }

    #[test]
    fn dkw_band_tightens_with_more_samples() {
        let wide = dkw_band(100, 100, 0.99);
        let tight = dkw_band(10_000, 10_000, 0.99);
        assert!(tight < wide);
        assert!(tight > 0.0);
    }
}
