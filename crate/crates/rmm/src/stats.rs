//! Monte Carlo estimators and distribution tests: mean with normal
//! confidence interval, two-sample Kolmogorov-Smirnov, and chi-square
//! goodness of fit against an exact finite law.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::Error;

/// Sample mean with a symmetric normal-approximation confidence interval.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub half_width: f64,
    pub trials: usize,
}

impl MeanEstimate {
    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }
}

/// Mean and CI at the given confidence level (e.g. 0.99).
pub fn estimate_mean(samples: &[f64], confidence: f64) -> Result<MeanEstimate, Error> {
    if samples.len() < 2 {
        return Err(Error::Usage(format!(
            "mean estimation needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    let z = Normal::new(0.0, 1.0)
        .unwrap()
        .inverse_cdf(0.5 + confidence / 2.0);
    Ok(MeanEstimate {
        mean,
        std_error,
        half_width: z * std_error,
        trials: samples.len(),
    })
}

/// Outcome of a two-sample distribution test.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoSampleResult {
    pub statistic: f64,
    pub threshold: f64,
    pub rejected: bool,
    pub n_a: usize,
    pub n_b: usize,
}

/// Supremum distance between the two empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let step_a = 1.0 / xs.len() as f64;
    let step_b = 1.0 / ys.len() as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut diff = 0.0f64;
    let mut max_diff = 0.0f64;
    while i < xs.len() || j < ys.len() {
        let next_a = xs.get(i).copied().unwrap_or(f64::INFINITY);
        let next_b = ys.get(j).copied().unwrap_or(f64::INFINITY);
        // Consume every tie of the current value from both samples before
        // comparing the CDFs: partial tie blocks are not CDF points.
        let value = next_a.min(next_b);
        while i < xs.len() && xs[i] == value {
            diff += step_a;
            i += 1;
        }
        while j < ys.len() && ys[j] == value {
            diff -= step_b;
            j += 1;
        }
        max_diff = max_diff.max(diff.abs());
    }
    max_diff
}

/// Two-sample KS test at level `alpha` using the asymptotic threshold
/// `c(alpha) * sqrt((n + m) / (n m))` with `c(alpha) = sqrt(ln(2/alpha)/2)`.
/// Conservative for discrete data, which only makes "not rejected"
/// conclusions safer.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> Result<TwoSampleResult, Error> {
    if a.len() < 25 || b.len() < 25 {
        return Err(Error::Usage(format!(
            "KS test needs both samples >= 25, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let statistic = ks_statistic(a, b);
    let n = a.len() as f64;
    let m = b.len() as f64;
    let threshold = ((2.0 / alpha).ln() / 2.0).sqrt() * ((n + m) / (n * m)).sqrt();
    Ok(TwoSampleResult {
        statistic,
        threshold,
        rejected: statistic > threshold,
        n_a: a.len(),
        n_b: b.len(),
    })
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub threshold: f64,
    pub rejected: bool,
    pub bins: usize,
    pub trials: usize,
}

/// Chi-square test of observed counts against exact cell probabilities.
/// Cells whose expected count falls below `min_expected` are pooled into a
/// single remainder cell before computing the statistic.
pub fn chi_square_fit(
    probabilities: &[f64],
    observed: &[usize],
    alpha: f64,
    min_expected: f64,
) -> Result<ChiSquareResult, Error> {
    if probabilities.len() != observed.len() || probabilities.is_empty() {
        return Err(Error::Usage("probability/count vectors must match".into()));
    }
    let trials: usize = observed.iter().sum();
    let n = trials as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0f64, 0.0f64);
    for (&p, &o) in probabilities.iter().zip(observed) {
        let expected = p * n;
        if expected < min_expected {
            pooled.0 += expected;
            pooled.1 += o as f64;
        } else {
            cells.push((expected, o as f64));
        }
    }
    if pooled.0 > 0.0 || pooled.1 > 0.0 {
        cells.push(pooled);
    }
    if cells.len() < 2 {
        return Err(Error::Usage(
            "chi-square needs at least two cells after pooling".into(),
        ));
    }
    let statistic: f64 = cells
        .iter()
        .map(|&(e, o)| {
            if e > 0.0 {
                (o - e) * (o - e) / e
            } else if o > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .sum();
    let dof = (cells.len() - 1) as f64;
    let threshold = ChiSquared::new(dof).unwrap().inverse_cdf(1.0 - alpha);
    Ok(ChiSquareResult {
        statistic,
        threshold,
        rejected: statistic > threshold,
        bins: cells.len(),
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::CounterRng;

    #[test]
    fn constant_sampler_zero_width() {
        let est = estimate_mean(&[3.0; 100], 0.99).unwrap();
        assert_eq!(est.mean, 3.0);
        assert_eq!(est.half_width, 0.0);
        assert!(estimate_mean(&[1.0], 0.99).is_err());
    }

    #[test]
    fn bernoulli_ci_width() {
        let mut rng = CounterRng::new(8, 0);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| if rng.next_unit() < 0.5 { 1.0 } else { 0.0 })
            .collect();
        let est = estimate_mean(&samples, 0.99).unwrap();
        assert!((est.mean - 0.5).abs() < 0.02);
        // 2.576 * sqrt(0.25 / 1e4) ~ 0.0129
        assert!((est.half_width - 0.0129).abs() < 0.002);
    }

    #[test]
    fn exponential_mean_recovered() {
        let mut rng = CounterRng::new(9, 0);
        let samples: Vec<f64> = (0..20_000).map(|_| rng.next_exp(1.0)).collect();
        let est = estimate_mean(&samples, 0.99).unwrap();
        assert!(est.lower() <= 1.0 && 1.0 <= est.upper(), "{est:?}");
    }

    #[test]
    fn ks_identical_samples_not_rejected() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let res = ks_two_sample(&a, &a, 0.01).unwrap();
        assert_eq!(res.statistic, 0.0);
        assert!(!res.rejected);
    }

    #[test]
    fn ks_separates_different_rates() {
        let mut r1 = CounterRng::new(4, 0);
        let mut r2 = CounterRng::new(4, 1);
        let a: Vec<f64> = (0..10_000).map(|_| r1.next_exp(1.0)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| r2.next_exp(2.0)).collect();
        assert!(ks_two_sample(&a, &b, 0.01).unwrap().rejected);
    }

    #[test]
    fn ks_calibration_false_positive_rate() {
        // Two independent draws from the same law: rejection should be
        // rare at alpha = 0.01 (asymptotic threshold is slightly
        // conservative).
        let mut rejections = 0;
        let reps = 200;
        for rep in 0..reps {
            let mut r1 = CounterRng::new(600 + rep, 0);
            let mut r2 = CounterRng::new(600 + rep, 1);
            let a: Vec<f64> = (0..500).map(|_| r1.next_exp(1.0)).collect();
            let b: Vec<f64> = (0..500).map(|_| r2.next_exp(1.0)).collect();
            if ks_two_sample(&a, &b, 0.01).unwrap().rejected {
                rejections += 1;
            }
        }
        assert!(rejections <= 6, "{rejections} rejections out of {reps}");
    }

    #[test]
    fn ks_handles_ties_with_unequal_sizes() {
        // Two-point samples with (almost) equal proportions but different
        // sizes: the statistic must reflect the CDF gap, not tie-block
        // interleaving artifacts.
        let mut a = vec![5.0; 590];
        a.extend(vec![9.0; 410]);
        let mut b = vec![5.0; 413];
        b.extend(vec![9.0; 287]);
        let expected = (590.0 / 1000.0 - 413.0 / 700.0f64).abs();
        assert!((ks_statistic(&a, &b) - expected).abs() < 1e-12);
    }

    #[test]
    fn ks_size_guard() {
        let a = vec![0.0; 10];
        assert!(ks_two_sample(&a, &a, 0.01).is_err());
    }

    #[test]
    fn chi_square_accepts_true_law() {
        let probs = [0.5, 0.3, 0.2];
        let mut counts = [0usize; 3];
        let mut rng = CounterRng::new(12, 0);
        for _ in 0..10_000 {
            let u = rng.next_unit();
            let k = if u < 0.5 {
                0
            } else if u < 0.8 {
                1
            } else {
                2
            };
            counts[k] += 1;
        }
        let res = chi_square_fit(&probs, &counts, 1e-3, 5.0).unwrap();
        assert!(!res.rejected, "{res:?}");
    }

    #[test]
    fn chi_square_rejects_wrong_law() {
        let probs = [0.5, 0.5];
        let counts = [9000usize, 1000];
        let res = chi_square_fit(&probs, &counts, 1e-3, 5.0).unwrap();
        assert!(res.rejected);
    }
}
