use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Slack for probability normalization checks.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// `p·log2(p)` with the convention `0·log 0 = 0`.
fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// Shannon entropy of a distribution, in bits.
pub fn entropy(dist: &[f64]) -> f64 {
    -dist.iter().copied().map(plogp).sum::<f64>()
}

/// Binary entropy `h(e) = −e·log2 e − (1−e)·log2(1−e)`.
pub fn binary_entropy(e: f64) -> f64 {
    -(plogp(e) + plogp(1.0 - e))
}

/// Information per bit of a binary symmetric channel with error rate `e`:
/// `1 + e·log2 e + (1−e)·log2(1−e)`.
pub fn binary_information(e: f64) -> f64 {
    1.0 - binary_entropy(e)
}

/// Prior over signals plus the posterior family an observer ends up with.
///
/// `posteriors[m] = (q(M=m), p(x | M=m))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteChannelModel {
    pub prior: Vec<f64>,
    pub posteriors: Vec<(f64, Vec<f64>)>,
}

impl DiscreteChannelModel {
    /// Uniform binary input observed through a symmetric channel with error `e`.
    pub fn binary_symmetric(e: f64) -> Self {
        Self {
            prior: vec![0.5, 0.5],
            posteriors: vec![(0.5, vec![1.0 - e, e]), (0.5, vec![e, 1.0 - e])],
        }
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        check_distribution("prior", &self.prior)?;
        let weights: Vec<f64> = self.posteriors.iter().map(|(q, _)| *q).collect();
        check_distribution("q(M)", &weights)?;
        for (_, post) in &self.posteriors {
            if post.len() != self.prior.len() {
                return Err(AnalyticsError::NotADistribution {
                    what: "p(x|M)",
                    detail: format!("has {} entries, prior has {}", post.len(), self.prior.len()),
                });
            }
            check_distribution("p(x|M)", post)?;
        }
        Ok(())
    }
}

fn check_distribution(what: &'static str, dist: &[f64]) -> Result<(), AnalyticsError> {
    if dist.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(AnalyticsError::NotADistribution {
            what,
            detail: "entries must be finite and non-negative".into(),
        });
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(AnalyticsError::NotADistribution {
            what,
            detail: format!("sums to {sum}"),
        });
    }
    Ok(())
}

/// Expected entropy reduction from prior to posterior:
/// `I = −Σ p(x) log2 p(x) + Σ_M q(M) Σ_x p(x|M) log2 p(x|M)`.
pub fn shannon_information(model: &DiscreteChannelModel) -> Result<f64, AnalyticsError> {
    model.validate()?;
    let expected_posterior: f64 = model
        .posteriors
        .iter()
        .map(|(q, post)| q * entropy(post))
        .sum();
    Ok(entropy(&model.prior) - expected_posterior)
}

/// Minimum number of bits that must be disclosed to correct `n_sif` bits at
/// error rate `e`: `n_sif · h(e)`.
pub fn shannon_min_leakage(n_sif: usize, e: f64) -> f64 {
    n_sif as f64 * binary_entropy(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_information_endpoints() {
        assert_eq!(binary_information(0.0), 1.0);
        assert_eq!(binary_information(0.5), 0.0);
        assert_eq!(binary_information(1.0), 1.0);
        // h(0.25) = 0.811278...
        assert!((binary_information(0.25) - 0.188_722_4).abs() < 1e-6);
    }

    #[test]
    fn shannon_information_limits() {
        let none = DiscreteChannelModel {
            prior: vec![0.2, 0.8],
            posteriors: vec![(0.3, vec![0.2, 0.8]), (0.7, vec![0.2, 0.8])],
        };
        assert!(shannon_information(&none).unwrap().abs() < 1e-15);

        let full = DiscreteChannelModel {
            prior: vec![0.5, 0.5],
            posteriors: vec![(0.5, vec![1.0, 0.0]), (0.5, vec![0.0, 1.0])],
        };
        assert!((shannon_information(&full).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn binary_symmetric_matches_closed_form() {
        let i = shannon_information(&DiscreteChannelModel::binary_symmetric(0.25)).unwrap();
        assert!((i - binary_information(0.25)).abs() < 1e-12);
    }

    #[test]
    fn non_normalized_model_is_rejected() {
        let bad = DiscreteChannelModel {
            prior: vec![0.5, 0.6],
            posteriors: vec![(1.0, vec![0.5, 0.5])],
        };
        assert!(matches!(
            shannon_information(&bad),
            Err(AnalyticsError::NotADistribution { what: "prior", .. })
        ));
    }

    #[test]
    fn min_leakage_values() {
        assert_eq!(shannon_min_leakage(12_345, 0.0), 0.0);
        assert!((shannon_min_leakage(10_000, 0.5) - 10_000.0).abs() < 1e-9);
        // h(0.05) = 0.286397... to 6 places.
        assert!((shannon_min_leakage(10_000, 0.05) - 2863.97).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn information_is_symmetric(e in 0.0f64..=1.0) {
            prop_assert!((binary_information(e) - binary_information(1.0 - e)).abs() < 1e-12);
        }

        #[test]
        fn information_decreases_to_half(a in 0.0f64..0.5, b in 0.0f64..0.5) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(binary_information(lo) > binary_information(hi));
        }
    }
}
