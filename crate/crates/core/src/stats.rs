//! Order-independent reductions and Monte-Carlo estimates.

use alloc::vec::Vec;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;

/// Pairwise (cascade) summation. The result depends only on the order of
/// `values`, never on how the caller produced them.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean with its Monte-Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    /// Mean and standard error of the mean (unbiased sample variance).
    /// A single sample has zero standard error.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self { mean: f64::NAN, std_error: f64::NAN, samples: 0 };
        }
        if samples.iter().all(|x| *x == samples[0]) {
            return Self { mean: samples[0], std_error: 0.0, samples: n };
        }
        let mean = pairwise_sum(samples) / n as f64;
        if n == 1 {
            return Self { mean, std_error: 0.0, samples: 1 };
        }
        let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let var = pairwise_sum(&sq) / (n - 1) as f64;
        Self { mean, std_error: (var / n as f64).sqrt(), samples: n }
    }
}
