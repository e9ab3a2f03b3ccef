//! Iterative radix-2 FFT. Only power-of-two lengths are supported.

use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // float methods are inherent in `core` on newer toolchains
use num_traits::Float;

use crate::error::{bail, Result};

#[derive(Debug, Clone)]
pub(crate) struct SpectralPlan {
    n: usize,
    // e^{-2πi k/n}, k < n/2
    twiddles: Vec<Complex64>,
    bit_reverse: Vec<usize>,
}

impl SpectralPlan {
    pub(crate) fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            bail!(UnsupportedGrid, "spectral operators need a power-of-two cell count, got {n}");
        }
        let bits = n.trailing_zeros();
        let bit_reverse = (0..n).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let theta = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
                Complex64::new(theta.cos(), theta.sin())
            })
            .collect();
        Ok(Self { n, twiddles, bit_reverse })
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.n);
        for i in 0..self.n {
            let j = self.bit_reverse[i];
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            let stride = self.n / len;
            for start in (0..self.n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }

    /// Unnormalised forward transform of real input.
    pub(crate) fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    /// Inverse transform including the `1/n` factor; returns the real part.
    pub(crate) fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, true);
        let scale = 1.0 / self.n as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    /// Applies a real, even Fourier multiplier `symbol(slot)` to real data.
    pub(crate) fn apply_multiplier(&self, values: &[f64], symbol: impl Fn(usize) -> f64) -> Vec<f64> {
        let mut spectrum = self.forward_real(values);
        for (slot, c) in spectrum.iter_mut().enumerate() {
            *c *= symbol(slot);
        }
        self.inverse_real(spectrum)
    }
}
