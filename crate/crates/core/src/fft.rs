use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse FFT pair of fixed length. Both directions are unnormalized.
#[derive(Clone)]
pub struct FftPair {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPair").field("n", &self.n).finish()
    }
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In place: buf[m] <- Σ_k buf[k] e^{-2πi mk/n}
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// In place: buf[k] <- Σ_m buf[m] e^{+2πi mk/n}
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }

    /// Signed frequency carried by FFT bin `m` (symmetric folding; the
    /// Nyquist bin of an even length maps to -n/2).
    pub fn signed_frequency(&self, m: usize) -> i64 {
        let n = self.n as i64;
        let m = m as i64;
        if 2 * m < n {
            m
        } else {
            m - n
        }
    }

    pub fn bin(&self, freq: i64) -> usize {
        freq.rem_euclid(self.n as i64) as usize
    }
}
