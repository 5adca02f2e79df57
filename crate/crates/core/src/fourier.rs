//! Centered DFT on an `M`-point grid.
//!
//! Samples sit at `t_k = (k - M/2)Δ` and frequencies at `ω_n = (n - M/2)/L`,
//! so the kernel `e^{-2πi ω_n t_k}` equals `(-1)^{n+k} e^{-2πi nk/M}` whenever
//! `M/2` is even. Both directions are unnormalized.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

pub struct CenteredDft<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    len: usize,
}

impl<T: Real> CenteredDft<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `F_n = Σ_k h_k e^{-2πi ω_n t_k}` in place.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.len);
        alternate(buf);
        self.forward.process(buf);
        alternate(buf);
    }

    /// `h_k = Σ_n F_n e^{+2πi ω_n t_k}` in place (no `1/M`).
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        debug_assert_eq!(buf.len(), self.len);
        alternate(buf);
        self.inverse.process(buf);
        alternate(buf);
    }
}

fn alternate<T: Real>(buf: &mut [Complex<T>]) {
    for v in buf.iter_mut().skip(1).step_by(2) {
        *v = -*v;
    }
}
