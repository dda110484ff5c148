//! Periodic spectral grid on the 2- or 3-torus of side 2 pi: FFT plans,
//! integer wavenumbers, dealiasing, and the basic Fourier-space operators.

pub use rustfft::num_complex::Complex64;

use rustfft::{Fft, FftPlanner};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid dimension must be 2 or 3, got {0}")]
    BadDim(usize),
    #[error("points per axis must be even and >= 8, got {0}")]
    BadSize(usize),
}

/// Uniform periodic grid with spectral metadata. Wavenumbers are integers
/// because the domain side is 2 pi. Immutable after construction; fields
/// hold it behind an `Arc`.
pub struct SpectralGrid {
    dim: usize,
    n: usize,
    len: usize,
    /// Signed integer wavenumber per axis index, Nyquist zeroed (used for
    /// derivative multipliers).
    k_deriv: Vec<f64>,
    /// Per-axis retain flag of the 2/3 rule.
    keep: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl SpectralGrid {
    pub fn new(dim: usize, n: usize) -> Result<Arc<SpectralGrid>, GridError> {
        if dim != 2 && dim != 3 {
            return Err(GridError::BadDim(dim));
        }
        if n < 8 || n % 2 != 0 {
            return Err(GridError::BadSize(n));
        }
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let kmax = (n / 3) as i64;
        let mut k_deriv = Vec::with_capacity(n);
        let mut keep = Vec::with_capacity(n);
        for i in 0..n {
            let ki = if i <= n / 2 {
                i as i64
            } else {
                i as i64 - n as i64
            };
            k_deriv.push(if i == n / 2 { 0.0 } else { ki as f64 });
            keep.push(ki.abs() <= kmax);
        }
        Ok(Arc::new(SpectralGrid {
            dim,
            n,
            len: n.pow(dim as u32),
            k_deriv,
            keep,
            fwd,
            inv,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing 2 pi / n.
    pub fn h(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    /// Volume element h^dim.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn same_grid(&self, other: &SpectralGrid) -> bool {
        self.dim == other.dim && self.n == other.n
    }

    /// Decompose a flat row-major index into per-axis indices.
    #[inline]
    pub fn coords(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    /// Physical coordinates of a grid point.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let h = self.h();
        [c[0] as f64 * h, c[1] as f64 * h, c[2] as f64 * h]
    }

    /// Signed wavenumbers of a flat spectral index (derivative table).
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            out[a] = self.k_deriv[c[a]];
        }
        out
    }

    /// Full d-dimensional in-place complex FFT. Forward is unnormalized;
    /// the inverse divides by the total point count so the round trip is
    /// the identity.
    pub fn fft(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.len);
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        let mut lane = vec![Complex64::default(); n];
        // Transform along each axis by gathering strided lanes.
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            let nblocks = self.len / block;
            for b in 0..nblocks {
                for off in 0..stride {
                    let base = b * block + off;
                    for j in 0..n {
                        lane[j] = data[base + j * stride];
                    }
                    plan.process(&mut lane);
                    for j in 0..n {
                        data[base + j * stride] = lane[j];
                    }
                }
            }
        }
        if inverse {
            let scale = 1.0 / self.len as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    pub fn forward(&self, real: &[f64]) -> Vec<Complex64> {
        assert_eq!(real.len(), self.len);
        let mut out: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft(&mut out, false);
        out
    }

    pub fn inverse_real(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut buf = spec.to_vec();
        self.fft(&mut buf, true);
        buf.iter().map(|c| c.re).collect()
    }

    /// Zero every mode with any |k_a| > n/3 (2/3 rule).
    pub fn dealias(&self, spec: &mut [Complex64]) {
        self.apply_mode_mask(spec);
    }

    fn apply_mode_mask(&self, spec: &mut [Complex64]) {
        assert_eq!(spec.len(), self.len);
        let n = self.n;
        match self.dim {
            2 => {
                for i0 in 0..n {
                    let row_keep = self.keep[i0];
                    let base = i0 * n;
                    for i1 in 0..n {
                        if !(row_keep && self.keep[i1]) {
                            spec[base + i1] = Complex64::default();
                        }
                    }
                }
            }
            _ => {
                for i0 in 0..n {
                    for i1 in 0..n {
                        let keep01 = self.keep[i0] && self.keep[i1];
                        let base = (i0 * n + i1) * n;
                        for i2 in 0..n {
                            if !(keep01 && self.keep[i2]) {
                                spec[base + i2] = Complex64::default();
                            }
                        }
                    }
                }
            }
        }
    }

    /// Spectral partial derivative along an axis: multiply by i k_a.
    pub fn derivative(&self, spec: &[Complex64], axis: usize) -> Vec<Complex64> {
        assert!(axis < self.dim);
        let mut out = spec.to_vec();
        self.derivative_inplace(&mut out, axis);
        out
    }

    pub fn derivative_inplace(&self, spec: &mut [Complex64], axis: usize) {
        let n = self.n;
        let stride = n.pow((self.dim - 1 - axis) as u32);
        for (idx, v) in spec.iter_mut().enumerate() {
            let ai = (idx / stride) % n;
            let k = self.k_deriv[ai];
            *v = Complex64::new(-v.im * k, v.re * k);
        }
    }

    /// Multiply by -|k|^2 (Laplacian).
    pub fn laplacian_inplace(&self, spec: &mut [Complex64]) {
        for (idx, v) in spec.iter_mut().enumerate() {
            let k = self.wavevector(idx);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            *v *= -k2;
        }
    }

    /// Solve -lap P = src spectrally with zero-mean normalization.
    pub fn poisson_neg(&self, src: &[Complex64]) -> Vec<Complex64> {
        let mut out = src.to_vec();
        for (idx, v) in out.iter_mut().enumerate() {
            let k = self.wavevector(idx);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                *v = Complex64::default();
            } else {
                *v /= k2;
            }
        }
        out
    }

    /// |k|^2 of a flat spectral index.
    #[inline]
    pub fn k_sq(&self, idx: usize) -> f64 {
        let k = self.wavevector(idx);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }
}
