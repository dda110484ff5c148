//! Grid-sampled fields: scalars, velocities, and Q-tensor fields stored as
//! five coefficients in the fixed orthonormal basis of the traceless
//! symmetric space (so symmetry and tracelessness are structural).

use crate::spectral::SpectralGrid;
use crate::tensor::QTensor;
use rustfft::num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<SpectralGrid>,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        ScalarField {
            grid: grid.clone(),
            data: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn<F: FnMut([f64; 3]) -> f64>(grid: &Arc<SpectralGrid>, mut f: F) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        ScalarField {
            grid: grid.clone(),
            data,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn to_spectral(&self) -> Vec<Complex64> {
        self.grid.forward(&self.data)
    }

    pub fn from_spectral(grid: &Arc<SpectralGrid>, spec: &[Complex64]) -> Self {
        ScalarField {
            grid: grid.clone(),
            data: grid.inverse_real(spec),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Grid integral (uniform-weight quadrature).
    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Velocity field with `dim` components.
#[derive(Debug, Clone)]
pub struct VelocityField {
    grid: Arc<SpectralGrid>,
    pub comps: Vec<ScalarField>,
}

impl VelocityField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        VelocityField {
            grid: grid.clone(),
            comps: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_fn<F: FnMut([f64; 3]) -> [f64; 3]>(grid: &Arc<SpectralGrid>, mut f: F) -> Self {
        let mut comps: Vec<Vec<f64>> = (0..grid.dim()).map(|_| vec![0.0; grid.len()]).collect();
        for idx in 0..grid.len() {
            let v = f(grid.point(idx));
            for (a, comp) in comps.iter_mut().enumerate() {
                comp[idx] = v[a];
            }
        }
        VelocityField {
            grid: grid.clone(),
            comps: comps
                .into_iter()
                .map(|data| ScalarField {
                    grid: grid.clone(),
                    data,
                })
                .collect(),
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, c) in self.comps.iter().enumerate() {
            out[a] = c.data[idx];
        }
        out
    }

    pub fn to_spectral(&self) -> Vec<Vec<Complex64>> {
        self.comps.iter().map(|c| c.to_spectral()).collect()
    }

    pub fn from_spectral(grid: &Arc<SpectralGrid>, spec: &[Vec<Complex64>]) -> Self {
        VelocityField {
            grid: grid.clone(),
            comps: spec
                .iter()
                .map(|s| ScalarField::from_spectral(grid, s))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.grid.len()).fold(0.0f64, |m, idx| {
            let v = self.at(idx);
            m.max((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
        })
    }

    /// Max spectral divergence over retained modes, relative to max |u_hat|.
    pub fn divergence_defect(&self) -> f64 {
        let spec = self.to_spectral();
        let mut max_div = 0.0f64;
        let mut max_u = 0.0f64;
        for idx in 0..self.grid.len() {
            let k = self.grid.wavevector(idx);
            let mut div = Complex64::default();
            for (a, s) in spec.iter().enumerate() {
                div += Complex64::new(0.0, k[a]) * s[idx];
                max_u = max_u.max(s[idx].norm());
            }
            max_div = max_div.max(div.norm());
        }
        if max_u == 0.0 {
            0.0
        } else {
            max_div / max_u
        }
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.is_finite())
    }
}

/// Q-tensor field: five basis coefficients per grid point.
#[derive(Debug, Clone)]
pub struct QTensorField {
    grid: Arc<SpectralGrid>,
    pub comps: Vec<ScalarField>,
}

impl QTensorField {
    pub fn zeros(grid: &Arc<SpectralGrid>) -> Self {
        QTensorField {
            grid: grid.clone(),
            comps: (0..5).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_fn<F: FnMut([f64; 3]) -> QTensor>(grid: &Arc<SpectralGrid>, mut f: F) -> Self {
        let mut comps: Vec<Vec<f64>> = (0..5).map(|_| vec![0.0; grid.len()]).collect();
        for idx in 0..grid.len() {
            let c = f(grid.point(idx)).to_coeffs();
            for a in 0..5 {
                comps[a][idx] = c[a];
            }
        }
        QTensorField {
            grid: grid.clone(),
            comps: comps
                .into_iter()
                .map(|data| ScalarField {
                    grid: grid.clone(),
                    data,
                })
                .collect(),
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    #[inline]
    pub fn at(&self, idx: usize) -> QTensor {
        QTensor::from_coeffs([
            self.comps[0].data[idx],
            self.comps[1].data[idx],
            self.comps[2].data[idx],
            self.comps[3].data[idx],
            self.comps[4].data[idx],
        ])
    }

    #[inline]
    pub fn coeffs_at(&self, idx: usize) -> [f64; 5] {
        [
            self.comps[0].data[idx],
            self.comps[1].data[idx],
            self.comps[2].data[idx],
            self.comps[3].data[idx],
            self.comps[4].data[idx],
        ]
    }

    pub fn set_at(&mut self, idx: usize, q: &QTensor) {
        let c = q.to_coeffs();
        for a in 0..5 {
            self.comps[a].data[idx] = c[a];
        }
    }

    pub fn to_spectral(&self) -> Vec<Vec<Complex64>> {
        self.comps.iter().map(|c| c.to_spectral()).collect()
    }

    pub fn from_spectral(grid: &Arc<SpectralGrid>, spec: &[Vec<Complex64>]) -> Self {
        QTensorField {
            grid: grid.clone(),
            comps: spec
                .iter()
                .map(|s| ScalarField::from_spectral(grid, s))
                .collect(),
        }
    }

    /// Max Frobenius norm over the grid.
    pub fn max_norm(&self) -> f64 {
        (0..self.grid.len()).fold(0.0f64, |m, idx| m.max(self.at(idx).norm()))
    }

    /// Minimum physicality margin over the grid.
    pub fn min_margin(&self) -> f64 {
        (0..self.grid.len()).fold(f64::INFINITY, |m, idx| {
            m.min(crate::potential::physicality_margin(&self.at(idx)))
        })
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::uniaxial;

    #[test]
    fn qfield_roundtrip_at() {
        let grid = SpectralGrid::new(2, 8).unwrap();
        let q0 = uniaxial(0.7, [0.6, 0.8, 0.0]).unwrap();
        let mut f = QTensorField::zeros(&grid);
        f.set_at(5, &q0);
        assert!(f.at(5).sub(&q0).norm() < 1e-15);
        assert!(f.at(4).norm() == 0.0);
        assert!((f.max_norm() - q0.norm()).abs() < 1e-15);
    }

    #[test]
    fn scalar_integral_of_mode_is_zero() {
        let grid = SpectralGrid::new(2, 16).unwrap();
        let f = ScalarField::from_fn(&grid, |p| (2.0 * p[0]).sin());
        assert!(f.integral().abs() < 1e-12);
        let one = ScalarField::from_fn(&grid, |_| 1.0);
        let area = (2.0 * std::f64::consts::PI).powi(2);
        assert!((one.integral() - area).abs() < 1e-10);
    }

    #[test]
    fn divergence_defect_detects_gradient() {
        let grid = SpectralGrid::new(2, 16).unwrap();
        // gradient field: certainly not divergence-free
        let u = VelocityField::from_fn(&grid, |p| [(p[0]).cos(), (p[1]).cos(), 0.0]);
        assert!(u.divergence_defect() > 0.5);
        // shear flow: divergence-free
        let v = VelocityField::from_fn(&grid, |p| [(p[1]).sin(), 0.0, 0.0]);
        assert!(v.divergence_defect() < 1e-12);
    }
}
