//! The two algebraic cancellations behind the pressure equation and the
//! energy law: the double divergence of the antisymmetric stress vanishes
//! identically, and the corotation power is balanced by the stress power.

use rustfft::num_complex::Complex64;

use super::DiagnosticsError;
use crate::field::{QTensorField, ScalarField, VelocityField};
use crate::potential::{Potential, PotentialSpec};
use crate::solver::rhs::eval_f_bulk;
use crate::tensor::{Mat3, QTensor};

/// Relative max-norm of `div^2 (Q1 H2 - H2 Q1)` with `H2 = lap Q2 -
/// f_bulk(Q2)`. The stress is antisymmetric pointwise, so the double
/// divergence vanishes up to rounding regardless of resolution.
pub fn div2_cancellation_residual(
    q1: &QTensorField,
    q2: &QTensorField,
    spec: &PotentialSpec,
) -> Result<f64, DiagnosticsError> {
    if !q1.grid().same_grid(q2.grid()) {
        return Err(DiagnosticsError::GridMismatch);
    }
    let grid = q1.grid().clone();
    let d = grid.dim();
    let len = grid.len();
    let pot = Potential::new(spec)?;

    let q2_spec = q2.to_spectral();
    let q2_phys: Vec<Vec<f64>> = q2_spec.iter().map(|s| grid.inverse_real(s)).collect();
    let (f2, _) = eval_f_bulk(&grid, &pot, &q2_phys, None, false)?;
    let lap2: Vec<Vec<f64>> = (0..5)
        .map(|c| {
            let mut s = q2_spec[c].clone();
            grid.laplacian_inplace(&mut s);
            grid.inverse_real(&s)
        })
        .collect();

    // sigma entries (01, 02, 12) and its max norm.
    let mut sig = vec![[0.0f64; 3]; len];
    let mut max_sig = 0.0f64;
    for idx in 0..len {
        let q1m = q1.at(idx).to_mat3();
        let hc: [f64; 5] = std::array::from_fn(|c| lap2[c][idx] - f2[idx][c]);
        let hm = QTensor::from_coeffs(hc).to_mat3();
        let qh = q1m.matmul(&hm);
        let s = [
            qh.get(0, 1) - qh.get(1, 0),
            qh.get(0, 2) - qh.get(2, 0),
            qh.get(1, 2) - qh.get(2, 1),
        ];
        max_sig = max_sig.max(s[0].abs()).max(s[1].abs()).max(s[2].abs());
        sig[idx] = s;
    }
    if max_sig == 0.0 {
        return Ok(0.0);
    }

    let comp = |a: usize, b: usize, idx: usize| -> f64 {
        match (a, b) {
            (0, 1) => sig[idx][0],
            (1, 0) => -sig[idx][0],
            (0, 2) => sig[idx][1],
            (2, 0) => -sig[idx][1],
            (1, 2) => sig[idx][2],
            (2, 1) => -sig[idx][2],
            _ => 0.0,
        }
    };
    let mut src = vec![Complex64::default(); len];
    for a in 0..d {
        for b in 0..d {
            if a == b {
                continue;
            }
            let field: Vec<f64> = (0..len).map(|idx| comp(a, b, idx)).collect();
            let sh = grid.forward(&field);
            for idx in 0..len {
                let k = grid.wavevector(idx);
                src[idx] += -k[a] * k[b] * sh[idx];
            }
        }
    }
    let div2 = grid.inverse_real(&src);
    let max_div2 = div2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(max_div2 / max_sig)
}

#[derive(Debug, Clone)]
pub struct CancellationReport {
    /// Corotation power `int (W Q - Q W) : H phi`.
    pub corotation: f64,
    /// Stress power `-int u . div(sigma) phi`.
    pub stress: f64,
    /// Flux correction `int sigma_ab u_a d_b phi` (zero for constant phi).
    pub correction: f64,
    /// |corotation + stress - correction| over the larger term magnitude.
    pub relative_residual: f64,
}

/// Duality of corotation and antisymmetric stress, weighted by a test
/// function (`None` means phi = 1 and the correction vanishes).
pub fn corotational_cancellation_residual(
    u: &VelocityField,
    q: &QTensorField,
    spec: &PotentialSpec,
    phi: Option<&ScalarField>,
) -> Result<CancellationReport, DiagnosticsError> {
    if !u.grid().same_grid(q.grid()) {
        return Err(DiagnosticsError::GridMismatch);
    }
    let grid = q.grid().clone();
    let d = grid.dim();
    let len = grid.len();
    let vol = grid.cell_volume();
    let pot = Potential::new(spec)?;

    let u_spec = u.to_spectral();
    let q_spec = q.to_spectral();
    let q_phys: Vec<Vec<f64>> = q_spec.iter().map(|s| grid.inverse_real(s)).collect();
    let (fb, _) = eval_f_bulk(&grid, &pot, &q_phys, None, false)?;
    let lap: Vec<Vec<f64>> = (0..5)
        .map(|c| {
            let mut s = q_spec[c].clone();
            grid.laplacian_inplace(&mut s);
            grid.inverse_real(&s)
        })
        .collect();
    let du: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| grid.inverse_real(&grid.derivative(&u_spec[a], b)))
                .collect()
        })
        .collect();

    // sigma entries and its spectral divergence.
    let nsig = 3;
    let mut sig_phys: Vec<Vec<f64>> = (0..nsig).map(|_| vec![0.0; len]).collect();
    let mut corot_density = vec![0.0f64; len];
    for idx in 0..len {
        let qm = q.at(idx).to_mat3();
        let hc: [f64; 5] = std::array::from_fn(|c| lap[c][idx] - fb[idx][c]);
        let h = QTensor::from_coeffs(hc);
        let hm = h.to_mat3();
        let qh = qm.matmul(&hm);
        sig_phys[0][idx] = qh.get(0, 1) - qh.get(1, 0);
        sig_phys[1][idx] = qh.get(0, 2) - qh.get(2, 0);
        sig_phys[2][idx] = qh.get(1, 2) - qh.get(2, 1);
        let mut w = Mat3::zero();
        for a in 0..d {
            for b in 0..d {
                w.set(a, b, 0.5 * (du[a][b][idx] - du[b][a][idx]));
            }
        }
        let com = w.matmul(&qm).sub(&qm.matmul(&w));
        corot_density[idx] = com.ddot(&hm);
    }
    let sig_at = |a: usize, b: usize, idx: usize| -> f64 {
        match (a, b) {
            (0, 1) => sig_phys[0][idx],
            (1, 0) => -sig_phys[0][idx],
            (0, 2) => sig_phys[1][idx],
            (2, 0) => -sig_phys[1][idx],
            (1, 2) => sig_phys[2][idx],
            (2, 1) => -sig_phys[2][idx],
            _ => 0.0,
        }
    };
    // div(sigma)_a = d_b sigma_ab, spectral.
    let sig_spec: Vec<Vec<Complex64>> = sig_phys.iter().map(|f| grid.forward(f)).collect();
    let mut div_sig: Vec<Vec<f64>> = Vec::with_capacity(d);
    for a in 0..d {
        let mut acc = vec![Complex64::default(); len];
        for b in 0..d {
            if a == b {
                continue;
            }
            let (comp_idx, sign) = match (a, b) {
                (0, 1) => (0, 1.0),
                (1, 0) => (0, -1.0),
                (0, 2) => (1, 1.0),
                (2, 0) => (1, -1.0),
                (1, 2) => (2, 1.0),
                (2, 1) => (2, -1.0),
                _ => unreachable!(),
            };
            for idx in 0..len {
                let k = grid.wavevector(idx);
                let v = sig_spec[comp_idx][idx] * sign;
                acc[idx] += Complex64::new(-v.im * k[b], v.re * k[b]);
            }
        }
        div_sig.push(grid.inverse_real(&acc));
    }

    let phi_val = |idx: usize| phi.map(|f| f.data[idx]).unwrap_or(1.0);
    let mut corotation = 0.0;
    let mut stress = 0.0;
    for idx in 0..len {
        let pv = phi_val(idx);
        corotation += corot_density[idx] * pv;
        let uv = u.at(idx);
        let mut power = 0.0;
        for a in 0..d {
            power += uv[a] * div_sig[a][idx];
        }
        stress -= power * pv;
    }
    corotation *= vol;
    stress *= vol;

    let mut correction = 0.0;
    if let Some(phi) = phi {
        let phi_spec = phi.to_spectral();
        let dphi: Vec<Vec<f64>> = (0..d)
            .map(|b| grid.inverse_real(&grid.derivative(&phi_spec, b)))
            .collect();
        for idx in 0..len {
            let uv = u.at(idx);
            for a in 0..d {
                for b in 0..d {
                    correction += sig_at(a, b, idx) * uv[a] * dphi[b][idx];
                }
            }
        }
        correction *= vol;
    }

    let scale = corotation.abs().max(stress.abs());
    let resid = (corotation + stress - correction).abs();
    Ok(CancellationReport {
        corotation,
        stress,
        correction,
        relative_residual: if scale == 0.0 { 0.0 } else { resid / scale },
    })
}
