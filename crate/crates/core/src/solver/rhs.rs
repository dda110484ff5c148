//! Spatial discretization: spectral derivatives, dealiased products, and
//! the explicit (non-Laplacian) parts of both evolution equations.
//!
//! Conventions: the velocity-gradient matrix is `G_ab = d_b u_a`, vorticity
//! `W = (G - G^T)/2`, corotation enters the Q equation as `W Q - Q W`, the
//! antisymmetric stress is `sigma = Q H - H Q` with molecular field
//! `H = l lap Q - f_bulk(Q)`, and the velocity force is
//! `- u.grad u - l (grad Q : lap Q) + div sigma` with `(div sigma)_a =
//! d_b sigma_ab`.

use crate::field::{QTensorField, ScalarField, VelocityField};
use crate::potential::{Potential, PotentialSpec};
use crate::spectral::SpectralGrid;
use crate::tensor::{Mat3, QTensor};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use std::sync::Arc;

use super::SolverError;

/// Time-independent spectral forcing added to the explicit terms
/// (manufactured-solution runs).
#[derive(Debug, Clone)]
pub struct Forcing {
    pub fu: Vec<Vec<Complex64>>,
    pub fq: Vec<Vec<Complex64>>,
}

pub(crate) struct ExplicitTerms {
    /// Velocity terms before Leray projection (dim components, spectral).
    pub nu: Vec<Vec<Complex64>>,
    /// Q-tensor terms (5 components, spectral).
    pub nq: Vec<Vec<Complex64>>,
    /// Energy integrals of the input state, when requested; the bulk term
    /// reuses the dual solves already done for the forces.
    pub energy: Option<EnergyParts>,
}

/// Grid integrals of the energy ledger, computed inside the force
/// assembly so entropy-potential runs do not pay a second dual solve per
/// step.
#[derive(Debug, Clone, Copy)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub elastic: f64,
    pub bulk: f64,
    pub diss_u: f64,
    pub diss_h: f64,
}

/// Pointwise bulk derivative over the whole grid. For the entropy variant
/// the per-point dual solves are warm-started from `warm` (updated in
/// place) and run data-parallel; outputs are written by index so the result
/// does not depend on scheduling.
pub(crate) fn eval_f_bulk(
    grid: &Arc<SpectralGrid>,
    pot: &Potential,
    q_phys: &[Vec<f64>],
    warm: Option<&mut Vec<[f64; 5]>>,
    want_value: bool,
) -> Result<(Vec<[f64; 5]>, Option<Vec<f64>>), SolverError> {
    let len = grid.len();
    let coeffs_at = |idx: usize| -> [f64; 5] {
        [
            q_phys[0][idx],
            q_phys[1][idx],
            q_phys[2][idx],
            q_phys[3][idx],
            q_phys[4][idx],
        ]
    };
    match pot {
        Potential::Ldg { .. } => {
            let mut grad = vec![[0.0; 5]; len];
            let mut value = if want_value {
                Some(vec![0.0; len])
            } else {
                None
            };
            for idx in 0..len {
                let q = QTensor::from_coeffs(coeffs_at(idx));
                let (f, v, _) = pot
                    .f_bulk_with_value(&q, None)
                    .expect("ldg evaluation is total");
                grad[idx] = f.to_coeffs();
                if let Some(vals) = value.as_mut() {
                    vals[idx] = v;
                }
            }
            Ok((grad, value))
        }
        Potential::Bm(_) => {
            let warm_snapshot: Vec<Option<[f64; 5]>> = match warm.as_ref() {
                Some(w) => w.iter().map(|d| Some(*d)).collect(),
                None => vec![None; len],
            };
            let results: Vec<Result<([f64; 5], f64, [f64; 5]), SolverError>> = (0..len)
                .into_par_iter()
                .map(|idx| {
                    let q = QTensor::from_coeffs(coeffs_at(idx));
                    pot.f_bulk_with_value(&q, warm_snapshot[idx])
                        .map(|(f, v, dual)| (f.to_coeffs(), v, dual))
                        .map_err(|source| SolverError::PotentialAt {
                            idx,
                            x: grid.point(idx),
                            source,
                        })
                })
                .collect();
            let mut grad = vec![[0.0; 5]; len];
            let mut value = if want_value {
                Some(vec![0.0; len])
            } else {
                None
            };
            let mut new_warm = warm;
            for (idx, r) in results.into_iter().enumerate() {
                let (f, v, dual) = r?;
                grad[idx] = f;
                if let Some(vals) = value.as_mut() {
                    vals[idx] = v;
                }
                if let Some(w) = new_warm.as_deref_mut() {
                    w[idx] = dual;
                }
            }
            Ok((grad, value))
        }
    }
}

fn inverse_all(grid: &SpectralGrid, spec: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    spec.iter().map(|s| grid.inverse_real(s)).collect()
}

/// Explicit terms of both equations from dealiased spectral state.
#[allow(clippy::too_many_arguments)]
pub(crate) fn explicit_terms(
    grid: &Arc<SpectralGrid>,
    pot: &Potential,
    u_spec: &[Vec<Complex64>],
    q_spec: &[Vec<Complex64>],
    l_elastic: f64,
    gamma_rot: f64,
    warm: Option<&mut Vec<[f64; 5]>>,
    want_energy: bool,
    forcing: Option<&Forcing>,
) -> Result<ExplicitTerms, SolverError> {
    let d = grid.dim();
    let len = grid.len();

    let u_phys = inverse_all(grid, u_spec);
    let q_phys = inverse_all(grid, q_spec);

    // du[a][b] = d_b u_a
    let du: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| grid.inverse_real(&grid.derivative(&u_spec[a], b)))
                .collect()
        })
        .collect();
    // dq[b][c] = d_b q_c
    let dq: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|b| {
            (0..5)
                .map(|c| grid.inverse_real(&grid.derivative(&q_spec[c], b)))
                .collect()
        })
        .collect();
    // lap q_c
    let lap_q: Vec<Vec<f64>> = (0..5)
        .map(|c| {
            let mut s = q_spec[c].clone();
            grid.laplacian_inplace(&mut s);
            grid.inverse_real(&s)
        })
        .collect();

    let (f_bulk, bulk_values) = eval_f_bulk(grid, pot, &q_phys, warm, want_energy)?;

    // Q-equation explicit terms and the antisymmetric stress, pointwise.
    let mut nq_phys: Vec<Vec<f64>> = (0..5).map(|_| vec![0.0; len]).collect();
    let nsig = if d == 2 { 1 } else { 3 };
    let mut sig_phys: Vec<Vec<f64>> = (0..nsig).map(|_| vec![0.0; len]).collect();
    let mut diss_h_sum = 0.0f64;
    for idx in 0..len {
        let qc = [
            q_phys[0][idx],
            q_phys[1][idx],
            q_phys[2][idx],
            q_phys[3][idx],
            q_phys[4][idx],
        ];
        let qm = QTensor::from_coeffs(qc).to_mat3();
        // Vorticity W embedded in 3x3.
        let mut w = Mat3::zero();
        for a in 0..d {
            for b in 0..d {
                let v = 0.5 * (du[a][b][idx] - du[b][a][idx]);
                w.set(a, b, v);
            }
        }
        // Corotation W Q - Q W (symmetric traceless).
        let cm = w.matmul(&qm).sub(&qm.matmul(&w));
        let cor = crate::tensor::project_traceless(&cm)
            .expect("finite fields")
            .to_coeffs();
        // Molecular field H = l lap Q - f_bulk.
        let hc: [f64; 5] = std::array::from_fn(|c| l_elastic * lap_q[c][idx] - f_bulk[idx][c]);
        if want_energy {
            diss_h_sum += hc.iter().map(|h| h * h).sum::<f64>();
        }
        let hm = QTensor::from_coeffs(hc).to_mat3();
        let qh = qm.matmul(&hm);
        // sigma = Q H - H Q, antisymmetric: store upper entries (01, 02, 12).
        sig_phys[0][idx] = qh.get(0, 1) - qh.get(1, 0);
        if d == 3 {
            sig_phys[1][idx] = qh.get(0, 2) - qh.get(2, 0);
            sig_phys[2][idx] = qh.get(1, 2) - qh.get(2, 1);
        }
        for c in 0..5 {
            let mut adv = 0.0;
            for b in 0..d {
                adv += u_phys[b][idx] * dq[b][c][idx];
            }
            nq_phys[c][idx] = -adv + cor[c] - gamma_rot * f_bulk[idx][c];
        }
    }

    let mut nq: Vec<Vec<Complex64>> = nq_phys.iter().map(|f| grid.forward(f)).collect();
    for s in nq.iter_mut() {
        grid.dealias(s);
    }

    // Velocity: advection + elastic force in physical space.
    let mut nu_phys: Vec<Vec<f64>> = (0..d).map(|_| vec![0.0; len]).collect();
    for a in 0..d {
        for idx in 0..len {
            let mut adv = 0.0;
            for b in 0..d {
                adv += u_phys[b][idx] * du[a][b][idx];
            }
            let mut elastic = 0.0;
            for c in 0..5 {
                elastic += dq[a][c][idx] * lap_q[c][idx];
            }
            nu_phys[a][idx] = -adv - l_elastic * elastic;
        }
    }
    let mut nu: Vec<Vec<Complex64>> = nu_phys.iter().map(|f| grid.forward(f)).collect();

    // div sigma in spectral space: (div sigma)_a = i k_b sigma_hat_ab.
    let sig_spec: Vec<Vec<Complex64>> = sig_phys
        .iter()
        .map(|f| {
            let mut s = grid.forward(f);
            grid.dealias(&mut s);
            s
        })
        .collect();
    for idx in 0..len {
        let k = grid.wavevector(idx);
        let ik = |axis: usize, v: Complex64| Complex64::new(-v.im * k[axis], v.re * k[axis]);
        let s01 = sig_spec[0][idx];
        if d == 2 {
            nu[0][idx] += ik(1, s01);
            nu[1][idx] += ik(0, -s01);
        } else {
            let s02 = sig_spec[1][idx];
            let s12 = sig_spec[2][idx];
            nu[0][idx] += ik(1, s01) + ik(2, s02);
            nu[1][idx] += ik(0, -s01) + ik(2, s12);
            nu[2][idx] += ik(0, -s02) + ik(1, -s12);
        }
    }
    for s in nu.iter_mut() {
        grid.dealias(s);
    }

    if let Some(f) = forcing {
        for (a, s) in nu.iter_mut().enumerate() {
            for (v, fv) in s.iter_mut().zip(&f.fu[a]) {
                *v += fv;
            }
        }
        for (c, s) in nq.iter_mut().enumerate() {
            for (v, fv) in s.iter_mut().zip(&f.fq[c]) {
                *v += fv;
            }
        }
    }

    let energy = if want_energy {
        let vol = grid.cell_volume();
        let mut kinetic = 0.0;
        for comp in u_phys.iter() {
            for v in comp {
                kinetic += 0.5 * v * v;
            }
        }
        let mut elastic = 0.0;
        for row in dq.iter() {
            for comp in row {
                for v in comp {
                    elastic += 0.5 * v * v;
                }
            }
        }
        let mut diss_u = 0.0;
        for row in du.iter() {
            for comp in row {
                for v in comp {
                    diss_u += v * v;
                }
            }
        }
        let bulk = bulk_values
            .expect("values requested with want_energy")
            .iter()
            .sum::<f64>();
        Some(EnergyParts {
            kinetic: kinetic * vol,
            elastic: elastic * vol,
            bulk: bulk * vol,
            diss_u: diss_u * vol,
            diss_h: diss_h_sum * vol,
        })
    } else {
        None
    };

    Ok(ExplicitTerms { nu, nq, energy })
}

/// Project spectral velocity components onto divergence-free fields:
/// `u_hat -= k (k . u_hat) / |k|^2`, mode 0 untouched.
pub(crate) fn leray_project_spec(grid: &SpectralGrid, u: &mut [Vec<Complex64>]) {
    let d = grid.dim();
    for idx in 0..grid.len() {
        let k = grid.wavevector(idx);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            continue;
        }
        let mut kdotu = Complex64::default();
        for a in 0..d {
            kdotu += k[a] * u[a][idx];
        }
        let f = kdotu / k2;
        for a in 0..d {
            u[a][idx] -= k[a] * f;
        }
    }
}

/// Leray projection of a velocity field; idempotent.
pub fn leray_project(u: &VelocityField) -> VelocityField {
    let grid = u.grid().clone();
    let mut spec = u.to_spectral();
    leray_project_spec(&grid, &mut spec);
    VelocityField::from_spectral(&grid, &spec)
}

/// Full Q-tensor rate `lap Q - f_bulk(Q) - u.grad Q + W Q - Q W`
/// (unit material constants).
pub fn q_rhs(
    u: &VelocityField,
    q: &QTensorField,
    spec: &PotentialSpec,
) -> Result<QTensorField, SolverError> {
    if !u.grid().same_grid(q.grid()) {
        return Err(SolverError::GridMismatch);
    }
    let grid = q.grid().clone();
    let pot = Potential::new(spec)?;
    let u_spec = u.to_spectral();
    let q_spec = q.to_spectral();
    let terms = explicit_terms(&grid, &pot, &u_spec, &q_spec, 1.0, 1.0, None, false, None)?;
    let mut rate = terms.nq;
    for (c, s) in rate.iter_mut().enumerate() {
        for (idx, v) in s.iter_mut().enumerate() {
            *v += -grid.k_sq(idx) * q_spec[c][idx];
        }
    }
    Ok(QTensorField::from_spectral(&grid, &rate))
}

/// Full velocity rate before projection:
/// `lap u - u.grad u - (grad Q : lap Q) + div(Q H - H Q)`.
pub fn u_rhs(
    u: &VelocityField,
    q: &QTensorField,
    spec: &PotentialSpec,
) -> Result<VelocityField, SolverError> {
    if !u.grid().same_grid(q.grid()) {
        return Err(SolverError::GridMismatch);
    }
    let grid = q.grid().clone();
    let pot = Potential::new(spec)?;
    let u_spec = u.to_spectral();
    let q_spec = q.to_spectral();
    let terms = explicit_terms(&grid, &pot, &u_spec, &q_spec, 1.0, 1.0, None, false, None)?;
    let mut rate = terms.nu;
    for (a, s) in rate.iter_mut().enumerate() {
        for (idx, v) in s.iter_mut().enumerate() {
            *v += -grid.k_sq(idx) * u_spec[a][idx];
        }
    }
    Ok(VelocityField::from_spectral(&grid, &rate))
}

/// Pressure from its Poisson equation
/// `-lap P = div^2(u x u + grad Q x grad Q - 1/2 |grad Q|^2 I)`,
/// normalized to zero mean.
pub fn pressure_field(u: &VelocityField, q: &QTensorField) -> Result<ScalarField, SolverError> {
    if !u.grid().same_grid(q.grid()) {
        return Err(SolverError::GridMismatch);
    }
    let grid = q.grid().clone();
    let d = grid.dim();
    let len = grid.len();
    let u_spec = u.to_spectral();
    let q_spec = q.to_spectral();
    let u_phys = inverse_all(&grid, &u_spec);
    let dq: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|b| {
            (0..5)
                .map(|c| grid.inverse_real(&grid.derivative(&q_spec[c], b)))
                .collect()
        })
        .collect();

    // T_ab = u_a u_b + d_a Q : d_b Q, and the deviatoric part
    // -1/2 |grad Q|^2 I contributes through the Laplacian below.
    let mut src = vec![Complex64::default(); len];
    for a in 0..d {
        for b in 0..d {
            let mut t = vec![0.0; len];
            for idx in 0..len {
                let mut g = u_phys[a][idx] * u_phys[b][idx];
                for c in 0..5 {
                    g += dq[a][c][idx] * dq[b][c][idx];
                }
                t[idx] = g;
            }
            let mut th = grid.forward(&t);
            grid.dealias(&mut th);
            for idx in 0..len {
                let k = grid.wavevector(idx);
                src[idx] += -k[a] * k[b] * th[idx];
            }
        }
    }
    let mut gradq2 = vec![0.0; len];
    for idx in 0..len {
        let mut g = 0.0;
        for b in 0..d {
            for c in 0..5 {
                g += dq[b][c][idx] * dq[b][c][idx];
            }
        }
        gradq2[idx] = g;
    }
    let mut gh = grid.forward(&gradq2);
    grid.dealias(&mut gh);
    for idx in 0..len {
        let k2 = grid.k_sq(idx);
        src[idx] += 0.5 * k2 * gh[idx];
    }
    // -lap P = src  =>  P_hat = src_hat / |k|^2, P_hat(0) = 0.
    let p = grid.poisson_neg(&src);
    Ok(ScalarField::from_spectral(&grid, &p))
}
