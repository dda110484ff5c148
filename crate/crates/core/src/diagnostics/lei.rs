//! Local energy identity residual.
//!
//! For smooth solutions the localized energy balance is an equality; its
//! signed residual (rhs - lhs) measured on solver output vanishes at the
//! order of the time discretization. The test function is a space-time
//! bump phi(x, t) = psi(x) g(t): psi a smooth radial bump rendered on the
//! grid (spatial derivatives spectral), g a one-sided bump in time with
//! analytic derivative, ramping up to 1 at the evaluation time.

use serde::Serialize;

use super::DiagnosticsError;
use crate::field::ScalarField;
use crate::potential::{Potential, PotentialSpec};
use crate::solver::rhs::eval_f_bulk;
use crate::solver::{pressure_field, Snapshot};
use crate::tensor::{Mat3, QTensor};

#[derive(Debug, Clone, Copy)]
pub struct LeiSpec {
    pub center: [f64; 3],
    /// Terminal time of the balance window.
    pub t_eval: f64,
    pub space_radius: f64,
    pub time_radius: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LeiReport {
    pub lhs_terminal: f64,
    pub lhs_dissipation: f64,
    pub lhs: f64,
    /// Named right-hand-side terms; their ordered sum is `rhs` exactly.
    pub terms: Vec<(String, f64)>,
    pub rhs: f64,
    /// rhs - lhs; vanishes under refinement for smooth runs.
    pub residual: f64,
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// Time profile g and its derivative: g(t) = bump((t_eval - t)/Rt).
fn time_profile(t: f64, t_eval: f64, rt: f64) -> (f64, f64) {
    let tau = (t_eval - t) / rt;
    if !(0.0..1.0).contains(&tau) {
        // g vanishes before the window; t beyond t_eval never queried
        return (0.0, 0.0);
    }
    let g = bump(tau);
    let om = 1.0 - tau * tau;
    let dg = g * (2.0 * tau / (om * om)) / rt;
    (g, dg)
}

struct SliceTerms {
    terminal: f64,
    dissipation: f64,
    t1: f64,
    t2: f64,
    t3: f64,
    t4: f64,
    t5: f64,
    t6: f64,
}

/// Evaluate the localized energy balance of a stored trajectory against a
/// bump test function. Slices must cover `[t_eval - time_radius, t_eval]`.
pub fn local_energy_residual(
    slices: &[Snapshot],
    pressures: Option<&[ScalarField]>,
    spec: &PotentialSpec,
    lei: &LeiSpec,
) -> Result<LeiReport, DiagnosticsError> {
    if slices.is_empty() {
        return Err(DiagnosticsError::WindowNotCovered {
            t0: lei.t_eval - lei.time_radius,
            t1: lei.t_eval,
        });
    }
    let grid = slices[0].q.grid().clone();
    let d = grid.dim();
    let len = grid.len();
    let vol = grid.cell_volume();
    if lei.space_radius.is_nan()
        || lei.space_radius <= 0.0
        || lei.space_radius >= std::f64::consts::PI
    {
        return Err(DiagnosticsError::InvalidTestFunction(
            "space radius must fit inside the torus".into(),
        ));
    }
    if lei.time_radius.is_nan() || lei.time_radius <= 0.0 {
        return Err(DiagnosticsError::InvalidTestFunction(
            "time radius must be positive".into(),
        ));
    }
    let t_start = lei.t_eval - lei.time_radius;
    let first = slices.first().unwrap().t;
    let last = slices.last().unwrap().t;
    if t_start < first - 1e-12 || lei.t_eval > last + 1e-12 {
        return Err(DiagnosticsError::WindowNotCovered {
            t0: t_start,
            t1: lei.t_eval,
        });
    }
    let pot = Potential::new(spec)?;

    // Spatial bump and its spectral derivatives, shared by all slices.
    let side = 2.0 * std::f64::consts::PI;
    let psi = ScalarField::from_fn(&grid, |p| {
        let mut d2 = 0.0;
        for a in 0..d {
            let mut dx = (p[a] - lei.center[a]) % side;
            if dx > side / 2.0 {
                dx -= side;
            }
            if dx < -side / 2.0 {
                dx += side;
            }
            d2 += dx * dx;
        }
        bump(d2.sqrt() / lei.space_radius)
    });
    let psi_spec = psi.to_spectral();
    let dpsi: Vec<Vec<f64>> = (0..d)
        .map(|a| grid.inverse_real(&grid.derivative(&psi_spec, a)))
        .collect();
    let mut ddpsi: Vec<Vec<Vec<f64>>> = Vec::with_capacity(d);
    for a in 0..d {
        let da = grid.derivative(&psi_spec, a);
        ddpsi.push(
            (0..d)
                .map(|b| grid.inverse_real(&grid.derivative(&da, b)))
                .collect(),
        );
    }
    let lap_psi: Vec<f64> = {
        let mut s = psi_spec.clone();
        grid.laplacian_inplace(&mut s);
        grid.inverse_real(&s)
    };

    // Per-slice spatially integrated terms.
    let times: Vec<f64> = slices.iter().map(|s| s.t).collect();
    let mut per_slice: Vec<SliceTerms> = Vec::with_capacity(slices.len());
    for (i, snap) in slices.iter().enumerate() {
        if snap.t < t_start - (times[1] - times[0]) - 1e-9 || snap.t > lei.t_eval + 1e-12 {
            // outside the window (keep one slice of margin for endpoint
            // interpolation)
            per_slice.push(SliceTerms {
                terminal: 0.0,
                dissipation: 0.0,
                t1: 0.0,
                t2: 0.0,
                t3: 0.0,
                t4: 0.0,
                t5: 0.0,
                t6: 0.0,
            });
            continue;
        }
        let p_field = match pressures {
            Some(ps) => ps[i].clone(),
            None => pressure_field(&snap.u, &snap.q)?,
        };
        let u_spec = snap.u.to_spectral();
        let q_spec = snap.q.to_spectral();
        let q_phys: Vec<Vec<f64>> = q_spec.iter().map(|s| grid.inverse_real(s)).collect();
        let du: Vec<Vec<Vec<f64>>> = (0..d)
            .map(|a| {
                (0..d)
                    .map(|b| grid.inverse_real(&grid.derivative(&u_spec[a], b)))
                    .collect()
            })
            .collect();
        let dq: Vec<Vec<Vec<f64>>> = (0..d)
            .map(|a| {
                (0..5)
                    .map(|c| grid.inverse_real(&grid.derivative(&q_spec[c], a)))
                    .collect()
            })
            .collect();
        let lap_q: Vec<Vec<f64>> = (0..5)
            .map(|c| {
                let mut s = q_spec[c].clone();
                grid.laplacian_inplace(&mut s);
                grid.inverse_real(&s)
            })
            .collect();
        let (fb, _) = eval_f_bulk(&grid, &pot, &q_phys, None, false)?;
        // spectral derivatives of the bulk derivative field
        let fb_spec: Vec<Vec<rustfft::num_complex::Complex64>> = (0..5)
            .map(|c| {
                let field: Vec<f64> = (0..len).map(|idx| fb[idx][c]).collect();
                grid.forward(&field)
            })
            .collect();
        let dfb: Vec<Vec<Vec<f64>>> = (0..d)
            .map(|a| {
                (0..5)
                    .map(|c| grid.inverse_real(&grid.derivative(&fb_spec[c], a)))
                    .collect()
            })
            .collect();

        let mut st = SliceTerms {
            terminal: 0.0,
            dissipation: 0.0,
            t1: 0.0,
            t2: 0.0,
            t3: 0.0,
            t4: 0.0,
            t5: 0.0,
            t6: 0.0,
        };
        for idx in 0..len {
            let uv = snap.u.at(idx);
            let u2 = uv[0] * uv[0] + uv[1] * uv[1] + uv[2] * uv[2];
            let mut gradq2 = 0.0;
            for a in 0..d {
                for c in 0..5 {
                    gradq2 += dq[a][c][idx] * dq[a][c][idx];
                }
            }
            let e2 = u2 + gradq2;
            let mut gradu2 = 0.0;
            for a in 0..d {
                for b in 0..d {
                    gradu2 += du[a][b][idx] * du[a][b][idx];
                }
            }
            let mut lapq2 = 0.0;
            for c in 0..5 {
                lapq2 += lap_q[c][idx] * lap_q[c][idx];
            }
            st.terminal += e2 * psi.data[idx];
            st.dissipation += (gradu2 + lapq2) * psi.data[idx];
            st.t1 += e2 * lap_psi[idx]; // the d_t phi part is assembled later
            let mut u_dot_dpsi = 0.0;
            for a in 0..d {
                u_dot_dpsi += uv[a] * dpsi[a][idx];
            }
            st.t2 += (u2 + 2.0 * p_field.data[idx]) * u_dot_dpsi;
            // grad Q x grad Q contractions
            for a in 0..d {
                for b in 0..d {
                    let mut qq = 0.0;
                    for c in 0..5 {
                        qq += dq[a][c][idx] * dq[b][c][idx];
                    }
                    st.t3 += 2.0 * qq * uv[a] * dpsi[b][idx];
                    st.t4 += 2.0 * qq * ddpsi[a][b][idx];
                }
            }
            st.t4 -= 2.0 * gradq2 * lap_psi[idx];
            // stress and corotation
            let qm = snap.q.at(idx).to_mat3();
            let hc: [f64; 5] = std::array::from_fn(|c| lap_q[c][idx] - fb[idx][c]);
            let hm = QTensor::from_coeffs(hc).to_mat3();
            let qh = qm.matmul(&hm);
            let sig = qh.sub(&qh.transpose());
            for a in 0..d {
                for b in 0..d {
                    st.t5 -= 2.0 * sig.get(a, b) * uv[a] * dpsi[b][idx];
                }
            }
            let mut w = Mat3::zero();
            for a in 0..d {
                for b in 0..d {
                    w.set(a, b, 0.5 * (du[a][b][idx] - du[b][a][idx]));
                }
            }
            let com = w.matmul(&qm).sub(&qm.matmul(&w));
            for a in 0..d {
                let dqa = QTensor::from_coeffs([
                    dq[a][0][idx],
                    dq[a][1][idx],
                    dq[a][2][idx],
                    dq[a][3][idx],
                    dq[a][4][idx],
                ]);
                st.t6 -= 2.0 * com.ddot(&dqa.to_mat3()) * dpsi[a][idx];
                let mut df_dq = 0.0;
                for c in 0..5 {
                    df_dq += dfb[a][c][idx] * dq[a][c][idx];
                }
                st.t6 -= 2.0 * df_dq * psi.data[idx];
            }
        }
        st.terminal *= vol;
        st.dissipation *= vol;
        st.t1 *= vol;
        st.t2 *= vol;
        st.t3 *= vol;
        st.t4 *= vol;
        st.t5 *= vol;
        st.t6 *= vol;
        per_slice.push(st);
    }

    // Time quadrature: trapezoid with interpolated endpoints; the d_t phi
    // part of T1 carries the analytic g'.
    let interp = |vals: &dyn Fn(usize) -> f64, t: f64| -> f64 {
        let pos = times.partition_point(|&s| s <= t);
        if pos == 0 {
            vals(0)
        } else if pos >= times.len() {
            vals(times.len() - 1)
        } else {
            let (ta, tb) = (times[pos - 1], times[pos]);
            let f = (t - ta) / (tb - ta);
            vals(pos - 1) * (1.0 - f) + vals(pos) * f
        }
    };
    let mut nodes = vec![t_start];
    for &t in &times {
        if t > t_start && t < lei.t_eval {
            nodes.push(t);
        }
    }
    nodes.push(lei.t_eval);
    let integrate = |weighted: &dyn Fn(usize, f64) -> f64| -> f64 {
        // weighted(i, t) must evaluate slice i's contribution at time t
        let mut acc = 0.0;
        for w in nodes.windows(2) {
            let va = interp(&|i| weighted(i, w[0]), w[0]);
            let vb = interp(&|i| weighted(i, w[1]), w[1]);
            acc += 0.5 * (va + vb) * (w[1] - w[0]);
        }
        acc
    };
    let g_of = |t: f64| time_profile(t, lei.t_eval, lei.time_radius);

    let lhs_terminal = interp(&|i| per_slice[i].terminal, lei.t_eval) * g_of(lei.t_eval).0;
    let lhs_dissipation = 2.0 * integrate(&|i, t| per_slice[i].dissipation * g_of(t).0);
    let lhs = lhs_terminal + lhs_dissipation;

    let t1 = integrate(&|i, t| {
        let (g, dg) = g_of(t);
        per_slice[i].terminal * dg + per_slice[i].t1 * g
    });
    let t2 = integrate(&|i, t| per_slice[i].t2 * g_of(t).0);
    let t3 = integrate(&|i, t| per_slice[i].t3 * g_of(t).0);
    let t4 = integrate(&|i, t| per_slice[i].t4 * g_of(t).0);
    let t5 = integrate(&|i, t| per_slice[i].t5 * g_of(t).0);
    let t6 = integrate(&|i, t| per_slice[i].t6 * g_of(t).0);
    let terms = vec![
        ("transport".to_string(), t1),
        ("pressure-flux".to_string(), t2),
        ("elastic-flux".to_string(), t3),
        ("elastic-hessian".to_string(), t4),
        ("stress-flux".to_string(), t5),
        ("corotation-bulk".to_string(), t6),
    ];
    let rhs = terms.iter().map(|(_, v)| v).sum::<f64>();
    Ok(LeiReport {
        lhs_terminal,
        lhs_dissipation,
        lhs,
        terms,
        rhs,
        residual: rhs - lhs,
    })
}
