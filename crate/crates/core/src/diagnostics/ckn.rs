//! Renormalized parabolic-cylinder quantities A, B, C, D and the smallness
//! functional Phi = C + D^2, with scaling-relation monitoring and a
//! threshold scan over candidate centers.
//!
//! All cylinder integrals use indicator-restricted product quadrature (grid
//! cells whose centers fall strictly inside the ball, no boundary
//! smoothing), trapezoidal in time over the stored slices with linearly
//! interpolated window endpoints. The sup in A runs over stored slices
//! only, which is why the store cadence is required to resolve r_min^2.

use serde::Serialize;

use super::DiagnosticsError;
use crate::field::ScalarField;
use crate::solver::{pressure_field, Snapshot};
use crate::spectral::SpectralGrid;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CknRadius {
    pub r: f64,
    pub a_q: f64,
    pub b_q: f64,
    pub c_q: f64,
    pub d_q: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CknReport {
    pub center_x: [f64; 3],
    pub center_t: f64,
    pub radii: Vec<CknRadius>,
    /// Fitted log-log slope of C(r) and Phi(r), when enough radii are
    /// nonzero.
    pub slope_c: Option<f64>,
    pub slope_phi: Option<f64>,
    /// Phi at the smallest radius exceeds eps0^3.
    pub flagged: bool,
    pub eps0: f64,
}

/// Per-slice scalar integrand fields.
struct SliceFields {
    /// |u|^2 + |grad Q|^2
    e2: Vec<f64>,
    /// |u|^3 + |grad Q|^3
    e3: Vec<f64>,
    /// |grad u|^2 + |hess Q|^2
    g2: Vec<f64>,
    /// |P|^(3/2)
    p32: Vec<f64>,
}

fn slice_fields(snap: &Snapshot, pressure: &ScalarField) -> SliceFields {
    let grid = snap.q.grid().clone();
    let d = grid.dim();
    let len = grid.len();
    let u_spec = snap.u.to_spectral();
    let q_spec = snap.q.to_spectral();

    let mut gradq2 = vec![0.0; len];
    for s in &q_spec {
        for b in 0..d {
            let der = grid.inverse_real(&grid.derivative(s, b));
            for (acc, v) in gradq2.iter_mut().zip(&der) {
                *acc += v * v;
            }
        }
    }
    let mut gradu2 = vec![0.0; len];
    for s in &u_spec {
        for b in 0..d {
            let der = grid.inverse_real(&grid.derivative(s, b));
            for (acc, v) in gradu2.iter_mut().zip(&der) {
                *acc += v * v;
            }
        }
    }
    let mut hessq2 = vec![0.0; len];
    for s in &q_spec {
        for a in 0..d {
            let da = grid.derivative(s, a);
            for b in 0..d {
                let der = grid.inverse_real(&grid.derivative(&da, b));
                for (acc, v) in hessq2.iter_mut().zip(&der) {
                    *acc += v * v;
                }
            }
        }
    }
    let mut e2 = vec![0.0; len];
    let mut e3 = vec![0.0; len];
    let mut g2 = vec![0.0; len];
    let mut p32 = vec![0.0; len];
    for idx in 0..len {
        let v = snap.u.at(idx);
        let u2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        e2[idx] = u2 + gradq2[idx];
        e3[idx] = u2.powf(1.5) + gradq2[idx].powf(1.5);
        g2[idx] = gradu2[idx] + hessq2[idx];
        p32[idx] = pressure.data[idx].abs().powf(1.5);
    }
    SliceFields { e2, e3, g2, p32 }
}

/// Grid-cell indices strictly inside the periodic ball of radius r.
fn ball_indices(grid: &Arc<SpectralGrid>, center: [f64; 3], r: f64) -> Vec<usize> {
    let side = 2.0 * std::f64::consts::PI;
    let mut out = Vec::new();
    for idx in 0..grid.len() {
        let p = grid.point(idx);
        let mut d2 = 0.0;
        for a in 0..grid.dim() {
            let mut dx = (p[a] - center[a]) % side;
            if dx > side / 2.0 {
                dx -= side;
            }
            if dx < -side / 2.0 {
                dx += side;
            }
            d2 += dx * dx;
        }
        if d2 < r * r {
            out.push(idx);
        }
    }
    out
}

fn ball_sum(field: &[f64], ball: &[usize], vol: f64) -> f64 {
    ball.iter().map(|&i| field[i]).sum::<f64>() * vol
}

/// Linear interpolation weight bookkeeping for window endpoints.
fn interp_value(times: &[f64], values: &[f64], t: f64) -> f64 {
    let pos = times.partition_point(|&s| s <= t);
    if pos == 0 {
        values[0]
    } else if pos >= times.len() {
        values[times.len() - 1]
    } else {
        let (ta, tb) = (times[pos - 1], times[pos]);
        let f = (t - ta) / (tb - ta);
        values[pos - 1] * (1.0 - f) + values[pos] * f
    }
}

/// Trapezoid over the window [t0 - r^2, t0] with slice nodes and linearly
/// interpolated endpoint values.
fn window_integral(times: &[f64], values: &[f64], t_lo: f64, t_hi: f64) -> f64 {
    let mut nodes = vec![t_lo];
    for &t in times {
        if t > t_lo && t < t_hi {
            nodes.push(t);
        }
    }
    nodes.push(t_hi);
    let mut acc = 0.0;
    for w in nodes.windows(2) {
        let va = interp_value(times, values, w[0]);
        let vb = interp_value(times, values, w[1]);
        acc += 0.5 * (va + vb) * (w[1] - w[0]);
    }
    acc
}

pub(crate) struct TrajectoryFields {
    times: Vec<f64>,
    fields: Vec<SliceFields>,
    grid: Arc<SpectralGrid>,
}

pub(crate) fn prepare_trajectory(
    slices: &[Snapshot],
    pressures: Option<&[ScalarField]>,
) -> Result<TrajectoryFields, DiagnosticsError> {
    if slices.is_empty() {
        return Err(DiagnosticsError::WindowNotCovered { t0: 0.0, t1: 0.0 });
    }
    let grid = slices[0].q.grid().clone();
    let mut fields = Vec::with_capacity(slices.len());
    for (i, s) in slices.iter().enumerate() {
        let p = match pressures {
            Some(ps) => ps[i].clone(),
            None => pressure_field(&s.u, &s.q)?,
        };
        fields.push(slice_fields(s, &p));
    }
    Ok(TrajectoryFields {
        times: slices.iter().map(|s| s.t).collect(),
        fields,
        grid,
    })
}

fn quantities_at(
    traj: &TrajectoryFields,
    center_x: [f64; 3],
    center_t: f64,
    r: f64,
) -> Result<CknRadius, DiagnosticsError> {
    let grid = &traj.grid;
    let h = grid.h();
    if r < 4.0 * h {
        return Err(DiagnosticsError::UnderResolved {
            r,
            need: ">= 4 grid cells across the radius",
            min_r: 4.0 * h,
        });
    }
    let t_lo = center_t - r * r;
    let t_hi = center_t;
    let first = *traj.times.first().unwrap();
    let last = *traj.times.last().unwrap();
    if t_lo < first - 1e-12 || t_hi > last + 1e-12 {
        return Err(DiagnosticsError::WindowNotCovered { t0: t_lo, t1: t_hi });
    }
    let in_window: Vec<usize> = (0..traj.times.len())
        .filter(|&i| traj.times[i] >= t_lo - 1e-12 && traj.times[i] <= t_hi + 1e-12)
        .collect();
    if in_window.len() < 4 {
        return Err(DiagnosticsError::UnderResolved {
            r,
            need: ">= 4 stored slices in the time window",
            min_r: r,
        });
    }
    // Store cadence must resolve the window: max slice gap <= r^2 / 4.
    let mut max_gap = 0.0f64;
    for w in traj.times.windows(2) {
        if w[1] >= t_lo && w[0] <= t_hi {
            max_gap = max_gap.max(w[1] - w[0]);
        }
    }
    if max_gap > r * r / 4.0 + 1e-12 {
        return Err(DiagnosticsError::UnderResolved {
            r,
            need: "store cadence <= r_min^2/4",
            min_r: (4.0 * max_gap).sqrt(),
        });
    }

    let ball = ball_indices(grid, center_x, r);
    let vol = grid.cell_volume();
    let n = traj.times.len();
    let mut s_e2 = Vec::with_capacity(n);
    let mut s_e3 = Vec::with_capacity(n);
    let mut s_g2 = Vec::with_capacity(n);
    let mut s_p32 = Vec::with_capacity(n);
    for f in &traj.fields {
        s_e2.push(ball_sum(&f.e2, &ball, vol));
        s_e3.push(ball_sum(&f.e3, &ball, vol));
        s_g2.push(ball_sum(&f.g2, &ball, vol));
        s_p32.push(ball_sum(&f.p32, &ball, vol));
    }
    let a_q = in_window.iter().map(|&i| s_e2[i]).fold(0.0f64, f64::max) / r;
    let b_q = window_integral(&traj.times, &s_g2, t_lo, t_hi) / r;
    let c_q = window_integral(&traj.times, &s_e3, t_lo, t_hi) / (r * r);
    let d_q = window_integral(&traj.times, &s_p32, t_lo, t_hi) / (r * r);
    Ok(CknRadius {
        r,
        a_q,
        b_q,
        c_q,
        d_q,
        phi: c_q + d_q * d_q,
    })
}

fn loglog_slope(radii: &[f64], values: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(r, v)| (r.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Evaluate A, B, C, D, Phi on a stored trajectory at one center over a
/// decreasing list of radii. `pressures` may be precomputed; otherwise the
/// zero-mean pressure is solved per slice.
pub fn ckn_quantities(
    slices: &[Snapshot],
    pressures: Option<&[ScalarField]>,
    center_x: [f64; 3],
    center_t: f64,
    radii: &[f64],
    eps0: f64,
) -> Result<CknReport, DiagnosticsError> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) || radii.iter().any(|r| *r <= 0.0)
    {
        return Err(DiagnosticsError::BadRadii);
    }
    let traj = prepare_trajectory(slices, pressures)?;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        rows.push(quantities_at(&traj, center_x, center_t, r)?);
    }
    let rs: Vec<f64> = rows.iter().map(|q| q.r).collect();
    let slope_c = loglog_slope(&rs, &rows.iter().map(|q| q.c_q).collect::<Vec<_>>());
    let slope_phi = loglog_slope(&rs, &rows.iter().map(|q| q.phi).collect::<Vec<_>>());
    let flagged = rows.last().map(|q| q.phi > eps0.powi(3)).unwrap_or(false);
    Ok(CknReport {
        center_x,
        center_t,
        radii: rows,
        slope_c,
        slope_phi,
        flagged,
        eps0,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingEntry {
    pub r: f64,
    pub rho: f64,
    /// C(r) over its interpolation majorant, None when the majorant
    /// vanishes.
    pub ratio_c: Option<f64>,
    /// D(r) over its majorant.
    pub ratio_d: Option<f64>,
}

/// Observed constants of the scaling inequalities between every radius pair
/// r < rho in a report. A monitoring ledger: the inequalities hide
/// constants, so stability across pairs is the datum.
pub fn ckn_scaling_check(report: &CknReport) -> Vec<ScalingEntry> {
    let mut out = Vec::new();
    for i in 0..report.radii.len() {
        for j in 0..i {
            let fine = &report.radii[i]; // smaller radius
            let coarse = &report.radii[j];
            let (r, rho) = (fine.r, coarse.r);
            let ab = coarse.a_q.powf(0.75) * coarse.b_q.powf(0.75);
            let maj_c = (r / rho).powi(3) * coarse.a_q.powf(1.5) + (rho / r).powi(3) * ab;
            let maj_d = (r / rho) * coarse.d_q + (rho / r).powi(2) * ab;
            out.push(ScalingEntry {
                r,
                rho,
                ratio_c: (maj_c > 0.0).then(|| fine.c_q / maj_c),
                ratio_d: (maj_d > 0.0).then(|| fine.d_q / maj_d),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanEntry {
    pub center_x: [f64; 3],
    pub center_t: f64,
    pub phi_smallest: f64,
    pub b_smallest: f64,
    pub flag_phi: bool,
    pub flag_b: bool,
    pub slope_phi: Option<f64>,
}

impl ScanEntry {
    pub fn flagged(&self) -> bool {
        self.flag_phi || self.flag_b
    }
}

/// Threshold scan: flag centers whose smallness quantities exceed eps0^3
/// (Phi) or eps1^2 (the gradient quantity B) at the smallest resolved
/// radius, and report the fitted Phi decay slope.
pub fn singularity_scan(
    slices: &[Snapshot],
    pressures: Option<&[ScalarField]>,
    eps0: f64,
    eps1: f64,
    centers: &[([f64; 3], f64)],
    radii: &[f64],
) -> Result<Vec<ScanEntry>, DiagnosticsError> {
    let mut out = Vec::with_capacity(centers.len());
    for &(cx, ct) in centers {
        let report = ckn_quantities(slices, pressures, cx, ct, radii, eps0)?;
        let last = report.radii.last().unwrap();
        out.push(ScanEntry {
            center_x: cx,
            center_t: ct,
            phi_smallest: last.phi,
            b_smallest: last.b_q,
            flag_phi: last.phi > eps0.powi(3),
            flag_b: last.b_q > eps1 * eps1,
            slope_phi: report.slope_phi,
        });
    }
    Ok(out)
}
