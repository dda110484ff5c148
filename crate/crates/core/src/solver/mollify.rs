//! Retarded space-time mollifier.
//!
//! The smoothing kernel lives on parabolically scaled support: source times
//! range over `[t - 2 theta^2, t - theta^2]` and the spatial radius at delay
//! tau is sqrt(tau), so the output at time t depends only on strictly past
//! data. Inputs before t = 0 are the zero extension. The kernel is a product
//! of smooth bumps, normalized numerically over its discrete quadrature so
//! the total weight of a fully covered window is exactly one; spatial
//! convolution is spectral, time quadrature is trapezoidal on a uniform
//! refinement of the window with linear interpolation from the history
//! buffer (never touching slices later than t - theta^2).

use rustfft::num_complex::Complex64;
use std::sync::Arc;

use crate::field::{QTensorField, VelocityField};
use crate::spectral::SpectralGrid;

use super::{Snapshot, SolverError};

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

/// Spectral multiplier of the normalized spatial bump of radius r.
fn spatial_kernel_spec(grid: &Arc<SpectralGrid>, r: f64) -> Vec<Complex64> {
    let half = std::f64::consts::PI;
    let mut g = vec![0.0; grid.len()];
    let mut total = 0.0;
    for (idx, v) in g.iter_mut().enumerate() {
        let p = grid.point(idx);
        let mut d2 = 0.0;
        for x in p.iter().take(grid.dim()) {
            // centered periodic distance about the origin
            let mut dx = *x;
            if dx > half {
                dx -= 2.0 * half;
            }
            d2 += dx * dx;
        }
        *v = bump(d2.sqrt() / r);
        total += *v;
    }
    let scale = 1.0 / total;
    for v in &mut g {
        *v *= scale;
    }
    // Unit-mass kernel: the multiplier at k = 0 is exactly 1 and |.| <= 1
    // elsewhere, so the convolution is an L2 contraction.
    let mut spec = grid.forward(&g);
    let norm = spec[0].re;
    for v in &mut spec {
        *v /= norm;
    }
    spec
}

/// Apply the retarded mollifier to a history of snapshots at `eval_t`.
/// `history` must be sorted by strictly increasing time.
pub fn retarded_mollify(
    history: &[Snapshot],
    theta: f64,
    eval_t: f64,
) -> Result<(VelocityField, QTensorField), SolverError> {
    if history.is_empty() {
        return Err(SolverError::Config("empty history".into()));
    }
    let grid = history[0].u.grid().clone();
    if !(theta > 0.0) || 2.0f64.sqrt() * theta >= std::f64::consts::PI {
        return Err(SolverError::Config(format!(
            "mollifier width theta = {theta} out of range for the torus"
        )));
    }
    let th2 = theta * theta;
    let latest_source = eval_t - th2;
    let earliest_source = eval_t - 2.0 * th2;

    // Causal slice set: everything at or before eval_t - theta^2.
    let causal: Vec<&Snapshot> = history
        .iter()
        .filter(|s| s.t <= latest_source + 0.0)
        .collect();
    // Coverage: sources in [max(0, earliest), latest] must be bracketed by
    // stored slices; earlier sources read the zero extension.
    let needed_from = earliest_source.max(0.0);
    if latest_source >= 0.0 {
        let have_from = causal.first().map(|s| s.t).unwrap_or(f64::INFINITY);
        if causal.len() < 2 || have_from > needed_from + 1e-12 {
            return Err(SolverError::InsufficientHistory {
                needed: needed_from,
                have: have_from,
            });
        }
    }

    let d = grid.dim();
    let mut out_u = vec![vec![Complex64::default(); grid.len()]; d];
    let mut out_q = vec![vec![Complex64::default(); grid.len()]; 5];

    // Uniform trapezoid nodes in the delay variable tau over
    // [theta^2, 2 theta^2]; the kernel time profile vanishes at both ends.
    let m = 32usize;
    let mut node_w = Vec::with_capacity(m + 1);
    let mut node_tau = Vec::with_capacity(m + 1);
    let dtau = th2 / m as f64;
    let mut total = 0.0;
    for j in 0..=m {
        let tau = th2 + j as f64 * dtau;
        let s = tau / th2; // in [1, 2]
        let w_trap = if j == 0 || j == m { 0.5 } else { 1.0 };
        let w = bump(2.0 * (s - 1.5)) * w_trap;
        node_tau.push(tau);
        node_w.push(w);
        total += w;
    }
    for w in &mut node_w {
        *w /= total;
    }

    // Spectra of the causal slices, computed lazily.
    let mut spectra: Vec<Option<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)>> =
        vec![None; causal.len()];
    let spectrum_of = |slices: &[&Snapshot],
                       cache: &mut Vec<Option<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>)>>,
                       i: usize|
     -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
        if cache[i].is_none() {
            cache[i] = Some((slices[i].u.to_spectral(), slices[i].q.to_spectral()));
        }
        cache[i].clone().unwrap()
    };

    for (j, (&tau, &w)) in node_tau.iter().zip(&node_w).enumerate() {
        let _ = j;
        if w == 0.0 {
            continue;
        }
        let source_t = eval_t - tau;
        if source_t < 0.0 {
            continue; // zero extension
        }
        // Locate the bracketing causal slices; flat-extend past the ends.
        let pos = causal.partition_point(|s| s.t <= source_t);
        let (ia, ib, frac) = if pos == 0 {
            (0, 0, 0.0)
        } else if pos >= causal.len() {
            (causal.len() - 1, causal.len() - 1, 0.0)
        } else {
            let (ta, tb) = (causal[pos - 1].t, causal[pos].t);
            (pos - 1, pos, (source_t - ta) / (tb - ta))
        };
        let kernel = spatial_kernel_spec(&grid, tau.sqrt());
        let (ua, qa) = spectrum_of(&causal, &mut spectra, ia);
        let (ub, qb) = spectrum_of(&causal, &mut spectra, ib);
        for a in 0..d {
            for idx in 0..grid.len() {
                let val = ua[a][idx] * (1.0 - frac) + ub[a][idx] * frac;
                out_u[a][idx] += w * kernel[idx] * val;
            }
        }
        for c in 0..5 {
            for idx in 0..grid.len() {
                let val = qa[c][idx] * (1.0 - frac) + qb[c][idx] * frac;
                out_q[c][idx] += w * kernel[idx] * val;
            }
        }
    }

    Ok((
        VelocityField::from_spectral(&grid, &out_u),
        QTensorField::from_spectral(&grid, &out_q),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::initial::smooth_random_fields;
    use crate::solver::Snapshot;

    fn history(grid: &Arc<SpectralGrid>, n: usize, dt: f64, seed: u64) -> Vec<Snapshot> {
        (0..n)
            .map(|i| {
                let (u, q) = smooth_random_fields(grid, seed + i as u64, 1.0, 0.5, 2.5);
                Snapshot {
                    t: i as f64 * dt,
                    u,
                    q,
                }
            })
            .collect()
    }

    #[test]
    fn zero_input_gives_zero() {
        let grid = SpectralGrid::new(2, 16).unwrap();
        let hist: Vec<Snapshot> = (0..8)
            .map(|i| Snapshot {
                t: i as f64 * 0.01,
                u: VelocityField::zeros(&grid),
                q: QTensorField::zeros(&grid),
            })
            .collect();
        let (u, q) = retarded_mollify(&hist, 0.2, 0.07).unwrap();
        assert!(u.max_abs() == 0.0);
        assert!(q.max_norm() == 0.0);
    }

    #[test]
    fn divergence_free_is_preserved() {
        let grid = SpectralGrid::new(2, 32).unwrap();
        let hist = history(&grid, 10, 0.01, 3);
        for s in &hist {
            assert!(s.u.divergence_defect() < 1e-10);
        }
        let theta = 0.25f64; // window [t - 0.125, t - 0.0625]
        let (u, _) = retarded_mollify(&hist, theta, 0.09).unwrap();
        assert!(u.max_abs() > 1e-6, "output should be nonzero");
        assert!(u.divergence_defect() < 1e-10);
    }

    #[test]
    fn causality_is_bit_exact() {
        let grid = SpectralGrid::new(2, 16).unwrap();
        let mut hist = history(&grid, 12, 0.01, 5);
        let theta = 0.25f64;
        let eval_t = 0.1;
        let (u1, q1) = retarded_mollify(&hist, theta, eval_t).unwrap();
        // Perturb every slice strictly later than eval_t - theta^2.
        let cutoff = eval_t - theta * theta;
        for s in hist.iter_mut().filter(|s| s.t > cutoff) {
            for c in &mut s.u.comps {
                for v in &mut c.data {
                    *v += 77.0;
                }
            }
            for c in &mut s.q.comps {
                for v in &mut c.data {
                    *v -= 13.0;
                }
            }
        }
        let (u2, q2) = retarded_mollify(&hist, theta, eval_t).unwrap();
        for a in 0..2 {
            assert_eq!(u1.comps[a].data, u2.comps[a].data, "bitwise causality");
        }
        for c in 0..5 {
            assert_eq!(q1.comps[c].data, q2.comps[c].data);
        }
    }

    #[test]
    fn l2_contraction() {
        let grid = SpectralGrid::new(2, 32).unwrap();
        let hist = history(&grid, 10, 0.01, 7);
        let theta = 0.25f64;
        let (u, _) = retarded_mollify(&hist, theta, 0.09).unwrap();
        let l2 = |f: &VelocityField| -> f64 {
            f.comps
                .iter()
                .map(|c| c.data.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                .sqrt()
        };
        let max_hist = hist.iter().map(|s| l2(&s.u)).fold(0.0f64, f64::max);
        assert!(l2(&u) <= 1.001 * max_hist);
    }

    #[test]
    fn insufficient_history_is_detected() {
        let grid = SpectralGrid::new(2, 16).unwrap();
        // History starting at t = 1.0 cannot cover a window reaching back
        // to t ~ 0.94 unless stored slices do.
        let hist: Vec<Snapshot> = (0..4)
            .map(|i| Snapshot {
                t: 1.05 + i as f64 * 0.01,
                u: VelocityField::zeros(&grid),
                q: QTensorField::zeros(&grid),
            })
            .collect();
        let err = retarded_mollify(&hist, 0.2, 1.1);
        assert!(matches!(err, Err(SolverError::InsufficientHistory { .. })));
    }

    #[test]
    fn early_window_reads_zero_extension() {
        // eval_t < theta^2: every source time is negative, output is zero.
        let grid = SpectralGrid::new(2, 16).unwrap();
        let hist = history(&grid, 4, 0.005, 11);
        let (u, q) = retarded_mollify(&hist, 0.3, 0.05).unwrap();
        assert!(u.max_abs() == 0.0);
        assert!(q.max_norm() == 0.0);
    }
}
