//! Initial data generators. Everything is deterministic in the seed; the
//! random fields are spectrally filtered white noise with a Gaussian
//! envelope `exp(-|k|^2 / k0^2)`.

use crate::field::{QTensorField, VelocityField};
use crate::potential::PotentialSpec;
use crate::spectral::SpectralGrid;
use crate::tensor::uniaxial;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use super::rhs::leray_project_spec;
use super::SolverError;

#[derive(Debug, Clone)]
pub enum InitialData {
    /// Divergence-free filtered-noise velocity and a filtered-noise Q field,
    /// rescaled to the requested max norms (and, for the entropy potential,
    /// shrunk until the physicality margin clears `margin`).
    RandomSmooth {
        amp_u: f64,
        amp_q: f64,
        k0: f64,
        margin: f64,
    },
    /// Quiescent fluid around a pair of opposite winding defects in the
    /// director field (extruded along z in 3-D).
    UniaxialDefect { s: f64, winding: i32, core: f64 },
    /// The steady two-mode field used by the manufactured-solution studies.
    Manufactured { amp_u: f64, amp_q: f64 },
}

/// Filtered-noise fields before any rescaling; handy wherever generic
/// smooth periodic data is needed.
pub fn smooth_random_fields(
    grid: &Arc<SpectralGrid>,
    seed: u64,
    amp_u: f64,
    amp_q: f64,
    k0: f64,
) -> (VelocityField, QTensorField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filtered = |rng: &mut ChaCha8Rng| -> Vec<rustfft::num_complex::Complex64> {
        let noise: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut spec = grid.forward(&noise);
        for (idx, v) in spec.iter_mut().enumerate() {
            let k2 = grid.k_sq(idx);
            *v *= (-k2 / (k0 * k0)).exp();
        }
        spec[0] = Default::default(); // zero mean
        grid.dealias(&mut spec);
        spec
    };
    let mut u_spec: Vec<_> = (0..grid.dim()).map(|_| filtered(&mut rng)).collect();
    leray_project_spec(grid, &mut u_spec);
    let mut u = VelocityField::from_spectral(grid, &u_spec);
    let max_u = u.max_abs();
    if max_u > 0.0 {
        for c in &mut u.comps {
            for v in &mut c.data {
                *v *= amp_u / max_u;
            }
        }
    }
    let q_spec: Vec<_> = (0..5).map(|_| filtered(&mut rng)).collect();
    let mut q = QTensorField::from_spectral(grid, &q_spec);
    let max_q = q.max_norm();
    if max_q > 0.0 {
        for c in &mut q.comps {
            for v in &mut c.data {
                *v *= amp_q / max_q;
            }
        }
    }
    (u, q)
}

/// The fixed two-mode manufactured pair: two Taylor-Green shells for the
/// velocity and two director waves on a uniform uniaxial base. The second
/// Q mode sits at wavevector (5, 4), so the cubic bulk terms reach well
/// past the retained zone of coarse grids and a refinement study sees
/// genuine truncation error.
pub fn manufactured_fields(
    grid: &Arc<SpectralGrid>,
    amp_u: f64,
    amp_q: f64,
) -> (VelocityField, QTensorField) {
    let u = VelocityField::from_fn(grid, |p| {
        let m1 = [p[0].sin() * p[1].cos(), -(p[0].cos()) * p[1].sin()];
        let m2 = [
            (2.0 * p[0]).sin() * (2.0 * p[1]).cos(),
            -((2.0 * p[0]).cos()) * (2.0 * p[1]).sin(),
        ];
        [
            amp_u * (m1[0] + 0.5 * m2[0]),
            amp_u * (m1[1] + 0.5 * m2[1]),
            0.0,
        ]
    });
    let base = uniaxial(0.4, [1.0, 0.0, 0.0]).unwrap();
    let es = crate::tensor::basis();
    let q = QTensorField::from_fn(grid, |p| {
        let w1 = (p[0] + p[1]).sin();
        let w2 = (5.0 * p[0] + 4.0 * p[1]).cos();
        base.add(&es[0].scale(amp_q * w1))
            .add(&es[3].scale(0.6 * amp_q * w2))
            .retraced()
    });
    (u, q)
}

/// Build `(u0, Q0)` for a run.
pub fn make_initial_data(
    kind: &InitialData,
    seed: u64,
    grid: &Arc<SpectralGrid>,
    potential: &PotentialSpec,
) -> Result<(VelocityField, QTensorField), SolverError> {
    match *kind {
        InitialData::RandomSmooth {
            amp_u,
            amp_q,
            k0,
            margin,
        } => {
            let (u, mut q) = smooth_random_fields(grid, seed, amp_u, amp_q, k0);
            if matches!(potential, PotentialSpec::Bm(_)) {
                // Shrink toward zero until the margin clears the target
                // everywhere (eigenvalues scale linearly with Q).
                let target = margin.max(1e-3);
                for _ in 0..200 {
                    if q.min_margin() >= target {
                        break;
                    }
                    for c in &mut q.comps {
                        for v in &mut c.data {
                            *v *= 0.95;
                        }
                    }
                }
                if q.min_margin() < target {
                    return Err(SolverError::Config(
                        "could not reach requested physicality margin".into(),
                    ));
                }
            }
            Ok((u, q))
        }
        InitialData::UniaxialDefect { s, winding, core } => {
            let u = VelocityField::zeros(grid);
            let pi = std::f64::consts::PI;
            let (ax, ay) = (0.5 * pi, pi);
            let (bx, by) = (1.5 * pi, pi);
            let q = QTensorField::from_fn(grid, |p| {
                let da = angle_and_dist(p[0] - ax, p[1] - ay);
                let db = angle_and_dist(p[0] - bx, p[1] - by);
                let phi = winding as f64 * (da.0 - db.0);
                let ramp = (da.1 / core).tanh() * (db.1 / core).tanh();
                let d = [phi.cos(), phi.sin(), 0.0];
                uniaxial(s * ramp, d).expect("unit director")
            });
            Ok((u, q))
        }
        InitialData::Manufactured { amp_u, amp_q } => Ok(manufactured_fields(grid, amp_u, amp_q)),
    }
}

fn angle_and_dist(dx: f64, dy: f64) -> (f64, f64) {
    (dy.atan2(dx), (dx * dx + dy * dy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{BmParams, LdgParams};

    fn ldg() -> PotentialSpec {
        PotentialSpec::Ldg(LdgParams {
            a: 0.03,
            b: 1.0,
            c: 1.0,
        })
    }

    #[test]
    fn deterministic_in_seed() {
        let grid = SpectralGrid::new(2, 16).unwrap();
        let kind = InitialData::RandomSmooth {
            amp_u: 0.5,
            amp_q: 0.3,
            k0: 2.0,
            margin: 0.05,
        };
        let (u1, q1) = make_initial_data(&kind, 42, &grid, &ldg()).unwrap();
        let (u2, q2) = make_initial_data(&kind, 42, &grid, &ldg()).unwrap();
        for a in 0..2 {
            assert_eq!(u1.comps[a].data, u2.comps[a].data);
        }
        for c in 0..5 {
            assert_eq!(q1.comps[c].data, q2.comps[c].data);
        }
        let (u3, _) = make_initial_data(&kind, 43, &grid, &ldg()).unwrap();
        assert!(u3.comps[0].data != u1.comps[0].data);
    }

    #[test]
    fn divergence_free_and_scaled() {
        let grid = SpectralGrid::new(2, 32).unwrap();
        let kind = InitialData::RandomSmooth {
            amp_u: 0.5,
            amp_q: 0.5,
            k0: 2.5,
            margin: 0.05,
        };
        let (u, q) = make_initial_data(&kind, 7, &grid, &ldg()).unwrap();
        assert!(u.divergence_defect() < 1e-10);
        assert!((u.max_abs() - 0.5).abs() < 1e-12);
        assert!((q.max_norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bm_margin_enforced() {
        let grid = SpectralGrid::new(2, 16).unwrap();
        let kind = InitialData::RandomSmooth {
            amp_u: 0.3,
            amp_q: 0.6,
            k0: 2.0,
            margin: 0.05,
        };
        let bm = PotentialSpec::Bm(BmParams::new(1.0, 4.0, 100.0));
        let (_, q) = make_initial_data(&kind, 9, &grid, &bm).unwrap();
        assert!(q.min_margin() >= 0.05);
    }

    #[test]
    fn defect_pair_is_physical() {
        let grid = SpectralGrid::new(2, 32).unwrap();
        let kind = InitialData::UniaxialDefect {
            s: 0.84,
            winding: 1,
            core: 0.4,
        };
        let bm = PotentialSpec::Bm(BmParams::new(1.0, 4.0, 100.0));
        let (u, q) = make_initial_data(&kind, 0, &grid, &bm).unwrap();
        assert!(u.max_abs() == 0.0);
        assert!(q.min_margin() >= (1.0 - 0.84) / 3.0 - 1e-9);
        assert!(q.max_norm() > 0.5);
    }
}
