//! Moreau envelope of the entropy potential.
//!
//! `G^m(Q) = inf_A { m |A - Q|^2 + G(A) }` is finite on the whole traceless
//! symmetric space, convex, and has the globally Lipschitz gradient
//! `2m (Q - A*)`. The optimality system couples the minimizer A* with the
//! entropy dual B at A*: `B = 2m (Q - A*)` and `moment(B) = A*`. Eliminating
//! A* leaves one five-dimensional equation `moment(B) + B/(2m) = Q`, solved
//! by the same damped Newton as the plain moment problem with Jacobian
//! `cov + I/(2m)`, which is uniformly positive definite. One inner solve per
//! evaluation, no nested iteration.

use super::bingham::BmContext;
use super::PotentialError;
use crate::tensor::QTensor;

/// Envelope value, minimizer, and gradient at a point.
#[derive(Debug, Clone)]
pub struct MoreauResult {
    /// Envelope value `m |A* - Q|^2 + G(A*)`.
    pub value: f64,
    /// Minimizer A*, strictly inside the physical domain.
    pub prox: QTensor,
    /// Gradient of the envelope, `2m (Q - A*)`.
    pub gradient: QTensor,
    /// Dual coordinates of the gradient, reusable as a warm start.
    pub dual: [f64; 5],
    /// Final residual of the optimality system.
    pub moment_residual: f64,
    pub iterations: usize,
}

impl BmContext {
    pub fn moreau(&self, q: &QTensor, m: f64) -> Result<MoreauResult, PotentialError> {
        self.moreau_warm(q, m, None)
    }

    pub fn moreau_warm(
        &self,
        q: &QTensor,
        m: f64,
        warm: Option<[f64; 5]>,
    ) -> Result<MoreauResult, PotentialError> {
        if !(m > 0.0) {
            return Err(PotentialError::InvalidSpec(format!(
                "Moreau parameter must be positive (m={m})"
            )));
        }
        let (state, iterations) = self.moreau_newton(q, m, warm)?;
        let b = QTensor::from_coeffs(state.b);
        let prox = q.sub(&b.scale(1.0 / (2.0 * m))).retraced();
        // value = |B|^2/(4m) + (B : A* - log Z)
        let value = b.norm_sq() / (4.0 * m) + b.ddot(&prox) - state.log_z;
        Ok(MoreauResult {
            value,
            gradient: b,
            prox,
            dual: state.b,
            moment_residual: state.residual,
            iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::potential::{physicality_margin, BmContext, BmParams};
    use crate::tensor::{basis, QTensor};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const LOG_4PI: f64 = 2.531_024_246_969_291;

    fn ctx(degree: usize) -> BmContext {
        let mut p = BmParams::new(1.0, 4.0, 100.0);
        p.quad_degree = degree;
        BmContext::new(p)
    }

    #[test]
    fn at_isotropic_state() {
        let ctx = ctx(35);
        let r = ctx.moreau(&QTensor::zero(), 100.0).unwrap();
        assert!(r.prox.norm() < 1e-11);
        assert!(r.gradient.norm() < 1e-9);
        assert!((r.value + LOG_4PI).abs() < 1e-10);
    }

    #[test]
    fn monotone_in_m_and_below_entropy() {
        let ctx = ctx(35);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..8 {
            let q = crate::potential::bingham::tests::random_interior_q(&mut rng, 0.12);
            let g = ctx.g_bm(&q).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for &m in &[1.0, 10.0, 100.0, 1000.0] {
                let v = ctx.moreau(&q, m).unwrap().value;
                assert!(v >= prev - 1e-9, "monotone in m");
                assert!(v <= g + 1e-8, "below the entropy on the interior");
                assert!(v >= -LOG_4PI - 1e-9, "global lower bound");
                prev = v;
            }
        }
    }

    #[test]
    fn gradient_is_2m_times_gap_and_prox_physical() {
        let ctx = ctx(35);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..6 {
            let c: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
            let q = QTensor::from_coeffs(c); // possibly far outside D
            let m = 50.0;
            let r = ctx.moreau(&q, m).unwrap();
            let recon = q.sub(&r.prox).scale(2.0 * m);
            assert!(recon.sub(&r.gradient).norm() <= 1e-9 * r.gradient.norm().max(1.0));
            assert!(physicality_margin(&r.prox) > 0.0, "prox strictly physical");
        }
    }

    #[test]
    fn envelope_gradient_matches_finite_differences() {
        let ctx = ctx(35);
        let q = QTensor::from_coeffs([0.9, -0.6, 1.4, 0.3, -0.8]);
        let m = 40.0;
        let g = ctx.moreau(&q, m).unwrap().gradient;
        let h = 1e-5;
        for e in basis() {
            let vp = ctx.moreau(&q.add(&e.scale(h)), m).unwrap().value;
            let vm = ctx.moreau(&q.sub(&e.scale(h)), m).unwrap().value;
            let fd = (vp - vm) / (2.0 * h);
            let dir = g.ddot(&e);
            assert!(
                (fd - dir).abs() <= 2e-5 * dir.abs().max(1.0),
                "fd {fd} vs {dir}"
            );
        }
    }

    #[test]
    fn quadratic_growth_far_outside() {
        let ctx = ctx(35);
        let m = 100.0;
        let dir = QTensor::from_coeffs([0.5, -0.3, 0.2, 0.6, -0.4]);
        let q = dir.scale(12.0 / dir.norm());
        let v = ctx.moreau(&q, m).unwrap().value;
        let two_sqrt3 = 2.0 / 3.0f64.sqrt();
        assert!(v >= 0.5 * m * (12.0 - two_sqrt3).powi(2) - LOG_4PI);
        assert!(v >= 0.25 * m * 144.0 - LOG_4PI);
    }

    #[test]
    fn bulk_second_difference_bounded_below() {
        // The regularized bulk F^m = nu G^m - kappa/2 |Q|^2 inherits the
        // envelope's convexity: its directional second difference is
        // bounded below by -kappa.
        let nu = 1.0;
        let kappa = 4.0;
        let ctx = ctx(35);
        let m = 100.0;
        let f = |q: &QTensor| -> f64 {
            nu * ctx.moreau(q, m).unwrap().value - 0.5 * kappa * q.norm_sq()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let h = 1e-4;
        for _ in 0..6 {
            let c: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
            let q = QTensor::from_coeffs(c);
            let v: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let mut dir = QTensor::from_coeffs(v);
            dir = dir.scale(1.0 / dir.norm());
            let second =
                (f(&q.add(&dir.scale(h))) - 2.0 * f(&q) + f(&q.sub(&dir.scale(h)))) / (h * h);
            assert!(second >= -kappa - 1e-3, "second difference {second}");
        }
    }

    #[test]
    fn converges_to_entropy_as_m_grows() {
        // (G4) direction: on interior points the envelope and its gradient
        // approach the entropy and its dual with gap O(1/m).
        let ctx = ctx(35);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let q = crate::potential::bingham::tests::random_interior_q(&mut rng, 0.2);
        let g = ctx.g_bm(&q).unwrap();
        let b = ctx.grad_g_bm(&q).unwrap();
        let mut prev_gap = f64::INFINITY;
        for &m in &[100.0, 1000.0, 10000.0] {
            let r = ctx.moreau(&q, m).unwrap();
            let gap = (g - r.value).abs();
            assert!(gap < prev_gap + 1e-12);
            assert!(gap <= b.norm_sq() / (2.0 * m) + 1e-8, "gap {gap} at m={m}");
            prev_gap = gap;
        }
        let r = ctx.moreau(&q, 10000.0).unwrap();
        assert!(r.gradient.sub(&b).norm() <= 1e-2 * b.norm().max(1.0));
    }
}
