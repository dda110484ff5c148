//! Landau-De Gennes quartic bulk potential.

use super::{LdgParams, PotentialError};
use crate::tensor::{invariants, project_traceless, QTensor};

/// Unshifted potential `a/2 tr(Q^2) - b/3 tr(Q^3) + c/4 tr^2(Q^2)`.
pub fn ldg_hat(q: &QTensor, p: &LdgParams) -> f64 {
    let (t2, t3, _) = invariants(q);
    0.5 * p.a * t2 - p.b / 3.0 * t3 + 0.25 * p.c * t2 * t2
}

/// Restriction of `ldg_hat` to the uniaxial family `s (d x d - I/3)`:
/// `a s^2/3 - 2 b s^3/27 + c s^4/9`.
fn ldg_hat_uniaxial(s: f64, p: &LdgParams) -> f64 {
    p.a * s * s / 3.0 - 2.0 * p.b * s.powi(3) / 27.0 + p.c * s.powi(4) / 9.0
}

/// Scalar order parameter of the uniaxial minimizer and the global minimum
/// of the unshifted potential. Requires the nematic regime
/// `0 < a < b^2 / (27 c)`; outside it the caller falls back on
/// [`ldg_min_value`].
pub fn ldg_min(p: &LdgParams) -> Result<(f64, f64), PotentialError> {
    if !(p.a > 0.0 && p.a < p.b * p.b / (27.0 * p.c)) {
        return Err(PotentialError::ConditionViolated {
            a: p.a,
            b: p.b,
            c: p.c,
        });
    }
    let s_plus = (p.b + (p.b * p.b - 24.0 * p.a * p.c).sqrt()) / (4.0 * p.c);
    let min_value = ldg_hat_uniaxial(s_plus, p).min(0.0);
    Ok((s_plus, min_value))
}

/// Global minimum of the unshifted potential over all Q-tensors, computed
/// from the real critical points of the uniaxial restriction (all critical
/// values of the isotropic quartic are uniaxial).
pub fn ldg_min_value(p: &LdgParams) -> f64 {
    let mut best = 0.0f64; // s = 0
    let disc = p.b * p.b - 24.0 * p.a * p.c;
    if disc >= 0.0 {
        let r = disc.sqrt();
        for s in [(p.b + r) / (4.0 * p.c), (p.b - r) / (4.0 * p.c)] {
            best = best.min(ldg_hat_uniaxial(s, p));
        }
    }
    best
}

/// Variational derivative `a Q - b [Q^2 - tr(Q^2)/3 I] + c Q tr(Q^2)`,
/// traceless symmetric.
pub fn f_ldg(q: &QTensor, p: &LdgParams) -> QTensor {
    let t2 = q.norm_sq();
    let q2 = project_traceless(&q.squared()).expect("square of finite tensor");
    q.scale(p.a + p.c * t2).sub(&q2.scale(p.b)).retraced()
}
