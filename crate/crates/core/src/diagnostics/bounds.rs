//! Maximum-principle bounds: the closed-form sup bound on |Q| for the
//! polynomial potential and the entropy-boundedness monitor for the
//! singular potential.

use rayon::prelude::*;
use serde::Serialize;

use super::DiagnosticsError;
use crate::field::QTensorField;
use crate::potential::{physicality_margin, BmContext, PotentialSpec};
use crate::solver::Snapshot;

/// Closed-form sup bound for the polynomial variant:
/// `C = max(max|Q0|, sqrt((b^2/c^2 - 2a/c)_+))`. Along smooth runs
/// `max |Q(t)|` stays below C up to discretization error.
pub fn max_principle_bound(
    spec: &PotentialSpec,
    q0: &QTensorField,
) -> Result<f64, DiagnosticsError> {
    let PotentialSpec::Ldg(p) = spec else {
        return Err(DiagnosticsError::WrongVariant { expected: "LdG" });
    };
    let bulk_bound = (p.b * p.b / (p.c * p.c) - 2.0 * p.a / p.c).max(0.0).sqrt();
    Ok(q0.max_norm().max(bulk_bound))
}

#[derive(Debug, Clone, Serialize)]
pub struct BmBoundRecord {
    pub t: f64,
    /// Max of the entropy over physical grid points.
    pub max_g: f64,
    pub min_margin: f64,
    /// Grid indices where the margin fell below the evaluation floor.
    pub violations: Vec<usize>,
}

/// Entropy-boundedness monitor along a trajectory: per stored slice, the
/// grid max of G(Q) and the minimum physicality margin. Margin violations
/// are reported with their location, never aborted on.
pub fn bm_bound_monitor(
    trajectory: &[Snapshot],
    spec: &PotentialSpec,
) -> Result<Vec<BmBoundRecord>, DiagnosticsError> {
    let PotentialSpec::Bm(p) = spec else {
        return Err(DiagnosticsError::WrongVariant { expected: "BM" });
    };
    let ctx = BmContext::new(*p);
    let mut out = Vec::with_capacity(trajectory.len());
    for snap in trajectory {
        let len = snap.q.grid().len();
        let per_point: Vec<(f64, Option<f64>)> = (0..len)
            .into_par_iter()
            .map(|idx| {
                let q = snap.q.at(idx);
                let margin = physicality_margin(&q);
                if margin < 1e-6 {
                    (margin, None)
                } else {
                    (margin, ctx.g_bm(&q).ok())
                }
            })
            .collect();
        let mut max_g = f64::NEG_INFINITY;
        let mut min_margin = f64::INFINITY;
        let mut violations = Vec::new();
        for (idx, (margin, g)) in per_point.iter().enumerate() {
            min_margin = min_margin.min(*margin);
            match g {
                Some(g) => max_g = max_g.max(*g),
                None => violations.push(idx),
            }
        }
        out.push(BmBoundRecord {
            t: snap.t,
            max_g,
            min_margin,
            violations,
        });
    }
    Ok(out)
}
