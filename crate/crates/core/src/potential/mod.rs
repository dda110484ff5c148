//! Bulk potentials and their variational derivatives.
//!
//! Two variants are supported: the Landau-De Gennes quartic polynomial and
//! the Ball-Majumdar entropy potential. The entropy potential is evaluated
//! through its dual (Bingham) problem on the sphere and regularized through
//! a Moreau envelope so that it is defined on all of the traceless symmetric
//! space, including unphysical tensors.

pub(crate) mod bingham;
mod ldg;
mod moreau;

pub use bingham::{BinghamSolution, BmContext};
pub use ldg::{f_ldg, ldg_hat, ldg_min, ldg_min_value};
pub use moreau::MoreauResult;

use crate::tensor::{eigenvalues, QTensor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("invalid potential parameters: {0}")]
    InvalidSpec(String),
    #[error("no uniaxial minimizer: requires 0 < a < b^2/(27c), got a={a}, b={b}, c={c}")]
    ConditionViolated { a: f64, b: f64, c: f64 },
    #[error("Q-tensor outside the admissible domain (physicality margin {margin:.3e})")]
    DomainViolation { margin: f64 },
    #[error(
        "dual Newton solve failed: residual {residual:.3e} after {iterations} iterations \
         (objective gap estimate {gap:.3e})"
    )]
    Convergence {
        residual: f64,
        iterations: usize,
        gap: f64,
    },
}

/// Landau-De Gennes material constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct LdgParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Ball-Majumdar parameters together with the knobs of the dual solver.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BmParams {
    pub nu: f64,
    pub kappa: f64,
    /// Moreau regularization strength.
    pub m: f64,
    pub quad_degree: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl BmParams {
    pub fn new(nu: f64, kappa: f64, m: f64) -> Self {
        BmParams {
            nu,
            kappa,
            m,
            quad_degree: 35,
            newton_tol: 1e-10,
            newton_max_iter: 60,
        }
    }
}

/// Tagged choice of bulk potential.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub enum PotentialSpec {
    Ldg(LdgParams),
    Bm(BmParams),
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<(), PotentialError> {
        match self {
            PotentialSpec::Ldg(p) => {
                if !(p.a > 0.0 && p.b > 0.0 && p.c > 0.0) {
                    return Err(PotentialError::InvalidSpec(format!(
                        "LdG constants must be positive (a={}, b={}, c={})",
                        p.a, p.b, p.c
                    )));
                }
            }
            PotentialSpec::Bm(p) => {
                if !(p.nu > 0.0 && p.kappa > 0.0) {
                    return Err(PotentialError::InvalidSpec(format!(
                        "BM constants must be positive (nu={}, kappa={})",
                        p.nu, p.kappa
                    )));
                }
                if !(p.m > 0.0) {
                    return Err(PotentialError::InvalidSpec(format!(
                        "regularization parameter must be positive (m={})",
                        p.m
                    )));
                }
                if p.quad_degree < 3 {
                    return Err(PotentialError::InvalidSpec(
                        "quadrature degree must be at least 3".into(),
                    ));
                }
                if !(p.newton_tol > 0.0) || p.newton_max_iter == 0 {
                    return Err(PotentialError::InvalidSpec(
                        "solver tolerances must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Distance of the eigenvalues from the boundary of the physical domain:
/// `min(lambda_min + 1/3, 2/3 - lambda_max)`. Positive iff Q is strictly
/// physical.
pub fn physicality_margin(q: &QTensor) -> f64 {
    let e = eigenvalues(q);
    (e.min() + 1.0 / 3.0).min(2.0 / 3.0 - e.max())
}

/// A potential spec with its evaluation state (quadrature tables for the
/// entropy variant) attached. Immutable after construction and shareable
/// across threads.
pub enum Potential {
    Ldg { params: LdgParams, shift: f64 },
    Bm(BmContext),
}

impl Potential {
    pub fn new(spec: &PotentialSpec) -> Result<Self, PotentialError> {
        spec.validate()?;
        match spec {
            PotentialSpec::Ldg(p) => Ok(Potential::Ldg {
                params: *p,
                shift: ldg_min_value(p),
            }),
            PotentialSpec::Bm(p) => Ok(Potential::Bm(BmContext::new(*p))),
        }
    }

    pub fn spec(&self) -> PotentialSpec {
        match self {
            Potential::Ldg { params, .. } => PotentialSpec::Ldg(*params),
            Potential::Bm(ctx) => PotentialSpec::Bm(*ctx.params()),
        }
    }

    /// Variational derivative of the bulk energy, projected traceless.
    pub fn f_bulk(&self, q: &QTensor) -> Result<QTensor, PotentialError> {
        match self {
            Potential::Ldg { params, .. } => Ok(f_ldg(q, params)),
            Potential::Bm(ctx) => {
                let p = ctx.params();
                let res = ctx.moreau(q, p.m)?;
                Ok(res.gradient.scale(p.nu).sub(&q.scale(p.kappa)).retraced())
            }
        }
    }

    /// Bulk energy density. For LdG this is the shifted (nonnegative)
    /// potential; for BM it is `nu G^m(Q) - kappa/2 |Q|^2`.
    pub fn f_bulk_value(&self, q: &QTensor) -> Result<f64, PotentialError> {
        match self {
            Potential::Ldg { params, shift } => Ok(ldg_hat(q, params) - shift),
            Potential::Bm(ctx) => {
                let p = ctx.params();
                let res = ctx.moreau(q, p.m)?;
                Ok(p.nu * res.value - 0.5 * p.kappa * q.norm_sq())
            }
        }
    }

    /// Gradient and value from a single dual solve, with an optional warm
    /// start for the dual variable (in basis coordinates). Returns the dual
    /// coordinates so callers evaluating whole grids can warm-start the next
    /// solve at the same point.
    pub fn f_bulk_with_value(
        &self,
        q: &QTensor,
        warm: Option<[f64; 5]>,
    ) -> Result<(QTensor, f64, [f64; 5]), PotentialError> {
        match self {
            Potential::Ldg { params, shift } => {
                Ok((f_ldg(q, params), ldg_hat(q, params) - shift, [0.0; 5]))
            }
            Potential::Bm(ctx) => {
                let p = ctx.params();
                let res = ctx.moreau_warm(q, p.m, warm)?;
                let f = res.gradient.scale(p.nu).sub(&q.scale(p.kappa)).retraced();
                let v = p.nu * res.value - 0.5 * p.kappa * q.norm_sq();
                Ok((f, v, res.dual))
            }
        }
    }
}

/// One row of the potential tabulation: sampled eigenvalues, value,
/// gradient norm, margin, inner-solver iterations, and the m-sweep
/// convergence gaps for the entropy variant.
#[derive(Debug, Clone)]
pub struct TableRow {
    pub l1: f64,
    pub l2: f64,
    pub value: Option<f64>,
    pub grad_norm: Option<f64>,
    pub margin: f64,
    pub iterations: usize,
    pub m_sweep: Vec<(f64, f64)>,
    pub error: Option<String>,
}

/// Tabulate the potential over a grid in eigenvalue space (diagonal
/// tensors `diag(l1, l2, -l1-l2)`). Solver errors are recorded per row and
/// the sweep continues.
pub fn tabulate(
    spec: &PotentialSpec,
    samples_per_axis: usize,
    margin_floor: f64,
    m_sweep: &[f64],
) -> Result<Vec<TableRow>, PotentialError> {
    let pot = Potential::new(spec)?;
    let mut rows = Vec::new();
    let lo = -1.0 / 3.0;
    let hi = 2.0 / 3.0;
    let n = samples_per_axis.max(2);
    for i in 0..n {
        let l1 = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let l2 = lo + (hi - lo) * (j as f64 + 0.5) / n as f64;
            let q = QTensor::from_upper([l1, 0.0, 0.0, l2, 0.0, -l1 - l2]);
            let margin = physicality_margin(&q);
            if margin < margin_floor {
                continue;
            }
            let mut row = TableRow {
                l1,
                l2,
                value: None,
                grad_norm: None,
                margin,
                iterations: 0,
                m_sweep: Vec::new(),
                error: None,
            };
            match (&pot, pot.f_bulk_value(&q)) {
                (_, Err(e)) => row.error = Some(e.to_string()),
                (Potential::Ldg { .. }, Ok(v)) => {
                    row.value = Some(v);
                    row.grad_norm = Some(pot.f_bulk(&q).expect("ldg is total").norm());
                }
                (Potential::Bm(ctx), Ok(v)) => {
                    row.value = Some(v);
                    match pot.f_bulk(&q) {
                        Ok(g) => row.grad_norm = Some(g.norm()),
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    if let Ok(sol) = ctx.solve_bingham(&q) {
                        row.iterations = sol.iterations;
                        if let Ok(g) = ctx.g_bm(&q) {
                            for &m in m_sweep {
                                if let Ok(env) = ctx.moreau(&q, m) {
                                    row.m_sweep.push((m, (g - env.value).abs()));
                                }
                            }
                        }
                    }
                }
            }
            rows.push(row);
        }
    }
    Ok(rows)
}
