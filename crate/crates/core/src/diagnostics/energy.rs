//! Total energy, its parts, and the discrete dissipation balance.

use serde::Serialize;

use super::DiagnosticsError;
use crate::potential::{Potential, PotentialSpec};
use crate::solver::{rhs::eval_f_bulk, SimState};

/// One row of the energy ledger. `total` is computed as the sum
/// kinetic + elastic + bulk in that order.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub bulk: f64,
    pub total: f64,
    pub diss_u: f64,
    pub diss_h: f64,
}

impl EnergyRecord {
    /// Assemble a record from the integrals the stepper computed inline.
    pub fn from_parts(t: f64, p: &crate::solver::EnergyParts) -> EnergyRecord {
        EnergyRecord {
            t,
            kinetic: p.kinetic,
            elastic: p.elastic,
            bulk: p.bulk,
            total: p.kinetic + p.elastic + p.bulk,
            diss_u: p.diss_u,
            diss_h: p.diss_h,
        }
    }
}

/// Energies and dissipation integrands by the grid's exact quadrature
/// (uniform weights); the molecular field is spectral.
pub fn energy(state: &SimState, spec: &PotentialSpec) -> Result<EnergyRecord, DiagnosticsError> {
    let grid = state.q.grid().clone();
    if !state.u.grid().same_grid(&grid) {
        return Err(DiagnosticsError::GridMismatch);
    }
    let pot = Potential::new(spec)?;
    let d = grid.dim();
    let len = grid.len();
    let vol = grid.cell_volume();

    let u_spec = state.u.to_spectral();
    let q_spec = state.q.to_spectral();
    let q_phys: Vec<Vec<f64>> = q_spec.iter().map(|s| grid.inverse_real(s)).collect();

    let mut kinetic = 0.0;
    for idx in 0..len {
        let v = state.u.at(idx);
        kinetic += 0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    }
    kinetic *= vol;

    let mut elastic = 0.0;
    let mut dq = vec![0.0; len];
    for s in &q_spec {
        for b in 0..d {
            let der = grid.inverse_real(&grid.derivative(s, b));
            for (acc, v) in dq.iter_mut().zip(&der) {
                *acc += v * v;
            }
        }
    }
    for v in &dq {
        elastic += 0.5 * v;
    }
    elastic *= vol;

    let mut diss_u = 0.0;
    for s in &u_spec {
        for b in 0..d {
            let der = grid.inverse_real(&grid.derivative(s, b));
            diss_u += der.iter().map(|v| v * v).sum::<f64>();
        }
    }
    diss_u *= vol;

    let (f_bulk, values) = eval_f_bulk(&grid, &pot, &q_phys, None, true)?;
    let bulk = values.expect("requested").iter().sum::<f64>() * vol;

    let mut diss_h = 0.0;
    for c in 0..5 {
        let mut s = q_spec[c].clone();
        grid.laplacian_inplace(&mut s);
        let lap = grid.inverse_real(&s);
        for idx in 0..len {
            let h = lap[idx] - f_bulk[idx][c];
            diss_h += h * h;
        }
    }
    diss_h *= vol;

    let total = kinetic + elastic + bulk;
    Ok(EnergyRecord {
        t: state.t,
        kinetic,
        elastic,
        bulk,
        total,
        diss_u,
        diss_h,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BalanceReport {
    /// Per-interval residual `[E(t1) - E(t0)]/dt + (D(t0) + D(t1))/2`.
    pub residuals: Vec<f64>,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Intervals where the energy increased by more than `tol`.
    pub increases: usize,
    pub tol: f64,
}

/// Discrete shadow of the global energy law: the forward difference of the
/// total energy against the trapezoid of the dissipation. The energy must
/// be nonincreasing beyond `tol`.
pub fn energy_balance_residual(records: &[EnergyRecord], tol: f64) -> BalanceReport {
    let mut residuals = Vec::new();
    let mut increases = 0;
    for w in records.windows(2) {
        let dt = w[1].t - w[0].t;
        let d0 = w[0].diss_u + w[0].diss_h;
        let d1 = w[1].diss_u + w[1].diss_h;
        residuals.push((w[1].total - w[0].total) / dt + 0.5 * (d0 + d1));
        if w[1].total > w[0].total + tol {
            increases += 1;
        }
    }
    let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mean_abs = if residuals.is_empty() {
        0.0
    } else {
        residuals.iter().map(|r| r.abs()).sum::<f64>() / residuals.len() as f64
    };
    BalanceReport {
        residuals,
        max_abs,
        mean_abs,
        increases,
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{QTensorField, VelocityField};
    use crate::potential::{ldg_min, LdgParams};
    use crate::solver::initial::smooth_random_fields;
    use crate::solver::{SimState, Stepper};
    use crate::spectral::SpectralGrid;

    fn ldg() -> PotentialSpec {
        PotentialSpec::Ldg(LdgParams {
            a: 0.03,
            b: 1.0,
            c: 1.0,
        })
    }

    #[test]
    fn equilibrium_energies_vanish() {
        let grid = SpectralGrid::new(2, 16).unwrap();
        let (s_plus, _) = ldg_min(&LdgParams {
            a: 0.03,
            b: 1.0,
            c: 1.0,
        })
        .unwrap();
        let q0 = crate::tensor::uniaxial(s_plus, [0.0, 1.0, 0.0]).unwrap();
        let state = SimState::new(
            VelocityField::zeros(&grid),
            QTensorField::from_fn(&grid, |_| q0),
            2,
        );
        let rec = energy(&state, &ldg()).unwrap();
        assert!(rec.kinetic == 0.0);
        assert!(rec.elastic.abs() < 1e-20);
        assert!(rec.bulk.abs() < 1e-12);
        assert!(rec.diss_h < 1e-24);
    }

    #[test]
    fn balance_residual_vanishes_at_equilibrium() {
        let grid = SpectralGrid::new(2, 16).unwrap();
        let (s_plus, _) = ldg_min(&LdgParams {
            a: 0.03,
            b: 1.0,
            c: 1.0,
        })
        .unwrap();
        let q0 = crate::tensor::uniaxial(s_plus, [1.0, 0.0, 0.0]).unwrap();
        let mut state = SimState::new(
            VelocityField::zeros(&grid),
            QTensorField::from_fn(&grid, |_| q0),
            2,
        );
        let mut stepper =
            Stepper::new(&grid, crate::solver::SimConfig::new(1e-3, 1.0, ldg())).unwrap();
        let mut records = vec![energy(&state, &ldg()).unwrap()];
        for _ in 0..5 {
            stepper.step(&mut state).unwrap();
            records.push(energy(&state, &ldg()).unwrap());
        }
        let rep = energy_balance_residual(&records, 1e-12);
        assert!(rep.max_abs <= 1e-12, "residual {}", rep.max_abs);
        assert_eq!(rep.increases, 0);
    }

    #[test]
    fn kinetic_energy_of_single_mode() {
        // u = (alpha sin x, 0): kinetic = alpha^2 (2 pi)^2 / 4.
        let grid = SpectralGrid::new(2, 32).unwrap();
        let alpha = 0.7;
        let u = VelocityField::from_fn(&grid, |p| [alpha * p[0].sin(), 0.0, 0.0]);
        let state = SimState::new(u, QTensorField::zeros(&grid), 2);
        let rec = energy(&state, &ldg()).unwrap();
        let area = (2.0 * std::f64::consts::PI).powi(2);
        let expect = 0.5 * alpha * alpha * area / 2.0;
        assert!((rec.kinetic - expect).abs() < 1e-10 * expect);
        // dissipation of the same mode: |grad u|^2 integrates to alpha^2 area / 2
        assert!((rec.diss_u - alpha * alpha * area / 2.0).abs() < 1e-10);
    }

    #[test]
    fn matches_independent_riemann_sum() {
        let grid = SpectralGrid::new(2, 32).unwrap();
        let (u, q) = smooth_random_fields(&grid, 21, 0.9, 0.45, 2.5);
        let state = SimState::new(u, q, 2);
        let rec = energy(&state, &ldg()).unwrap();
        // Independent oracle: raw loops over components, real-space sums.
        let vol = grid.cell_volume();
        let mut kin = 0.0;
        for c in &state.u.comps {
            for v in &c.data {
                kin += 0.5 * v * v;
            }
        }
        kin *= vol;
        assert!((rec.kinetic - kin).abs() <= 1e-12 * kin.max(1.0));
        let p = LdgParams {
            a: 0.03,
            b: 1.0,
            c: 1.0,
        };
        let shift = crate::potential::ldg_min_value(&p);
        let mut bulk = 0.0;
        for idx in 0..grid.len() {
            bulk += crate::potential::ldg_hat(&state.q.at(idx), &p) - shift;
        }
        bulk *= vol;
        assert!((rec.bulk - bulk).abs() <= 1e-12 * bulk.abs().max(1.0));
    }

    #[test]
    fn balance_residual_refines_first_order() {
        let grid = SpectralGrid::new(2, 32).unwrap();
        let (u0, q0) = smooth_random_fields(&grid, 3, 0.6, 0.35, 2.0);
        let run = |dt: f64| -> f64 {
            let mut cfg = crate::solver::SimConfig::new(dt, 40.0 * dt, ldg());
            cfg.history_depth = 2;
            let mut state = SimState::new(u0.clone(), q0.clone(), 2);
            let mut stepper = Stepper::new(&grid, cfg).unwrap();
            let mut records = vec![energy(&state, &ldg()).unwrap()];
            for _ in 0..40 {
                stepper.step(&mut state).unwrap();
                records.push(energy(&state, &ldg()).unwrap());
            }
            let report = energy_balance_residual(&records, 1e-9);
            assert_eq!(report.increases, 0, "energy must not increase");
            report.max_abs
        };
        let r1 = run(2e-3);
        let r2 = run(1e-3);
        assert!(r1 / r2 >= 1.8, "refinement ratio {} too small", r1 / r2);
    }
}
