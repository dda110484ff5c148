//! Reduced-size invariant suite behind the `selftest` subcommand. Each
//! check is independent, fast, and reports a one-line detail string.

use serde::Serialize;

use crate::field::{QTensorField, VelocityField};
use crate::potential::{
    ldg_min, physicality_margin, BmContext, BmParams, LdgParams, Potential, PotentialSpec,
};
use crate::solver::{
    initial::smooth_random_fields, leray_project, retarded_mollify, SimConfig, SimState, Snapshot,
    Stepper,
};
use crate::spectral::SpectralGrid;
use crate::tensor::{eigenvalues, project_traceless, uniaxial, Mat3, QTensor};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub id: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check<F: FnOnce() -> Result<String, String>>(id: &'static str, f: F) -> CheckResult {
    match f() {
        Ok(detail) => CheckResult {
            id,
            pass: true,
            detail,
        },
        Err(detail) => CheckResult {
            id,
            pass: false,
            detail,
        },
    }
}

fn ldg_spec() -> PotentialSpec {
    PotentialSpec::Ldg(LdgParams {
        a: 0.03,
        b: 1.0,
        c: 1.0,
    })
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Run the whole suite; every check is executed even after failures.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        check("tensor-projection", || {
            let q = QTensor::from_coeffs([0.3, -0.2, 0.5, 0.1, -0.4]);
            let p = project_traceless(&q.to_mat3()).map_err(|e| e.to_string())?;
            ensure(p.sub(&q).norm() < 1e-14, "projection not idempotent")?;
            let w = Mat3([0.0, 0.7, -0.3, -0.7, 0.0, 0.2, 0.3, -0.2, 0.0]);
            let c = crate::tensor::commutator_with_antisym(&q, &w).map_err(|e| e.to_string())?;
            ensure(c.trace().abs() < 1e-14, "commutator trace")?;
            ensure(c.ddot(&q).abs() < 1e-13, "commutator orthogonality")?;
            Ok("projection idempotent, commutator structure ok".into())
        }),
        check("tensor-eigenvalues", || {
            let e = eigenvalues(&uniaxial(1.0, [0.6, 0.0, 0.8]).map_err(|e| e.to_string())?);
            ensure(
                (e.l1 + 1.0 / 3.0).abs() < 1e-12 && (e.l3 - 2.0 / 3.0).abs() < 1e-12,
                format!("uniaxial spectrum off: {e:?}"),
            )?;
            Ok("closed-form spectrum reproduced".into())
        }),
        check("ldg-critical-point", || {
            let p = LdgParams {
                a: 0.03,
                b: 1.0,
                c: 1.0,
            };
            let (s_plus, _) = ldg_min(&p).map_err(|e| e.to_string())?;
            let g = crate::potential::f_ldg(&uniaxial(s_plus, [0.0, 0.0, 1.0]).unwrap(), &p);
            ensure(
                g.norm() < 1e-11,
                format!("gradient at minimizer {}", g.norm()),
            )?;
            Ok(format!("s_plus = {s_plus:.6}, gradient vanishes"))
        }),
        check("bingham-isotropic", || {
            let ctx = BmContext::new(BmParams::new(1.0, 4.0, 100.0));
            let g = ctx.g_bm(&QTensor::zero()).map_err(|e| e.to_string())?;
            let expect = -(4.0 * std::f64::consts::PI).ln();
            ensure((g - expect).abs() < 1e-10, format!("G(0) = {g}"))?;
            Ok(format!(
                "G(0) = -log(4 pi) within {:.1e}",
                (g - expect).abs()
            ))
        }),
        check("bingham-moments", || {
            let mut p = BmParams::new(1.0, 4.0, 100.0);
            p.quad_degree = 71;
            let ctx = BmContext::new(p);
            let q = uniaxial(0.75, [0.6, 0.8, 0.0]).unwrap();
            let sol = ctx.solve_bingham(&q).map_err(|e| e.to_string())?;
            ensure(sol.moment_residual <= 1e-10, "working-rule residual")?;
            Ok(format!(
                "dual solved in {} iterations, residual {:.1e}",
                sol.iterations, sol.moment_residual
            ))
        }),
        check("moreau-bounds", || {
            let ctx = BmContext::new(BmParams::new(1.0, 4.0, 100.0));
            let log4pi = (4.0 * std::f64::consts::PI).ln();
            let q = QTensor::from_coeffs([6.0, -4.0, 8.0, 2.0, -5.0]);
            let scaled = q.scale(12.0 / q.norm());
            let m = 100.0;
            let v = ctx.moreau(&scaled, m).map_err(|e| e.to_string())?.value;
            ensure(v >= -log4pi, "global lower bound")?;
            ensure(
                v >= 0.25 * m * 144.0 - log4pi,
                format!("quadratic growth: {v}"),
            )?;
            ensure(
                physicality_margin(&ctx.moreau(&scaled, m).unwrap().prox) > 0.0,
                "prox physical",
            )?;
            Ok("envelope bounds hold at |Q| = 12".into())
        }),
        check("leray-projection", || {
            let grid = SpectralGrid::new(2, 16).map_err(|e| e.to_string())?;
            let phi =
                crate::field::ScalarField::from_fn(&grid, |p| (p[0]).sin() * (2.0 * p[1]).cos());
            let spec = phi.to_spectral();
            let mut g = VelocityField::zeros(&grid);
            g.comps[0].data = grid.inverse_real(&grid.derivative(&spec, 0));
            g.comps[1].data = grid.inverse_real(&grid.derivative(&spec, 1));
            let projected = leray_project(&g);
            ensure(projected.max_abs() < 1e-12, "gradient not annihilated")?;
            Ok("pure gradients annihilated".into())
        }),
        check("div2-cancellation", || {
            let grid = SpectralGrid::new(2, 32).map_err(|e| e.to_string())?;
            let (_, q1) = smooth_random_fields(&grid, 41, 0.0, 0.5, 2.5);
            let (_, q2) = smooth_random_fields(&grid, 42, 0.0, 0.4, 2.5);
            let r = crate::diagnostics::div2_cancellation_residual(&q1, &q2, &ldg_spec())
                .map_err(|e| e.to_string())?;
            ensure(r <= 1e-11, format!("residual {r:.2e}"))?;
            Ok(format!("residual {r:.2e}"))
        }),
        check("corotational-cancellation", || {
            let grid = SpectralGrid::new(2, 32).map_err(|e| e.to_string())?;
            let (u, q) = smooth_random_fields(&grid, 43, 0.8, 0.4, 2.5);
            let rep =
                crate::diagnostics::corotational_cancellation_residual(&u, &q, &ldg_spec(), None)
                    .map_err(|e| e.to_string())?;
            ensure(
                rep.relative_residual <= 1e-10,
                format!("residual {:.2e}", rep.relative_residual),
            )?;
            Ok(format!("residual {:.2e}", rep.relative_residual))
        }),
        check("taylor-green-decay", || {
            let grid = SpectralGrid::new(2, 32).map_err(|e| e.to_string())?;
            let u = VelocityField::from_fn(&grid, |p| {
                [p[0].sin() * p[1].cos(), -(p[0].cos()) * p[1].sin(), 0.0]
            });
            let mut state = SimState::new(u, QTensorField::zeros(&grid), 2);
            let mut stepper = Stepper::new(&grid, SimConfig::new(1e-3, 0.1, ldg_spec()))
                .map_err(|e| e.to_string())?;
            for _ in 0..100 {
                stepper.step(&mut state).map_err(|e| e.to_string())?;
            }
            let decay = (-2.0 * state.t).exp();
            let mut err = 0.0f64;
            for idx in 0..grid.len() {
                let p = grid.point(idx);
                err = err.max((state.u.at(idx)[0] - decay * p[0].sin() * p[1].cos()).abs());
            }
            ensure(err < 1e-8, format!("decay error {err:.2e}"))?;
            Ok(format!("mode decay error {err:.2e}"))
        }),
        check("energy-monotone", || {
            let grid = SpectralGrid::new(2, 32).map_err(|e| e.to_string())?;
            let (u0, q0) = smooth_random_fields(&grid, 44, 0.5, 0.3, 2.0);
            let mut state = SimState::new(u0, q0, 2);
            let mut stepper = Stepper::new(&grid, SimConfig::new(1e-3, 0.05, ldg_spec()))
                .map_err(|e| e.to_string())?;
            let mut records =
                vec![crate::diagnostics::energy(&state, &ldg_spec()).map_err(|e| e.to_string())?];
            for _ in 0..50 {
                stepper.step(&mut state).map_err(|e| e.to_string())?;
                records.push(
                    crate::diagnostics::energy(&state, &ldg_spec()).map_err(|e| e.to_string())?,
                );
            }
            let rep = crate::diagnostics::energy_balance_residual(&records, 1e-9);
            ensure(rep.increases == 0, format!("{} increases", rep.increases))?;
            Ok(format!("max balance residual {:.2e}", rep.max_abs))
        }),
        check("mollifier-causality", || {
            let grid = SpectralGrid::new(2, 16).map_err(|e| e.to_string())?;
            let hist: Vec<Snapshot> = (0..12)
                .map(|i| {
                    let (u, q) = smooth_random_fields(&grid, 60 + i, 1.0, 0.5, 2.0);
                    Snapshot {
                        t: i as f64 * 0.01,
                        u,
                        q,
                    }
                })
                .collect();
            let (u1, _) = retarded_mollify(&hist, 0.25, 0.1).map_err(|e| e.to_string())?;
            let mut hist2 = hist.clone();
            for s in hist2.iter_mut().filter(|s| s.t > 0.1 - 0.0625) {
                for c in &mut s.u.comps {
                    for v in &mut c.data {
                        *v += 5.0;
                    }
                }
            }
            let (u2, _) = retarded_mollify(&hist2, 0.25, 0.1).map_err(|e| e.to_string())?;
            for a in 0..2 {
                ensure(
                    u1.comps[a].data == u2.comps[a].data,
                    "future leaked into output",
                )?;
            }
            ensure(u1.divergence_defect() < 1e-10, "divergence not preserved")?;
            Ok("causal and divergence-preserving".into())
        }),
        check("snapshot-roundtrip", || {
            let grid = SpectralGrid::new(2, 16).map_err(|e| e.to_string())?;
            let (u, q) = smooth_random_fields(&grid, 45, 0.6, 0.3, 2.0);
            let dir = std::env::temp_dir().join(format!("beris-selftest-{}", std::process::id()));
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            let p = dir.join("x.snap");
            crate::snapshot::write_state(&p, 0.5, 3, &u, &q).map_err(|e| e.to_string())?;
            let (_, _, u2, q2) = crate::snapshot::read_state(&p).map_err(|e| e.to_string())?;
            ensure(
                u.comps[0].data == u2.comps[0].data && q.comps[4].data == q2.comps[4].data,
                "round trip not bit-exact",
            )?;
            let _ = std::fs::remove_dir_all(&dir);
            Ok("bit-exact round trip".into())
        }),
        check("determinism", || {
            let grid = SpectralGrid::new(2, 16).map_err(|e| e.to_string())?;
            let run = || -> Result<Vec<f64>, String> {
                let kind = crate::solver::InitialData::RandomSmooth {
                    amp_u: 0.5,
                    amp_q: 0.3,
                    k0: 2.0,
                    margin: 0.05,
                };
                let (u0, q0) = crate::solver::make_initial_data(&kind, 7, &grid, &ldg_spec())
                    .map_err(|e| e.to_string())?;
                let mut state = SimState::new(u0, q0, 2);
                let mut stepper = Stepper::new(&grid, SimConfig::new(1e-3, 0.02, ldg_spec()))
                    .map_err(|e| e.to_string())?;
                for _ in 0..20 {
                    stepper.step(&mut state).map_err(|e| e.to_string())?;
                }
                Ok(state.u.comps[0].data.clone())
            };
            ensure(run()? == run()?, "fixed-seed runs differ")?;
            Ok("fixed-seed trajectories bit-identical".into())
        }),
        check("max-principle-formula", || {
            let grid = SpectralGrid::new(2, 8).map_err(|e| e.to_string())?;
            let s = 0.5 / (2.0f64 / 3.0).sqrt();
            let q0 = QTensorField::from_fn(&grid, |_| uniaxial(s, [1.0, 0.0, 0.0]).unwrap());
            let c = crate::diagnostics::max_principle_bound(&ldg_spec(), &q0)
                .map_err(|e| e.to_string())?;
            ensure((c - 0.94f64.sqrt()).abs() < 1e-12, format!("bound {c}"))?;
            Ok(format!("bound {c:.6}"))
        }),
        check("bulk-dispatch", || {
            let pot = Potential::new(&ldg_spec()).map_err(|e| e.to_string())?;
            let z = pot.f_bulk(&QTensor::zero()).map_err(|e| e.to_string())?;
            ensure(z.norm() == 0.0, "ldg f(0)")?;
            let bm = Potential::new(&PotentialSpec::Bm(BmParams::new(1.0, 4.0, 100.0)))
                .map_err(|e| e.to_string())?;
            let z = bm.f_bulk(&QTensor::zero()).map_err(|e| e.to_string())?;
            ensure(z.norm() < 1e-8, "bm f(0)")?;
            let v = bm
                .f_bulk_value(&QTensor::zero())
                .map_err(|e| e.to_string())?;
            let expect = -(4.0 * std::f64::consts::PI).ln();
            ensure((v - expect).abs() < 1e-9, format!("bm value {v}"))?;
            Ok("both variants dispatch correctly".into())
        }),
    ]
}
