//! IMEX time stepping with exact integrating factors for the Laplacians.
//!
//! Both schemes integrate the stiff diffusion exactly per Fourier mode and
//! treat every coupling term explicitly. `imex-euler` is first order;
//! `imex-bdf2` is the second-order backward-differentiation variant with
//! explicit extrapolation of the nonlinear terms, bootstrapped by one Euler
//! step. A CFL guard halves the step (with scheme restart) when the
//! advective limit is exceeded.

use rustfft::num_complex::Complex64;
use std::sync::Arc;

use crate::field::{QTensorField, VelocityField};
use crate::potential::Potential;
use crate::spectral::SpectralGrid;

use super::rhs::{explicit_terms, leray_project_spec, EnergyParts, Forcing};
use super::{Integrator, SimConfig, SimState, SolverError};

const BLOWUP_MAX_U: f64 = 1e6;

#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    /// Step size actually taken (sum of substeps equals the configured dt).
    pub dt_taken: f64,
    pub substeps: usize,
    pub cfl: f64,
    /// Energy integrals of the state at the step start, when recording is
    /// enabled.
    pub energy: Option<(f64, EnergyParts)>,
}

struct PrevStep {
    dt: f64,
    u: Vec<Vec<Complex64>>,
    q: Vec<Vec<Complex64>>,
    nu: Vec<Vec<Complex64>>,
    nq: Vec<Vec<Complex64>>,
}

/// Owns the potential context, the per-point dual warm starts, and the
/// multistep history. One stepper advances one state.
pub struct Stepper {
    grid: Arc<SpectralGrid>,
    config: SimConfig,
    pot: Potential,
    warm: Option<Vec<[f64; 5]>>,
    prev: Option<PrevStep>,
    forcing: Option<Forcing>,
    record_energy: bool,
}

impl Stepper {
    pub fn new(grid: &Arc<SpectralGrid>, config: SimConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let pot = Potential::new(&config.potential)?;
        let warm = match pot {
            Potential::Bm(_) => Some(vec![[0.0; 5]; grid.len()]),
            Potential::Ldg { .. } => None,
        };
        Ok(Stepper {
            grid: grid.clone(),
            config,
            pot,
            warm,
            prev: None,
            forcing: None,
            record_energy: false,
        })
    }

    pub fn with_forcing(mut self, forcing: Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    /// Record the energy ledger of every step start inside the force
    /// assembly (free for the entropy potential, cheap for the polynomial).
    pub fn set_record_energy(&mut self, on: bool) {
        self.record_energy = on;
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn potential(&self) -> &Potential {
        &self.pot
    }

    /// Per-point dual warm starts (entropy potential only); serialized into
    /// checkpoints so a restart replays identical Newton trajectories.
    pub fn warm_cache(&self) -> Option<&Vec<[f64; 5]>> {
        self.warm.as_ref()
    }

    pub fn set_warm_cache(&mut self, cache: Vec<[f64; 5]>) {
        assert_eq!(cache.len(), self.grid.len());
        self.warm = Some(cache);
    }

    /// Advance one configured time step, splitting into CFL-limited
    /// substeps when needed.
    pub fn step(&mut self, state: &mut SimState) -> Result<StepReport, SolverError> {
        let dt = self.config.dt;
        let h = self.grid.h();
        let max_u = state.u.max_abs();
        let cfl = max_u * dt / h;
        let mut substeps = 1usize;
        while max_u * (dt / substeps as f64) / h > self.config.cfl_limit && substeps < 1 << 16 {
            substeps *= 2;
        }
        if substeps > 1 {
            // Scheme restart: the multistep history is not valid across a
            // step-size change.
            self.prev = None;
        }
        let dt_sub = dt / substeps as f64;
        let mut energy = None;
        for sub in 0..substeps {
            let scheme = if substeps > 1 {
                Integrator::ImexEuler
            } else {
                self.config.integrator
            };
            let parts = self.advance(state, dt_sub, scheme, self.record_energy && sub == 0)?;
            if sub == 0 {
                energy = parts.map(|p| (state.t - dt_sub, p));
            }
        }
        state.step += 1;
        Ok(StepReport {
            dt_taken: dt,
            substeps,
            cfl,
            energy,
        })
    }

    fn advance(
        &mut self,
        state: &mut SimState,
        dt: f64,
        scheme: Integrator,
        want_energy: bool,
    ) -> Result<Option<EnergyParts>, SolverError> {
        let grid = &self.grid;
        let d = grid.dim();
        let mut u_spec = state.u.to_spectral();
        let mut q_spec = state.q.to_spectral();
        for s in u_spec.iter_mut().chain(q_spec.iter_mut()) {
            grid.dealias(s);
        }

        let terms = explicit_terms(
            grid,
            &self.pot,
            &u_spec,
            &q_spec,
            self.config.l_elastic,
            self.config.gamma_rot,
            self.warm.as_mut(),
            want_energy,
            self.forcing.as_ref(),
        )?;
        let energy = terms.energy;
        let mut nu = terms.nu;
        leray_project_spec(grid, &mut nu);
        let nq = terms.nq;

        let lam_u = self.config.mu_visc;
        let lam_q = self.config.gamma_rot * self.config.l_elastic;

        let use_bdf2 = matches!(scheme, Integrator::ImexBdf2)
            && self
                .prev
                .as_ref()
                .map(|p| (p.dt - dt).abs() < 1e-15 * dt)
                .unwrap_or(false);

        let mut new_u = vec![vec![Complex64::default(); grid.len()]; d];
        let mut new_q = vec![vec![Complex64::default(); grid.len()]; 5];
        if use_bdf2 {
            let prev = self.prev.as_ref().unwrap();
            for idx in 0..grid.len() {
                let k2 = grid.k_sq(idx);
                let (eu, eq) = ((-lam_u * k2 * dt).exp(), (-lam_q * k2 * dt).exp());
                let (eu2, eq2) = (eu * eu, eq * eq);
                for a in 0..d {
                    new_u[a][idx] = (4.0 * eu * u_spec[a][idx] - eu2 * prev.u[a][idx]) / 3.0
                        + (2.0 * dt / 3.0) * (2.0 * eu * nu[a][idx] - eu2 * prev.nu[a][idx]);
                }
                for c in 0..5 {
                    new_q[c][idx] = (4.0 * eq * q_spec[c][idx] - eq2 * prev.q[c][idx]) / 3.0
                        + (2.0 * dt / 3.0) * (2.0 * eq * nq[c][idx] - eq2 * prev.nq[c][idx]);
                }
            }
        } else {
            for idx in 0..grid.len() {
                let k2 = grid.k_sq(idx);
                let (eu, eq) = ((-lam_u * k2 * dt).exp(), (-lam_q * k2 * dt).exp());
                for a in 0..d {
                    new_u[a][idx] = eu * (u_spec[a][idx] + dt * nu[a][idx]);
                }
                for c in 0..5 {
                    new_q[c][idx] = eq * (q_spec[c][idx] + dt * nq[c][idx]);
                }
            }
        }

        leray_project_spec(grid, &mut new_u);
        for s in new_u.iter_mut().chain(new_q.iter_mut()) {
            grid.dealias(s);
        }

        let u_new = VelocityField::from_spectral(grid, &new_u);
        let q_new = QTensorField::from_spectral(grid, &new_q);
        let max_u = u_new.max_abs();
        if !u_new.is_finite() || !q_new.is_finite() || max_u > BLOWUP_MAX_U {
            // Leave the state at the last good fields.
            return Err(SolverError::BlowUp {
                t: state.t,
                step: state.step,
                max_u,
            });
        }

        if matches!(self.config.integrator, Integrator::ImexBdf2) {
            self.prev = Some(PrevStep {
                dt,
                u: u_spec,
                q: q_spec,
                nu,
                nq,
            });
        }
        state.u = u_new;
        state.q = q_new;
        state.t += dt;
        Ok(energy)
    }
}

/// Drive a state to `t_final`, pushing history at the configured cadence
/// and invoking `on_step` after every step.
pub fn integrate<F: FnMut(&SimState, &StepReport)>(
    stepper: &mut Stepper,
    state: &mut SimState,
    mut on_step: F,
) -> Result<(), SolverError> {
    let t_final = stepper.config.t_final;
    let cadence = stepper.config.store_cadence;
    while state.t < t_final - 1e-12 {
        let report = stepper.step(state)?;
        if state.step % cadence as u64 == 0 {
            state.push_history();
        }
        on_step(state, &report);
    }
    Ok(())
}
