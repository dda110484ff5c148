//! Pseudo-spectral time integration of the co-rotational Beris-Edwards
//! system on a periodic torus: incompressibility by spectral projection,
//! stiff Laplacians by exact integrating factors, and all coupling terms
//! explicit.

pub(crate) mod initial;
mod mollify;
pub(crate) mod rhs;
mod step;

pub use initial::{make_initial_data, manufactured_fields, smooth_random_fields, InitialData};
pub use mollify::retarded_mollify;
pub use rhs::{leray_project, pressure_field, q_rhs, u_rhs, EnergyParts, Forcing};
pub use step::{integrate, StepReport, Stepper};

use crate::field::{QTensorField, VelocityField};
use crate::potential::{PotentialError, PotentialSpec};
use crate::spectral::GridError;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("potential evaluation failed at grid point {idx} (x = {x:?}): {source}")]
    PotentialAt {
        idx: usize,
        x: [f64; 3],
        source: PotentialError,
    },
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("solution blew up at t = {t}, step {step} (max |u| = {max_u:.3e})")]
    BlowUp { t: f64, step: u64, max_u: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("history buffer does not cover the mollifier window: need back to t = {needed}, earliest stored t = {have}")]
    InsufficientHistory { needed: f64, have: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    ImexEuler,
    ImexBdf2,
}

/// Time-stepping configuration. The material multipliers default to one;
/// nothing in the test suite constrains other values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub integrator: Integrator,
    pub cfl_limit: f64,
    /// Steps between history-buffer pushes.
    pub store_cadence: usize,
    pub history_depth: usize,
    pub potential: PotentialSpec,
    pub seed: u64,
    pub l_elastic: f64,
    pub gamma_rot: f64,
    pub mu_visc: f64,
}

impl SimConfig {
    pub fn new(dt: f64, t_final: f64, potential: PotentialSpec) -> Self {
        SimConfig {
            dt,
            t_final,
            integrator: Integrator::ImexEuler,
            cfl_limit: 0.5,
            store_cadence: 1,
            history_depth: 8,
            potential,
            seed: 0,
            l_elastic: 1.0,
            gamma_rot: 1.0,
            mu_visc: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt > 0.0) {
            return Err(SolverError::Config("dt must be positive".into()));
        }
        if !(self.t_final >= 0.0) {
            return Err(SolverError::Config("t_final must be nonnegative".into()));
        }
        if !(self.cfl_limit > 0.0) {
            return Err(SolverError::Config("cfl_limit must be positive".into()));
        }
        if self.store_cadence == 0 {
            return Err(SolverError::Config("store_cadence must be >= 1".into()));
        }
        if self.history_depth < 2 {
            return Err(SolverError::Config("history_depth must be >= 2".into()));
        }
        if !(self.l_elastic > 0.0 && self.gamma_rot > 0.0 && self.mu_visc > 0.0) {
            return Err(SolverError::Config(
                "material multipliers must be positive".into(),
            ));
        }
        self.potential.validate()?;
        Ok(())
    }
}

/// One stored time slice.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub u: VelocityField,
    pub q: QTensorField,
}

/// Simulation state: current fields plus a bounded ring of past snapshots
/// for the retarded mollifier and time diagnostics.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub u: VelocityField,
    pub q: QTensorField,
    pub history: VecDeque<Snapshot>,
    pub history_depth: usize,
}

impl SimState {
    pub fn new(u: VelocityField, q: QTensorField, history_depth: usize) -> Self {
        let mut state = SimState {
            t: 0.0,
            step: 0,
            u,
            q,
            history: VecDeque::new(),
            history_depth: history_depth.max(2),
        };
        state.push_history();
        state
    }

    /// Append the current fields to the ring; timestamps must strictly
    /// increase.
    pub fn push_history(&mut self) {
        if let Some(last) = self.history.back() {
            assert!(self.t > last.t, "history timestamps must strictly increase");
        }
        if self.history.len() == self.history_depth {
            self.history.pop_front();
        }
        self.history.push_back(Snapshot {
            t: self.t,
            u: self.u.clone(),
            q: self.q.clone(),
        });
    }
}
