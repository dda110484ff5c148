//! Run configuration: sectioned key-value text (TOML syntax), schema
//! validated before any allocation, with every defaulted value echoed back
//! into the persisted resolved-config file.

use serde::{Deserialize, Serialize};

use crate::potential::{BmParams, LdgParams, PotentialSpec};
use crate::solver::{InitialData, Integrator, SimConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dim: usize,
    pub n: usize,
}

fn default_cfl() -> f64 {
    0.5
}
fn default_store_cadence() -> usize {
    1
}
fn default_history_depth() -> usize {
    8
}
fn default_one() -> f64 {
    1.0
}
fn default_integrator() -> Integrator {
    Integrator::ImexEuler
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    #[serde(default = "default_cfl")]
    pub cfl_limit: f64,
    #[serde(default = "default_store_cadence")]
    pub store_cadence: usize,
    #[serde(default = "default_history_depth")]
    pub history_depth: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_one")]
    pub l_elastic: f64,
    #[serde(default = "default_one")]
    pub gamma_rot: f64,
    #[serde(default = "default_one")]
    pub mu_visc: f64,
}

fn default_quad_degree() -> usize {
    35
}
fn default_newton_tol() -> f64 {
    1e-10
}
fn default_newton_max_iter() -> usize {
    60
}

/// Flat potential section; the variant decides which keys are meaningful
/// and the converter rejects keys of the other variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    pub variant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default = "default_quad_degree")]
    pub quad_degree: usize,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
}

impl PotentialBlock {
    pub fn to_spec(&self) -> Result<PotentialSpec, String> {
        match self.variant.as_str() {
            "ldg" => {
                if self.nu.is_some() || self.kappa.is_some() || self.m.is_some() {
                    return Err("ldg potential does not accept nu/kappa/m".into());
                }
                let (Some(a), Some(b), Some(c)) = (self.a, self.b, self.c) else {
                    return Err("ldg potential requires a, b, c".into());
                };
                Ok(PotentialSpec::Ldg(LdgParams { a, b, c }))
            }
            "bm" => {
                if self.a.is_some() || self.b.is_some() || self.c.is_some() {
                    return Err("bm potential does not accept a/b/c".into());
                }
                let (Some(nu), Some(kappa), Some(m)) = (self.nu, self.kappa, self.m) else {
                    return Err("bm potential requires nu, kappa, m".into());
                };
                let mut p = BmParams::new(nu, kappa, m);
                p.quad_degree = self.quad_degree;
                p.newton_tol = self.newton_tol;
                p.newton_max_iter = self.newton_max_iter;
                Ok(PotentialSpec::Bm(p))
            }
            other => Err(format!("unknown potential variant '{other}'")),
        }
    }

    pub fn from_spec(spec: &PotentialSpec) -> Self {
        match spec {
            PotentialSpec::Ldg(p) => PotentialBlock {
                variant: "ldg".into(),
                a: Some(p.a),
                b: Some(p.b),
                c: Some(p.c),
                nu: None,
                kappa: None,
                m: None,
                quad_degree: default_quad_degree(),
                newton_tol: default_newton_tol(),
                newton_max_iter: default_newton_max_iter(),
            },
            PotentialSpec::Bm(p) => PotentialBlock {
                variant: "bm".into(),
                a: None,
                b: None,
                c: None,
                nu: Some(p.nu),
                kappa: Some(p.kappa),
                m: Some(p.m),
                quad_degree: p.quad_degree,
                newton_tol: p.newton_tol,
                newton_max_iter: p.newton_max_iter,
            },
        }
    }
}

fn default_amp_u() -> f64 {
    0.5
}
fn default_amp_q() -> f64 {
    0.5
}
fn default_k0() -> f64 {
    2.5
}
fn default_margin() -> f64 {
    0.05
}
fn default_defect_s() -> f64 {
    0.84
}
fn default_winding() -> i32 {
    1
}
fn default_core() -> f64 {
    0.4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialBlock {
    /// One of random-smooth | uniaxial-defect | manufactured.
    pub kind: String,
    #[serde(default = "default_amp_u")]
    pub amp_u: f64,
    #[serde(default = "default_amp_q")]
    pub amp_q: f64,
    #[serde(default = "default_k0")]
    pub k0: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_defect_s")]
    pub defect_s: f64,
    #[serde(default = "default_winding")]
    pub winding: i32,
    #[serde(default = "default_core")]
    pub core: f64,
}

impl InitialBlock {
    pub fn to_kind(&self) -> Result<InitialData, String> {
        match self.kind.as_str() {
            "random-smooth" => Ok(InitialData::RandomSmooth {
                amp_u: self.amp_u,
                amp_q: self.amp_q,
                k0: self.k0,
                margin: self.margin,
            }),
            "uniaxial-defect" => Ok(InitialData::UniaxialDefect {
                s: self.defect_s,
                winding: self.winding,
                core: self.core,
            }),
            "manufactured" => Ok(InitialData::Manufactured {
                amp_u: self.amp_u,
                amp_q: self.amp_q,
            }),
            other => Err(format!("unknown initial-data kind '{other}'")),
        }
    }
}

fn default_families() -> Vec<String> {
    vec!["energy".into(), "maxprinciple".into()]
}
fn default_eps0() -> f64 {
    0.1
}
fn default_eps1() -> f64 {
    0.1
}
fn default_energy_cadence() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsBlock {
    /// Enabled families: energy | maxprinciple | ckn | lei.
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    #[serde(default = "default_energy_cadence")]
    pub energy_cadence: usize,
    /// CKN centers as [x, y, z, t].
    #[serde(default)]
    pub ckn_centers: Vec<[f64; 4]>,
    #[serde(default)]
    pub ckn_radii: Vec<f64>,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_eps1")]
    pub eps1: f64,
    #[serde(default)]
    pub lei_center: Option<[f64; 3]>,
    #[serde(default)]
    pub lei_t_eval: Option<f64>,
    #[serde(default)]
    pub lei_space_radius: Option<f64>,
    #[serde(default)]
    pub lei_time_radius: Option<f64>,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        DiagnosticsBlock {
            families: default_families(),
            energy_cadence: 1,
            ckn_centers: Vec::new(),
            ckn_radii: Vec::new(),
            eps0: default_eps0(),
            eps1: default_eps1(),
            lei_center: None,
            lei_t_eval: None,
            lei_space_radius: None,
            lei_time_radius: None,
        }
    }
}

fn default_snapshot_cadence() -> usize {
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
    /// Steps between snapshot files; 0 disables periodic snapshots (the
    /// final state is always written).
    #[serde(default = "default_snapshot_cadence")]
    pub snapshot_cadence: usize,
    /// Steps between checkpoints; 0 writes one checkpoint at the end only.
    #[serde(default)]
    pub checkpoint_cadence: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridBlock,
    pub sim: SimBlock,
    pub potential: PotentialBlock,
    pub initial: InitialBlock,
    #[serde(default)]
    pub diagnostics: DiagnosticsBlock,
    pub output: OutputBlock,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), String> {
        let spec = self.potential.to_spec()?;
        spec.validate().map_err(|e| e.to_string())?;
        self.initial.to_kind()?;
        let sim = self.sim_config(spec);
        sim.validate().map_err(|e| e.to_string())?;
        crate::spectral::SpectralGrid::new(self.grid.dim, self.grid.n)
            .map_err(|e| e.to_string())?;
        for fam in &self.diagnostics.families {
            if !["energy", "maxprinciple", "ckn", "lei"].contains(&fam.as_str()) {
                return Err(format!("unknown diagnostics family '{fam}'"));
            }
        }
        if self.diagnostics.energy_cadence == 0 {
            return Err("energy_cadence must be >= 1".into());
        }
        Ok(())
    }

    pub fn sim_config(&self, potential: PotentialSpec) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            t_final: self.sim.t_final,
            integrator: self.sim.integrator,
            cfl_limit: self.sim.cfl_limit,
            store_cadence: self.sim.store_cadence,
            history_depth: self.sim.history_depth,
            potential,
            seed: self.sim.seed,
            l_elastic: self.sim.l_elastic,
            gamma_rot: self.sim.gamma_rot,
            mu_visc: self.sim.mu_visc,
        }
    }
}
