//! Run orchestration: drive a configured simulation to completion, stream
//! diagnostics, persist snapshots/checkpoints, and write the manifest.
//! Also the offline diagnose pass and the potential tabulation.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::RunConfig;
use crate::diagnostics::{
    self, bm_bound_monitor, energy, energy_balance_residual, local_energy_residual,
    max_principle_bound, singularity_scan, EnergyRecord, LeiSpec,
};
use crate::potential::PotentialSpec;
use crate::snapshot::{self, SnapshotError};
use crate::solver::{make_initial_data, SimState, Snapshot, SolverError, Stepper};
use crate::spectral::SpectralGrid;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("blow-up at t = {t}, step {step}; last good state written to {snapshot}")]
    BlowUp {
        t: f64,
        step: u64,
        snapshot: PathBuf,
    },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Solver(SolverError),
    #[error(transparent)]
    Diagnostics(#[from] diagnostics::DiagnosticsError),
}

impl RunError {
    /// Process exit code contract: 2 config, 3 blow-up, 4 corrupt snapshot,
    /// 5 everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::BlowUp { .. } => 3,
            RunError::Snapshot(SnapshotError::Corrupt { .. }) => 4,
            _ => 5,
        }
    }
}

impl From<SolverError> for RunError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(msg) => RunError::Config(msg),
            other => RunError::Solver(other),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    /// completed | blow-up
    pub status: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub resolved_config: RunConfig,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Exclusive ownership of an output directory for the duration of a run.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<DirLock, RunError> {
        let path = dir.join("lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(RunError::Config(format!(
                    "output directory is locked by another run: {}",
                    path.display()
                )))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn sha256_hex(path: &Path) -> std::io::Result<String> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn fmt_f(v: f64) -> String {
    format!("{v:.17e}")
}

struct CsvWriter {
    file: File,
    path: PathBuf,
}

impl CsvWriter {
    fn create(path: PathBuf, header: &str) -> Result<Self, RunError> {
        let mut file = File::create(&path)?;
        writeln!(file, "{header}")?;
        Ok(CsvWriter { file, path })
    }

    fn row(&mut self, cells: &[String]) -> Result<(), RunError> {
        writeln!(self.file, "{}", cells.join(","))?;
        Ok(())
    }
}

const ENERGY_HEADER: &str = "t,kinetic,elastic,bulk,total,diss_u,diss_h";
const MAXP_HEADER: &str = "t,max_q,bound,min_margin";

fn energy_row(rec: &EnergyRecord) -> Vec<String> {
    vec![
        fmt_f(rec.t),
        fmt_f(rec.kinetic),
        fmt_f(rec.elastic),
        fmt_f(rec.bulk),
        fmt_f(rec.total),
        fmt_f(rec.diss_u),
        fmt_f(rec.diss_h),
    ]
}

/// Execute a run to `t_final` (or blow-up). Returns the manifest, which is
/// also persisted in the output directory.
pub fn cmd_run(
    config: &RunConfig,
    output_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<RunManifest, RunError> {
    let started = now_unix();
    let mut cfg = config.clone();
    if let Some(seed) = seed_override {
        cfg.sim.seed = seed;
    }
    cfg.validate().map_err(RunError::Config)?;
    let out_dir = output_override
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    fs::create_dir_all(&out_dir)?;
    let _lock = DirLock::acquire(&out_dir)?;

    let mut artifacts: Vec<PathBuf> = Vec::new();
    let resolved_path = out_dir.join("resolved_config.toml");
    fs::write(&resolved_path, cfg.to_toml())?;
    artifacts.push(resolved_path);

    let spec = cfg.potential.to_spec().map_err(RunError::Config)?;
    let grid = SpectralGrid::new(cfg.grid.dim, cfg.grid.n).map_err(SolverError::Grid)?;
    let kind = cfg.initial.to_kind().map_err(RunError::Config)?;
    let (u0, q0) = make_initial_data(&kind, cfg.sim.seed, &grid, &spec)?;
    let sim = cfg.sim_config(spec);
    let mut state = SimState::new(u0, q0, sim.history_depth);
    let mut stepper = Stepper::new(&grid, sim)?;

    let families = &cfg.diagnostics.families;
    let want = |f: &str| families.iter().any(|s| s == f);
    let mut energy_csv = if want("energy") {
        Some(CsvWriter::create(
            out_dir.join("energy.csv"),
            ENERGY_HEADER,
        )?)
    } else {
        None
    };
    let mut maxp_csv = if want("maxprinciple") {
        Some(CsvWriter::create(
            out_dir.join("maxprinciple.csv"),
            MAXP_HEADER,
        )?)
    } else {
        None
    };
    let mut log = File::create(out_dir.join("run.log"))?;
    let ldg_bound = match &cfg.potential.to_spec().unwrap() {
        s @ PotentialSpec::Ldg(_) => Some(max_principle_bound(s, &state.q)?),
        PotentialSpec::Bm(_) => None,
    };

    let mut energy_records: Vec<EnergyRecord> = Vec::new();
    let mut max_q_seen = state.q.max_norm();
    let mut min_margin_seen = f64::INFINITY;
    let spec = cfg.potential.to_spec().unwrap();
    stepper.set_record_energy(energy_csv.is_some());

    let record_maxprinciple = |state: &SimState,
                               maxp_csv: &mut Option<CsvWriter>,
                               max_q_seen: &mut f64,
                               min_margin_seen: &mut f64|
     -> Result<(), RunError> {
        if let Some(csv) = maxp_csv.as_mut() {
            let max_q = state.q.max_norm();
            let margin = state.q.min_margin();
            *max_q_seen = max_q_seen.max(max_q);
            *min_margin_seen = min_margin_seen.min(margin);
            csv.row(&[
                fmt_f(state.t),
                fmt_f(max_q),
                fmt_f(ldg_bound.unwrap_or(f64::NAN)),
                fmt_f(margin),
            ])?;
        }
        Ok(())
    };
    record_maxprinciple(&state, &mut maxp_csv, &mut max_q_seen, &mut min_margin_seen)?;

    let snap_path = |step: u64| out_dir.join(format!("snap_{step:08}.snap"));
    if cfg.output.snapshot_cadence > 0 {
        let p = snap_path(0);
        snapshot::write_state(&p, state.t, 0, &state.u, &state.q)?;
        write_meta(&p, &cfg)?;
        artifacts.push(p);
    }

    let t_final = cfg.sim.t_final;
    while state.t < t_final - 1e-12 {
        match stepper.step(&mut state) {
            Ok(report) => {
                if report.substeps > 1 {
                    writeln!(
                        log,
                        "step {}: cfl {:.3} exceeded limit, dt auto-halved into {} substeps",
                        state.step, report.cfl, report.substeps
                    )?;
                }
                if let Some((t, parts)) = report.energy {
                    if (state.step - 1).is_multiple_of(cfg.diagnostics.energy_cadence as u64) {
                        let rec = EnergyRecord::from_parts(t, &parts);
                        if let Some(csv) = energy_csv.as_mut() {
                            csv.row(&energy_row(&rec))?;
                        }
                        energy_records.push(rec);
                    }
                }
            }
            Err(SolverError::BlowUp { t, step, max_u }) => {
                let p = out_dir.join("last_good.snap");
                snapshot::write_state(&p, state.t, state.step, &state.u, &state.q)?;
                writeln!(log, "blow-up at t {t} step {step} max_u {max_u:.3e}")?;
                let manifest = finish_manifest(
                    &out_dir,
                    &cfg,
                    "blow-up",
                    started,
                    artifacts.iter().chain(std::iter::once(&p)),
                )?;
                drop(manifest);
                return Err(RunError::BlowUp {
                    t,
                    step,
                    snapshot: p,
                });
            }
            Err(e) => return Err(e.into()),
        }
        if state.step.is_multiple_of(cfg.sim.store_cadence as u64) {
            state.push_history();
        }
        if state
            .step
            .is_multiple_of(cfg.diagnostics.energy_cadence as u64)
        {
            record_maxprinciple(&state, &mut maxp_csv, &mut max_q_seen, &mut min_margin_seen)?;
        }
        if cfg.output.snapshot_cadence > 0
            && state
                .step
                .is_multiple_of(cfg.output.snapshot_cadence as u64)
        {
            let p = snap_path(state.step);
            snapshot::write_state(&p, state.t, state.step, &state.u, &state.q)?;
            write_meta(&p, &cfg)?;
            artifacts.push(p);
        }
        if cfg.output.checkpoint_cadence > 0
            && state
                .step
                .is_multiple_of(cfg.output.checkpoint_cadence as u64)
        {
            snapshot::write_checkpoint(&out_dir.join("checkpoint"), &state, stepper.warm_cache())?;
        }
    }

    // Final energy record and state artifacts.
    if energy_csv.is_some() {
        let rec = energy(&state, &spec)?;
        if let Some(csv) = energy_csv.as_mut() {
            csv.row(&energy_row(&rec))?;
        }
        energy_records.push(rec);
    }
    let p = out_dir.join("final.snap");
    snapshot::write_state(&p, state.t, state.step, &state.u, &state.q)?;
    write_meta(&p, &cfg)?;
    artifacts.push(p);
    snapshot::write_checkpoint(&out_dir.join("checkpoint"), &state, stepper.warm_cache())?;

    let mut summary = serde_json::Map::new();
    summary.insert("t_final".into(), serde_json::json!(state.t));
    summary.insert("steps".into(), serde_json::json!(state.step));
    if want("energy") && energy_records.len() >= 2 {
        let report = energy_balance_residual(&energy_records, 1e-9);
        summary.insert(
            "energy".into(),
            serde_json::json!({
                "pass": report.increases == 0,
                "max_residual": report.max_abs,
                "mean_residual": report.mean_abs,
                "increases": report.increases,
            }),
        );
    }
    if want("maxprinciple") {
        match ldg_bound {
            Some(bound) => {
                summary.insert(
                    "maxprinciple".into(),
                    serde_json::json!({
                        "pass": max_q_seen <= bound + 1e-3,
                        "max_q": max_q_seen,
                        "bound": bound,
                    }),
                );
            }
            None => {
                let recs =
                    bm_bound_monitor(&state.history.iter().cloned().collect::<Vec<_>>(), &spec)?;
                let min_margin = recs.iter().fold(f64::INFINITY, |m, r| m.min(r.min_margin));
                summary.insert(
                    "maxprinciple".into(),
                    serde_json::json!({
                        "pass": min_margin > 0.0,
                        "min_margin": min_margin.min(min_margin_seen),
                        "max_g": recs.iter().fold(f64::NEG_INFINITY, |m, r| m.max(r.max_g)),
                    }),
                );
            }
        }
    }
    let slices: Vec<Snapshot> = state.history.iter().cloned().collect();
    if want("ckn") && !cfg.diagnostics.ckn_centers.is_empty() {
        let centers: Vec<([f64; 3], f64)> = cfg
            .diagnostics
            .ckn_centers
            .iter()
            .map(|c| ([c[0], c[1], c[2]], c[3]))
            .collect();
        // In-run CKN works off the bounded history ring; a window the ring
        // cannot cover is recorded, not fatal (the offline diagnose pass
        // has the full snapshot trail).
        match singularity_scan(
            &slices,
            None,
            cfg.diagnostics.eps0,
            cfg.diagnostics.eps1,
            &centers,
            &cfg.diagnostics.ckn_radii,
        ) {
            Ok(entries) => {
                let mut csv = CsvWriter::create(
                    out_dir.join("ckn.csv"),
                    "cx,cy,cz,t,phi,b,flag_phi,flag_b,slope_phi",
                )?;
                for e in &entries {
                    csv.row(&[
                        fmt_f(e.center_x[0]),
                        fmt_f(e.center_x[1]),
                        fmt_f(e.center_x[2]),
                        fmt_f(e.center_t),
                        fmt_f(e.phi_smallest),
                        fmt_f(e.b_smallest),
                        e.flag_phi.to_string(),
                        e.flag_b.to_string(),
                        e.slope_phi.map(fmt_f).unwrap_or_else(|| "nan".into()),
                    ])?;
                }
                artifacts.push(csv.path.clone());
                summary.insert(
                    "ckn".into(),
                    serde_json::json!({
                        "pass": entries.iter().all(|e| !e.flagged()),
                        "flagged": entries.iter().filter(|e| e.flagged()).count(),
                    }),
                );
            }
            Err(e) => {
                summary.insert("ckn".into(), serde_json::json!({"error": e.to_string()}));
            }
        }
    }
    if want("lei") {
        if let (Some(center), Some(t_eval), Some(rx), Some(rt)) = (
            cfg.diagnostics.lei_center,
            cfg.diagnostics.lei_t_eval,
            cfg.diagnostics.lei_space_radius,
            cfg.diagnostics.lei_time_radius,
        ) {
            let lei = LeiSpec {
                center,
                t_eval,
                space_radius: rx,
                time_radius: rt,
            };
            match local_energy_residual(&slices, None, &spec, &lei) {
                Ok(rep) => {
                    let mut csv = CsvWriter::create(
                        out_dir.join("lei.csv"),
                        "lhs_terminal,lhs_dissipation,lhs,transport,pressure_flux,elastic_flux,elastic_hessian,stress_flux,corotation_bulk,rhs,residual",
                    )?;
                    let mut cells = vec![
                        fmt_f(rep.lhs_terminal),
                        fmt_f(rep.lhs_dissipation),
                        fmt_f(rep.lhs),
                    ];
                    cells.extend(rep.terms.iter().map(|(_, v)| fmt_f(*v)));
                    cells.push(fmt_f(rep.rhs));
                    cells.push(fmt_f(rep.residual));
                    csv.row(&cells)?;
                    artifacts.push(csv.path.clone());
                    summary.insert(
                        "lei".into(),
                        serde_json::json!({"residual": rep.residual, "lhs": rep.lhs, "rhs": rep.rhs}),
                    );
                }
                Err(e) => {
                    summary.insert("lei".into(), serde_json::json!({"error": e.to_string()}));
                }
            }
        }
    }
    if let Some(csv) = energy_csv.take() {
        artifacts.push(csv.path);
    }
    if let Some(csv) = maxp_csv.take() {
        artifacts.push(csv.path);
    }
    let summary_path = out_dir.join("summary.json");
    fs::write(
        &summary_path,
        serde_json::to_vec_pretty(&serde_json::Value::Object(summary)).unwrap(),
    )?;
    artifacts.push(summary_path);

    finish_manifest(&out_dir, &cfg, "completed", started, artifacts.iter())
}

fn write_meta(snap_path: &Path, cfg: &RunConfig) -> Result<(), RunError> {
    let meta_path = snap_path.with_extension("meta.json");
    let meta = serde_json::json!({
        "config": cfg,
        "seed": cfg.sim.seed,
    });
    fs::write(&meta_path, serde_json::to_vec_pretty(&meta).unwrap())?;
    Ok(())
}

fn finish_manifest<'a>(
    out_dir: &Path,
    cfg: &RunConfig,
    status: &str,
    started: f64,
    artifacts: impl Iterator<Item = &'a PathBuf>,
) -> Result<RunManifest, RunError> {
    let mut entries = Vec::new();
    for p in artifacts {
        if p.exists() {
            entries.push(ArtifactEntry {
                path: p
                    .strip_prefix(out_dir)
                    .unwrap_or(p)
                    .to_string_lossy()
                    .into_owned(),
                sha256: sha256_hex(p)?,
            });
        }
    }
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        status: status.to_string(),
        started_unix: started,
        finished_unix: now_unix(),
        resolved_config: cfg.clone(),
        artifacts: entries,
    };
    let tmp = out_dir.join("run_manifest.json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(&manifest).unwrap())?;
    fs::rename(tmp, out_dir.join("run_manifest.json"))?;
    Ok(manifest)
}

/// Recompute diagnostics offline from the snapshots persisted by a run.
/// Results land in `<run_dir>/diagnose` (or the override) and are identical
/// to the in-run values: same code paths over bit-exact fields.
pub fn cmd_diagnose(run_dir: &Path, output_override: Option<&Path>) -> Result<(), RunError> {
    let resolved = run_dir.join("resolved_config.toml");
    let cfg_text = fs::read_to_string(&resolved)
        .map_err(|_| RunError::Config(format!("missing {}", resolved.display())))?;
    let cfg = RunConfig::from_toml(&cfg_text).map_err(RunError::Config)?;
    let spec = cfg.potential.to_spec().map_err(RunError::Config)?;

    let mut snaps: Vec<(u64, PathBuf)> = Vec::new();
    for entry in fs::read_dir(run_dir)?.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name
            .strip_prefix("snap_")
            .and_then(|s| s.strip_suffix(".snap"))
        {
            if let Ok(step) = stem.parse::<u64>() {
                snaps.push((step, entry.path()));
            }
        }
    }
    snaps.sort_by_key(|(s, _)| *s);
    if snaps.is_empty() {
        return Err(RunError::Config(format!(
            "no snapshots found in {}",
            run_dir.display()
        )));
    }
    let out_dir = output_override
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| run_dir.join("diagnose"));
    fs::create_dir_all(&out_dir)?;

    let mut slices = Vec::with_capacity(snaps.len());
    for (_, p) in &snaps {
        let (t, _, u, q) = snapshot::read_state(p)?;
        slices.push(Snapshot { t, u, q });
    }

    let families = &cfg.diagnostics.families;
    let want = |f: &str| families.iter().any(|s| s == f);
    let mut summary = serde_json::Map::new();
    if want("energy") {
        let mut csv = CsvWriter::create(out_dir.join("energy.csv"), ENERGY_HEADER)?;
        let mut records = Vec::new();
        for s in &slices {
            let state = SimState::new(s.u.clone(), s.q.clone(), 2);
            let mut state = state;
            state.t = s.t;
            let rec = energy(&state, &spec)?;
            csv.row(&energy_row(&rec))?;
            records.push(rec);
        }
        if records.len() >= 2 {
            let report = energy_balance_residual(&records, 1e-9);
            summary.insert(
                "energy".into(),
                serde_json::json!({
                    "pass": report.increases == 0,
                    "max_residual": report.max_abs,
                    "increases": report.increases,
                }),
            );
        }
    }
    if want("maxprinciple") {
        let mut csv = CsvWriter::create(out_dir.join("maxprinciple.csv"), MAXP_HEADER)?;
        let bound = match &spec {
            s @ PotentialSpec::Ldg(_) => Some(max_principle_bound(s, &slices[0].q)?),
            PotentialSpec::Bm(_) => None,
        };
        for s in &slices {
            csv.row(&[
                fmt_f(s.t),
                fmt_f(s.q.max_norm()),
                fmt_f(bound.unwrap_or(f64::NAN)),
                fmt_f(s.q.min_margin()),
            ])?;
        }
    }
    if want("ckn") && !cfg.diagnostics.ckn_centers.is_empty() {
        let centers: Vec<([f64; 3], f64)> = cfg
            .diagnostics
            .ckn_centers
            .iter()
            .map(|c| ([c[0], c[1], c[2]], c[3]))
            .collect();
        let mut csv = CsvWriter::create(
            out_dir.join("ckn.csv"),
            "cx,cy,cz,t,phi,b,flag_phi,flag_b,slope_phi",
        )?;
        for (i, &(cx, ct)) in centers.iter().enumerate() {
            let report = diagnostics::ckn_quantities(
                &slices,
                None,
                cx,
                ct,
                &cfg.diagnostics.ckn_radii,
                cfg.diagnostics.eps0,
            )?;
            fs::write(
                out_dir.join(format!("ckn_center_{i}.json")),
                serde_json::to_vec_pretty(&report).unwrap(),
            )?;
            let last = report.radii.last().unwrap();
            csv.row(&[
                fmt_f(cx[0]),
                fmt_f(cx[1]),
                fmt_f(cx[2]),
                fmt_f(ct),
                fmt_f(last.phi),
                fmt_f(last.b_q),
                report.flagged.to_string(),
                (last.b_q > cfg.diagnostics.eps1 * cfg.diagnostics.eps1).to_string(),
                report.slope_phi.map(fmt_f).unwrap_or_else(|| "nan".into()),
            ])?;
        }
    }
    if want("lei") {
        if let (Some(center), Some(t_eval), Some(rx), Some(rt)) = (
            cfg.diagnostics.lei_center,
            cfg.diagnostics.lei_t_eval,
            cfg.diagnostics.lei_space_radius,
            cfg.diagnostics.lei_time_radius,
        ) {
            let lei = LeiSpec {
                center,
                t_eval,
                space_radius: rx,
                time_radius: rt,
            };
            let rep = local_energy_residual(&slices, None, &spec, &lei)?;
            fs::write(
                out_dir.join("lei.json"),
                serde_json::to_vec_pretty(&rep).unwrap(),
            )?;
            summary.insert("lei".into(), serde_json::json!({"residual": rep.residual}));
        }
    }
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_vec_pretty(&serde_json::Value::Object(summary)).unwrap(),
    )?;
    Ok(())
}

/// Tabulate the potential over an eigenvalue grid into a CSV.
pub fn cmd_potential_table(
    spec: &PotentialSpec,
    samples: usize,
    m_sweep: &[f64],
    out: &Path,
) -> Result<(), RunError> {
    let rows = crate::potential::tabulate(spec, samples, 1e-3, m_sweep)
        .map_err(|e| RunError::Config(e.to_string()))?;
    let mut header = "l1,l2,margin,value,grad_norm,iterations,error".to_string();
    for m in m_sweep {
        header.push_str(&format!(",gap_m_{m}"));
    }
    let mut csv = CsvWriter::create(out.to_path_buf(), &header)?;
    for row in &rows {
        let mut cells = vec![
            fmt_f(row.l1),
            fmt_f(row.l2),
            fmt_f(row.margin),
            row.value.map(fmt_f).unwrap_or_else(|| "nan".into()),
            row.grad_norm.map(fmt_f).unwrap_or_else(|| "nan".into()),
            row.iterations.to_string(),
            row.error.clone().unwrap_or_default(),
        ];
        for m in m_sweep {
            let gap = row
                .m_sweep
                .iter()
                .find(|(mm, _)| mm == m)
                .map(|(_, g)| fmt_f(*g))
                .unwrap_or_else(|| "nan".into());
            cells.push(gap);
        }
        csv.row(&cells)?;
    }
    Ok(())
}
