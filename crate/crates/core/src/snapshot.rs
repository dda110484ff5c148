//! Field snapshot and checkpoint persistence.
//!
//! Snapshot file layout (all integers and floats little-endian):
//!
//! ```text
//! magic   7 bytes  "BESNAP1"
//! endian  u32      0x01020304 (byte-order witness)
//! dim     u32
//! n       u32      points per axis
//! time    f64
//! step    u64
//! nfields u32
//! per field: name_len u16, name bytes (utf-8)
//! per field: n^dim f64, row-major
//! ```
//!
//! A sidecar `<name>.meta.json` records the resolved run configuration next
//! to each snapshot. Checkpoints are a directory with the current state,
//! the history ring, and (for the entropy potential) the per-point dual
//! warm starts, so a restart replays the trajectory bit-identically under
//! the first-order scheme.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::field::{QTensorField, ScalarField, VelocityField};
use crate::solver::{SimState, Snapshot};
use crate::spectral::SpectralGrid;

pub const MAGIC: &[u8; 7] = b"BESNAP1";
const ENDIAN_WITNESS: u32 = 0x0102_0304;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("corrupt snapshot {path}: bad {field}")]
    Corrupt { path: PathBuf, field: &'static str },
    #[error(transparent)]
    Grid(#[from] crate::spectral::GridError),
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> SnapshotError + '_ {
    move |source| SnapshotError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub struct SnapshotHeader {
    pub dim: usize,
    pub n: usize,
    pub time: f64,
    pub step: u64,
    pub fields: Vec<String>,
}

/// Write fields under the given names; all must share the grid.
pub fn write_fields(
    path: &Path,
    grid: &SpectralGrid,
    time: f64,
    step: u64,
    fields: &[(&str, &[f64])],
) -> Result<(), SnapshotError> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    let werr = io_err(path);
    w.write_all(MAGIC).map_err(&werr)?;
    w.write_all(&ENDIAN_WITNESS.to_le_bytes()).map_err(&werr)?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())
        .map_err(&werr)?;
    w.write_all(&(grid.n() as u32).to_le_bytes())
        .map_err(&werr)?;
    w.write_all(&time.to_le_bytes()).map_err(&werr)?;
    w.write_all(&step.to_le_bytes()).map_err(&werr)?;
    w.write_all(&(fields.len() as u32).to_le_bytes())
        .map_err(&werr)?;
    for (name, _) in fields {
        let bytes = name.as_bytes();
        w.write_all(&(bytes.len() as u16).to_le_bytes())
            .map_err(&werr)?;
        w.write_all(bytes).map_err(&werr)?;
    }
    for (_, data) in fields {
        assert_eq!(data.len(), grid.len());
        for v in *data {
            w.write_all(&v.to_le_bytes()).map_err(&werr)?;
        }
    }
    w.flush().map_err(&werr)
}

/// Read a snapshot back; header validation failures name the broken field.
pub fn read_fields(path: &Path) -> Result<(SnapshotHeader, Vec<Vec<f64>>), SnapshotError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut r = BufReader::new(f);
    let rerr = io_err(path);
    let corrupt = |field: &'static str| SnapshotError::Corrupt {
        path: path.to_path_buf(),
        field,
    };
    let mut magic = [0u8; 7];
    r.read_exact(&mut magic).map_err(&rerr)?;
    if &magic != MAGIC {
        return Err(corrupt("magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4).map_err(&rerr)?;
    if u32::from_le_bytes(b4) != ENDIAN_WITNESS {
        return Err(corrupt("endianness marker"));
    }
    r.read_exact(&mut b4).map_err(&rerr)?;
    let dim = u32::from_le_bytes(b4) as usize;
    if dim != 2 && dim != 3 {
        return Err(corrupt("dim"));
    }
    r.read_exact(&mut b4).map_err(&rerr)?;
    let n = u32::from_le_bytes(b4) as usize;
    if n < 8 || n % 2 != 0 {
        return Err(corrupt("n"));
    }
    r.read_exact(&mut b8).map_err(&rerr)?;
    let time = f64::from_le_bytes(b8);
    if !time.is_finite() {
        return Err(corrupt("time"));
    }
    r.read_exact(&mut b8).map_err(&rerr)?;
    let step = u64::from_le_bytes(b8);
    r.read_exact(&mut b4).map_err(&rerr)?;
    let nfields = u32::from_le_bytes(b4) as usize;
    if nfields == 0 || nfields > 64 {
        return Err(corrupt("field count"));
    }
    let mut fields = Vec::with_capacity(nfields);
    for _ in 0..nfields {
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2).map_err(&rerr)?;
        let len = u16::from_le_bytes(b2) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(&rerr)?;
        fields.push(String::from_utf8(name).map_err(|_| corrupt("field name"))?);
    }
    let len = n.pow(dim as u32);
    let mut data = Vec::with_capacity(nfields);
    for _ in 0..nfields {
        let mut buf = vec![0u8; len * 8];
        r.read_exact(&mut buf)
            .map_err(|_| corrupt("field data length"))?;
        let vals: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        data.push(vals);
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(&rerr)? != 0 {
        return Err(corrupt("trailing bytes"));
    }
    Ok((
        SnapshotHeader {
            dim,
            n,
            time,
            step,
            fields,
        },
        data,
    ))
}

fn state_field_names(dim: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..dim).map(|a| format!("u{a}")).collect();
    names.extend((0..5).map(|c| format!("q{c}")));
    names
}

/// Write the (u, Q) pair of a state snapshot.
pub fn write_state(
    path: &Path,
    t: f64,
    step: u64,
    u: &VelocityField,
    q: &QTensorField,
) -> Result<(), SnapshotError> {
    let grid = u.grid().clone();
    let names = state_field_names(grid.dim());
    let mut fields: Vec<(&str, &[f64])> = Vec::new();
    for (a, c) in u.comps.iter().enumerate() {
        fields.push((names[a].as_str(), &c.data));
    }
    for (c, comp) in q.comps.iter().enumerate() {
        fields.push((names[grid.dim() + c].as_str(), &comp.data));
    }
    write_fields(path, &grid, t, step, &fields)
}

/// Read a state snapshot, reconstructing the grid from the header.
pub fn read_state(path: &Path) -> Result<(f64, u64, VelocityField, QTensorField), SnapshotError> {
    let (header, data) = read_fields(path)?;
    let expect = state_field_names(header.dim);
    if header.fields != expect {
        return Err(SnapshotError::Corrupt {
            path: path.to_path_buf(),
            field: "field list",
        });
    }
    let grid = SpectralGrid::new(header.dim, header.n)?;
    let to_scalar = |data: &Vec<f64>| -> ScalarField {
        let mut f = ScalarField::zeros(&grid);
        f.data.copy_from_slice(data);
        f
    };
    let mut u = VelocityField::zeros(&grid);
    for a in 0..header.dim {
        u.comps[a] = to_scalar(&data[a]);
    }
    let mut q = QTensorField::zeros(&grid);
    for c in 0..5 {
        q.comps[c] = to_scalar(&data[header.dim + c]);
    }
    Ok((header.time, header.step, u, q))
}

/// Serialize a full checkpoint: current state, history ring, dual cache.
pub fn write_checkpoint(
    dir: &Path,
    state: &SimState,
    warm: Option<&Vec<[f64; 5]>>,
) -> Result<(), SnapshotError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_state(
        &dir.join("state.snap"),
        state.t,
        state.step,
        &state.u,
        &state.q,
    )?;
    for old in fs::read_dir(dir).map_err(io_err(dir))?.flatten() {
        let name = old.file_name().to_string_lossy().into_owned();
        if name.starts_with("hist_") {
            fs::remove_file(old.path()).map_err(io_err(dir))?;
        }
    }
    for (i, snap) in state.history.iter().enumerate() {
        let p = dir.join(format!("hist_{i:05}.snap"));
        write_state(&p, snap.t, state.step, &snap.u, &snap.q)?;
    }
    if let Some(w) = warm {
        let grid = state.q.grid().clone();
        let mut comps: Vec<Vec<f64>> = (0..5).map(|_| vec![0.0; grid.len()]).collect();
        for (idx, duals) in w.iter().enumerate() {
            for c in 0..5 {
                comps[c][idx] = duals[c];
            }
        }
        let named: Vec<(String, &[f64])> = (0..5)
            .map(|c| (format!("w{c}"), comps[c].as_slice()))
            .collect();
        let borrowed: Vec<(&str, &[f64])> = named.iter().map(|(n, d)| (n.as_str(), *d)).collect();
        write_fields(
            &dir.join("warm.snap"),
            &grid,
            state.t,
            state.step,
            &borrowed,
        )?;
    }
    let meta = serde_json::json!({
        "t": state.t,
        "step": state.step,
        "history_len": state.history.len(),
        "history_depth": state.history_depth,
        "has_warm": warm.is_some(),
    });
    let tmp = dir.join("checkpoint.json.tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(&meta).unwrap()).map_err(io_err(&tmp))?;
    fs::rename(&tmp, dir.join("checkpoint.json")).map_err(io_err(dir))?;
    Ok(())
}

/// Restore a checkpoint written by [`write_checkpoint`].
#[allow(clippy::type_complexity)]
pub fn read_checkpoint(dir: &Path) -> Result<(SimState, Option<Vec<[f64; 5]>>), SnapshotError> {
    let meta_path = dir.join("checkpoint.json");
    let meta: serde_json::Value = serde_json::from_slice(
        &fs::read(&meta_path).map_err(io_err(&meta_path))?,
    )
    .map_err(|_| SnapshotError::Corrupt {
        path: meta_path.clone(),
        field: "checkpoint metadata",
    })?;
    let (t, step, u, q) = read_state(&dir.join("state.snap"))?;
    let history_len = meta["history_len"].as_u64().unwrap_or(0) as usize;
    let history_depth = meta["history_depth"].as_u64().unwrap_or(2) as usize;
    let mut history = std::collections::VecDeque::new();
    for i in 0..history_len {
        let p = dir.join(format!("hist_{i:05}.snap"));
        let (ht, _, hu, hq) = read_state(&p)?;
        history.push_back(Snapshot {
            t: ht,
            u: hu,
            q: hq,
        });
    }
    let mut state = SimState::new(u, q, history_depth);
    state.t = t;
    state.step = step;
    state.history = history;
    let warm = if meta["has_warm"].as_bool().unwrap_or(false) {
        let (_, data) = read_fields(&dir.join("warm.snap"))?;
        let len = data[0].len();
        let mut w = vec![[0.0; 5]; len];
        for (idx, duals) in w.iter_mut().enumerate() {
            for c in 0..5 {
                duals[c] = data[c][idx];
            }
        }
        Some(w)
    } else {
        None
    };
    Ok((state, warm))
}

/// Grid reconstruction helper shared by offline diagnostics.
pub fn grid_of_header(header: &SnapshotHeader) -> Result<Arc<SpectralGrid>, SnapshotError> {
    Ok(SpectralGrid::new(header.dim, header.n)?)
}
