//! Binary checkpoints of the two-level solver state.
//!
//! Layout (all little-endian): 8-byte magic `MRSAVGFD`, `u32` version,
//! `u32` dimension, one `u32` point count per axis, one `f64` length per
//! axis, `f64` t, k, gamma, q^n, q^{n-1}, `u64` step n, then the
//! coefficients of omega^n and omega^{n-1} as interleaved `f64` (re, im)
//! pairs. Coefficients are ordered row-major (x slowest) over signed
//! indices `-N/2 .. N/2-1` on each axis.
//!
//! Model and forcing descriptors are not part of the binary format; runs
//! write the resolved configuration next to their checkpoints.

use crate::error::{HarnessError, Result};
use mrsav_core::{FieldRole, Grid, SpectralField, TwoLevelState};
use num_complex::Complex64;
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"MRSAVGFD";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub grid: Grid,
    pub time: f64,
    pub dt: f64,
    pub gamma: f64,
    pub state: TwoLevelState,
}

/// Storage positions in signed-index order.
fn signed_order(grid: &Grid) -> Vec<(usize, usize, usize)> {
    let axis = |a: usize| -> Vec<usize> {
        if a >= grid.dim() {
            return vec![0];
        }
        let n = grid.modes()[a] as i64;
        (-n / 2..n / 2)
            .map(|s| grid.storage_index(a, s).expect("index in range"))
            .collect()
    };
    let (xs, ys, zs) = (axis(0), axis(1), axis(2));
    let mut out = Vec::with_capacity(grid.len());
    for &i in &xs {
        for &j in &ys {
            for &l in &zs {
                out.push((i, j, l));
            }
        }
    }
    out
}

pub fn encode(cp: &Checkpoint) -> Vec<u8> {
    let g = &cp.grid;
    let mut out = Vec::with_capacity(64 + 32 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dim() as u32).to_le_bytes());
    for &n in &g.modes()[..g.dim()] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &l in &g.lengths()[..g.dim()] {
        out.extend_from_slice(&l.to_le_bytes());
    }
    for v in [cp.time, cp.dt, cp.gamma, cp.state.q, cp.state.q_prev] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&cp.state.step.to_le_bytes());
    let order = signed_order(g);
    for field in [&cp.state.omega, &cp.state.omega_prev] {
        let c = field.coeffs();
        for &pos in &order {
            out.extend_from_slice(&c[pos].re.to_le_bytes());
            out.extend_from_slice(&c[pos].im.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.offset + n;
        if end > self.bytes.len() {
            return Err(HarnessError::format(
                self.path,
                format!(
                    "truncated checkpoint: {what} needs bytes {}..{end} but the file has {}",
                    self.offset,
                    self.bytes.len()
                ),
            ));
        }
        let s = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let mut r = Reader {
        bytes,
        offset: 0,
        path,
    };
    if r.take(8, "magic")? != MAGIC {
        return Err(HarnessError::format(path, "not a checkpoint file (bad magic)"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(HarnessError::format(
            path,
            format!("unsupported checkpoint version {version} (expected {VERSION})"),
        ));
    }
    let dim = r.u32("dimension")? as usize;
    if !(dim == 2 || dim == 3) {
        return Err(HarnessError::format(path, format!("corrupt header: dimension {dim}")));
    }
    let mut modes = Vec::with_capacity(dim);
    for _ in 0..dim {
        modes.push(r.u32("grid size")? as usize);
    }
    let mut lengths = Vec::with_capacity(dim);
    for _ in 0..dim {
        lengths.push(r.f64("box length")?);
    }
    let grid = Grid::new(&lengths, &modes)
        .map_err(|e| HarnessError::format(path, format!("corrupt header: {e}")))?;
    let time = r.f64("time")?;
    let dt = r.f64("time step")?;
    let gamma = r.f64("gamma")?;
    let q = r.f64("q^n")?;
    let q_prev = r.f64("q^{n-1}")?;
    let step = r.u64("step")?;
    let order = signed_order(&grid);
    let mut read_field = |what: &str| -> Result<SpectralField> {
        let raw = r.take(16 * grid.len(), what)?;
        let mut f = SpectralField::zeros(grid, FieldRole::Vorticity);
        let c = f.coeffs_mut();
        for (pair, &pos) in raw.chunks_exact(16).zip(&order) {
            let re = f64::from_le_bytes(pair[..8].try_into().unwrap());
            let im = f64::from_le_bytes(pair[8..].try_into().unwrap());
            c[pos] = Complex64::new(re, im);
        }
        Ok(f)
    };
    let omega = read_field("omega^n")?;
    let omega_prev = read_field("omega^{n-1}")?;
    if r.offset != bytes.len() {
        return Err(HarnessError::format(
            path,
            format!("{} unexpected trailing bytes", bytes.len() - r.offset),
        ));
    }
    Ok(Checkpoint {
        grid,
        time,
        dt,
        gamma,
        state: TwoLevelState {
            omega,
            omega_prev,
            q,
            q_prev,
            step,
        },
    })
}

pub fn write_checkpoint(path: &Path, cp: &Checkpoint) -> Result<()> {
    // write-then-rename so a crash never leaves a half-written checkpoint
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, encode(cp)).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    decode(&bytes, path)
}

/// Reads a checkpoint and checks it was written on `grid`.
pub fn read_checkpoint_for(path: &Path, grid: &Grid) -> Result<Checkpoint> {
    let cp = read_checkpoint(path)?;
    if cp.grid != *grid {
        return Err(HarnessError::format(
            path,
            format!(
                "shape mismatch: checkpoint grid {:?} over {:?}, configured {:?} over {:?}",
                &cp.grid.modes()[..cp.grid.dim()],
                &cp.grid.lengths()[..cp.grid.dim()],
                &grid.modes()[..grid.dim()],
                &grid.lengths()[..grid.dim()]
            ),
        ));
    }
    Ok(cp)
}
