//! Binary checkpoints of a run.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic    8 bytes  "BLKSTCK\0"
//! version  u32
//! dim      u32
//! modes    dim × u64
//! extents  dim × f64
//! time     f64
//! dt       f64
//! steps    u64      steps taken by the stepper
//! history  u8       1 when a previous source follows the state
//! psi      len × f64
//! v        len × f64
//! source   len × f64 (only when history = 1)
//! ```

use std::path::Path;

use blackstock::{Grid, SimState, SpectralField};

use crate::CliError;

pub const MAGIC: &[u8; 8] = b"BLKSTCK\0";
pub const VERSION: u32 = 1;

/// Everything needed to continue a run bit-for-bit.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub state: SimState,
    /// Source at the previous step (second-order extrapolation history).
    pub history: Option<SpectralField>,
    pub steps_taken: usize,
    pub dt: f64,
}

fn put_f64s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for x in values {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let grid = self.state.grid();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
        for n in grid.modes() {
            out.extend_from_slice(&(n as u64).to_le_bytes());
        }
        put_f64s(&mut out, grid.extents());
        put_f64s(&mut out, [self.state.time, self.dt]);
        out.extend_from_slice(&(self.steps_taken as u64).to_le_bytes());
        out.push(self.history.is_some() as u8);
        put_f64s(&mut out, self.state.psi.coeffs().iter().copied());
        put_f64s(&mut out, self.state.v.coeffs().iter().copied());
        if let Some(h) = &self.history {
            put_f64s(&mut out, h.coeffs().iter().copied());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CliError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(CliError::Checkpoint("not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CliError::Checkpoint(format!(
                "unsupported version {version}"
            )));
        }
        let dim = r.u32()? as usize;
        if !(1..=3).contains(&dim) {
            return Err(CliError::Checkpoint(format!("bad dimension {dim}")));
        }
        let modes = (0..dim)
            .map(|_| r.u64().map(|n| n as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let extents = (0..dim).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        let grid = Grid::new(extents, modes).map_err(|e| CliError::Checkpoint(e.to_string()))?;
        let time = r.f64()?;
        let dt = r.f64()?;
        let steps_taken = r.u64()? as usize;
        let has_history = r.take(1)?[0] == 1;
        let psi = r.field(&grid)?;
        let v = r.field(&grid)?;
        let history = if has_history {
            Some(r.field(&grid)?)
        } else {
            None
        };
        if r.pos != bytes.len() {
            return Err(CliError::Checkpoint("trailing bytes".into()));
        }
        let state = SimState::new(psi, v, time).map_err(|e| CliError::Checkpoint(e.to_string()))?;
        Ok(Checkpoint {
            state,
            history,
            steps_taken,
            dt,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.encode()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Checkpoint::decode(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CliError> {
        let end = self.pos + n;
        let out = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| CliError::Checkpoint("truncated checkpoint".into()))?;
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, CliError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, CliError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64, CliError> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn field(&mut self, grid: &Grid) -> Result<SpectralField, CliError> {
        let values = (0..grid.len())
            .map(|_| self.f64())
            .collect::<Result<Vec<_>, _>>()?;
        SpectralField::from_vec(grid, values).map_err(|e| CliError::Checkpoint(e.to_string()))
    }
}
