//! Binary checkpoints.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic      8 bytes  "BIHNLSCK"
//! version    u32
//! d, n_r, n_z                      u32 x3
//! r_max, z_max, t, dt, mu, sigma   f64 x6
//! kappa      f64
//! step       u64
//! calm       u32   (adaptive-dt streak)
//! reserved   u32
//! mass0, energy0, lap_sq0          f64 x3
//! header_crc u32   (CRC-32 of everything above)
//! payload    n_r * n_z pairs of f64 (re, im), r outer, z inner
//! payload_crc u32
//! ```

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Physics, SimState, Status};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, Grid};
use crate::operators::Field;

pub const MAGIC: &[u8; 8] = b"BIHNLSCK";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 12 + 48 + 8 + 8 + 8 + 24;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub d: u32,
    pub n_r: u32,
    pub n_z: u32,
    pub r_max: f64,
    pub z_max: f64,
    pub t: f64,
    pub dt: f64,
    pub mu: f64,
    pub sigma: f64,
    pub kappa: f64,
    pub step: u64,
    pub calm_streak: u32,
    pub mass0: f64,
    pub energy0: f64,
    pub lap_sq0: f64,
    pub values: Vec<Complex64>,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out: [u8; N] = self.buf[self.pos..self.pos + N].try_into().expect("length checked");
        self.pos += N;
        out
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take())
    }
}

impl Checkpoint {
    pub fn from_state(state: &SimState, physics: &Physics) -> Self {
        let g = &state.field.grid;
        Self {
            d: g.d,
            n_r: g.n_r as u32,
            n_z: g.n_z as u32,
            r_max: g.r_max,
            z_max: g.z_max,
            t: state.t,
            dt: state.dt,
            mu: physics.mu,
            sigma: physics.sigma,
            kappa: physics.kappa,
            step: state.step,
            calm_streak: state.calm_streak,
            mass0: state.mass0,
            energy0: state.energy0,
            lap_sq0: state.lap_sq0,
            values: state.field.values.clone(),
        }
    }

    pub fn physics(&self) -> Physics {
        Physics {
            sigma: self.sigma,
            mu: self.mu,
            kappa: self.kappa,
        }
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        build_grid(self.d, self.r_max, self.n_r as usize, self.z_max, self.n_z as usize)
    }

    /// Restore a running state on `grid`, which must match the stored geometry.
    pub fn into_state(self, grid: &Arc<Grid>) -> Result<SimState> {
        if grid.d != self.d
            || grid.n_r != self.n_r as usize
            || grid.n_z != self.n_z as usize
            || grid.r_max != self.r_max
            || grid.z_max != self.z_max
        {
            return Err(Error::GridMismatch(format!(
                "checkpoint grid d{} {}x{} does not match {}",
                self.d,
                self.n_r,
                self.n_z,
                grid.fingerprint()
            )));
        }
        let field = Field::from_values(grid, self.values)?;
        Ok(SimState {
            field,
            t: self.t,
            dt: self.dt,
            step: self.step,
            calm_streak: self.calm_streak,
            mass0: self.mass0,
            energy0: self.energy0,
            lap_sq0: self.lap_sq0,
            snapshots: Default::default(),
            status: Status::Running,
            trigger: None,
            message: None,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(HEADER_LEN + 4 + self.values.len() * 16 + 4);
        b.extend_from_slice(MAGIC);
        b.extend_from_slice(&VERSION.to_le_bytes());
        for v in [self.d, self.n_r, self.n_z] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        for v in [self.r_max, self.z_max, self.t, self.dt, self.mu, self.sigma, self.kappa] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b.extend_from_slice(&self.step.to_le_bytes());
        b.extend_from_slice(&self.calm_streak.to_le_bytes());
        b.extend_from_slice(&0u32.to_le_bytes());
        for v in [self.mass0, self.energy0, self.lap_sq0] {
            b.extend_from_slice(&v.to_le_bytes());
        }
        debug_assert_eq!(b.len(), HEADER_LEN);
        let crc = crc32fast::hash(&b);
        b.extend_from_slice(&crc.to_le_bytes());
        let start = b.len();
        for c in &self.values {
            b.extend_from_slice(&c.re.to_le_bytes());
            b.extend_from_slice(&c.im.to_le_bytes());
        }
        let crc = crc32fast::hash(&b[start..]);
        b.extend_from_slice(&crc.to_le_bytes());
        b
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let truncated = |expected: usize| Error::CheckpointTruncated {
            path: path.to_path_buf(),
            found: bytes.len(),
            expected,
        };
        if bytes.len() < 8 {
            return Err(truncated(HEADER_LEN + 4));
        }
        if &bytes[..8] != MAGIC {
            return Err(Error::CheckpointMagic { path: path.to_path_buf() });
        }
        if bytes.len() < HEADER_LEN + 4 {
            return Err(truncated(HEADER_LEN + 4));
        }
        let stored = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().expect("4 bytes"));
        if crc32fast::hash(&bytes[..HEADER_LEN]) != stored {
            return Err(Error::CheckpointChecksum {
                path: path.to_path_buf(),
                section: "header",
            });
        }
        let mut r = Reader { buf: bytes, pos: 8 };
        let version = r.u32();
        if version != VERSION {
            return Err(Error::CheckpointVersion {
                path: path.to_path_buf(),
                found: version,
                expected: VERSION,
            });
        }
        let (d, n_r, n_z) = (r.u32(), r.u32(), r.u32());
        let (r_max, z_max, t, dt, mu, sigma, kappa) = (r.f64(), r.f64(), r.f64(), r.f64(), r.f64(), r.f64(), r.f64());
        let step = r.u64();
        let calm_streak = r.u32();
        let _reserved = r.u32();
        let (mass0, energy0, lap_sq0) = (r.f64(), r.f64(), r.f64());

        let count = n_r as usize * n_z as usize;
        let start = HEADER_LEN + 4;
        let expected = start + count * 16 + 4;
        if bytes.len() != expected {
            return Err(truncated(expected));
        }
        let payload = &bytes[start..start + count * 16];
        let stored = u32::from_le_bytes(bytes[expected - 4..].try_into().expect("4 bytes"));
        if crc32fast::hash(payload) != stored {
            return Err(Error::CheckpointChecksum {
                path: path.to_path_buf(),
                section: "payload",
            });
        }
        let values = payload
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                    f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                )
            })
            .collect();
        Ok(Self {
            d,
            n_r,
            n_z,
            r_max,
            z_max,
            t,
            dt,
            mu,
            sigma,
            kappa,
            step,
            calm_streak,
            mass0,
            energy0,
            lap_sq0,
            values,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        // Write-then-rename so a crash never leaves a half-written checkpoint.
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

/// Load a checkpoint and rebuild its field on a freshly built grid.
pub fn checkpoint_roundtrip(path: &Path) -> Result<Field> {
    let ck = Checkpoint::load(path)?;
    let grid = ck.grid()?;
    Field::from_values(&grid, ck.values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            d: 4,
            n_r: 2,
            n_z: 3,
            r_max: 8.0,
            z_max: 4.0,
            t: 0.25,
            dt: 1e-3,
            mu: 0.5,
            sigma: 1.0,
            kappa: 1.0,
            step: 250,
            calm_streak: 7,
            mass0: 9.87,
            energy0: -1.5,
            lap_sq0: 3.0,
            values: (0..6).map(|i| Complex64::new(i as f64 * 0.1, -(i as f64) / 3.0)).collect(),
        }
    }

    #[test]
    fn roundtrip_bytes() {
        let c = sample();
        let b = c.to_bytes();
        let back = Checkpoint::from_bytes(&b, Path::new("mem")).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes(), b);
    }

    #[test]
    fn corrupted_header_is_checksum_error() {
        let mut b = sample().to_bytes();
        b[40] ^= 0x01;
        assert!(matches!(
            Checkpoint::from_bytes(&b, Path::new("mem")),
            Err(Error::CheckpointChecksum { section: "header", .. })
        ));
    }

    #[test]
    fn corrupted_payload_is_checksum_error() {
        let mut b = sample().to_bytes();
        let n = b.len();
        b[n - 10] ^= 0x80;
        assert!(matches!(
            Checkpoint::from_bytes(&b, Path::new("mem")),
            Err(Error::CheckpointChecksum { section: "payload", .. })
        ));
    }

    #[test]
    fn truncation_and_version_and_magic() {
        let b = sample().to_bytes();
        assert!(matches!(
            Checkpoint::from_bytes(&b[..b.len() - 3], Path::new("mem")),
            Err(Error::CheckpointTruncated { .. })
        ));
        let mut v = b.clone();
        v[8..12].copy_from_slice(&2u32.to_le_bytes());
        let crc = crc32fast::hash(&v[..HEADER_LEN]);
        v[HEADER_LEN..HEADER_LEN + 4].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(
            Checkpoint::from_bytes(&v, Path::new("mem")),
            Err(Error::CheckpointVersion { found: 2, .. })
        ));
        let mut m = b;
        m[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&m, Path::new("mem")), Err(Error::CheckpointMagic { .. })));
    }
}
