//! Sampled full fields kept for diagnostics, spilling to disk past a memory cap.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::operators::Field;

enum Slot {
    Memory(Vec<Complex64>),
    Disk(PathBuf),
}

pub struct FieldStore {
    cap_bytes: usize,
    used_bytes: usize,
    spill_dir: Option<PathBuf>,
    owned_dir: Option<PathBuf>,
    grid: Option<Arc<Grid>>,
    times: Vec<f64>,
    slots: Vec<Slot>,
}

impl std::fmt::Debug for FieldStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldStore")
            .field("len", &self.times.len())
            .field("used_bytes", &self.used_bytes)
            .field("spilled", &self.spilled())
            .finish()
    }
}

static STORE_ID: AtomicU64 = AtomicU64::new(0);

impl FieldStore {
    /// `spill_dir` receives fields beyond `cap_bytes`; without one, a private
    /// directory under the system temp dir is created on first spill.
    pub fn new(cap_bytes: usize, spill_dir: Option<PathBuf>) -> Self {
        Self {
            cap_bytes,
            used_bytes: 0,
            spill_dir,
            owned_dir: None,
            grid: None,
            times: Vec::new(),
            slots: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn spilled(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, Slot::Disk(_))).count()
    }

    fn spill_path(&mut self, index: usize) -> Result<PathBuf> {
        let dir = match (&self.spill_dir, &self.owned_dir) {
            (Some(d), _) => d.clone(),
            (None, Some(d)) => d.clone(),
            (None, None) => {
                let id = STORE_ID.fetch_add(1, Ordering::Relaxed);
                let d = std::env::temp_dir().join(format!("bihnls-fields-{}-{id}", std::process::id()));
                self.owned_dir = Some(d.clone());
                d
            }
        };
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir.join(format!("field-{index:06}.bin")))
    }

    pub fn push(&mut self, t: f64, u: &Field) -> Result<()> {
        match &self.grid {
            None => self.grid = Some(Arc::clone(&u.grid)),
            Some(g) if !g.same_as(&u.grid) => {
                return Err(Error::GridMismatch(format!(
                    "field store holds {} but got {}",
                    g.fingerprint(),
                    u.grid.fingerprint()
                )))
            }
            _ => {}
        }
        let bytes = u.values.len() * std::mem::size_of::<Complex64>();
        let slot = if self.used_bytes + bytes <= self.cap_bytes {
            self.used_bytes += bytes;
            Slot::Memory(u.values.clone())
        } else {
            let path = self.spill_path(self.slots.len())?;
            let mut buf = Vec::with_capacity(bytes);
            for c in &u.values {
                buf.extend_from_slice(&c.re.to_le_bytes());
                buf.extend_from_slice(&c.im.to_le_bytes());
            }
            std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
            Slot::Disk(path)
        };
        self.times.push(t);
        self.slots.push(slot);
        Ok(())
    }

    pub fn get(&self, i: usize) -> Result<Field> {
        let grid = self
            .grid
            .as_ref()
            .filter(|_| i < self.slots.len())
            .ok_or_else(|| Error::Diagnostics(format!("no stored field at index {i}")))?;
        let values = match &self.slots[i] {
            Slot::Memory(v) => v.clone(),
            Slot::Disk(path) => {
                let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                if buf.len() != grid.len() * 16 {
                    return Err(Error::CheckpointTruncated {
                        path: path.clone(),
                        found: buf.len(),
                        expected: grid.len() * 16,
                    });
                }
                buf.chunks_exact(16)
                    .map(|c| {
                        Complex64::new(
                            f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                            f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
                        )
                    })
                    .collect()
            }
        };
        Field::from_values(grid, values)
    }
}

impl Drop for FieldStore {
    fn drop(&mut self) {
        for s in &self.slots {
            if let Slot::Disk(p) = s {
                let _ = std::fs::remove_file(p);
            }
        }
        if let Some(d) = &self.owned_dir {
            let _ = std::fs::remove_dir(d);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    #[test]
    fn spills_past_cap_and_restores_exactly() {
        let g = build_grid(4, 4.0, 16, 4.0, 16).unwrap();
        let bytes = g.len() * 16;
        let dir = tempfile::tempdir().unwrap();
        let mut store = FieldStore::new(bytes, Some(dir.path().to_path_buf()));
        let fields: Vec<Field> = (0..3)
            .map(|i| Field::from_fn(&g, |r, z| Complex64::new(r + i as f64, z * 0.1)))
            .collect();
        for (i, f) in fields.iter().enumerate() {
            store.push(i as f64, f).unwrap();
        }
        assert_eq!(store.len(), 3);
        assert_eq!(store.spilled(), 2);
        for (i, f) in fields.iter().enumerate() {
            assert_eq!(store.get(i).unwrap().values, f.values);
        }
        assert!(store.get(3).is_err());
    }
}
