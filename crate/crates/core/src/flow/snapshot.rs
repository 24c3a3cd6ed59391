//! Ensemble snapshots.
//!
//! Binary layout, all little-endian:
//!
//! ```text
//! "KFLO"  magic (4 bytes)
//! u32     format version
//! u64     N
//! f64     t
//! f64     weight
//! N x 5 f64: x1, x2, v1, v2, L
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ensemble::{ParticleEnsemble, PhasePoint};
use crate::{KinflowError, Result, Vec2};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"KFLO";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub n: u64,
    pub t: f64,
    pub weight: f64,
    /// `[x1, x2, v1, v2, L]` per particle.
    pub particles: Vec<[f64; 5]>,
}

impl Snapshot {
    pub fn from_ensemble(e: &ParticleEnsemble) -> Self {
        let particles = e
            .points()
            .iter()
            .zip(e.log_jacobian())
            .map(|(p, &l)| [p.x.x, p.x.y, p.v.x, p.v.y, l])
            .collect();
        Snapshot {
            version: SNAPSHOT_VERSION,
            n: e.len() as u64,
            t: e.time(),
            weight: e.weight(),
            particles,
        }
    }

    pub fn to_ensemble(&self) -> Result<ParticleEnsemble> {
        let points = self
            .particles
            .iter()
            .map(|r| PhasePoint::new(Vec2::new(r[0], r[1]), Vec2::new(r[2], r[3])))
            .collect();
        let logj = self.particles.iter().map(|r| r[4]).collect();
        ParticleEnsemble::from_parts(points, logj, self.weight, self.t)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&self.version.to_le_bytes())?;
        w.write_all(&self.n.to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        w.write_all(&self.weight.to_le_bytes())?;
        for row in &self.particles {
            for v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(KinflowError::Format(format!("bad magic {magic:?}")));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != SNAPSHOT_VERSION {
            return Err(KinflowError::Format(format!("unsupported version {version}")));
        }
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8);
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut b8)?;
            Ok(f64::from_le_bytes(b8))
        };
        let t = read_f64(&mut r)?;
        let weight = read_f64(&mut r)?;
        let mut particles = Vec::with_capacity(n.min(1 << 24) as usize);
        for _ in 0..n {
            let mut row = [0.0; 5];
            for v in row.iter_mut() {
                *v = read_f64(&mut r)?;
            }
            particles.push(row);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(KinflowError::Format("trailing bytes after particle records".into()));
        }
        Ok(Snapshot {
            version,
            n,
            t,
            weight,
            particles,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Snapshot = serde_json::from_str(text)?;
        if s.particles.len() as u64 != s.n {
            return Err(KinflowError::Format(format!(
                "header says {} particles, found {}",
                s.n,
                s.particles.len()
            )));
        }
        Ok(s)
    }
}
