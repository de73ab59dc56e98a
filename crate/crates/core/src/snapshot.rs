//! Binary trajectory snapshots.
//!
//! Layout (all integers and floats little-endian):
//!
//! | bytes            | content                                         |
//! |------------------|-------------------------------------------------|
//! | 8                | magic `PFSNAP01`                                |
//! | 8                | `u64` length `H` of the header                  |
//! | `H`              | UTF-8 JSON [`SnapshotHeader`]                   |
//! | `n_states` times | `t`, then `w[0..n]`, `v[0..n]`, `u[0..n]` (`f64`) |
//!
//! `n = n_coeffs`, and coefficient `i` belongs to the eigenfunction with
//! wavenumbers `modes[i]`, so a reader needs nothing but the header to
//! rebuild the fields.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis::{CoeffVector, SpectralBasis};
use crate::error::{Error, Result};
use crate::solver::{State, Trajectory, TrajectoryMeta};

pub const MAGIC: &[u8; 8] = b"PFSNAP01";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub lengths: Vec<f64>,
    pub n_modes: Vec<usize>,
    /// Per-axis wavenumbers of every coefficient, in storage order.
    pub modes: Vec<Vec<usize>>,
    pub eigenvalues: Vec<f64>,
    pub dt: f64,
    pub n_coeffs: usize,
    pub n_states: usize,
    pub meta: TrajectoryMeta,
}

pub fn header_for(traj: &Trajectory, basis: &SpectralBasis) -> SnapshotHeader {
    SnapshotHeader {
        format: "phasefield-snapshot".into(),
        version: FORMAT_VERSION,
        lengths: basis.domain().lengths().to_vec(),
        n_modes: basis.n_modes().to_vec(),
        modes: basis.modes().to_vec(),
        eigenvalues: basis.eigenvalues().to_vec(),
        dt: traj.dt,
        n_coeffs: basis.len(),
        n_states: traj.states.len(),
        meta: traj.meta.clone(),
    }
}

pub fn write_snapshot<W: Write>(mut out: W, traj: &Trajectory, basis: &SpectralBasis) -> Result<()> {
    let header = header_for(traj, basis);
    let json = serde_json::to_vec(&header).map_err(|e| Error::Snapshot(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    let n = header.n_coeffs;
    let mut buf = Vec::with_capacity(8 * (1 + 3 * n));
    for s in &traj.states {
        for c in [&s.w, &s.v, &s.u] {
            crate::error::check_len(n, c.len())?;
        }
        buf.clear();
        buf.extend_from_slice(&s.t.to_le_bytes());
        for c in [&s.w, &s.v, &s.u] {
            for x in &c.0 {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save(path: &Path, traj: &Trajectory, basis: &SpectralBasis) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(file), traj, basis)
}

fn read_f64s<R: Read>(input: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; 8 * n];
    input
        .read_exact(&mut bytes)
        .map_err(|e| Error::Snapshot(format!("truncated state data: {e}")))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<(SnapshotHeader, Trajectory)> {
    let mut magic = [0u8; 8];
    input
        .read_exact(&mut magic)
        .map_err(|_| Error::Snapshot("file too short".into()))?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut len = [0u8; 8];
    input
        .read_exact(&mut len)
        .map_err(|_| Error::Snapshot("missing header length".into()))?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    input
        .read_exact(&mut json)
        .map_err(|_| Error::Snapshot("truncated header".into()))?;
    let header: SnapshotHeader = serde_json::from_slice(&json).map_err(|e| Error::Snapshot(e.to_string()))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {}", header.version)));
    }
    if header.modes.len() != header.n_coeffs {
        return Err(Error::Snapshot("mode table does not match n_coeffs".into()));
    }
    let n = header.n_coeffs;
    let mut states = Vec::with_capacity(header.n_states);
    for _ in 0..header.n_states {
        let t = read_f64s(&mut input, 1)?[0];
        let w = CoeffVector(read_f64s(&mut input, n)?);
        let v = CoeffVector(read_f64s(&mut input, n)?);
        let u = CoeffVector(read_f64s(&mut input, n)?);
        states.push(State { w, v, u, t });
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes after last state".into()));
    }
    let traj = Trajectory {
        states,
        dt: header.dt,
        meta: header.meta.clone(),
    };
    Ok((header, traj))
}

pub fn load(path: &Path) -> Result<(SnapshotHeader, Trajectory)> {
    let file = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BoxDomain;
    use crate::solver::Scheme;

    fn tiny() -> (Trajectory, SpectralBasis) {
        let basis = SpectralBasis::new(BoxDomain::rectangle(1.0, 2.0).unwrap(), vec![2, 3]).unwrap();
        let n = basis.len();
        let state = |t: f64| State {
            w: CoeffVector((0..n).map(|i| i as f64 + t).collect()),
            v: CoeffVector((0..n).map(|i| -(i as f64) * t).collect()),
            u: CoeffVector((0..n).map(|i| 1.0 / (1.0 + i as f64 + t)).collect()),
            t,
        };
        let traj = Trajectory {
            states: vec![state(0.0), state(0.1), state(0.2)],
            dt: 0.1,
            meta: TrajectoryMeta {
                lengths: vec![1.0, 2.0],
                n_modes: vec![2, 3],
                scheme: Scheme::ImexCn,
                alpha: 1.0,
                beta: 0.1,
                eps: 0.01,
                t_final: 0.2,
                graph: "double_obstacle".into(),
                nonlinearity: "zero".into(),
                phase_only: false,
            },
        };
        (traj, basis)
    }

    #[test]
    fn round_trip_is_exact() {
        let (traj, basis) = tiny();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &traj, &basis).unwrap();
        let (header, back) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, traj);
        assert_eq!(header.modes, basis.modes());
        assert_eq!(header.n_states, 3);
    }

    #[test]
    fn layout_matches_documentation() {
        let (traj, basis) = tiny();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &traj, &basis).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let h = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
        let n = basis.len();
        assert_eq!(buf.len(), 16 + h + 3 * 8 * (1 + 3 * n));
        let first_t = f64::from_le_bytes(buf[16 + h + 8 * (1 + 3 * n)..][..8].try_into().unwrap());
        assert_eq!(first_t, 0.1);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let (traj, basis) = tiny();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &traj, &basis).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert_eq!(read_snapshot(bad.as_slice()).unwrap_err().code(), "E_SNAPSHOT");
        let short = &buf[..buf.len() - 3];
        assert_eq!(read_snapshot(short).unwrap_err().code(), "E_SNAPSHOT");
        let mut long = buf.clone();
        long.push(0);
        assert!(read_snapshot(long.as_slice()).is_err());
    }
}
