//! Run artifacts: field-snapshot CSVs, run manifests, trajectory files
//! (plain CSV and a compact little-endian binary layout), and report JSON.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::TrajectoryRecord;
use crate::error::{EdError, Result};
use crate::fields::velocity_fields;
use crate::params::ModelParams;
use crate::state::WaveState;

const TRAJ_MAGIC: &[u8; 8] = b"EDTRJ\x01\0\0";

pub const MANIFEST_SCHEMA: &str = "edlab/run-manifest/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: usize,
    pub points: usize,
    pub extent: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub scenario_id: String,
    pub class: String,
    pub params: ModelParams,
    pub grid: GridSpec,
    pub seed: u64,
    pub walkers: usize,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub energies: Vec<f64>,
    /// Present when the run was truncated (e.g. hybrid caustic halt).
    pub halt: Option<String>,
    pub config_sha256: Option<String>,
    pub config_text: Option<String>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)
            .map_err(|e| EdError::MalformedArtifact {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| EdError::MalformedArtifact {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

/// Field snapshot columns: coordinates, rho, Phi, then v and u per dimension.
pub fn write_fields_csv(path: &Path, state: &WaveState, params: &ModelParams) -> Result<()> {
    let grid = state.grid();
    let rho = state.rho();
    let phase = state.phase();
    let vf = velocity_fields(state, params)?;
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    match grid.dims() {
        1 => {
            writeln!(w, "x,rho,phi,v,u")?;
            for i in 0..grid.len() {
                writeln!(
                    w,
                    "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    grid.coord(0, i),
                    rho[i],
                    phase[i],
                    vf.current[0][i],
                    vf.osmotic[0][i]
                )?;
            }
        }
        _ => {
            writeln!(w, "x1,x2,rho,phi,v1,v2,u1,u2")?;
            for i in 0..grid.len() {
                let [x1, x2] = grid.position(i);
                writeln!(
                    w,
                    "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                    x1,
                    x2,
                    rho[i],
                    phase[i],
                    vf.current[0][i],
                    vf.current[1][i],
                    vf.osmotic[0][i],
                    vf.osmotic[1][i]
                )?;
            }
        }
    }
    Ok(())
}

/// Read back the (x, rho) columns of a 1-D field snapshot.
pub fn read_fields_csv_1d(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut xs = Vec::new();
    let mut rhos = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            continue;
        }
        let mut parts = line.split(',');
        let bad = || EdError::MalformedArtifact {
            path: path.display().to_string(),
            reason: format!("line {}: expected numeric columns", lineno + 1),
        };
        let x: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let r: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        xs.push(x);
        rhos.push(r);
    }
    Ok((xs, rhos))
}

pub fn write_trajectory_csv(path: &Path, record: &TrajectoryRecord) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    if record.dims == 1 {
        writeln!(w, "time,walker,x")?;
    } else {
        writeln!(w, "time,walker,x1,x2")?;
    }
    for (ti, &t) in record.times.iter().enumerate() {
        for walker in 0..record.walkers {
            write!(w, "{t:.12e},{walker}")?;
            for d in 0..record.dims {
                write!(w, ",{:.17e}", record.coord(ti, walker, d))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Compact binary layout: magic, u64 walker count, u32 dims, u32 time count,
/// f64 epsilon, u64 seed, the time stamps, then positions per time as
/// walkers x dims little-endian doubles.
pub fn write_trajectory_bin(path: &Path, record: &TrajectoryRecord) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(TRAJ_MAGIC)?;
    w.write_all(&(record.walkers as u64).to_le_bytes())?;
    w.write_all(&(record.dims as u32).to_le_bytes())?;
    w.write_all(&(record.times.len() as u32).to_le_bytes())?;
    w.write_all(&record.epsilon.to_le_bytes())?;
    w.write_all(&record.seed.to_le_bytes())?;
    for &t in &record.times {
        w.write_all(&t.to_le_bytes())?;
    }
    for &p in &record.positions {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_trajectory_bin(path: &Path) -> Result<TrajectoryRecord> {
    let bad = |reason: &str| EdError::MalformedArtifact {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let mut file = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != TRAJ_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut b8 = [0u8; 8];
    let mut b4 = [0u8; 4];
    file.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
    let walkers = u64::from_le_bytes(b8) as usize;
    file.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
    let dims = u32::from_le_bytes(b4) as usize;
    file.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
    let n_times = u32::from_le_bytes(b4) as usize;
    file.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
    let epsilon = f64::from_le_bytes(b8);
    file.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
    let seed = u64::from_le_bytes(b8);
    if dims == 0 || dims > 2 || walkers == 0 {
        return Err(bad("implausible header"));
    }
    let mut times = Vec::with_capacity(n_times);
    for _ in 0..n_times {
        file.read_exact(&mut b8).map_err(|_| bad("truncated times"))?;
        times.push(f64::from_le_bytes(b8));
    }
    let total = n_times * walkers * dims;
    let mut positions = Vec::with_capacity(total);
    for _ in 0..total {
        file.read_exact(&mut b8).map_err(|_| bad("truncated positions"))?;
        positions.push(f64::from_le_bytes(b8));
    }
    Ok(TrajectoryRecord {
        times,
        positions,
        walkers,
        dims,
        epsilon,
        scenario_id: String::new(),
        seed,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), value).map_err(|e| {
        EdError::MalformedArtifact {
            path: path.display().to_string(),
            reason: e.to_string(),
        }
    })?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path)?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| EdError::MalformedArtifact {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}
