//! Binary scenario container.
//!
//! ```text
//! magic      8 bytes  "COVACTSC"
//! version    u32
//! config     u64 x 6 (B, N, K, L, M, seed), f64 x 6 (radius, PL a, PL b,
//!            tx dBm, noise dBm/Hz, bandwidth)
//! noise_var  f64
//! layout     u64 count + (x, y) f64 pairs for BS positions, same for wrap shifts
//! devices    B*N (x, y) pairs
//! gains      B*B*N f64, order [bs][cell][n]
//! signatures B*N*L (re, im) pairs, device-major
//! truth      B*N bytes (0/1)
//! obs        u8 mode (0 ideal, 1 sampled), u64 antennas, B*L*L (re, im) pairs row-major
//! ```
//!
//! Every number is little-endian; a save/load round trip is bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::scenario::{
    GainTable, Geometry, GroundTruth, Layout, ObservationMode, ObservationSet, Point, Scenario, ScenarioConfig,
    ScenarioError,
};

pub const MAGIC: &[u8; 8] = b"COVACTSC";
pub const VERSION: u32 = 1;

/// A scenario together with its activity pattern and observations.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioBundle {
    pub scenario: Scenario,
    pub truth: GroundTruth,
    pub observations: ObservationSet,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn save_scenario(path: &Path, bundle: &ScenarioBundle) -> Result<(), ScenarioError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    write_bundle(&mut w, bundle).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn load_scenario(path: &Path) -> Result<ScenarioBundle, ScenarioError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = BufReader::new(file);
    read_bundle(&mut r, path)
}

/// Serializes into an in-memory buffer.
pub fn to_bytes(bundle: &ScenarioBundle) -> Vec<u8> {
    let mut out = Vec::new();
    write_bundle(&mut out, bundle).expect("writing to a Vec cannot fail");
    out
}

fn write_bundle(w: &mut impl Write, b: &ScenarioBundle) -> std::io::Result<()> {
    let scn = &b.scenario;
    let c = &scn.config;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [c.cells, c.devices_per_cell, c.active_per_cell, c.signature_len, c.antennas] {
        put_u64(w, v as u64)?;
    }
    put_u64(w, c.seed)?;
    for v in [
        c.cell_radius_m,
        c.pathloss_a_db,
        c.pathloss_b,
        c.tx_power_dbm,
        c.noise_psd_dbm_hz,
        c.bandwidth_hz,
        scn.noise_var,
    ] {
        put_f64(w, v)?;
    }
    put_points(w, &scn.geometry.layout.bs_positions)?;
    put_points(w, &scn.geometry.layout.wrap_shifts)?;
    for p in &scn.geometry.device_positions {
        put_f64(w, p[0])?;
        put_f64(w, p[1])?;
    }
    for g in scn.gains.values() {
        put_f64(w, *g)?;
    }
    for s in &scn.signatures {
        put_complex(w, s.as_slice())?;
    }
    w.write_all(&b.truth.active.iter().map(|&x| u8::from(x)).collect::<Vec<_>>())?;
    match b.observations.mode {
        ObservationMode::Ideal => {
            w.write_all(&[0])?;
            put_u64(w, 0)?;
        }
        ObservationMode::Sampled { antennas } => {
            w.write_all(&[1])?;
            put_u64(w, antennas as u64)?;
        }
    }
    for m in &b.observations.sample_covs {
        put_complex(w, m.as_slice())?;
    }
    Ok(())
}

fn read_bundle(r: &mut impl Read, path: &Path) -> Result<ScenarioBundle, ScenarioError> {
    let io = io_err(path);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(&io)?;
    if &magic != MAGIC {
        return Err(ScenarioError::SchemaVersionMismatch(format!(
            "{}: bad magic header {:?}",
            path.display(),
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver).map_err(&io)?;
    let version = u32::from_le_bytes(ver);
    if version != VERSION {
        return Err(ScenarioError::SchemaVersionMismatch(format!(
            "{}: version {version}, expected {VERSION}",
            path.display()
        )));
    }
    let mut ints = [0u64; 6];
    for v in &mut ints {
        *v = get_u64(r).map_err(&io)?;
    }
    let mut floats = [0f64; 7];
    for v in &mut floats {
        *v = get_f64(r).map_err(&io)?;
    }
    let config = ScenarioConfig {
        cells: ints[0] as usize,
        devices_per_cell: ints[1] as usize,
        active_per_cell: ints[2] as usize,
        signature_len: ints[3] as usize,
        antennas: ints[4] as usize,
        seed: ints[5],
        cell_radius_m: floats[0],
        pathloss_a_db: floats[1],
        pathloss_b: floats[2],
        tx_power_dbm: floats[3],
        noise_psd_dbm_hz: floats[4],
        bandwidth_hz: floats[5],
    };
    config.validate()?;
    let noise_var = floats[6];
    let (b, n, l) = (config.cells, config.devices_per_cell, config.signature_len);
    let bs_positions = get_points(r).map_err(&io)?;
    let wrap_shifts = get_points(r).map_err(&io)?;
    let mut device_positions = Vec::with_capacity(b * n);
    for _ in 0..b * n {
        device_positions.push([get_f64(r).map_err(&io)?, get_f64(r).map_err(&io)?]);
    }
    let gains = (0..b * b * n).map(|_| get_f64(r)).collect::<Result<Vec<_>, _>>().map_err(&io)?;
    let gains = GainTable::from_values(b, n, gains)?;
    let signatures = (0..b * n)
        .map(|_| get_complex(r, l).map(ComplexVector::from_vec))
        .collect::<Result<Vec<_>, _>>()
        .map_err(&io)?;
    let mut truth_bytes = vec![0u8; b * n];
    r.read_exact(&mut truth_bytes).map_err(&io)?;
    let mut mode = [0u8; 1];
    r.read_exact(&mut mode).map_err(&io)?;
    let antennas = get_u64(r).map_err(&io)? as usize;
    let mode = match mode[0] {
        0 => ObservationMode::Ideal,
        1 => ObservationMode::Sampled { antennas },
        other => {
            return Err(ScenarioError::SchemaVersionMismatch(format!(
                "{}: unknown observation mode {other}",
                path.display()
            )))
        }
    };
    let sample_covs = (0..b)
        .map(|_| get_complex(r, l * l))
        .collect::<Result<Vec<_>, _>>()
        .map_err(&io)?
        .into_iter()
        .map(|data| ComplexMatrix::from_row_major(l, l, data).expect("length checked"))
        .collect();
    Ok(ScenarioBundle {
        scenario: Scenario {
            config,
            geometry: Geometry {
                layout: Layout {
                    bs_positions,
                    wrap_shifts,
                },
                device_positions,
            },
            gains,
            signatures,
            noise_var,
        },
        truth: GroundTruth {
            active: truth_bytes.into_iter().map(|x| x != 0).collect(),
        },
        observations: ObservationSet { sample_covs, mode },
    })
}

fn put_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_f64(w: &mut impl Write, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_points(w: &mut impl Write, pts: &[Point]) -> std::io::Result<()> {
    put_u64(w, pts.len() as u64)?;
    for p in pts {
        put_f64(w, p[0])?;
        put_f64(w, p[1])?;
    }
    Ok(())
}

fn put_complex(w: &mut impl Write, zs: &[Complex64]) -> std::io::Result<()> {
    for z in zs {
        put_f64(w, z.re)?;
        put_f64(w, z.im)?;
    }
    Ok(())
}

fn get_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn get_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn get_points(r: &mut impl Read) -> std::io::Result<Vec<Point>> {
    let count = get_u64(r)?;
    if count > 1 << 20 {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "implausible point count"));
    }
    (0..count).map(|_| Ok([get_f64(r)?, get_f64(r)?])).collect()
}

fn get_complex(r: &mut impl Read, len: usize) -> std::io::Result<Vec<Complex64>> {
    (0..len).map(|_| Ok(Complex64::new(get_f64(r)?, get_f64(r)?))).collect()
}
