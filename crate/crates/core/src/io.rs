//! CSV and JSON artifacts. Every file is written to a sibling temporary
//! and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cycles::SweepOut;
use crate::error::Result;
use crate::geodesic::{GeodesicPath, JacobiSolution};
use crate::metric::WarpProfile;
use crate::pathspace::DiscreteCurve;

/// Write `bytes` to `path` atomically (temporary file, then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize rows as comma-separated, LF-terminated UTF-8 with a header.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileRow {
    pub t: f64,
    pub f: f64,
    pub f_prime: f64,
    pub f_doubleprime: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

pub fn profile_rows(profile: &WarpProfile, n: usize) -> Vec<ProfileRow> {
    profile
        .samples(n)
        .into_iter()
        .map(|s| ProfileRow {
            t: s.t,
            f: s.f,
            f_prime: s.f_prime,
            f_doubleprime: s.f_doubleprime,
            k: s.k,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeodesicRow {
    pub s: f64,
    pub t: f64,
    pub x: f64,
    pub amb_x: f64,
    pub amb_y: f64,
    pub amb_z: f64,
    pub clairaut: f64,
}

pub fn geodesic_rows(path: &GeodesicPath) -> Vec<GeodesicRow> {
    path.samples
        .iter()
        .map(|s| GeodesicRow {
            s: s.s,
            t: s.point.t,
            x: s.point.x,
            amb_x: s.point.ambient.x,
            amb_y: s.point.ambient.y,
            amb_z: s.point.ambient.z,
            clairaut: crate::geodesic::clairaut_of(&s.point, &s.velocity),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct JacobiRow {
    pub s: f64,
    pub y: f64,
    pub yprime: f64,
}

pub fn jacobi_rows(sol: &JacobiSolution) -> Vec<JacobiRow> {
    sol.values.iter().map(|&(s, y, yprime)| JacobiRow { s, y, yprime }).collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CurveRow {
    pub i: usize,
    pub t_param: f64,
    pub t: f64,
    pub x: f64,
    pub amb_x: f64,
    pub amb_y: f64,
    pub amb_z: f64,
}

pub fn curve_rows(curve: &DiscreteCurve) -> Vec<CurveRow> {
    let n = curve.segments() as f64;
    curve
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| CurveRow {
            i,
            t_param: i as f64 / n,
            t: p.t,
            x: p.x,
            amb_x: p.ambient.x,
            amb_y: p.ambient.y,
            amb_z: p.ambient.z,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepIndexRow {
    pub member_id: usize,
    pub index_value: f64,
    pub energy: f64,
    pub length: f64,
}

/// Index CSV plus `member_NNNN.csv` per member under `dir`.
pub fn write_sweep(dir: &Path, sweep: &SweepOut) -> Result<Vec<PathBuf>> {
    let rows: Vec<SweepIndexRow> = sweep
        .energies
        .iter()
        .zip(&sweep.index_values)
        .enumerate()
        .map(|(member_id, (e, &index_value))| SweepIndexRow {
            member_id,
            index_value,
            energy: e.energy,
            length: e.length,
        })
        .collect();
    let mut written = vec![dir.join("index.csv")];
    write_csv(&written[0], &rows)?;
    for (i, m) in sweep.members.iter().enumerate() {
        let path = dir.join(format!("member_{i:04}.csv"));
        write_csv(&path, &curve_rows(m))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub level: f64,
}

pub fn history_rows(history: &[(usize, f64)]) -> Vec<HistoryRow> {
    history.iter().map(|&(iteration, level)| HistoryRow { iteration, level }).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RauchRow {
    pub case_id: usize,
    pub profile: String,
    #[serde(rename = "Lc")]
    pub lc: f64,
    pub f_desc: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub rigid: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyRow {
    pub r: f64,
    pub crl: f64,
    pub crlp_pole: f64,
    pub crlp_equator: f64,
    pub two_dp_equator: f64,
    #[serde(rename = "minK")]
    pub min_k: f64,
    pub status: String,
}
