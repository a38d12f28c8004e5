//! CSV and JSON persistence of curves, frames, residual grids and runs.
//!
//! Numbers are written with 15 significant digits. A run directory holds
//! `manifest.json` plus one curve CSV and one frame CSV per snapshot.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curve::{DiscreteCurve, Topology};
use crate::error::{Result, VfeError};
use crate::flow::{FlowConfig, FlowHistory};
use crate::frames::{CausalCase, ParallelFrameField};
use crate::lorentz::{CausalClass, MVector};
use crate::pde::Grid;
use crate::tolerance::Tolerances;

pub const CURVE_HEADER: &str = "s,x0,x1,x2";
pub const FRAME_HEADER: &str = "s,T0,T1,T2,E1_0,E1_1,E1_2,E2_0,E2_1,E2_2,k1,k2,theta";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

/// Formats a number with 15 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.14e}")
}

fn parse_num(field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| VfeError::Parse(format!("line {line}: '{field}' is not a number")))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Reads a CSV with the given header into rows of numbers.
fn read_table(path: &Path, header: &str) -> Result<Vec<Vec<f64>>> {
    let file = fs::File::open(path).map_err(|e| VfeError::Parse(format!("{}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .transpose()?
        .ok_or_else(|| VfeError::Parse(format!("{}: empty file", path.display())))?;
    if first.trim() != header {
        return Err(VfeError::Parse(format!(
            "{}: expected header '{header}', found '{}'",
            path.display(),
            first.trim()
        )));
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| parse_num(f, k + 2))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != width {
            return Err(VfeError::Parse(format!(
                "{} line {}: {} fields, expected {width}",
                path.display(),
                k + 2,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn uniform_step(s: &[f64], path: &Path) -> Result<f64> {
    if s.len() < 2 {
        return Err(VfeError::Parse(format!("{}: fewer than two rows", path.display())));
    }
    let ds = (s[s.len() - 1] - s[0]) / (s.len() - 1) as f64;
    let uniform = s.windows(2).all(|w| ((w[1] - w[0]) - ds).abs() <= 1e-9 * ds.abs().max(1.0));
    if !uniform || !(ds > 0.0) {
        return Err(VfeError::Parse(format!("{}: s column is not uniformly increasing", path.display())));
    }
    Ok(ds)
}

pub fn write_curve_csv(path: &Path, c: &DiscreteCurve) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{CURVE_HEADER}")?;
    for (i, p) in c.samples().iter().enumerate() {
        writeln!(w, "{},{},{},{}", fmt_num(c.s(i)), fmt_num(p.x0), fmt_num(p.x1), fmt_num(p.x2))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve CSV. `ds` is taken from the `s` column when `ds` is `None`.
pub fn read_curve_csv(path: &Path, topology: Topology, ds: Option<f64>, tol: &Tolerances) -> Result<DiscreteCurve> {
    let rows = read_table(path, CURVE_HEADER)?;
    let s: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ds = match ds {
        Some(d) => d,
        None => uniform_step(&s, path)?,
    };
    let samples = rows.iter().map(|r| MVector::new(r[1], r[2], r[3])).collect();
    DiscreteCurve::new(samples, ds, topology, tol)
}

/// Reads the positions of a curve CSV without any validation.
pub fn read_curve_points(path: &Path) -> Result<Vec<MVector>> {
    Ok(read_table(path, CURVE_HEADER)?
        .iter()
        .map(|r| MVector::new(r[1], r[2], r[3]))
        .collect())
}

pub fn write_frame_csv(path: &Path, f: &ParallelFrameField) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{FRAME_HEADER}")?;
    for i in 0..f.len() {
        let mut fields = vec![fmt_num(i as f64 * f.ds)];
        for v in [f.t[i], f.e1[i], f.e2[i]] {
            fields.extend(v.to_array().iter().map(|x| fmt_num(*x)));
        }
        fields.extend([fmt_num(f.k1[i]), fmt_num(f.k2[i]), fmt_num(f.theta[i])]);
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_frame_csv(path: &Path, case: CausalCase, ds: f64) -> Result<ParallelFrameField> {
    let rows = read_table(path, FRAME_HEADER)?;
    let v = |r: &[f64], k: usize| MVector::new(r[k], r[k + 1], r[k + 2]);
    Ok(ParallelFrameField {
        t: rows.iter().map(|r| v(r, 1)).collect(),
        e1: rows.iter().map(|r| v(r, 4)).collect(),
        e2: rows.iter().map(|r| v(r, 7)).collect(),
        k1: rows.iter().map(|r| r[10]).collect(),
        k2: rows.iter().map(|r| r[11]).collect(),
        theta: rows.iter().map(|r| r[12]).collect(),
        case,
        ds,
    })
}

/// Writes space-time grids in long format: `t,s,<name>...`.
pub fn write_grid_csv(path: &Path, columns: &[(&str, &Grid<f64>)], ds: f64, dt: f64) -> Result<()> {
    let mut w = create(path)?;
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    writeln!(w, "t,s,{}", names.join(","))?;
    let nt = columns.first().map_or(0, |(_, g)| g.len());
    for j in 0..nt {
        let ns = columns[0].1[j].len();
        for i in 0..ns {
            let mut fields = vec![fmt_num(j as f64 * dt), fmt_num(i as f64 * ds)];
            fields.extend(columns.iter().map(|(_, g)| fmt_num(g[j][i])));
            writeln!(w, "{}", fields.join(","))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|e| VfeError::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| VfeError::Parse(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub time: f64,
    pub drift: f64,
    pub curve: String,
    pub frame: String,
}

/// Metadata of a saved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub case: CausalCase,
    pub causal_class: CausalClass,
    pub topology: Topology,
    pub n: usize,
    pub ds: f64,
    pub flow: FlowConfig,
    pub substeps: usize,
    pub discontinuities: Vec<usize>,
    pub seeds: Vec<MVector>,
    pub snapshots: Vec<SnapshotEntry>,
    /// Free-form description of how the initial curve was produced.
    pub source: serde_json::Value,
}

fn snapshot_names(j: usize) -> (String, String) {
    (format!("curve_{j:05}.csv"), format!("frame_{j:05}.csv"))
}

/// Saves a history into `dir` (created if needed) and returns its manifest.
pub fn save_history(dir: &Path, h: &FlowHistory, source: serde_json::Value) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    let mut snapshots = Vec::with_capacity(h.len());
    for j in 0..h.len() {
        let (curve, frame) = snapshot_names(j);
        write_curve_csv(&dir.join(&curve), &h.curves[j])?;
        write_frame_csv(&dir.join(&frame), &h.frames[j])?;
        snapshots.push(SnapshotEntry {
            index: j,
            time: h.times[j],
            drift: h.drift[j],
            curve,
            frame,
        });
    }
    let c0 = &h.curves[0];
    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        case: h.case,
        causal_class: c0.causal_class(),
        topology: *c0.topology(),
        n: c0.len(),
        ds: c0.ds(),
        flow: h.config.clone(),
        substeps: h.substeps,
        discontinuities: h.discontinuities.clone(),
        seeds: h.seeds.clone(),
        snapshots,
        source,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Loads a history written by [`save_history`]. Missing or malformed files
/// are reported as parse errors naming the file.
pub fn load_history(dir: &Path) -> Result<(FlowHistory, RunManifest)> {
    let manifest: RunManifest = read_json(&dir.join(MANIFEST_FILE))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(VfeError::Parse(format!(
            "unsupported run format version {}",
            manifest.format_version
        )));
    }
    if manifest.snapshots.is_empty() {
        return Err(VfeError::Parse("manifest lists no snapshots".into()));
    }
    // Snapshots are reloaded without the unit-speed check; drift is part of
    // what verification reports.
    let tol = Tolerances {
        unit_speed_tol: f64::INFINITY,
        ..manifest.flow.tol
    };
    let mut curves = Vec::with_capacity(manifest.snapshots.len());
    let mut frames = Vec::with_capacity(manifest.snapshots.len());
    for entry in &manifest.snapshots {
        let curve = read_curve_csv(&dir.join(&entry.curve), manifest.topology, Some(manifest.ds), &tol)?;
        let frame = read_frame_csv(&dir.join(&entry.frame), manifest.case, manifest.ds)?;
        if curve.len() != manifest.n || frame.len() != manifest.n {
            return Err(VfeError::Parse(format!(
                "snapshot {} has {} curve and {} frame rows, expected {}",
                entry.index,
                curve.len(),
                frame.len(),
                manifest.n
            )));
        }
        curves.push(curve);
        frames.push(frame);
    }
    let history = FlowHistory {
        case: manifest.case,
        config: manifest.flow.clone(),
        times: manifest.snapshots.iter().map(|s| s.time).collect(),
        curves,
        frames,
        drift: manifest.snapshots.iter().map(|s| s.drift).collect(),
        seeds: manifest.seeds.clone(),
        discontinuities: manifest.discontinuities.clone(),
        substeps: manifest.substeps,
    };
    Ok((history, manifest))
}

/// Paths of every file belonging to a saved run, manifest first.
pub fn run_files(dir: &Path, manifest: &RunManifest) -> Vec<PathBuf> {
    let mut out = vec![dir.join(MANIFEST_FILE)];
    for s in &manifest.snapshots {
        out.push(dir.join(&s.curve));
        out.push(dir.join(&s.frame));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::run;
    use crate::seeds;

    #[test]
    fn curve_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let tol = Tolerances::default();
        let c = seeds::circle(1.0, 64, &tol).unwrap();
        let path = dir.path().join("c.csv");
        write_curve_csv(&path, &c).unwrap();
        let back = read_curve_csv(&path, Topology::Closed, None, &tol).unwrap();
        assert!((back.ds() - c.ds()).abs() < 1e-12);
        for (a, b) in back.samples().iter().zip(c.samples()) {
            assert!((*a - *b).max_abs() < 1e-14);
        }
        write_curve_csv(&path, &back).unwrap();
        let again = read_curve_csv(&path, Topology::Closed, Some(back.ds()), &tol).unwrap();
        assert_eq!(again.samples(), back.samples());
    }

    #[test]
    fn bad_header_and_rows_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "x,y\n1,2\n").unwrap();
        assert!(matches!(read_curve_points(&path), Err(VfeError::Parse(_))));
        fs::write(&path, format!("{CURVE_HEADER}\n0,1,2\n")).unwrap();
        assert!(matches!(read_curve_points(&path), Err(VfeError::Parse(_))));
        fs::write(&path, format!("{CURVE_HEADER}\n0,1,abc,2\n")).unwrap();
        assert!(matches!(read_curve_points(&path), Err(VfeError::Parse(_))));
    }

    #[test]
    fn history_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let tol = Tolerances::default();
        let c = seeds::timelike_helix(1.0, 1.0, 32, &tol).unwrap();
        let cfg = FlowConfig {
            dt: 1e-3,
            steps: 4,
            ..FlowConfig::default()
        };
        let h = run(&c, &cfg).unwrap();
        let m = save_history(dir.path(), &h, serde_json::json!({"seed": "test"})).unwrap();
        let (back, m2) = load_history(dir.path()).unwrap();
        assert_eq!(m, m2);
        assert_eq!(back.len(), h.len());
        assert_eq!(back.times, h.times);
        for (a, b) in back.frames.iter().zip(&h.frames) {
            for i in 0..a.len() {
                assert!((a.k1[i] - b.k1[i]).abs() <= 1e-14 * b.k1[i].abs().max(1.0));
                assert!((a.e2[i] - b.e2[i]).max_abs() <= 1e-14);
            }
        }
        assert_eq!(run_files(dir.path(), &m).len(), 1 + 2 * h.len());
    }

    #[test]
    fn truncated_run_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let tol = Tolerances::default();
        let c = seeds::circle(1.0, 32, &tol).unwrap();
        let h = run(&c, &FlowConfig { dt: 1e-3, steps: 2, ..FlowConfig::default() }).unwrap();
        save_history(dir.path(), &h, serde_json::Value::Null).unwrap();
        fs::remove_file(dir.path().join("frame_00002.csv")).unwrap();
        assert!(matches!(load_history(dir.path()), Err(VfeError::Parse(_))));
    }
}
