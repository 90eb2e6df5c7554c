//! Scan execution and deterministic outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{MapKind, ScanSpec};
use crate::atom::{excitation_envelope, remanent_excitation, total_propagator, RephasingMap};
use crate::error::{Error, Result};
use crate::format::fmt_g;
use crate::metrics::EchoReport;
use crate::protocol::{control_map, run_protocol_with, SilencingCheck};
use crate::solver::ControlPairMap;

/// Fidelity search half-range in units of the signal duration constant.
pub const SEARCH_TAUS: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub detuning: f64,
    pub zeta_l: f64,
    pub report: Option<EchoReport>,
    pub silencing: Option<SilencingCheck>,
    pub error: Option<String>,
    #[serde(skip)]
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub points: Vec<PointResult>,
    pub files: Vec<OutputFile>,
    pub out_dir: PathBuf,
}

impl ScanResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    /// 0 when every point succeeded, else the worst point exit code.
    pub fn exit_code(&self) -> i32 {
        self.points.iter().map(|p| p.exit_code).max().unwrap_or(0)
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// Scan points in output order: detuning outer, `ζ_L` inner.
pub fn scan_points(spec: &ScanSpec) -> Vec<(f64, f64)> {
    spec.detuning
        .iter()
        .flat_map(|&d| spec.zeta_l.iter().map(move |&z| (d, z)))
        .collect()
}

fn run_point(spec: &ScanSpec, map: &ControlPairMap, detuning: f64, zeta_l: f64) -> PointResult {
    let config = spec.point(detuning, zeta_l);
    let nominal = config.schedule.t3 - config.schedule.t0;
    let search = SEARCH_TAUS * config.signal.tau;
    let outcome = run_protocol_with(&config, map)
        .and_then(|o| EchoReport::evaluate(&o.signal, &o.echo, nominal, search).map(|r| (r, o.diagnostics.silencing)));
    match outcome {
        Ok((report, silencing)) => PointResult {
            detuning,
            zeta_l,
            report: Some(report),
            silencing: Some(silencing),
            error: None,
            exit_code: 0,
        },
        Err(e) => PointResult {
            detuning,
            zeta_l,
            report: None,
            silencing: None,
            exit_code: e.exit_code(),
            error: Some(e.to_string()),
        },
    }
}

/// Runs every point and writes `scan.csv`, the requested maps and
/// `manifest.json` into `out_dir`. Failed points appear as `nan` rows.
pub fn run_scan(spec: &ScanSpec, out_dir: &Path) -> Result<ScanResult> {
    let pool = pool(spec.workers)?;
    let map = pool.install(|| control_map(&spec.base))?;
    let points = scan_points(spec);
    let results: Vec<PointResult> = pool.install(|| {
        points
            .par_iter()
            .map(|&(d, z)| run_point(spec, &map, d, z))
            .collect()
    });
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = vec![write_file(out_dir, "scan.csv", &scan_csv(&results))?];
    files.extend(write_maps(spec, &map, out_dir)?);
    let result = ScanResult {
        points: results,
        files,
        out_dir: out_dir.to_path_buf(),
    };
    write_manifest(spec, &result, "run")?;
    Ok(result)
}

/// Map outputs only (the `map` command): no signal runs.
pub fn run_maps(spec: &ScanSpec, out_dir: &Path) -> Result<ScanResult> {
    if spec.maps.is_empty() {
        return Err(Error::Config("scan.maps is empty; nothing to compute".into()));
    }
    let pool = pool(spec.workers)?;
    let map = pool.install(|| control_map(&spec.base))?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = write_maps(spec, &map, out_dir)?;
    let result = ScanResult {
        points: vec![],
        files,
        out_dir: out_dir.to_path_buf(),
    };
    write_manifest(spec, &result, "map")?;
    Ok(result)
}

pub fn scan_csv(points: &[PointResult]) -> String {
    let mut s = String::from("detuning,zeta_L,eta,xi,best_delay\n");
    for p in points {
        let (eta, xi, delay) = p
            .report
            .map_or((f64::NAN, f64::NAN, f64::NAN), |r| (r.eta, r.xi, r.best_delay));
        let row = [p.detuning, p.zeta_l, eta, xi, delay].map(fmt_g).join(",");
        s.push_str(&row);
        s.push('\n');
    }
    s
}

fn write_maps(spec: &ScanSpec, map: &ControlPairMap, out_dir: &Path) -> Result<Vec<OutputFile>> {
    let mut files = Vec::new();
    let grid = &spec.base.grid;
    let (u1, u2) = map.by_depth();
    for kind in &spec.maps {
        match kind {
            MapKind::Rephasing => {
                let rm = RephasingMap::from_propagators(grid.delta.clone(), map.depth.clone(), &u1, &u2)?;
                let mut buf = Vec::new();
                rm.write_csv(&mut buf).map_err(|e| Error::io(out_dir.join("rephasing_map.csv"), e))?;
                files.push(write_file(out_dir, "rephasing_map.csv", &String::from_utf8(buf).expect("ascii"))?);
            }
            MapKind::Excitation => {
                let mut s = String::from("delta,zeta,p_e,p_e_envelope\n");
                let nd = map.n_delta;
                for (iz, z) in map.depth.iter().enumerate() {
                    for (id, d) in grid.delta.iter().enumerate() {
                        let k = iz * nd + id;
                        let total = total_propagator(&u1[k], &u2[k], *d, &spec.base.schedule)?;
                        let row = [
                            *d,
                            *z,
                            remanent_excitation(&total),
                            excitation_envelope(&u1[k], &u2[k]),
                        ]
                        .map(fmt_g)
                        .join(",");
                        s.push_str(&row);
                        s.push('\n');
                    }
                }
                files.push(write_file(out_dir, "excitation_map.csv", &s)?);
            }
        }
    }
    Ok(files)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<OutputFile> {
    let path = dir.join(name);
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    f.write_all(content.as_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(OutputFile {
        path: name.to_string(),
        sha256: hex::encode(Sha256::digest(content.as_bytes())),
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    config: &'a super::config::FileConfig,
    schedule: &'a crate::model::Schedule,
    grid: GridSummary,
    points: &'a [PointResult],
    failures: usize,
    outputs: &'a [OutputFile],
}

#[derive(Serialize)]
struct GridSummary {
    n_delta: usize,
    delta_min: f64,
    delta_max: f64,
    n_zeta: usize,
    zeta_step: f64,
    dt: f64,
}

fn write_manifest(spec: &ScanSpec, result: &ScanResult, command: &str) -> Result<()> {
    let g = &spec.base.grid;
    let manifest = Manifest {
        command,
        config: &spec.resolved,
        schedule: &spec.base.schedule,
        grid: GridSummary {
            n_delta: g.n_delta(),
            delta_min: g.delta[0],
            delta_max: *g.delta.last().unwrap(),
            n_zeta: g.n_zeta(),
            zeta_step: g.zeta_step(),
            dt: g.dt,
        },
        points: &result.points,
        failures: result.failures(),
        outputs: &result.files,
    };
    let path = result.out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}
