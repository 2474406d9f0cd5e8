//! On-disk bundles: one matrix per CSV file (row-major, shortest round-trip
//! decimal), plus a `meta.toml` record per directory.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::synth::{Method, SynthOptions, SynthesisResult, WSource};
use crate::sys::{CostSpec, DiscreteLinearSystem};

pub const META_FILE: &str = "meta.toml";

fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), msg: msg.into() }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| format_err(path, e.to_string()))?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        w.write_record(&row).map_err(|e| format_err(path, e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    if !path.exists() {
        return Err(format_err(path, "file not found"));
    }
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format_err(path, e.to_string()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| format_err(path, e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| format_err(path, format!("line {}: bad number `{s}`", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format_err(path, format!("line {}: ragged row", i + 1)));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, |r| r.len());
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

pub fn write_meta<T: Serialize>(dir: &Path, meta: &T) -> Result<()> {
    let text = toml::to_string(meta).map_err(|e| format_err(dir, e.to_string()))?;
    fs::write(dir.join(META_FILE), text)?;
    Ok(())
}

pub fn read_meta<T: DeserializeOwned>(dir: &Path) -> Result<T> {
    let path = dir.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(|e| format_err(&path, e.to_string()))?;
    toml::from_str(&text).map_err(|e| format_err(&path, e.to_string()))
}

/// SHA-256 over the named files of a bundle, in the given order.
pub fn hash_files(dir: &Path, names: &[&str]) -> Result<String> {
    let mut h = Sha256::new();
    for name in names {
        let path = dir.join(name);
        if path.exists() {
            h.update(name.as_bytes());
            h.update(fs::read(&path)?);
        }
    }
    Ok(hex::encode(h.finalize()))
}

pub fn hash_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

const SYSTEM_FILES: [&str; 3] = ["A.csv", "B.csv", "W.csv"];
const DATA_FILES: [&str; 4] = ["U0.csv", "X0.csv", "X1.csv", "Omega0.csv"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemMeta {
    pub n: usize,
    pub m: usize,
    pub ts: Option<f64>,
    pub provenance: String,
}

pub fn save_system(dir: &Path, sys: &DiscreteLinearSystem, ts: Option<f64>, provenance: &str) -> Result<String> {
    fs::create_dir_all(dir)?;
    write_matrix(&dir.join("A.csv"), &sys.a)?;
    write_matrix(&dir.join("B.csv"), &sys.b)?;
    write_matrix(&dir.join("W.csv"), &sys.w)?;
    write_meta(dir, &SystemMeta { n: sys.n(), m: sys.m(), ts, provenance: provenance.to_string() })?;
    hash_files(dir, &SYSTEM_FILES)
}

pub fn load_system(dir: &Path) -> Result<(DiscreteLinearSystem, SystemMeta)> {
    let meta: SystemMeta = read_meta(dir)?;
    let sys = DiscreteLinearSystem::new(
        read_matrix(&dir.join("A.csv"))?,
        read_matrix(&dir.join("B.csv"))?,
        read_matrix(&dir.join("W.csv"))?,
    )?;
    if sys.n() != meta.n || sys.m() != meta.m {
        return Err(format_err(&dir.join(META_FILE), "dimensions disagree with the matrices"));
    }
    Ok((sys, meta))
}

pub fn system_hash(dir: &Path) -> Result<String> {
    hash_files(dir, &SYSTEM_FILES)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataMeta {
    pub seed: u64,
    pub len: usize,
    pub input_scale: f64,
    pub source_system_hash: Option<String>,
}

pub fn save_data(dir: &Path, ds: &DataSet, source_system_hash: Option<String>) -> Result<String> {
    fs::create_dir_all(dir)?;
    write_matrix(&dir.join("U0.csv"), &ds.u0)?;
    write_matrix(&dir.join("X0.csv"), &ds.x0)?;
    write_matrix(&dir.join("X1.csv"), &ds.x1)?;
    let omega = dir.join("Omega0.csv");
    match &ds.omega0 {
        Some(o) => write_matrix(&omega, o)?,
        None if omega.exists() => fs::remove_file(&omega)?,
        None => {}
    }
    write_meta(dir, &DataMeta { seed: ds.seed, len: ds.len(), input_scale: ds.input_scale, source_system_hash })?;
    hash_files(dir, &DATA_FILES)
}

pub fn load_data(dir: &Path) -> Result<(DataSet, DataMeta)> {
    let meta: DataMeta = read_meta(dir)?;
    let mut ds = DataSet::new(
        read_matrix(&dir.join("U0.csv"))?,
        read_matrix(&dir.join("X0.csv"))?,
        read_matrix(&dir.join("X1.csv"))?,
    )?;
    let omega = dir.join("Omega0.csv");
    if omega.exists() {
        let o = read_matrix(&omega)?;
        if o.shape() != ds.x1.shape() {
            return Err(format_err(&omega, "shape differs from X1"));
        }
        ds.omega0 = Some(o);
    }
    if ds.len() != meta.len {
        return Err(format_err(&dir.join(META_FILE), "length disagrees with the matrices"));
    }
    ds.seed = meta.seed;
    ds.input_scale = meta.input_scale;
    Ok((ds, meta))
}

pub fn data_hash(dir: &Path) -> Result<String> {
    hash_files(dir, &DATA_FILES)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionMeta {
    pub method: String,
    pub status: String,
    pub failure: Option<String>,
    pub alpha: Option<f64>,
    pub gamma: f64,
    pub eps: f64,
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: usize,
    pub solver: String,
    pub data_hash: Option<String>,
    pub w_source: Option<String>,
    pub objective: f64,
    pub iterations: usize,
    pub bellman_residual: Option<f64>,
    pub gamma_floor: Option<f64>,
    pub cond_y: Option<f64>,
    pub certificate_trpw: Option<f64>,
    pub certificate_alpha: Option<f64>,
    pub degraded: bool,
}

impl SolutionMeta {
    pub fn from_result(res: &SynthesisResult, spec: &CostSpec, opts: &SynthOptions, data_hash: Option<String>) -> Self {
        let d = &res.diagnostics;
        Self {
            method: res.method.as_str().to_string(),
            status: res.status.as_str().to_string(),
            failure: res.failure.map(|f| f.as_str().to_string()),
            alpha: res.alpha,
            gamma: spec.gamma,
            eps: opts.eps,
            tol_feas: opts.settings.tol_feas,
            tol_gap: opts.settings.tol_gap,
            max_iter: opts.settings.max_iter,
            solver: opts.solver.id().to_string(),
            data_hash,
            w_source: d.w_source.map(|w| match w {
                WSource::Supplied => "supplied".to_string(),
                WSource::Estimated => "estimated".to_string(),
            }),
            objective: res.diagnostics.objective,
            iterations: d.iterations,
            bellman_residual: d.bellman_residual,
            gamma_floor: d.gamma_floor,
            cond_y: d.cond_y,
            certificate_trpw: d.certificate_trpw,
            certificate_alpha: d.certificate_alpha,
            degraded: d.degraded,
        }
    }
}

/// A stored synthesis result.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBundle {
    pub meta: SolutionMeta,
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub f: Option<DMatrix<f64>>,
    pub m: Option<DMatrix<f64>>,
    pub w: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl SolutionBundle {
    pub fn cost_spec(&self) -> Result<CostSpec> {
        CostSpec::new(self.q.clone(), self.r.clone(), self.meta.gamma)
    }

    pub fn method(&self) -> Result<Method> {
        self.meta.method.parse()
    }

    pub fn g(&self) -> Option<DMatrix<f64>> {
        Some(self.f.as_ref()? * &self.p)
    }
}

/// Writes `K.csv`, `P.csv`, `Y.csv`, the method's auxiliary block, the `W`,
/// `Q` and `R` used and `meta.toml`. Failed syntheses write no gain files.
pub fn save_solution(dir: &Path, res: &SynthesisResult, spec: &CostSpec, meta: &SolutionMeta) -> Result<()> {
    fs::create_dir_all(dir)?;
    let put = |name: &str, m: &Option<DMatrix<f64>>| -> Result<()> {
        if let Some(m) = m {
            write_matrix(&dir.join(name), m)?;
        }
        Ok(())
    };
    put("K.csv", &res.k)?;
    put("P.csv", &res.p)?;
    put("Y.csv", &res.y)?;
    put("F.csv", &res.f)?;
    put("M.csv", &res.m)?;
    write_matrix(&dir.join("W.csv"), &res.w)?;
    write_matrix(&dir.join("Q.csv"), &spec.q)?;
    write_matrix(&dir.join("R.csv"), &spec.r)?;
    write_meta(dir, meta)
}

pub fn load_solution(dir: &Path) -> Result<SolutionBundle> {
    let meta: SolutionMeta = read_meta(dir)?;
    let opt = |name: &str| -> Result<Option<DMatrix<f64>>> {
        let p: PathBuf = dir.join(name);
        if p.exists() {
            read_matrix(&p).map(Some)
        } else {
            Ok(None)
        }
    };
    Ok(SolutionBundle {
        k: read_matrix(&dir.join("K.csv"))?,
        p: read_matrix(&dir.join("P.csv"))?,
        y: read_matrix(&dir.join("Y.csv"))?,
        f: opt("F.csv")?,
        m: opt("M.csv")?,
        w: read_matrix(&dir.join("W.csv"))?,
        q: read_matrix(&dir.join("Q.csv"))?,
        r: read_matrix(&dir.join("R.csv"))?,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("M.csv");
        let m = DMatrix::from_row_slice(2, 3, &[0.1, -1e-300, 3.0, f64::MAX, 1.0 / 3.0, -0.0]);
        write_matrix(&path, &m).unwrap();
        let back = read_matrix(&path).unwrap();
        assert_eq!(back.shape(), (2, 3));
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn ragged_and_missing_files_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "1,2\n3\n").unwrap();
        assert!(read_matrix(&path).is_err());
        assert!(read_matrix(&dir.path().join("none.csv")).is_err());
        fs::write(&path, "1,x\n").unwrap();
        assert!(read_matrix(&path).is_err());
    }
}
