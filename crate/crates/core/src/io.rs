//! CSV and JSON artifacts.
//!
//! CSV is comma separated with shortest round-trip float formatting. Every JSON
//! document is a single object carrying `schema_version` and `kind`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ball::CutoffSpec;
use crate::curvature::CurvatureProfile;
use crate::error::{Error, Result};
use crate::profile::{solve_profile, MetricProfile, ModelParams, Sample};
use crate::tensor::RiemannTensor;

pub const SCHEMA_VERSION: u32 = 1;
pub const OUTPUT_DIR_ENV: &str = "THULLEN_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::DimensionMismatch { expected: self.header.len(), got: row.len() });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", no + 1))))
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != header.len() {
                return Err(Error::Parse(format!("line {}: expected {} fields, got {}", no + 1, header.len(), row.len())));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }
}

/// Wraps `body` into a document with `schema_version` and `kind`.
pub fn document(kind: &str, body: impl Serialize) -> Result<Value> {
    let mut value = serde_json::to_value(body).map_err(|e| Error::Parse(e.to_string()))?;
    let obj = value.as_object_mut().ok_or_else(|| Error::Parse("document body must be an object".into()))?;
    obj.insert("schema_version".into(), json!(SCHEMA_VERSION));
    obj.insert("kind".into(), json!(kind));
    Ok(value)
}

pub fn render_json(doc: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a sibling temporary file and a rename, so readers never see partial output.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}

/// Output directory from the environment, defaulting to the working directory.
pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

pub fn profile_csv(profile: &MetricProfile) -> CsvTable {
    let mut t = CsvTable::new(&["t", "f", "fp", "fpp"]);
    t.rows = profile.samples().iter().map(|s| vec![s.t, s.f, s.fp, s.fpp]).collect();
    t
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub schema_version: u32,
    pub kind: String,
    pub n: u32,
    pub c: f64,
    pub t_max: f64,
    pub tol: f64,
    pub samples: Vec<Sample>,
}

pub fn profile_json(profile: &MetricProfile) -> Result<String> {
    let doc = ProfileDocument {
        schema_version: SCHEMA_VERSION,
        kind: "profile".into(),
        n: profile.n(),
        c: profile.params().c(),
        t_max: profile.t_max(),
        tol: profile.tol(),
        samples: profile.samples().to_vec(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
}

/// Rebuilds a profile from its JSON document by re-solving, then checks the stored samples.
pub fn profile_from_json(text: &str) -> Result<MetricProfile> {
    let doc: ProfileDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.schema_version != SCHEMA_VERSION || doc.kind != "profile" {
        return Err(Error::Parse(format!("unsupported document {} v{}", doc.kind, doc.schema_version)));
    }
    let profile = solve_profile(ModelParams::new(doc.n, doc.c)?, doc.t_max, doc.tol)?;
    if profile.samples().len() != doc.samples.len() {
        return Err(Error::DimensionMismatch { expected: profile.samples().len(), got: doc.samples.len() });
    }
    for (a, b) in profile.samples().iter().zip(&doc.samples) {
        let scale = a.f.abs().max(1.0);
        let gap = [(a.t - b.t).abs(), (a.f - b.f).abs(), (a.fp - b.fp).abs(), (a.fpp - b.fpp).abs()]
            .into_iter()
            .fold(0.0, f64::max);
        if gap > 1e-12 * scale {
            return Err(Error::Parse(format!("stored sample at t = {} disagrees with the re-solve by {gap:e}", b.t)));
        }
    }
    Ok(profile)
}

pub fn curvature_csv(cprof: &CurvatureProfile<'_>) -> CsvTable {
    let mut t = CsvTable::new(&["t", "Ktr", "Kdisk", "lambda", "m", "mu"]);
    t.rows = cprof.samples().iter().map(|s| vec![s.t, s.k_tr, s.k_disk, s.lambda, s.m, s.mu]).collect();
    t
}

/// Cut-off and its radial derivatives up to `spec.max_order()` on `points` samples of `[0, R]`.
pub fn cutoff_csv(spec: &CutoffSpec, points: usize) -> CsvTable {
    let k = spec.max_order();
    let mut header = vec!["t".to_string(), "chi".to_string()];
    header.extend((1..=k).map(|j| format!("chi_k{j}")));
    let mut table = CsvTable { header, rows: Vec::new() };
    let steps = points.max(2) - 1;
    for i in 0..=steps {
        let t = spec.radius() * i as f64 / steps as f64;
        table.rows.push((0..=k).map(|j| spec.radial_derivative(t, j)).fold(vec![t], |mut v, x| {
            v.push(x);
            v
        }));
    }
    table
}

#[derive(Debug, Clone, Serialize)]
struct TensorBody {
    dim: usize,
    /// `(a, b, c, d, R_abcd)` for `a < b`, `c < d`, nonzero entries only.
    coefficients: Vec<(usize, usize, usize, usize, f64)>,
}

pub fn tensor_json(r: &RiemannTensor) -> Result<Value> {
    document("riemann_tensor", TensorBody { dim: r.dim(), coefficients: r.coefficient_list() })
}

/// Minimal gnuplot script drawing columns `2..` of a CSV against column 1.
pub fn gnuplot_script(csv_path: &Path, table: &CsvTable, log_y: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set xlabel '{}'", table.header[0]);
    if log_y {
        let _ = writeln!(s, "set logscale y");
    }
    let plots: Vec<String> = (2..=table.header.len())
        .map(|c| format!("'{}' using 1:{} with lines", csv_path.display(), if log_y { format!("(abs(${c}))") } else { c.to_string() }))
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}
