//! Plain-text formats: CSV datasets, matrix and start files, run manifests.
//!
//! Every float is written with 17 significant digits so a value read back
//! is bit-identical to the one written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{BasinCensus, ConvergenceRun};
use crate::linalg::{DenseMatrix, SpdMatrix};
use crate::newton::NewtonTrace;

/// Round-trip decimal text for `v`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub const TRACE_HEADER: &str =
    "iter,res_F,res_xi,orth_defect,norm_K,norm_XS,norm_XOmega,inner_iters,inner_res";

pub fn trace_csv(trace: &NewtonTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.iter,
            fmt_f64(r.res_f),
            fmt_f64(r.res_xi),
            fmt_f64(r.orth_defect),
            fmt_f64(r.step.perp),
            fmt_f64(r.step.sym),
            fmt_f64(r.step.skew),
            r.inner_iters,
            fmt_f64(r.inner_res),
        );
    }
    out
}

/// `label,count` for every label in order, then the unclassified row.
pub fn census_csv(census: &BasinCensus) -> String {
    let mut out = String::from("label,count\n");
    for (label, count) in &census.counts {
        let _ = writeln!(out, "{label},{count}");
    }
    let _ = writeln!(out, "unclassified,{}", census.unclassified);
    out
}

pub fn convergence_csv(run: &ConvergenceRun) -> String {
    let mut out = String::from("iter,residual,error\n");
    for (k, (r, e)) in run.residuals.iter().zip(&run.errors).enumerate() {
        let _ = writeln!(out, "{k},{},{}", fmt_f64(*r), fmt_f64(*e));
    }
    out
}

fn parse_rows(text: &str, what: &str) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{what}: empty file")))?;
    let dims = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Parse(format!("{what}: bad header {header:?}: {e}")))?;
    let rows = lines
        .enumerate()
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("{what}: row {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((dims, rows))
}

fn assemble(rows: &[Vec<f64>], n: usize, p: usize, what: &str) -> Result<DenseMatrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != p) {
        return Err(Error::Parse(format!(
            "{what}: expected {n} rows of {p} values"
        )));
    }
    Ok(DenseMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

/// Parses the matrix format: first line `n`, then `n` rows of `n` numbers.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let (dims, rows) = parse_rows(text, "matrix file")?;
    let [n] = dims[..] else {
        return Err(Error::Parse(
            "matrix file: header must be a single integer n".into(),
        ));
    };
    assemble(&rows, n, n, "matrix file")
}

pub fn matrix_text(m: &DenseMatrix) -> String {
    let mut out = format!("{}\n", m.nrows());
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

/// A matrix file loaded and checked as SPD.
#[derive(Debug, Clone)]
pub struct LoadedMatrix {
    pub spd: SpdMatrix,
    /// `||M - M^T||_F` of the raw file contents.
    pub symmetry_defect: f64,
}

/// Reads a matrix file. `Error::Parse` for malformed text; the
/// `SpdMatrix` errors for a matrix that is not SPD with simple spectrum.
pub fn read_matrix_file(path: &Path) -> Result<LoadedMatrix> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let m = parse_matrix(&text)?;
    let spd = SpdMatrix::new(m)?;
    Ok(LoadedMatrix {
        symmetry_defect: spd.symmetry_defect(),
        spd,
    })
}

/// Parses a start file: first line `n p`, then `n` rows of `p` numbers.
pub fn parse_start(text: &str) -> Result<DenseMatrix> {
    let (dims, rows) = parse_rows(text, "x0 file")?;
    let [n, p] = dims[..] else {
        return Err(Error::Parse("x0 file: header must be `n p`".into()));
    };
    assemble(&rows, n, p, "x0 file")
}

pub fn start_text(x: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", x.nrows(), x.ncols());
    for row in x.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

pub fn read_start_file(path: &Path) -> Result<DenseMatrix> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_start(&text)
}

/// Everything needed to regenerate a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub seed: u64,
    /// Fully resolved configuration, defaults included.
    pub config: serde_json::Value,
    /// Output files, relative to `out_dir`.
    pub outputs: Vec<String>,
    pub out_dir: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64, config: serde_json::Value, out_dir: &Path) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            outputs: Vec::new(),
            out_dir: out_dir.display().to_string(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

/// Writes files into one directory and records them in a manifest.
pub struct OutputDir<'a> {
    root: &'a Path,
    manifest: RunManifest,
}

impl<'a> OutputDir<'a> {
    pub fn create(root: &'a Path, manifest: RunManifest) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self { root, manifest })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        fs::write(self.root.join(name), contents)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` last, listing every file written before it.
    pub fn finish(self) -> std::io::Result<RunManifest> {
        fs::write(self.root.join("manifest.json"), self.manifest.to_json())?;
        Ok(self.manifest)
    }
}
