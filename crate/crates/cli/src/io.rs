use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use lasso_augment::{Error, ErrorClass};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Lib(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Lib(e) => match e.class() {
                ErrorClass::Config => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("writing {}: {e}", path.display()))
}

/// Headerless numeric CSV as a row-major list of rows.
fn read_rows(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(open(path)?);
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Data(format!("{}: row {} has a non-numeric entry {v:?}", path.display(), i + 1)))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: empty file", path.display())));
    }
    Ok(rows)
}

pub fn read_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let rows = read_rows(path)?;
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(CliError::Data(format!("{}: ragged rows", path.display())));
    }
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

/// A vector stored either as one column or as one row.
pub fn read_vector(path: &Path) -> CliResult<Vec<f64>> {
    let rows = read_rows(path)?;
    if rows.len() == 1 {
        return Ok(rows.into_iter().next().unwrap());
    }
    if rows.iter().any(|r| r.len() != 1) {
        return Err(CliError::Data(format!("{}: expected a single column", path.display())));
    }
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

pub fn read_response(path: &Path) -> CliResult<DVector<f64>> {
    Ok(DVector::from_vec(read_vector(path)?))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string())).map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

/// One value per line.
pub fn write_column(path: &Path, v: &[f64]) -> CliResult<()> {
    let mut w = create(path)?;
    for x in v {
        writeln!(w, "{x}").map_err(|e| write_err(path, e))?;
    }
    w.flush().map_err(|e| write_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| write_err(path, e))?;
    writeln!(w).map_err(|e| write_err(path, e))?;
    w.flush().map_err(|e| write_err(path, e))
}

pub fn with_file<T>(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> lasso_augment::Result<T>) -> CliResult<T> {
    let mut w = create(path)?;
    let out = f(&mut w)?;
    w.flush().map_err(|e| write_err(path, e))?;
    Ok(out)
}

pub fn read_file(path: &Path) -> CliResult<BufReader<File>> {
    open(path)
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub library_version: &'static str,
    pub threads: Option<usize>,
    pub config: &'a C,
    pub outputs: Vec<String>,
}

/// `explicit`, or manifest.json in the directory of `beside`.
pub fn manifest_path(explicit: Option<&PathBuf>, beside: &Path) -> PathBuf {
    match explicit {
        Some(p) => p.clone(),
        None => beside.parent().unwrap_or(Path::new("")).join("manifest.json"),
    }
}

pub fn write_manifest<C: Serialize>(path: &Path, config: &C, threads: Option<usize>, outputs: &[&Path]) -> CliResult<()> {
    let m = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool: "alasso",
        tool_version: env!("CARGO_PKG_VERSION"),
        library_version: lasso_augment::VERSION,
        threads,
        config,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    write_json(path, &m)
}
