//! Versioned file formats.
//!
//! Everything on disk is JSON with a `"schema": "paramode/1"` marker.
//! Coefficients and right-hand sides are stored as canonical expression
//! strings, regions as their structural fields, so files round-trip
//! byte-identically through a load/save cycle.  Sampled fields go out as CSV
//! with 17 significant digits (enough to reconstruct every `f64` bit-exactly).

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::Region;
use crate::expr::Expr;
use crate::operators::{LinearSystem, OperatorError, ScalarOperator};

pub const SCHEMA: &str = "paramode/1";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Carries serde_json's line/column diagnostics.
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: unsupported schema {found:?} (expected {SCHEMA:?})")]
    Schema { path: PathBuf, found: String },
    #[error("{path}: {source}")]
    Operator {
        path: PathBuf,
        source: OperatorError,
    },
}

fn check_schema(path: &Path, schema: &str) -> Result<(), IoError> {
    if schema == SCHEMA {
        Ok(())
    } else {
        Err(IoError::Schema {
            path: path.to_path_buf(),
            found: schema.to_string(),
        })
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| IoError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Serialize `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Regions.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionFile {
    pub schema: String,
    #[serde(flatten)]
    pub region: Region,
}

pub fn load_region(path: &Path) -> Result<Region, IoError> {
    let file: RegionFile = read_json(path)?;
    check_schema(path, &file.schema)?;
    Ok(file.region)
}

pub fn save_region(path: &Path, region: &Region) -> Result<(), IoError> {
    write_json(
        path,
        &RegionFile {
            schema: SCHEMA.to_string(),
            region: region.clone(),
        },
    )
}

/// A region given inline or as a path relative to the referring file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionSpec {
    Path(String),
    Inline(Region),
}

impl RegionSpec {
    /// Resolve to a concrete region; `base` is the directory of the file the
    /// spec came from.
    pub fn resolve(&self, base: &Path) -> Result<Region, IoError> {
        match self {
            RegionSpec::Inline(region) => Ok(region.clone()),
            RegionSpec::Path(rel) => load_region(&base.join(rel)),
        }
    }
}

// ---------------------------------------------------------------------------
// Scalar problems.
// ---------------------------------------------------------------------------

/// A scalar equation `g_p u_p + ... + g_0 u = f` over a region.
///
/// `coefficients` lists `g_0 .. g_p` as canonical expression strings; a
/// missing `rhs` means the homogeneous equation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub schema: String,
    pub region: RegionSpec,
    pub coefficients: Vec<Expr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rhs: Option<Expr>,
}

impl ProblemFile {
    pub fn inline(region: Region, op: &ScalarOperator, rhs: Option<Expr>) -> ProblemFile {
        ProblemFile {
            schema: SCHEMA.to_string(),
            region: RegionSpec::Inline(region),
            coefficients: op.coeffs.clone(),
            rhs,
        }
    }
}

/// A loaded scalar problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub region: Region,
    pub op: ScalarOperator,
    pub rhs: Option<Expr>,
}

pub fn load_problem(path: &Path) -> Result<Problem, IoError> {
    let file: ProblemFile = read_json(path)?;
    check_schema(path, &file.schema)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let region = file.region.resolve(base)?;
    let op = ScalarOperator::new(file.coefficients).map_err(|source| IoError::Operator {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(Problem {
        region,
        op,
        rhs: file.rhs,
    })
}

pub fn save_problem(path: &Path, file: &ProblemFile) -> Result<(), IoError> {
    write_json(path, file)
}

// ---------------------------------------------------------------------------
// First-order systems.
// ---------------------------------------------------------------------------

/// A system `v_x = A(t,x) v + F(t,x)` over a region; a missing `forcing`
/// means the homogeneous system.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemFile {
    pub schema: String,
    pub region: RegionSpec,
    pub matrix: Vec<Vec<Expr>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forcing: Option<Vec<Expr>>,
}

impl SystemFile {
    pub fn inline(region: Region, sys: &LinearSystem) -> SystemFile {
        let forcing = if sys.f.iter().all(|e| *e == Expr::Num(0.0)) {
            None
        } else {
            Some(sys.f.clone())
        };
        SystemFile {
            schema: SCHEMA.to_string(),
            region: RegionSpec::Inline(region),
            matrix: sys.a.clone(),
            forcing,
        }
    }
}

pub fn load_system(path: &Path) -> Result<(Region, LinearSystem), IoError> {
    let file: SystemFile = read_json(path)?;
    check_schema(path, &file.schema)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let region = file.region.resolve(base)?;
    let dim = file.matrix.len();
    let forcing = file
        .forcing
        .unwrap_or_else(|| vec![Expr::num(0.0); dim]);
    let sys = LinearSystem::new(file.matrix, forcing).map_err(|source| IoError::Operator {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((region, sys))
}

pub fn save_system(path: &Path, file: &SystemFile) -> Result<(), IoError> {
    write_json(path, file)
}

// ---------------------------------------------------------------------------
// CSV.
// ---------------------------------------------------------------------------

/// Format one value with 17 significant digits, enough for exact `f64`
/// round-trips.
pub fn csv_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a CSV table with '\n' line endings.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = Vec::new();
    writeln!(out, "{}", header.join(",")).expect("in-memory write");
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| csv_number(v)).collect();
        writeln!(out, "{}", cells.join(",")).expect("in-memory write");
    }
    fs::write(path, out).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })
}
