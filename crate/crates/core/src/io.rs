//! Matrix files, dataset manifests and result directories.
//!
//! Matrix file: a `"<rows> <cols>"` header line, then `rows` lines of `cols`
//! whitespace-separated values. Values are written as hexadecimal floats
//! (`-0x1.8p+3`) so a write/read cycle is bit-exact; plain decimal is also
//! accepted on read.
//!
//! Manifest: one `<relative-path>\t<label>` entry per line, relative to the
//! manifest's directory. The label column may be omitted for unlabeled
//! data. Blank lines and lines starting with `#` are skipped.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::clustering::ClusterLabels;
use crate::error::{Error, Result};
use crate::grassmann::{orthonormalize, GrassmannPoint};
use crate::linalg::Matrix;

/// Lowercase hexadecimal float literal that parses back to the same bits.
pub fn format_hex(x: f64) -> String {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 {
        (0, -1022)
    } else {
        (1, exp - 1023)
    };
    if frac == 0 {
        return format!("{sign}0x{lead}p{e:+}");
    }
    let digits = format!("{frac:013x}");
    format!("{sign}0x{lead}.{}p{e:+}", digits.trim_end_matches('0'))
}

/// Parses a hexadecimal or decimal float; non-finite values are rejected.
pub fn parse_value(token: &str) -> Option<f64> {
    let unsigned = token.trim_start_matches(['+', '-']);
    let value = if unsigned.starts_with("0x") || unsigned.starts_with("0X") {
        hexf_parse::parse_hexf64(token, false).ok()?
    } else {
        token.parse::<f64>().ok()?
    };
    value.is_finite().then_some(value)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based column.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace().map(move |t| {
        let offset = t.as_ptr() as usize - line.as_ptr() as usize;
        (line[..offset].chars().count() + 1, t)
    })
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    let (rows, cols) = loop {
        let Some((ln, line)) = lines.next() else {
            return Err(parse_error(path, 1, 1, "missing \"<rows> <cols>\" header"));
        };
        let head: Vec<(usize, &str)> = tokens(line).collect();
        if head.is_empty() {
            continue;
        }
        if head.len() != 2 {
            return Err(parse_error(
                path,
                ln + 1,
                1,
                "header must be \"<rows> <cols>\"",
            ));
        }
        let dim = |(col, t): (usize, &str)| {
            t.parse::<usize>()
                .map_err(|_| parse_error(path, ln + 1, col, format!("bad dimension '{t}'")))
        };
        break (dim(head[0])?, dim(head[1])?);
    };
    let expected = rows * cols;
    let mut values = Vec::with_capacity(expected);
    for (ln, line) in lines {
        for (col, t) in tokens(line) {
            let v = parse_value(t)
                .ok_or_else(|| parse_error(path, ln + 1, col, format!("bad value '{t}'")))?;
            values.push(v);
        }
    }
    if values.len() != expected {
        return Err(Error::DimensionMismatch {
            path: path.to_path_buf(),
            rows,
            cols,
            expected,
            found: values.len(),
        });
    }
    Ok(Matrix::from_row_slice(rows, cols, &values))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{}: refusing to write a matrix with non-finite entries",
            path.display()
        )));
    }
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format_hex(*v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    write_text(path, &out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub base_dir: PathBuf,
}

impl Manifest {
    /// `Some` only when every entry carries a label.
    pub fn labels(&self) -> Option<Vec<usize>> {
        self.entries.iter().map(|e| e.label).collect()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (ln, line) in text.lines().enumerate() {
        let ln = ln + 1;
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let rel = fields.next().unwrap_or("").trim();
        if rel.is_empty() {
            return Err(parse_error(path, ln, 1, "empty path"));
        }
        let label =
            match fields.next().map(str::trim) {
                None | Some("") => None,
                Some(t) => Some(t.parse::<usize>().map_err(|_| {
                    parse_error(path, ln, rel.len() + 2, format!("bad label '{t}'"))
                })?),
            };
        if fields.next().is_some() {
            return Err(parse_error(path, ln, 1, "expected \"<path>\\t<label>\""));
        }
        if !seen.insert(rel.to_string()) {
            return Err(parse_error(path, ln, 1, format!("duplicate entry '{rel}'")));
        }
        entries.push(ManifestEntry {
            path: PathBuf::from(rel),
            label,
        });
    }
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Manifest { entries, base_dir })
}

/// One sample set; columns of `samples` are vectorized samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSet {
    pub id: String,
    pub label: Option<usize>,
    pub samples: Matrix,
}

/// Reads every referenced matrix in manifest order; all sets must share `d`.
pub fn load_dataset(manifest: &Manifest) -> Result<Vec<ImageSet>> {
    let mut sets: Vec<ImageSet> = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let full = manifest.base_dir.join(&entry.path);
        let samples = read_matrix(&full)?;
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "{}: empty sample set",
                full.display()
            )));
        }
        if let Some(first) = sets.first() {
            if first.samples.nrows() != samples.nrows() {
                return Err(Error::InvalidInput(format!(
                    "{}: sample dimension {} differs from {} in {}",
                    full.display(),
                    samples.nrows(),
                    first.samples.nrows(),
                    first.id
                )));
            }
        }
        sets.push(ImageSet {
            id: entry.path.to_string_lossy().into_owned(),
            label: entry.label,
            samples,
        });
    }
    Ok(sets)
}

/// Subtracts each column's mean and divides by its standard deviation;
/// constant columns are only centered.
pub fn standardize_columns(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    let n = m.nrows() as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / n).sqrt();
        if sd > 0.0 {
            col /= sd;
        }
    }
    out
}

/// Span of the top `p` left singular vectors of the samples.
pub fn build_point(set: &ImageSet, p: usize, standardize: bool) -> Result<GrassmannPoint> {
    if standardize {
        orthonormalize(&standardize_columns(&set.samples), p)
    } else {
        orthonormalize(&set.samples, p)
    }
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let mut out = String::new();
    for l in labels {
        writeln!(out, "{l}").unwrap();
    }
    write_text(path.as_ref(), &out)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut labels = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let col = line.find(t).unwrap_or(0) + 1;
        labels.push(
            t.parse::<usize>()
                .map_err(|_| parse_error(path, ln + 1, col, format!("bad label '{t}'")))?,
        );
    }
    Ok(labels)
}

/// Ordered `key=value` lines.
pub type Report = Vec<(String, String)>;

pub fn write_report(path: impl AsRef<Path>, report: &[(String, String)]) -> Result<()> {
    let mut out = String::new();
    for (k, v) in report {
        writeln!(out, "{k}={v}").unwrap();
    }
    write_text(path.as_ref(), &out)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<Report> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_error(path, ln + 1, 1, "expected key=value"))?;
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultPaths {
    pub z: PathBuf,
    pub labels: PathBuf,
    pub report: PathBuf,
}

/// Writes `Z.mat`, `labels.txt` and `report.txt` into `dir`, creating it.
pub fn save_results(
    dir: impl AsRef<Path>,
    z: &Matrix,
    labels: &ClusterLabels,
    report: &[(String, String)],
) -> Result<ResultPaths> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ResultPaths {
        z: dir.join("Z.mat"),
        labels: dir.join("labels.txt"),
        report: dir.join("report.txt"),
    };
    write_matrix(&paths.z, z)?;
    write_labels(&paths.labels, labels.labels())?;
    write_report(&paths.report, report)?;
    Ok(paths)
}
