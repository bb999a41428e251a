//! Matrix CSV files, the packed draws file, checksums and manifests.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";
pub const DRAWS_FILE: &str = "draws.bin";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `body` to `dir/name`, creating `dir` if needed.
pub fn write_output(dir: &Path, name: &str, body: &[u8]) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// One row per matrix row, 17 significant digits per entry.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 24);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Parses a numeric CSV into a matrix.
///
/// A first row with no numeric field is taken as a header. Every other row
/// must have the same number of fields, all of them finite numbers.
pub fn read_matrix_csv(path: &Path) -> CliResult<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if line == 0 && record.iter().all(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, f)| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::data(format!(
                    "{}: line {}, column {}: '{f}' is not a finite number",
                    path.display(),
                    line + 1,
                    col + 1
                ))),
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::data(format!(
                    "{}: line {} has {} fields, expected {}",
                    path.display(),
                    line + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(CliError::data(format!("{}: no numeric rows", path.display())));
    }
    let p = rows[0].len();
    Ok(DMatrix::from_row_iterator(rows.len(), p, rows.into_iter().flatten()))
}

/// Number of stored values per draw: the upper triangle with the diagonal.
pub fn packed_len(p: usize) -> usize {
    p * (p + 1) / 2
}

/// Appends the row-major upper triangle of `m` as little-endian `f64`.
pub fn pack_upper(m: &DMatrix<f64>, out: &mut Vec<u8>) {
    let p = m.nrows();
    for i in 0..p {
        for j in i..p {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
}

/// Inverse of repeated [`pack_upper`] calls.
pub fn unpack_draws(bytes: &[u8], p: usize, count: usize) -> CliResult<Vec<DMatrix<f64>>> {
    let per = packed_len(p) * 8;
    if bytes.len() != per * count {
        return Err(CliError::data(format!(
            "draws file holds {} bytes, expected {count} draws of {per} bytes",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(per)
        .map(|chunk| {
            let mut values = chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap()));
            let mut m = DMatrix::zeros(p, p);
            for i in 0..p {
                for j in i..p {
                    let v = values.next().unwrap();
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            m
        })
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Layout of the packed draws file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DrawsLayout {
    pub file: String,
    pub encoding: String,
    pub layout: String,
    pub p: usize,
    pub count: usize,
    pub values_per_draw: usize,
}

impl DrawsLayout {
    pub fn new(p: usize, count: usize) -> Self {
        Self {
            file: DRAWS_FILE.into(),
            encoding: "little-endian IEEE-754 f64".into(),
            layout: "draws in order; each draw is its upper triangle, diagonal included, row-major".into(),
            p,
            count,
            values_per_draw: packed_len(p),
        }
    }
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub files: Vec<FileEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub draws: Option<DrawsLayout>,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, seed: Option<u64>, config: &C) -> CliResult<Self> {
        let config = serde_json::to_value(config).map_err(|e| CliError::config(e.to_string()))?;
        let config_hash = sha256_hex(config.to_string().as_bytes());
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            config_hash,
            files: Vec::new(),
            draws: None,
        })
    }

    /// Writes an output file and records its checksum.
    pub fn write(&mut self, dir: &Path, name: &str, body: &[u8]) -> CliResult<PathBuf> {
        let path = write_output(dir, name, body)?;
        self.files.push(FileEntry { name: name.into(), sha256: sha256_hex(body), bytes: body.len() as u64 });
        Ok(path)
    }

    /// Records a file written by someone else.
    pub fn record(&mut self, path: &Path) -> CliResult<()> {
        let body = fs::read(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        self.files.push(FileEntry { name, sha256: sha256_hex(&body), bytes: body.len() as u64 });
        Ok(())
    }

    pub fn save(&self, dir: &Path, name: &str) -> CliResult<PathBuf> {
        let mut body = serde_json::to_vec_pretty(self).map_err(|e| CliError::config(e.to_string()))?;
        body.push(b'\n');
        write_output(dir, name, &body)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let body = fs::read(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_slice(&body).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    /// Reads `dir/name` and checks it against the recorded checksum.
    pub fn read_verified(&self, dir: &Path, name: &str) -> CliResult<Vec<u8>> {
        let entry = self
            .files
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| CliError::data(format!("manifest has no entry for {name}")))?;
        let path = dir.join(name);
        let body = fs::read(&path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        let actual = sha256_hex(&body);
        if actual != entry.sha256 {
            return Err(CliError::data(format!(
                "checksum mismatch for {}: manifest {}, file {actual}",
                path.display(),
                entry.sha256
            )));
        }
        Ok(body)
    }
}
