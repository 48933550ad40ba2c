//! Output directory handling. All files go through one [`OutputWriter`], which writes atomically
//! and keeps the manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    /// Relative to the output directory.
    pub path: String,
    pub format: Format,
    pub bytes: u64,
}

#[derive(Debug)]
pub struct OutputWriter {
    dir: PathBuf,
    formats: Vec<Format>,
    files: Vec<FileEntry>,
}

impl OutputWriter {
    pub fn create(dir: &Path, formats: &[Format]) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), formats: formats.to_vec(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn enabled(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    /// Writes `name` unless its format is disabled. Returns whether the file was written.
    pub fn write(&mut self, name: &str, format: Format, bytes: &[u8]) -> CliResult<bool> {
        if !self.enabled(format) {
            return Ok(false);
        }
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry { path: name.to_string(), format, bytes: bytes.len() as u64 });
        Ok(true)
    }

    pub fn write_csv(&mut self, name: &str, table: &CsvTable) -> CliResult<bool> {
        self.write(name, Format::Csv, &table.to_bytes())
    }

    /// Pretty JSON with a leading `schema_version` field.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<bool> {
        self.write(name, Format::Json, &to_versioned_json(value))
    }
}

pub fn to_versioned_json<T: Serialize>(value: &T) -> Vec<u8> {
    #[derive(Serialize)]
    struct Versioned<'a, T> {
        schema_version: u32,
        #[serde(flatten)]
        body: &'a T,
    }
    let mut out = serde_json::to_vec_pretty(&Versioned { schema_version: SCHEMA_VERSION, body: value })
        .expect("report types serialize");
    out.push(b'\n');
    out
}

/// Temp file in the same directory, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

/// Numeric table with a text column allowed in any position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| fmt17(*v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory csv");
        for r in &self.rows {
            w.write_record(r).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    }
}
