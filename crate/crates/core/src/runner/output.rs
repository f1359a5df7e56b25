use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, Serializer};
use tempfile::NamedTempFile;

use crate::error::{Error, Result};

pub const TOOLKIT: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Scientific notation with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // inf / -inf / NaN
        x.to_string()
    }
}

/// Compact JSON, but every float goes through [`fmt_f64`].
struct SigDigits(CompactFormatter);

impl Formatter for SigDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, SigDigits(CompactFormatter));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Config(format!("serializing output: {e}")))?;
    buf.push(b'\n');
    Ok(buf)
}

/// Stamp carried by every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub toolkit: &'static str,
    pub version: &'static str,
    pub task: &'static str,
    pub config_hash: String,
}

impl Meta {
    pub fn csv_comment(&self) -> String {
        format!(
            "# {} {} task={} config_hash={}\n",
            self.toolkit, self.version, self.task, self.config_hash
        )
    }
}

/// CSV with a leading `#` comment line carrying the stamp.
pub struct CsvTable {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self, meta: &Meta) -> Result<Vec<u8>> {
        let mut buf = meta.csv_comment().into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let csv_err = |e: csv::Error| Error::Config(format!("writing CSV: {e}"));
            w.write_record(&self.header).map_err(csv_err)?;
            for row in &self.rows {
                w.write_record(row).map_err(csv_err)?;
            }
            w.flush().map_err(|e| Error::Config(format!("writing CSV: {e}")))?;
        }
        Ok(buf)
    }
}

/// Sibling path for a curve: `out.json` → `out.curve.csv`.
pub fn curve_path(output: &Path) -> PathBuf {
    output.with_extension("curve.csv")
}

/// Writes every file to a temp file next to its target, then renames them all
/// into place. Nothing is renamed unless every write succeeded.
pub fn write_atomically(artifacts: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    let mut staged = Vec::with_capacity(artifacts.len());
    for (path, bytes) in artifacts {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = NamedTempFile::new_in(dir).map_err(io(path))?;
        tmp.write_all(bytes).map_err(io(path))?;
        tmp.as_file().sync_all().map_err(io(path))?;
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e.error,
        })?;
    }
    Ok(())
}
