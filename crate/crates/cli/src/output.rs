use anyhow::{Context, Result};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const SCHEMA_VERSION: u32 = 1;

pub fn unix_time() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// CSV text: a `#` timestamp line followed by a header and the data rows.
pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut out = format!("# generated_unix={}\n", unix_time()).into_bytes();
    out.extend(csv_rows(rows)?.into_bytes());
    Ok(String::from_utf8(out)?)
}

/// Header and data rows only.
pub fn csv_rows<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Writes to `path`, or to stdout when `path` is absent or `-`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) if p != Path::new("-") => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        _ => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub subcommand: &'a str,
    pub args: &'a [String],
    pub master_seed: Option<u64>,
    pub version: &'a str,
    pub workers: usize,
    pub wall_time_secs: f64,
    pub started_unix: u64,
    pub outputs: Vec<PathBuf>,
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

pub fn write_manifest(path: &Path, m: &Manifest) -> Result<()> {
    emit(Some(path), &(serde_json::to_string_pretty(m)? + "\n"))
}
