use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Failure;

/// A finished report, rendered once at the end of a command.
pub enum Report {
    Text(String),
    Json(serde_json::Value),
    Table { header: Vec<&'static str>, rows: Vec<Vec<String>> },
}

impl Report {
    pub fn render(&self) -> Result<String, Failure> {
        match self {
            Report::Text(s) => Ok(s.clone()),
            Report::Json(v) => Ok(serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"),
            Report::Table { header, rows } => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(header)?;
                for r in rows {
                    w.write_record(r)?;
                }
                let bytes = w.into_inner().map_err(|e| Failure::Internal(e.to_string()))?;
                Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
            }
        }
    }
}

/// `--out` resolved against `$ELUSION_OUT_DIR` when relative.
pub fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os("ELUSION_OUT_DIR") {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn write_to(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let p = resolve_out(p);
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
            }
            fs::write(&p, text).map_err(|e| Failure::io(&p, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}
