//! Deterministic CSV writing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::RunError;

/// Seventeen significant digits in scientific notation; `nan`, `inf` and
/// `-inf` for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{x:.16e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_owned(), fmt_f64)
}

pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self, RunError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| RunError::io(&path, e))?;
        let mut w = Self {
            path,
            out: BufWriter::new(file),
        };
        w.line(&header.join(","))?;
        Ok(w)
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), RunError> {
        self.line(&fields.join(","))
    }

    pub fn line(&mut self, text: &str) -> Result<(), RunError> {
        self.out
            .write_all(text.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(|e| RunError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, RunError> {
        self.out.flush().map_err(|e| RunError::io(&self.path, e))?;
        Ok(self.path)
    }
}
