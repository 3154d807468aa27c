//! CSV files with `#` header lines.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Header lines shared by every file of one run.
#[derive(Debug, Clone)]
pub struct RunHeader {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
}

impl RunHeader {
    fn lines(&self) -> String {
        format!(
            "# vminmax {}\n# command {}\n# config_sha256 {}\n# seed {}\n# threads {}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.config_hash,
            self.seed,
            self.threads
        )
    }
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &RunHeader, columns: &[&str]) -> Self {
        let mut text = header.lines();
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, &self.text)?;
        Ok(path)
    }
}
