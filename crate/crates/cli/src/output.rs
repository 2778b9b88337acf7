use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    config_sha256: &'a str,
    cli_version: &'a str,
    core_version: &'a str,
    status: &'a str,
    files: &'a [FileEntry],
}

/// Every file written by a run goes through here so the manifest is complete.
pub struct Output {
    dir: PathBuf,
    files: Vec<FileEntry>,
    summary: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new(), summary: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> std::io::Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.files.push(FileEntry { name: name.to_string(), bytes: contents.len(), sha256: hex_digest(contents) });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> std::io::Result<()> {
        let mut s = header.join(",");
        s.push('\n');
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(fmt_f64).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        self.write(name, s.as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    /// Writes `summary.txt` and then `manifest.json`, which lists every other file.
    pub fn finish(mut self, experiment: &str, config_sha256: &str, status: &str) -> std::io::Result<()> {
        let mut text = format!("experiment: {experiment}\nstatus: {status}\nconfig sha256: {config_sha256}\n\n");
        for l in &self.summary {
            text.push_str(l);
            text.push('\n');
        }
        self.write("summary.txt", text.as_bytes())?;
        let m = Manifest {
            experiment,
            config_sha256,
            cli_version: env!("CARGO_PKG_VERSION"),
            core_version: repulse_core::VERSION,
            status,
            files: &self.files,
        };
        let mut s = serde_json::to_string_pretty(&m).map_err(std::io::Error::other)?;
        s.push('\n');
        std::fs::write(self.dir.join("manifest.json"), s)
    }
}
