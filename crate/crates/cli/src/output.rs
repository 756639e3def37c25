//! Output directory layout: `report.toml`, one CSV per record series under
//! `series/`, and a `metadata.toml` sidecar that holds everything
//! run-dependent (timestamps, wall time, thread count).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use modelh::verifier::{ExperimentRecord, Series};
use serde::Serialize;

pub struct Output {
    dir: PathBuf,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    digest: &'a str,
    passed: bool,
    records: Vec<RecordEntry>,
}

#[derive(Serialize)]
struct RecordEntry {
    #[serde(flatten)]
    record: ExperimentRecord,
    /// Files under `series/` holding the record's time series.
    series_files: Vec<String>,
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    digest: &'a str,
    version: &'a str,
    unix_time: u64,
    wall_seconds: f64,
    threads: usize,
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

impl Output {
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> io::Result<()> {
        fs::write(self.dir.join(name), bytes)
    }

    fn write_series(&self, stem: &str, s: &Series) -> io::Result<String> {
        let name = format!("{stem}-{}.csv", file_stem(&s.name));
        let mut buf = Vec::new();
        s.write_csv(&mut buf)?;
        fs::create_dir_all(self.dir.join("series"))?;
        fs::write(self.dir.join("series").join(&name), buf)?;
        Ok(name)
    }

    /// Writes the structured report; series go to their own CSV files in
    /// record order, so identical records give identical bytes.
    pub fn report(&self, command: &str, digest: &str, records: &[ExperimentRecord]) -> io::Result<bool> {
        let mut entries = Vec::new();
        for (i, rec) in records.iter().enumerate() {
            let mut r = rec.clone();
            r.digest = digest.to_string();
            let stem = format!("{i:02}-{}", r.kind.name());
            let series_files = r.series.iter().map(|s| self.write_series(&stem, s)).collect::<io::Result<_>>()?;
            r.series.clear();
            entries.push(RecordEntry { record: r, series_files });
        }
        let passed = records.iter().all(|r| r.passed());
        let report = Report { command, digest, passed, records: entries };
        let text = toml::to_string(&report).map_err(io::Error::other)?;
        self.write("report.toml", text.as_bytes())?;
        Ok(passed)
    }

    pub fn metadata(&self, command: &str, digest: &str, wall_seconds: f64, threads: usize) -> io::Result<()> {
        let unix_time = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let m = Metadata { command, digest, version: env!("CARGO_PKG_VERSION"), unix_time, wall_seconds, threads };
        let text = toml::to_string(&m).map_err(io::Error::other)?;
        self.write("metadata.toml", text.as_bytes())
    }
}
