//! CSV/JSON writers that record a sha256 digest of everything they emit,
//! plus the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub struct Run {
    dir: PathBuf,
    started: Instant,
    command: String,
    config: Value,
    threads: usize,
    outputs: Vec<(String, String)>,
    timings: Vec<(String, f64)>,
}

impl Run {
    pub fn new(dir: &Path, command: &str, config: Value, threads: usize) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            command: command.into(),
            config,
            threads,
            outputs: Vec::new(),
            timings: Vec::new(),
        })
    }

    pub fn time(&mut self, label: &str, since: Instant) {
        self.timings.push((label.into(), since.elapsed().as_secs_f64()));
    }

    fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push((name.into(), hex::encode(Sha256::digest(bytes))));
        Ok(())
    }

    /// `#`-prefixed `key: value` lines, then a header and the rows.
    pub fn csv<R, I>(&mut self, name: &str, meta: &[(&str, String)], header: &[&str], rows: I) -> Result<()>
    where
        R: IntoIterator<Item = String>,
        I: IntoIterator<Item = R>,
    {
        let mut buf = Vec::new();
        for (k, v) in meta {
            buf.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row.into_iter().collect::<Vec<_>>())?;
            }
            w.flush()?;
        }
        self.emit(name, &buf)
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.emit(name, &bytes)
    }

    /// Writes `manifest.json`; it is the only file with wall times.
    pub fn finish(self) -> Result<PathBuf> {
        let manifest = json!({
            "command": self.command,
            "argv": std::env::args().collect::<Vec<_>>(),
            "version": env!("CARGO_PKG_VERSION"),
            "threads": self.threads,
            "config": self.config,
            "outputs": self.outputs.iter().map(|(f, d)| json!({"file": f, "sha256": d})).collect::<Vec<_>>(),
            "timings": self.timings.iter().map(|(l, s)| json!({"step": l, "seconds": s})).collect::<Vec<_>>(),
            "wall_seconds": self.started.elapsed().as_secs_f64(),
        });
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_vec_pretty(&manifest)?)?;
        Ok(path)
    }
}

pub fn f(x: f64) -> String {
    format!("{x}")
}
