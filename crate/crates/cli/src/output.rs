//! Output tracking: every file a command writes is registered so a failing
//! command can remove its partial outputs, and every file embeds the
//! version, config hash, and seed.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl RunMeta {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Self {
            version: VERSION.to_string(),
            config_hash,
            seed,
        }
    }

    pub fn csv_header(&self) -> String {
        format!(
            "# generated-by: hpiconv {}\n# config-hash: {}\n# seed: {}\n",
            self.version, self.config_hash, self.seed
        )
    }

    pub fn svg_desc(&self) -> String {
        format!(
            "generated-by: hpiconv {}; config-hash: {}; seed: {}",
            self.version, self.config_hash, self.seed
        )
    }
}

pub struct OutputSet {
    dir: PathBuf,
    meta: RunMeta,
    written: Vec<PathBuf>,
}

impl OutputSet {
    pub fn new(dir: PathBuf, meta: RunMeta) -> Result<Self> {
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir,
            meta,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn meta(&self) -> &RunMeta {
        &self.meta
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn register(&mut self, path: PathBuf) -> PathBuf {
        self.written.push(path.clone());
        path
    }

    /// Write a CSV body under the meta comment header.
    pub fn write_csv(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let content = format!("{}{}", self.meta.csv_header(), body);
        std::fs::write(&path, content)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(self.register(path))
    }

    /// Write a JSON document wrapped as {"meta": ..., "data": ...}.
    pub fn write_json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Document<'a, T> {
            meta: &'a RunMeta,
            data: &'a T,
        }
        let path = self.dir.join(name);
        let doc = Document {
            meta: &self.meta,
            data,
        };
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        std::fs::write(&path, text)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(self.register(path))
    }

    /// Write raw text (SVG or already-assembled documents).
    pub fn write_text(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, body)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(self.register(path))
    }

    /// Remove everything written so far (called on command failure).
    pub fn remove_partial(&mut self) {
        for path in self.written.drain(..) {
            let _ = std::fs::remove_file(&path);
        }
    }
}

/// Make a series label safe for use inside a file name.
pub fn safe_name(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}
