use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rpca::{Error, Result};
use serde_json::{Value, json};
use tempfile::NamedTempFile;

/// Outputs of one command, held in memory until the command has succeeded.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Outputs { dir: dir.into(), files: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.push((name.into(), content));
    }

    /// Writes every file through a temporary sibling and a rename, then the manifest.
    pub fn commit(self, manifest: Manifest) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, content) in &self.files {
            let path = self.dir.join(name);
            write_atomic(&path, content.as_bytes())?;
            written.push(path);
        }
        let manifest = manifest.finish(&written);
        write_atomic(&self.dir.join("manifest.json"), manifest.as_bytes())?;
        Ok(written)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Run record: command, inputs, outputs, tool version and wall time.
pub struct Manifest {
    command: String,
    args: Vec<String>,
    model: Option<PathBuf>,
    seed: Option<u64>,
    extra: Vec<(String, Value)>,
    started: Instant,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            model: None,
            seed: None,
            extra: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn model(mut self, path: &Path, seed: u64) -> Self {
        self.model = Some(path.to_path_buf());
        self.seed = Some(seed);
        self
    }

    pub fn note(&mut self, key: &str, value: Value) {
        self.extra.push((key.to_string(), value));
    }

    pub fn finish(self, outputs: &[PathBuf]) -> String {
        let mut m = serde_json::Map::new();
        m.insert("command".into(), json!(self.command));
        m.insert("args".into(), json!(self.args));
        m.insert("model".into(), json!(self.model.map(|p| p.display().to_string())));
        m.insert("seed".into(), json!(self.seed));
        m.insert("outputs".into(), json!(outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>()));
        m.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("wall_time_s".into(), json!(self.started.elapsed().as_secs_f64()));
        for (k, v) in self.extra {
            m.insert(k, v);
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(m)).expect("manifest serializes");
        text.push('\n');
        text
    }
}
