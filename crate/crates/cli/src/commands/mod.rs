//! One module per subcommand. Each exposes its documented settings and a
//! `run` that writes its outputs and reports whether its checks passed.

pub mod density;
pub mod dims;
pub mod family;
pub mod moments;
pub mod predict;
pub mod rmt;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::settings::Settings;

/// Whether a command's checks passed, plus a one-line summary for stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
}

/// A JSON report together with the resolved configuration that produced it.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config: &'a BTreeMap<String, String>,
    pass: bool,
    result: &'a T,
}

/// The output directory of one run.
pub struct Output {
    dir: PathBuf,
    command: &'static str,
}

impl Output {
    /// Creates the directory and echoes the resolved settings as
    /// `<command>.config`, which can be fed back through `--config`.
    pub fn create(command: &'static str, settings: &Settings) -> Result<Self> {
        let dir = PathBuf::from(settings.raw("out"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let out = Output { dir, command };
        out.write(&format!("{command}.config"), settings.to_flat().as_bytes())?;
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))
    }

    /// Writes through a buffered file handle.
    pub fn write_with<F>(&self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.path(name);
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = std::io::BufWriter::new(file);
        fill(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush().with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_report<T: Serialize>(&self, name: &str, settings: &Settings, pass: bool, result: &T) -> Result<()> {
        let envelope = Envelope {
            command: self.command,
            config: settings.values(),
            pass,
            result,
        };
        let mut text = serde_json::to_string_pretty(&envelope)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}
