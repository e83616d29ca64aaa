use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::failure::Failure;

pub const RUN_MANIFEST: &str = "run.toml";

/// Output directory whose files are never replaced without `--force`.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    /// Claims `names` (plus the run manifest) inside `root`.
    pub fn claim(root: &Path, force: bool, names: &[&str]) -> Result<Self, Failure> {
        if !force {
            for name in names.iter().chain([&RUN_MANIFEST]) {
                let path = root.join(name);
                if path.exists() {
                    return Err(Failure::Input(format!(
                        "{} exists; pass --force to overwrite",
                        path.display()
                    )));
                }
            }
        }
        std::fs::create_dir_all(root).map_err(|e| Failure::Input(format!("{}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.path(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<(), Failure> {
        let text = toml::to_string(manifest).map_err(|e| Failure::Input(format!("run manifest: {e}")))?;
        std::fs::write(self.path(RUN_MANIFEST), text)
            .map_err(|e| Failure::Input(format!("{}: {e}", self.path(RUN_MANIFEST).display())))
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub n: Option<usize>,
    pub dim: Option<usize>,
    pub seed: u64,
    pub out: String,
    pub config: toml::Table,
}

impl RunManifest {
    pub fn new(subcommand: &str, out: &Path) -> Self {
        Self {
            subcommand: subcommand.into(),
            inputs: Vec::new(),
            n: None,
            dim: None,
            seed: 0,
            out: out.display().to_string(),
            config: toml::Table::new(),
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn grid(mut self, n: Option<usize>, dim: Option<usize>) -> Self {
        self.n = n;
        self.dim = dim;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn set(mut self, key: &str, value: impl Into<toml::Value>) -> Self {
        self.config.insert(key.into(), value.into());
        self
    }

    pub fn config_of<T: Serialize>(mut self, key: &str, value: &T) -> Result<Self, Failure> {
        let v = toml::Value::try_from(value).map_err(|e| Failure::Input(format!("run manifest: {e}")))?;
        self.config.insert(key.into(), v);
        Ok(self)
    }
}
