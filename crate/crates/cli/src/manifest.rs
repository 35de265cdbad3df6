use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::files::{parse_waveform, WaveformFile};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const TOOL_NAME: &str = "wavemetro";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-execute a run: the normalized argument vector,
/// the parsed parameters, the seed and digests of every file read or
/// written. Output paths are relative to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    /// Directory relative input paths were resolved against.
    pub cwd: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::invalid(format!("{}: not a run manifest: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// State of one invocation: where inputs are resolved from, where outputs
/// go, and the digests collected along the way.
pub struct Run {
    base: PathBuf,
    out: Option<PathBuf>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl Run {
    /// Prepares the output directory, refusing to reuse a non-empty one
    /// unless `force` is set.
    pub fn new(base: PathBuf, out: Option<PathBuf>, force: bool) -> CliResult<Self> {
        if let Some(dir) = &out {
            if dir.exists() {
                if !dir.is_dir() {
                    return Err(CliError::invalid(format!("output path {} is not a directory", dir.display())));
                }
                let occupied = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?.next().is_some();
                if occupied && !force {
                    return Err(CliError::invalid(format!(
                        "output directory {} is not empty; pass --force to overwrite",
                        dir.display()
                    )));
                }
            }
        }
        Ok(Self {
            base,
            out,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn has_out(&self) -> bool {
        self.out.is_some()
    }

    pub fn require_out(&self, what: &str) -> CliResult<()> {
        match self.out {
            Some(_) => Ok(()),
            None => Err(CliError::invalid(format!("{what} writes files; pass --out <DIR>"))),
        }
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base.join(path)
        }
    }

    pub fn read_bytes(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let full = self.resolve(path);
        let bytes = fs::read(&full).map_err(|e| CliError::io(&full, e))?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &Path) -> CliResult<String> {
        let bytes = self.read_bytes(path)?;
        String::from_utf8(bytes).map_err(|_| CliError::invalid(format!("{}: not UTF-8 text", path.display())))
    }

    pub fn read_waveform(&mut self, path: &Path) -> CliResult<WaveformFile> {
        let text = self.read_text(path)?;
        parse_waveform(&text, &path.display().to_string())
    }

    /// Writes `name` (relative, may contain directories) into the output
    /// directory and records its digest.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let dir = self
            .out
            .as_ref()
            .ok_or_else(|| CliError::invalid(format!("cannot write {name}: no --out directory")))?;
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Writes the manifest when an output directory is in use.
    pub fn finish(
        self,
        subcommand: &str,
        argv: Vec<String>,
        params: serde_json::Value,
        seed: Option<u64>,
    ) -> CliResult<Option<RunManifest>> {
        let Some(dir) = self.out.clone() else {
            return Ok(None);
        };
        let manifest = RunManifest {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            subcommand: subcommand.into(),
            argv,
            params,
            seed,
            cwd: self.base.display().to_string(),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let path = dir.join(MANIFEST_NAME);
        fs::write(&path, manifest.to_json()).map_err(|e| CliError::io(&path, e))?;
        Ok(Some(manifest))
    }
}
