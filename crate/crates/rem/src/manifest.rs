//! Run manifests: everything needed to repeat a command and check that its
//! outputs came out the same.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ConfigFile;
use crate::error::{RemError, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const TOOL: &str = "rem";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Master seed, when the command is seeded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub workers: usize,
    pub started: String,
    pub finished: String,
    /// Every option of the command, defaults included.
    pub invocation: toml::Table,
    /// SHA-256 of each input file, keyed by path.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of each output file, keyed by file name (`output` for
    /// commands writing a single file).
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
    /// Fully resolved campaign config (`run` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigFile>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Hex SHA-256 of a file's contents.
pub fn digest_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| RemError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| RemError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, workers: usize, invocation: toml::Table, started: String) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            workers,
            started,
            finished: String::new(),
            invocation,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            config: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), digest_file(path)?);
        Ok(())
    }

    /// Records `path` under its file name.
    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        self.add_output_as(&name, path)
    }

    pub fn add_output_as(&mut self, key: &str, path: &Path) -> Result<()> {
        self.outputs.insert(key.into(), digest_file(path)?);
        Ok(())
    }

    pub fn write(&mut self, path: &Path) -> Result<()> {
        self.finished = now();
        let text = toml::to_string(self).map_err(|e| RemError::parse(path, e))?;
        crate::error::write(path, text)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = crate::error::read_to_string(path)?;
        let manifest: Self = toml::from_str(&text).map_err(|e| RemError::parse(path, e.message()))?;
        if manifest.tool != TOOL {
            return Err(RemError::parse(path, format!("not a {TOOL} manifest")));
        }
        Ok(manifest)
    }

    /// Input files whose contents changed since the manifest was written.
    pub fn changed_inputs(&self) -> Vec<String> {
        self.inputs
            .iter()
            .filter(|(path, digest)| digest_file(Path::new(path)).ok().as_ref() != Some(*digest))
            .map(|(path, _)| path.clone())
            .collect()
    }

    /// Output files whose digest differs from `other`'s.
    pub fn differing_outputs(&self, other: &Manifest) -> Vec<String> {
        let mut names: Vec<String> = self.outputs.keys().chain(other.outputs.keys()).cloned().collect();
        names.sort();
        names.dedup();
        names.into_iter().filter(|n| self.outputs.get(n) != other.outputs.get(n)).collect()
    }
}

/// Where a command writing a single file keeps its manifest.
pub fn sidecar_path(output: &Path) -> std::path::PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        std::fs::write(&input, "abc").unwrap();
        let mut invocation = toml::Table::new();
        invocation.insert("shots".into(), toml::Value::Integer(64));
        let mut m = Manifest::new("run", Some(9), 4, invocation, now());
        m.add_input(&input).unwrap();
        assert_eq!(
            m.inputs.values().next().unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let path = dir.path().join(MANIFEST_FILE);
        m.write(&path).unwrap();
        assert_eq!(Manifest::read(&path).unwrap(), m);
        assert!(m.changed_inputs().is_empty());
        std::fs::write(&input, "abd").unwrap();
        assert_eq!(m.changed_inputs().len(), 1);
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar_path(Path::new("out/model.csv")), Path::new("out/model.csv.manifest.toml"));
    }
}
