//! Campaign configuration files (TOML).
//!
//! A config leaves many fields to defaults or to seeded draws. Resolving it
//! produces an equivalent, fully explicit [`ConfigFile`] that is written into
//! the run manifest; loading that manifest as a config reproduces the run.
//!
//! ```toml
//! seed = 7
//! qubits = 3
//! experiments = 1000
//! shots = [64, 128, 256, 512, 1024, 2048, 4096, 8192]
//! operator_mask = 7
//! truncation = "full"
//! sampling = "shots"
//!
//! [noise]
//! random = [0.03, 0.10]
//!
//! [mitigation]
//! source = "calibrated"
//! calibration_shots = 8192
//! per_batch = false
//! ```

use std::path::{Path, PathBuf};

use rem_core::calibration::DEFAULT_CALIBRATION_SHOTS;
use rem_core::model::{
    BitFlipModel, ExperimentConfig, ModelSource, PauliZString, QubitFlip, Sampling, Truncation,
};
use rem_core::rng::{derive_seed, stream};
use rem_core::sim::random_angles;
use serde::{Deserialize, Serialize};

use crate::error::{RemError, Result};
use crate::formats::read_model;

pub const DEFAULT_EXPERIMENTS: usize = 1000;

const ANGLE_TAG: u64 = 0x616e_676c_6573;
const NOISE_TAG: u64 = 0x6e6f_6973_65;

pub fn default_shot_grid() -> Vec<u64> {
    (6..=13).map(|k| 1u64 << k).collect()
}

fn default_experiments() -> usize {
    DEFAULT_EXPERIMENTS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    #[default]
    Full,
}

/// `"full"` or a flip order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruncationField {
    Order(usize),
    Keyword(Keyword),
}

impl Default for TruncationField {
    fn default() -> Self {
        Self::Keyword(Keyword::Full)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingField {
    #[default]
    Shots,
    Exact,
}

/// The simulated device's readout channel. At most one form may be given;
/// none means a noiseless device.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<Vec<f64>>,
    /// Same `p0 = p1 = p` on every qubit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<f64>,
    /// Every probability drawn uniformly from `[low, high)` using the seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<[f64; 2]>,
    /// A model CSV file, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceField {
    /// Invert the device channel itself.
    #[default]
    Device,
    /// Invert a given model (`model` file or `p0`/`p1` lists).
    Model,
    /// Calibrate the simulated device first.
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationSection {
    #[serde(default)]
    pub source: SourceField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_batch: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: u64,
    pub qubits: usize,
    #[serde(default = "default_experiments")]
    pub experiments: usize,
    #[serde(default = "default_shot_grid")]
    pub shots: Vec<u64>,
    /// Z-support of the studied operator, bit q = qubit q. Defaults to all Z.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator_mask: Option<usize>,
    /// Ansatz angles. Drawn uniformly from `[0, 2π)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    #[serde(default)]
    pub truncation: TruncationField,
    #[serde(default)]
    pub sampling: SamplingField,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub mitigation: MitigationSection,
}

/// A config after defaults, seeded draws and file references are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    /// Fully explicit form, suitable for a manifest.
    pub file: ConfigFile,
    pub experiment: ExperimentConfig,
    /// Files the config referenced.
    pub inputs: Vec<PathBuf>,
}

fn invalid(message: impl Into<String>) -> RemError {
    RemError::Invalid(message.into())
}

fn pairs(p0: &Option<Vec<f64>>, p1: &Option<Vec<f64>>, qubits: usize, section: &str) -> Result<Option<BitFlipModel>> {
    match (p0, p1) {
        (None, None) => Ok(None),
        (Some(p0), Some(p1)) => {
            if p0.len() != qubits || p1.len() != qubits {
                return Err(invalid(format!(
                    "[{section}] p0 and p1 need {qubits} entries, found {} and {}",
                    p0.len(),
                    p1.len()
                )));
            }
            let flips = p0.iter().zip(p1).map(|(&a, &b)| QubitFlip::new(a, b)).collect();
            Ok(Some(BitFlipModel::new(flips)?))
        }
        _ => Err(invalid(format!("[{section}] needs both p0 and p1"))),
    }
}

fn split(model: &BitFlipModel) -> (Option<Vec<f64>>, Option<Vec<f64>>) {
    (Some(model.flips().iter().map(|f| f.p0).collect()), Some(model.flips().iter().map(|f| f.p1).collect()))
}

fn relative(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn resolve_noise(section: &NoiseSection, config: &ConfigFile, base: &Path, inputs: &mut Vec<PathBuf>) -> Result<BitFlipModel> {
    let qubits = config.qubits;
    let given = [section.p0.is_some() || section.p1.is_some(), section.symmetric.is_some(), section.random.is_some(), section.model.is_some()];
    if given.iter().filter(|&&g| g).count() > 1 {
        return Err(invalid("[noise] takes only one of p0/p1, symmetric, random, model"));
    }
    if let Some(model) = pairs(&section.p0, &section.p1, qubits, "noise")? {
        return Ok(model);
    }
    if let Some(p) = section.symmetric {
        return Ok(BitFlipModel::symmetric(qubits, p)?);
    }
    if let Some([low, high]) = section.random {
        if !(0.0 <= low && low <= high && high < 1.0) {
            return Err(invalid(format!("[noise] random range [{low}, {high}) must lie in [0, 1)")));
        }
        let mut rng = stream(derive_seed(&[config.seed, NOISE_TAG]), 0);
        return Ok(BitFlipModel::random(qubits, low, high, &mut rng)?);
    }
    if let Some(path) = &section.model {
        let path = relative(base, path);
        let model = read_model(&path)?;
        inputs.push(path);
        return Ok(model);
    }
    Ok(BitFlipModel::noiseless(qubits)?)
}

fn resolve_mitigation(
    section: &MitigationSection,
    qubits: usize,
    base: &Path,
    inputs: &mut Vec<PathBuf>,
) -> Result<(ModelSource, MitigationSection)> {
    let explicit = section.p0.is_some() || section.p1.is_some() || section.model.is_some();
    let calibration = section.calibration_shots.is_some() || section.per_batch.is_some();
    match section.source {
        SourceField::Device => {
            if explicit || calibration {
                return Err(invalid("[mitigation] source = \"device\" takes no further keys"));
            }
            Ok((ModelSource::Device, MitigationSection::default()))
        }
        SourceField::Model => {
            if calibration {
                return Err(invalid("[mitigation] calibration keys need source = \"calibrated\""));
            }
            let model = match (&section.model, pairs(&section.p0, &section.p1, qubits, "mitigation")?) {
                (Some(_), Some(_)) => return Err(invalid("[mitigation] takes a model file or p0/p1, not both")),
                (None, Some(model)) => model,
                (Some(path), None) => {
                    let path = relative(base, path);
                    let model = read_model(&path)?;
                    inputs.push(path);
                    model
                }
                (None, None) => return Err(invalid("[mitigation] source = \"model\" needs a model file or p0/p1")),
            };
            if model.qubit_count() != qubits {
                return Err(invalid(format!("mitigation model has {} qubits, config has {qubits}", model.qubit_count())));
            }
            let (p0, p1) = split(&model);
            let resolved = MitigationSection { source: SourceField::Model, p0, p1, ..Default::default() };
            Ok((ModelSource::Explicit(model), resolved))
        }
        SourceField::Calibrated => {
            if explicit {
                return Err(invalid("[mitigation] source = \"calibrated\" takes no model"));
            }
            let shots = section.calibration_shots.unwrap_or(DEFAULT_CALIBRATION_SHOTS);
            let per_batch = section.per_batch.unwrap_or(false);
            let resolved = MitigationSection {
                source: SourceField::Calibrated,
                calibration_shots: Some(shots),
                per_batch: Some(per_batch),
                ..Default::default()
            };
            Ok((ModelSource::Calibrated { shots, per_batch }, resolved))
        }
    }
}

/// Resolves `config`; relative file references are taken from `base`.
pub fn resolve(config: &ConfigFile, base: &Path) -> Result<ResolvedConfig> {
    let qubits = config.qubits;
    let mut inputs = Vec::new();
    let device_noise = resolve_noise(&config.noise, config, base, &mut inputs)?;
    let (model_source, mitigation) = resolve_mitigation(&config.mitigation, qubits, base, &mut inputs)?;
    let angles = match &config.angles {
        Some(angles) => angles.clone(),
        None => random_angles(qubits, &mut stream(derive_seed(&[config.seed, ANGLE_TAG]), 0))?,
    };
    let operator = match config.operator_mask {
        Some(mask) => PauliZString::new(qubits, mask)?,
        None => PauliZString::all_z(qubits)?,
    };
    if operator.is_identity() {
        return Err(invalid("operator_mask 0 selects the identity, which needs no estimate"));
    }
    let experiment = ExperimentConfig {
        qubits,
        angles: angles.clone(),
        operator,
        shot_grid: config.shots.clone(),
        experiments: config.experiments,
        seed: config.seed,
        truncation: match config.truncation {
            TruncationField::Keyword(Keyword::Full) => Truncation::Full,
            TruncationField::Order(k) => Truncation::Order(k),
        },
        device_noise: device_noise.clone(),
        model_source,
        sampling: match config.sampling {
            SamplingField::Shots => Sampling::Shots,
            SamplingField::Exact => Sampling::Exact,
        },
    };
    experiment.validate()?;
    let (p0, p1) = split(&device_noise);
    let file = ConfigFile {
        seed: config.seed,
        qubits,
        experiments: config.experiments,
        shots: config.shots.clone(),
        operator_mask: Some(operator.mask()),
        angles: Some(angles),
        truncation: config.truncation,
        sampling: config.sampling,
        noise: NoiseSection { p0, p1, ..Default::default() },
        mitigation,
    };
    Ok(ResolvedConfig { file, experiment, inputs })
}

/// Parses a config from TOML text. A run manifest is accepted too; its
/// `[config]` table is used.
pub fn parse_config(text: &str) -> std::result::Result<ConfigFile, String> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    if let Some(toml::Value::Table(inner)) = table.remove("config") {
        if table.contains_key("tool") {
            table = inner;
        } else {
            return Err("unexpected [config] table".into());
        }
    }
    table.try_into().map_err(|e: toml::de::Error| e.message().to_string())
}

/// Loads and resolves a config file. `seed` replaces the file's seed.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ResolvedConfig> {
    let text = crate::error::read_to_string(path)?;
    let mut config = parse_config(&text).map_err(|e| RemError::parse(path, e))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let mut resolved = resolve(&config, base)?;
    resolved.inputs.insert(0, path.to_path_buf());
    Ok(resolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ConfigFile {
        parse_config(text).unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse("seed = 3\nqubits = 2\n");
        assert_eq!(c.experiments, DEFAULT_EXPERIMENTS);
        assert_eq!(c.shots, vec![64, 128, 256, 512, 1024, 2048, 4096, 8192]);
        assert_eq!(c.truncation, TruncationField::Keyword(Keyword::Full));
        let r = resolve(&c, Path::new(".")).unwrap();
        assert_eq!(r.experiment.operator.mask(), 3);
        assert_eq!(r.experiment.angles.len(), 8);
        assert_eq!(r.experiment.device_noise, BitFlipModel::noiseless(2).unwrap());
        assert_eq!(r.experiment.model_source, ModelSource::Device);
    }

    #[test]
    fn seed_is_required() {
        assert!(parse_config("qubits = 2\n").is_err());
        assert!(parse_config("seed = 1\nqubits = 2\nbogus = 1\n").is_err());
    }

    #[test]
    fn resolved_form_is_a_fixed_point() {
        let c = parse(
            "seed = 11\nqubits = 3\nexperiments = 20\nshots = [64, 128]\ntruncation = 1\n\
             [noise]\nrandom = [0.03, 0.1]\n[mitigation]\nsource = \"calibrated\"\n",
        );
        let r = resolve(&c, Path::new(".")).unwrap();
        assert_eq!(r.experiment.truncation, Truncation::Order(1));
        let text = toml::to_string(&r.file).unwrap();
        let again = resolve(&parse(&text), Path::new(".")).unwrap();
        assert_eq!(again.experiment, r.experiment);
        assert_eq!(again.file, r.file);
        assert_eq!(
            r.experiment.model_source,
            ModelSource::Calibrated { shots: DEFAULT_CALIBRATION_SHOTS, per_batch: false }
        );
    }

    #[test]
    fn seeded_draws_follow_the_seed() {
        let a = resolve(&parse("seed = 1\nqubits = 3\n[noise]\nrandom = [0.0, 0.1]\n"), Path::new(".")).unwrap();
        let b = resolve(&parse("seed = 1\nqubits = 3\n[noise]\nrandom = [0.0, 0.1]\n"), Path::new(".")).unwrap();
        let c = resolve(&parse("seed = 2\nqubits = 3\n[noise]\nrandom = [0.0, 0.1]\n"), Path::new(".")).unwrap();
        assert_eq!(a.experiment, b.experiment);
        assert_ne!(a.experiment.angles, c.experiment.angles);
        assert_ne!(a.experiment.device_noise, c.experiment.device_noise);
    }

    #[test]
    fn non_invertible_noise_is_rejected() {
        let c = parse("seed = 1\nqubits = 2\n[noise]\np0 = [0.5, 0.1]\np1 = [0.5, 0.1]\n");
        let err = resolve(&c, Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("non-invertible noise model"), "{err}");
    }

    #[test]
    fn inconsistent_sections_are_rejected() {
        for text in [
            "seed = 1\nqubits = 2\n[noise]\nsymmetric = 0.1\nrandom = [0.0, 0.1]\n",
            "seed = 1\nqubits = 2\n[noise]\np0 = [0.1, 0.1]\n",
            "seed = 1\nqubits = 2\n[noise]\np0 = [0.1]\np1 = [0.1]\n",
            "seed = 1\nqubits = 2\n[mitigation]\nsource = \"model\"\n",
            "seed = 1\nqubits = 2\n[mitigation]\ncalibration_shots = 100\n",
            "seed = 1\nqubits = 2\noperator_mask = 0\n",
            "seed = 1\nqubits = 2\noperator_mask = 4\n",
            "seed = 1\nqubits = 4\n",
            "seed = 1\nqubits = 2\ntruncation = 3\n",
            "seed = 1\nqubits = 2\nshots = []\n",
        ] {
            assert!(resolve(&parse(text), Path::new(".")).is_err(), "{text}");
        }
        assert!(parse_config("seed = 1\nqubits = 2\ntruncation = \"none\"\n").is_err());
    }

    #[test]
    fn manifest_config_table_is_accepted() {
        let c = parse("tool = \"rem\"\n[config]\nseed = 5\nqubits = 2\n");
        assert_eq!(c.seed, 5);
        assert!(parse_config("[config]\nseed = 5\nqubits = 2\n").is_err());
    }
}
