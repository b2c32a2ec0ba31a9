//! Experiment kernels for the benchmarking campaign.
//!
//! A [`Suite`] holds everything shared by the experiments of one campaign
//! (the prepared state, exact expectations, mitigation models). Each
//! experiment is a pure function of the suite, its shot count and its index,
//! so experiments can run in any order or in parallel.

use alloc::vec;
use alloc::vec::Vec;

use crate::calibration::{calibrate, SampledBackend};
use crate::error::{Error, Result};
use crate::mitigation::{build_omega, mitigate_truncated, OmegaMatrix};
use crate::model::{
    BitFlipModel, ExperimentConfig, ModelSource, OutcomeDistribution, Sampling, ShotHistogram, Truncation,
};
use crate::noise::{channel_exact, flip_outcome};
use crate::rng::{calibration_seed, experiment_seed, stream, FLIP_STREAM, OUTCOME_STREAM};
use crate::sim::{build_ansatz, exact_expectation, outcome_distribution, OutcomeSampler};
use crate::variance::{predicted_mitigated_variance, predicted_noisy_variance};

/// Which estimators an experiment produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Ideal projective measurement only.
    NoiseFree,
    /// Readout through the device channel, unmitigated.
    Noisy,
    /// Noisy readout plus mitigation and variance predictions.
    NoisyMitigated,
    /// Everything above; the ideal and noisy histograms share their outcomes.
    All,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::NoiseFree => "noise-free",
            Mode::Noisy => "noisy",
            Mode::NoisyMitigated => "noisy+mitigated",
            Mode::All => "all",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [Mode::NoiseFree, Mode::Noisy, Mode::NoisyMitigated, Mode::All]
            .into_iter()
            .find(|m| m.name() == name)
    }

    fn ideal(&self) -> bool {
        matches!(self, Mode::NoiseFree | Mode::All)
    }

    fn noisy(&self) -> bool {
        !matches!(self, Mode::NoiseFree)
    }

    fn mitigated(&self) -> bool {
        matches!(self, Mode::NoisyMitigated | Mode::All)
    }
}

/// One estimate of the studied operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub shots: u64,
    pub index: u64,
    /// Seed of this experiment's random streams.
    pub stream_seed: u64,
    /// Noise-free expectation of the studied operator.
    pub exact: f64,
    pub ideal: Option<f64>,
    pub noisy: Option<f64>,
    pub mitigated: Option<f64>,
    /// The mitigated value lies outside `[-1, 1]`.
    pub unphysical: bool,
    pub predicted_noisy_variance: Option<f64>,
    pub predicted_mitigated_variance: Option<f64>,
}

#[derive(Debug, Clone)]
struct MitigationModel {
    model: BitFlipModel,
    omega: OmegaMatrix,
}

impl MitigationModel {
    fn new(model: BitFlipModel) -> Result<Self> {
        let omega = build_omega(&model)?;
        Ok(Self { model, omega })
    }
}

#[derive(Debug, Clone)]
pub struct Suite {
    config: ExperimentConfig,
    mode: Mode,
    distribution: OutcomeDistribution,
    exact_vector: Vec<f64>,
    noisy_exact_vector: Vec<f64>,
    exact: f64,
    /// One model for the whole suite, or one per shot-grid entry.
    models: Vec<(u64, MitigationModel)>,
}

impl Suite {
    pub fn prepare(config: &ExperimentConfig, mode: Mode) -> Result<Self> {
        config.validate()?;
        let state = build_ansatz(config.qubits, &config.angles)?.run()?;
        let distribution = outcome_distribution(&state);
        let exact = exact_expectation(&state, &config.operator)?;
        let exact_vector = distribution.expectation_vector();
        let noisy_exact_vector = channel_exact(&distribution, &config.device_noise)?.expectation_vector();

        let mut models = Vec::new();
        if mode.mitigated() {
            match &config.model_source {
                ModelSource::Device => models.push((0, MitigationModel::new(config.device_noise.clone())?)),
                ModelSource::Explicit(model) => models.push((0, MitigationModel::new(model.clone())?)),
                ModelSource::Calibrated { shots, per_batch } => {
                    let backend = SampledBackend { model: config.device_noise.clone() };
                    let batches: Vec<u64> = if *per_batch { config.shot_grid.clone() } else { vec![0] };
                    for batch in batches {
                        let mut rng = stream(calibration_seed(config.seed, batch), OUTCOME_STREAM);
                        let model = calibrate(&backend, config.qubits, *shots, &mut rng)?;
                        models.push((batch, MitigationModel::new(model)?));
                    }
                }
            }
        }
        Ok(Self {
            config: config.clone(),
            mode,
            distribution,
            exact_vector,
            noisy_exact_vector,
            exact,
            models,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Noise-free expectation of the studied operator.
    pub fn exact(&self) -> f64 {
        self.exact
    }

    /// Noise-free expectations of every operator, indexed by mask.
    pub fn exact_vector(&self) -> &[f64] {
        &self.exact_vector
    }

    /// Infinite-shot noisy expectations of every operator.
    pub fn noisy_exact_vector(&self) -> &[f64] {
        &self.noisy_exact_vector
    }

    /// The model inverted for experiments at `shots` shots.
    pub fn mitigation_model(&self, shots: u64) -> Option<&BitFlipModel> {
        self.mitigation(shots).map(|m| &m.model)
    }

    /// Every model used by the suite with the shot count it applies to
    /// (0 for a suite-wide model).
    pub fn mitigation_models(&self) -> impl Iterator<Item = (u64, &BitFlipModel)> {
        self.models.iter().map(|(s, m)| (*s, &m.model))
    }

    fn mitigation(&self, shots: u64) -> Option<&MitigationModel> {
        match self.models.as_slice() {
            [] => None,
            [(0, only)] => Some(only),
            many => many.iter().find(|(s, _)| *s == shots).map(|(_, m)| m),
        }
    }

    /// `(shots, index)` of every experiment in canonical order.
    pub fn jobs(&self) -> Vec<(u64, u64)> {
        let n = self.config.experiments as u64;
        self.config
            .shot_grid
            .iter()
            .flat_map(|&s| (0..n).map(move |i| (s, i)))
            .collect()
    }

    /// Runs experiment `index` at `shots` shots.
    pub fn run_experiment(&self, shots: u64, index: u64) -> Result<ExperimentResult> {
        if shots == 0 {
            return Err(Error::ZeroShots);
        }
        let seed = experiment_seed(self.config.seed, shots, index);
        let (ideal_vec, noisy_vec) = match self.config.sampling {
            Sampling::Exact => (
                self.mode.ideal().then(|| self.exact_vector.clone()),
                self.mode.noisy().then(|| self.noisy_exact_vector.clone()),
            ),
            Sampling::Shots => {
                let (ideal, noisy) = self.sample(shots, seed)?;
                (ideal.map(|h| h.expectation_vector()), noisy.map(|h| h.expectation_vector()))
            }
        };

        let mask = self.config.operator.mask();
        let mut result = ExperimentResult {
            shots,
            index,
            stream_seed: seed,
            exact: self.exact,
            ideal: ideal_vec.as_ref().map(|v| v[mask]),
            noisy: noisy_vec.as_ref().map(|v| v[mask]),
            mitigated: None,
            unphysical: false,
            predicted_noisy_variance: None,
            predicted_mitigated_variance: None,
        };

        if let (true, Some(noisy)) = (self.mode.mitigated(), noisy_vec.as_ref()) {
            let mitigation = self
                .mitigation(shots)
                .ok_or_else(|| Error::InvalidConfig("no mitigation model for this shot count".into()))?;
            let full = mitigation.omega.solve(noisy)?;
            let value = match self.config.truncation {
                Truncation::Full => full[mask],
                Truncation::Order(k) => mitigate_truncated(&self.config.operator, noisy, &mitigation.model, k)?,
            };
            let op = &self.config.operator;
            result.mitigated = Some(value);
            result.unphysical = value.abs() > 1.0;
            result.predicted_noisy_variance = Some(predicted_noisy_variance(op, noisy, &full, &mitigation.model, shots)?);
            result.predicted_mitigated_variance =
                Some(predicted_mitigated_variance(op, noisy, &mitigation.model, shots)?);
        }
        Ok(result)
    }

    fn sample(&self, shots: u64, seed: u64) -> Result<(Option<ShotHistogram>, Option<ShotHistogram>)> {
        let qubits = self.config.qubits;
        let sampler = OutcomeSampler::new(&self.distribution);
        let mut outcomes = stream(seed, OUTCOME_STREAM);
        let mut flips = stream(seed, FLIP_STREAM);
        let mut ideal = vec![0u64; 1 << qubits];
        let mut noisy = vec![0u64; 1 << qubits];
        for _ in 0..shots {
            let b = sampler.sample(&mut outcomes);
            ideal[b] += 1;
            if self.mode.noisy() {
                noisy[flip_outcome(b, &self.config.device_noise, &mut flips)] += 1;
            }
        }
        let ideal = match self.mode.ideal() {
            true => Some(ShotHistogram::from_counts(qubits, ideal, shots)?),
            false => None,
        };
        let noisy = match self.mode.noisy() {
            true => Some(ShotHistogram::from_counts(qubits, noisy, shots)?),
            false => None,
        };
        Ok((ideal, noisy))
    }
}

/// Runs every experiment of the suite sequentially, in canonical order.
pub fn run_suite(config: &ExperimentConfig, mode: Mode) -> Result<Vec<ExperimentResult>> {
    let suite = Suite::prepare(config, mode)?;
    suite.jobs().into_iter().map(|(s, i)| suite.run_experiment(s, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PauliZString;
    use crate::sim::random_angles;

    fn config(noise: BitFlipModel) -> ExperimentConfig {
        ExperimentConfig {
            qubits: 3,
            angles: random_angles(3, &mut stream(42, 0)).unwrap(),
            operator: PauliZString::all_z(3).unwrap(),
            shot_grid: vec![64, 256],
            experiments: 5,
            seed: 9,
            truncation: Truncation::Full,
            device_noise: noise,
            model_source: ModelSource::Device,
            sampling: Sampling::Shots,
        }
    }

    #[test]
    fn noiseless_noisy_mode_reproduces_noise_free_mode() {
        let cfg = config(BitFlipModel::noiseless(3).unwrap());
        let free = run_suite(&cfg, Mode::NoiseFree).unwrap();
        let noisy = run_suite(&cfg, Mode::Noisy).unwrap();
        for (a, b) in free.iter().zip(&noisy) {
            assert_eq!(a.ideal, b.noisy);
            assert_eq!(a.stream_seed, b.stream_seed);
        }
    }

    #[test]
    fn exact_sampling_mitigates_to_machine_precision() {
        let mut cfg = config(BitFlipModel::from_pairs(&[(0.05, 0.1), (0.08, 0.03), (0.02, 0.09)]).unwrap());
        cfg.sampling = Sampling::Exact;
        let suite = Suite::prepare(&cfg, Mode::NoisyMitigated).unwrap();
        let model = suite.mitigation_model(64).unwrap().clone();
        let full = crate::mitigation::mitigate(suite.noisy_exact_vector(), &model).unwrap();
        for (m, e) in full.iter().zip(suite.exact_vector()) {
            assert!((m - e).abs() < 1e-10);
        }
        for r in run_suite(&cfg, Mode::NoisyMitigated).unwrap() {
            assert!((r.mitigated.unwrap() - r.exact).abs() < 1e-10);
        }
    }

    #[test]
    fn results_are_order_independent() {
        let cfg = config(BitFlipModel::symmetric(3, 0.05).unwrap());
        let suite = Suite::prepare(&cfg, Mode::All).unwrap();
        let forward: Vec<_> = suite.jobs().into_iter().map(|(s, i)| suite.run_experiment(s, i).unwrap()).collect();
        let mut backward: Vec<_> =
            suite.jobs().into_iter().rev().map(|(s, i)| suite.run_experiment(s, i).unwrap()).collect();
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn calibrated_models_per_batch() {
        let mut cfg = config(BitFlipModel::symmetric(3, 0.05).unwrap());
        cfg.model_source = ModelSource::Calibrated { shots: 4096, per_batch: true };
        let suite = Suite::prepare(&cfg, Mode::NoisyMitigated).unwrap();
        assert_eq!(suite.mitigation_models().count(), 2);
        assert!(suite.mitigation_model(64).is_some());
        assert!(suite.mitigation_model(128).is_none());
        cfg.model_source = ModelSource::Calibrated { shots: 4096, per_batch: false };
        let suite = Suite::prepare(&cfg, Mode::NoisyMitigated).unwrap();
        assert_eq!(suite.mitigation_model(64), suite.mitigation_model(256));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = config(BitFlipModel::noiseless(3).unwrap());
        cfg.experiments = 1;
        assert!(Suite::prepare(&cfg, Mode::NoiseFree).is_err());
        let mut cfg = config(BitFlipModel::noiseless(3).unwrap());
        cfg.angles.pop();
        assert!(matches!(Suite::prepare(&cfg, Mode::NoiseFree), Err(Error::ParameterCount { .. })));
        let mut cfg = config(BitFlipModel::noiseless(3).unwrap());
        cfg.truncation = Truncation::Order(4);
        assert!(Suite::prepare(&cfg, Mode::NoiseFree).is_err());
    }
}
