//! Statistics over experiment results: absolute-error curves, histogram
//! moments, power-law fits and measured-versus-predicted variances.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::experiment::ExperimentResult;
use crate::model::PowerLawFit;
use crate::variance::{overhead_ratio, Overhead};

/// `|measured - exact|`.
pub fn absolute_error(measured: f64, exact: f64) -> f64 {
    (measured - exact).abs()
}

/// Least-squares line through `(ln s, ln value)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, found: points.len() });
    }
    if let Some(&(_, v)) = points.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::NonPositiveValue(v));
    }
    if let Some(&(s, _)) = points.iter().find(|(s, _)| !(*s > 0.0)) {
        return Err(Error::NonPositiveValue(s));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(s, v)| (libm::log(s), libm::log(v))).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx <= f64::EPSILON * n * (1.0 + mean_x * mean_x) {
        return Err(Error::DegenerateAbscissa);
    }
    let alpha = sxy / sxx;
    let beta = mean_y - alpha * mean_x;
    let rss: f64 = logs.iter().map(|&(x, y)| (y - beta - alpha * x) * (y - beta - alpha * x)).sum();
    Ok(PowerLawFit { alpha, beta, residual: libm::sqrt(rss / n) })
}

/// Moments of a batch of estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramStats {
    pub mean: f64,
    /// Unbiased (`N - 1`) standard deviation.
    pub sample_std: f64,
    /// Maximum-likelihood Gaussian mean.
    pub fit_mean: f64,
    /// Maximum-likelihood Gaussian width (`N` denominator).
    pub fit_sigma: f64,
}

impl HistogramStats {
    pub fn sample_variance(&self) -> f64 {
        self.sample_std * self.sample_std
    }
}

pub fn histogram_stats(values: &[f64]) -> Result<HistogramStats> {
    if values.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, found: values.len() });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(HistogramStats {
        mean,
        sample_std: libm::sqrt(ss / (n - 1.0)),
        fit_mean: mean,
        fit_sigma: libm::sqrt(ss / n),
    })
}

/// Standard error of a sample variance of `n` Gaussian draws, relative to
/// the variance.
pub fn relative_variance_stderr(n: usize) -> f64 {
    libm::sqrt(2.0 / (n as f64 - 1.0))
}

/// Statistics of one estimator at one shot count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorStats {
    pub mean_abs_error: f64,
    /// Standard error of `mean_abs_error` over the experiments.
    pub abs_error_stderr: f64,
    pub histogram: HistogramStats,
    /// Mean over experiments of the per-experiment predicted variance.
    pub predicted_variance: Option<f64>,
}

impl EstimatorStats {
    fn new(values: &[f64], exact: f64, predicted: Option<f64>) -> Result<Self> {
        let errors: Vec<f64> = values.iter().map(|&v| absolute_error(v, exact)).collect();
        let err = histogram_stats(&errors)?;
        Ok(Self {
            mean_abs_error: err.mean,
            abs_error_stderr: err.sample_std / libm::sqrt(errors.len() as f64),
            histogram: histogram_stats(values)?,
            predicted_variance: predicted,
        })
    }

    pub fn sample_variance(&self) -> f64 {
        self.histogram.sample_variance()
    }
}

/// Summary of all experiments at one shot count.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotGridRow {
    pub shots: u64,
    pub experiments: usize,
    pub exact: f64,
    pub ideal: Option<EstimatorStats>,
    pub noisy: Option<EstimatorStats>,
    pub mitigated: Option<EstimatorStats>,
    /// Experiments whose mitigated value left `[-1, 1]`.
    pub unphysical: usize,
}

/// Per-shot-count summary, sorted by shot count.
pub type ShotGridSummary = Vec<ShotGridRow>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    Ideal,
    Noisy,
    Mitigated,
}

impl ShotGridRow {
    pub fn estimator(&self, which: Estimator) -> Option<&EstimatorStats> {
        match which {
            Estimator::Ideal => self.ideal.as_ref(),
            Estimator::Noisy => self.noisy.as_ref(),
            Estimator::Mitigated => self.mitigated.as_ref(),
        }
    }
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut n = 0usize;
    let mut total = 0.0;
    for v in values {
        total += v?;
        n += 1;
    }
    (n > 0).then(|| total / n as f64)
}

/// Groups results by shot count and summarizes each group.
pub fn summarize(results: &[ExperimentResult]) -> Result<ShotGridSummary> {
    let mut groups: BTreeMap<u64, Vec<&ExperimentResult>> = BTreeMap::new();
    for r in results {
        groups.entry(r.shots).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(shots, rows)| {
            let exact = rows[0].exact;
            let stats = |pick: fn(&ExperimentResult) -> Option<f64>, predicted: Option<f64>| {
                let values: Option<Vec<f64>> = rows.iter().map(|r| pick(r)).collect();
                values.map(|v| EstimatorStats::new(&v, exact, predicted)).transpose()
            };
            let pred_noisy = mean_of(rows.iter().map(|r| r.predicted_noisy_variance));
            let pred_mitigated = mean_of(rows.iter().map(|r| r.predicted_mitigated_variance));
            Ok(ShotGridRow {
                shots,
                experiments: rows.len(),
                exact,
                ideal: stats(|r| r.ideal, None)?,
                noisy: stats(|r| r.noisy, pred_noisy)?,
                mitigated: stats(|r| r.mitigated, pred_mitigated)?,
                unphysical: rows.iter().filter(|r| r.unphysical).count(),
            })
        })
        .collect()
}

/// Measured against predicted variance at one shot count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceComparison {
    pub shots: u64,
    pub measured: f64,
    pub predicted: f64,
    pub ratio: f64,
    /// `(measured - predicted) / (predicted · √(2/(N-1)))`.
    pub z_score: f64,
    pub flagged: bool,
}

/// |z| beyond which a comparison is flagged.
pub const FLAG_THRESHOLD: f64 = 3.0;

/// Compares the measured sample variance of `which` with `predictions`
/// (`(shots, variance)` pairs on the same grid as `summary`).
pub fn compare_variances(
    summary: &[ShotGridRow],
    which: Estimator,
    predictions: &[(u64, f64)],
) -> Result<Vec<VarianceComparison>> {
    if summary.len() != predictions.len() {
        return Err(Error::GridMismatch);
    }
    summary
        .iter()
        .zip(predictions)
        .map(|(row, &(shots, predicted))| {
            if row.shots != shots {
                return Err(Error::GridMismatch);
            }
            let stats = row.estimator(which).ok_or(Error::GridMismatch)?;
            let measured = stats.sample_variance();
            let z_score = (measured - predicted) / (predicted * relative_variance_stderr(row.experiments));
            Ok(VarianceComparison {
                shots,
                measured,
                predicted,
                ratio: measured / predicted,
                z_score,
                flagged: z_score.abs() > FLAG_THRESHOLD,
            })
        })
        .collect()
}

/// Predictions carried in the summary, as `compare_variances` input.
pub fn summary_predictions(summary: &[ShotGridRow], which: Estimator) -> Option<Vec<(u64, f64)>> {
    summary
        .iter()
        .map(|row| Some((row.shots, row.estimator(which)?.predicted_variance?)))
        .collect()
}

/// Power-law fits of the error and variance curves of a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurveFits {
    pub ideal_error: Option<PowerLawFit>,
    pub noisy_error: Option<PowerLawFit>,
    pub mitigated_error: Option<PowerLawFit>,
    pub noisy_variance: Option<PowerLawFit>,
    pub mitigated_variance: Option<PowerLawFit>,
}

fn fit_column(summary: &[ShotGridRow], pick: impl Fn(&ShotGridRow) -> Option<f64>) -> Option<PowerLawFit> {
    let points: Option<Vec<(f64, f64)>> = summary.iter().map(|r| Some((r.shots as f64, pick(r)?))).collect();
    fit_power_law(&points?).ok()
}

/// Fits every curve present in the summary. Curves that are absent or cannot
/// be fitted (fewer than three shot counts, a zero value) are `None`.
pub fn fit_curves(summary: &[ShotGridRow]) -> CurveFits {
    CurveFits {
        ideal_error: fit_column(summary, |r| Some(r.ideal?.mean_abs_error)),
        noisy_error: fit_column(summary, |r| Some(r.noisy?.mean_abs_error)),
        mitigated_error: fit_column(summary, |r| Some(r.mitigated?.mean_abs_error)),
        noisy_variance: fit_column(summary, |r| Some(r.noisy?.sample_variance())),
        mitigated_variance: fit_column(summary, |r| Some(r.mitigated?.sample_variance())),
    }
}

impl CurveFits {
    /// Extra samples mitigation needs at `s0` unmitigated shots, from the
    /// variance fits.
    pub fn overhead(&self, s0: f64, threshold: f64) -> Option<Result<Overhead>> {
        Some(overhead_ratio(&self.noisy_variance?, &self.mitigated_variance?, s0, threshold))
    }
}
