//! Analysis outputs of a campaign: summary table, fits, variance comparison
//! and plot-ready `x,y,y_err` files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rem_core::analysis::{
    compare_variances, fit_curves, relative_variance_stderr, summarize, summary_predictions, Estimator, ShotGridRow,
};
use rem_core::experiment::ExperimentResult;
use rem_core::model::PowerLawFit;
use rem_core::variance::DEFAULT_CONSTANT_THRESHOLD;
use serde::{Deserialize, Serialize};

use crate::error::{RemError, Result};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const FITS_FILE: &str = "fits.toml";
pub const COMPARISON_FILE: &str = "variance_comparison.csv";

/// Bins per histogram plot.
pub const HISTOGRAM_BINS: usize = 40;

const ESTIMATORS: [(Estimator, &str); 3] =
    [(Estimator::Ideal, "ideal"), (Estimator::Noisy, "noisy"), (Estimator::Mitigated, "mitigated")];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub alpha: f64,
    pub beta: f64,
    pub prefactor: f64,
    pub residual: f64,
}

impl From<PowerLawFit> for FitRecord {
    fn from(f: PowerLawFit) -> Self {
        Self { alpha: f.alpha, beta: f.beta, prefactor: f.prefactor(), residual: f.residual }
    }
}

/// Sample overhead of mitigation as `prefactor · s0^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadRecord {
    pub prefactor: f64,
    pub exponent: f64,
    pub constant_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_approximation: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitsFile {
    pub ideal_error: Option<FitRecord>,
    pub noisy_error: Option<FitRecord>,
    pub mitigated_error: Option<FitRecord>,
    pub noisy_variance: Option<FitRecord>,
    pub mitigated_variance: Option<FitRecord>,
    pub overhead: Option<OverheadRecord>,
}

impl FitsFile {
    pub fn read(path: &Path) -> Result<Self> {
        toml::from_str(&crate::error::read_to_string(path)?).map_err(|e| RemError::parse(path, e.message()))
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<std::fs::File>,
}

impl Table {
    fn create(path: PathBuf, header: &[String]) -> Result<Self> {
        let mut writer = csv::Writer::from_path(&path).map_err(|e| RemError::csv(&path, e))?;
        writer.write_record(header).map_err(|e| RemError::csv(&path, e))?;
        Ok(Self { path, writer })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields).map_err(|e| RemError::csv(&self.path, e))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush().map_err(|e| RemError::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn xy(dir: &Path, name: &str, points: &[(f64, f64, f64)]) -> Result<PathBuf> {
    let mut t = Table::create(dir.join(name), &["x".into(), "y".into(), "y_err".into()])?;
    for &(x, y, e) in points {
        t.row(&[num(x), num(y), num(e)])?;
    }
    t.finish()
}

fn write_summary(dir: &Path, summary: &[ShotGridRow]) -> Result<PathBuf> {
    const COLUMNS: [&str; 9] = [
        "mean_abs_error",
        "abs_error_stderr",
        "mean",
        "sample_std",
        "sample_variance",
        "fit_mean",
        "fit_sigma",
        "fit_variance",
        "predicted_variance",
    ];
    let mut header: Vec<String> = ["shots", "experiments", "exact", "unphysical"].map(String::from).to_vec();
    for (_, name) in ESTIMATORS {
        header.extend(COLUMNS.iter().map(|c| format!("{name}_{c}")));
    }
    let mut t = Table::create(dir.join(SUMMARY_FILE), &header)?;
    for row in summary {
        let mut fields = vec![row.shots.to_string(), row.experiments.to_string(), num(row.exact), row.unphysical.to_string()];
        for (which, _) in ESTIMATORS {
            match row.estimator(which) {
                Some(s) => fields.extend([
                    num(s.mean_abs_error),
                    num(s.abs_error_stderr),
                    num(s.histogram.mean),
                    num(s.histogram.sample_std),
                    num(s.sample_variance()),
                    num(s.histogram.fit_mean),
                    num(s.histogram.fit_sigma),
                    num(s.histogram.fit_sigma * s.histogram.fit_sigma),
                    opt(s.predicted_variance),
                ]),
                None => fields.extend(std::iter::repeat_n(String::new(), COLUMNS.len())),
            }
        }
        t.row(&fields)?;
    }
    t.finish()
}

/// Equal-width histogram over the sample range as `(centre, count, √count)`.
pub fn histogram_points(values: &[f64], bins: usize) -> Vec<(f64, f64, f64)> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    if hi <= lo {
        let n = values.len() as f64;
        return vec![(lo, n, n.sqrt())];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + (i as f64 + 0.5) * width, c as f64, (c as f64).sqrt()))
        .collect()
}

/// Writes every analysis output for `results` into `dir` and returns the
/// paths written, in a fixed order.
pub fn write_analysis(results: &[ExperimentResult], dir: &Path) -> Result<Vec<PathBuf>> {
    let summary = summarize(results)?;
    let mut written = vec![write_summary(dir, &summary)?];

    let curves = fit_curves(&summary);
    let overhead = match curves.overhead(1.0, DEFAULT_CONSTANT_THRESHOLD) {
        Some(Ok(o)) => Some(OverheadRecord {
            prefactor: o.prefactor,
            exponent: o.exponent,
            constant_threshold: DEFAULT_CONSTANT_THRESHOLD,
            constant_approximation: o.constant_approximation,
        }),
        _ => None,
    };
    let fits = FitsFile {
        ideal_error: curves.ideal_error.map(Into::into),
        noisy_error: curves.noisy_error.map(Into::into),
        mitigated_error: curves.mitigated_error.map(Into::into),
        noisy_variance: curves.noisy_variance.map(Into::into),
        mitigated_variance: curves.mitigated_variance.map(Into::into),
        overhead,
    };
    let fits_path = dir.join(FITS_FILE);
    crate::error::write(&fits_path, toml::to_string(&fits).map_err(|e| RemError::parse(&fits_path, e))?)?;
    written.push(fits_path);

    let mut comparisons = Vec::new();
    for (which, name) in [(Estimator::Noisy, "noisy"), (Estimator::Mitigated, "mitigated")] {
        if let Some(predictions) = summary_predictions(&summary, which) {
            comparisons.extend(compare_variances(&summary, which, &predictions)?.into_iter().map(|c| (name, c)));
        }
    }
    if !comparisons.is_empty() {
        let header = ["estimator", "shots", "measured", "predicted", "ratio", "z_score", "flagged"].map(String::from);
        let mut t = Table::create(dir.join(COMPARISON_FILE), &header)?;
        for (name, c) in comparisons {
            t.row(&[
                name.into(),
                c.shots.to_string(),
                num(c.measured),
                num(c.predicted),
                num(c.ratio),
                num(c.z_score),
                c.flagged.to_string(),
            ])?;
        }
        written.push(t.finish()?);
    }

    for (which, name) in ESTIMATORS {
        let rows: Vec<(&ShotGridRow, _)> = summary.iter().filter_map(|r| Some((r, r.estimator(which)?))).collect();
        if rows.is_empty() {
            continue;
        }
        let error: Vec<_> = rows.iter().map(|(r, s)| (r.shots as f64, s.mean_abs_error, s.abs_error_stderr)).collect();
        written.push(xy(dir, &format!("plot_error_{name}.csv"), &error)?);
        let measured: Vec<_> = rows
            .iter()
            .map(|(r, s)| (r.shots as f64, s.sample_variance(), s.sample_variance() * relative_variance_stderr(r.experiments)))
            .collect();
        written.push(xy(dir, &format!("plot_variance_{name}_measured.csv"), &measured)?);
        let predicted: Option<Vec<_>> =
            rows.iter().map(|(r, s)| Some((r.shots as f64, s.predicted_variance?, 0.0))).collect();
        if let Some(predicted) = predicted {
            written.push(xy(dir, &format!("plot_variance_{name}_predicted.csv"), &predicted)?);
        }
    }

    if let (Some(noisy), Some(mitigated)) = (curves.noisy_variance, curves.mitigated_variance) {
        let points: Vec<_> = summary
            .iter()
            .filter_map(|r| {
                let s0 = r.shots as f64;
                rem_core::variance::overhead_ratio(&noisy, &mitigated, s0, DEFAULT_CONSTANT_THRESHOLD)
                    .ok()
                    .map(|o| (s0, o.ratio, 0.0))
            })
            .collect();
        written.push(xy(dir, "plot_overhead.csv", &points)?);
    }

    let mut groups: BTreeMap<u64, Vec<&ExperimentResult>> = BTreeMap::new();
    for r in results {
        groups.entry(r.shots).or_default().push(r);
    }
    for (shots, group) in &groups {
        let picks: [(fn(&ExperimentResult) -> Option<f64>, &str); 3] = [
            (|r| r.ideal, "ideal"),
            (|r| r.noisy, "noisy"),
            (|r| r.mitigated, "mitigated"),
        ];
        for (pick, name) in picks {
            let values: Option<Vec<f64>> = group.iter().map(|r| pick(r)).collect();
            if let Some(values) = values {
                let points = histogram_points(&values, HISTOGRAM_BINS);
                written.push(xy(dir, &format!("plot_histogram_{name}_s{shots}.csv"), &points)?);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bins_cover_all_values() {
        let values: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let points = histogram_points(&values, 10);
        assert_eq!(points.len(), 10);
        assert_eq!(points.iter().map(|p| p.1).sum::<f64>(), 100.0);
        assert!((points[0].0 - 0.05).abs() < 1e-12);
        assert_eq!(histogram_points(&[0.5; 4], 10), vec![(0.5, 4.0, 2.0)]);
    }
}
