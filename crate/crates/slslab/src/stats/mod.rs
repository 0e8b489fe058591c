//! Heavy-tailed distribution fitting and goodness-of-fit machinery.
//!
//! The pipeline: wrap measured hardness values in a [`Sample`], fit a
//! shifted lognormal by profile maximum likelihood ([`fit`]), score the
//! fit with an equiprobable-bin chi-square statistic ([`gof`]), and
//! calibrate that statistic's null distribution by a parametric bootstrap
//! that re-injects per-observation measurement noise ([`bootstrap`]).
//! [`plot`] renders distribution tables for external plotting, and
//! [`special`] supplies the scalar functions everything else stands on.

pub mod bootstrap;
pub mod ecdf;
pub mod fit;
pub mod gof;
pub mod lognormal;
pub mod plot;
pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {needed} values, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("value {value} at index {index} is not finite")]
    NonFinite { index: usize, value: f64 },
    #[error("value {value} at index {index} is not positive")]
    NonPositive { index: usize, value: f64 },
    #[error("{values} values but {variances} mean variances")]
    LengthMismatch { values: usize, variances: usize },
    #[error("mean variance {value} at index {index} is negative or not finite")]
    BadVariance { index: usize, value: f64 },
    #[error("sample is degenerate: all shifted logs are equal")]
    DegenerateSample,
    #[error("parameter {name} = {value} is not finite")]
    NonFiniteParam { name: &'static str, value: f64 },
    #[error("sigma must be positive, got {0}")]
    SigmaNotPositive(f64),
    #[error("chi-square needs at least {needed} merged bins, got {got}")]
    TooFewBins { needed: usize, got: usize },
    #[error("bootstrap needs at least {needed} rounds, got {got}")]
    TooFewRounds { needed: usize, got: usize },
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    AlphaOutOfRange(f64),
    #[error("grid needs at least {needed} points, got {got}")]
    TooFewGridPoints { needed: usize, got: usize },
    #[error("location {gamma} outside the admissible range [0, {cap}]")]
    LocationOutOfRange { gamma: f64, cap: f64 },
}

/// A hardness sample: positive measured values, optionally annotated with
/// the variance of each value's estimator (the per-instance variance of
/// the mean, used by the bootstrap to re-inject measurement noise).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    mean_variances: Option<Vec<f64>>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Sample, StatsError> {
        validate_values(&values)?;
        Ok(Sample { values, mean_variances: None })
    }

    pub fn with_mean_variances(
        values: Vec<f64>,
        mean_variances: Vec<f64>,
    ) -> Result<Sample, StatsError> {
        validate_values(&values)?;
        if values.len() != mean_variances.len() {
            return Err(StatsError::LengthMismatch {
                values: values.len(),
                variances: mean_variances.len(),
            });
        }
        for (index, &value) in mean_variances.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(StatsError::BadVariance { index, value });
            }
        }
        Ok(Sample { values, mean_variances: Some(mean_variances) })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean_variances(&self) -> Option<&[f64]> {
        self.mean_variances.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn validate_values(values: &[f64]) -> Result<(), StatsError> {
    if values.is_empty() {
        return Err(StatsError::TooFewPoints { needed: 1, got: 0 });
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(StatsError::NonFinite { index, value });
        }
        if value <= 0.0 {
            return Err(StatsError::NonPositive { index, value });
        }
    }
    Ok(())
}

/// Complete fit record as serialized to `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub n: usize,
    pub mu: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub loglik: f64,
    pub chi2: Chi2Section,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chi2Section {
    pub stat: f64,
    pub df: usize,
    pub p: f64,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSection {
    #[serde(rename = "N")]
    pub rounds: usize,
    pub alpha: f64,
    pub p_boot: f64,
    pub verdict: Verdict,
    pub floored_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl FitReport {
    pub fn assemble(
        n: usize,
        fit: &fit::LognormalFit,
        gof: &gof::GofReport,
        bootstrap: Option<&bootstrap::BootstrapReport>,
    ) -> FitReport {
        FitReport {
            n,
            mu: fit.dist.mu(),
            sigma: fit.dist.sigma(),
            gamma: fit.dist.gamma(),
            loglik: fit.loglik,
            chi2: Chi2Section {
                stat: gof.stat,
                df: gof.df,
                p: gof.p_value,
                bins: gof.bins,
            },
            bootstrap: bootstrap.map(|b| BootstrapSection {
                rounds: b.rounds,
                alpha: b.alpha,
                p_boot: b.p_boot,
                verdict: if b.reject { Verdict::Reject } else { Verdict::Accept },
                floored_fraction: b.floored_fraction,
            }),
        }
    }
}
