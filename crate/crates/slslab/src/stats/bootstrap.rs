//! Parametric bootstrap calibration of the chi-square fit statistic.
//!
//! The asymptotic chi-square reference distribution ignores that each
//! hardness value is itself a noisy mean over finitely many runs. The
//! bootstrap rebuilds the statistic's null distribution under the fitted
//! model: every round resamples the fitted lognormal, re-injects each
//! observation's measurement noise, refits from scratch, and recomputes
//! the statistic. The observed statistic is then compared against the
//! empirical `1 - alpha` quantile of those round statistics.
//!
//! Rounds draw from independent seed streams and are embarrassingly
//! parallel; results do not depend on the worker count.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seedstream::{self, DOMAIN_BOOTSTRAP};
use crate::stats::fit::{fit_lognormal3, LognormalFit};
use crate::stats::gof::{chi_square_gof, GofReport};
use crate::stats::lognormal::Lognormal3;
use crate::stats::{Sample, StatsError};

pub const MIN_BOOTSTRAP_ROUNDS: usize = 20;
/// Fraction of floored resampled points above which the noise model is
/// considered inconsistent with the fitted support.
pub const FLOOR_WARN_FRACTION: f64 = 1e-3;
/// Location, scale, and shape are always refit, so every statistic in the
/// pipeline discounts three parameters.
pub const FITTED_PARAMS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub rounds: usize,
    pub alpha: f64,
    pub observed_stat: f64,
    /// Empirical `1 - alpha` quantile of the round statistics.
    pub critical_stat: f64,
    pub p_boot: f64,
    pub reject: bool,
    /// Fraction of resampled points clamped up to the fitted support.
    pub floored_fraction: f64,
    pub floored_excessive: bool,
    /// True when the sample carried no per-value variances and the noise
    /// model fell back to a pooled estimate.
    pub pooled_variance_fallback: bool,
}

/// Everything the calibration produced: the fit and plain chi-square
/// report for the observed sample, the bootstrap verdict, and the raw
/// round statistics (in round order) for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapOutcome {
    pub fit: LognormalFit,
    pub gof: GofReport,
    pub report: BootstrapReport,
    pub round_stats: Vec<f64>,
}

/// Fits `sample`, scores the fit, and calibrates the score by `rounds`
/// bootstrap rounds at level `alpha`.
pub fn bootstrap_test(
    sample: &Sample,
    rounds: usize,
    alpha: f64,
    base_seed: u64,
) -> Result<BootstrapOutcome, StatsError> {
    if rounds < MIN_BOOTSTRAP_ROUNDS {
        return Err(StatsError::TooFewRounds { needed: MIN_BOOTSTRAP_ROUNDS, got: rounds });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::AlphaOutOfRange(alpha));
    }
    // The critical value is the k-th smallest round statistic with
    // k = floor((1 - alpha) * rounds), counting from one; k must exist.
    let critical_rank = ((1.0 - alpha) * rounds as f64).floor() as usize;
    if critical_rank < 1 {
        return Err(StatsError::TooFewRounds {
            needed: (1.0 / (1.0 - alpha)).ceil() as usize,
            got: rounds,
        });
    }

    let values = sample.values();
    let n = values.len();
    let fit = fit_lognormal3(values)?;
    let gof = chi_square_gof(values, &fit.dist, FITTED_PARAMS)?;

    // Per-observation noise standard deviations. Without per-value
    // variances, fall back to a pooled guess: one percent of the sample
    // variance, i.e. the variance a mean over a hundred runs would have
    // if run-to-run spread matched the instance-to-instance spread.
    let (noise_sd, pooled_variance_fallback) = match sample.mean_variances() {
        Some(variances) => (variances.iter().map(|&v| v.sqrt()).collect::<Vec<f64>>(), false),
        None => {
            let mean = values.iter().sum::<f64>() / n as f64;
            let var =
                values.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            (vec![(var / 100.0).sqrt(); n], true)
        }
    };

    // Resampled points must stay inside the fitted support (and positive)
    // for the refit to be well posed, so noise that drags a point to or
    // below `gamma` is clamped to a floor just above it.
    let gamma_hat = fit.dist.gamma();
    let floor = gamma_hat * (1.0 + 1e-9) + 1e-9;

    let per_round: Vec<(f64, u64)> = (0..rounds)
        .into_par_iter()
        .map(|round| round_statistic(&fit.dist, &noise_sd, floor, base_seed, round as u64))
        .collect::<Result<_, _>>()?;

    let round_stats: Vec<f64> = per_round.iter().map(|&(stat, _)| stat).collect();
    let floored: u64 = per_round.iter().map(|&(_, f)| f).sum();
    let floored_fraction = floored as f64 / (rounds as f64 * n as f64);

    let mut sorted = round_stats.clone();
    sorted.sort_by(f64::total_cmp);
    let critical_stat = sorted[critical_rank - 1];
    let at_least = round_stats.iter().filter(|&&s| s >= gof.stat).count();
    let p_boot = (at_least + 1) as f64 / (rounds + 1) as f64;

    let report = BootstrapReport {
        rounds,
        alpha,
        observed_stat: gof.stat,
        critical_stat,
        p_boot,
        reject: gof.stat > critical_stat,
        floored_fraction,
        floored_excessive: floored_fraction > FLOOR_WARN_FRACTION,
        pooled_variance_fallback,
    };
    Ok(BootstrapOutcome { fit, gof, report, round_stats })
}

/// One bootstrap round: resample, perturb, refit, re-score. Returns the
/// round's statistic and how many points were floored.
fn round_statistic(
    dist: &Lognormal3,
    noise_sd: &[f64],
    floor: f64,
    base_seed: u64,
    round: u64,
) -> Result<(f64, u64), StatsError> {
    let mut rng = seedstream::stream(base_seed, DOMAIN_BOOTSTRAP, round, 0);
    let mut floored = 0u64;
    let resampled: Vec<f64> = noise_sd
        .iter()
        .map(|&sd| {
            let z: f64 = rng.sample(StandardNormal);
            let y = dist.sample(&mut rng) + sd * z;
            if y <= floor {
                floored += 1;
                floor
            } else {
                y
            }
        })
        .collect();
    let refit = fit_lognormal3(&resampled)?;
    let regof = chi_square_gof(&resampled, &refit.dist, FITTED_PARAMS)?;
    Ok((regof.stat, floored))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `n` lognormal draws plus small per-point gaussian noise with the
    /// matching variance vector: data for which the bootstrap's model is
    /// exactly right.
    fn well_specified_sample(n: usize, seed: u64) -> Sample {
        let dist = Lognormal3::new(1.0, 0.8, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise_var = 0.0025_f64;
        let values: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                dist.sample(&mut rng) + noise_var.sqrt() * z
            })
            .collect();
        Sample::with_mean_variances(values, vec![noise_var; n]).unwrap()
    }

    #[test]
    fn validation() {
        let s = well_specified_sample(48, 1);
        assert_eq!(
            bootstrap_test(&s, 19, 0.05, 0).unwrap_err(),
            StatsError::TooFewRounds { needed: MIN_BOOTSTRAP_ROUNDS, got: 19 }
        );
        assert_eq!(bootstrap_test(&s, 20, 0.0, 0).unwrap_err(), StatsError::AlphaOutOfRange(0.0));
        assert_eq!(bootstrap_test(&s, 20, 1.0, 0).unwrap_err(), StatsError::AlphaOutOfRange(1.0));
        // Tail quantiles need enough rounds for the rank to exist.
        assert_eq!(
            bootstrap_test(&s, 30, 0.999, 0).unwrap_err(),
            StatsError::TooFewRounds { needed: 1000, got: 30 }
        );
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let s = well_specified_sample(48, 2);
        let a = bootstrap_test(&s, 24, 0.1, 77).unwrap();
        let b = bootstrap_test(&s, 24, 0.1, 77).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_test(&s, 24, 0.1, 78).unwrap();
        assert_ne!(a.round_stats, c.round_stats);
    }

    #[test]
    fn verdict_conventions_follow_the_round_statistics() {
        let s = well_specified_sample(48, 3);
        let out = bootstrap_test(&s, 40, 0.25, 5).unwrap();
        let r = &out.report;
        assert_eq!(out.round_stats.len(), 40);

        // critical = 30th smallest round statistic (floor(0.75 * 40)).
        let mut sorted = out.round_stats.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(r.critical_stat, sorted[29]);

        let at_least = out.round_stats.iter().filter(|&&v| v >= r.observed_stat).count();
        assert_eq!(r.p_boot, (at_least + 1) as f64 / 41.0);
        assert_eq!(r.reject, r.observed_stat > r.critical_stat);
        assert_eq!(r.observed_stat, out.gof.stat);
        assert!(!r.pooled_variance_fallback);
    }

    #[test]
    fn well_specified_data_is_accepted() {
        let s = well_specified_sample(80, 4);
        let out = bootstrap_test(&s, 200, 0.05, 11).unwrap();
        assert!(!out.report.reject, "observed {} critical {}", out.report.observed_stat, out.report.critical_stat);
        assert!(out.report.p_boot > 0.05, "p_boot = {}", out.report.p_boot);
        assert!(!out.report.floored_excessive);
    }

    #[test]
    fn gross_misfit_is_rejected() {
        // Uniform data cannot be matched by any lognormal; the observed
        // statistic should beat every round.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..100).map(|_| rng.gen_range(1.0..2.0)).collect();
        let s = Sample::new(values).unwrap();
        let out = bootstrap_test(&s, 60, 0.05, 12).unwrap();
        assert!(out.report.reject);
        assert_eq!(out.report.p_boot, 1.0 / 61.0);
        assert!(out.report.pooled_variance_fallback);
    }

    #[test]
    fn oversized_noise_trips_the_floor_warning() {
        // Noise standard deviation comparable to the whole distribution:
        // many resampled points land below the support and get clamped.
        let dist = Lognormal3::new(0.0, 0.5, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let values: Vec<f64> = (0..48).map(|_| dist.sample(&mut rng)).collect();
        let s = Sample::with_mean_variances(values, vec![25.0; 48]).unwrap();
        let out = bootstrap_test(&s, 30, 0.05, 13).unwrap();
        assert!(out.report.floored_fraction > 0.01);
        assert!(out.report.floored_excessive);
    }
}
