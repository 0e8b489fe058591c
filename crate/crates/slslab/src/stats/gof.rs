//! Chi-square goodness-of-fit with equiprobable bins.
//!
//! Bin edges are quantiles of the candidate distribution, so expected
//! counts start equal; adjacent bins are merged left to right until every
//! merged bin expects at least [`MIN_EXPECTED_PER_BIN`] observations.
//! Degrees of freedom are reduced by the number of parameters that were
//! fitted from the same data.

use serde::{Deserialize, Serialize};

use crate::stats::lognormal::Lognormal3;
use crate::stats::special::chi2_sf;
use crate::stats::StatsError;

pub const MIN_EXPECTED_PER_BIN: f64 = 5.0;
pub const MIN_MERGED_BINS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub stat: f64,
    pub df: usize,
    pub p_value: f64,
    /// Number of bins after merging.
    pub bins: usize,
    /// Number of equiprobable bins before merging.
    pub raw_bins: usize,
}

/// Initial bin count: `ceil(2 * n^0.4)`.
fn raw_bin_count(n: usize) -> usize {
    (2.0 * (n as f64).powf(0.4)).ceil() as usize
}

/// Pearson chi-square test of `values` against `dist`, discounting
/// `fitted_params` degrees of freedom for parameters estimated from the
/// same sample.
pub fn chi_square_gof(
    values: &[f64],
    dist: &Lognormal3,
    fitted_params: usize,
) -> Result<GofReport, StatsError> {
    let n = values.len();
    if n == 0 {
        return Err(StatsError::TooFewPoints { needed: 1, got: 0 });
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(StatsError::NonFinite { index, value });
        }
    }
    let raw_bins = raw_bin_count(n);
    // Interior edges at quantiles i/K; bin j covers (edge[j-1], edge[j]].
    let edges: Vec<f64> = (1..raw_bins)
        .map(|i| dist.quantile(i as f64 / raw_bins as f64))
        .collect();
    let mut observed = vec![0u64; raw_bins];
    for &x in values {
        let bin = edges.partition_point(|&e| e < x);
        observed[bin] += 1;
    }
    // Expected counts from the distribution function directly; for exact
    // quantile edges these are n/K up to quantile round-off.
    let mut expected = vec![0.0f64; raw_bins];
    for (j, e) in expected.iter_mut().enumerate() {
        let hi = if j + 1 == raw_bins { 1.0 } else { dist.cdf(edges[j]) };
        let lo = if j == 0 { 0.0 } else { dist.cdf(edges[j - 1]) };
        *e = n as f64 * (hi - lo);
    }

    // Greedy left-to-right merge; a trailing underfull group joins the
    // last closed one.
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for j in 0..raw_bins {
        acc_obs += observed[j] as f64;
        acc_exp += expected[j];
        if acc_exp >= MIN_EXPECTED_PER_BIN {
            groups.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += acc_obs;
                last.1 += acc_exp;
            }
            None => groups.push((acc_obs, acc_exp)),
        }
    }

    let bins = groups.len();
    if bins < MIN_MERGED_BINS {
        return Err(StatsError::TooFewBins { needed: MIN_MERGED_BINS, got: bins });
    }
    let df = bins
        .checked_sub(1 + fitted_params)
        .filter(|&df| df >= 1)
        .ok_or(StatsError::TooFewBins { needed: fitted_params + 2, got: bins })?;

    let stat: f64 = groups
        .iter()
        .map(|&(obs, exp)| (obs - exp) * (obs - exp) / exp)
        .sum();
    Ok(GofReport {
        stat,
        df,
        p_value: chi2_sf(stat, df as f64),
        bins,
        raw_bins,
    })
}
