//! Tabulated distribution curves for external plotting tools.
//!
//! Each table row pairs the empirical distribution of a sample with a
//! fitted model at one abscissa, covering the sample range on a linear or
//! logarithmic grid. Log grids make straight-line survival plots of
//! heavy tails; linear grids suit the body of the distribution.

use std::io::Write;

use crate::stats::ecdf::Ecdf;
use crate::stats::lognormal::Lognormal3;
use crate::stats::StatsError;

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const CSV_HEADER: &str = "x,ecdf,fit_cdf,ecdf_survival,fit_survival";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub x: f64,
    pub ecdf: f64,
    pub fit_cdf: f64,
    pub ecdf_survival: f64,
    pub fit_survival: f64,
}

/// Empirical and fitted distribution curves over `points` grid abscissas
/// spanning the sample range.
pub fn distribution_table(
    values: &[f64],
    dist: &Lognormal3,
    kind: GridKind,
    points: usize,
) -> Result<Vec<CurveRow>, StatsError> {
    if points < 2 {
        return Err(StatsError::TooFewGridPoints { needed: 2, got: points });
    }
    let ecdf = Ecdf::new(values)?;
    let (lo, hi) = (ecdf.min(), ecdf.max());
    if kind == GridKind::Log && lo <= 0.0 {
        return Err(StatsError::NonPositive { index: 0, value: lo });
    }
    let grid = |i: usize| -> f64 {
        let t = i as f64 / (points - 1) as f64;
        match kind {
            GridKind::Linear => lo + t * (hi - lo),
            GridKind::Log => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
        }
    };
    Ok((0..points)
        .map(|i| {
            let x = grid(i);
            CurveRow {
                x,
                ecdf: ecdf.eval(x),
                fit_cdf: dist.cdf(x),
                ecdf_survival: ecdf.survival(x),
                fit_survival: dist.survival(x),
            }
        })
        .collect())
}

/// Writes a table in CSV form with the pinned [`CSV_HEADER`].
pub fn write_csv(rows: &[CurveRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.x, row.ecdf, row.fit_cdf, row.ecdf_survival, row.fit_survival
        )?;
    }
    Ok(())
}

/// Writes only the cumulative columns: `x,ecdf,fit_cdf`.
pub fn write_cdf_csv(rows: &[CurveRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "x,ecdf,fit_cdf")?;
    for row in rows {
        writeln!(out, "{},{},{}", row.x, row.ecdf, row.fit_cdf)?;
    }
    Ok(())
}

/// Writes only the tail columns: `x,ecdf_survival,fit_survival`.
pub fn write_survival_csv(rows: &[CurveRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "x,ecdf_survival,fit_survival")?;
    for row in rows {
        writeln!(out, "{},{},{}", row.x, row.ecdf_survival, row.fit_survival)?;
    }
    Ok(())
}
