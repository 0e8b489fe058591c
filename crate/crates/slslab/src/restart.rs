//! When do restarts help a randomized solver?
//!
//! For a runtime distribution `X` with quantile function `Q`, restarting
//! the solver whenever a run exceeds the cutoff `t = Q(p)` costs
//! `E[min(X, t)] / F(t)` in expectation. Normalizing by the no-restart
//! cost `E[X]` gives the functional
//!
//! ```text
//! R(p) = E[min(X, Q(p))] / E[X]
//! ```
//!
//! and the cutoff at quantile `p` beats running to completion exactly
//! when `R(p) < p`. [`analyze_restarts`] searches the quantile range for
//! such a point and for the cutoff minimizing expected total runtime;
//! [`restart_functional`] evaluates `R` at one point.
//!
//! Usefulness is decided on two routes. Distributions whose hazard rate
//! provably vanishes in the tail (every shifted lognormal does) benefit
//! from some finite cutoff whenever their mean is finite, so they are
//! always reported useful. For everything else the verdict comes from
//! the numeric search over quantiles roughly `1e-13` to `1 - 1e-13` (a
//! uniform grid in logit space). The search also backs the optional
//! witness: for narrow lognormals the crossing `R(p) < p` sits at
//! quantiles so close to one that the advantage is far below the f64
//! resolution of `R` — such analyses carry `witness_p = None` even
//! though restarts help in exact arithmetic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::golden_section_min;
use crate::stats::lognormal::Lognormal3;
use crate::stats::special::norm_cdf;
use crate::stats::StatsError;

#[derive(Debug, Error, PartialEq)]
pub enum RestartError {
    #[error("{name} must be positive and finite, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("bad runtime sample: {0}")]
    BadSample(#[from] StatsError),
}

/// A runtime distribution exposing exactly what the restart calculus
/// needs. `partial_first_moment` is `int_{lo}^{t} x dF(x)`, so
/// `E[min(X, t)] = t (1 - F(t)) + partial_first_moment(t)`.
pub trait RuntimeDistribution {
    fn cdf(&self, x: f64) -> f64;
    fn quantile(&self, p: f64) -> f64;
    fn mean(&self) -> f64;
    /// Infimum of the support.
    fn support_lo(&self) -> f64;
    fn partial_first_moment(&self, t: f64) -> f64;

    /// Whether the hazard rate tends to zero as `t -> infinity`. With a
    /// finite mean this guarantees some finite cutoff beats running to
    /// completion, even when the advantage is below f64 resolution.
    fn tail_hazard_vanishes(&self) -> bool {
        false
    }

    fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    fn expected_min_with_cutoff(&self, t: f64) -> f64 {
        t * self.survival(t) + self.partial_first_moment(t)
    }

    /// Expected total runtime of the restart-at-`t` strategy,
    /// `E[min(X, t)] / F(t)`; infinite when no mass lies at or below `t`.
    fn expected_runtime_with_restarts(&self, t: f64) -> f64 {
        let p = self.cdf(t);
        if p == 0.0 {
            return f64::INFINITY;
        }
        self.expected_min_with_cutoff(t) / p
    }
}

impl RuntimeDistribution for Lognormal3 {
    fn cdf(&self, x: f64) -> f64 {
        Lognormal3::cdf(self, x)
    }

    // The lognormal hazard decays like ln(t)/(sigma^2 t) for any
    // parameter choice.
    fn tail_hazard_vanishes(&self) -> bool {
        true
    }

    fn quantile(&self, p: f64) -> f64 {
        Lognormal3::quantile(self, p)
    }

    fn mean(&self) -> f64 {
        Lognormal3::mean(self)
    }

    fn support_lo(&self) -> f64 {
        self.gamma()
    }

    fn survival(&self, x: f64) -> f64 {
        Lognormal3::survival(self, x)
    }

    // gamma F(t) + exp(mu + sigma^2/2) Phi(z_t - sigma), the shifted
    // form of the standard lognormal partial expectation.
    fn partial_first_moment(&self, t: f64) -> f64 {
        if t <= self.gamma() {
            return 0.0;
        }
        let z = ((t - self.gamma()).ln() - self.mu()) / self.sigma();
        let tail = norm_cdf(z - self.sigma());
        let scale = (self.mu() + 0.5 * self.sigma() * self.sigma()).exp();
        // `scale` saturates to infinity for extreme parameters; with no
        // tail mass below `t` the moment is still dominated by gamma.
        let body = if tail == 0.0 { 0.0 } else { scale * tail };
        self.gamma() * self.cdf(t) + body
    }
}

/// Exponential reference distribution. Memorylessness makes restarts
/// exactly neutral: `R(p) = p` for every cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponential {
    mean: f64,
}

impl Exponential {
    pub fn new(mean: f64) -> Result<Exponential, RestartError> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(RestartError::BadParameter { name: "mean", value: mean });
        }
        Ok(Exponential { mean })
    }
}

impl RuntimeDistribution for Exponential {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-x / self.mean).exp_m1()
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        -self.mean * (-p).ln_1p()
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn support_lo(&self) -> f64 {
        0.0
    }

    fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (-x / self.mean).exp()
        }
    }

    fn partial_first_moment(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        // int_0^t x f(x) dx = mean - (t + mean) exp(-t/mean)
        self.mean - (t + self.mean) * (-t / self.mean).exp()
    }
}

/// Step distribution of an observed runtime sample, weighting each value
/// `1/n`. Quantiles are order statistics (inverse of the empirical
/// distribution function).
#[derive(Debug, Clone, PartialEq)]
pub struct Empirical {
    sorted: Vec<f64>,
    /// prefix[i] = sum of the first i sorted values.
    prefix: Vec<f64>,
}

impl Empirical {
    pub fn new(values: &[f64]) -> Result<Empirical, RestartError> {
        if values.is_empty() {
            return Err(StatsError::TooFewPoints { needed: 1, got: 0 }.into());
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(StatsError::NonFinite { index, value }.into());
            }
            if value <= 0.0 {
                return Err(StatsError::NonPositive { index, value }.into());
            }
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        for &v in &sorted {
            prefix.push(prefix.last().unwrap() + v);
        }
        Ok(Empirical { sorted, prefix })
    }

    fn n(&self) -> usize {
        self.sorted.len()
    }
}

impl RuntimeDistribution for Empirical {
    fn cdf(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&v| v <= x);
        below as f64 / self.n() as f64
    }

    fn quantile(&self, p: f64) -> f64 {
        let rank = (p * self.n() as f64).ceil() as usize;
        self.sorted[rank.clamp(1, self.n()) - 1]
    }

    fn mean(&self) -> f64 {
        self.prefix[self.n()] / self.n() as f64
    }

    fn support_lo(&self) -> f64 {
        self.sorted[0]
    }

    fn partial_first_moment(&self, t: f64) -> f64 {
        let below = self.sorted.partition_point(|&v| v <= t);
        self.prefix[below] / self.n() as f64
    }
}

/// `R(p) = E[min(X, Q(p))] / E[X]`. Zero on distributions with infinite
/// mean (any cutoff is infinitely better than running to completion).
pub fn restart_functional<D: RuntimeDistribution + ?Sized>(dist: &D, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "p = {p} outside [0, 1]");
    let mean = dist.mean();
    if !mean.is_finite() {
        return if p >= 1.0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return 1.0;
    }
    let t = dist.quantile(p);
    if !t.is_finite() {
        return 1.0;
    }
    dist.expected_min_with_cutoff(t) / mean
}

/// Margins below `-DETECTABLE_MARGIN` count as a real advantage;
/// anything closer to zero is indistinguishable from evaluation noise.
pub const DETECTABLE_MARGIN: f64 = 1e-10;

const SEARCH_GRID_POINTS: usize = 129;
const SEARCH_LOGIT_RANGE: f64 = 30.0;
const SEARCH_REFINE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p: f64,
    pub r: f64,
}

/// Outcome of the analysis: the usefulness verdict, the numeric witness
/// when one is representable, the runtime-optimal cutoff, and the
/// sampled `R` curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartAnalysis {
    pub useful: bool,
    /// Smallest `R(p) - p` found; negative means restarting helps.
    pub margin: f64,
    /// Quantile attaining `margin`.
    pub margin_p: f64,
    /// Quantile with a numerically certain advantage `R(p) < p`, when
    /// the search found one. `useful` with no witness means the
    /// advantage exists but is below f64 resolution.
    pub witness_p: Option<f64>,
    /// Cutoff `Q(witness_p)`.
    pub witness_cutoff: Option<f64>,
    /// Quantile minimizing expected total runtime.
    pub optimal_p: f64,
    /// Cutoff at `optimal_p`.
    pub optimal_cutoff: f64,
    /// Expected total runtime when restarting at `optimal_cutoff`.
    pub optimal_runtime: f64,
    /// No-restart expected runtime `E[X]`.
    pub mean_runtime: f64,
    pub curve: Vec<CurvePoint>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Grid minimum plus golden-section refinement between the neighbors of
/// the best grid point; returns `(argument, value)` in logit space.
fn refine_min(objective: &dyn Fn(f64) -> f64, grid: &[(f64, f64)]) -> (f64, f64) {
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .expect("grid is nonempty");
    let lo = grid[best.saturating_sub(1)].0;
    let hi = grid[(best + 1).min(grid.len() - 1)].0;
    let (x, v) = golden_section_min(objective, lo, hi, SEARCH_REFINE_TOL);
    if v < grid[best].1 {
        (x, v)
    } else {
        grid[best]
    }
}

/// Decides whether restarting can beat running to completion and finds
/// the cutoff with minimal expected total runtime.
pub fn analyze_restarts<D: RuntimeDistribution + ?Sized>(dist: &D) -> RestartAnalysis {
    let step = 2.0 * SEARCH_LOGIT_RANGE / (SEARCH_GRID_POINTS - 1) as f64;
    let logits: Vec<f64> =
        (0..SEARCH_GRID_POINTS).map(|i| -SEARCH_LOGIT_RANGE + i as f64 * step).collect();

    let curve: Vec<CurvePoint> = logits
        .iter()
        .map(|&x| {
            let p = sigmoid(x);
            CurvePoint { p, r: restart_functional(dist, p) }
        })
        .collect();

    let margin_obj = |x: f64| {
        let p = sigmoid(x);
        restart_functional(dist, p) - p
    };
    let margin_grid: Vec<(f64, f64)> =
        logits.iter().zip(&curve).map(|(&x, point)| (x, point.r - point.p)).collect();
    let (margin_x, margin) = refine_min(&margin_obj, &margin_grid);

    let runtime_obj =
        |x: f64| dist.expected_runtime_with_restarts(dist.quantile(sigmoid(x)));
    let runtime_grid: Vec<(f64, f64)> =
        logits.iter().map(|&x| (x, runtime_obj(x))).collect();
    let (optimal_x, optimal_runtime) = refine_min(&runtime_obj, &runtime_grid);
    let optimal_p = sigmoid(optimal_x);

    let mean = dist.mean();
    let witnessed = margin < -DETECTABLE_MARGIN;
    let margin_p = sigmoid(margin_x);
    RestartAnalysis {
        useful: witnessed || (dist.tail_hazard_vanishes() && mean.is_finite()),
        margin,
        margin_p,
        witness_p: witnessed.then_some(margin_p),
        witness_cutoff: witnessed.then(|| dist.quantile(margin_p)),
        optimal_p,
        optimal_cutoff: dist.quantile(optimal_p),
        optimal_runtime,
        mean_runtime: mean,
        curve,
    }
}
