//! Three-parameter (shifted) lognormal distribution.
//!
//! `X = gamma + exp(mu + sigma * Z)` with `Z` standard normal. The shift
//! `gamma` models the fixed work any solver run must do before the
//! heavy-tailed part begins; hardness samples are fitted with
//! `gamma >= 0`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::stats::special::{norm_cdf, norm_pdf, norm_quantile, norm_sf};
use crate::stats::StatsError;

/// Where the direct survival evaluation gives way to the asymptotic
/// expansion; `norm_sf` itself is accurate to z ~ 37.5 and underflows
/// soon after.
const LN_SF_ASYMPTOTIC_Z: f64 = 36.0;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lognormal3 {
    mu: f64,
    sigma: f64,
    gamma: f64,
}

impl Lognormal3 {
    pub fn new(mu: f64, sigma: f64, gamma: f64) -> Result<Lognormal3, StatsError> {
        for (name, value) in [("mu", mu), ("sigma", sigma), ("gamma", gamma)] {
            if !value.is_finite() {
                return Err(StatsError::NonFiniteParam { name, value });
            }
        }
        if sigma <= 0.0 {
            return Err(StatsError::SigmaNotPositive(sigma));
        }
        Ok(Lognormal3 { mu, sigma, gamma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Standardized log coordinate; `-inf` at and below the shift.
    fn z(&self, x: f64) -> f64 {
        if x <= self.gamma {
            f64::NEG_INFINITY
        } else {
            ((x - self.gamma).ln() - self.mu) / self.sigma
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= self.gamma {
            0.0
        } else {
            norm_pdf(self.z(x)) / ((x - self.gamma) * self.sigma)
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= self.gamma {
            f64::NEG_INFINITY
        } else {
            let z = self.z(x);
            -0.5 * z * z - (x - self.gamma).ln() - self.sigma.ln() - SQRT_2PI.ln()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.gamma {
            0.0
        } else {
            norm_cdf(self.z(x))
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= self.gamma {
            1.0
        } else {
            norm_sf(self.z(x))
        }
    }

    /// `ln P(X > x)`, finite far beyond the underflow point of
    /// [`Lognormal3::survival`] thanks to the normal tail expansion
    /// `Q(z) ~ phi(z)/z * (1 - z^-2 + 3 z^-4 - 15 z^-6)`.
    pub fn ln_survival(&self, x: f64) -> f64 {
        let z = self.z(x);
        if z < LN_SF_ASYMPTOTIC_Z {
            self.survival(x).ln()
        } else {
            let zi = 1.0 / (z * z);
            let series = 1.0 - zi * (1.0 - zi * (3.0 - 15.0 * zi));
            -0.5 * z * z - (z * SQRT_2PI).ln() + series.ln()
        }
    }

    /// Inverse distribution function; `gamma` at `p = 0`, `inf` at `p = 1`.
    pub fn quantile(&self, p: f64) -> f64 {
        if p == 0.0 {
            return self.gamma;
        }
        self.gamma + (self.mu + self.sigma * norm_quantile(p)).exp()
    }

    /// `E[X] = gamma + exp(mu + sigma^2/2)`; overflows to `inf` for very
    /// large `sigma`, which downstream code treats as an infinite mean.
    pub fn mean(&self) -> f64 {
        self.gamma + (self.mu + 0.5 * self.sigma * self.sigma).exp()
    }

    /// Instantaneous failure rate `pdf / survival`, evaluated in log space
    /// so it stays meaningful deep in the tail. Tends to zero as
    /// `x -> inf`: runs that have already lasted long are expected to last
    /// much longer.
    pub fn hazard_rate(&self, x: f64) -> f64 {
        if x <= self.gamma {
            return self.pdf(x);
        }
        (self.ln_pdf(x) - self.ln_survival(x)).exp()
    }

    /// `P(X > x + y) / P(X > x)`: the long-tail signature approaches 1
    /// for any fixed `y` as `x` grows.
    pub fn long_tail_ratio(&self, x: f64, y: f64) -> f64 {
        debug_assert!(y >= 0.0);
        (self.ln_survival(x + y) - self.ln_survival(x)).exp()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.gamma + (self.mu + self.sigma * z).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist(mu: f64, sigma: f64, gamma: f64) -> Lognormal3 {
        Lognormal3::new(mu, sigma, gamma).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(Lognormal3::new(0.0, 1.0, 0.0).is_ok());
        assert_eq!(
            Lognormal3::new(0.0, 0.0, 0.0),
            Err(StatsError::SigmaNotPositive(0.0))
        );
        assert_eq!(
            Lognormal3::new(0.0, -1.0, 0.0),
            Err(StatsError::SigmaNotPositive(-1.0))
        );
        assert!(matches!(
            Lognormal3::new(f64::NAN, 1.0, 0.0),
            Err(StatsError::NonFiniteParam { name: "mu", .. })
        ));
        assert!(matches!(
            Lognormal3::new(0.0, 1.0, f64::INFINITY),
            Err(StatsError::NonFiniteParam { name: "gamma", .. })
        ));
    }

    // Pointwise values computed independently with 40-digit arithmetic.
    #[test]
    fn pdf_cdf_survival_reference_values() {
        let d = dist(1.3, 0.8, 5.0);
        let cases = [
            (5.5, 0.04476765311795377, 0.006361430558560105, 0.9936385694414399),
            (6.0, 0.13317283516323133, 0.05208127941521955, 0.9479187205847804),
            (9.0, 0.12394627288213822, 0.542949780086027, 0.45705021991397293),
            (20.0, 0.007063916562602118, 0.9608014162522308, 0.0391985837477692),
            (100.0, 1.3420341387024734e-06, 0.9999762242051361, 2.377579486391958e-05),
        ];
        for (x, pdf, cdf, sf) in cases {
            assert_relative_eq!(d.pdf(x), pdf, max_relative = 1e-12);
            assert_relative_eq!(d.cdf(x), cdf, max_relative = 1e-12);
            assert_relative_eq!(d.survival(x), sf, max_relative = 1e-12);
            assert_relative_eq!(d.ln_pdf(x).exp(), pdf, max_relative = 1e-12);
        }
        // At and below the shift.
        assert_eq!(d.pdf(5.0), 0.0);
        assert_eq!(d.cdf(4.0), 0.0);
        assert_eq!(d.survival(5.0), 1.0);
        assert_eq!(d.ln_pdf(5.0), f64::NEG_INFINITY);
    }

    #[test]
    fn quantile_reference_values_and_round_trip() {
        let d = dist(1.3, 0.8, 5.0);
        let cases = [
            (0.01, 5.5705934615149815),
            (0.5, 8.669296667619244),
            (0.999, 48.47499063956849),
        ];
        for (p, x) in cases {
            assert_relative_eq!(d.quantile(p), x, max_relative = 1e-12);
            assert_relative_eq!(d.cdf(x), p, max_relative = 1e-11);
        }
        assert_eq!(d.quantile(0.0), 5.0);
        assert_eq!(d.quantile(1.0), f64::INFINITY);
    }

    #[test]
    fn mean_reference_value_and_overflow() {
        assert_relative_eq!(
            dist(1.3, 0.8, 5.0).mean(),
            10.053090316563868,
            max_relative = 1e-14
        );
        assert_eq!(dist(0.0, 100.0, 1.0).mean(), f64::INFINITY);
    }

    #[test]
    fn ln_survival_reaches_far_past_underflow() {
        let d = dist(1.3, 0.8, 5.0);
        // z = 40: direct survival already underflows to 0 there.
        assert_eq!(d.survival(289738526663666.3), 0.0);
        assert_relative_eq!(
            d.ln_survival(289738526663666.3),
            -804.6084420137538,
            max_relative = 1e-12
        );
        // z = 250.
        assert_relative_eq!(
            d.ln_survival(2.6514241467687884e+87),
            -31256.440415450426,
            max_relative = 1e-12
        );
        // Consistency where both branches are finite: z just below the
        // switch point.
        let x = d.quantile(0.9999);
        assert_relative_eq!(d.ln_survival(x), d.survival(x).ln(), max_relative = 1e-10);
    }

    #[test]
    fn hazard_rate_decays_in_the_tail() {
        let d = dist(0.0, 1.0, 0.0);
        // Frozen: hazard at the 1 - 1e-8 quantile.
        assert_relative_eq!(
            d.hazard_rate(273.6914136533617),
            0.021119932509189844,
            max_relative = 1e-10
        );
        // Monotone decay across two decades of tail.
        let h1 = d.hazard_rate(d.quantile(0.99));
        let h2 = d.hazard_rate(d.quantile(0.9999));
        let h3 = d.hazard_rate(d.quantile(0.999999));
        assert!(h1 > h2 && h2 > h3);
    }

    #[test]
    fn long_tail_ratio_approaches_one() {
        let d = dist(0.0, 1.0, 0.0);
        // Frozen: ratio at the 1 - 1e-6 quantile with y = 1.
        assert_relative_eq!(
            d.long_tail_ratio(115.98075925101179, 1.0),
            0.9583734249889954,
            max_relative = 1e-10
        );
        // Ratio increases toward 1 as the base point moves out.
        let r1 = d.long_tail_ratio(d.quantile(0.999), 1.0);
        let r2 = d.long_tail_ratio(d.quantile(0.999999), 1.0);
        assert!(r1 < r2 && r2 < 1.0);
    }

    #[test]
    fn sampling_matches_moments() {
        let d = dist(0.5, 0.4, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 200_000;
        let mut sum = 0.0;
        let mut min = f64::INFINITY;
        for _ in 0..n {
            let x = d.sample(&mut rng);
            assert!(x > 10.0);
            sum += x;
            min = min.min(x);
        }
        let mean = sum / n as f64;
        // E[X] = 10 + exp(0.58); sd of the sample mean ~ 0.0016.
        assert_relative_eq!(mean, d.mean(), max_relative = 2e-3);
        assert!(min < d.quantile(1e-4));
    }

    #[test]
    fn cdf_is_monotone_and_matches_survival() {
        let d = dist(2.0, 1.5, 7.0);
        let mut last = -1.0;
        for i in 0..=200 {
            let x = 7.0 + i as f64 * 0.5;
            let c = d.cdf(x);
            assert!(c >= last);
            assert_relative_eq!(c + d.survival(x), 1.0, epsilon = 1e-14);
            last = c;
        }
    }
}
