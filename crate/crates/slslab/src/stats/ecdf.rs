//! Empirical distribution function over a sorted copy of the data.

use crate::stats::StatsError;

#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Ecdf, StatsError> {
        if values.is_empty() {
            return Err(StatsError::TooFewPoints { needed: 1, got: 0 });
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(StatsError::NonFinite { index, value });
            }
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("values are finite"));
        Ok(Ecdf { sorted })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Right-continuous step function `#{x_i <= x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        let le = self.sorted.partition_point(|&v| v <= x);
        le as f64 / self.sorted.len() as f64
    }

    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.eval(x)
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().expect("non-empty")
    }
}
