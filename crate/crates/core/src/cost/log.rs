use rand::{Rng, RngCore};

use super::CostModel;
use crate::error::{GeomError, Result};
use crate::numeric::{dot, Matrix};

/// `c(p, q′) = (1/α) log(1 + α p·q′)` on the positive orthant.
#[derive(Clone, Debug, PartialEq)]
pub struct LogCost {
    n: usize,
    alpha: f64,
}

impl LogCost {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(GeomError::Config("dimension must be positive".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(GeomError::Config(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { n, alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `k`-th derivative of `s ↦ (1/α) log(1 + α s)`.
    fn outer_derivative(&self, k: usize, s: f64) -> f64 {
        let w = 1.0 / (1.0 + self.alpha * s);
        if k == 0 {
            return (1.0 + self.alpha * s).ln() / self.alpha;
        }
        let factorial: f64 = (1..k).map(|m| m as f64).product();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sign * factorial * self.alpha.powi(k as i32 - 1) * w.powi(k as i32)
    }

    /// Sum over partial matchings of primal against dual indices. A matched
    /// pair contributes `δ_ij`; an unmatched primal index `i` contributes `q′_i`
    /// and an unmatched dual index `j` contributes `p_j`.
    /// `blocks` counts the factors chosen so far; it sets the order of the outer derivative.
    fn matching_sum(
        &self,
        xi: &[f64],
        eta: &[f64],
        primal: &[usize],
        dual: &mut [Option<usize>],
        blocks: usize,
    ) -> f64 {
        match primal.split_first() {
            None => {
                let free: f64 = dual.iter().flatten().map(|&j| xi[j]).product();
                let order = blocks + dual.iter().flatten().count();
                free * self.outer_derivative(order, dot(xi, eta))
            }
            Some((&i, rest)) => {
                let mut total = eta[i] * self.matching_sum(xi, eta, rest, dual, blocks + 1);
                for slot in 0..dual.len() {
                    if dual[slot] == Some(i) {
                        dual[slot] = None;
                        total += self.matching_sum(xi, eta, rest, dual, blocks + 1);
                        dual[slot] = Some(i);
                    }
                }
                total
            }
        }
    }
}

impl CostModel for LogCost {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        format!("log(n={}, alpha={})", self.n, self.alpha)
    }

    fn in_domain(&self, xi: &[f64], eta: &[f64]) -> bool {
        xi.iter().chain(eta).all(|&v| v > 0.0 && v.is_finite())
    }

    fn value(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
        Ok(self.outer_derivative(0, dot(xi, eta)))
    }

    fn exact_partial(&self, xi: &[f64], eta: &[f64], primal: &[usize], dual: &[usize]) -> Result<Option<f64>> {
        if primal.is_empty() && dual.is_empty() {
            return self.value(xi, eta).map(Some);
        }
        let mut dual: Vec<Option<usize>> = dual.iter().copied().map(Some).collect();
        Ok(Some(self.matching_sum(xi, eta, primal, &mut dual, 0)))
    }

    fn exact_mixed_block(&self, xi: &[f64], eta: &[f64]) -> Result<Option<Matrix>> {
        let w = 1.0 / (1.0 + self.alpha * dot(xi, eta));
        Ok(Some(Matrix::from_fn(self.n, self.n, |i, j| {
            let delta = if i == j { w } else { 0.0 };
            delta - self.alpha * xi[j] * eta[i] * w * w
        })))
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        let xi = (0..self.n).map(|_| rng.random_range(0.5..2.0)).collect();
        let eta = (0..self.n).map(|_| rng.random_range(0.5..2.0)).collect();
        (xi, eta)
    }
}
