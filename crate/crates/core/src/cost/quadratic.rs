use rand::{Rng, RngCore};

use super::CostModel;
use crate::error::Result;
use crate::numeric::Matrix;

/// `c(p, q′) = ½|p − q′|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticCost {
    n: usize,
}

impl QuadraticCost {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        Self { n }
    }
}

impl CostModel for QuadraticCost {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        format!("quadratic(n={})", self.n)
    }

    fn in_domain(&self, xi: &[f64], eta: &[f64]) -> bool {
        xi.iter().chain(eta).all(|v| v.is_finite())
    }

    fn value(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
        Ok(0.5 * xi.iter().zip(eta).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
    }

    fn exact_partial(&self, xi: &[f64], eta: &[f64], primal: &[usize], dual: &[usize]) -> Result<Option<f64>> {
        let v = match (primal, dual) {
            ([], []) => self.value(xi, eta)?,
            ([i], []) => xi[*i] - eta[*i],
            ([], [j]) => eta[*j] - xi[*j],
            ([i, j], []) | ([], [i, j]) => f64::from(u8::from(i == j)),
            ([i], [j]) => -f64::from(u8::from(i == j)),
            _ => 0.0,
        };
        Ok(Some(v))
    }

    fn exact_mixed_block(&self, _xi: &[f64], _eta: &[f64]) -> Result<Option<Matrix>> {
        Ok(Some(Matrix::identity(self.n).scale(-1.0)))
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        let xi = (0..self.n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let eta = (0..self.n).map(|_| rng.random_range(-2.0..2.0)).collect();
        (xi, eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostExt;

    #[test]
    fn value_and_blocks() {
        let c = QuadraticCost::new(2);
        assert_eq!(c.value(&[1.0, 2.0], &[0.0, 1.0]).unwrap(), 1.0);
        let a = c.mixed_block(&[0.3, 0.1], &[2.0, -1.0]).unwrap();
        assert_eq!(a, Matrix::identity(2).scale(-1.0));
        assert_eq!(c.partials_2_1(&[0.3, 0.1], &[2.0, -1.0]).unwrap().max_abs(), 0.0);
        assert_eq!(c.partials_2_2(&[0.3, 0.1], &[2.0, -1.0]).unwrap().max_abs(), 0.0);
    }
}
