use std::sync::Arc;

use rand::{Rng, RngCore};

use super::CostModel;
use crate::error::{GeomError, Result};
use crate::numeric::{central_fd, norm, FiniteDifferenceScheme, Matrix};

/// Strictly convex `Ψ: ℝⁿ → ℝ` with derivative access. Implement this to plug
/// a custom potential into [`ConvexCost`]; derivatives not returned by
/// [`ConvexPotential::derivative`] are estimated by finite differences.
pub trait ConvexPotential: Send + Sync {
    fn label(&self) -> String;
    fn value(&self, z: &[f64]) -> f64;
    fn derivative(&self, _z: &[f64], _indices: &[usize]) -> Option<f64> {
        None
    }
}

/// `½|z|²`.
#[derive(Clone, Copy, Debug, Default)]
pub struct HalfSquare;

impl ConvexPotential for HalfSquare {
    fn label(&self) -> String {
        "half_square".into()
    }
    fn value(&self, z: &[f64]) -> f64 {
        0.5 * z.iter().map(|x| x * x).sum::<f64>()
    }
    fn derivative(&self, z: &[f64], indices: &[usize]) -> Option<f64> {
        Some(match indices {
            [] => self.value(z),
            [i] => z[*i],
            [i, j] => f64::from(u8::from(i == j)),
            _ => 0.0,
        })
    }
}

/// `Σᵢ cosh(zᵢ)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CoshSum;

impl ConvexPotential for CoshSum {
    fn label(&self) -> String {
        "cosh_sum".into()
    }
    fn value(&self, z: &[f64]) -> f64 {
        z.iter().map(|x| x.cosh()).sum()
    }
    fn derivative(&self, z: &[f64], indices: &[usize]) -> Option<f64> {
        let Some((&first, rest)) = indices.split_first() else {
            return Some(self.value(z));
        };
        if rest.iter().any(|&i| i != first) {
            return Some(0.0);
        }
        Some(if indices.len().is_multiple_of(2) {
            z[first].cosh()
        } else {
            z[first].sinh()
        })
    }
}

/// `¼|z|⁴ + ½|z|²`, written as `G(r) = ¼r² + ½r` with `r = |z|²`.
#[derive(Clone, Copy, Debug, Default)]
pub struct QuarticPotential;

impl QuarticPotential {
    fn outer(k: usize, r: f64) -> f64 {
        match k {
            0 => 0.25 * r * r + 0.5 * r,
            1 => 0.5 * r + 0.5,
            2 => 0.5,
            _ => 0.0,
        }
    }

    /// Faà di Bruno over partitions into singletons (`∂ᵢr = 2zᵢ`) and pairs (`∂ᵢ∂ⱼr = 2δᵢⱼ`).
    fn partition_sum(z: &[f64], r: f64, remaining: &mut Vec<usize>, blocks: usize) -> f64 {
        let Some(first) = remaining.pop() else {
            return Self::outer(blocks, r);
        };
        let mut total = 2.0 * z[first] * Self::partition_sum(z, r, remaining, blocks + 1);
        for pos in 0..remaining.len() {
            if remaining[pos] == first {
                let partner = remaining.remove(pos);
                total += 2.0 * Self::partition_sum(z, r, remaining, blocks + 1);
                remaining.insert(pos, partner);
            }
        }
        remaining.push(first);
        total
    }
}

impl ConvexPotential for QuarticPotential {
    fn label(&self) -> String {
        "quartic".into()
    }
    fn value(&self, z: &[f64]) -> f64 {
        Self::outer(0, z.iter().map(|x| x * x).sum())
    }
    fn derivative(&self, z: &[f64], indices: &[usize]) -> Option<f64> {
        let r = z.iter().map(|x| x * x).sum();
        let mut remaining = indices.to_vec();
        Some(Self::partition_sum(z, r, &mut remaining, 0))
    }
}

/// Translation-invariant cost `c(p, q′) = Ψ(p − q′)`.
#[derive(Clone)]
pub struct ConvexCost {
    n: usize,
    psi: Arc<dyn ConvexPotential>,
}

impl ConvexCost {
    pub fn new(n: usize, psi: Arc<dyn ConvexPotential>) -> Self {
        assert!(n >= 1, "dimension must be positive");
        Self { n, psi }
    }

    pub fn potential(&self) -> &Arc<dyn ConvexPotential> {
        &self.psi
    }

    /// `∂^I Ψ(z)`, exact when the potential provides it.
    pub fn psi_derivative(&self, z: &[f64], indices: &[usize]) -> f64 {
        if let Some(v) = self.psi.derivative(z, indices) {
            return v;
        }
        central_fd(
            |w| self.psi.value(w),
            z,
            indices,
            FiniteDifferenceScheme::for_order(indices.len()),
        )
    }

    pub fn psi_hessian(&self, z: &[f64]) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.psi_derivative(z, &[i, j]))
    }

    /// Solve `∇Ψ(z) = target` by Newton iteration from `z = 0`.
    pub fn gradient_preimage(&self, target: &[f64]) -> Result<Vec<f64>> {
        let mut z = vec![0.0; self.n];
        let mut residual = f64::INFINITY;
        for _ in 0..100 {
            let grad: Vec<f64> = (0..self.n).map(|i| self.psi_derivative(&z, &[i])).collect();
            let r: Vec<f64> = grad.iter().zip(target).map(|(g, t)| g - t).collect();
            residual = norm(&r);
            if residual <= 1e-14 * (1.0 + norm(target)) {
                return Ok(z);
            }
            let step = self.psi_hessian(&z).solve(&r)?;
            for (zi, si) in z.iter_mut().zip(&step) {
                *zi -= si;
            }
        }
        if residual <= 1e-10 {
            return Ok(z);
        }
        Err(GeomError::Convergence {
            what: "gradient preimage",
            iterations: 100,
            residual,
        })
    }
}

impl CostModel for ConvexCost {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        format!("convex(n={}, psi={})", self.n, self.psi.label())
    }

    fn in_domain(&self, xi: &[f64], eta: &[f64]) -> bool {
        xi.iter().chain(eta).all(|v| v.is_finite())
    }

    fn value(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
        let z: Vec<f64> = xi.iter().zip(eta).map(|(p, q)| p - q).collect();
        Ok(self.psi.value(&z))
    }

    fn exact_partial(&self, xi: &[f64], eta: &[f64], primal: &[usize], dual: &[usize]) -> Result<Option<f64>> {
        let z: Vec<f64> = xi.iter().zip(eta).map(|(p, q)| p - q).collect();
        let indices: Vec<usize> = primal.iter().chain(dual).copied().collect();
        let sign = if dual.len().is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(self.psi.derivative(&z, &indices).map(|v| sign * v))
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        let xi = (0..self.n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eta = (0..self.n).map(|_| rng.random_range(-1.0..1.0)).collect();
        (xi, eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{fd_oracle_partial, CostExt, QuadraticCost};

    #[test]
    fn half_square_matches_quadratic() {
        let c = ConvexCost::new(2, Arc::new(HalfSquare));
        let q = QuadraticCost::new(2);
        let (xi, eta) = ([0.3, -0.7], [1.1, 0.2]);
        assert!((c.value(&xi, &eta).unwrap() - q.value(&xi, &eta).unwrap()).abs() < 1e-15);
        assert_eq!(c.mixed_block(&xi, &eta).unwrap(), q.mixed_block(&xi, &eta).unwrap());
    }

    #[test]
    fn cosh_mixed_block_at_zero() {
        let c = ConvexCost::new(3, Arc::new(CoshSum));
        let a = c.mixed_block(&[0.4, 0.1, -0.2], &[0.4, 0.1, -0.2]).unwrap();
        assert!(a.max_abs_diff(&Matrix::identity(3).scale(-1.0)) < 1e-15);
        let fd = fd_oracle_partial(&c, &[0.4, 0.1, -0.2], &[0.4, 0.1, -0.2], &[0], &[0]).unwrap();
        assert!((fd + 1.0).abs() < 1e-7);
    }

    #[test]
    fn quartic_mixed_block() {
        let c = ConvexCost::new(1, Arc::new(QuarticPotential));
        let v = c.partial(&[1.5], &[0.5], &[0], &[0]).unwrap();
        assert!((v + 4.0).abs() < 1e-14);
        let fd = fd_oracle_partial(&c, &[1.5], &[0.5], &[0], &[0]).unwrap();
        assert!((fd + 4.0).abs() < 1e-6);
    }

    #[test]
    fn quartic_higher_derivatives_against_fd() {
        let c = ConvexCost::new(2, Arc::new(QuarticPotential));
        let (xi, eta) = (vec![0.6, -0.3], vec![-0.2, 0.4]);
        for (p, d) in [(vec![0, 1], vec![0]), (vec![1], vec![0, 1]), (vec![0, 0], vec![0, 1])] {
            let exact = c.partial(&xi, &eta, &p, &d).unwrap();
            let fd = fd_oracle_partial(&c, &xi, &eta, &p, &d).unwrap();
            assert!((exact - fd).abs() < 1e-4, "{p:?} {d:?}: {exact} vs {fd}");
        }
    }

    struct Softplus;
    impl ConvexPotential for Softplus {
        fn label(&self) -> String {
            "softplus_plus_square".into()
        }
        fn value(&self, z: &[f64]) -> f64 {
            z.iter().map(|x| (1.0 + x.exp()).ln() + 0.5 * x * x).sum()
        }
    }

    #[test]
    fn user_potential_uses_fd() {
        let c = ConvexCost::new(1, Arc::new(Softplus));
        // Ψ″(0) = σ′(0) + 1 = 1.25.
        let v = c.partial(&[0.3], &[0.3], &[0], &[0]).unwrap();
        assert!((v + 1.25).abs() < 1e-6, "{v}");
    }

    #[test]
    fn gradient_preimage_inverts() {
        let c = ConvexCost::new(2, Arc::new(QuarticPotential));
        let z = c.gradient_preimage(&[0.7, -0.4]).unwrap();
        let g: Vec<f64> = (0..2).map(|i| c.psi_derivative(&z, &[i])).collect();
        assert!((g[0] - 0.7).abs() < 1e-12 && (g[1] + 0.4).abs() < 1e-12);
    }
}
