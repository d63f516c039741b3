//! Transport costs `c(ξ, η′)` on `M × M′` and their mixed partial derivatives.
//!
//! Partial derivatives are addressed by two index lists: `primal` indices
//! differentiate in `ξ` and `dual` indices differentiate in `η′`. So
//! `c_{ij:k̄}` is `partial(xi, eta, &[i, j], &[k])`.

mod convex;
mod divergence;
mod entropic;
mod log;
mod quadratic;

use rand::{Rng, RngCore};

pub use convex::{ConvexCost, ConvexPotential, CoshSum, HalfSquare, QuarticPotential};
pub use divergence::{divergence_as_cost, kl_divergence_cost, kullback_leibler, DivergenceCost};
pub use entropic::{
    closed_form_shrinkage, shrinkage_jacobian, shrinkage_map, simplex_from_chart, sinkhorn_c_lambda, Coupling,
    EntropicCost, EntropicProblem, SinkhornSolution,
};
pub use log::LogCost;
pub use quadratic::QuadraticCost;

use crate::error::{GeomError, Result};
use crate::numeric::{central_fd_checked, FiniteDifferenceScheme, Matrix, Rank3, Rank4, Slot};

/// A smooth, non-degenerate cost function on `M × M′`, both `n`-dimensional.
pub trait CostModel: Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> String;

    fn in_domain(&self, xi: &[f64], eta: &[f64]) -> bool;

    /// Cost value. Callers are expected to check the domain first.
    fn value(&self, xi: &[f64], eta: &[f64]) -> Result<f64>;

    /// Exact mixed partial, or `Ok(None)` when only finite differences are available.
    fn exact_partial(&self, _xi: &[f64], _eta: &[f64], _primal: &[usize], _dual: &[usize]) -> Result<Option<f64>> {
        Ok(None)
    }

    /// Exact mixed block `c_{i:j̄}` when a faster route than entry-wise partials exists.
    fn exact_mixed_block(&self, _xi: &[f64], _eta: &[f64]) -> Result<Option<Matrix>> {
        Ok(None)
    }

    /// Random point of the working domain used by samplers.
    fn sample_point(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let draw = |rng: &mut dyn RngCore| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let xi = draw(rng);
        let eta = draw(rng);
        (xi, eta)
    }
}

/// Derivative access shared by every cost: exact where the cost provides it,
/// otherwise a central finite difference on the highest-order exact sub-partial.
pub trait CostExt: CostModel {
    fn checked_value(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
        self.require_domain(xi, eta)?;
        self.value(xi, eta)
    }

    fn require_domain(&self, xi: &[f64], eta: &[f64]) -> Result<()> {
        let n = self.dim();
        if xi.len() != n || eta.len() != n {
            return Err(GeomError::domain(format!(
                "expected coordinates of length {n}, got {} and {}",
                xi.len(),
                eta.len()
            )));
        }
        if !self.in_domain(xi, eta) {
            return Err(GeomError::domain(format!(
                "({xi:?}, {eta:?}) lies outside the domain of {}",
                self.label()
            )));
        }
        Ok(())
    }

    fn partial(&self, xi: &[f64], eta: &[f64], primal: &[usize], dual: &[usize]) -> Result<f64> {
        self.require_domain(xi, eta)?;
        if let Some(v) = self.exact_partial(xi, eta, primal, dual)? {
            return Ok(v);
        }
        if primal.is_empty() && dual.is_empty() {
            return self.value(xi, eta);
        }
        fd_partial(self, xi, eta, primal, dual)
    }

    /// `A[i][j] = c_{i:j̄}`.
    fn mixed_block(&self, xi: &[f64], eta: &[f64]) -> Result<Matrix> {
        self.require_domain(xi, eta)?;
        if let Some(a) = self.exact_mixed_block(xi, eta)? {
            return Ok(a);
        }
        let n = self.dim();
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = self.partial(xi, eta, &[i], &[j])?;
            }
        }
        Ok(a)
    }

    /// `B = A⁻¹`, so `B[m][j] = c^{m̄:j}`; degenerate blocks are rejected.
    fn mixed_inverse(&self, xi: &[f64], eta: &[f64]) -> Result<Matrix> {
        self.mixed_block(xi, eta)?.inverse()
    }

    /// `T[i][j][k] = c_{ij:k̄}`.
    fn partials_2_1(&self, xi: &[f64], eta: &[f64]) -> Result<Rank3> {
        let n = self.dim();
        let mut t = Rank3::zeros_with(n, [Slot::Unbarred, Slot::Unbarred, Slot::Barred]);
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let v = self.partial(xi, eta, &[i, j], &[k])?;
                    t[(i, j, k)] = v;
                    t[(j, i, k)] = v;
                }
            }
        }
        Ok(t)
    }

    /// `T[i][j][k] = c_{i:j̄k̄}`.
    fn partials_1_2(&self, xi: &[f64], eta: &[f64]) -> Result<Rank3> {
        let n = self.dim();
        let mut t = Rank3::zeros_with(n, [Slot::Unbarred, Slot::Barred, Slot::Barred]);
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let v = self.partial(xi, eta, &[i], &[j, k])?;
                    t[(i, j, k)] = v;
                    t[(i, k, j)] = v;
                }
            }
        }
        Ok(t)
    }

    /// `T[i][l][j][k] = c_{il:j̄k̄}`.
    fn partials_2_2(&self, xi: &[f64], eta: &[f64]) -> Result<Rank4> {
        let n = self.dim();
        let mut t = Rank4::zeros_with(n, [Slot::Unbarred, Slot::Unbarred, Slot::Barred, Slot::Barred]);
        for i in 0..n {
            for l in i..n {
                for j in 0..n {
                    for k in j..n {
                        let v = self.partial(xi, eta, &[i, l], &[j, k])?;
                        t[(i, l, j, k)] = v;
                        t[(l, i, j, k)] = v;
                        t[(i, l, k, j)] = v;
                        t[(l, i, k, j)] = v;
                    }
                }
            }
        }
        Ok(t)
    }
}

impl<T: CostModel + ?Sized> CostExt for T {}

/// Finite-difference partial: peel indices off until an exact sub-partial is
/// found, then difference that sub-partial over the peeled indices.
pub fn fd_partial<C: CostModel + ?Sized>(
    cost: &C,
    xi: &[f64],
    eta: &[f64],
    primal: &[usize],
    dual: &[usize],
) -> Result<f64> {
    let n = cost.dim();
    let mut core_p = primal.to_vec();
    let mut core_d = dual.to_vec();
    let mut peeled: Vec<usize> = Vec::new();
    loop {
        let next = if core_p.len() > 1 {
            core_p.pop()
        } else if core_d.len() > 1 {
            core_d.pop().map(|j| j + n)
        } else if !core_p.is_empty() {
            core_p.pop()
        } else {
            core_d.pop().map(|j| j + n)
        };
        let Some(idx) = next else { break };
        peeled.push(idx);
        if core_p.is_empty() && core_d.is_empty() {
            break;
        }
        if cost.exact_partial(xi, eta, &core_p, &core_d)?.is_some() {
            break;
        }
    }
    let mut z = xi.to_vec();
    z.extend_from_slice(eta);
    let f = |w: &[f64]| -> f64 {
        let (x, e) = w.split_at(n);
        let exact = if core_p.is_empty() && core_d.is_empty() {
            cost.value(x, e).ok()
        } else {
            cost.exact_partial(x, e, &core_p, &core_d).ok().flatten()
        };
        exact.unwrap_or(f64::NAN)
    };
    let scheme = FiniteDifferenceScheme::for_order(peeled.len());
    let v = central_fd_checked(f, &z, &peeled, scheme, |w| {
        let (x, e) = w.split_at(n);
        cost.in_domain(x, e)
    })?;
    if !v.is_finite() {
        return Err(GeomError::domain(format!(
            "finite-difference partial of {} is not finite",
            cost.label()
        )));
    }
    Ok(v)
}

/// Cost derivatives estimated purely by finite differences on the value.
/// Used as an oracle against exact partials.
pub fn fd_oracle_partial<C: CostModel + ?Sized>(
    cost: &C,
    xi: &[f64],
    eta: &[f64],
    primal: &[usize],
    dual: &[usize],
) -> Result<f64> {
    let n = cost.dim();
    let mut z = xi.to_vec();
    z.extend_from_slice(eta);
    let indices: Vec<usize> = primal.iter().copied().chain(dual.iter().map(|j| j + n)).collect();
    let f = |w: &[f64]| {
        let (x, e) = w.split_at(n);
        cost.value(x, e).unwrap_or(f64::NAN)
    };
    central_fd_checked(f, &z, &indices, FiniteDifferenceScheme::for_order(indices.len()), |w| {
        let (x, e) = w.split_at(n);
        cost.in_domain(x, e)
    })
}

/// `c(p, q₀′) + c(p₀, q′) − c(p, q′) − c(p₀, q₀′)`.
pub fn cross_difference_values<C: CostModel + ?Sized>(
    cost: &C,
    p: &[f64],
    q: &[f64],
    p0: &[f64],
    q0: &[f64],
) -> Result<f64> {
    Ok(cost.checked_value(p, q0)? + cost.checked_value(p0, q)?
        - cost.checked_value(p, q)?
        - cost.checked_value(p0, q0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cost with no exact partials beyond the value, to exercise the fallback.
    struct Opaque;

    impl CostModel for Opaque {
        fn dim(&self) -> usize {
            1
        }
        fn label(&self) -> String {
            "opaque log".into()
        }
        fn in_domain(&self, xi: &[f64], eta: &[f64]) -> bool {
            xi[0] > 0.0 && eta[0] > 0.0
        }
        fn value(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
            Ok((1.0 + xi[0] * eta[0]).ln())
        }
    }

    #[test]
    fn fallback_mixed_partial_of_log() {
        let v = Opaque.partial(&[1.0], &[1.0], &[0], &[0]).unwrap();
        assert!((v - 0.25).abs() < 1e-8);
        // c_{11:1̄} = −2q/(1+pq)³ = −¼ at (1,1).
        let v3 = Opaque.partial(&[1.0], &[1.0], &[0, 0], &[0]).unwrap();
        assert!((v3 + 0.25).abs() < 1e-6, "{v3}");
    }

    #[test]
    fn domain_is_enforced() {
        assert!(matches!(
            Opaque.partial(&[-1.0], &[1.0], &[0], &[0]),
            Err(GeomError::Domain(_))
        ));
        assert!(matches!(
            Opaque.checked_value(&[1.0, 2.0], &[1.0]),
            Err(GeomError::Domain(_))
        ));
    }
}
