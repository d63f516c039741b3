use std::sync::Arc;

use rand::{Rng, RngCore};

use super::CostModel;
use crate::error::{GeomError, Result};

type DivergenceFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type DomainFn = dyn Fn(&[f64]) -> bool + Send + Sync;

/// A divergence `D` on `M × M` used directly as a cost. All derivatives come
/// from finite differences.
#[derive(Clone)]
pub struct DivergenceCost {
    n: usize,
    label: String,
    divergence: Arc<DivergenceFn>,
    domain: Arc<DomainFn>,
    sampler: Option<Arc<dyn Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync>>,
}

impl DivergenceCost {
    pub fn with_sampler(mut self, sampler: impl Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.sampler = Some(Arc::new(sampler));
        self
    }
}

/// Wrap a divergence as a cost after checking it on `samples`: it must vanish
/// on the diagonal, be nonnegative, and be positive off the diagonal.
pub fn divergence_as_cost(
    n: usize,
    label: impl Into<String>,
    divergence: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    domain: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    samples: &[Vec<f64>],
) -> Result<DivergenceCost> {
    let label = label.into();
    for p in samples {
        if p.len() != n || !domain(p) {
            return Err(GeomError::InvalidDivergence(format!(
                "sample {p:?} is outside the domain"
            )));
        }
        let d = divergence(p, p);
        if d.abs() > 1e-12 {
            return Err(GeomError::InvalidDivergence(format!("D[p:p] = {d:e} at {p:?}")));
        }
    }
    for (a, p) in samples.iter().enumerate() {
        for (b, q) in samples.iter().enumerate() {
            if a == b || p == q {
                continue;
            }
            let d = divergence(p, q);
            if !d.is_finite() || d < 0.0 {
                return Err(GeomError::InvalidDivergence(format!(
                    "D[{p:?}:{q:?}] = {d:e} is negative"
                )));
            }
            if d == 0.0 {
                return Err(GeomError::InvalidDivergence(format!(
                    "D vanishes off the diagonal at {p:?}, {q:?}"
                )));
            }
        }
    }
    Ok(DivergenceCost {
        n,
        label,
        divergence: Arc::new(divergence),
        domain: Arc::new(domain),
        sampler: None,
    })
}

impl CostModel for DivergenceCost {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        format!("divergence({})", self.label)
    }

    fn in_domain(&self, xi: &[f64], eta: &[f64]) -> bool {
        (self.domain)(xi) && (self.domain)(eta)
    }

    fn value(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
        Ok((self.divergence)(xi, eta))
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        match &self.sampler {
            Some(s) => (s(rng), s(rng)),
            None => {
                let draw =
                    |rng: &mut dyn RngCore| (0..self.n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
                (draw(rng), draw(rng))
            }
        }
    }
}

/// Kullback–Leibler divergence of two probability vectors.
pub fn kullback_leibler(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| a * (a / b).ln())
        .sum()
}

fn complete(x: &[f64]) -> Vec<f64> {
    let mut full = x.to_vec();
    full.push(1.0 - x.iter().sum::<f64>());
    full
}

/// Kullback–Leibler divergence on the open `n`-simplex, charted by its first `n` coordinates.
pub fn kl_divergence_cost(n: usize) -> Result<DivergenceCost> {
    let inside = |x: &[f64]| x.iter().all(|&v| v > 0.0) && x.iter().sum::<f64>() < 1.0;
    let m = n + 1;
    let samples: Vec<Vec<f64>> = (0..4)
        .map(|k| {
            let weights: Vec<f64> = (0..m)
                .map(|i| 1.0 + ((i + k) % m) as f64 * (k + 1) as f64 * 0.3)
                .collect();
            let total: f64 = weights.iter().sum();
            weights[..n].iter().map(|w| w / total).collect()
        })
        .collect();
    Ok(divergence_as_cost(
        n,
        format!("kl(n={n})"),
        |p: &[f64], q: &[f64]| kullback_leibler(&complete(p), &complete(q)),
        inside,
        &samples,
    )?
    .with_sampler(move |rng| {
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = w.iter().sum();
        w[..n].iter().map(|v| v / total).collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{CostExt, QuadraticCost};

    #[test]
    fn half_square_divergence_is_quadratic_cost() {
        let samples = vec![vec![0.0], vec![1.0], vec![-0.5]];
        let c = divergence_as_cost(1, "half_square", |p, q| 0.5 * (p[0] - q[0]).powi(2), |_| true, &samples).unwrap();
        let q = QuadraticCost::new(1);
        assert!((c.value(&[0.3], &[1.2]).unwrap() - q.value(&[0.3], &[1.2]).unwrap()).abs() < 1e-15);
        assert!((c.partial(&[0.3], &[1.2], &[0], &[0]).unwrap() + 1.0).abs() < 1e-8);
    }

    #[test]
    fn kl_example() {
        let c = kl_divergence_cost(1).unwrap();
        let expected = 0.6 * 1.2f64.ln() + 0.4 * 0.8f64.ln();
        assert!((c.value(&[0.6], &[0.5]).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.020136).abs() < 1e-6);
    }

    #[test]
    fn negative_divergence_rejected() {
        let samples = vec![vec![0.0], vec![1.0]];
        let bad = divergence_as_cost(1, "signed", |p, q| p[0] - q[0], |_| true, &samples);
        assert!(matches!(bad, Err(GeomError::InvalidDivergence(_))));
        let nonzero_diag = divergence_as_cost(1, "shifted", |p, q| 1.0 + (p[0] - q[0]).powi(2), |_| true, &samples);
        assert!(matches!(nonzero_diag, Err(GeomError::InvalidDivergence(_))));
    }
}
