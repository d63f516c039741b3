//! Optimal-transport graphs `{(p, f(p))}` and the c-divergence they induce.

mod charts;

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use charts::{fd_jacobian, BrenierChart, BrenierGenerator, ChartMap, EntropicChart, LogChart, TranslationChart};

use crate::cost::{ConvexCost, CoshSum, CostExt, CostModel, EntropicCost, EntropicProblem, QuarticPotential};
use crate::error::{GeomError, Result};
use crate::numeric::{symmetric_eigenvalues, Matrix};
use crate::pseudo::{cross_difference, ProductPoint, TangentPair};

/// Jacobians with a condition estimate above this are rejected.
pub const JACOBIAN_CONDITION_LIMIT: f64 = 1e8;

/// A point of the graph, carrying both coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphPoint {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl GraphPoint {
    pub fn product(&self) -> ProductPoint {
        ProductPoint::new(self.xi.clone(), self.eta.clone())
    }
}

/// Cost, transport map and potentials bundled as one chart of the graph.
#[derive(Clone)]
pub struct GraphChart {
    cost: Arc<dyn CostModel>,
    map: Arc<dyn ChartMap>,
    psi_shift: f64,
    label: String,
}

/// Outcome of the construction-time sanity checks.
#[derive(Clone, Debug)]
pub struct ChartValidation {
    pub samples: usize,
    /// Smallest `c(p, q′) − φ(p) − ψ(q′)` over sampled pairs.
    pub min_fenchel_gap: f64,
    pub max_jacobian_condition: f64,
    pub min_metric_eigenvalue: f64,
}

impl ChartValidation {
    pub fn passes(&self, gap_tol: f64) -> bool {
        self.min_fenchel_gap >= -gap_tol
            && self.max_jacobian_condition < JACOBIAN_CONDITION_LIMIT
            && self.min_metric_eigenvalue > 0.0
    }
}

impl std::fmt::Debug for GraphChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraphChart")
            .field("label", &self.label)
            .field("psi_shift", &self.psi_shift)
            .finish()
    }
}

impl GraphChart {
    /// Bundles a cost with a map without running validation.
    pub fn new(cost: Arc<dyn CostModel>, map: Arc<dyn ChartMap>) -> Result<Self> {
        if cost.dim() != map.dim() {
            return Err(GeomError::InvalidChart(format!(
                "cost dimension {} differs from map dimension {}",
                cost.dim(),
                map.dim()
            )));
        }
        let label = format!("{} / {}", cost.label(), map.label());
        Ok(Self {
            cost,
            map,
            psi_shift: 0.0,
            label,
        })
    }

    /// Like [`GraphChart::new`] but rejects charts failing [`GraphChart::validate`].
    pub fn validated(cost: Arc<dyn CostModel>, map: Arc<dyn ChartMap>) -> Result<Self> {
        let chart = Self::new(cost, map)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let report = chart.validate(64, &mut rng)?;
        if !report.passes(1e-9) {
            return Err(GeomError::InvalidChart(format!("{}: {report:?}", chart.label)));
        }
        Ok(chart)
    }

    /// Adds a constant to `ψ`, breaking the Fenchel inequality near the diagonal.
    pub fn with_psi_shift(mut self, shift: f64) -> Self {
        self.psi_shift = shift;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn cost(&self) -> &Arc<dyn CostModel> {
        &self.cost
    }

    pub fn map(&self) -> &Arc<dyn ChartMap> {
        &self.map
    }

    pub fn psi_shift(&self) -> f64 {
        self.psi_shift
    }

    fn require_primal(&self, xi: &[f64]) -> Result<()> {
        if self.map.contains(xi) {
            Ok(())
        } else {
            Err(GeomError::domain(format!(
                "{xi:?} is outside the domain of {}",
                self.label
            )))
        }
    }

    pub fn forward(&self, xi: &[f64]) -> Result<Vec<f64>> {
        self.require_primal(xi)?;
        Ok(self.map.forward(xi))
    }

    pub fn inverse(&self, eta: &[f64]) -> Result<Vec<f64>> {
        self.map.inverse(eta)
    }

    pub fn point(&self, xi: &[f64]) -> Result<GraphPoint> {
        Ok(GraphPoint {
            xi: xi.to_vec(),
            eta: self.forward(xi)?,
        })
    }

    pub fn point_from_dual(&self, eta: &[f64]) -> Result<GraphPoint> {
        Ok(GraphPoint {
            xi: self.inverse(eta)?,
            eta: eta.to_vec(),
        })
    }

    pub fn phi(&self, xi: &[f64]) -> Result<f64> {
        self.require_primal(xi)?;
        Ok(self.map.phi(xi))
    }

    /// `ψ(q) = c(f⁻¹(q), q) − φ(f⁻¹(q))`.
    pub fn c_transform(&self, q: &[f64]) -> Result<f64> {
        let p = self.inverse(q)?;
        Ok(self.cost.checked_value(&p, q)? - self.map.phi(&p))
    }

    /// The dual potential, including any configured shift.
    pub fn psi(&self, q: &[f64]) -> Result<f64> {
        Ok(self.c_transform(q)? + self.psi_shift)
    }

    /// `D[x : x′] = c(p, q′) − φ(p) − ψ(q′)` with `q′ = f(p′)`.
    pub fn c_divergence(&self, xi: &[f64], xi_prime: &[f64]) -> Result<f64> {
        let q_prime = self.forward(xi_prime)?;
        self.c_divergence_mixed(xi, &q_prime)
    }

    /// Same as [`GraphChart::c_divergence`] with the second argument in dual coordinates.
    pub fn c_divergence_mixed(&self, xi: &[f64], q_prime: &[f64]) -> Result<f64> {
        Ok(self.cost.checked_value(xi, q_prime)? - self.phi(xi)? - self.psi(q_prime)?)
    }

    /// `|D[x:x′] + D[x′:x] − δ(x, x′)|`.
    pub fn symmetrization_residual(&self, xi: &[f64], xi_prime: &[f64]) -> Result<f64> {
        let x = self.point(xi)?;
        let y = self.point(xi_prime)?;
        let lhs = self.c_divergence(xi, xi_prime)? + self.c_divergence(xi_prime, xi)?;
        let delta = cross_difference(self.cost.as_ref(), &x.product(), &y.product())?;
        Ok((lhs - delta).abs())
    }

    /// Residual of `D[x₂:x₁] + D[x₃:x₂] − D[x₃:x₁] = c(p₂,q₁) + c(p₃,q₂) − c(p₃,q₁) − c(p₂,q₂)`.
    pub fn three_point_residual(&self, x1: &[f64], x2: &[f64], x3: &[f64]) -> Result<f64> {
        let q1 = self.forward(x1)?;
        let q2 = self.forward(x2)?;
        let c = |p: &[f64], q: &[f64]| self.cost.checked_value(p, q);
        let lhs = self.c_divergence(x2, x1)? + self.c_divergence(x3, x2)? - self.c_divergence(x3, x1)?;
        let rhs = c(x2, &q1)? + c(x3, &q2)? - c(x3, &q1)? - c(x2, &q2)?;
        Ok((lhs - rhs).abs())
    }

    /// `π₀(p, q′) = (p, f(p))`.
    pub fn project_pi0(&self, at: &ProductPoint) -> Result<GraphPoint> {
        self.point(&at.xi)
    }

    /// `π₁(p, q′) = (f⁻¹(q′), q′)`.
    pub fn project_pi1(&self, at: &ProductPoint) -> Result<GraphPoint> {
        self.point_from_dual(&at.eta)
    }

    /// `J[m][j] = ∂ηᵐ/∂ξʲ`, rejected when ill-conditioned.
    pub fn jacobian(&self, xi: &[f64]) -> Result<Matrix> {
        self.require_primal(xi)?;
        let j = self.map.jacobian(xi);
        let cond = j.lu()?.condition();
        if cond > JACOBIAN_CONDITION_LIMIT {
            return Err(GeomError::Degenerate { condition: cond });
        }
        Ok(j)
    }

    /// The graph tangent vector over a primal direction: `a ⊕ J a`.
    pub fn lift(&self, xi: &[f64], a: &[f64]) -> Result<TangentPair> {
        let j = self.jacobian(xi)?;
        Ok(TangentPair::new(a.to_vec(), j.mul_vec(a)))
    }

    /// Splits a graph tangent vector `a ⊕ b` into `(a ⊕ 0, 0 ⊕ b)`; `b` must equal `J a`.
    pub fn iota_split(&self, xi: &[f64], v: &TangentPair) -> Result<(TangentPair, TangentPair)> {
        let expected = self.jacobian(xi)?.mul_vec(&v.a);
        let scale = 1.0 + crate::numeric::norm(&expected);
        let off = crate::numeric::max_abs_diff(&expected, &v.b);
        if off > 1e-9 * scale {
            return Err(GeomError::domain(format!(
                "vector is not tangent to the graph (off by {off:.3e})"
            )));
        }
        Ok((TangentPair::primal(&v.a), TangentPair::dual(&v.b)))
    }

    /// `g_ij = −c_{i:m̄}(p, f(p)) J^m_j`.
    pub fn metric_g(&self, xi: &[f64]) -> Result<Matrix> {
        let eta = self.forward(xi)?;
        let a = self.cost.mixed_block(xi, &eta)?;
        let j = self.jacobian(xi)?;
        Ok(a.mul(&j).scale(-1.0))
    }

    /// Fenchel gaps on sampled pairs, Jacobian conditioning and positivity of `g`.
    pub fn validate(&self, samples: usize, rng: &mut dyn RngCore) -> Result<ChartValidation> {
        let mut report = ChartValidation {
            samples,
            min_fenchel_gap: f64::INFINITY,
            max_jacobian_condition: 0.0,
            min_metric_eigenvalue: f64::INFINITY,
        };
        for _ in 0..samples {
            let p = self.map.sample(rng);
            let p2 = self.map.sample(rng);
            for q in [self.forward(&p2)?, self.forward(&p)?] {
                let gap = self.c_divergence_mixed(&p, &q)?;
                report.min_fenchel_gap = report.min_fenchel_gap.min(gap);
            }
            let cond = self
                .map
                .jacobian(&p)
                .lu()
                .map(|lu| lu.condition())
                .unwrap_or(f64::INFINITY);
            report.max_jacobian_condition = report.max_jacobian_condition.max(cond);
            let g = self.metric_g(&p)?;
            let low = symmetric_eigenvalues(&g.symmetrized())?[0];
            report.min_metric_eigenvalue = report.min_metric_eigenvalue.min(low);
        }
        Ok(report)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.map.sample(rng)
    }
}

/// Three-state cost matrix used by the built-in entropic chart.
pub fn three_state_cost_matrix() -> Matrix {
    Matrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]])
}

/// The validated reference charts: Brenier maps for the quadratic cost, power
/// charts for the log cost, translations for convex costs and the entropic chart.
pub fn builtin_charts() -> Result<Vec<GraphChart>> {
    let mut out = Vec::new();
    let linear = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
    for generator in [
        BrenierGenerator::Identity,
        BrenierGenerator::Linear(linear),
        BrenierGenerator::AnchoredLogSumExp,
    ] {
        let map = BrenierChart::new(2, generator)?;
        out.push(GraphChart::validated(Arc::new(map.cost()), Arc::new(map))?);
    }
    for map in [
        LogChart::new(2, 1.0, 1.0 / 3.0, 0.0)?,
        LogChart::half_log_two(1.0)?,
        LogChart::new(2, 0.5, 0.25, 0.0)?,
        LogChart::new(3, 2.0, 0.2, 0.0)?,
    ] {
        out.push(GraphChart::validated(Arc::new(map.cost()?), Arc::new(map))?);
    }
    let cosh = Arc::new(ConvexCost::new(2, Arc::new(CoshSum)));
    out.push(GraphChart::validated(
        cosh.clone(),
        Arc::new(TranslationChart::new(cosh, vec![0.0, 0.0])?),
    )?);
    let quartic = Arc::new(ConvexCost::new(2, Arc::new(QuarticPotential)));
    out.push(GraphChart::validated(
        quartic.clone(),
        Arc::new(TranslationChart::new(quartic, vec![0.4, -0.3])?),
    )?);
    let entropic = Arc::new(EntropicCost::new(EntropicProblem::new(three_state_cost_matrix(), 0.5)?));
    out.push(GraphChart::validated(
        entropic.clone(),
        Arc::new(EntropicChart::new(entropic)?),
    )?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log1() -> GraphChart {
        let m = LogChart::half_log_two(1.0).unwrap();
        GraphChart::validated(Arc::new(m.cost().unwrap()), Arc::new(m)).unwrap()
    }

    #[test]
    fn log_chart_values() {
        let g = log1();
        let d = g.c_divergence(&[4.0], &[1.0]).unwrap();
        assert!((d - (5.0f64 / 4.0).ln()).abs() < 1e-14);
        // ψ(q) = ½ log(2q)
        for q in [0.3, 1.0, 2.5] {
            assert!((g.psi(&[q]).unwrap() - 0.5 * (2.0 * q).ln()).abs() < 1e-14);
        }
        let pi1 = g.project_pi1(&ProductPoint::new(vec![2.0], vec![4.0])).unwrap();
        assert!((pi1.xi[0] - 0.25).abs() < 1e-15 && pi1.eta[0] == 4.0);
        let lift = g.lift(&[1.0], &[1.0]).unwrap();
        let (u, v) = g.iota_split(&[1.0], &lift).unwrap();
        assert_eq!(u.stacked(), vec![1.0, 0.0]);
        assert!((v.b[0] + 1.0).abs() < 1e-15 && v.a[0] == 0.0);
        assert!(g.iota_split(&[1.0], &TangentPair::new(vec![1.0], vec![1.0])).is_err());
        assert!((g.metric_g(&[1.0]).unwrap()[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn log_two_dim_map_is_reciprocal() {
        let m = LogChart::new(2, 1.0, 1.0 / 3.0, 0.0).unwrap();
        let g = GraphChart::validated(Arc::new(m.cost().unwrap()), Arc::new(m)).unwrap();
        let f = g.forward(&[1.5, 0.8]).unwrap();
        assert!((f[0] - 1.0 / 1.5).abs() < 1e-15 && (f[1] - 1.0 / 0.8).abs() < 1e-15);
    }

    #[test]
    fn identities_hold_on_builtins() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for chart in builtin_charts().unwrap() {
            for _ in 0..10 {
                let (a, b, c) = (chart.sample(&mut rng), chart.sample(&mut rng), chart.sample(&mut rng));
                assert!(chart.c_divergence(&a, &a).unwrap().abs() < 1e-9, "{}", chart.label());
                assert!(chart.c_divergence(&a, &b).unwrap() >= -1e-9, "{}", chart.label());
                assert!(
                    chart.symmetrization_residual(&a, &b).unwrap() < 1e-9,
                    "{}",
                    chart.label()
                );
                assert!(
                    chart.three_point_residual(&a, &b, &c).unwrap() < 1e-9,
                    "{}",
                    chart.label()
                );
            }
        }
    }

    #[test]
    fn quadratic_divergences_are_bregman() {
        let map = BrenierChart::new(2, BrenierGenerator::Identity).unwrap();
        let g = GraphChart::validated(Arc::new(map.cost()), Arc::new(map)).unwrap();
        let d = g.c_divergence(&[1.0, 2.0], &[0.0, -1.0]).unwrap();
        assert!((d - 5.0).abs() < 1e-14);
        assert_eq!(g.psi(&[3.0, 4.0]).unwrap(), 0.0);
    }

    #[test]
    fn shifted_psi_breaks_fenchel() {
        let m = LogChart::half_log_two(1.0).unwrap();
        let g = GraphChart::new(Arc::new(m.cost().unwrap()), Arc::new(m))
            .unwrap()
            .with_psi_shift(0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let report = g.validate(16, &mut rng).unwrap();
        assert!(report.min_fenchel_gap < -0.04);
        assert!(!report.passes(1e-9));
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let m = LogChart::half_log_two(1.0).unwrap();
        assert!(GraphChart::new(Arc::new(crate::cost::QuadraticCost::new(2)), Arc::new(m)).is_err());
    }
}
