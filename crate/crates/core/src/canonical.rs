//! Divergences built from costs and from dualistic structures: the wrapped
//! c-divergence, cost recovery from `h`, and the Ay–Amari canonical divergence.

use std::sync::Arc;

use rand::RngCore;
use serde::Serialize;

use crate::cost::{cross_difference_values, CostExt, CostModel};
use crate::dualistic::{connections, gamma_star_primal, lower_last, metric_g};
use crate::error::{GeomError, Result};
use crate::numeric::{
    central_fd, gauss_legendre_on, norm, quadrature_triangle, rk4_step, shoot_bvp_with, sub, FiniteDifferenceScheme,
    Matrix, Rank3, ShootingOptions,
};
use crate::transport::GraphChart;

/// `c̃(p, p′) = D[(p, f(p)) : (p′, f(p′))]`, a divergence cost on `M × M`.
#[derive(Clone, Debug)]
pub struct WrappedCost {
    chart: GraphChart,
}

pub fn wrap_cost_as_divergence(chart: GraphChart) -> WrappedCost {
    WrappedCost { chart }
}

impl WrappedCost {
    pub fn chart(&self) -> &GraphChart {
        &self.chart
    }

    /// `|δ̃(x, x₀) − δ((p, f(p′)), (p₀, f(p₀′)))|` for `x = (p, p′)`, `x₀ = (p₀, p₀′)`.
    pub fn cross_difference_residual(&self, p: &[f64], p_prime: &[f64], p0: &[f64], p0_prime: &[f64]) -> Result<f64> {
        let wrapped = cross_difference_values(self, p, p_prime, p0, p0_prime)?;
        let q = self.chart.forward(p_prime)?;
        let q0 = self.chart.forward(p0_prime)?;
        let original = cross_difference_values(self.chart.cost().as_ref(), p, &q, p0, &q0)?;
        Ok((wrapped - original).abs())
    }
}

impl CostModel for WrappedCost {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn label(&self) -> String {
        format!("wrapped({})", self.chart.label())
    }

    fn in_domain(&self, xi: &[f64], eta: &[f64]) -> bool {
        self.chart.map().contains(xi) && self.chart.map().contains(eta)
    }

    fn value(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
        self.chart.c_divergence(xi, eta)
    }

    fn exact_mixed_block(&self, xi: &[f64], eta: &[f64]) -> Result<Option<Matrix>> {
        let q = self.chart.forward(eta)?;
        let a = self.chart.cost().mixed_block(xi, &q)?;
        Ok(Some(a.mul(&self.chart.jacobian(eta)?)))
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        (self.chart.sample(rng), self.chart.sample(rng))
    }
}

/// A smooth curve `t ↦ (γ(t), γ̇(t))`.
pub type Curve<'a> = &'a dyn Fn(f64) -> (Vec<f64>, Vec<f64>);

/// `c(x, y) = −∫∫_{0≤s≤t≤T} c_{i:j̄}(γ(s), γ(t)) γ̇ⁱ(s) γ̇ʲ(t) ds dt = ∫∫ h(v_{s,t}, v_{s,t})`
/// for a divergence cost `c` and a curve from `x` to `y`.
pub fn recover_cost_from_metric(cost: &dyn CostModel, curve: Curve<'_>, t_max: f64, order: usize) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let value = quadrature_triangle(
        |s, t| {
            let (ps, vs) = curve(s);
            let (pt, vt) = curve(t);
            match cost.mixed_block(&ps, &pt) {
                Ok(a) => -a.bilinear(&vs, &vt),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        t_max,
        order,
    );
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Straight segment from `x` to `y` on `[0, 1]`.
pub fn straight_curve(x: &[f64], y: &[f64]) -> impl Fn(f64) -> (Vec<f64>, Vec<f64>) {
    let (x, d) = (x.to_vec(), sub(y, x));
    move |t| (x.iter().zip(&d).map(|(a, b)| a + t * b).collect(), d.clone())
}

/// `(g, Γ, Γ*)` on a base manifold, all in one coordinate system.
pub trait DualisticStructure: Send + Sync {
    fn dim(&self) -> usize;
    fn label(&self) -> String;
    fn contains(&self, p: &[f64]) -> bool;
    fn metric(&self, p: &[f64]) -> Result<Matrix>;
    /// `Γ_ij^k`.
    fn gamma(&self, p: &[f64]) -> Result<Rank3>;
    /// `Γ*_ij^k`.
    fn gamma_star(&self, p: &[f64]) -> Result<Rank3>;
}

/// `g = κI`, `Γ = Γ* = 0`.
#[derive(Clone, Debug)]
pub struct EuclideanStructure {
    pub n: usize,
    pub kappa: f64,
}

impl DualisticStructure for EuclideanStructure {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        format!("euclidean(n={}, kappa={})", self.n, self.kappa)
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.n
    }

    fn metric(&self, _p: &[f64]) -> Result<Matrix> {
        Ok(Matrix::identity(self.n).scale(self.kappa))
    }

    fn gamma(&self, _p: &[f64]) -> Result<Rank3> {
        Ok(Rank3::zeros(self.n))
    }

    fn gamma_star(&self, _p: &[f64]) -> Result<Rank3> {
        Ok(Rank3::zeros(self.n))
    }
}

/// The structure a transport graph induces, in primal coordinates.
#[derive(Clone, Debug)]
pub struct ChartStructure {
    pub chart: GraphChart,
}

impl DualisticStructure for ChartStructure {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn label(&self) -> String {
        self.chart.label().to_string()
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.chart.map().contains(p)
    }

    fn metric(&self, p: &[f64]) -> Result<Matrix> {
        Ok(metric_g(&self.chart, p)?.primal)
    }

    fn gamma(&self, p: &[f64]) -> Result<Rank3> {
        Ok(connections(&self.chart, p)?.0)
    }

    fn gamma_star(&self, p: &[f64]) -> Result<Rank3> {
        gamma_star_primal(&self.chart, p)
    }
}

/// A dualistic structure viewed on the diagonal, with the working neighbourhood
/// taken as a coordinate ball of `radius` around each query point.
#[derive(Clone)]
pub struct DiagonalChart {
    structure: Arc<dyn DualisticStructure>,
    pub radius: f64,
    /// RK4 steps on `[0, 1]` for geodesic integration.
    pub steps: usize,
    /// Gauss–Legendre nodes for the energy integral.
    pub nodes: usize,
}

impl std::fmt::Debug for DiagonalChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiagonalChart")
            .field("structure", &self.structure.label())
            .field("radius", &self.radius)
            .finish()
    }
}

/// A primal geodesic on `[0, 1]` with its endpoints matched.
#[derive(Clone, Debug)]
pub struct ConnectingGeodesic {
    pub start: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl DiagonalChart {
    pub fn new(structure: Arc<dyn DualisticStructure>) -> Self {
        Self {
            structure,
            radius: 0.3,
            steps: 32,
            nodes: 32,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn structure(&self) -> &Arc<dyn DualisticStructure> {
        &self.structure
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    fn rhs(&self) -> impl Fn(f64, &[f64]) -> Vec<f64> + '_ {
        move |_t, y| {
            let n = y.len() / 2;
            let (x, v) = y.split_at(n);
            match self.structure.gamma(x) {
                Ok(gamma) => {
                    let a = gamma.contract_first_two(v, v);
                    v.iter().copied().chain(a.into_iter().map(|c| -c)).collect()
                }
                Err(_) => vec![f64::NAN; y.len()],
            }
        }
    }

    /// State `(γ(t), γ̇(t))` at each requested time (ascending, starting at or after 0).
    fn flow(&self, start: &[f64], velocity: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
        let rhs = self.rhs();
        let dt_max = 1.0 / self.steps as f64;
        let mut y = [start, velocity].concat();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &target in times {
            let span = target - t;
            if span != 0.0 {
                let m = (span.abs() / dt_max).ceil().max(1.0) as usize;
                let h = span / m as f64;
                for _ in 0..m {
                    y = rk4_step(&rhs, t, &y, h);
                    t += h;
                }
                t = target;
            }
            if y.iter().any(|v| !v.is_finite()) || !self.structure.contains(&y[..start.len()]) {
                return Err(GeomError::NoGeodesic(format!(
                    "geodesic from {start:?} left the domain"
                )));
            }
            out.push(y.clone());
        }
        Ok(out)
    }

    /// Shoots the primal geodesic from `p` reaching `q` at `t = 1`.
    pub fn connect(&self, p: &[f64], q: &[f64]) -> Result<ConnectingGeodesic> {
        let n = self.dim();
        if p.len() != n || q.len() != n || !self.structure.contains(p) || !self.structure.contains(q) {
            return Err(GeomError::domain("endpoints must lie in the structure's domain"));
        }
        let dist = norm(&sub(q, p));
        if dist > self.radius {
            return Err(GeomError::NoGeodesic(format!(
                "points are {dist:.3} apart, beyond the neighbourhood radius {}",
                self.radius
            )));
        }
        if dist == 0.0 {
            return Ok(ConnectingGeodesic {
                start: p.to_vec(),
                velocity: vec![0.0; n],
            });
        }
        let endpoint = |start: &[f64], v: &[f64]| -> Result<Vec<f64>> {
            let end = self.flow(start, v, &[1.0])?;
            Ok(end[0][..n].to_vec())
        };
        let opts = ShootingOptions {
            max_iterations: 50,
            jacobian_step: 1e-7,
        };
        let velocity = shoot_bvp_with(endpoint, p, q, 1e-13 * (1.0 + norm(q)), opts)
            .map_err(|e| GeomError::NoGeodesic(format!("shooting from {p:?} to {q:?} failed: {e}")))?;
        Ok(ConnectingGeodesic {
            start: p.to_vec(),
            velocity,
        })
    }

    /// `∫_a^b w(t) g(γ̇, γ̇) dt` along a connecting geodesic, by Gauss–Legendre.
    fn energy_integral(&self, geo: &ConnectingGeodesic, a: f64, b: f64, weight: impl Fn(f64) -> f64) -> Result<f64> {
        let n = self.dim();
        let (nodes, weights) = gauss_legendre_on(a, b, self.nodes);
        let mut order: Vec<usize> = (0..nodes.len()).collect();
        order.sort_by(|&i, &j| nodes[i].total_cmp(&nodes[j]));
        let sorted: Vec<f64> = order.iter().map(|&i| nodes[i]).collect();
        let states = self.flow(&geo.start, &geo.velocity, &sorted)?;
        let mut total = 0.0;
        for (k, &i) in order.iter().enumerate() {
            let (x, v) = states[k].split_at(n);
            total += weights[i] * weight(nodes[i]) * self.structure.metric(x)?.bilinear(v, v);
        }
        Ok(total)
    }

    /// Point and velocity of the connecting geodesic at time `t`.
    pub fn geodesic_state(&self, geo: &ConnectingGeodesic, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let y = if t >= 0.0 {
            self.flow(&geo.start, &geo.velocity, &[t])?.remove(0)
        } else {
            let back: Vec<f64> = geo.velocity.iter().map(|v| -v).collect();
            let mut y = self.flow(&geo.start, &back, &[-t])?.remove(0);
            y[n..].iter_mut().for_each(|v| *v = -*v);
            y
        };
        Ok((y[..n].to_vec(), y[n..].to_vec()))
    }
}

/// `D̄[p : q] = ∫₀¹ t g(γ̇(t), γ̇(t)) dt` along the primal geodesic from `p` to `q`.
pub fn ay_amari_divergence(diag: &DiagonalChart, p: &[f64], q: &[f64]) -> Result<f64> {
    let geo = diag.connect(p, q)?;
    diag.energy_integral(&geo, 0.0, 1.0, |t| t)
}

/// Maximum deviations between the structure recovered from `D̄` and the input.
#[derive(Clone, Debug, Serialize)]
pub struct StructureComparison {
    pub metric: f64,
    pub gamma: f64,
    pub gamma_star: f64,
    pub recovered_metric: Matrix,
}

impl StructureComparison {
    pub fn max_deviation(&self) -> f64 {
        self.metric.max(self.gamma).max(self.gamma_star)
    }
}

/// Applies `g = −∂∂′D̄`, `Γ_ijk = −∂_i∂_j∂′_k D̄`, `Γ*_ijk = −∂′_i∂′_j∂_k D̄` at `p`
/// and compares against the structure.
pub fn ay_amari_structure_check(diag: &DiagonalChart, p: &[f64]) -> Result<StructureComparison> {
    let n = diag.dim();
    let at = [p, p].concat();
    let d = |z: &[f64]| ay_amari_divergence(diag, &z[..n], &z[n..]).unwrap_or(f64::NAN);
    let g_fd = Matrix::from_fn(n, n, |i, j| {
        -central_fd(d, &at, &[i, n + j], FiniteDifferenceScheme::for_order(2))
    });
    let third = FiniteDifferenceScheme::for_order(3);
    // both tensors are symmetric in their first two slots
    let mut gamma_fd = Rank3::zeros(n);
    let mut star_fd = Rank3::zeros(n);
    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let g = -central_fd(d, &at, &[i, j, n + k], third);
                let s = -central_fd(d, &at, &[n + i, n + j, k], third);
                gamma_fd[(i, j, k)] = g;
                gamma_fd[(j, i, k)] = g;
                star_fd[(i, j, k)] = s;
                star_fd[(j, i, k)] = s;
            }
        }
    }
    if !g_fd.is_finite() || !gamma_fd.max_abs().is_finite() || !star_fd.max_abs().is_finite() {
        return Err(GeomError::NoGeodesic("divergence stencil failed".into()));
    }
    let s = diag.structure();
    let g = s.metric(p)?;
    let gamma = lower_last(&s.gamma(p)?, &g);
    let star = lower_last(&s.gamma_star(p)?, &g);
    Ok(StructureComparison {
        metric: g.max_abs_diff(&g_fd),
        gamma: gamma.max_abs_diff(&gamma_fd),
        gamma_star: star.max_abs_diff(&star_fd),
        recovered_metric: g_fd,
    })
}

/// `H(p, q) = g(γ̇(1), γ̇(1))` along the primal geodesic from `p` to `q`.
pub fn h_function(diag: &DiagonalChart, p: &[f64], q: &[f64]) -> Result<f64> {
    let geo = diag.connect(p, q)?;
    let (x, v) = diag.geodesic_state(&geo, 1.0)?;
    Ok(diag.structure().metric(&x)?.bilinear(&v, &v))
}

/// `H` next to `−∂²/∂s₁∂s₂ D̄[γ(s₁) : γ(s₂)]` at `(0, 1)`.
#[derive(Clone, Debug, Serialize)]
pub struct HConsistency {
    pub h: f64,
    pub from_divergence: f64,
}

pub fn h_function_consistency(diag: &DiagonalChart, p: &[f64], q: &[f64]) -> Result<HConsistency> {
    let geo = diag.connect(p, q)?;
    let h = {
        let (x, v) = diag.geodesic_state(&geo, 1.0)?;
        diag.structure().metric(&x)?.bilinear(&v, &v)
    };
    let step = 1e-3;
    let mut acc = 0.0;
    for (ds1, ds2, sign) in [
        (step, step, 1.0),
        (step, -step, -1.0),
        (-step, step, -1.0),
        (-step, -step, 1.0),
    ] {
        let (a, _) = diag.geodesic_state(&geo, ds1)?;
        let (b, _) = diag.geodesic_state(&geo, 1.0 + ds2)?;
        acc += sign * ay_amari_divergence(diag, &a, &b)?;
    }
    Ok(HConsistency {
        h,
        from_divergence: -acc / (4.0 * step * step),
    })
}

/// `|D̄[γ(s₁) : γ(s₂)] − ∫_{s₁}^{s₂} (t − s₁) g(γ̇, γ̇) dt|` along the geodesic from `p` to `q`.
pub fn restriction_identity_residual(diag: &DiagonalChart, p: &[f64], q: &[f64], s1: f64, s2: f64) -> Result<f64> {
    let geo = diag.connect(p, q)?;
    let integral = diag.energy_integral(&geo, s1, s2, |t| t - s1)?;
    let (a, _) = diag.geodesic_state(&geo, s1)?;
    let (b, _) = diag.geodesic_state(&geo, s2)?;
    Ok((ay_amari_divergence(diag, &a, &b)? - integral).abs())
}

/// `D̄` exposed as a divergence cost, with finite-difference derivatives.
#[derive(Clone, Debug)]
pub struct AyAmariCost {
    pub diag: DiagonalChart,
}

impl CostModel for AyAmariCost {
    fn dim(&self) -> usize {
        self.diag.dim()
    }

    fn label(&self) -> String {
        format!("ay_amari({})", self.diag.structure().label())
    }

    fn in_domain(&self, xi: &[f64], eta: &[f64]) -> bool {
        let s = self.diag.structure();
        s.contains(xi) && s.contains(eta) && norm(&sub(xi, eta)) <= self.diag.radius
    }

    fn value(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
        ay_amari_divergence(&self.diag, xi, eta)
    }

    fn sample_point(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        use rand::Rng;
        let n = self.dim();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = p.iter().map(|x| x + rng.random_range(-0.1..0.1)).collect();
        (p, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::{BrenierChart, BrenierGenerator, LogChart};

    fn log1() -> GraphChart {
        let m = LogChart::half_log_two(1.0).unwrap();
        GraphChart::validated(Arc::new(m.cost().unwrap()), Arc::new(m)).unwrap()
    }

    fn log2() -> GraphChart {
        let m = LogChart::new(2, 1.0, 1.0 / 3.0, 0.0).unwrap();
        GraphChart::validated(Arc::new(m.cost().unwrap()), Arc::new(m)).unwrap()
    }

    #[test]
    fn wrapped_log_cost() {
        let w = wrap_cost_as_divergence(log1());
        for (p, q) in [(1.0, 4.0), (0.7, 2.0), (3.0, 3.0)] {
            let expect = ((p + q) / (2.0 * (p * q as f64).sqrt())).ln();
            assert!((w.value(&[p], &[q]).unwrap() - expect).abs() < 1e-14);
        }
        assert!(w.cross_difference_residual(&[1.0], &[2.0], &[0.5], &[3.0]).unwrap() < 1e-12);
        let fd = crate::cost::fd_oracle_partial(&w, &[1.2], &[0.8], &[0], &[0]).unwrap();
        assert!((w.mixed_block(&[1.2], &[0.8]).unwrap()[(0, 0)] - fd).abs() < 1e-6);
    }

    #[test]
    fn wrapped_quadratic_is_half_square() {
        let m = BrenierChart::new(2, BrenierGenerator::Identity).unwrap();
        let w = wrap_cost_as_divergence(GraphChart::validated(Arc::new(m.cost()), Arc::new(m)).unwrap());
        assert!((w.value(&[1.0, 0.0], &[0.0, 2.0]).unwrap() - 2.5).abs() < 1e-14);
        assert_eq!(w.value(&[0.3, 0.3], &[0.3, 0.3]).unwrap(), 0.0);
    }

    #[test]
    fn recovers_costs() {
        let m = BrenierChart::new(1, BrenierGenerator::Identity).unwrap();
        let w = wrap_cost_as_divergence(GraphChart::validated(Arc::new(m.cost()), Arc::new(m)).unwrap());
        let line = straight_curve(&[0.0], &[1.0]);
        assert!((recover_cost_from_metric(&w, &line, 1.0, 8).unwrap() - 0.5).abs() < 1e-14);
        let bent = |t: f64| (vec![t * t], vec![2.0 * t]);
        assert!((recover_cost_from_metric(&w, &bent, 1.0, 16).unwrap() - 0.5).abs() < 1e-5);
        let point = straight_curve(&[0.4], &[0.4]);
        assert_eq!(recover_cost_from_metric(&w, &point, 1.0, 8).unwrap(), 0.0);

        let log = wrap_cost_as_divergence(log1());
        let line = straight_curve(&[1.0], &[4.0]);
        let r = recover_cost_from_metric(&log, &line, 1.0, 32).unwrap();
        assert!((r - (5.0f64 / 4.0).ln()).abs() < 1e-6, "{r}");
    }

    #[test]
    fn euclidean_ay_amari() {
        let diag = DiagonalChart::new(Arc::new(EuclideanStructure { n: 2, kappa: 1.0 }));
        let d = ay_amari_divergence(&diag, &[0.1, 0.2], &[0.25, 0.1]).unwrap();
        assert!((d - 0.5 * (0.15f64.powi(2) + 0.01)).abs() < 1e-12);
        assert_eq!(ay_amari_divergence(&diag, &[0.1, 0.2], &[0.1, 0.2]).unwrap(), 0.0);
        assert!(matches!(
            ay_amari_divergence(&diag, &[0.0, 0.0], &[1.0, 0.0]),
            Err(GeomError::NoGeodesic(_))
        ));
        let scaled = DiagonalChart::new(Arc::new(EuclideanStructure { n: 2, kappa: 3.0 }));
        assert!((h_function(&scaled, &[0.0, 0.0], &[0.1, 0.2]).unwrap() - 3.0 * 0.05).abs() < 1e-12);
        let cmp = ay_amari_structure_check(&diag, &[0.3, -0.2]).unwrap();
        assert!(cmp.max_deviation() < 1e-6, "{cmp:?}");
    }

    #[test]
    fn quadratic_structure_recovered() {
        let a = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let m = BrenierChart::new(2, BrenierGenerator::Linear(a.clone())).unwrap();
        let chart = GraphChart::validated(Arc::new(m.cost()), Arc::new(m)).unwrap();
        let diag = DiagonalChart::new(Arc::new(ChartStructure { chart }));
        let cmp = ay_amari_structure_check(&diag, &[0.2, 0.1]).unwrap();
        assert!(cmp.recovered_metric.max_abs_diff(&a) < 1e-4, "{cmp:?}");
    }

    #[test]
    fn log_structure_recovered() {
        let diag = DiagonalChart::new(Arc::new(ChartStructure { chart: log2() }));
        let cmp = ay_amari_structure_check(&diag, &[1.0, 1.0]).unwrap();
        let g = Matrix::from_rows(&[vec![2.0 / 9.0, -1.0 / 9.0], vec![-1.0 / 9.0, 2.0 / 9.0]]);
        assert!(cmp.recovered_metric.max_abs_diff(&g) < 1e-3, "{cmp:?}");
        assert!(cmp.max_deviation() < 1e-3, "{cmp:?}");
        let hc = h_function_consistency(&diag, &[1.0, 1.0], &[1.2, 0.9]).unwrap();
        assert!((hc.h - hc.from_divergence).abs() < 1e-3, "{hc:?}");
        assert!(restriction_identity_residual(&diag, &[1.0, 1.0], &[1.2, 0.9], 0.2, 0.9).unwrap() < 1e-4);
    }

    #[test]
    fn euclidean_round_trip() {
        let diag = DiagonalChart::new(Arc::new(EuclideanStructure { n: 1, kappa: 2.0 }));
        let cost = AyAmariCost { diag: diag.clone() };
        let line = straight_curve(&[0.0], &[0.2]);
        let r = recover_cost_from_metric(&cost, &line, 1.0, 6).unwrap();
        let d = ay_amari_divergence(&diag, &[0.0], &[0.2]).unwrap();
        assert!((r - d).abs() < 1e-3, "{r} vs {d}");
    }
}
