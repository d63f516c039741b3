use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::cost::{
    closed_form_shrinkage, shrinkage_jacobian, simplex_from_chart, ConvexCost, CostModel, EntropicCost, LogCost,
    QuadraticCost,
};
use crate::error::{GeomError, Result};
use crate::numeric::{jacobian, Matrix};

/// A transport map `f: ξ ↦ η` with its potential `φ` on `M`.
pub trait ChartMap: Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> String;

    /// Whether `ξ` lies in the primal domain.
    fn contains(&self, xi: &[f64]) -> bool;

    /// Whether `η` lies in the range of `f`.
    fn contains_dual(&self, eta: &[f64]) -> bool;

    fn forward(&self, xi: &[f64]) -> Vec<f64>;

    /// `J[m][j] = ∂ηᵐ/∂ξʲ`.
    fn jacobian(&self, xi: &[f64]) -> Matrix;

    /// `H[c][(a, b)] = ∂²η^c/∂ξᵃ∂ξᵇ`; central differences of the Jacobian by default.
    fn second_derivative(&self, xi: &[f64]) -> Vec<Matrix> {
        let n = self.dim();
        let h = 1e-5;
        let mut out = vec![Matrix::zeros(n, n); n];
        let mut x = xi.to_vec();
        for b in 0..n {
            let orig = x[b];
            x[b] = orig + h;
            let jp = self.jacobian(&x);
            x[b] = orig - h;
            let jm = self.jacobian(&x);
            x[b] = orig;
            for (c, hc) in out.iter_mut().enumerate() {
                for a in 0..n {
                    hc[(a, b)] = (jp[(c, a)] - jm[(c, a)]) / (2.0 * h);
                }
            }
        }
        for hc in &mut out {
            *hc = hc.symmetrized();
        }
        out
    }

    fn inverse(&self, eta: &[f64]) -> Result<Vec<f64>>;

    fn phi(&self, xi: &[f64]) -> f64;

    /// Random primal point from the chart's working region.
    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64>;
}

/// Generator `ϕ` of a Brenier map `f = ∇ϕ` for the quadratic cost.
#[derive(Clone, Debug)]
pub enum BrenierGenerator {
    /// `ϕ = ½|p|²`.
    Identity,
    /// `ϕ = ½ pᵀAp` with `A` symmetric positive definite.
    Linear(Matrix),
    /// `ϕ = log(1 + Σ e^{pᵢ})`, whose gradient is a softmax against an anchor state.
    AnchoredLogSumExp,
}

/// Quadratic-cost chart. The stored potential is `φ = ½|p|² − ϕ(p)`, so that
/// `c(p, q′) − φ(p) − ψ(q′)` is the Bregman divergence of `ϕ`.
#[derive(Clone, Debug)]
pub struct BrenierChart {
    n: usize,
    generator: BrenierGenerator,
}

impl BrenierChart {
    pub fn new(n: usize, generator: BrenierGenerator) -> Result<Self> {
        if n == 0 {
            return Err(GeomError::InvalidChart("dimension must be positive".into()));
        }
        if let BrenierGenerator::Linear(a) = &generator {
            if a.rows() != n || !a.is_symmetric(1e-12) {
                return Err(GeomError::InvalidChart(
                    "linear generator must be a symmetric n×n matrix".into(),
                ));
            }
            let values = crate::numeric::symmetric_eigenvalues(a)?;
            if values[0] <= 1e-10 {
                return Err(GeomError::InvalidChart(
                    "linear generator must be positive definite".into(),
                ));
            }
        }
        Ok(Self { n, generator })
    }

    pub fn generator(&self) -> &BrenierGenerator {
        &self.generator
    }

    fn softmax(p: &[f64]) -> Vec<f64> {
        let m = p.iter().copied().fold(0.0f64, f64::max);
        let anchor = (-m).exp();
        let e: Vec<f64> = p.iter().map(|x| (x - m).exp()).collect();
        let total = anchor + e.iter().sum::<f64>();
        e.iter().map(|x| x / total).collect()
    }

    /// Convex generator `ϕ`.
    pub fn generator_value(&self, p: &[f64]) -> f64 {
        match &self.generator {
            BrenierGenerator::Identity => 0.5 * p.iter().map(|x| x * x).sum::<f64>(),
            BrenierGenerator::Linear(a) => 0.5 * a.bilinear(p, p),
            BrenierGenerator::AnchoredLogSumExp => {
                let m = p.iter().copied().fold(0.0f64, f64::max);
                m + ((-m).exp() + p.iter().map(|x| (x - m).exp()).sum::<f64>()).ln()
            }
        }
    }

    pub fn cost(&self) -> QuadraticCost {
        QuadraticCost::new(self.n)
    }
}

impl ChartMap for BrenierChart {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        let g = match &self.generator {
            BrenierGenerator::Identity => "identity".to_string(),
            BrenierGenerator::Linear(a) => format!("linear{:?}", a.to_rows()),
            BrenierGenerator::AnchoredLogSumExp => "anchored_logsumexp".to_string(),
        };
        format!("brenier(n={}, {g})", self.n)
    }

    fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.n && xi.iter().all(|v| v.is_finite())
    }

    fn contains_dual(&self, eta: &[f64]) -> bool {
        if eta.len() != self.n || !eta.iter().all(|v| v.is_finite()) {
            return false;
        }
        match self.generator {
            BrenierGenerator::AnchoredLogSumExp => eta.iter().all(|&v| v > 0.0) && eta.iter().sum::<f64>() < 1.0,
            _ => true,
        }
    }

    fn forward(&self, xi: &[f64]) -> Vec<f64> {
        match &self.generator {
            BrenierGenerator::Identity => xi.to_vec(),
            BrenierGenerator::Linear(a) => a.mul_vec(xi),
            BrenierGenerator::AnchoredLogSumExp => Self::softmax(xi),
        }
    }

    fn jacobian(&self, xi: &[f64]) -> Matrix {
        match &self.generator {
            BrenierGenerator::Identity => Matrix::identity(self.n),
            BrenierGenerator::Linear(a) => a.clone(),
            BrenierGenerator::AnchoredLogSumExp => {
                let s = Self::softmax(xi);
                Matrix::from_fn(self.n, self.n, |i, j| if i == j { s[i] } else { 0.0 } - s[i] * s[j])
            }
        }
    }

    fn second_derivative(&self, xi: &[f64]) -> Vec<Matrix> {
        let n = self.n;
        match &self.generator {
            BrenierGenerator::AnchoredLogSumExp => {
                let s = Self::softmax(xi);
                let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                (0..n)
                    .map(|c| {
                        Matrix::from_fn(n, n, |a, b| {
                            s[c] * (d(c, a) - s[a]) * (d(c, b) - s[b]) - s[c] * s[b] * (d(b, a) - s[a])
                        })
                    })
                    .collect()
            }
            _ => vec![Matrix::zeros(n, n); n],
        }
    }

    fn inverse(&self, eta: &[f64]) -> Result<Vec<f64>> {
        if !self.contains_dual(eta) {
            return Err(GeomError::domain(format!(
                "{eta:?} is outside the range of {}",
                self.label()
            )));
        }
        match &self.generator {
            BrenierGenerator::Identity => Ok(eta.to_vec()),
            BrenierGenerator::Linear(a) => a.solve(eta),
            BrenierGenerator::AnchoredLogSumExp => {
                let anchor = 1.0 - eta.iter().sum::<f64>();
                Ok(eta.iter().map(|q| (q / anchor).ln()).collect())
            }
        }
    }

    fn phi(&self, xi: &[f64]) -> f64 {
        0.5 * xi.iter().map(|x| x * x).sum::<f64>() - self.generator_value(xi)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
}

/// Log-cost chart with `φ(p) = (s/α) Σ log pᵢ + offset`, `s > 0`, `s·n < 1`.
/// The transport map is `fᵢ(p) = k/pᵢ` with `k = s / (α(1 − s n))`.
#[derive(Clone, Debug)]
pub struct LogChart {
    n: usize,
    alpha: f64,
    s: f64,
    offset: f64,
}

impl LogChart {
    pub fn new(n: usize, alpha: f64, s: f64, offset: f64) -> Result<Self> {
        if n == 0 || !(alpha > 0.0) {
            return Err(GeomError::InvalidChart("log chart needs n ≥ 1 and alpha > 0".into()));
        }
        if !(s > 0.0) || s * n as f64 >= 1.0 {
            return Err(GeomError::InvalidChart(format!(
                "generator weight s = {s} must satisfy 0 < s·n < 1 (n = {n})"
            )));
        }
        Ok(Self { n, alpha, s, offset })
    }

    /// `φ = ½ log(2p)` on the half-line, for which `f(p) = 1/p` under `α = 1`.
    pub fn half_log_two(alpha: f64) -> Result<Self> {
        Self::new(1, alpha, 0.5 * alpha, 0.5 * 2f64.ln())
    }

    fn k(&self) -> f64 {
        self.s / (self.alpha * (1.0 - self.s * self.n as f64))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn cost(&self) -> Result<LogCost> {
        LogCost::new(self.n, self.alpha)
    }
}

impl ChartMap for LogChart {
    fn dim(&self) -> usize {
        self.n
    }

    fn label(&self) -> String {
        format!("log_chart(n={}, alpha={}, s={})", self.n, self.alpha, self.s)
    }

    fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.n && xi.iter().all(|&v| v > 0.0 && v.is_finite())
    }

    fn contains_dual(&self, eta: &[f64]) -> bool {
        self.contains(eta)
    }

    fn forward(&self, xi: &[f64]) -> Vec<f64> {
        let k = self.k();
        xi.iter().map(|p| k / p).collect()
    }

    fn jacobian(&self, xi: &[f64]) -> Matrix {
        let k = self.k();
        Matrix::diagonal(&xi.iter().map(|p| -k / (p * p)).collect::<Vec<_>>())
    }

    fn second_derivative(&self, xi: &[f64]) -> Vec<Matrix> {
        let k = self.k();
        (0..self.n)
            .map(|c| {
                let mut m = Matrix::zeros(self.n, self.n);
                m[(c, c)] = 2.0 * k / xi[c].powi(3);
                m
            })
            .collect()
    }

    fn inverse(&self, eta: &[f64]) -> Result<Vec<f64>> {
        if !self.contains_dual(eta) {
            return Err(GeomError::domain(format!(
                "{eta:?} is outside the range of {}",
                self.label()
            )));
        }
        let k = self.k();
        Ok(eta.iter().map(|q| k / q).collect())
    }

    fn phi(&self, xi: &[f64]) -> f64 {
        self.s / self.alpha * xi.iter().map(|p| p.ln()).sum::<f64>() + self.offset
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.n).map(|_| rng.random_range(0.5..2.0)).collect()
    }
}

/// Chart for `c = Ψ(p − q′)` with `φ(p) = a·p` and `f(p) = p − z` where `∇Ψ(z) = a`.
#[derive(Clone)]
pub struct TranslationChart {
    cost: Arc<ConvexCost>,
    slope: Vec<f64>,
    shift: Vec<f64>,
}

impl TranslationChart {
    pub fn new(cost: Arc<ConvexCost>, slope: Vec<f64>) -> Result<Self> {
        if slope.len() != cost.dim() {
            return Err(GeomError::InvalidChart(
                "slope length must match the cost dimension".into(),
            ));
        }
        let shift = cost.gradient_preimage(&slope)?;
        Ok(Self { cost, slope, shift })
    }

    pub fn cost(&self) -> Arc<ConvexCost> {
        self.cost.clone()
    }
}

impl ChartMap for TranslationChart {
    fn dim(&self) -> usize {
        self.slope.len()
    }

    fn label(&self) -> String {
        format!("translation(slope={:?})", self.slope)
    }

    fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.dim() && xi.iter().all(|v| v.is_finite())
    }

    fn contains_dual(&self, eta: &[f64]) -> bool {
        self.contains(eta)
    }

    fn forward(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter().zip(&self.shift).map(|(p, z)| p - z).collect()
    }

    fn jacobian(&self, _xi: &[f64]) -> Matrix {
        Matrix::identity(self.dim())
    }

    fn second_derivative(&self, _xi: &[f64]) -> Vec<Matrix> {
        vec![Matrix::zeros(self.dim(), self.dim()); self.dim()]
    }

    fn inverse(&self, eta: &[f64]) -> Result<Vec<f64>> {
        Ok(eta.iter().zip(&self.shift).map(|(q, z)| q + z).collect())
    }

    fn phi(&self, xi: &[f64]) -> f64 {
        xi.iter().zip(&self.slope).map(|(p, a)| p * a).sum()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.random_range(-1.0..1.0)).collect()
    }
}

/// Entropic chart: `f` is the shrinkage operator on simplex charts and
/// `φ(p) = C_λ(p, f(p))`, so that `ψ ≡ 0` on the range.
#[derive(Clone, Debug)]
pub struct EntropicChart {
    cost: Arc<EntropicCost>,
    jac: Matrix,
    jac_inv: Matrix,
    offset: Vec<f64>,
}

impl EntropicChart {
    pub fn new(cost: Arc<EntropicCost>) -> Result<Self> {
        let prob = cost.problem();
        let n = cost.dim();
        let jac = shrinkage_jacobian(prob);
        let jac_inv = jac
            .inverse()
            .map_err(|e| GeomError::InvalidChart(format!("shrinkage map is not injective: {e}")))?;
        // f(x) = J x + f(0) in chart coordinates.
        let mut anchor = vec![0.0; n + 1];
        anchor[n] = 1.0;
        let offset = closed_form_shrinkage(prob, &anchor)[..n].to_vec();
        Ok(Self {
            cost,
            jac,
            jac_inv,
            offset,
        })
    }

    pub fn cost(&self) -> Arc<EntropicCost> {
        self.cost.clone()
    }

    fn in_simplex(x: &[f64]) -> bool {
        x.iter().all(|&v| v > 0.0) && x.iter().sum::<f64>() < 1.0
    }
}

impl ChartMap for EntropicChart {
    fn dim(&self) -> usize {
        self.cost.dim()
    }

    fn label(&self) -> String {
        format!("entropic_chart({})", self.cost.label())
    }

    fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.dim() && Self::in_simplex(xi)
    }

    fn contains_dual(&self, eta: &[f64]) -> bool {
        if eta.len() != self.dim() || !Self::in_simplex(eta) {
            return false;
        }
        let x: Vec<f64> = self
            .jac_inv
            .mul_vec(&eta.iter().zip(&self.offset).map(|(q, o)| q - o).collect::<Vec<_>>());
        Self::in_simplex(&x)
    }

    fn forward(&self, xi: &[f64]) -> Vec<f64> {
        let full = closed_form_shrinkage(self.cost.problem(), &simplex_from_chart(xi));
        full[..self.dim()].to_vec()
    }

    fn jacobian(&self, _xi: &[f64]) -> Matrix {
        self.jac.clone()
    }

    fn second_derivative(&self, _xi: &[f64]) -> Vec<Matrix> {
        vec![Matrix::zeros(self.dim(), self.dim()); self.dim()]
    }

    fn inverse(&self, eta: &[f64]) -> Result<Vec<f64>> {
        if !self.contains_dual(eta) {
            return Err(GeomError::domain(format!(
                "{eta:?} is outside the range of {}",
                self.label()
            )));
        }
        Ok(self
            .jac_inv
            .mul_vec(&eta.iter().zip(&self.offset).map(|(q, o)| q - o).collect::<Vec<_>>()))
    }

    fn phi(&self, xi: &[f64]) -> f64 {
        self.cost.value(xi, &self.forward(xi)).unwrap_or(f64::NAN)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let big = self.dim() + 1;
        let w: Vec<f64> = (0..big).map(|_| rng.random_range(0.7..1.3)).collect();
        let total: f64 = w.iter().sum();
        w[..big - 1].iter().map(|v| v / total).collect()
    }
}

/// Finite-difference Jacobian of a chart map, used as an oracle.
pub fn fd_jacobian(map: &dyn ChartMap, xi: &[f64]) -> Matrix {
    jacobian(|x| map.forward(x), xi, 1e-6)
}
