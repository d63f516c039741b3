//! Pseudo-Riemannian geometry of a cost on the product `M × M′`: the
//! cross-difference, the signature-`(n, n)` metric `h`, its Levi-Civita
//! symbols, the cross curvature and the MTW tensor.
//!
//! Product coordinates are `(ξ, η′)`, with slots `0..n` unbarred and `n..2n` barred.

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::cost::{CostExt, CostModel};
use crate::error::{GeomError, Result};
use crate::numeric::{
    central_fd, dot, signature, symmetric_eigenvalues, FiniteDifferenceScheme, Matrix, Rank3, Rank4, Slot,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductPoint {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl ProductPoint {
    pub fn new(xi: Vec<f64>, eta: Vec<f64>) -> Self {
        Self { xi, eta }
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    /// Concatenated coordinates `(ξ, η′)`.
    pub fn stacked(&self) -> Vec<f64> {
        self.xi.iter().chain(&self.eta).copied().collect()
    }

    pub fn from_stacked(z: &[f64]) -> Self {
        let n = z.len() / 2;
        Self::new(z[..n].to_vec(), z[n..].to_vec())
    }
}

/// Tangent vector `aⁱ ∂/∂ξⁱ + b^ī ∂/∂η′^ī` of the product.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentPair {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl TangentPair {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(a.len(), b.len(), "tangent parts must have equal length");
        Self { a, b }
    }

    /// `u ⊕ 0`.
    pub fn primal(u: &[f64]) -> Self {
        Self::new(u.to_vec(), vec![0.0; u.len()])
    }

    /// `0 ⊕ v̄`.
    pub fn dual(v: &[f64]) -> Self {
        Self::new(vec![0.0; v.len()], v.to_vec())
    }

    pub fn stacked(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(
            self.a.iter().map(|x| x * s).collect(),
            self.b.iter().map(|x| x * s).collect(),
        )
    }

    pub fn add(&self, other: &TangentPair) -> Self {
        Self::new(
            self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
            self.b.iter().zip(&other.b).map(|(x, y)| x + y).collect(),
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PseudoMetricSample {
    pub point: ProductPoint,
    /// `−½ c_{i:j̄}`.
    pub block: Matrix,
    pub full: Matrix,
    /// (positive, negative) eigenvalue counts of `full`.
    pub signature: (usize, usize),
}

impl PseudoMetricSample {
    pub fn apply(&self, v: &TangentPair, w: &TangentPair) -> f64 {
        self.full.bilinear(&v.stacked(), &w.stacked())
    }
}

/// `c(p, q₀′) + c(p₀, q′) − c(p, q′) − c(p₀, q₀′)` for `x = (p, q′)`, `x₀ = (p₀, q₀′)`.
pub fn cross_difference(c: &dyn CostModel, x: &ProductPoint, x0: &ProductPoint) -> Result<f64> {
    crate::cost::cross_difference_values(c, &x.xi, &x.eta, &x0.xi, &x0.eta)
}

/// `2n × 2n` matrix of `h` with blocks `½[[0, −A], [−Aᵀ, 0]]`, `A = (c_{i:j̄})`.
pub fn h_matrix_from_block(a: &Matrix) -> Matrix {
    let n = a.rows();
    let mut full = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            full[(i, n + j)] = -0.5 * a[(i, j)];
            full[(n + j, i)] = -0.5 * a[(i, j)];
        }
    }
    full
}

pub fn metric_h(c: &dyn CostModel, at: &ProductPoint) -> Result<PseudoMetricSample> {
    let a = c.mixed_block(&at.xi, &at.eta)?;
    // Rejects degenerate mixed blocks.
    a.lu()?;
    let full = h_matrix_from_block(&a);
    let values = symmetric_eigenvalues(&full)?;
    Ok(PseudoMetricSample {
        point: at.clone(),
        block: a.scale(-0.5),
        full,
        signature: signature(&values, 1e-10),
    })
}

/// `|h(v, v) − (−½ ∂_s ∂_t δ(x + s v, x + t v))|` at `s = t = 0`.
pub fn metric_h_intrinsic_check(c: &dyn CostModel, at: &ProductPoint, v: &TangentPair) -> Result<f64> {
    let sample = metric_h(c, at)?;
    let matrix_value = sample.apply(v, v);
    let base = at.stacked();
    let dir = v.stacked();
    let shifted =
        |s: f64| ProductPoint::from_stacked(&base.iter().zip(&dir).map(|(z, d)| z + s * d).collect::<Vec<_>>());
    let step = FiniteDifferenceScheme::for_order(2).step;
    for s in [-step, step] {
        let x = shifted(s);
        c.require_domain(&x.xi, &x.eta)?;
    }
    let delta = |w: &[f64]| cross_difference(c, &shifted(w[0]), &shifted(w[1])).unwrap_or(f64::NAN);
    let mixed = central_fd(delta, &[0.0, 0.0], &[0, 1], FiniteDifferenceScheme::for_order(2));
    if !mixed.is_finite() {
        return Err(GeomError::domain("cross-difference stencil left the domain"));
    }
    Ok((matrix_value + 0.5 * mixed).abs())
}

/// Non-vanishing Levi-Civita symbols of `h`: `Γ̄_ij^k` and `Γ̄_īj̄^k̄`.
#[derive(Clone, Debug, Serialize)]
pub struct LeviCivitaSymbols {
    pub primal: Rank3,
    pub dual: Rank3,
}

impl LeviCivitaSymbols {
    /// All `(2n)³` symbols, mixed ones zero.
    pub fn full(&self) -> Rank3 {
        let n = self.primal.dim();
        Rank3::from_fn(2 * n, |a, b, c| match (a < n, b < n, c < n) {
            (true, true, true) => self.primal[(a, b, c)],
            (false, false, false) => self.dual[(a - n, b - n, c - n)],
            _ => 0.0,
        })
    }
}

/// `Γ̄_ij^k = c_{ij:m̄} c^{m̄:k}` and `Γ̄_īj̄^k̄ = c^{k̄:m} c_{m:īj̄}`.
pub fn levi_civita_symbols(c: &dyn CostModel, at: &ProductPoint) -> Result<LeviCivitaSymbols> {
    let n = c.dim();
    let b = c.mixed_inverse(&at.xi, &at.eta)?;
    let t21 = c.partials_2_1(&at.xi, &at.eta)?;
    let t12 = c.partials_1_2(&at.xi, &at.eta)?;
    let primal =
        Rank3::from_fn(n, |i, j, k| (0..n).map(|m| t21[(i, j, m)] * b[(m, k)]).sum()).with_slots([Slot::Unbarred; 3]);
    let dual =
        Rank3::from_fn(n, |i, j, k| (0..n).map(|m| b[(k, m)] * t12[(m, i, j)]).sum()).with_slots([Slot::Barred; 3]);
    Ok(LeviCivitaSymbols { primal, dual })
}

/// Cross curvature `R̄_{ij̄k̄l}` stored in the canonical (unbarred, barred,
/// barred, unbarred) slot pattern; other patterns follow from its symmetries.
#[derive(Clone, Debug, Serialize)]
pub struct CrossCurvature {
    pub canonical: Rank4,
}

impl CrossCurvature {
    pub fn dim(&self) -> usize {
        self.canonical.dim()
    }

    /// Component `R̄_{abcd}` for an arbitrary slot pattern.
    pub fn component(&self, slots: [Slot; 4], idx: [usize; 4]) -> f64 {
        use Slot::{Barred as B, Unbarred as U};
        let r = &self.canonical;
        let [a, b, c, d] = idx;
        match slots {
            [U, B, B, U] => r[(a, b, c, d)],
            [B, U, B, U] => -r[(b, a, c, d)],
            [U, B, U, B] => -r[(a, b, d, c)],
            [B, U, U, B] => r[(b, a, d, c)],
            _ => 0.0,
        }
    }

    /// All `(2n)⁴` components in product coordinates.
    pub fn full(&self) -> Rank4 {
        let n = self.dim();
        let split = |a: usize| {
            if a < n {
                (Slot::Unbarred, a)
            } else {
                (Slot::Barred, a - n)
            }
        };
        Rank4::from_fn(2 * n, |a, b, c, d| {
            let (sa, ia) = split(a);
            let (sb, ib) = split(b);
            let (sc, ic) = split(c);
            let (sd, id) = split(d);
            self.component([sa, sb, sc, sd], [ia, ib, ic, id])
        })
    }
}

/// `R̄_{ij̄k̄l} = ½(−c_{il:j̄k̄} + c_{il:β̄} c^{β̄:α} c_{α:j̄k̄})`.
pub fn curvature_rbar(c: &dyn CostModel, at: &ProductPoint) -> Result<CrossCurvature> {
    let n = c.dim();
    let b = c.mixed_inverse(&at.xi, &at.eta)?;
    let t21 = c.partials_2_1(&at.xi, &at.eta)?;
    let t12 = c.partials_1_2(&at.xi, &at.eta)?;
    let t22 = c.partials_2_2(&at.xi, &at.eta)?;
    // w[i][l][α] = c_{il:β̄} c^{β̄:α}
    let w = Rank3::from_fn(n, |i, l, alpha| {
        (0..n).map(|beta| t21[(i, l, beta)] * b[(beta, alpha)]).sum()
    });
    let canonical = Rank4::from_fn(n, |i, j, k, l| {
        let corr: f64 = (0..n).map(|alpha| w[(i, l, alpha)] * t12[(alpha, j, k)]).sum();
        0.5 * (-t22[(i, l, j, k)] + corr)
    })
    .with_slots([Slot::Unbarred, Slot::Barred, Slot::Barred, Slot::Unbarred]);
    Ok(CrossCurvature { canonical })
}

/// `sec̄_u(X, Y) = h(R̄(X, Y)Y, X)` by the four balanced slot patterns.
pub fn unnormalized_sec_bar(r: &CrossCurvature, x: &TangentPair, y: &TangentPair) -> f64 {
    let n = r.dim();
    let t = &r.canonical;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = t[(i, j, k, l)];
                    if v == 0.0 {
                        continue;
                    }
                    s += v
                        * (x.a[i] * y.b[j] * y.b[k] * x.a[l]
                            - x.b[j] * y.a[i] * y.b[k] * x.a[l]
                            - x.a[i] * y.b[j] * y.a[l] * x.b[k]
                            + x.b[j] * y.a[i] * y.a[l] * x.b[k]);
                }
            }
        }
    }
    s
}

/// `𝔖(u, v̄) = 2 sec̄_u(u ⊕ 0, 0 ⊕ v̄)`.
pub fn mtw_tensor(r: &CrossCurvature, u: &[f64], vbar: &[f64]) -> f64 {
    2.0 * unnormalized_sec_bar(r, &TangentPair::primal(u), &TangentPair::dual(vbar))
}

/// A random `v̄` with `h(u ⊕ v̄, u ⊕ v̄) = 0`, i.e. `c_{i:j̄} uⁱ v̄ʲ = 0`:
/// a random direction with its component along `aⱼ = uⁱ c_{i:j̄}` projected out.
pub fn null_partner(a_block: &Matrix, u: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
    let n = u.len();
    let a: Vec<f64> = (0..n).map(|j| (0..n).map(|i| u[i] * a_block[(i, j)]).sum()).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let aa = dot(&a, &a);
    if aa == 0.0 {
        return w;
    }
    let coef = dot(&a, &w) / aa;
    w.iter().zip(&a).map(|(wi, ai)| wi - coef * ai).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct NullProbe {
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    /// Largest `|h(u ⊕ v̄, u ⊕ v̄)|` among the sampled vectors.
    pub max_null_residual: f64,
}

impl NullProbe {
    /// Weak regularity: `𝔖 ≥ 0` on null vectors, up to `tol`.
    pub fn weakly_regular(&self, tol: f64) -> bool {
        self.min >= -tol
    }
}

/// Sign survey of `𝔖` over `samples` random null split vectors at one point.
pub fn weak_regularity_probe(
    c: &dyn CostModel,
    at: &ProductPoint,
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<NullProbe> {
    let n = c.dim();
    let metric = metric_h(c, at)?;
    let a = metric.block.scale(-2.0);
    let r = curvature_rbar(c, at)?;
    let mut probe = NullProbe {
        samples,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        max_null_residual: 0.0,
    };
    for _ in 0..samples {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let vbar = null_partner(&a, &u, rng);
        let v = TangentPair::new(u.clone(), vbar.clone());
        probe.max_null_residual = probe.max_null_residual.max(metric.apply(&v, &v).abs());
        let s = mtw_tensor(&r, &u, &vbar);
        probe.min = probe.min.min(s);
        probe.max = probe.max.max(s);
    }
    Ok(probe)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstancyResult {
    pub lambda: f64,
    pub max_deviation: f64,
    pub samples: usize,
}

/// Max of `|sec̄_u(X, Y) − λ(h(X,X)h(Y,Y) − h(X,Y)²)|` over random split pairs
/// `X = u ⊕ 0`, `Y = 0 ⊕ v̄` at each point.
pub fn cross_curvature_constancy(
    c: &dyn CostModel,
    points: &[ProductPoint],
    lambda: f64,
    frames_per_point: usize,
    rng: &mut dyn RngCore,
) -> Result<ConstancyResult> {
    let n = c.dim();
    let mut max_deviation: f64 = 0.0;
    for at in points {
        let metric = metric_h(c, at)?;
        let r = curvature_rbar(c, at)?;
        for _ in 0..frames_per_point {
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (x, y) = (TangentPair::primal(&u), TangentPair::dual(&v));
            let hxy = metric.apply(&x, &y);
            let expected = lambda * (metric.apply(&x, &x) * metric.apply(&y, &y) - hxy * hxy);
            max_deviation = max_deviation.max((unnormalized_sec_bar(&r, &x, &y) - expected).abs());
        }
    }
    Ok(ConstancyResult {
        lambda,
        max_deviation,
        samples: points.len() * frames_per_point,
    })
}

/// Levi-Civita symbols of `h` from the generic formula `½ h^{cd}(∂_a h_bd + ∂_b h_ad − ∂_d h_ab)`,
/// with `∂h` by central differences. Returns all `(2n)³` symbols `Γ_ab^c`.
pub fn christoffel_fd_oracle(c: &dyn CostModel, at: &ProductPoint) -> Result<Rank3> {
    let n = c.dim();
    let m = 2 * n;
    let z = at.stacked();
    let h_at = |w: &[f64]| -> Result<Matrix> {
        let p = ProductPoint::from_stacked(w);
        Ok(h_matrix_from_block(&c.mixed_block(&p.xi, &p.eta)?))
    };
    let h0 = h_at(&z)?;
    let hinv = h0.inverse()?;
    let step = FiniteDifferenceScheme::for_order(1).step;
    // dh[a] = ∂_a h
    let mut dh = Vec::with_capacity(m);
    for a in 0..m {
        let mut zp = z.clone();
        zp[a] += step;
        let mut zm = z.clone();
        zm[a] -= step;
        dh.push(h_at(&zp)?.sub(&h_at(&zm)?).scale(0.5 / step));
    }
    let lower = Rank3::from_fn(m, |a, b, d| 0.5 * (dh[a][(b, d)] + dh[b][(a, d)] - dh[d][(a, b)]));
    Ok(Rank3::from_fn(m, |a, b, cc| {
        (0..m).map(|d| hinv[(cc, d)] * lower[(a, b, d)]).sum()
    }))
}

/// Curvature of `h` in product coordinates from the coordinate formula
/// `R_abc^e = ∂_a Γ_bc^e − ∂_b Γ_ac^e + Γ_bc^m Γ_am^e − Γ_ac^m Γ_bm^e`, lowered
/// with `h`, using Richardson-extrapolated central differences of the closed-form symbols.
pub fn curvature_fd_oracle(c: &dyn CostModel, at: &ProductPoint) -> Result<Rank4> {
    let n = c.dim();
    let m = 2 * n;
    let z = at.stacked();
    let gamma_at = |w: &[f64]| -> Result<Rank3> {
        let p = ProductPoint::from_stacked(w);
        Ok(levi_civita_symbols(c, &p)?.full())
    };
    let g0 = gamma_at(&z)?;
    let h0 = h_matrix_from_block(&c.mixed_block(&at.xi, &at.eta)?);
    let step = 1e-3;
    let central = |a: usize, h: f64| -> Result<Rank3> {
        let mut zp = z.clone();
        zp[a] += h;
        let mut zm = z.clone();
        zm[a] -= h;
        Ok(gamma_at(&zp)?.add(&gamma_at(&zm)?.scale(-1.0)).scale(0.5 / h))
    };
    let mut dg = Vec::with_capacity(m);
    for a in 0..m {
        // one Richardson level: (4 D(h/2) − D(h)) / 3
        let coarse = central(a, step)?;
        let fine = central(a, 0.5 * step)?;
        dg.push(fine.scale(4.0 / 3.0).add(&coarse.scale(-1.0 / 3.0)));
    }
    let raised = |a: usize, b: usize, cc: usize, e: usize| -> f64 {
        let mut v = dg[a][(b, cc, e)] - dg[b][(a, cc, e)];
        for k in 0..m {
            v += g0[(b, cc, k)] * g0[(a, k, e)] - g0[(a, cc, k)] * g0[(b, k, e)];
        }
        v
    };
    Ok(Rank4::from_fn(m, |a, b, cc, d| {
        (0..m).map(|e| raised(a, b, cc, e) * h0[(e, d)]).sum()
    }))
}

/// Max deviation of `h` from the pullback of `|x|² − |y|²` under
/// `(p, q′) ↦ ((p + q′)/2, (p − q′)/2)` for the quadratic cost.
pub fn quadratic_isometry_residual(n: usize) -> f64 {
    let m = 2 * n;
    let l = Matrix::from_fn(m, m, |r, col| {
        let (row_block, row_i) = (r / n, r % n);
        let (col_block, col_i) = (col / n, col % n);
        if row_i != col_i {
            return 0.0;
        }
        match (row_block, col_block) {
            (0, _) => 0.5,
            (1, 0) => 0.5,
            _ => -0.5,
        }
    });
    let eta = Matrix::from_fn(m, m, |r, col| match (r == col, r < n) {
        (true, true) => 1.0,
        (true, false) => -1.0,
        _ => 0.0,
    });
    let pulled = l.transpose().mul(&eta).mul(&l);
    let h = h_matrix_from_block(&Matrix::identity(n).scale(-1.0));
    pulled.max_abs_diff(&h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{LogCost, QuadraticCost};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn log1() -> LogCost {
        LogCost::new(1, 1.0).unwrap()
    }

    fn at1() -> ProductPoint {
        ProductPoint::new(vec![1.0], vec![1.0])
    }

    #[test]
    fn cross_difference_examples() {
        let q = QuadraticCost::new(1);
        let x = ProductPoint::new(vec![1.0], vec![0.0]);
        let x0 = ProductPoint::new(vec![0.0], vec![1.0]);
        assert_eq!(cross_difference(&q, &x, &x0).unwrap(), -1.0);
        assert_eq!(cross_difference(&q, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_metric() {
        let q = QuadraticCost::new(2);
        let s = metric_h(&q, &ProductPoint::new(vec![0.1, 0.2], vec![0.3, 0.4])).unwrap();
        assert_eq!(s.signature, (2, 2));
        let v = TangentPair::new(vec![1.0, 2.0], vec![3.0, -1.0]);
        assert!((s.apply(&v, &v) - 1.0).abs() < 1e-15);
        assert_eq!(
            s.apply(&TangentPair::primal(&[1.0, 1.0]), &TangentPair::primal(&[1.0, 1.0])),
            0.0
        );
    }

    #[test]
    fn log_metric_pinned() {
        let s = metric_h(&log1(), &at1()).unwrap();
        let v = TangentPair::new(vec![2.0], vec![3.0]);
        assert!((s.apply(&v, &v) + 0.25 * 6.0).abs() < 1e-15);
        assert!(metric_h_intrinsic_check(&log1(), &at1(), &v).unwrap() < 1e-6);
        assert!(
            metric_h_intrinsic_check(&QuadraticCost::new(1), &at1(), &TangentPair::new(vec![1.0], vec![1.0])).unwrap()
                < 1e-9
        );
        assert_eq!(
            metric_h_intrinsic_check(&log1(), &at1(), &TangentPair::new(vec![0.0], vec![0.0])).unwrap(),
            0.0
        );
    }

    #[test]
    fn log_christoffel_pinned() {
        let g = levi_civita_symbols(&log1(), &at1()).unwrap();
        assert!((g.primal[(0, 0, 0)] + 1.0).abs() < 1e-14);
        let oracle = christoffel_fd_oracle(&log1(), &at1()).unwrap();
        assert!(oracle.max_abs_diff(&g.full()) < 1e-8);
    }

    #[test]
    fn log_curvature_pinned() {
        let r = curvature_rbar(&log1(), &at1()).unwrap();
        assert!((r.canonical[(0, 0, 0, 0)] - 1.0 / 16.0).abs() < 1e-14);
        let x = TangentPair::primal(&[1.0]);
        let y = TangentPair::dual(&[1.0]);
        assert!((unnormalized_sec_bar(&r, &x, &y) - 1.0 / 16.0).abs() < 1e-14);
        assert!((mtw_tensor(&r, &[1.0], &[1.0]) - 0.125).abs() < 1e-14);
        assert!((unnormalized_sec_bar(&r, &x.scaled(2.0), &y) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn four_term_contraction_matches_full_tensor() {
        let c = LogCost::new(2, 0.8).unwrap();
        let at = ProductPoint::new(vec![0.7, 1.3], vec![1.1, 0.6]);
        let r = curvature_rbar(&c, &at).unwrap();
        let full = r.full();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let mut draw = || (0..2).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
            let x = TangentPair::new(draw(), draw());
            let y = TangentPair::new(draw(), draw());
            let (xs, ys) = (x.stacked(), y.stacked());
            let generic = full.contract(&xs, &ys, &ys, &xs);
            assert!((generic - unnormalized_sec_bar(&r, &x, &y)).abs() < 1e-13);
        }
    }

    #[test]
    fn null_partner_is_null() {
        let c = LogCost::new(3, 1.0).unwrap();
        let at = ProductPoint::new(vec![0.7, 1.3, 0.9], vec![1.1, 0.6, 1.4]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let probe = weak_regularity_probe(&c, &at, 200, &mut rng).unwrap();
        assert!(probe.max_null_residual < 1e-14);
        assert!(probe.min.abs() < 1e-12 && probe.max.abs() < 1e-12);
    }

    #[test]
    fn isometry() {
        assert_eq!(quadratic_isometry_residual(3), 0.0);
    }

    #[test]
    fn degenerate_cost_rejected() {
        // c = p₁q₁ in n = 2 has a rank-one mixed block.
        struct Rank1;
        impl CostModel for Rank1 {
            fn dim(&self) -> usize {
                2
            }
            fn label(&self) -> String {
                "rank1".into()
            }
            fn in_domain(&self, _: &[f64], _: &[f64]) -> bool {
                true
            }
            fn value(&self, xi: &[f64], eta: &[f64]) -> Result<f64> {
                Ok(xi[0] * eta[0])
            }
        }
        let at = ProductPoint::new(vec![0.0, 0.0], vec![0.0, 0.0]);
        assert!(matches!(metric_h(&Rank1, &at), Err(GeomError::Degenerate { .. })));
    }
}
