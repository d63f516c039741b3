//! The dualistic structure `(g, ∇, ∇*)` a transport graph carries, and its
//! relations to the pseudo-Riemannian geometry of the product.

use rand::RngCore;
use serde::Serialize;

use crate::cost::CostExt;
use crate::error::{GeomError, Result};
use crate::numeric::{central_fd, symmetric_eigenvalues, FiniteDifferenceScheme, Matrix, Rank3, Rank4, Slot};
use crate::pseudo::{
    curvature_rbar, levi_civita_symbols, metric_h, unnormalized_sec_bar, CrossCurvature, ProductPoint,
};
use crate::transport::{GraphChart, GraphPoint};

/// Smallest eigenvalue accepted for `g`.
pub const METRIC_EIGEN_FLOOR: f64 = 1e-10;

/// Step used to differentiate closed-form Christoffel symbols.
pub const CHRISTOFFEL_FD_STEP: f64 = 1e-4;

/// `g` in primal (`g_ij(ξ)`) and dual (`g_īj̄(η)`) coordinates.
#[derive(Clone, Debug, Serialize)]
pub struct MetricPair {
    pub primal: Matrix,
    pub dual: Matrix,
}

/// Everything the structure provides at one graph point.
#[derive(Clone, Debug, Serialize)]
pub struct DualisticSample {
    #[serde(skip)]
    pub point: GraphPoint,
    pub g_primal: Matrix,
    pub g_dual: Matrix,
    /// `Γ_ij^k(ξ)`.
    pub gamma_primal: Rank3,
    /// `Γ*_īj̄^k̄(η)`.
    pub gamma_dual_star: Rank3,
    /// `R_ijkl(ξ)`.
    pub r_primal: Rank4,
    /// `R*_īj̄k̄l̄(η)`.
    pub r_dual_star: Rank4,
}

fn check_positive(g: &Matrix, what: &str) -> Result<()> {
    let low = symmetric_eigenvalues(&g.symmetrized())?[0];
    if !(low > METRIC_EIGEN_FLOOR) {
        return Err(GeomError::InvalidChart(format!(
            "{what} is not positive definite (smallest eigenvalue {low:.3e})"
        )));
    }
    Ok(())
}

/// `∂ξ/∂η` at `ξ`.
pub fn inverse_jacobian(chart: &GraphChart, xi: &[f64]) -> Result<Matrix> {
    chart.jacobian(xi)?.inverse()
}

/// `g_ij = −c_{i:m̄} ∂η^m/∂ξ^j` and `g_īj̄ = −c_{m:ī} ∂ξ^m/∂η^j̄`.
pub fn metric_g(chart: &GraphChart, xi: &[f64]) -> Result<MetricPair> {
    let eta = chart.forward(xi)?;
    let a = chart.cost().mixed_block(xi, &eta)?;
    let j = chart.jacobian(xi)?;
    let k = j.inverse()?;
    let primal = a.mul(&j).scale(-1.0).symmetrized();
    let dual = a.transpose().mul(&k).scale(-1.0).symmetrized();
    check_positive(&primal, "g")?;
    Ok(MetricPair { primal, dual })
}

/// `g_ij = −∂_i ∂′_j D[ξ : ξ′]` on the diagonal, by finite differences.
pub fn metric_g_from_divergence(chart: &GraphChart, xi: &[f64]) -> Result<Matrix> {
    let n = chart.dim();
    let at = [xi, xi].concat();
    let d = divergence_on_stack(chart, n);
    let scheme = FiniteDifferenceScheme::for_order(2);
    let mut g = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = -central_fd(&d, &at, &[i, n + j], scheme);
        }
    }
    if !g.is_finite() {
        return Err(GeomError::domain("divergence stencil left the chart domain"));
    }
    Ok(g)
}

fn divergence_on_stack(chart: &GraphChart, n: usize) -> impl Fn(&[f64]) -> f64 + '_ {
    move |z: &[f64]| chart.c_divergence(&z[..n], &z[n..]).unwrap_or(f64::NAN)
}

/// Lowered divergence Christoffels `Γ_ijk = −∂_i∂_j∂′_k D` and `Γ*_ijk = −∂′_i∂′_j∂_k D`,
/// both in primal coordinates.
pub fn christoffels_from_divergence(chart: &GraphChart, xi: &[f64]) -> Result<(Rank3, Rank3)> {
    let n = chart.dim();
    let at = [xi, xi].concat();
    let d = divergence_on_stack(chart, n);
    let scheme = FiniteDifferenceScheme::for_order(3);
    let primal = Rank3::from_fn(n, |i, j, k| -central_fd(&d, &at, &[i, j, n + k], scheme));
    let dual = Rank3::from_fn(n, |i, j, k| -central_fd(&d, &at, &[n + i, n + j, k], scheme));
    if !(primal.max_abs().is_finite() && dual.max_abs().is_finite()) {
        return Err(GeomError::domain("divergence stencil left the chart domain"));
    }
    Ok((primal, dual))
}

/// `Γ_ij^k(ξ) = c_{ij:m̄} c^{m̄:k}` and `Γ*_īj̄^k̄(η) = c^{k̄:m} c_{m:īj̄}`, evaluated on the graph.
pub fn connections(chart: &GraphChart, xi: &[f64]) -> Result<(Rank3, Rank3)> {
    let p = chart.point(xi)?;
    let lc = levi_civita_symbols(chart.cost().as_ref(), &p.product())?;
    Ok((lc.primal, lc.dual))
}

/// `Γ*` carried to primal coordinates: `Γ*_ij^k = (∂ξ^k/∂η^c)(∂²η^c/∂ξ^i∂ξ^j + Γ*_ab^c J^a_i J^b_j)`.
pub fn gamma_star_primal(chart: &GraphChart, xi: &[f64]) -> Result<Rank3> {
    let n = chart.dim();
    let (_, dual) = connections(chart, xi)?;
    let j = chart.jacobian(xi)?;
    let k = j.inverse()?;
    let h = chart.map().second_derivative(xi);
    let inner = Rank3::from_fn(n, |i, jj, c| {
        let mut s = h[c][(i, jj)];
        for a in 0..n {
            for b in 0..n {
                s += dual[(a, b, c)] * j[(a, i)] * j[(b, jj)];
            }
        }
        s
    });
    Ok(Rank3::from_fn(n, |i, jj, kk| {
        (0..n).map(|c| k[(kk, c)] * inner[(i, jj, c)]).sum()
    }))
}

/// Exact `∂_k g_ij`, returned as `T[k][i][j]`.
pub fn metric_derivative(chart: &GraphChart, xi: &[f64]) -> Result<Rank3> {
    let n = chart.dim();
    let eta = chart.forward(xi)?;
    let cost = chart.cost();
    let a = cost.mixed_block(xi, &eta)?;
    let t21 = cost.partials_2_1(xi, &eta)?;
    let t12 = cost.partials_1_2(xi, &eta)?;
    let j = chart.jacobian(xi)?;
    let h = chart.map().second_derivative(xi);
    Ok(Rank3::from_fn(n, |k, i, jj| {
        let mut s = 0.0;
        for m in 0..n {
            let da: f64 = t21[(i, k, m)] + (0..n).map(|l| t12[(i, m, l)] * j[(l, k)]).sum::<f64>();
            s += da * j[(m, jj)] + a[(i, m)] * h[m][(jj, k)];
        }
        -s
    }))
}

/// Central-difference `∂_k g_ij`, returned as `T[k][i][j]`.
pub fn metric_derivative_fd(chart: &GraphChart, xi: &[f64], step: f64) -> Result<Rank3> {
    let n = chart.dim();
    let mut t = Rank3::zeros(n);
    let mut x = xi.to_vec();
    for k in 0..n {
        let orig = x[k];
        x[k] = orig + step;
        let gp = metric_g(chart, &x)?.primal;
        x[k] = orig - step;
        let gm = metric_g(chart, &x)?.primal;
        x[k] = orig;
        for i in 0..n {
            for j in 0..n {
                t[(k, i, j)] = (gp[(i, j)] - gm[(i, j)]) / (2.0 * step);
            }
        }
    }
    Ok(t)
}

/// `T_ijm g_mk`.
pub fn lower_last(gamma: &Rank3, g: &Matrix) -> Rank3 {
    let n = gamma.dim();
    Rank3::from_fn(n, |i, j, k| (0..n).map(|m| gamma[(i, j, m)] * g[(m, k)]).sum())
}

/// `g^{km} T_ijm`.
pub fn raise_last(lowered: &Rank3, g_inv: &Matrix) -> Rank3 {
    let n = lowered.dim();
    Rank3::from_fn(n, |i, j, k| (0..n).map(|m| g_inv[(k, m)] * lowered[(i, j, m)]).sum())
}

/// `Γ*` in primal coordinates obtained from the duality relation with the exact `∂g`:
/// `Γ*_kj^m g_mi = ∂_k g_ij − Γ_ki^m g_mj`.
pub fn gamma_star_from_duality(chart: &GraphChart, xi: &[f64]) -> Result<Rank3> {
    let n = chart.dim();
    let g = metric_g(chart, xi)?.primal;
    let (gamma, _) = connections(chart, xi)?;
    let dg = metric_derivative(chart, xi)?;
    let low = lower_last(&gamma, &g);
    let star_low = Rank3::from_fn(n, |k, j, i| dg[(k, i, j)] - low[(k, i, j)]);
    Ok(raise_last(&star_low, &g.inverse()?))
}

/// `Z g(X, Y) − g(∇_Z X, Y) − g(X, ∇*_Z Y)` for coordinate fields, maximised over
/// `(Z, X, Y)`; `∂g` by central differences.
pub fn duality_residual(chart: &GraphChart, xi: &[f64]) -> Result<f64> {
    let n = chart.dim();
    let g = metric_g(chart, xi)?.primal;
    let (gamma, _) = connections(chart, xi)?;
    let star = gamma_star_primal(chart, xi)?;
    let dg = metric_derivative_fd(chart, xi, 1e-5)?;
    let low = lower_last(&gamma, &g);
    let star_low = lower_last(&star, &g);
    let mut worst = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let r = dg[(k, i, j)] - low[(k, i, j)] - star_low[(k, j, i)];
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}

/// `max |h(v, v) − g(a, a)|` over lifted vectors `v = a ⊕ J a`.
pub fn metric_restriction_residual(chart: &GraphChart, xi: &[f64], tangents: &[Vec<f64>]) -> Result<f64> {
    let p = chart.point(xi)?;
    let h = metric_h(chart.cost().as_ref(), &p.product())?;
    let g = metric_g(chart, xi)?.primal;
    let mut worst = 0.0f64;
    for a in tangents {
        let v = chart.lift(xi, a)?;
        worst = worst.max((h.apply(&v, &v) - g.bilinear(a, a)).abs());
    }
    Ok(worst)
}

/// Residual of `∇̄_X Y = ι₀(∇_X Y) + ι₁(∇*_X Y)` over pairs of coordinate fields of `G`.
///
/// The left side uses `Γ̄` and the derivative of the lifted field; `∇*` on the right
/// comes from the duality relation, independently of `Γ̄`.
pub fn connection_decomposition_residual(chart: &GraphChart, xi: &[f64]) -> Result<f64> {
    let n = chart.dim();
    let p = chart.point(xi)?;
    let lc = levi_civita_symbols(chart.cost().as_ref(), &p.product())?;
    let (gamma, _) = connections(chart, xi)?;
    let star = gamma_star_from_duality(chart, xi)?;
    let j = chart.jacobian(xi)?;
    let h = chart.map().second_derivative(xi);
    let mut worst = 0.0f64;
    for i in 0..n {
        for jj in 0..n {
            for k in 0..n {
                worst = worst.max((lc.primal[(i, jj, k)] - gamma[(i, jj, k)]).abs());
                let mut lhs = h[k][(i, jj)];
                for a in 0..n {
                    for b in 0..n {
                        lhs += lc.dual[(a, b, k)] * j[(a, i)] * j[(b, jj)];
                    }
                }
                let rhs: f64 = (0..n).map(|m| j[(k, m)] * star[(i, jj, m)]).sum();
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    Ok(worst)
}

/// `R_abcd` from Christoffel symbols with `∂Γ` by central differences:
/// `R_ijk^l = ∂_iΓ_jk^l − ∂_jΓ_ik^l + Γ_jk^m Γ_im^l − Γ_ik^m Γ_jm^l`, lowered on the last slot.
pub fn riemann_from_christoffel<F>(gamma_at: F, x: &[f64], g: &Matrix, step: f64) -> Result<Rank4>
where
    F: Fn(&[f64]) -> Result<Rank3>,
{
    let n = x.len();
    let gamma = gamma_at(x)?;
    let mut d = Vec::with_capacity(n);
    let mut y = x.to_vec();
    for i in 0..n {
        let orig = y[i];
        y[i] = orig + step;
        let plus = gamma_at(&y)?;
        y[i] = orig - step;
        let minus = gamma_at(&y)?;
        y[i] = orig;
        d.push(plus.add(&minus.scale(-1.0)).scale(0.5 / step));
    }
    let upper = Rank4::from_fn(n, |i, j, k, l| {
        let mut s = d[i][(j, k, l)] - d[j][(i, k, l)];
        for m in 0..n {
            s += gamma[(j, k, m)] * gamma[(i, m, l)] - gamma[(i, k, m)] * gamma[(j, m, l)];
        }
        s
    });
    Ok(Rank4::from_fn(n, |a, b, c, dd| {
        (0..n).map(|m| upper[(a, b, c, m)] * g[(m, dd)]).sum()
    }))
}

/// `R_ijkl(ξ)` and `R*_īj̄k̄l̄(η)` from `(Γ, Γ*)` in their own coordinates.
pub fn curvature_rstar(chart: &GraphChart, xi: &[f64]) -> Result<(Rank4, Rank4)> {
    let g = metric_g(chart, xi)?;
    let eta = chart.forward(xi)?;
    let r = riemann_from_christoffel(|x| Ok(connections(chart, x)?.0), xi, &g.primal, CHRISTOFFEL_FD_STEP)?;
    let r_star = riemann_from_christoffel(
        |e| {
            let x = chart.inverse(e)?;
            Ok(connections(chart, &x)?.1)
        },
        &eta,
        &g.dual,
        CHRISTOFFEL_FD_STEP,
    )?;
    Ok((r, r_star))
}

/// `R` and `R*` pulled back from `R̄`:
/// `R_ijkl = −2R̄_{iᾱβ̄k} J^α_j J^β_l + 2R̄_{jᾱβ̄k} J^α_i J^β_l` and the mirror image with `∂ξ/∂η`.
pub fn curvature_pullback(chart: &GraphChart, xi: &[f64]) -> Result<(Rank4, Rank4)> {
    let n = chart.dim();
    let p = chart.point(xi)?;
    let rbar = curvature_rbar(chart.cost().as_ref(), &p.product())?;
    let j = chart.jacobian(xi)?;
    let k = j.inverse()?;
    let ubbu = |i: usize, a: usize, b: usize, l: usize| {
        rbar.component(
            [Slot::Unbarred, Slot::Barred, Slot::Barred, Slot::Unbarred],
            [i, a, b, l],
        )
    };
    let buub = |i: usize, a: usize, b: usize, l: usize| {
        rbar.component(
            [Slot::Barred, Slot::Unbarred, Slot::Unbarred, Slot::Barred],
            [i, a, b, l],
        )
    };
    let pull = |comp: &dyn Fn(usize, usize, usize, usize) -> f64, m: &Matrix| {
        Rank4::from_fn(n, |i, jj, kk, l| {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s += -2.0 * comp(i, a, b, kk) * m[(a, jj)] * m[(b, l)]
                        + 2.0 * comp(jj, a, b, kk) * m[(a, i)] * m[(b, l)];
                }
            }
            s
        })
    };
    Ok((pull(&ubbu, &j), pull(&buub, &k)))
}

/// `sec_u(X, Y) = R_ijkl Xⁱ Yʲ Yᵏ Xˡ`.
pub fn sec_u(r: &Rank4, x: &[f64], y: &[f64]) -> f64 {
    r.contract(x, y, y, x)
}

/// Primal and dual unnormalized sectional curvatures for primal tangent components.
pub fn sec_pair(chart: &GraphChart, r: &Rank4, r_star: &Rank4, xi: &[f64], x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let j = chart.jacobian(xi)?;
    let (xd, yd) = (j.mul_vec(x), j.mul_vec(y));
    Ok((sec_u(r, x, y), sec_u(r_star, &xd, &yd)))
}

/// `|sec̄_u(X̃, Ỹ) − ½(sec_u(X, Y) + sec*_u(X, Y))|` with `X̃`, `Ỹ` the lifts to the product.
pub fn averaging_residual(
    chart: &GraphChart,
    rbar: &CrossCurvature,
    r: &Rank4,
    r_star: &Rank4,
    xi: &[f64],
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let lhs = unnormalized_sec_bar(rbar, &chart.lift(xi, x)?, &chart.lift(xi, y)?);
    let (s, s_star) = sec_pair(chart, r, r_star, xi, x, y)?;
    Ok((lhs - 0.5 * (s + s_star)).abs())
}

/// Gram determinant `g(X,X)g(Y,Y) − g(X,Y)²`.
pub fn gram(g: &Matrix, x: &[f64], y: &[f64]) -> f64 {
    g.bilinear(x, x) * g.bilinear(y, y) - g.bilinear(x, y).powi(2)
}

/// Deviation of primal and dual curvature from the constant `lambda`, reported separately.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantCurvatureReport {
    pub lambda: f64,
    pub primal_deviation: f64,
    pub dual_deviation: f64,
    pub samples: usize,
}

/// Compares `sec_u` and `sec*_u` against `λ(g(X,X)g(Y,Y) − g(X,Y)²)` on random frames.
pub fn constant_curvature_check(
    chart: &GraphChart,
    points: &[Vec<f64>],
    lambda: f64,
    frames_per_point: usize,
    rng: &mut dyn RngCore,
) -> Result<ConstantCurvatureReport> {
    use rand::Rng;
    let n = chart.dim();
    let mut report = ConstantCurvatureReport {
        lambda,
        primal_deviation: 0.0,
        dual_deviation: 0.0,
        samples: 0,
    };
    for xi in points {
        let g = metric_g(chart, xi)?;
        let (r, r_star) = curvature_rstar(chart, xi)?;
        let j = chart.jacobian(xi)?;
        for _ in 0..frames_per_point {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (s, s_star) = sec_pair(chart, &r, &r_star, xi, &x, &y)?;
            let expect = lambda * gram(&g.primal, &x, &y);
            let (xd, yd) = (j.mul_vec(&x), j.mul_vec(&y));
            let expect_dual = lambda * gram(&g.dual, &xd, &yd);
            report.primal_deviation = report.primal_deviation.max((s - expect).abs());
            report.dual_deviation = report.dual_deviation.max((s_star - expect_dual).abs());
            report.samples += 1;
        }
    }
    Ok(report)
}

/// `max |Γ^g − ½(Γ + Γ*)|` in primal coordinates, with `Γ^g` the Levi-Civita symbols
/// of `g` from a finite-difference `∂g`.
pub fn levi_civita_average_residual(chart: &GraphChart, xi: &[f64]) -> Result<f64> {
    let n = chart.dim();
    let g = metric_g(chart, xi)?.primal;
    let g_inv = g.inverse()?;
    let dg = metric_derivative_fd(chart, xi, 1e-5)?;
    let first_kind = Rank3::from_fn(n, |i, j, l| 0.5 * (dg[(i, j, l)] + dg[(j, i, l)] - dg[(l, i, j)]));
    let lc = raise_last(&first_kind, &g_inv);
    let (gamma, _) = connections(chart, xi)?;
    let star = gamma_star_primal(chart, xi)?;
    Ok(lc.max_abs_diff(&gamma.add(&star).scale(0.5)))
}

/// All structure tensors at `ξ`.
pub fn dualistic_sample(chart: &GraphChart, xi: &[f64]) -> Result<DualisticSample> {
    let point = chart.point(xi)?;
    let g = metric_g(chart, xi)?;
    let (gamma_primal, gamma_dual_star) = connections(chart, xi)?;
    let (r_primal, r_dual_star) = curvature_rstar(chart, xi)?;
    Ok(DualisticSample {
        point,
        g_primal: g.primal,
        g_dual: g.dual,
        gamma_primal,
        gamma_dual_star,
        r_primal,
        r_dual_star,
    })
}

/// The graph point `(ξ, f(ξ))` as a product point.
pub fn product_point(chart: &GraphChart, xi: &[f64]) -> Result<ProductPoint> {
    Ok(chart.point(xi)?.product())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::transport::{builtin_charts, BrenierChart, BrenierGenerator, LogChart};

    fn log2() -> GraphChart {
        let m = LogChart::new(2, 1.0, 1.0 / 3.0, 0.0).unwrap();
        GraphChart::validated(Arc::new(m.cost().unwrap()), Arc::new(m)).unwrap()
    }

    fn log1() -> GraphChart {
        let m = LogChart::half_log_two(1.0).unwrap();
        GraphChart::validated(Arc::new(m.cost().unwrap()), Arc::new(m)).unwrap()
    }

    #[test]
    fn log_metric_pinned() {
        let g = metric_g(&log2(), &[1.0, 1.0]).unwrap().primal;
        let expect = Matrix::from_rows(&[vec![2.0 / 9.0, -1.0 / 9.0], vec![-1.0 / 9.0, 2.0 / 9.0]]);
        assert!(g.max_abs_diff(&expect) < 1e-14);
        assert!(
            metric_g_from_divergence(&log2(), &[1.0, 1.0])
                .unwrap()
                .max_abs_diff(&expect)
                < 1e-6
        );
        for p in [0.5, 1.0, 3.0] {
            let g1 = metric_g(&log1(), &[p]).unwrap().primal[(0, 0)];
            assert!((g1 - 0.25 / (p * p)).abs() < 1e-14);
        }
    }

    #[test]
    fn dual_metric_is_congruent() {
        for chart in builtin_charts().unwrap() {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let xi = chart.sample(&mut rng);
            let g = metric_g(&chart, &xi).unwrap();
            let k = inverse_jacobian(&chart, &xi).unwrap();
            let pushed = k.transpose().mul(&g.primal).mul(&k);
            assert!(
                pushed.max_abs_diff(&g.dual) < 1e-8 * (1.0 + g.dual.max_abs()),
                "{}",
                chart.label()
            );
        }
    }

    #[test]
    fn log_n1_christoffel_is_minus_one() {
        let (gamma, _) = connections(&log1(), &[1.0]).unwrap();
        assert!((gamma[(0, 0, 0)] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn connections_match_divergence_on_builtins() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for chart in builtin_charts().unwrap() {
            let xi = chart.sample(&mut rng);
            let g = metric_g(&chart, &xi).unwrap().primal;
            assert!(
                g.max_abs_diff(&metric_g_from_divergence(&chart, &xi).unwrap()) < 1e-5,
                "{}",
                chart.label()
            );
            let (gamma, _) = connections(&chart, &xi).unwrap();
            let star = gamma_star_primal(&chart, &xi).unwrap();
            let (d_gamma, d_star) = christoffels_from_divergence(&chart, &xi).unwrap();
            let (low, star_low) = (lower_last(&gamma, &g), lower_last(&star, &g));
            assert!(
                low.max_abs_diff(&d_gamma) < 1e-4 * low.max_abs().max(1.0),
                "{}",
                chart.label()
            );
            assert!(
                star_low.max_abs_diff(&d_star) < 1e-4 * star_low.max_abs().max(1.0),
                "{}",
                chart.label()
            );
        }
    }

    #[test]
    fn duality_and_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for chart in builtin_charts().unwrap() {
            for _ in 0..3 {
                let xi = chart.sample(&mut rng);
                assert!(duality_residual(&chart, &xi).unwrap() < 1e-5, "{}", chart.label());
                assert!(
                    connection_decomposition_residual(&chart, &xi).unwrap() < 1e-8,
                    "{}",
                    chart.label()
                );
                assert!(
                    levi_civita_average_residual(&chart, &xi).unwrap() < 1e-5,
                    "{}",
                    chart.label()
                );
                let dg = metric_derivative(&chart, &xi).unwrap();
                assert!(dg.max_abs_diff(&metric_derivative_fd(&chart, &xi, 1e-5).unwrap()) < 1e-6);
            }
        }
    }

    #[test]
    fn restriction_on_log_chart() {
        let chart = log2();
        let v = chart.lift(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((v.b[0] + 1.0).abs() < 1e-15 && v.b[1].abs() < 1e-15);
        let tangents = vec![vec![1.0, 0.0], vec![0.3, -2.0], vec![0.0, 0.0]];
        assert!(metric_restriction_residual(&chart, &[1.0, 1.0], &tangents).unwrap() < 1e-14);
    }

    #[test]
    fn curvature_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for chart in builtin_charts().unwrap() {
            let xi = chart.sample(&mut rng);
            let (r, rs) = curvature_rstar(&chart, &xi).unwrap();
            let (pr, prs) = curvature_pullback(&chart, &xi).unwrap();
            assert!(r.max_abs_diff(&pr) < 1e-4, "{} R", chart.label());
            assert!(rs.max_abs_diff(&prs) < 1e-4, "{} R*", chart.label());
            for t in [&pr, &prs] {
                let swapped = Rank4::from_fn(chart.dim(), |i, j, k, l| t[(j, i, k, l)]);
                assert!(t.add(&swapped).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn log_sectional_pinned() {
        let chart = log2();
        let (r, _) = curvature_rstar(&chart, &[1.0, 1.0]).unwrap();
        assert!((sec_u(&r, &[1.0, 0.0], &[0.0, 1.0]) + 1.0 / 27.0).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Vec<f64>> = (0..4).map(|_| chart.sample(&mut rng)).collect();
        let rep = constant_curvature_check(&chart, &pts, -1.0, 5, &mut rng).unwrap();
        assert!(rep.primal_deviation < 1e-6 && rep.dual_deviation < 1e-6, "{rep:?}");
    }

    #[test]
    fn averaging_theorem() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for chart in builtin_charts().unwrap() {
            let xi = chart.sample(&mut rng);
            let p = chart.point(&xi).unwrap();
            let rbar = curvature_rbar(chart.cost().as_ref(), &p.product()).unwrap();
            let (r, rs) = curvature_pullback(&chart, &xi).unwrap();
            let n = chart.dim();
            use rand::Rng;
            for _ in 0..5 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                assert!(
                    averaging_residual(&chart, &rbar, &r, &rs, &xi, &x, &y).unwrap() < 1e-10,
                    "{}",
                    chart.label()
                );
            }
        }
    }

    #[test]
    fn quadratic_is_dually_flat() {
        let a = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let map = BrenierChart::new(2, BrenierGenerator::Linear(a.clone())).unwrap();
        let chart = GraphChart::validated(Arc::new(map.cost()), Arc::new(map)).unwrap();
        let s = dualistic_sample(&chart, &[0.3, -0.7]).unwrap();
        assert!(s.g_primal.max_abs_diff(&a) < 1e-15);
        assert!(s.gamma_primal.max_abs() < 1e-15 && s.gamma_dual_star.max_abs() < 1e-15);
        assert!(s.r_primal.max_abs() < 1e-10 && s.r_dual_star.max_abs() < 1e-10);
    }

    #[test]
    fn indefinite_metric_is_rejected() {
        let m = LogChart::half_log_two(1.0).unwrap();
        let cost = crate::cost::QuadraticCost::new(1);
        // a decreasing map against the quadratic cost gives g = J < 0
        let chart = GraphChart::new(Arc::new(cost), Arc::new(m)).unwrap();
        assert!(matches!(metric_g(&chart, &[1.0]), Err(GeomError::InvalidChart(_))));
    }
}
