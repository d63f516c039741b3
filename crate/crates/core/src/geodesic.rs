//! Primal, dual and Levi-Civita geodesics, and the fourth mixed derivative of the
//! divergence between a primal and a dual geodesic.

use std::io::Write;

use serde::Serialize;

use crate::cost::{CostExt, CostModel};
use crate::dualistic::{connections, metric_g};
use crate::error::{GeomError, Result};
use crate::numeric::{integrate_ode_within, Rank3, Trajectory};
use crate::pseudo::{
    curvature_rbar, levi_civita_symbols, metric_h, mtw_tensor, unnormalized_sec_bar, ProductPoint, TangentPair,
};
use crate::transport::GraphChart;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flavor {
    Primal,
    Dual,
    LeviCivita,
}

impl Flavor {
    pub fn as_str(self) -> &'static str {
        match self {
            Flavor::Primal => "primal",
            Flavor::Dual => "dual",
            Flavor::LeviCivita => "levi_civita",
        }
    }
}

/// One stored point of a path. `velocity` is in the flavor's own coordinates:
/// `ξ̇` for primal, `η̇` for dual, `(ξ̇, η̇)` for Levi-Civita paths.
#[derive(Clone, Debug, Serialize)]
pub struct PathSample {
    pub t: f64,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub velocity: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicPath {
    pub flavor: Flavor,
    pub samples: Vec<PathSample>,
    /// Time of the last valid sample when the path left the domain.
    pub exited_at: Option<f64>,
}

impl GeodesicPath {
    pub fn completed(&self) -> bool {
        self.exited_at.is_none()
    }

    pub fn last(&self) -> &PathSample {
        self.samples.last().expect("path holds its initial point")
    }

    /// Position in the flavor's own coordinates.
    pub fn position(&self, k: usize) -> Vec<f64> {
        let s = &self.samples[k];
        match self.flavor {
            Flavor::Primal => s.xi.clone(),
            Flavor::Dual => s.eta.clone(),
            Flavor::LeviCivita => [s.xi.as_slice(), s.eta.as_slice()].concat(),
        }
    }
}

/// `−Γ_ij^k vⁱ vʲ`.
fn acceleration(gamma: &Rank3, v: &[f64]) -> Vec<f64> {
    gamma.contract_first_two(v, v).into_iter().map(|a| -a).collect()
}

fn geodesic_rhs<'a, G>(symbols: G) -> impl Fn(f64, &[f64]) -> Vec<f64> + 'a
where
    G: Fn(&[f64]) -> Result<Rank3> + 'a,
{
    move |_t, y| {
        let d = y.len() / 2;
        let (x, v) = y.split_at(d);
        match symbols(x) {
            Ok(gamma) => [v.to_vec(), acceleration(&gamma, v)].concat(),
            Err(_) => vec![f64::NAN; y.len()],
        }
    }
}

fn primal_symbols(chart: &GraphChart) -> impl Fn(&[f64]) -> Result<Rank3> + '_ {
    move |x| Ok(connections(chart, x)?.0)
}

fn dual_symbols(chart: &GraphChart) -> impl Fn(&[f64]) -> Result<Rank3> + '_ {
    move |e| {
        let x = chart.inverse(e)?;
        Ok(connections(chart, &x)?.1)
    }
}

fn product_symbols(cost: &dyn CostModel) -> impl Fn(&[f64]) -> Result<Rank3> + '_ {
    move |z| Ok(levi_civita_symbols(cost, &ProductPoint::from_stacked(z))?.full())
}

fn trajectory_states<G, D>(symbols: G, x0: &[f64], v0: &[f64], t1: f64, steps: usize, inside: D) -> Result<Trajectory>
where
    G: Fn(&[f64]) -> Result<Rank3>,
    D: Fn(&[f64]) -> bool,
{
    if x0.len() != v0.len() {
        return Err(GeomError::domain("position and velocity lengths differ"));
    }
    if !inside(x0) {
        return Err(GeomError::domain(format!("initial point {x0:?} is outside the domain")));
    }
    let d = x0.len();
    let y0 = [x0, v0].concat();
    integrate_ode_within(geodesic_rhs(symbols), &y0, 0.0, t1, steps, |y| inside(&y[..d]))
}

/// `ξ̈ᵏ + Γ_ij^k ξ̇ⁱ ξ̇ʲ = 0` in primal coordinates on `[0, t1]` (`t1` may be negative).
pub fn integrate_primal_geodesic(
    chart: &GraphChart,
    xi0: &[f64],
    xidot0: &[f64],
    t1: f64,
    steps: usize,
) -> Result<GeodesicPath> {
    let map = chart.map().clone();
    let tr = trajectory_states(primal_symbols(chart), xi0, xidot0, t1, steps, |x| map.contains(x))?;
    let n = chart.dim();
    let samples = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(&t, y)| {
            let xi = y[..n].to_vec();
            Ok(PathSample {
                t,
                eta: chart.forward(&xi)?,
                xi,
                velocity: y[n..].to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeodesicPath {
        flavor: Flavor::Primal,
        samples,
        exited_at: tr.stopped_at,
    })
}

/// `η̈ᵏ + Γ*_ij^k η̇ⁱ η̇ʲ = 0` in dual coordinates.
pub fn integrate_dual_geodesic(
    chart: &GraphChart,
    eta0: &[f64],
    etadot0: &[f64],
    t1: f64,
    steps: usize,
) -> Result<GeodesicPath> {
    let map = chart.map().clone();
    let tr = trajectory_states(dual_symbols(chart), eta0, etadot0, t1, steps, |e| map.contains_dual(e))?;
    let n = chart.dim();
    let samples = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(&t, y)| {
            let eta = y[..n].to_vec();
            Ok(PathSample {
                t,
                xi: chart.inverse(&eta)?,
                eta,
                velocity: y[n..].to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GeodesicPath {
        flavor: Flavor::Dual,
        samples,
        exited_at: tr.stopped_at,
    })
}

/// Geodesic of `h` on the product, in product coordinates.
pub fn integrate_levi_civita_geodesic(
    cost: &dyn CostModel,
    x0: &ProductPoint,
    v0: &TangentPair,
    t1: f64,
    steps: usize,
) -> Result<GeodesicPath> {
    let n = cost.dim();
    let inside = |z: &[f64]| cost.in_domain(&z[..n], &z[n..]);
    let tr = trajectory_states(product_symbols(cost), &x0.stacked(), &v0.stacked(), t1, steps, inside)?;
    let samples = tr
        .times
        .iter()
        .zip(&tr.states)
        .map(|(&t, y)| PathSample {
            t,
            xi: y[..n].to_vec(),
            eta: y[n..2 * n].to_vec(),
            velocity: y[2 * n..].to_vec(),
        })
        .collect();
    Ok(GeodesicPath {
        flavor: Flavor::LeviCivita,
        samples,
        exited_at: tr.stopped_at,
    })
}

/// Per-sample `|ẍ + Γ(ẋ, ẋ)|` (max over components), with `ẍ` from a
/// five-point difference of the stored velocities. The first and last two
/// samples have no centered stencil and are `NaN`. Needs a uniform grid.
pub fn pointwise_residuals(
    path: &GeodesicPath,
    chart: Option<&GraphChart>,
    cost: Option<&dyn CostModel>,
) -> Result<Vec<f64>> {
    let m = path.samples.len();
    let mut out = vec![f64::NAN; m];
    if m < 5 {
        return Ok(out);
    }
    let dt = path.samples[1].t - path.samples[0].t;
    let symbols = |x: &[f64]| -> Result<Rank3> {
        match (path.flavor, chart, cost) {
            (Flavor::Primal, Some(c), _) => primal_symbols(c)(x),
            (Flavor::Dual, Some(c), _) => dual_symbols(c)(x),
            (Flavor::LeviCivita, _, Some(c)) => product_symbols(c)(x),
            _ => Err(GeomError::domain("path flavor needs a matching chart or cost")),
        }
    };
    for k in 2..m - 2 {
        let v = |i: usize| &path.samples[i].velocity;
        let gamma = symbols(&path.position(k))?;
        let accel = acceleration(&gamma, v(k));
        let mut worst = 0.0f64;
        for (c, target) in accel.iter().enumerate() {
            let fd = (-v(k + 2)[c] + 8.0 * v(k + 1)[c] - 8.0 * v(k - 1)[c] + v(k - 2)[c]) / (12.0 * dt);
            worst = worst.max((fd - target).abs());
        }
        out[k] = worst;
    }
    Ok(out)
}

/// Largest [`pointwise_residuals`] entry.
pub fn ode_residual(path: &GeodesicPath, chart: Option<&GraphChart>, cost: Option<&dyn CostModel>) -> Result<f64> {
    if path.samples.len() < 5 {
        return Err(GeomError::domain("need at least five samples"));
    }
    let r = pointwise_residuals(path, chart, cost)?;
    Ok(r.into_iter().filter(|v| v.is_finite()).fold(0.0, f64::max))
}

/// `h(ż, ż)` along a Levi-Civita path.
pub fn energy_profile(cost: &dyn CostModel, path: &GeodesicPath) -> Result<Vec<f64>> {
    let n = cost.dim();
    path.samples
        .iter()
        .map(|s| {
            let h = metric_h(cost, &ProductPoint::new(s.xi.clone(), s.eta.clone()))?;
            let v = TangentPair::new(s.velocity[..n].to_vec(), s.velocity[n..].to_vec());
            Ok(h.apply(&v, &v))
        })
        .collect()
}

/// Writes `t,xi1..xin,eta1..etan,residual` rows. Residuals are left empty
/// where they are undefined. A path that left the domain ends with a
/// `failure,<message>` trailer row.
pub fn write_csv<W: Write>(out: &mut W, path: &GeodesicPath, residuals: &[f64]) -> std::io::Result<()> {
    let n = path.samples[0].xi.len();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("xi{i}")));
    header.extend((1..=n).map(|i| format!("eta{i}")));
    header.push("residual".into());
    writeln!(out, "{}", header.join(","))?;
    for (k, s) in path.samples.iter().enumerate() {
        let mut row = vec![format!("{}", s.t)];
        row.extend(s.xi.iter().chain(&s.eta).map(|v| format!("{v}")));
        row.push(match residuals.get(k) {
            Some(r) if r.is_finite() => format!("{r:e}"),
            _ => String::new(),
        });
        writeln!(out, "{}", row.join(","))?;
    }
    if let Some(t) = path.exited_at {
        writeln!(out, "failure,{} path left the domain after t={t}", path.flavor.as_str())?;
    }
    Ok(())
}

/// Settings for the `(s, t)` difference stencil of the fourth-derivative check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StencilOptions {
    pub step: f64,
    /// RK4 steps per stencil half-step.
    pub substeps: usize,
}

impl Default for StencilOptions {
    fn default() -> Self {
        Self {
            step: 0.05,
            substeps: 16,
        }
    }
}

/// Outcome of the fourth-derivative comparison.
#[derive(Clone, Debug, Serialize)]
pub struct FourthDerivative {
    /// Richardson-extrapolated `∂⁴/∂s²∂t² D[γ(s) : σ(t)]` at the origin.
    pub lhs: f64,
    /// The same derivative at stencil step `h` and `h/2`, before extrapolation.
    pub lhs_coarse: f64,
    pub lhs_fine: f64,
    /// Stencil step `h`.
    pub step: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
}

impl FourthDerivative {
    pub fn passes(&self) -> bool {
        self.residual <= self.tolerance
    }

    /// Richardson estimate of the error left in `lhs`.
    pub fn extrapolation_error(&self) -> f64 {
        (self.lhs_fine - self.lhs_coarse).abs() / 15.0
    }
}

/// Positions at times `k·dt` for `k = −m..=m`, as primal coordinates for the
/// primal flavor and dual coordinates for the dual one.
fn symmetric_samples(
    chart: &GraphChart,
    flavor: Flavor,
    x0: &[f64],
    v0: &[f64],
    reach: f64,
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    let run = |t1: f64| match flavor {
        Flavor::Primal => integrate_primal_geodesic(chart, x0, v0, t1, steps),
        _ => integrate_dual_geodesic(chart, x0, v0, t1, steps),
    };
    let fwd = run(reach)?;
    let bwd = run(-reach)?;
    if !fwd.completed() || !bwd.completed() {
        return Err(GeomError::domain("geodesic left the chart inside the stencil"));
    }
    let pos = |p: &GeodesicPath, k: usize| p.position(k);
    let mut out: Vec<Vec<f64>> = (1..=steps).rev().map(|k| pos(&bwd, k)).collect();
    out.extend((0..=steps).map(|k| pos(&fwd, k)));
    Ok(out)
}

const STENCIL: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

/// Mixed fourth derivative of `D[γ(s) : σ(t)]` by five-point stencils in `s` and `t`,
/// with geodesics integrated once on an aligned grid and one Richardson level.
pub fn divergence_fourth_derivative(
    chart: &GraphChart,
    xi0: &[f64],
    u: &[f64],
    vbar: &[f64],
    opts: StencilOptions,
) -> Result<(f64, f64, f64)> {
    let eta0 = chart.forward(xi0)?;
    let h = opts.step;
    // grid spacing h/2 with `substeps` RK4 steps per spacing
    let per_side = 4 * opts.substeps;
    let gamma = symmetric_samples(chart, Flavor::Primal, xi0, u, 2.0 * h, per_side)?;
    let sigma = symmetric_samples(chart, Flavor::Dual, &eta0, vbar, 2.0 * h, per_side)?;
    let centre = per_side;
    let at = |k: i64| (centre as i64 + k) as usize;
    let estimate = |stride: i64, step: f64| -> Result<f64> {
        let mut s = 0.0;
        for (a, wa) in STENCIL.iter().enumerate() {
            for (b, wb) in STENCIL.iter().enumerate() {
                let p = &gamma[at((a as i64 - 2) * stride)];
                let q = &sigma[at((b as i64 - 2) * stride)];
                s += wa * wb * chart.c_divergence_mixed(p, q)?;
            }
        }
        Ok(s / (144.0 * step.powi(4)))
    };
    let sub = opts.substeps as i64;
    let coarse = estimate(2 * sub, h)?;
    let fine = estimate(sub, h / 2.0)?;
    Ok(((16.0 * fine - coarse) / 15.0, coarse, fine))
}

/// `∂⁴/∂s²∂t² D[γ(s) : σ(t)]|₀ = −2 sec̄_u(u ⊕ 0, 0 ⊕ v̄)`, with tolerance `max(1e-3, 1%·|rhs|)`.
pub fn fourth_derivative_check(
    chart: &GraphChart,
    xi0: &[f64],
    u: &[f64],
    vbar: &[f64],
    opts: StencilOptions,
) -> Result<FourthDerivative> {
    let (lhs, lhs_coarse, lhs_fine) = divergence_fourth_derivative(chart, xi0, u, vbar, opts)?;
    let p = chart.point(xi0)?;
    let r = curvature_rbar(chart.cost().as_ref(), &p.product())?;
    let rhs = -2.0 * unnormalized_sec_bar(&r, &TangentPair::primal(u), &TangentPair::dual(vbar));
    Ok(FourthDerivative {
        lhs,
        lhs_coarse,
        lhs_fine,
        step: opts.step,
        rhs,
        residual: (lhs - rhs).abs(),
        tolerance: (1e-2 * rhs.abs()).max(1e-3),
    })
}

/// Compares the divergence derivative with `−2α g(γ̇(0), σ̇(0))²`, where `σ̇(0)`
/// is converted to primal components.
pub fn l_alpha_corollary_check(
    chart: &GraphChart,
    alpha: f64,
    xi0: &[f64],
    u: &[f64],
    vbar: &[f64],
    opts: StencilOptions,
) -> Result<FourthDerivative> {
    let (lhs, lhs_coarse, lhs_fine) = divergence_fourth_derivative(chart, xi0, u, vbar, opts)?;
    let g = metric_g(chart, xi0)?.primal;
    let sigma_dot = chart.jacobian(xi0)?.inverse()?.mul_vec(vbar);
    let rhs = -2.0 * alpha * g.bilinear(u, &sigma_dot).powi(2);
    Ok(FourthDerivative {
        lhs,
        lhs_coarse,
        lhs_fine,
        step: opts.step,
        rhs,
        residual: (lhs - rhs).abs(),
        tolerance: 1e-3,
    })
}

/// `𝔖` estimated as minus the divergence derivative, next to the tensor value.
#[derive(Clone, Debug, Serialize)]
pub struct MtwEstimate {
    pub from_divergence: f64,
    pub from_tensor: f64,
}

pub fn mtw_via_divergence(
    chart: &GraphChart,
    xi0: &[f64],
    u: &[f64],
    vbar: &[f64],
    opts: StencilOptions,
) -> Result<MtwEstimate> {
    let (lhs, _, _) = divergence_fourth_derivative(chart, xi0, u, vbar, opts)?;
    let p = chart.point(xi0)?;
    let r = curvature_rbar(chart.cost().as_ref(), &p.product())?;
    Ok(MtwEstimate {
        from_divergence: -lhs,
        from_tensor: mtw_tensor(&r, u, vbar),
    })
}

/// `c_{i:j̄}(p, q) uⁱ v̄ʲ`, the mixed pairing in the log-cost fourth-derivative check.
pub fn mixed_pairing(cost: &dyn CostModel, p: &ProductPoint, u: &[f64], vbar: &[f64]) -> Result<f64> {
    Ok(cost.mixed_block(&p.xi, &p.eta)?.bilinear(u, vbar))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::numeric::max_abs_diff;
    use crate::transport::{BrenierChart, BrenierGenerator, LogChart};

    fn log1() -> GraphChart {
        let m = LogChart::half_log_two(1.0).unwrap();
        GraphChart::validated(Arc::new(m.cost().unwrap()), Arc::new(m)).unwrap()
    }

    fn log2() -> GraphChart {
        let m = LogChart::new(2, 1.0, 1.0 / 3.0, 0.0).unwrap();
        GraphChart::validated(Arc::new(m.cost().unwrap()), Arc::new(m)).unwrap()
    }

    fn quadratic(generator: BrenierGenerator) -> GraphChart {
        let m = BrenierChart::new(2, generator).unwrap();
        GraphChart::validated(Arc::new(m.cost()), Arc::new(m)).unwrap()
    }

    #[test]
    fn quadratic_geodesics_are_straight() {
        let a = crate::numeric::Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let chart = quadratic(BrenierGenerator::Linear(a));
        let p = integrate_primal_geodesic(&chart, &[0.1, 0.2], &[1.0, -0.5], 1.0, 32).unwrap();
        for s in &p.samples {
            assert!(max_abs_diff(&s.xi, &[0.1 + s.t, 0.2 - 0.5 * s.t]) < 1e-14);
        }
        let d = integrate_dual_geodesic(&chart, &[0.3, 0.0], &[0.0, 2.0], 1.0, 32).unwrap();
        for s in &d.samples {
            assert!(max_abs_diff(&s.eta, &[0.3, 2.0 * s.t]) < 1e-14);
        }
        let still = integrate_primal_geodesic(&chart, &[0.1, 0.2], &[0.0, 0.0], 1.0, 16).unwrap();
        assert!(still.samples.iter().all(|s| s.xi == vec![0.1, 0.2]));
    }

    #[test]
    fn log_geodesics_resubstitute() {
        let p = integrate_primal_geodesic(&log1(), &[1.0], &[1.0], 0.5, 400).unwrap();
        assert!(ode_residual(&p, Some(&log1()), None).unwrap() < 1e-6);
        let coarse = integrate_primal_geodesic(&log1(), &[1.0], &[1.0], 0.5, 200).unwrap();
        assert!((coarse.last().xi[0] - p.last().xi[0]).abs() < 1e-8);
        let chart = log2();
        let d = integrate_dual_geodesic(&chart, &[1.0, 1.0], &[0.4, -0.3], 1.0, 400).unwrap();
        assert!(ode_residual(&d, Some(&chart), None).unwrap() < 1e-6);
    }

    #[test]
    fn affine_reparameterization() {
        let chart = log2();
        let a = integrate_primal_geodesic(&chart, &[1.0, 1.2], &[0.4, -0.2], 1.0, 100).unwrap();
        let b = integrate_primal_geodesic(&chart, &[1.0, 1.2], &[0.2, -0.1], 2.0, 100).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!(max_abs_diff(&x.xi, &y.xi) < 1e-9);
        }
    }

    #[test]
    fn domain_exit_truncates() {
        // dual geodesics of the softmax chart are straight lines leaving the simplex
        let chart = quadratic(BrenierGenerator::AnchoredLogSumExp);
        let p = integrate_dual_geodesic(&chart, &[0.3, 0.3], &[1.0, 0.0], 1.0, 100).unwrap();
        assert!(!p.completed());
        let t = p.exited_at.unwrap();
        assert!(t > 0.38 && t < 0.4, "{t}");
        assert!(p.samples.iter().all(|s| s.eta[0] + s.eta[1] < 1.0));
    }

    #[test]
    fn levi_civita_energy_is_conserved() {
        let cost = crate::cost::LogCost::new(2, 1.0).unwrap();
        let x0 = ProductPoint::new(vec![1.0, 0.8], vec![0.9, 1.1]);
        let v0 = TangentPair::new(vec![0.3, -0.2], vec![0.1, 0.4]);
        let path = integrate_levi_civita_geodesic(&cost, &x0, &v0, 1.0, 200).unwrap();
        let e = energy_profile(&cost, &path).unwrap();
        let spread = e.iter().fold(0.0f64, |m, v| m.max((v - e[0]).abs()));
        assert!(spread < 1e-6, "{spread}");
        assert!(ode_residual(&path, None, Some(&cost)).unwrap() < 1e-6);
    }

    #[test]
    fn fourth_derivative_log_pinned() {
        let r = fourth_derivative_check(&log1(), &[1.0], &[1.0], &[1.0], StencilOptions::default()).unwrap();
        assert!((r.rhs + 0.125).abs() < 1e-12);
        assert!(r.passes(), "{r:?}");
        assert!((r.lhs_coarse - r.lhs_fine).abs() < 0.25 * r.tolerance);
        let c = l_alpha_corollary_check(&log1(), 1.0, &[1.0], &[1.0], &[1.0], StencilOptions::default()).unwrap();
        assert!((c.rhs + 0.125).abs() < 1e-12 && c.passes(), "{c:?}");
        let m = mtw_via_divergence(&log1(), &[1.0], &[1.0], &[1.0], StencilOptions::default()).unwrap();
        assert!((m.from_tensor - 0.125).abs() < 1e-12 && (m.from_divergence - 0.125).abs() < 1e-3);
    }

    #[test]
    fn fourth_derivative_scales_quadratically() {
        let chart = log2();
        let a = fourth_derivative_check(
            &chart,
            &[1.1, 0.9],
            &[0.3, 0.2],
            &[-0.4, 0.5],
            StencilOptions::default(),
        )
        .unwrap();
        let b = fourth_derivative_check(
            &chart,
            &[1.1, 0.9],
            &[0.6, 0.4],
            &[-0.4, 0.5],
            StencilOptions::default(),
        )
        .unwrap();
        assert!(a.passes() && b.passes(), "{a:?} {b:?}");
        assert!((b.rhs - 4.0 * a.rhs).abs() < 1e-12);
    }

    #[test]
    fn quadratic_fourth_derivative_vanishes() {
        let chart = quadratic(BrenierGenerator::AnchoredLogSumExp);
        let r = fourth_derivative_check(
            &chart,
            &[0.2, -0.1],
            &[1.0, 0.5],
            &[0.05, -0.02],
            StencilOptions::default(),
        )
        .unwrap();
        assert!(r.lhs.abs() < 1e-6 && r.rhs == 0.0, "{r:?}");
    }

    #[test]
    fn csv_layout() {
        let chart = log1();
        let p = integrate_primal_geodesic(&chart, &[1.0], &[0.5], 0.1, 16).unwrap();
        let r = pointwise_residuals(&p, Some(&chart), None).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &p, &r).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,xi1,eta1,residual");
        assert_eq!(lines.len(), 18);
        assert!(lines[1].ends_with(','));
        assert!(!lines[3].ends_with(','));

        let softmax = quadratic(BrenierGenerator::AnchoredLogSumExp);
        let d = integrate_dual_geodesic(&softmax, &[0.3, 0.3], &[1.0, 0.0], 1.0, 100).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &d, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().last().unwrap().starts_with("failure,dual"));
    }
}
