use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{Comparison, ReportEntry};
use super::{item_rng, Family, Scenario};
use crate::canonical::{
    ay_amari_structure_check, recover_cost_from_metric, straight_curve, wrap_cost_as_divergence, ChartStructure,
    DiagonalChart,
};
use crate::cost::{closed_form_shrinkage, sinkhorn_c_lambda, CostModel};
use crate::dualistic::{
    averaging_residual, connection_decomposition_residual, constant_curvature_check, curvature_pullback,
    curvature_rstar, duality_residual, levi_civita_average_residual, metric_restriction_residual, product_point,
    METRIC_EIGEN_FLOOR,
};
use crate::error::{GeomError, Result};
use crate::geodesic::{fourth_derivative_check, l_alpha_corollary_check, FourthDerivative, StencilOptions};
use crate::pseudo::{cross_curvature_constancy, curvature_fd_oracle, curvature_rbar, metric_h, weak_regularity_probe};
use crate::transport::{GraphChart, JACOBIAN_CONDITION_LIMIT};
use std::sync::Arc;

const FRAMES: usize = 10;

/// Registered checks, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Check {
    Signature,
    Fenchel,
    MetricRestriction,
    Symmetrization,
    ThreePoint,
    Duality,
    ConnectionDecomposition,
    LeviCivitaAverage,
    CurvatureFd,
    CurvaturePullback,
    Averaging,
    CrossCurvature,
    InformationCurvature,
    Flatness,
    MtwNull,
    FourthDerivative,
    LAlphaCorollary,
    Canonical,
    EntropicDivergence,
}

struct EntrySpec {
    key: &'static str,
    anchor: &'static str,
    comparison: Comparison,
    analytic: f64,
    entropic: f64,
}

const fn spec(
    key: &'static str,
    anchor: &'static str,
    comparison: Comparison,
    analytic: f64,
    entropic: f64,
) -> EntrySpec {
    EntrySpec {
        key,
        anchor,
        comparison,
        analytic,
        entropic,
    }
}

use Comparison::{AbsDiff, AtLeast, AtMost};

#[rustfmt::skip]
const SPECS: &[EntrySpec] = &[
    spec("signature", "pseudo-metric h has split signature (n, n)", AbsDiff, 0.0, 0.0),
    spec("fenchel_gap", "c(p, q') >= phi(p) + psi(q') with equality on the graph", AtLeast, 1e-9, 1e-9),
    spec("jacobian_condition", "graph map is a diffeomorphism", AtMost, 0.0, 0.0),
    spec("metric_positive", "induced metric g is positive definite", AtLeast, 0.0, 0.0),
    spec("metric_restriction", "restriction of h to the graph equals g", AbsDiff, 1e-8, 1e-5),
    spec("symmetrization", "D[p:p'] + D[p':p] as a cross-difference", AbsDiff, 1e-10, 1e-6),
    spec("three_point", "three-point identity of the c-divergence", AbsDiff, 1e-10, 1e-6),
    spec("duality", "Z g(X, Y) = g(nabla_Z X, Y) + g(X, nabla*_Z Y)", AbsDiff, 1e-5, 1e-5),
    spec("connection_decomposition", "Levi-Civita connection of h projected onto the graph", AbsDiff, 1e-8, 1e-8),
    spec("levi_civita_average", "Levi-Civita connection of g is the mean of Gamma and Gamma*", AbsDiff, 1e-5, 1e-5),
    spec("curvature_fd", "closed-form cross curvature against differentiated Christoffels", AbsDiff, 1e-4, 1e-4),
    spec("curvature_pullback", "R and R* as pullbacks of the cross curvature", AbsDiff, 1e-4, 1e-4),
    spec("averaging", "sec of a lifted plane is the mean of sec and sec*", AbsDiff, 1e-5, 1e-5),
    spec("cross_curvature", "log cost has constant cross curvature -4 alpha", AbsDiff, 1e-6, 1e-6),
    spec("information_curvature_primal", "graph connection has constant curvature -alpha", AbsDiff, 1e-6, 1e-6),
    spec("information_curvature_dual", "dual connection has constant curvature -alpha", AbsDiff, 1e-6, 1e-6),
    spec("flatness_rbar", "quadratic cost: cross curvature vanishes", AbsDiff, 1e-10, 1e-10),
    spec("flatness_r", "quadratic cost: primal curvature vanishes", AbsDiff, 1e-10, 1e-10),
    spec("flatness_rstar", "quadratic cost: dual curvature vanishes", AbsDiff, 1e-10, 1e-10),
    spec("mtw_null", "MTW tensor vanishes on h-null split vectors", AbsDiff, 1e-8, 1e-8),
    spec("fourth_derivative", "mixed fourth derivative of D along geodesics is -2 sec", AbsDiff, 1e-3, 1e-3),
    spec("fourth_derivative_convergence", "stencil estimates at h and h/2 agree", AbsDiff, 0.25, 0.25),
    spec("l_alpha_corollary", "fourth derivative of the L-alpha divergence is -2 alpha g^2", AbsDiff, 1e-3, 1e-3),
    spec("l_alpha_convergence", "stencil estimates at h and h/2 agree", AbsDiff, 0.25, 0.25),
    spec("canonical_cross_difference", "wrapped divergence shares the cross-difference of c", AbsDiff, 1e-10, 1e-8),
    spec("canonical_recover", "cost recovered by integrating h along a curve", AbsDiff, 1e-6, 1e-6),
    spec("canonical_metric", "canonical divergence recovers g", AbsDiff, 1e-3, 1e-3),
    spec("canonical_gamma", "canonical divergence recovers Gamma", AbsDiff, 1e-3, 1e-3),
    spec("canonical_gamma_star", "canonical divergence recovers Gamma*", AbsDiff, 1e-3, 1e-3),
    spec("entropic_nonnegative", "D_lambda[p:p'] >= 0", AtLeast, 1e-9, 1e-9),
    spec("entropic_diagonal", "D_lambda[p:p] = 0", AbsDiff, 1e-8, 1e-8),
    spec("entropic_chart_agreement", "c-divergence of the shrinkage chart equals D_lambda", AbsDiff, 1e-8, 1e-8),
];

/// Every report entry name; these are the keys accepted under `[tolerances]`.
pub const ENTRY_KEYS: &[&str] = &[
    "signature",
    "fenchel_gap",
    "jacobian_condition",
    "metric_positive",
    "metric_restriction",
    "symmetrization",
    "three_point",
    "duality",
    "connection_decomposition",
    "levi_civita_average",
    "curvature_fd",
    "curvature_pullback",
    "averaging",
    "cross_curvature",
    "information_curvature_primal",
    "information_curvature_dual",
    "flatness_rbar",
    "flatness_r",
    "flatness_rstar",
    "mtw_null",
    "fourth_derivative",
    "fourth_derivative_convergence",
    "l_alpha_corollary",
    "l_alpha_convergence",
    "canonical_cross_difference",
    "canonical_recover",
    "canonical_metric",
    "canonical_gamma",
    "canonical_gamma_star",
    "entropic_nonnegative",
    "entropic_diagonal",
    "entropic_chart_agreement",
];

fn entry_spec(key: &str) -> &'static EntrySpec {
    SPECS.iter().find(|s| s.key == key).expect("registered entry key")
}

impl Check {
    pub const ALL: [Check; 19] = [
        Check::Signature,
        Check::Fenchel,
        Check::MetricRestriction,
        Check::Symmetrization,
        Check::ThreePoint,
        Check::Duality,
        Check::ConnectionDecomposition,
        Check::LeviCivitaAverage,
        Check::CurvatureFd,
        Check::CurvaturePullback,
        Check::Averaging,
        Check::CrossCurvature,
        Check::InformationCurvature,
        Check::Flatness,
        Check::MtwNull,
        Check::FourthDerivative,
        Check::LAlphaCorollary,
        Check::Canonical,
        Check::EntropicDivergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Signature => "signature",
            Check::Fenchel => "fenchel",
            Check::MetricRestriction => "metric_restriction",
            Check::Symmetrization => "symmetrization",
            Check::ThreePoint => "three_point",
            Check::Duality => "duality",
            Check::ConnectionDecomposition => "connection_decomposition",
            Check::LeviCivitaAverage => "levi_civita_average",
            Check::CurvatureFd => "curvature_fd",
            Check::CurvaturePullback => "curvature_pullback",
            Check::Averaging => "averaging",
            Check::CrossCurvature => "cross_curvature",
            Check::InformationCurvature => "information_curvature",
            Check::Flatness => "flatness",
            Check::MtwNull => "mtw_null",
            Check::FourthDerivative => "fourth_derivative",
            Check::LAlphaCorollary => "l_alpha_corollary",
            Check::Canonical => "canonical",
            Check::EntropicDivergence => "entropic_divergence",
        }
    }

    pub fn from_name(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Report entries this check emits.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Check::Fenchel => &["fenchel_gap", "jacobian_condition", "metric_positive"],
            Check::InformationCurvature => &["information_curvature_primal", "information_curvature_dual"],
            Check::Flatness => &["flatness_rbar", "flatness_r", "flatness_rstar"],
            Check::Canonical => &[
                "canonical_cross_difference",
                "canonical_recover",
                "canonical_metric",
                "canonical_gamma",
                "canonical_gamma_star",
            ],
            Check::EntropicDivergence => &["entropic_nonnegative", "entropic_diagonal", "entropic_chart_agreement"],
            Check::FourthDerivative => &["fourth_derivative", "fourth_derivative_convergence"],
            Check::LAlphaCorollary => &["l_alpha_corollary", "l_alpha_convergence"],
            other => {
                let name = other.name();
                ENTRY_KEYS
                    .iter()
                    .find(|k| **k == name)
                    .map(std::slice::from_ref)
                    .unwrap_or(&[])
            }
        }
    }

    pub fn applies_to(self, sc: &Scenario) -> bool {
        let chart = sc.chart.is_some();
        let constant = matches!(sc.family, Family::Quadratic | Family::Log { .. });
        match self {
            Check::Signature | Check::CurvatureFd => true,
            Check::CrossCurvature | Check::MtwNull => constant,
            Check::InformationCurvature => chart && constant,
            Check::Flatness => chart && sc.family == Family::Quadratic,
            Check::LAlphaCorollary => chart && matches!(sc.family, Family::Log { .. }),
            Check::EntropicDivergence => chart && sc.family == Family::Entropic,
            _ => chart,
        }
    }

    pub fn run(self, ctx: &Ctx<'_>) -> Vec<ReportEntry> {
        let result = match self {
            Check::Signature => signature(ctx),
            Check::Fenchel => fenchel(ctx),
            Check::MetricRestriction => metric_restriction(ctx),
            Check::Symmetrization => symmetrization(ctx),
            Check::ThreePoint => three_point(ctx),
            Check::Duality => per_point(ctx, "duality", 20, |c, xi, _| duality_residual(c, xi)),
            Check::ConnectionDecomposition => per_point(ctx, "connection_decomposition", 20, |c, xi, _| {
                connection_decomposition_residual(c, xi)
            }),
            Check::LeviCivitaAverage => per_point(ctx, "levi_civita_average", 20, |c, xi, _| {
                levi_civita_average_residual(c, xi)
            }),
            Check::CurvatureFd => curvature_fd(ctx),
            Check::CurvaturePullback => per_point(ctx, "curvature_pullback", 5, |c, xi, _| {
                let (r, rs) = curvature_rstar(c, xi)?;
                let (rp, rsp) = curvature_pullback(c, xi)?;
                Ok(r.max_abs_diff(&rp).max(rs.max_abs_diff(&rsp)))
            }),
            Check::Averaging => averaging(ctx),
            Check::CrossCurvature => cross_curvature(ctx),
            Check::InformationCurvature => information_curvature(ctx),
            Check::Flatness => flatness(ctx),
            Check::MtwNull => mtw_null(ctx),
            Check::FourthDerivative => fourth_derivative(ctx, false),
            Check::LAlphaCorollary => fourth_derivative(ctx, true),
            Check::Canonical => canonical(ctx),
            Check::EntropicDivergence => entropic_divergence(ctx),
        };
        result.unwrap_or_else(|e| {
            self.keys()
                .iter()
                .map(|key| ctx.entry(key, "error", f64::NAN, 0.0, 0).with_note(e.to_string()))
                .collect()
        })
    }
}

/// Shared state for one run of the suite.
pub struct Ctx<'a> {
    pub sc: &'a Scenario,
    tol_scale: f64,
    seed: u64,
}

impl ReportEntry {
    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

impl<'a> Ctx<'a> {
    pub fn new(sc: &'a Scenario, tol_scale: f64) -> Self {
        Self {
            sc,
            tol_scale,
            seed: sc.config.sampling_seed(),
        }
    }

    fn chart(&self) -> Result<&'a GraphChart> {
        self.sc
            .chart
            .as_ref()
            .ok_or_else(|| GeomError::Config("check needs a chart".into()))
    }

    fn cost(&self) -> &'a dyn CostModel {
        self.sc.cost.as_ref()
    }

    fn count(&self, default: usize) -> usize {
        self.sc.config.points.count.unwrap_or(default).max(1)
    }

    fn rng(&self, salt: &str) -> ChaCha8Rng {
        item_rng(self.seed, salt, 0)
    }

    fn item_rng(&self, salt: &str, index: usize) -> ChaCha8Rng {
        item_rng(self.seed, salt, index + 1)
    }

    fn primal_points(&self, salt: &str, default: usize) -> Vec<Vec<f64>> {
        self.sc.primal_points(self.count(default), &mut self.rng(salt))
    }

    /// Default for the family, replaced by a config override, then scaled.
    fn tolerance(&self, key: &str) -> f64 {
        let spec = entry_spec(key);
        let default = match (key, self.sc.family) {
            ("fourth_derivative", Family::Quadratic) => 1e-6,
            (_, Family::Entropic) => spec.entropic,
            _ => spec.analytic,
        };
        self.sc.config.tolerances.get(key).copied().unwrap_or(default) * self.tol_scale
    }

    fn entry(&self, key: &str, item: &str, computed: f64, reference: f64, samples: usize) -> ReportEntry {
        let tolerance = self.tolerance(key);
        self.entry_with_tolerance(key, item, computed, reference, tolerance, samples)
    }

    #[allow(clippy::too_many_arguments)]
    fn entry_with_tolerance(
        &self,
        key: &str,
        item: &str,
        computed: f64,
        reference: f64,
        tolerance: f64,
        samples: usize,
    ) -> ReportEntry {
        let spec = entry_spec(key);
        let pass = computed.is_finite() && spec.comparison.judge(computed, reference, tolerance);
        ReportEntry {
            check: key.to_string(),
            anchor: spec.anchor.to_string(),
            item: item.to_string(),
            computed,
            reference,
            tolerance,
            comparison: spec.comparison,
            samples,
            pass,
            note: None,
        }
    }
}

fn random_vec(rng: &mut dyn RngCore, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Evaluates `f` over `items` in parallel; the first error in item order wins.
fn par_values<T, F>(items: &[T], f: F) -> Result<Vec<f64>>
where
    T: Sync,
    F: Fn(usize, &T) -> Result<f64> + Sync + Send,
{
    let results: Vec<Result<f64>> = items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect();
    results.into_iter().collect()
}

/// Maximum that propagates NaN.
fn nan_max(values: &[f64]) -> f64 {
    values.iter().fold(
        0.0,
        |a: f64, &b| {
            if a.is_nan() || b.is_nan() {
                f64::NAN
            } else {
                a.max(b)
            }
        },
    )
}

fn nan_min(values: &[f64]) -> f64 {
    values.iter().fold(f64::INFINITY, |a: f64, &b| {
        if a.is_nan() || b.is_nan() {
            f64::NAN
        } else {
            a.min(b)
        }
    })
}

/// Max over sampled primal points of a residual.
fn per_point<F>(ctx: &Ctx<'_>, key: &'static str, default: usize, f: F) -> Result<Vec<ReportEntry>>
where
    F: Fn(&GraphChart, &[f64], &mut ChaCha8Rng) -> Result<f64> + Sync + Send,
{
    let chart = ctx.chart()?;
    let points = ctx.primal_points(key, default);
    let values = par_values(&points, |i, xi| f(chart, xi, &mut ctx.item_rng(key, i)))?;
    Ok(vec![ctx.entry(
        key,
        "max residual",
        nan_max(&values),
        0.0,
        points.len(),
    )])
}

fn signature(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let n = ctx.sc.dim();
    let points = ctx.sc.product_points(ctx.count(50), &mut ctx.rng("signature"))?;
    let values = par_values(&points, |_, p| {
        let sig = metric_h(ctx.cost(), p)?.signature;
        Ok(if sig == (n, n) { 0.0 } else { 1.0 })
    })?;
    let bad: f64 = values.iter().sum();
    Ok(vec![ctx.entry("signature", "mismatches", bad, 0.0, points.len())])
}

fn fenchel(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let chart = ctx.chart()?;
    let count = ctx.count(50);
    let v = chart.validate(count, &mut ctx.rng("fenchel"))?;
    Ok(vec![
        ctx.entry("fenchel_gap", "min gap", v.min_fenchel_gap, 0.0, 2 * count),
        ctx.entry(
            "jacobian_condition",
            "max condition",
            v.max_jacobian_condition,
            JACOBIAN_CONDITION_LIMIT,
            count,
        ),
        ctx.entry(
            "metric_positive",
            "min eigenvalue",
            v.min_metric_eigenvalue,
            METRIC_EIGEN_FLOOR,
            count,
        ),
    ])
}

fn metric_restriction(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let n = ctx.sc.dim();
    per_point(ctx, "metric_restriction", 50, |chart, xi, rng| {
        let tangents: Vec<Vec<f64>> = (0..FRAMES).map(|_| random_vec(rng, n)).collect();
        metric_restriction_residual(chart, xi, &tangents)
    })
    .map(|mut v| {
        for e in &mut v {
            e.samples *= FRAMES;
        }
        v
    })
}

fn symmetrization(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let chart = ctx.chart()?;
    let mut rng = ctx.rng("symmetrization");
    let count = ctx.count(200);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = ctx
        .sc
        .primal_points(count, &mut rng)
        .into_iter()
        .map(|p| (p, sample_one(ctx.sc, &mut rng)))
        .collect();
    let values = par_values(&pairs, |_, (a, b)| chart.symmetrization_residual(a, b))?;
    Ok(vec![ctx.entry(
        "symmetrization",
        "max residual",
        nan_max(&values),
        0.0,
        count,
    )])
}

fn three_point(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let chart = ctx.chart()?;
    let mut rng = ctx.rng("three_point");
    let count = ctx.count(200);
    let firsts = ctx.sc.primal_points(count, &mut rng);
    let triples: Vec<[Vec<f64>; 3]> = firsts
        .into_iter()
        .map(|a| [a, sample_one(ctx.sc, &mut rng), sample_one(ctx.sc, &mut rng)])
        .collect();
    let values = par_values(&triples, |_, [a, b, c]| chart.three_point_residual(a, b, c))?;
    Ok(vec![ctx.entry(
        "three_point",
        "max residual",
        nan_max(&values),
        0.0,
        count,
    )])
}

/// A sampled point that skips the explicit list.
fn sample_one(sc: &Scenario, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut points = sc.primal_points(sc.config.points.explicit.len() + 1, rng);
    points.pop().expect("one sampled point")
}

fn curvature_fd(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let points = ctx.sc.product_points(ctx.count(5), &mut ctx.rng("curvature_fd"))?;
    let values = par_values(&points, |_, p| {
        let closed = curvature_rbar(ctx.cost(), p)?.full();
        Ok(closed.max_abs_diff(&curvature_fd_oracle(ctx.cost(), p)?))
    })?;
    Ok(vec![ctx.entry(
        "curvature_fd",
        "max |diff|",
        nan_max(&values),
        0.0,
        points.len(),
    )])
}

fn averaging(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let n = ctx.sc.dim();
    let cost = ctx.cost();
    per_point(ctx, "averaging", 20, |chart, xi, rng| {
        let rbar = curvature_rbar(cost, &product_point(chart, xi)?)?;
        let (r, rs) = curvature_rstar(chart, xi)?;
        let mut worst: f64 = 0.0;
        for _ in 0..FRAMES {
            let (x, y) = (random_vec(rng, n), random_vec(rng, n));
            worst = nan_max(&[worst, averaging_residual(chart, &rbar, &r, &rs, xi, &x, &y)?]);
        }
        Ok(worst)
    })
    .map(|mut v| {
        v[0].samples *= FRAMES;
        v
    })
}

fn constant_lambda(family: Family, scale: f64) -> f64 {
    match family {
        Family::Log { alpha } => -scale * alpha,
        _ => 0.0,
    }
}

fn cross_curvature(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let lambda = constant_lambda(ctx.sc.family, 4.0);
    let points = ctx.sc.product_points(ctx.count(20), &mut ctx.rng("cross_curvature"))?;
    let values = par_values(&points, |i, p| {
        let mut rng = ctx.item_rng("cross_curvature", i);
        Ok(cross_curvature_constancy(ctx.cost(), std::slice::from_ref(p), lambda, FRAMES, &mut rng)?.max_deviation)
    })?;
    let item = format!("lambda={lambda}");
    Ok(vec![ctx.entry(
        "cross_curvature",
        &item,
        nan_max(&values),
        0.0,
        points.len() * FRAMES,
    )])
}

fn information_curvature(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let chart = ctx.chart()?;
    let lambda = constant_lambda(ctx.sc.family, 1.0);
    let points = ctx.primal_points("information_curvature", 20);
    let reports: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .enumerate()
        .map(|(i, xi)| {
            let mut rng = ctx.item_rng("information_curvature", i);
            let r = constant_curvature_check(chart, std::slice::from_ref(xi), lambda, FRAMES, &mut rng)?;
            Ok((r.primal_deviation, r.dual_deviation))
        })
        .collect();
    let reports: Vec<(f64, f64)> = reports.into_iter().collect::<Result<_>>()?;
    let primal: Vec<f64> = reports.iter().map(|r| r.0).collect();
    let dual: Vec<f64> = reports.iter().map(|r| r.1).collect();
    let item = format!("lambda={lambda}");
    let samples = points.len() * FRAMES;
    Ok(vec![
        ctx.entry("information_curvature_primal", &item, nan_max(&primal), 0.0, samples),
        ctx.entry("information_curvature_dual", &item, nan_max(&dual), 0.0, samples),
    ])
}

fn flatness(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let chart = ctx.chart()?;
    let points = ctx.primal_points("flatness", 5);
    let triples: Vec<Result<[f64; 3]>> = points
        .par_iter()
        .map(|xi| {
            let rbar = curvature_rbar(ctx.cost(), &product_point(chart, xi)?)?;
            let (r, rs) = curvature_rstar(chart, xi)?;
            Ok([rbar.full().max_abs(), r.max_abs(), rs.max_abs()])
        })
        .collect();
    let triples: Vec<[f64; 3]> = triples.into_iter().collect::<Result<_>>()?;
    let col = |k: usize| nan_max(&triples.iter().map(|t| t[k]).collect::<Vec<_>>());
    Ok(vec![
        ctx.entry("flatness_rbar", "max |Rbar|", col(0), 0.0, points.len()),
        ctx.entry("flatness_r", "max |R|", col(1), 0.0, points.len()),
        ctx.entry("flatness_rstar", "max |R*|", col(2), 0.0, points.len()),
    ])
}

fn mtw_null(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let points = ctx.sc.product_points(ctx.count(20), &mut ctx.rng("mtw_null"))?;
    let probes: Vec<Result<(f64, f64)>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = ctx.item_rng("mtw_null", i);
            let probe = weak_regularity_probe(ctx.cost(), p, FRAMES, &mut rng)?;
            Ok((probe.min.abs().max(probe.max.abs()), probe.max_null_residual))
        })
        .collect();
    let probes: Vec<(f64, f64)> = probes.into_iter().collect::<Result<_>>()?;
    let worst = nan_max(&probes.iter().map(|p| p.0).collect::<Vec<_>>());
    let null = nan_max(&probes.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(vec![ctx
        .entry("mtw_null", "max |S|", worst, 0.0, points.len() * FRAMES)
        .with_note(format!("max |h(v, v)| over probes {null:.3e}"))])
}

/// Halves the stencil step until the `h` and `h/2` estimates differ by at most
/// a quarter of the tolerance, keeping the last estimate otherwise.
fn refined<F, T>(eval: F, tolerance: T) -> Result<FourthDerivative>
where
    F: Fn(StencilOptions) -> Result<FourthDerivative>,
    T: Fn(&FourthDerivative) -> f64,
{
    const REFINEMENTS: usize = 3;
    let mut opts = StencilOptions::default();
    let mut best = eval(opts)?;
    for _ in 0..REFINEMENTS {
        if (best.lhs_coarse - best.lhs_fine).abs() <= 0.25 * tolerance(&best) {
            break;
        }
        opts.step *= 0.5;
        match eval(opts) {
            Ok(next) => best = next,
            Err(_) => break,
        }
    }
    Ok(best)
}

/// Stencil configurations: base point and split directions, redrawn when the
/// stencil geodesics leave the chart.
fn fourth_derivative(ctx: &Ctx<'_>, corollary: bool) -> Result<Vec<ReportEntry>> {
    const ATTEMPTS: usize = 8;
    let chart = ctx.chart()?;
    let n = ctx.sc.dim();
    let key = if corollary {
        "l_alpha_corollary"
    } else {
        "fourth_derivative"
    };
    let alpha = match ctx.sc.family {
        Family::Log { alpha } => alpha,
        _ => 0.0,
    };
    let count = ctx.count(10);
    let explicit = &ctx.sc.config.points.explicit;
    let floor = ctx.tolerance(key);
    let tolerance = |fd: &FourthDerivative| {
        if corollary {
            floor
        } else {
            floor.max(1e-2 * fd.rhs.abs() * ctx.tol_scale)
        }
    };
    let results: Vec<Result<FourthDerivative>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ctx.item_rng(key, i);
            let mut last = GeomError::domain("no stencil configuration");
            for attempt in 0..ATTEMPTS {
                let xi = match explicit.get(i) {
                    Some(p) if attempt == 0 => p.clone(),
                    _ => sample_one(ctx.sc, &mut rng),
                };
                let (u, vbar) = (random_vec(&mut rng, n), random_vec(&mut rng, n));
                let out = refined(
                    |opts| {
                        if corollary {
                            l_alpha_corollary_check(chart, alpha, &xi, &u, &vbar, opts)
                        } else {
                            fourth_derivative_check(chart, &xi, &u, &vbar, opts)
                        }
                    },
                    tolerance,
                );
                match out {
                    Err(e @ GeomError::Domain(_)) => last = e,
                    other => return other,
                }
            }
            Err(last)
        })
        .collect();
    let mut entries = Vec::with_capacity(count + 1);
    let mut convergence: f64 = 0.0;
    for (i, r) in results.into_iter().enumerate() {
        let item = format!("config {i}");
        entries.push(match r {
            Ok(fd) => {
                let tol = tolerance(&fd);
                convergence = nan_max(&[convergence, (fd.lhs_coarse - fd.lhs_fine).abs() / tol]);
                ctx.entry_with_tolerance(key, &item, fd.lhs, fd.rhs, tol, 1)
                    .with_note(format!(
                        "stencil h={} coarse={:.6e} fine={:.6e}",
                        fd.step, fd.lhs_coarse, fd.lhs_fine
                    ))
            }
            Err(e) => {
                convergence = f64::NAN;
                ctx.entry(key, &item, f64::NAN, 0.0, 1).with_note(e.to_string())
            }
        });
    }
    let convergence_key = if corollary {
        "l_alpha_convergence"
    } else {
        "fourth_derivative_convergence"
    };
    entries.push(ctx.entry(convergence_key, "max |h - h/2| / tol", convergence, 0.0, count));
    Ok(entries)
}

fn canonical(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let chart = ctx.chart()?;
    let wrapped = wrap_cost_as_divergence(chart.clone());
    let mut rng = ctx.rng("canonical");
    let count = ctx.count(50);
    let tuples: Vec<[Vec<f64>; 4]> = (0..count)
        .map(|_| std::array::from_fn(|_| sample_one(ctx.sc, &mut rng)))
        .collect();
    let cross = par_values(&tuples, |_, [p, pp, p0, p0p]| {
        wrapped.cross_difference_residual(p, pp, p0, p0p)
    })?;

    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..ctx.count(5).min(5))
        .map(|_| (sample_one(ctx.sc, &mut rng), sample_one(ctx.sc, &mut rng)))
        .collect();
    let recover = par_values(&pairs, |_, (x, y)| {
        let line = straight_curve(x, y);
        let recovered = recover_cost_from_metric(&wrapped, &line, 1.0, 32)?;
        Ok((recovered - chart.c_divergence(x, y)?).abs())
    })?;

    let base = ctx.sc.primal_points(1, &mut ctx.rng("canonical_structure")).remove(0);
    let diag = DiagonalChart::new(Arc::new(ChartStructure { chart: chart.clone() }));
    let structure = ay_amari_structure_check(&diag, &base)?;
    let at = format!("at {base:.4?}");
    Ok(vec![
        ctx.entry(
            "canonical_cross_difference",
            "max residual",
            nan_max(&cross),
            0.0,
            count,
        ),
        ctx.entry("canonical_recover", "max |diff|", nan_max(&recover), 0.0, pairs.len()),
        ctx.entry("canonical_metric", &at, structure.metric, 0.0, 1),
        ctx.entry("canonical_gamma", &at, structure.gamma, 0.0, 1),
        ctx.entry("canonical_gamma_star", &at, structure.gamma_star, 0.0, 1),
    ])
}

fn simplex_sample(rng: &mut dyn RngCore, states: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..states).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

fn entropic_divergence(ctx: &Ctx<'_>) -> Result<Vec<ReportEntry>> {
    let chart = ctx.chart()?;
    let cost = ctx
        .sc
        .entropic
        .as_ref()
        .ok_or_else(|| GeomError::Config("entropic check needs an entropic cost".into()))?;
    let prob = cost.problem();
    let states = prob.states();
    let mut rng = ctx.rng("entropic_divergence");
    let count = ctx.count(100);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..count)
        .map(|_| (simplex_sample(&mut rng, states), simplex_sample(&mut rng, states)))
        .collect();
    let rows: Vec<Result<[f64; 3]>> = pairs
        .par_iter()
        .map(|(p, p2)| {
            let at = |x: &[f64]| sinkhorn_c_lambda(prob, p, &closed_form_shrinkage(prob, x)).map(|s| s.value);
            let d = at(p2)? - at(p)?;
            let (xi, xi2) = (&p[..states - 1], &p2[..states - 1]);
            let diag = chart.c_divergence(xi, xi)?.abs();
            let agreement = (chart.c_divergence(xi, xi2)? - d).abs();
            Ok([d, diag, agreement])
        })
        .collect();
    let rows: Vec<[f64; 3]> = rows.into_iter().collect::<Result<_>>()?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    Ok(vec![
        ctx.entry("entropic_nonnegative", "min D", nan_min(&col(0)), 0.0, count),
        ctx.entry("entropic_diagonal", "max |D[p:p]|", nan_max(&col(1)), 0.0, count),
        ctx.entry("entropic_chart_agreement", "max |diff|", nan_max(&col(2)), 0.0, count),
    ])
}
