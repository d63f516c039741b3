//! Config-driven verification suite: builds a cost and graph chart from a
//! [`RunConfig`], runs the registered checks over sampled points in a thread
//! pool and assembles an ordered [`VerificationReport`].

mod checks;
mod config;
mod report;

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use checks::{Check, ENTRY_KEYS};
pub use config::{ChartSpec, CostSpec, DivergenceKind, FaultSpec, PointSpec, PotentialKind, RunConfig};
pub use report::{Comparison, Provenance, ReportEntry, Summary, VerificationReport};

use crate::cost::{
    kl_divergence_cost, ConvexCost, ConvexPotential, CoshSum, CostModel, EntropicCost, EntropicProblem, HalfSquare,
    QuarticPotential,
};
use crate::error::{GeomError, Result};
use crate::numeric::Matrix;
use crate::pseudo::ProductPoint;
use crate::transport::{BrenierChart, BrenierGenerator, EntropicChart, GraphChart, LogChart, TranslationChart};

/// Cost families with family-specific checks and tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Quadratic,
    Log { alpha: f64 },
    Convex,
    Divergence,
    Entropic,
}

/// A cost, its optional graph chart and the sampling region, ready for checks.
pub struct Scenario {
    pub config: RunConfig,
    pub family: Family,
    pub cost: Arc<dyn CostModel>,
    pub chart: Option<GraphChart>,
    pub entropic: Option<Arc<EntropicCost>>,
}

fn config_err(msg: impl Into<String>) -> GeomError {
    GeomError::Config(msg.into())
}

fn as_config_error(e: GeomError) -> GeomError {
    match e {
        GeomError::Config(_) => e,
        other => GeomError::Config(other.to_string()),
    }
}

fn square(rows: &[Vec<f64>], n: usize, what: &str) -> Result<Matrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(config_err(format!("{what} must be {n} x {n}")));
    }
    Ok(Matrix::from_rows(rows))
}

impl Scenario {
    pub fn build(config: &RunConfig) -> Result<Self> {
        Self::build_inner(config).map_err(as_config_error)
    }

    fn build_inner(config: &RunConfig) -> Result<Self> {
        let n = config.dim();
        if n == 0 {
            return Err(config_err("dimension must be positive"));
        }
        let mut entropic = None;
        let chart_kind = config.chart.as_ref().map(ChartSpec::kind);
        let mismatch = || {
            config_err(format!(
                "chart kind {} does not fit cost kind {}",
                chart_kind.unwrap_or("none"),
                config.cost.kind()
            ))
        };
        let (family, cost, map): (Family, Arc<dyn CostModel>, Option<Arc<dyn crate::transport::ChartMap>>) =
            match (&config.cost, &config.chart) {
                (CostSpec::Quadratic { .. }, chart) => {
                    let generator = match chart {
                        None => None,
                        Some(ChartSpec::BrenierIdentity) => Some(BrenierGenerator::Identity),
                        Some(ChartSpec::BrenierLinear { matrix }) => {
                            Some(BrenierGenerator::Linear(square(matrix, n, "brenier matrix")?))
                        }
                        Some(ChartSpec::BrenierLse) => Some(BrenierGenerator::AnchoredLogSumExp),
                        Some(_) => return Err(mismatch()),
                    };
                    let map = match generator {
                        Some(g) => Some(BrenierChart::new(n, g)?),
                        None => None,
                    };
                    let cost = crate::cost::QuadraticCost::new(n);
                    (Family::Quadratic, Arc::new(cost), map.map(|m| Arc::new(m) as _))
                }
                (CostSpec::Log { alpha, .. }, chart) => {
                    let cost = crate::cost::LogCost::new(n, *alpha)?;
                    let map = match chart {
                        None => None,
                        Some(ChartSpec::LogPower { s, offset }) => {
                            Some(Arc::new(LogChart::new(n, *alpha, *s, *offset)?) as _)
                        }
                        Some(_) => return Err(mismatch()),
                    };
                    (Family::Log { alpha: *alpha }, Arc::new(cost), map)
                }
                (CostSpec::Convex { potential, .. }, chart) => {
                    let psi: Arc<dyn ConvexPotential> = match potential {
                        PotentialKind::HalfSquare => Arc::new(HalfSquare),
                        PotentialKind::Cosh => Arc::new(CoshSum),
                        PotentialKind::Quartic => Arc::new(QuarticPotential),
                    };
                    let cost = Arc::new(ConvexCost::new(n, psi));
                    let map = match chart {
                        None => None,
                        Some(ChartSpec::Translation { slope }) => {
                            if slope.len() != n {
                                return Err(config_err(format!("translation slope must have {n} entries")));
                            }
                            Some(Arc::new(TranslationChart::new(cost.clone(), slope.clone())?) as _)
                        }
                        Some(_) => return Err(mismatch()),
                    };
                    (Family::Convex, cost, map)
                }
                (CostSpec::Divergence { divergence, .. }, chart) => {
                    if chart.is_some() {
                        return Err(mismatch());
                    }
                    let cost = match divergence {
                        DivergenceKind::Kl => kl_divergence_cost(n)?,
                    };
                    (Family::Divergence, Arc::new(cost), None)
                }
                (CostSpec::Entropic { lambda, matrix }, chart) => {
                    let m = square(matrix, n + 1, "entropic cost matrix")?;
                    let cost = Arc::new(EntropicCost::new(EntropicProblem::new(m, *lambda)?));
                    let map = match chart {
                        None => None,
                        Some(ChartSpec::EntropicShrinkage) => Some(Arc::new(EntropicChart::new(cost.clone())?) as _),
                        Some(_) => return Err(mismatch()),
                    };
                    entropic = Some(cost.clone());
                    (Family::Entropic, cost, map)
                }
            };
        let chart = match map {
            Some(map) => {
                let mut chart = GraphChart::new(cost.clone(), map)?;
                if let Some(fault) = &config.fault {
                    chart = chart.with_psi_shift(fault.psi_shift);
                }
                Some(chart)
            }
            None => {
                if config.fault.is_some() {
                    return Err(config_err("a fault needs a chart to corrupt"));
                }
                None
            }
        };
        let scenario = Self {
            config: config.clone(),
            family,
            cost,
            chart,
            entropic,
        };
        scenario.validate_points()?;
        for key in config.tolerances.keys() {
            if !ENTRY_KEYS.contains(&key.as_str()) {
                return Err(config_err(format!("unknown tolerance key {key:?}")));
            }
        }
        for (key, value) in &config.tolerances {
            if !(value.is_finite() && *value >= 0.0) {
                return Err(config_err(format!("tolerance {key} must be finite and nonnegative")));
            }
        }
        scenario.selected_checks()?;
        Ok(scenario)
    }

    pub fn dim(&self) -> usize {
        self.cost.dim()
    }

    fn contains(&self, p: &[f64]) -> bool {
        match &self.chart {
            Some(chart) => chart.map().contains(p),
            None => self.cost.in_domain(p, p),
        }
    }

    fn validate_points(&self) -> Result<()> {
        let n = self.dim();
        let spec = &self.config.points;
        if let Some(bounds) = &spec.bounds {
            if bounds.len() != n {
                return Err(config_err(format!("sampling box needs {n} intervals")));
            }
            if bounds
                .iter()
                .any(|[lo, hi]| !(lo < hi && lo.is_finite() && hi.is_finite()))
            {
                return Err(config_err("sampling box intervals must satisfy low < high"));
            }
            if n > 16 {
                return Err(config_err("sampling boxes are limited to 16 dimensions"));
            }
            for mask in 0..(1usize << n) {
                let corner: Vec<f64> = (0..n).map(|i| bounds[i][(mask >> i) & 1]).collect();
                if !self.contains(&corner) {
                    return Err(config_err(format!(
                        "sampling box corner {corner:?} lies outside the domain"
                    )));
                }
            }
        }
        for p in &spec.explicit {
            if p.len() != n || !self.contains(p) {
                return Err(config_err(format!("explicit point {p:?} lies outside the domain")));
            }
        }
        Ok(())
    }

    /// Requested checks, or every applicable one. Inapplicable requests are errors.
    pub fn selected_checks(&self) -> Result<Vec<Check>> {
        if self.config.checks.is_empty() {
            return Ok(Check::ALL.iter().copied().filter(|c| c.applies_to(self)).collect());
        }
        let mut out = Vec::new();
        for name in &self.config.checks {
            let check = Check::from_name(name).ok_or_else(|| config_err(format!("unknown check {name:?}")))?;
            if !check.applies_to(self) {
                return Err(config_err(format!(
                    "check {name} does not apply to cost {} with chart {}",
                    self.config.cost.kind(),
                    self.config.chart.as_ref().map_or("none", ChartSpec::kind)
                )));
            }
            if !out.contains(&check) {
                out.push(check);
            }
        }
        Ok(out)
    }

    fn sample_primal(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        if let Some(bounds) = &self.config.points.bounds {
            return bounds.iter().map(|[lo, hi]| rng.random_range(*lo..*hi)).collect();
        }
        match &self.chart {
            Some(chart) => chart.sample(rng),
            None => self.cost.sample_point(rng).0,
        }
    }

    /// Explicit points followed by samples, `count` in total.
    pub fn primal_points(&self, count: usize, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.config.points.explicit.iter().take(count).cloned().collect();
        while out.len() < count {
            out.push(self.sample_primal(rng));
        }
        out
    }

    /// Points of `M × M′`. With a chart the dual part is the image of an
    /// independent primal sample; explicit points pair with their own image.
    pub fn product_points(&self, count: usize, rng: &mut dyn RngCore) -> Result<Vec<ProductPoint>> {
        let mut out = Vec::with_capacity(count);
        for p in self.config.points.explicit.iter().take(count) {
            let q = match &self.chart {
                Some(chart) => chart.forward(p)?,
                None => p.clone(),
            };
            out.push(ProductPoint::new(p.clone(), q));
        }
        while out.len() < count {
            let point = match (&self.chart, &self.config.points.bounds) {
                (Some(chart), _) => {
                    let p = self.sample_primal(rng);
                    let q = chart.forward(&self.sample_primal(rng))?;
                    ProductPoint::new(p, q)
                }
                (None, Some(_)) => ProductPoint::new(self.sample_primal(rng), self.sample_primal(rng)),
                (None, None) => {
                    let (p, q) = self.cost.sample_point(rng);
                    ProductPoint::new(p, q)
                }
            };
            out.push(point);
        }
        Ok(out)
    }
}

/// Overrides applied on top of a config.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub tol_scale: f64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol_scale: 1.0,
            jobs: None,
            seed: None,
        }
    }
}

/// Runs every selected check and assembles the report in registry order.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<VerificationReport> {
    if !(opts.tol_scale.is_finite() && opts.tol_scale > 0.0) {
        return Err(config_err("tolerance scale must be positive"));
    }
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
        config.points.seed = None;
    }
    let scenario = Scenario::build(&config)?;
    let selected = scenario.selected_checks()?;
    let ctx = checks::Ctx::new(&scenario, opts.tol_scale);
    let body = || selected.iter().flat_map(|c| c.run(&ctx)).collect::<Vec<_>>();
    let entries = match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| config_err(e.to_string()))?
            .install(body),
        None => body(),
    };
    let provenance = Provenance {
        config_name: config.name.clone(),
        config_sha256: config.digest()?,
        seed: config.sampling_seed(),
        tol_scale: opts.tol_scale,
        cost: scenario.cost.label(),
        chart: scenario.chart.as_ref().map(|c| c.label().to_string()),
    };
    Ok(VerificationReport::new(provenance, entries))
}

pub(crate) fn item_rng(seed: u64, salt: &str, index: usize) -> ChaCha8Rng {
    // FNV-1a of the salt.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in salt.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h);
    rng.set_stream(index as u64);
    rng
}
