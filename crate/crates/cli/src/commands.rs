use std::path::{Path, PathBuf};
use std::sync::Arc;

use otgeo::canonical::{ay_amari_divergence, ay_amari_structure_check, ChartStructure, DiagonalChart};
use otgeo::cost::{closed_form_shrinkage, sinkhorn_c_lambda};
use otgeo::dualistic::{dualistic_sample, sec_u};
use otgeo::geodesic::{
    integrate_dual_geodesic, integrate_levi_civita_geodesic, integrate_primal_geodesic, pointwise_residuals, write_csv,
};
use otgeo::numeric::{Matrix, Rank3, Rank4};
use otgeo::pseudo::{curvature_rbar, metric_h, mtw_tensor, ProductPoint, TangentPair};
use otgeo::transport::GraphChart;
use otgeo::verify::{run, RunConfig, RunOptions, Scenario};
use otgeo::GeomError;
use serde_json::{json, Value};

use crate::{builtin, Common, FlavorArg};

/// Reason for a nonzero exit.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Failed(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Failed(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Failed(m) => m,
        }
    }
}

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::Config(_)
            | GeomError::Domain(_)
            | GeomError::InvalidChart(_)
            | GeomError::InvalidDivergence(_) => Failure::Usage(e.to_string()),
            _ => Failure::Failed(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_builtin(name: &str) -> Result<RunConfig, Failure> {
    let text = builtin::lookup(name).ok_or_else(|| {
        usage(format!(
            "unknown built-in config {name:?}; available: {}",
            builtin::names()
        ))
    })?;
    Ok(RunConfig::from_toml_str(text)?)
}

fn configs(common: &Common) -> Result<Vec<RunConfig>, Failure> {
    match (&common.config, common.builtin.as_deref()) {
        (Some(_), Some(_)) => Err(usage("--config and --builtin are mutually exclusive")),
        (Some(path), None) => Ok(vec![RunConfig::from_path(path)?]),
        (None, Some("all")) => builtin::BUILTIN.iter().map(|(name, _)| parse_builtin(name)).collect(),
        (None, Some(name)) => Ok(vec![parse_builtin(name)?]),
        (None, None) => Err(usage("a config is required: pass --config PATH or --builtin NAME")),
    }
}

fn single_scenario(common: &Common) -> Result<Scenario, Failure> {
    let mut all = configs(common)?;
    if all.len() != 1 {
        return Err(usage("this command needs a single config"));
    }
    Ok(Scenario::build(&all.remove(0))?)
}

fn output_dir(common: &Common, config: &RunConfig) -> Option<PathBuf> {
    common.out.clone().or_else(|| config.output.as_ref().map(PathBuf::from))
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| usage(format!("cannot write {}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(name), text).map_err(io)
}

fn emit_json(common: &Common, config: &RunConfig, name: &str, value: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize") + "\n";
    print!("{text}");
    if let Some(dir) = output_dir(common, config) {
        write_file(&dir, name, &text)?;
    }
    Ok(())
}

pub fn verify(common: &Common) -> Outcome {
    let all = configs(common)?;
    let opts = RunOptions {
        tol_scale: common.tol_scale,
        jobs: common.jobs,
        seed: common.seed,
    };
    let several = all.len() > 1;
    let mut failed = Vec::new();
    for config in &all {
        let report = run(config, &opts)?;
        print!("{}", report.to_text());
        if several {
            println!();
        }
        if let Some(dir) = output_dir(common, config) {
            let dir = if several { dir.join(&config.name) } else { dir };
            report.write_to(&dir)?;
        }
        eprintln!(
            "{}: {} passed, {} failed",
            config.name, report.summary.passed, report.summary.failed
        );
        if !report.all_pass() {
            failed.push(config.name.clone());
        }
    }
    if several {
        eprintln!("{} of {} configs passed", all.len() - failed.len(), all.len());
    }
    Ok(failed.is_empty())
}

fn rows(m: &Matrix) -> Value {
    json!(m.to_rows())
}

fn rank3(t: &Rank3) -> Value {
    let n = t.dim();
    json!((0..n)
        .map(|i| (0..n)
            .map(|j| (0..n).map(|k| t[(i, j, k)]).collect::<Vec<_>>())
            .collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn rank4(t: &Rank4) -> Value {
    let n = t.dim();
    json!((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    (0..n)
                        .map(|k| (0..n).map(|l| t[(i, j, k, l)]).collect::<Vec<_>>())
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>())
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

fn product_record(sc: &Scenario, at: &ProductPoint) -> Result<Value, Failure> {
    let n = sc.dim();
    let h = metric_h(sc.cost.as_ref(), at)?;
    let rbar = curvature_rbar(sc.cost.as_ref(), at)?;
    let e1 = unit(n, 0);
    let mut record = json!({
        "config": sc.config.name,
        "cost": sc.cost.label(),
        "xi": at.xi,
        "eta": at.eta,
        "h_block": rows(&h.block),
        "signature": [h.signature.0, h.signature.1],
        "cross_curvature": rank4(&rbar.canonical),
        "mtw_11": mtw_tensor(&rbar, &e1, &e1),
    });
    if n >= 2 {
        let x = TangentPair::primal(&e1);
        let y = TangentPair::dual(&unit(n, 1));
        record["cross_sec_u_1_2bar"] = json!(otgeo::pseudo::unnormalized_sec_bar(&rbar, &x, &y));
    }
    Ok(record)
}

fn chart_record(sc: &Scenario, chart: &GraphChart, xi: &[f64]) -> Result<Value, Failure> {
    let n = sc.dim();
    let point = chart.point(xi)?;
    let mut record = product_record(sc, &point.product())?;
    let s = dualistic_sample(chart, xi)?;
    record["chart"] = json!(chart.label());
    record["g"] = rows(&s.g_primal);
    record["g_dual"] = rows(&s.g_dual);
    record["gamma"] = rank3(&s.gamma_primal);
    record["gamma_star_dual"] = rank3(&s.gamma_dual_star);
    if n >= 2 {
        let (e1, e2) = (unit(n, 0), unit(n, 1));
        record["sec_u_12"] = json!(sec_u(&s.r_primal, &e1, &e2));
        record["sec_star_u_12"] = json!(sec_u(&s.r_dual_star, &e1, &e2));
    }
    record["riemann"] = rank4(&s.r_primal);
    record["riemann_star_dual"] = rank4(&s.r_dual_star);
    Ok(record)
}

pub fn eval(common: &Common, point: &[f64], dual: Option<&[f64]>) -> Outcome {
    let sc = single_scenario(common)?;
    let n = sc.dim();
    if point.len() != n || dual.is_some_and(|d| d.len() != n) {
        return Err(usage(format!("points need {n} coordinates")));
    }
    let record = match (dual, &sc.chart) {
        (Some(eta), _) => {
            let at = ProductPoint::new(point.to_vec(), eta.to_vec());
            if !sc.cost.in_domain(&at.xi, &at.eta) {
                return Err(usage(format!("({point:?}, {eta:?}) lies outside the cost domain")));
            }
            product_record(&sc, &at)?
        }
        (None, Some(chart)) => {
            if !chart.map().contains(point) {
                return Err(usage(format!("{point:?} lies outside the chart domain")));
            }
            chart_record(&sc, chart, point)?
        }
        (None, None) => return Err(usage("this config has no chart; pass --dual for a product point")),
    };
    emit_json(common, &sc.config, "eval.json", &record)?;
    Ok(true)
}

pub fn geodesic(common: &Common, flavor: FlavorArg, x0: &[f64], v0: &[f64], t_span: f64, steps: usize) -> Outcome {
    let sc = single_scenario(common)?;
    let n = sc.dim();
    let chart = || {
        sc.chart
            .as_ref()
            .ok_or_else(|| usage("primal and dual geodesics need a chart"))
    };
    let expected = if flavor == FlavorArg::LeviCivita { 2 * n } else { n };
    if x0.len() != expected || v0.len() != expected {
        return Err(usage(format!("x0 and v0 need {expected} coordinates")));
    }
    let (path, residuals) = match flavor {
        FlavorArg::Primal => {
            let path = integrate_primal_geodesic(chart()?, x0, v0, t_span, steps)?;
            let r = pointwise_residuals(&path, Some(chart()?), None)?;
            (path, r)
        }
        FlavorArg::Dual => {
            let path = integrate_dual_geodesic(chart()?, x0, v0, t_span, steps)?;
            let r = pointwise_residuals(&path, Some(chart()?), None)?;
            (path, r)
        }
        FlavorArg::LeviCivita => {
            let at = ProductPoint::from_stacked(x0);
            let v = TangentPair::new(v0[..n].to_vec(), v0[n..].to_vec());
            if !sc.cost.in_domain(&at.xi, &at.eta) {
                return Err(usage(format!("{x0:?} lies outside the cost domain")));
            }
            let path = integrate_levi_civita_geodesic(sc.cost.as_ref(), &at, &v, t_span, steps)?;
            let r = pointwise_residuals(&path, None, Some(sc.cost.as_ref()))?;
            (path, r)
        }
    };
    let mut buf = Vec::new();
    write_csv(&mut buf, &path, &residuals).expect("writing to memory");
    let text = String::from_utf8(buf).expect("CSV is UTF-8");
    match output_dir(common, &sc.config) {
        Some(dir) => write_file(&dir, "geodesic.csv", &text)?,
        None => print!("{text}"),
    }
    if let Some(t) = path.exited_at {
        eprintln!("geodesic left the domain after t = {t}");
    }
    Ok(path.completed())
}

pub fn sinkhorn(common: &Common, p: &[f64], q: &[f64], p_prime: Option<&[f64]>, max_iters: Option<usize>) -> Outcome {
    let sc = single_scenario(common)?;
    let cost = sc
        .entropic
        .as_ref()
        .ok_or_else(|| usage("sinkhorn needs an entropic cost"))?;
    let mut prob = cost.problem().clone();
    if let Some(m) = max_iters {
        prob.max_iters = m;
    }
    let sol = sinkhorn_c_lambda(&prob, p, q)?;
    let shrunk = closed_form_shrinkage(&prob, p);
    let mut record = json!({
        "config": sc.config.name,
        "lambda": prob.lambda(),
        "p": p,
        "q_prime": q,
        "c_lambda": sol.value,
        "coupling": rows(&sol.coupling.matrix),
        "iterations": sol.iterations,
        "residual": sol.residual,
        "shrinkage_p": shrunk,
    });
    if let Some(p2) = p_prime {
        let base = sinkhorn_c_lambda(&prob, p, &shrunk)?.value;
        let shrunk2 = closed_form_shrinkage(&prob, p2);
        let moved = sinkhorn_c_lambda(&prob, p, &shrunk2)?.value;
        record["p_prime"] = json!(p2);
        record["shrinkage_p_prime"] = json!(shrunk2);
        record["d_lambda"] = json!(moved - base);
    }
    emit_json(common, &sc.config, "sinkhorn.json", &record)?;
    Ok(true)
}

pub fn canonical(common: &Common, p: &[f64], q: &[f64], radius: f64, structure: bool) -> Outcome {
    let sc = single_scenario(common)?;
    let chart = sc
        .chart
        .as_ref()
        .ok_or_else(|| usage("the canonical divergence needs a chart"))?;
    let n = sc.dim();
    if p.len() != n || q.len() != n {
        return Err(usage(format!("points need {n} coordinates")));
    }
    for x in [p, q] {
        if !chart.map().contains(x) {
            return Err(usage(format!("{x:?} lies outside the chart domain")));
        }
    }
    if !(radius > 0.0) {
        return Err(usage("radius must be positive"));
    }
    let diag = DiagonalChart::new(Arc::new(ChartStructure { chart: chart.clone() })).with_radius(radius);
    let mut record = json!({
        "config": sc.config.name,
        "chart": chart.label(),
        "p": p,
        "q": q,
        "canonical_divergence": ay_amari_divergence(&diag, p, q)?,
        "c_divergence": chart.c_divergence(p, q)?,
    });
    if structure {
        let s = ay_amari_structure_check(&diag, p)?;
        record["structure"] = json!({
            "metric_deviation": s.metric,
            "gamma_deviation": s.gamma,
            "gamma_star_deviation": s.gamma_star,
            "recovered_metric": rows(&s.recovered_metric),
        });
    }
    emit_json(common, &sc.config, "canonical.json", &record)?;
    Ok(true)
}
