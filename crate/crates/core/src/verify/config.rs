use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GeomError, Result};

/// One verification run: a cost, an optional graph chart, the checks to run
/// and how to sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Directory for report files when the command line gives none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Check names; empty means every check applicable to the cost and chart.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<String>,
    pub cost: CostSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartSpec>,
    #[serde(default)]
    pub points: PointSpec,
    /// Overrides keyed by report entry name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CostSpec {
    Quadratic { n: usize },
    Log { n: usize, alpha: f64 },
    Convex { n: usize, potential: PotentialKind },
    Divergence { n: usize, divergence: DivergenceKind },
    Entropic { lambda: f64, matrix: Vec<Vec<f64>> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    HalfSquare,
    Cosh,
    Quartic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Kl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    BrenierIdentity,
    BrenierLinear {
        matrix: Vec<Vec<f64>>,
    },
    BrenierLse,
    LogPower {
        s: f64,
        #[serde(default)]
        offset: f64,
    },
    Translation {
        slope: Vec<f64>,
    },
    EntropicShrinkage,
}

/// Point sampling. Explicit points are primal coordinates and always come first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    /// Points per check; each check has its own default when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Sampling seed; falls back to the run seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Per-coordinate `[low, high]` bounds for uniform sampling.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub explicit: Vec<Vec<f64>>,
}

/// Deliberate corruption of the chart, for exercising failure paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    #[serde(default)]
    pub psi_shift: f64,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| GeomError::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| GeomError::Config(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeomError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// SHA-256 of the canonical serialization, so formatting does not matter.
    pub fn digest(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml_string()?.as_bytes())))
    }

    pub fn dim(&self) -> usize {
        match &self.cost {
            CostSpec::Quadratic { n }
            | CostSpec::Log { n, .. }
            | CostSpec::Convex { n, .. }
            | CostSpec::Divergence { n, .. } => *n,
            CostSpec::Entropic { matrix, .. } => matrix.len().saturating_sub(1),
        }
    }

    pub fn sampling_seed(&self) -> u64 {
        self.points.seed.unwrap_or(self.seed)
    }
}

impl CostSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CostSpec::Quadratic { .. } => "quadratic",
            CostSpec::Log { .. } => "log",
            CostSpec::Convex { .. } => "convex",
            CostSpec::Divergence { .. } => "divergence",
            CostSpec::Entropic { .. } => "entropic",
        }
    }
}

impl ChartSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ChartSpec::BrenierIdentity => "brenier_identity",
            ChartSpec::BrenierLinear { .. } => "brenier_linear",
            ChartSpec::BrenierLse => "brenier_lse",
            ChartSpec::LogPower { .. } => "log_power",
            ChartSpec::Translation { .. } => "translation",
            ChartSpec::EntropicShrinkage => "entropic_shrinkage",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "log-n2"
seed = 7
checks = ["signature", "averaging"]

[cost]
kind = "log"
n = 2
alpha = 1.0

[chart]
kind = "log_power"
s = 0.3333333333333333

[points]
count = 5
box = [[0.5, 2.0], [0.5, 2.0]]
explicit = [[1.0, 1.0]]

[tolerances]
averaging = 1e-6
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.cost, CostSpec::Log { n: 2, alpha: 1.0 });
        assert_eq!(cfg.points.bounds.as_ref().unwrap().len(), 2);
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.digest().unwrap(), back.digest().unwrap());
    }

    #[test]
    fn every_kind_round_trips() {
        let costs = [
            CostSpec::Quadratic { n: 2 },
            CostSpec::Convex {
                n: 2,
                potential: PotentialKind::Quartic,
            },
            CostSpec::Divergence {
                n: 2,
                divergence: DivergenceKind::Kl,
            },
            CostSpec::Entropic {
                lambda: 0.5,
                matrix: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            },
        ];
        let charts = [
            Some(ChartSpec::BrenierIdentity),
            Some(ChartSpec::BrenierLinear {
                matrix: vec![vec![2.0, 0.0], vec![0.0, 1.0]],
            }),
            Some(ChartSpec::BrenierLse),
            Some(ChartSpec::Translation { slope: vec![0.1, 0.2] }),
            Some(ChartSpec::EntropicShrinkage),
            None,
        ];
        for cost in &costs {
            for chart in &charts {
                let cfg = RunConfig {
                    name: "x".into(),
                    seed: 1,
                    output: Some("out".into()),
                    checks: vec![],
                    cost: cost.clone(),
                    chart: chart.clone(),
                    points: PointSpec::default(),
                    tolerances: BTreeMap::from([("signature".to_string(), 0.5)]),
                    fault: Some(FaultSpec { psi_shift: 0.1 }),
                };
                let back = RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
                assert_eq!(cfg, back);
            }
        }
    }

    #[test]
    fn rejects_unknown_fields_and_kinds() {
        assert!(RunConfig::from_toml_str(&SAMPLE.replace("alpha", "beta")).is_err());
        assert!(RunConfig::from_toml_str(&SAMPLE.replace("\"log\"", "\"cubic\"")).is_err());
        assert!(RunConfig::from_toml_str(&format!("{SAMPLE}\n[extra]\nx = 1\n")).is_err());
    }

    #[test]
    fn digest_ignores_formatting() {
        let a = RunConfig::from_toml_str(SAMPLE).unwrap();
        let b = RunConfig::from_toml_str(&SAMPLE.replace("seed = 7", "seed   =   7  # comment")).unwrap();
        assert_eq!(a.digest().unwrap(), b.digest().unwrap());
        let c = RunConfig::from_toml_str(&SAMPLE.replace("seed = 7", "seed = 8")).unwrap();
        assert_ne!(a.digest().unwrap(), c.digest().unwrap());
    }
}
