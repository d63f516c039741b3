use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

/// How `computed` is judged against `reference` and `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|computed − reference| ≤ tolerance`.
    AbsDiff,
    /// `computed ≥ reference − tolerance`.
    AtLeast,
    /// `computed ≤ reference + tolerance`.
    AtMost,
}

impl Comparison {
    pub fn judge(self, computed: f64, reference: f64, tolerance: f64) -> bool {
        match self {
            Comparison::AbsDiff => (computed - reference).abs() <= tolerance,
            Comparison::AtLeast => computed >= reference - tolerance,
            Comparison::AtMost => computed <= reference + tolerance,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Comparison::AbsDiff => "|c-r|<=tol",
            Comparison::AtLeast => "c>=r-tol",
            Comparison::AtMost => "c<=r+tol",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub check: String,
    /// Name of the property being verified.
    pub anchor: String,
    /// Which sample or aggregate the entry covers.
    pub item: String,
    pub computed: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub samples: usize,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_name: String,
    pub config_sha256: String,
    pub seed: u64,
    pub tol_scale: f64,
    pub cost: String,
    pub chart: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub provenance: Provenance,
    pub summary: Summary,
    pub entries: Vec<ReportEntry>,
}

impl VerificationReport {
    pub fn new(provenance: Provenance, entries: Vec<ReportEntry>) -> Self {
        let passed = entries.iter().filter(|e| e.pass).count();
        let summary = Summary {
            total: entries.len(),
            passed,
            failed: entries.len() - passed,
        };
        Self {
            provenance,
            summary,
            entries,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| GeomError::Config(e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let p = &self.provenance;
        let mut out = String::new();
        let _ = writeln!(out, "config  {} (sha256 {})", p.config_name, p.config_sha256);
        let _ = writeln!(out, "cost    {}", p.cost);
        if let Some(chart) = &p.chart {
            let _ = writeln!(out, "chart   {chart}");
        }
        let _ = writeln!(out, "seed    {}  tol-scale {}", p.seed, p.tol_scale);
        let _ = writeln!(out);
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{} {:<28} {:<14} computed={:<13.6e} reference={:<13.6e} tol={:<10.3e} {:<11} n={:<4} {}",
                if e.pass { "PASS" } else { "FAIL" },
                e.check,
                e.item,
                e.computed,
                e.reference,
                e.tolerance,
                e.comparison.symbol(),
                e.samples,
                e.anchor
            );
            if let Some(note) = &e.note {
                let _ = writeln!(out, "     note: {note}");
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{} passed, {} failed, {} total",
            self.summary.passed, self.summary.failed, self.summary.total
        );
        out
    }

    /// Writes `report.txt` and `report.json` into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| GeomError::Config(format!("cannot write report to {}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        std::fs::write(dir.join("report.txt"), self.to_text()).map_err(io)?;
        std::fs::write(dir.join("report.json"), self.to_json()? + "\n").map_err(io)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(pass: bool) -> ReportEntry {
        ReportEntry {
            check: "signature".into(),
            anchor: "split signature".into(),
            item: "max".into(),
            computed: f64::NAN,
            reference: 0.0,
            tolerance: 0.0,
            comparison: Comparison::AbsDiff,
            samples: 1,
            pass,
            note: Some("boom".into()),
        }
    }

    #[test]
    fn comparisons() {
        assert!(Comparison::AbsDiff.judge(1.0, 1.05, 0.1));
        assert!(!Comparison::AbsDiff.judge(f64::NAN, 0.0, 1.0));
        assert!(Comparison::AtLeast.judge(-1e-12, 0.0, 1e-9));
        assert!(!Comparison::AtLeast.judge(-1e-3, 0.0, 1e-9));
        assert!(Comparison::AtMost.judge(5.0, 10.0, 0.0));
        assert!(!Comparison::AtMost.judge(f64::NAN, 10.0, 0.0));
    }

    #[test]
    fn summary_and_rendering() {
        let prov = Provenance {
            config_name: "t".into(),
            config_sha256: "00".into(),
            seed: 1,
            tol_scale: 1.0,
            cost: "c".into(),
            chart: None,
        };
        let r = VerificationReport::new(prov, vec![entry(true), entry(false)]);
        assert_eq!(
            r.summary,
            Summary {
                total: 2,
                passed: 1,
                failed: 1
            }
        );
        assert!(!r.all_pass());
        assert!(r.to_text().contains("FAIL signature"));
        let json = r.to_json().unwrap();
        assert!(json.contains("\"computed\": null"));
    }
}
