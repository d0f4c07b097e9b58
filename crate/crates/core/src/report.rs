//! Run reports: one JSON document per CLI invocation plus a plain-text summary
//! that shows the same verdicts.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::io::{to_canonical_json, SolutionSpaceDocument};
use crate::triple::{ConstraintReport, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub config: BTreeMap<String, Value>,
    pub overall_pass: bool,
    pub reports: BTreeMap<String, ConstraintReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_space: Option<SolutionSpaceDocument>,
    /// Wall-clock seconds; omitted unless requested so output stays reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_seconds: Option<f64>,
}

impl RunReport {
    pub fn new(command: Vec<String>) -> Self {
        Self {
            command,
            config: BTreeMap::new(),
            overall_pass: true,
            reports: BTreeMap::new(),
            solution_space: None,
            timing_seconds: None,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.to_string(), value.into());
    }

    pub fn add_report(&mut self, name: &str, report: ConstraintReport) {
        self.overall_pass &= report.overall_pass;
        self.reports.insert(name.to_string(), report);
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command: {}", self.command.join(" "));
        for (k, v) in &self.config {
            let _ = writeln!(out, "  {k} = {v}");
        }
        for (name, report) in &self.reports {
            let _ = writeln!(out, "[{name}]");
            render_report(&mut out, report, "  ");
        }
        if let Some(space) = &self.solution_space {
            let _ = writeln!(
                out,
                "linear space dimension: {}\nsolutions: {}\nproduct-only candidates: {}",
                space.linear_basis.len(),
                space.solutions.len(),
                space.product_only.len()
            );
            for (i, s) in space.solutions.iter().enumerate() {
                let partner = s.sign_partner.map_or("-".to_string(), |p| p.to_string());
                let _ = writeln!(
                    out,
                    "  #{i}: trace={:.6} |{{D,T}}|={:.3e} local_dim={} sign_partner={partner} verdict={}",
                    (s.trace * 1e6).round() / 1e6 + 0.0,
                    s.dirac_anticommutator,
                    s.local_dimension,
                    if s.report.overall_pass { "PASS" } else { "FAIL" }
                );
            }
        }
        if let Some(t) = self.timing_seconds {
            let _ = writeln!(out, "time: {t:.3} s");
        }
        let _ = writeln!(out, "overall: {}", if self.overall_pass { "PASS" } else { "FAIL" });
        out
    }
}

fn verdict_tag(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::NotApplicable => "N/A ",
    }
}

pub fn render_report(out: &mut String, report: &ConstraintReport, indent: &str) {
    for e in &report.entries {
        let residual = e.residual.map_or("-".to_string(), |r| format!("{r:.3e}"));
        let _ = write!(
            out,
            "{indent}{} {} residual={residual} threshold={:.1e}",
            verdict_tag(e.verdict),
            e.name,
            e.threshold
        );
        if let Some(note) = &e.note {
            let _ = write!(out, " ({note})");
        }
        out.push('\n');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_mentions_every_entry_of_the_json() {
        let mut r = ConstraintReport::new();
        r.check("dirac_hermitian", 0.5, 1e-8);
        r.check("order_zero", 0.0, 1e-8);
        r.not_applicable("first_order", 1e-8, "no grading");
        let mut run = RunReport::new(vec!["verify".into(), "x.json".into()]);
        run.set("tol", 1e-8);
        run.add_report("axioms", r);
        assert!(!run.overall_pass);
        let text = run.to_text();
        let json: Value = serde_json::from_str(&run.to_json()).unwrap();
        for e in json["reports"]["axioms"]["entries"].as_array().unwrap() {
            let name = e["name"].as_str().unwrap();
            let line = text.lines().find(|l| l.contains(name)).unwrap();
            let verdict = e["verdict"].as_str().unwrap();
            let tag = match verdict {
                "pass" => "PASS",
                "fail" => "FAIL",
                _ => "N/A",
            };
            assert!(line.contains(tag), "{line} vs {verdict}");
        }
        assert!(text.ends_with("overall: FAIL\n"));
        assert!(json.get("timing_seconds").is_none());
    }
}
