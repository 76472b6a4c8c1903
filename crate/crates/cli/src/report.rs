use std::fmt::Write as _;

use bimod_core::bimodule::Check;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: &str = "bimod-report/1";

#[derive(Serialize, Clone, Debug)]
pub struct InputDigest {
    pub path: String,
    pub kind: String,
    pub sha256: String,
}

#[derive(Serialize, Clone, Debug)]
pub struct OptionsEcho {
    pub tol: f64,
    pub seed: u64,
    pub budget: Option<usize>,
}

#[derive(Serialize, Clone, Debug)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub options: OptionsEcho,
    pub result: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// `null` when timing is disabled, so that reports can be compared byte
    /// for byte.
    pub wall_time_ms: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "bimod {} ({SCHEMA})", self.command);
        for i in &self.inputs {
            let _ = writeln!(out, "input  {} [{}] sha256 {}", i.path, i.kind, i.sha256);
        }
        let _ = writeln!(out, "tol {:e}  seed {}", self.options.tol, self.options.seed);
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error: {e}");
        }
        if let Value::Object(map) = &self.result {
            for (k, v) in map {
                if let Some(s) = scalar(v) {
                    let _ = writeln!(out, "  {k:<24} {s}");
                }
            }
        }
        for c in &self.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{tag}  {:<36} {:>12.4e}  (bound {:.1e})", c.name, c.value, c.bound);
        }
        let _ = writeln!(out, "{}", if self.pass { "overall: PASS" } else { "overall: FAIL" });
        if let Some(t) = self.wall_time_ms {
            let _ = writeln!(out, "wall time {t:.1} ms");
        }
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.len() <= 8 && a.iter().all(|x| x.is_number()) => {
            Some(format!("[{}]", a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}
