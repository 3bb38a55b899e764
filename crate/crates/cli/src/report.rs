//! Run reports: a machine-parseable record of what ran, with which seeds,
//! shards, budgets and tolerances, and what came out. Everything except
//! the wall time is reproducible, so two runs with identical inputs must
//! agree byte-for-byte on [`RunReport::reproducible_json`].

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    /// Echo of the invocation (subcommand and arguments, `argv[0]` dropped).
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    pub seed: u64,
    pub shards: usize,
    pub budget: u64,
    /// Every tolerance the run actually used.
    pub tolerances: BTreeMap<String, f64>,
    pub results: serde_json::Value,
    pub wall_ms: u128,
}

impl RunReport {
    pub fn new(command: Vec<String>) -> Self {
        RunReport {
            tool: "affdim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command,
            config_digest: None,
            seed: 0,
            shards: 1,
            budget: 0,
            tolerances: BTreeMap::new(),
            results: serde_json::Value::Null,
            wall_ms: 0,
        }
    }

    /// The report with the timing stripped: the part that must be bitwise
    /// stable across reruns with identical seed/shards/budget.
    pub fn reproducible_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serialises");
        if let Some(map) = v.as_object_mut() {
            map.remove("wall_ms");
        }
        v
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Plain aligned-text rendering of the same data.
    pub fn table_string(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.tool, self.version);
        let _ = writeln!(out, "command    {}", self.command.join(" "));
        if let Some(d) = &self.config_digest {
            let _ = writeln!(out, "input      sha256:{d}");
        }
        let _ = writeln!(
            out,
            "run        seed={} shards={} budget={}",
            self.seed, self.shards, self.budget
        );
        if !self.tolerances.is_empty() {
            let tols: Vec<String> = self
                .tolerances
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let _ = writeln!(out, "tolerances {}", tols.join(" "));
        }
        let _ = writeln!(out, "results");
        format_value(&mut out, &self.results, 1);
        let _ = writeln!(out, "wall       {} ms", self.wall_ms);
        out
    }
}

fn format_value(out: &mut String, v: &serde_json::Value, indent: usize) {
    use std::fmt::Write;
    let pad = "  ".repeat(indent);
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map {
                match val {
                    serde_json::Value::Object(_) | serde_json::Value::Array(_) => {
                        let _ = writeln!(out, "{pad}{k}");
                        format_value(out, val, indent + 1);
                    }
                    _ => {
                        let _ = writeln!(out, "{pad}{k:24} {val}");
                    }
                }
            }
        }
        serde_json::Value::Array(items) => {
            if items.iter().all(|x| {
                !matches!(
                    x,
                    serde_json::Value::Object(_) | serde_json::Value::Array(_)
                )
            }) {
                let line: Vec<String> = items.iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "{pad}[{}]", line.join(", "));
            } else {
                for (i, item) in items.iter().enumerate() {
                    let _ = writeln!(out, "{pad}- [{i}]");
                    format_value(out, item, indent + 1);
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{other}");
        }
    }
}
