use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::settings::Settings;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs_digest: String,
    pub values: Value,
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
pub fn digest(inputs: &Value) -> String {
    let h = Sha256::digest(inputs.to_string().as_bytes());
    h[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl CheckRecord {
    /// A record whose value is compared as `value ≤ tol`.
    pub fn bounded(name: impl Into<String>, inputs: Value, value: f64, tol: f64, extra: Value) -> Self {
        let mut values = serde_json::json!({ "value": value });
        if let (Value::Object(m), Value::Object(e)) = (&mut values, extra) {
            m.extend(e);
        }
        CheckRecord {
            name: name.into(),
            inputs_digest: digest(&inputs),
            values,
            tolerance: Some(tol),
            pass: value <= tol,
            error: None,
        }
    }

    pub fn failed(name: impl Into<String>, inputs: Value, error: impl ToString) -> Self {
        CheckRecord {
            name: name.into(),
            inputs_digest: digest(&inputs),
            values: Value::Null,
            tolerance: None,
            pass: false,
            error: Some(error.to_string()),
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Line<'a> {
    Config {
        command: &'a str,
        settings: &'a Settings,
    },
    Check(&'a CheckRecord),
    Summary {
        checks: usize,
        passed: usize,
        failed: usize,
        timestamp: Timestamp,
    },
}

/// The only part of a report that changes between identical runs.
#[derive(Serialize)]
struct Timestamp {
    unix_ms: u128,
    elapsed_ms: u128,
}

pub struct RunReport {
    pub command: String,
    pub settings: Settings,
    pub checks: Vec<CheckRecord>,
}

impl RunReport {
    pub fn new(command: String, settings: Settings, mut checks: Vec<CheckRecord>) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        RunReport {
            command,
            settings,
            checks,
        }
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.pass).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.checks.len()
    }

    pub fn write_jsonl<W: Write>(&self, w: &mut W, elapsed_ms: u128) -> std::io::Result<()> {
        let mut emit = |line: &Line| -> std::io::Result<()> {
            serde_json::to_writer(&mut *w, line)?;
            w.write_all(b"\n")
        };
        emit(&Line::Config {
            command: &self.command,
            settings: &self.settings,
        })?;
        for c in &self.checks {
            emit(&Line::Check(c))?;
        }
        let unix_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        emit(&Line::Summary {
            checks: self.checks.len(),
            passed: self.passed(),
            failed: self.checks.len() - self.passed(),
            timestamp: Timestamp { unix_ms, elapsed_ms },
        })
    }

    pub fn human_summary(&self) -> String {
        let mut s = String::new();
        for c in self.checks.iter().filter(|c| !c.pass) {
            s.push_str(&format!("FAIL {}", c.name));
            if let Some(e) = &c.error {
                s.push_str(&format!(": {e}"));
            } else if let (Some(v), Some(t)) = (c.values.get("value"), c.tolerance) {
                s.push_str(&format!(": {v} > {t:e}"));
            }
            s.push('\n');
        }
        s.push_str(&format!(
            "{}: {}/{} checks passed",
            self.command,
            self.passed(),
            self.checks.len()
        ));
        s
    }
}
