use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::input::InputInfo;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn pass(name: &str) -> Self {
        Check { name: name.into(), ok: true, witness: None, detail: None }
    }

    pub fn fail(name: &str, witness: impl Serialize, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            ok: false,
            witness: Some(serde_json::to_value(witness).unwrap_or(Value::Null)),
            detail: Some(detail.into()),
        }
    }

    /// Passes on `None`, fails with the violation as witness otherwise.
    pub fn from_violation<V: Serialize>(name: &str, v: Option<V>, detail: &str) -> Self {
        match v {
            None => Check::pass(name),
            Some(w) => Check::fail(name, w, detail),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Report {
    pub kind: String,
    pub schema: u32,
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputInfo>,
    pub params: Value,
    pub result: Value,
    pub checks: Vec<Check>,
    pub ok: bool,
    /// Wall-clock milliseconds per phase; the only non-reproducible field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

impl Report {
    pub fn new(kind: &str, input: Option<InputInfo>, params: impl Serialize) -> Self {
        Report {
            kind: kind.into(),
            schema: SCHEMA,
            command: std::env::args().skip(1).collect(),
            input,
            params: serde_json::to_value(params).unwrap_or(Value::Null),
            result: Value::Null,
            checks: Vec::new(),
            ok: true,
            timings_ms: Some(BTreeMap::new()),
        }
    }

    pub fn result(&mut self, r: impl Serialize) -> Result<()> {
        self.result = serde_json::to_value(r)?;
        Ok(())
    }

    pub fn check(&mut self, c: Check) {
        self.ok &= c.ok;
        self.checks.push(c);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}

/// Phase timer; records into the report's timing map.
pub struct Timer(Instant);

impl Timer {
    pub fn start() -> Self {
        Timer(Instant::now())
    }

    pub fn stop(self, rep: &mut Report, phase: &str) {
        if let Some(t) = rep.timings_ms.as_mut() {
            t.insert(phase.into(), self.0.elapsed().as_secs_f64() * 1e3);
        }
    }
}
