//! Result records as JSON lines with sorted keys, and CSV summaries.

use crate::error::Result;
use serde::Serialize;
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub command: String,
    pub config_hash: String,
    pub quantity: String,
    pub keys: BTreeMap<String, f64>,
    pub value: f64,
    /// Set on records that come out of an optimization.
    pub exact: Option<bool>,
    /// Set on stochastic records.
    pub ci: Option<(f64, f64)>,
    /// Set on verification assertions.
    pub passed: Option<bool>,
    pub detail: Option<String>,
    pub timestamp: u64,
}

/// Finite numbers as JSON numbers, the rest as strings (`-inf`, `inf`, `nan`).
pub fn number(v: f64) -> Value {
    if v.is_finite() {
        serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
    } else if v.is_nan() {
        Value::String("nan".into())
    } else if v > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

impl ResultRecord {
    pub fn new(command: &str, config_hash: &str, quantity: &str, value: f64, timestamp: u64) -> Self {
        ResultRecord {
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            quantity: quantity.to_string(),
            keys: BTreeMap::new(),
            value,
            exact: None,
            ci: None,
            passed: None,
            detail: None,
            timestamp,
        }
    }

    pub fn key(mut self, name: &str, v: f64) -> Self {
        self.keys.insert(name.to_string(), v);
        self
    }

    pub fn exact(mut self, e: bool) -> Self {
        self.exact = Some(e);
        self
    }

    pub fn ci(mut self, lo: f64, hi: f64) -> Self {
        self.ci = Some((lo, hi));
        self
    }

    pub fn passed(mut self, p: bool) -> Self {
        self.passed = Some(p);
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    /// The record as a JSON object. `serde_json` maps keep keys sorted.
    pub fn to_json(&self, with_timestamp: bool) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.command.clone()));
        m.insert("config_hash".into(), Value::String(self.config_hash.clone()));
        m.insert("quantity".into(), Value::String(self.quantity.clone()));
        let keys: Map<String, Value> = self.keys.iter().map(|(k, v)| (k.clone(), number(*v))).collect();
        m.insert("keys".into(), Value::Object(keys));
        m.insert("value".into(), number(self.value));
        if let Some(e) = self.exact {
            m.insert("exact".into(), Value::Bool(e));
        }
        if let Some((lo, hi)) = self.ci {
            m.insert("ci".into(), Value::Array(vec![number(lo), number(hi)]));
        }
        if let Some(p) = self.passed {
            m.insert("passed".into(), Value::Bool(p));
        }
        if let Some(d) = &self.detail {
            m.insert("detail".into(), Value::String(d.clone()));
        }
        if with_timestamp {
            m.insert("timestamp".into(), Value::from(self.timestamp));
        }
        Value::Object(m)
    }

    pub fn to_line(&self, with_timestamp: bool) -> String {
        self.to_json(with_timestamp).to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub quantity: String,
    pub keys: String,
    pub value: String,
    pub exact: String,
}

impl SummaryRow {
    pub fn from_record(r: &ResultRecord) -> Self {
        SummaryRow {
            quantity: r.quantity.clone(),
            keys: r.keys.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";"),
            value: match number(r.value) {
                Value::Number(n) => n.to_string(),
                Value::String(s) => s,
                _ => String::new(),
            },
            exact: match (r.passed, r.exact) {
                (Some(p), _) => if p { "pass" } else { "FAIL" }.to_string(),
                (None, Some(e)) => e.to_string(),
                _ => String::new(),
            },
        }
    }
}

/// Records in emission order, serialized one per line.
pub fn write_records<W: Write>(mut w: W, records: &[ResultRecord], with_timestamp: bool) -> Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_line(with_timestamp))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(|e| crate::Error::Config(format!("csv: {e}")))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_sorted_and_infinities_survive() {
        let r = ResultRecord::new("estimate-mdim", "abc", "log-sum", f64::NEG_INFINITY, 5)
            .key("n", 3.0)
            .key("eps", 0.5)
            .exact(true);
        let line = r.to_line(true);
        assert_eq!(
            line,
            r#"{"command":"estimate-mdim","config_hash":"abc","exact":true,"keys":{"eps":0.5,"n":3.0},"quantity":"log-sum","timestamp":5,"value":"-inf"}"#
        );
        assert!(!r.to_line(false).contains("timestamp"));
    }

    #[test]
    fn summary_csv() {
        let r = ResultRecord::new("verify", "h", "chain", 0.25, 0).key("eps", 0.5).passed(false);
        let mut buf = Vec::new();
        write_summary(&mut buf, &[SummaryRow::from_record(&r)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "quantity,keys,value,exact\nchain,eps=0.5,0.25,FAIL\n");
    }
}
