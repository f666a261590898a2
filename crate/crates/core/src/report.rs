//! Machine-readable experiment reports.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SCHEMA: &str = "narrowlab-report/1";

/// A named comparison. Non-finite values are written as `null` and read back
/// as NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(deserialize_with = "nullable")]
    pub value: f64,
    #[serde(deserialize_with = "nullable")]
    pub bound: f64,
}

fn nullable<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Parameters, measured values and pass/fail checks of one experiment run.
///
/// Reports contain no timing unless [`Report::set_wall_time`] is called, so
/// equal inputs give byte-identical output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub experiment: String,
    pub parameters: Map<String, Value>,
    pub measured: Map<String, Value>,
    pub checks: Vec<Check>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            experiment: experiment.to_string(),
            parameters: Map::new(),
            measured: Map::new(),
            checks: Vec::new(),
            seed,
            wall_time_s: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> Result<&mut Self> {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn measure(&mut self, key: &str, value: impl Serialize) -> Result<&mut Self> {
        self.measured
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    /// Records a check; a NaN value always fails.
    pub fn check(&mut self, name: &str, value: f64, bound: f64, passed: bool) -> &mut Self {
        self.checks.push(Check {
            name: name.to_string(),
            passed: passed && !value.is_nan(),
            value,
            bound,
        });
        self
    }

    /// `value <= bound`.
    pub fn check_le(&mut self, name: &str, value: f64, bound: f64) -> &mut Self {
        self.check(name, value, bound, value <= bound)
    }

    /// `value >= bound`.
    pub fn check_ge(&mut self, name: &str, value: f64, bound: f64) -> &mut Self {
        self.check(name, value, bound, value >= bound)
    }

    pub fn set_wall_time(&mut self, seconds: f64) {
        self.wall_time_s = Some(seconds);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.schema != SCHEMA {
            return Err(Error::Format(format!(
                "unknown report schema `{}`",
                report.schema
            )));
        }
        Ok(report)
    }

    /// One row per parameter, measurement and check:
    /// `section,name,value,bound,passed`. Structured values are embedded as JSON.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["section", "name", "value", "bound", "passed"])
            .map_err(csv_err)?;
        let cell = |v: &Value| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        w.write_record(["meta", "experiment", &self.experiment, "", ""])
            .map_err(csv_err)?;
        w.write_record(["meta", "seed", &self.seed.to_string(), "", ""])
            .map_err(csv_err)?;
        for (k, v) in &self.parameters {
            w.write_record(["parameter", k, &cell(v), "", ""])
                .map_err(csv_err)?;
        }
        for (k, v) in &self.measured {
            w.write_record(["measured", k, &cell(v), "", ""])
                .map_err(csv_err)?;
        }
        for c in &self.checks {
            w.write_record([
                "check",
                &c.name,
                &format!("{:?}", c.value),
                &format!("{:?}", c.bound),
                &c.passed.to_string(),
            ])
            .map_err(csv_err)?;
        }
        if let Some(t) = self.wall_time_s {
            w.write_record(["meta", "wall_time_s", &format!("{t:?}"), "", ""])
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}
