use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::stats::median;
use crate::error::{invalid, Result};
use crate::sum::{mean, sample_variance};

/// A grid coordinate: a number or a label such as a method name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Num(v) => Some(*v),
            ParamValue::Text(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Num(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Num(v)
    }
}

impl From<usize> for ParamValue {
    fn from(v: usize) -> Self {
        ParamValue::Num(v as f64)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_owned())
    }
}

/// One grid cell and its per-repetition values.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyCell {
    pub params: Vec<ParamValue>,
    pub values: Vec<f64>,
}

impl StudyCell {
    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Sample standard deviation; `None` with a single repetition.
    pub fn std(&self) -> Option<f64> {
        sample_variance(&self.values).map(f64::sqrt)
    }

    pub fn median(&self) -> f64 {
        median(&self.values).expect("cells hold at least one value")
    }
}

/// Results of a parameter sweep, one row per (cell, repetition).
#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub study: String,
    pub param_names: Vec<String>,
    pub cells: Vec<StudyCell>,
    /// Free-form configuration echoed into the sidecar.
    pub metadata: Map<String, Value>,
}

impl StudyReport {
    pub fn new(study: &str, param_names: &[&str]) -> Self {
        Self {
            study: study.to_owned(),
            param_names: param_names.iter().map(|s| s.to_string()).collect(),
            cells: Vec::new(),
            metadata: Map::new(),
        }
    }

    pub fn push(&mut self, params: Vec<ParamValue>, values: Vec<f64>) -> Result<()> {
        if params.len() != self.param_names.len() {
            return Err(invalid(format!(
                "cell has {} parameters, report declares {}",
                params.len(),
                self.param_names.len()
            )));
        }
        if values.is_empty() {
            return Err(invalid("a cell needs at least one repetition"));
        }
        self.cells.push(StudyCell { params, values });
        Ok(())
    }

    pub fn set_meta(&mut self, key: &str, value: Value) {
        self.metadata.insert(key.to_owned(), value);
    }

    /// First cell whose parameters equal `params`.
    pub fn cell(&self, params: &[ParamValue]) -> Option<&StudyCell> {
        self.cells.iter().find(|c| c.params == params)
    }

    /// Cells whose first parameter is the label `series`, in grid order.
    pub fn series(&self, series: &str) -> Vec<&StudyCell> {
        self.cells
            .iter()
            .filter(|c| matches!(c.params.first(), Some(ParamValue::Text(s)) if s == series))
            .collect()
    }

    /// Long-format CSV: `study,<params...>,rep,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("study");
        for name in &self.param_names {
            out.push(',');
            out.push_str(name);
        }
        out.push_str(",rep,value\n");
        for cell in &self.cells {
            for (rep, v) in cell.values.iter().enumerate() {
                out.push_str(&self.study);
                for p in &cell.params {
                    let _ = write!(out, ",{p}");
                }
                let _ = writeln!(out, ",{rep},{v:.16e}");
            }
        }
        out
    }

    /// JSON sidecar with per-cell summaries and the metadata.
    pub fn sidecar(&self) -> Value {
        let cells: Vec<Value> = self
            .cells
            .iter()
            .map(|c| {
                let params: Map<String, Value> = self
                    .param_names
                    .iter()
                    .zip(&c.params)
                    .map(|(k, v)| (k.clone(), serde_json::to_value(v).expect("params serialize")))
                    .collect();
                let mut cell = json!({
                    "params": params,
                    "reps": c.values.len(),
                    "mean": c.mean(),
                    "median": c.median(),
                });
                if let Some(s) = c.std() {
                    cell["std"] = json!(s);
                }
                cell
            })
            .collect();
        json!({
            "study": self.study,
            "params": self.param_names,
            "version": env!("CARGO_PKG_VERSION"),
            "metadata": self.metadata,
            "cells": cells,
        })
    }
}
