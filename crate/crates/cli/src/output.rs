//! Result documents: one JSON tree and the equivalent flat CSV table.
//!
//! Indices in both forms are 1-based; `ħ` exponents are integer half-steps.

use std::collections::BTreeMap;

use qperiods::algebra::hbar::HbarElement;
use qperiods::algebra::matrix::Matrix;
use qperiods::algebra::rational::format_rat;
use qperiods::algebra::series::SuperSeries;
use qperiods::report::Report;
use serde_json::{json, Map, Value};

pub const CSV_HEADER: [&str; 8] = ["section", "i", "j", "k", "halfstep", "monomial", "value", "note"];

#[derive(Clone, Debug, Default)]
pub struct Row {
    pub section: String,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub k: Option<usize>,
    pub halfstep: Option<i32>,
    pub monomial: String,
    pub value: String,
    pub note: String,
}

#[derive(Default)]
pub struct Document {
    pub json: Map<String, Value>,
    pub rows: Vec<Row>,
}

type Idx = (Option<usize>, Option<usize>, Option<usize>);

fn row(section: &str, (i, j, k): Idx, halfstep: Option<i32>, monomial: String, value: String) -> Row {
    Row { section: section.into(), i, j, k, halfstep, monomial, value, note: String::new() }
}

impl Document {
    pub fn insert(&mut self, key: &str, value: Value) {
        self.json.insert(key.into(), value);
    }

    /// A scalar series as `{monomial: value}`.
    pub fn scalar(&mut self, section: &str, idx: Idx, s: &SuperSeries) -> Value {
        let vars = s.vars();
        let mut out = Map::new();
        for (m, v) in s.terms() {
            let name = vars.format_monomial(m);
            self.rows.push(row(section, idx, None, name.clone(), format_rat(&v[0])));
            out.insert(name, Value::String(format_rat(&v[0])));
        }
        Value::Object(out)
    }

    /// A vector series as `{monomial: [component values]}`; rows carry the
    /// component in `i`, shifted by `idx` if the section is itself indexed.
    fn vector_terms(&mut self, section: &str, halfstep: Option<i32>, s: &SuperSeries) -> Value {
        let vars = s.vars();
        let mut out = Map::new();
        for (m, v) in s.terms() {
            let name = vars.format_monomial(m);
            for (c, x) in v.iter().enumerate() {
                if *x != qperiods::algebra::rational::zero() {
                    self.rows.push(row(section, (Some(c + 1), None, None), halfstep, name.clone(), format_rat(x)));
                }
            }
            out.insert(name, Value::Array(v.iter().map(|x| Value::String(format_rat(x))).collect()));
        }
        Value::Object(out)
    }

    pub fn vector(&mut self, section: &str, s: &SuperSeries) -> Value {
        self.vector_terms(section, None, s)
    }

    /// `[{halfstep, terms}]` in increasing half-step order.
    pub fn hbar(&mut self, section: &str, v: &HbarElement) -> Value {
        Value::Array(
            v.terms()
                .map(|(e, s)| json!({ "halfstep": e, "terms": self.vector_terms(section, Some(e), s) }))
                .collect(),
        )
    }

    pub fn matrix(&mut self, section: &str, m: &Matrix) -> Value {
        let mut rows = Vec::new();
        for i in 0..m.rows() {
            let mut r = Vec::new();
            for j in 0..m.cols() {
                let x = format_rat(&m[(i, j)]);
                self.rows.push(row(section, (Some(i + 1), Some(j + 1), None), None, String::new(), x.clone()));
                r.push(Value::String(x));
            }
            rows.push(Value::Array(r));
        }
        Value::Array(rows)
    }

    pub fn tensor3(&mut self, section: &str, t: &[Vec<Vec<SuperSeries>>]) -> Value {
        let mut out = Vec::new();
        for (i, a) in t.iter().enumerate() {
            let mut ra = Vec::new();
            for (j, b) in a.iter().enumerate() {
                let rb: Vec<Value> = b.iter().enumerate().map(|(k, s)| self.scalar(section, (Some(i + 1), Some(j + 1), Some(k + 1)), s)).collect();
                ra.push(Value::Array(rb));
            }
            out.push(Value::Array(ra));
        }
        Value::Array(out)
    }

    /// `{name: {pass, witness}}`; repeated names are merged (all must pass,
    /// the first witness is kept).
    pub fn checks(&mut self, section: &str, report: &Report) -> Value {
        let mut merged: BTreeMap<String, (bool, Option<String>)> = BTreeMap::new();
        for c in &report.checks {
            let slot = merged.entry(c.name.clone()).or_insert((true, None));
            if !c.pass {
                slot.0 = false;
                if slot.1.is_none() {
                    slot.1 = c.witness.clone();
                }
            }
        }
        let mut out = Map::new();
        for (name, (pass, witness)) in merged {
            let value = if pass { "pass".to_string() } else { format!("fail: {}", witness.clone().unwrap_or_default()) };
            self.rows.push(Row { section: section.into(), value, note: name.clone(), ..Row::default() });
            out.insert(name, json!({ "pass": pass, "witness": witness }));
        }
        Value::Object(out)
    }

    pub fn note(&mut self, section: &str, note: &str, value: String) {
        self.rows.push(Row { section: section.into(), value, note: note.into(), ..Row::default() });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&Value::Object(self.json.clone())).expect("serializable");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.section.as_str(),
                &opt(r.i),
                &opt(r.j),
                &opt(r.k),
                &r.halfstep.map(|e| e.to_string()).unwrap_or_default(),
                &r.monomial,
                &r.value,
                &r.note,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}
