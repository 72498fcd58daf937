//! JSON behavior files.
//!
//! ```json
//! {
//!   "observables": [{"id": "q1", "outcomes": ["0", "1"]}],
//!   "contexts": [{"id": "c1", "observables": ["q1"]}],
//!   "tables": {"c1": [{"outcome": ["0"], "p": "1/2"}, {"outcome": ["1"], "p": "1/2"}]}
//! }
//! ```
//!
//! Row labels follow the member order listed for the context. Missing rows
//! have probability zero. Written files use ascending observable ids inside
//! each context and omit zero rows, so output is byte-stable.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{labels_of, Behavior, BehaviorBuilder, ModelError, Observable, Violation};
use crate::rational::{format_rational, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableDoc {
    pub id: String,
    pub outcomes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextDoc {
    pub id: String,
    pub observables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowDoc {
    pub outcome: Vec<String>,
    pub p: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorDoc {
    pub observables: Vec<ObservableDoc>,
    pub contexts: Vec<ContextDoc>,
    #[serde(default)]
    pub tables: IndexMap<String, Vec<RowDoc>>,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed behavior JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("probability in context {context:?}, row {row}: {message}")]
    Probability { context: String, row: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn probability(v: &Value) -> Result<Rational, String> {
    match v {
        Value::String(s) => parse_rational(s).map_err(|e| e.to_string()),
        Value::Number(n) if n.is_i64() || n.is_u64() => parse_rational(&n.to_string()).map_err(|e| e.to_string()),
        Value::Number(n) => Err(format!("floating-point probability {n} is not accepted, write it as \"num/den\"")),
        other => Err(format!("expected a \"num/den\" string, found {other}")),
    }
}

impl BehaviorDoc {
    fn builder(&self) -> Result<BehaviorBuilder, IoError> {
        let mut b = BehaviorBuilder::new();
        for q in &self.observables {
            b.push_observable(Observable { id: q.id.clone(), outcomes: q.outcomes.clone() });
        }
        for c in &self.contexts {
            b.push_context(c.id.clone(), c.observables.clone());
        }
        for (ctx, rows) in &self.tables {
            for (i, row) in rows.iter().enumerate() {
                let p = probability(&row.p).map_err(|message| IoError::Probability {
                    context: ctx.clone(),
                    row: i,
                    message,
                })?;
                b.push_row(ctx.clone(), row.outcome.clone(), p);
            }
        }
        Ok(b)
    }

    /// Every structural violation in the document.
    pub fn violations(&self) -> Result<Vec<Violation>, IoError> {
        Ok(self.builder()?.check().1)
    }

    pub fn to_behavior(&self) -> Result<Behavior, IoError> {
        Ok(self.builder()?.build()?)
    }

    pub fn from_behavior(b: &Behavior) -> BehaviorDoc {
        let s = b.scenario();
        let observables =
            s.observables().iter().map(|q| ObservableDoc { id: q.id.clone(), outcomes: q.outcomes.clone() }).collect();
        let contexts = s
            .contexts()
            .iter()
            .map(|c| ContextDoc {
                id: c.id.clone(),
                observables: c.members.iter().map(|&q| s.observable(q).id.clone()).collect(),
            })
            .collect();
        let mut tables = IndexMap::new();
        for (c, ctx) in s.contexts().iter().enumerate() {
            let rows = b
                .table(c)
                .iter()
                .map(|(k, w)| RowDoc { outcome: labels_of(s, c, k), p: Value::String(format_rational(w)) })
                .collect();
            tables.insert(ctx.id.clone(), rows);
        }
        BehaviorDoc { observables, contexts, tables }
    }
}

pub fn parse_doc(text: &str) -> Result<BehaviorDoc, IoError> {
    Ok(serde_json::from_str(text)?)
}

pub fn from_json(text: &str) -> Result<Behavior, IoError> {
    parse_doc(text)?.to_behavior()
}

/// Violations of a JSON document; JSON syntax errors are returned as `Err`.
pub fn validate_json(text: &str) -> Result<Vec<Violation>, IoError> {
    parse_doc(text)?.violations()
}

pub fn to_json(b: &Behavior) -> String {
    let mut s =
        serde_json::to_string_pretty(&BehaviorDoc::from_behavior(b)).expect("behavior documents always serialize");
    s.push('\n');
    s
}
