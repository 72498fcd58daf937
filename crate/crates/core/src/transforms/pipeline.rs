//! JSON pipelines: a list of steps applied left to right.
//!
//! ```json
//! [{"op": "coarsen", "q": "q", "map": {"1'": "1", "2'": "2", "3'": "3"}},
//!  {"op": "keep_contexts", "contexts": ["c1", "c2"]}]
//! ```
//!
//! Outcome maps are objects keyed by source label. For a composite source the
//! key is the joint label `(l1,l2,...)` in the order the composite is listed.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::BehaviorDoc;
use crate::model::Behavior;

use super::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Marginalize {
        /// `[observable, context]` incidences to keep.
        keep: Vec<(String, String)>,
    },
    DropObservables {
        observables: Vec<String>,
    },
    KeepContexts {
        contexts: Vec<String>,
    },
    Coarsen {
        q: String,
        map: IndexMap<String, String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        targets: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        new_id: Option<String>,
    },
    PostProcess {
        composite: Vec<String>,
        map: IndexMap<String, String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        targets: Option<Vec<String>>,
        new_id: String,
    },
    Join {
        composite: Vec<String>,
        new_id: String,
    },
    Product {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        with: Option<BehaviorDoc>,
        /// Path of a behavior file; callers resolve it into `with`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        with_file: Option<String>,
        #[serde(default)]
        auto_prefix: bool,
    },
    Relabel {
        q: String,
        partition: Vec<Vec<String>>,
        new_ids: Vec<String>,
    },
    AddDeterministic {
        q: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outcomes: Option<Vec<String>>,
        context: String,
        outcome: String,
    },
    CanonicalBinary {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_generated: Option<usize>,
        #[serde(default)]
        join_closure: bool,
    },
    Rename {
        #[serde(default)]
        observables: BTreeMap<String, String>,
        #[serde(default)]
        contexts: BTreeMap<String, String>,
        #[serde(default)]
        outcomes: BTreeMap<String, BTreeMap<String, String>>,
    },
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("step {index} ({op}): {source}")]
    Transform { index: usize, op: &'static str, source: TransformError },
    #[error("step {index} (product): {detail}")]
    Operand { index: usize, detail: String },
    #[error("malformed pipeline JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Step {
    pub fn op(&self) -> &'static str {
        match self {
            Step::Marginalize { .. } => "marginalize",
            Step::DropObservables { .. } => "drop_observables",
            Step::KeepContexts { .. } => "keep_contexts",
            Step::Coarsen { .. } => "coarsen",
            Step::PostProcess { .. } => "post_process",
            Step::Join { .. } => "join",
            Step::Product { .. } => "product",
            Step::Relabel { .. } => "relabel",
            Step::AddDeterministic { .. } => "add_deterministic",
            Step::CanonicalBinary { .. } => "canonical_binary",
            Step::Rename { .. } => "rename",
        }
    }

    /// Product with an inline operand.
    pub fn product_with(b: &Behavior, auto_prefix: bool) -> Step {
        Step::Product { with: Some(BehaviorDoc::from_behavior(b)), with_file: None, auto_prefix }
    }

    /// Post-processing from an explicit map over joint outcomes.
    pub fn post_process(composite: &[&str], pairs: &[(&[&str], &str)], new_id: &str) -> Step {
        let map = pairs
            .iter()
            .map(|(k, v)| (joint_label(&k.iter().map(|s| s.to_string()).collect::<Vec<_>>()), v.to_string()))
            .collect();
        Step::PostProcess {
            composite: composite.iter().map(|s| s.to_string()).collect(),
            map,
            targets: None,
            new_id: new_id.to_string(),
        }
    }

    pub fn coarsen(q: &str, pairs: &[(&str, &str)]) -> Step {
        Step::Coarsen {
            q: q.to_string(),
            map: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            targets: None,
            new_id: None,
        }
    }

    pub fn apply(&self, b: &Behavior) -> Result<Behavior, TransformError> {
        match self {
            Step::Marginalize { keep } => marginalize(b, &SubscenarioSpec { pairs: keep.clone() }),
            Step::DropObservables { observables } => drop_observables(b, observables),
            Step::KeepContexts { contexts } => keep_contexts(b, contexts),
            Step::Coarsen { q, map, targets, new_id } => {
                let m = keyed_map(b, std::slice::from_ref(q), map, targets)?;
                coarsen(b, q, &m, new_id.as_deref())
            }
            Step::PostProcess { composite, map, targets, new_id } => {
                let m = keyed_map(b, composite, map, targets)?;
                post_process(b, composite, &m, new_id)
            }
            Step::Join { composite, new_id } => join(b, composite, new_id),
            Step::Product { with, with_file, auto_prefix } => {
                let doc = with.as_ref().ok_or_else(|| TransformError::BadMap {
                    source_desc: "product".into(),
                    detail: match with_file {
                        Some(f) => format!("operand file {f:?} was not loaded"),
                        None => "missing operand".into(),
                    },
                })?;
                let other = doc
                    .to_behavior()
                    .map_err(|e| TransformError::BadMap { source_desc: "product".into(), detail: e.to_string() })?;
                product(b, &other, *auto_prefix)
            }
            Step::Relabel { q, partition, new_ids } => relabel(b, q, partition, new_ids),
            Step::AddDeterministic { q, outcomes, context, outcome } => {
                add_deterministic(b, q, outcomes.as_deref(), context, outcome)
            }
            Step::CanonicalBinary { max_generated, join_closure } => canonical_binary(
                b,
                &CanonicalOptions {
                    max_generated: max_generated.unwrap_or(DEFAULT_MAX_GENERATED),
                    join_closure: *join_closure,
                },
            ),
            Step::Rename { observables, contexts, outcomes } => rename(
                b,
                &Renaming { observables: observables.clone(), contexts: contexts.clone(), outcomes: outcomes.clone() },
            ),
        }
    }
}

/// Turns a label-keyed map into an [`OutcomeMap`] by matching keys against the
/// joint labels of the composite.
fn keyed_map(
    b: &Behavior,
    composite: &[String],
    map: &IndexMap<String, String>,
    targets: &Option<Vec<String>>,
) -> Result<OutcomeMap, TransformError> {
    let ids = identity_map(b, composite)?;
    let by_label: BTreeMap<&str, &Vec<String>> = ids.entries.iter().map(|(k, l)| (l.as_str(), k)).collect();
    let mut entries = Vec::with_capacity(map.len());
    for (key, value) in map {
        let labels = by_label.get(key.as_str()).ok_or_else(|| TransformError::BadMap {
            source_desc: composite.join(","),
            detail: format!("{key:?} is not a joint outcome"),
        })?;
        entries.push(((*labels).clone(), value.clone()));
    }
    Ok(OutcomeMap { entries, targets: targets.clone() })
}

pub fn parse_pipeline(text: &str) -> Result<Vec<Step>, PipelineError> {
    Ok(serde_json::from_str(text)?)
}

pub fn run_pipeline(b: &Behavior, steps: &[Step]) -> Result<Behavior, PipelineError> {
    let mut cur = b.clone();
    for (index, step) in steps.iter().enumerate() {
        cur = step.apply(&cur).map_err(|source| PipelineError::Transform { index, op: step.op(), source })?;
    }
    Ok(cur)
}
