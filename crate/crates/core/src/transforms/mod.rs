//! Behavior transformations: marginals, coarse-grainings, post-processings,
//! joins, products, relabelings, deterministic expansion and the canonical
//! binary representation.
//!
//! Every operation returns a fresh, valid behavior. User-supplied observable
//! ids may not contain `::`, which is reserved for generated ids.

mod canonical;
pub mod pipeline;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{Behavior, Distribution, ModelError, Observable, Scenario};

pub use canonical::{canonical_binary, CanonicalOptions, DEFAULT_MAX_GENERATED};
pub use pipeline::{parse_pipeline, run_pipeline, PipelineError, Step};

/// Separator reserved for generated ids.
pub const RESERVED: &str = "::";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("observable {0:?} is already present")]
    IdCollision(String),
    #[error("id {0:?} contains the reserved separator \"::\"")]
    ReservedSeparator(String),
    #[error("context {0:?} would be left without observables")]
    EmptiedContext(String),
    #[error("map for {source_desc} is not surjective: {missing:?} never hit")]
    NotSurjective { source_desc: String, missing: Vec<String> },
    #[error("map for {source_desc} is not total: no image for {missing:?}")]
    NotTotal { source_desc: String, missing: Vec<String> },
    #[error("map for {source_desc} is malformed: {detail}")]
    BadMap { source_desc: String, detail: String },
    #[error("partition of the contexts of {observable:?} is invalid: {detail}")]
    NotAPartition { observable: String, detail: String },
    #[error("observable {observable:?} is already measured in context {context:?}")]
    AlreadyInContext { observable: String, context: String },
    #[error("{label:?} is not an outcome of {observable:?}")]
    UnknownOutcome { observable: String, label: String },
    #[error("observable {observable:?} exists with outcomes {existing:?}, not {given:?}")]
    OutcomeConflict { observable: String, existing: Vec<String>, given: Vec<String> },
    #[error("canonical binary budget of {budget} generated observables exceeded at composite {composite:?}")]
    Budget { composite: Vec<String>, budget: usize },
}

/// Kept (observable, context) incidences; everything else is dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubscenarioSpec {
    pub pairs: Vec<(String, String)>,
}

impl SubscenarioSpec {
    pub fn full(b: &Behavior) -> Self {
        let s = b.scenario();
        let pairs = s
            .contexts()
            .iter()
            .flat_map(|c| c.members.iter().map(move |&q| (s.observable(q).id.clone(), c.id.clone())))
            .collect();
        SubscenarioSpec { pairs }
    }
}

/// A function from the joint outcomes of a source composite onto a target
/// outcome set. Keys list labels in the order the source composite is given.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OutcomeMap {
    pub entries: Vec<(Vec<String>, String)>,
    /// Target outcome order; defaults to order of first appearance.
    pub targets: Option<Vec<String>>,
}

impl OutcomeMap {
    pub fn from_pairs(pairs: &[(&[&str], &str)]) -> Self {
        OutcomeMap {
            entries: pairs.iter().map(|(k, v)| (k.iter().map(|s| s.to_string()).collect(), v.to_string())).collect(),
            targets: None,
        }
    }

    /// Single-observable map given as (source label, target label).
    pub fn single(pairs: &[(&str, &str)]) -> Self {
        OutcomeMap { entries: pairs.iter().map(|(k, v)| (vec![k.to_string()], v.to_string())).collect(), targets: None }
    }

    pub fn with_targets(mut self, targets: &[&str]) -> Self {
        self.targets = Some(targets.iter().map(|s| s.to_string()).collect());
        self
    }
}

/// A map resolved against concrete outcome sets: `table[flat(tuple)]`.
struct ResolvedMap {
    targets: Vec<String>,
    radices: Vec<usize>,
    table: Vec<usize>,
}

impl ResolvedMap {
    fn apply(&self, tuple: &[usize]) -> usize {
        self.table[flat(&self.radices, tuple)]
    }
}

fn flat(radices: &[usize], tuple: &[usize]) -> usize {
    tuple.iter().zip(radices).fold(0, |acc, (&t, &r)| acc * r + t)
}

fn unflat(radices: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for i in (0..radices.len()).rev() {
        out[i] = index % radices[i];
        index /= radices[i];
    }
    out
}

/// All tuples of a mixed-radix domain in lexicographic order.
pub(crate) fn domain(radices: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let n: usize = radices.iter().product();
    (0..n).map(move |i| unflat(radices, i))
}

fn resolve_map(s: &Scenario, source: &[usize], map: &OutcomeMap) -> Result<ResolvedMap, TransformError> {
    let source_desc = source.iter().map(|&q| s.observable(q).id.as_str()).collect::<Vec<_>>().join(",");
    let bad = |detail: String| TransformError::BadMap { source_desc: source_desc.clone(), detail };
    let radices: Vec<usize> = source.iter().map(|&q| s.observable(q).len()).collect();
    let size: usize = radices.iter().product();
    let mut targets: Vec<String> = map.targets.clone().unwrap_or_default();
    let fixed_targets = map.targets.is_some();
    if fixed_targets && targets.iter().collect::<BTreeSet<_>>().len() != targets.len() {
        return Err(bad("repeated target outcome".into()));
    }
    let mut table: Vec<Option<usize>> = vec![None; size];
    for (key, value) in &map.entries {
        if key.len() != source.len() {
            return Err(bad(format!("key {key:?} has {} labels, expected {}", key.len(), source.len())));
        }
        let mut tuple = Vec::with_capacity(key.len());
        for (&q, label) in source.iter().zip(key) {
            let obs = s.observable(q);
            tuple.push(
                obs.outcome_index(label).ok_or_else(|| TransformError::UnknownOutcome {
                    observable: obs.id.clone(),
                    label: label.clone(),
                })?,
            );
        }
        let t = match targets.iter().position(|x| x == value) {
            Some(t) => t,
            None if fixed_targets => return Err(bad(format!("image {value:?} is not among the declared targets"))),
            None => {
                targets.push(value.clone());
                targets.len() - 1
            }
        };
        let slot = &mut table[flat(&radices, &tuple)];
        match slot {
            Some(prev) if *prev != t => return Err(bad(format!("key {key:?} is mapped twice"))),
            _ => *slot = Some(t),
        }
    }
    let missing: Vec<String> = table
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_none())
        .take(8)
        .map(|(i, _)| {
            let tuple = unflat(&radices, i);
            source.iter().zip(&tuple).map(|(&q, &o)| s.observable(q).outcomes[o].clone()).collect::<Vec<_>>().join(",")
        })
        .collect();
    if !missing.is_empty() {
        return Err(TransformError::NotTotal { source_desc, missing });
    }
    let table: Vec<usize> = table.into_iter().map(Option::unwrap).collect();
    let hit: BTreeSet<usize> = table.iter().copied().collect();
    let missing: Vec<String> = (0..targets.len()).filter(|t| !hit.contains(t)).map(|t| targets[t].clone()).collect();
    if !missing.is_empty() {
        return Err(TransformError::NotSurjective { source_desc, missing });
    }
    Ok(ResolvedMap { targets, radices, table })
}

/// Intermediate form: contexts list members in any order and tables follow
/// that order. `assemble` sorts everything into a valid behavior.
struct Draft {
    observables: Vec<Observable>,
    contexts: Vec<(String, Vec<String>, Distribution)>,
}

fn assemble(d: Draft) -> Result<Behavior, TransformError> {
    let specs = d.contexts.iter().map(|(id, m, _)| (id.clone(), m.clone())).collect();
    let s = Scenario::new(d.observables, specs)?;
    let mut tables = Vec::with_capacity(d.contexts.len());
    for (c, (_, members, dist)) in d.contexts.into_iter().enumerate() {
        let listed: Vec<usize> = members.iter().map(|m| s.observable_index(m).unwrap()).collect();
        let perm: Vec<usize> =
            s.context(c).members.iter().map(|q| listed.iter().position(|x| x == q).unwrap()).collect();
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            tables.push(dist);
        } else {
            tables.push(dist.push_forward(s.shape(c), |t| perm.iter().map(|&p| t[p]).collect()));
        }
    }
    Ok(Behavior::from_parts(s, tables))
}

fn draft_of(b: &Behavior) -> Draft {
    let s = b.scenario();
    Draft {
        observables: s.observables().to_vec(),
        contexts: s
            .contexts()
            .iter()
            .zip(b.tables())
            .map(|(c, t)| (c.id.clone(), member_ids(s, &c.members), t.clone()))
            .collect(),
    }
}

fn member_ids(s: &Scenario, members: &[usize]) -> Vec<String> {
    members.iter().map(|&q| s.observable(q).id.clone()).collect()
}

pub(crate) fn check_user_id(id: &str) -> Result<(), TransformError> {
    if id.contains(RESERVED) {
        return Err(TransformError::ReservedSeparator(id.to_string()));
    }
    Ok(())
}

fn check_fresh(s: &Scenario, id: &str) -> Result<(), TransformError> {
    if s.observable_index(id).is_some() {
        return Err(TransformError::IdCollision(id.to_string()));
    }
    Ok(())
}

/// Restricts to a sub-scenario, marginalizing every kept context.
pub fn marginalize(b: &Behavior, spec: &SubscenarioSpec) -> Result<Behavior, TransformError> {
    let s = b.scenario();
    let mut kept: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (q, c) in &spec.pairs {
        let qi = s.require_observable(q)?;
        let ci = s.require_context(c)?;
        if !s.context(ci).contains(qi) {
            return Err(ModelError::NotInContext { observable: q.clone(), context: c.clone() }.into());
        }
        kept.entry(ci).or_default().insert(qi);
    }
    let used: BTreeSet<usize> = kept.values().flatten().copied().collect();
    let mut contexts = Vec::with_capacity(kept.len());
    for (&c, members) in &kept {
        let members: Vec<usize> = members.iter().copied().collect();
        contexts.push((s.context(c).id.clone(), member_ids(s, &members), b.marginal_idx(&members, c)?));
    }
    let observables = used.iter().map(|&q| s.observable(q).clone()).collect();
    assemble(Draft { observables, contexts })
}

/// Drops observables everywhere. Fails if a context would be emptied.
pub fn drop_observables(b: &Behavior, ids: &[String]) -> Result<Behavior, TransformError> {
    let s = b.scenario();
    let dropped = s.resolve_composite(ids)?;
    let mut pairs = Vec::new();
    for c in s.contexts() {
        let left: Vec<usize> = c.members.iter().copied().filter(|q| !dropped.contains(q)).collect();
        if left.is_empty() {
            return Err(TransformError::EmptiedContext(c.id.clone()));
        }
        pairs.extend(left.iter().map(|&q| (s.observable(q).id.clone(), c.id.clone())));
    }
    marginalize(b, &SubscenarioSpec { pairs })
}

/// Keeps only the listed contexts, with all their observables.
pub fn keep_contexts(b: &Behavior, ids: &[String]) -> Result<Behavior, TransformError> {
    let s = b.scenario();
    let mut pairs = Vec::new();
    for id in ids {
        let c = s.require_context(id)?;
        pairs.extend(s.context(c).members.iter().map(|&q| (s.observable(q).id.clone(), id.clone())));
    }
    marginalize(b, &SubscenarioSpec { pairs })
}

/// Replaces `q` by its image under `map`, keeping the id unless `new_id` is
/// given.
pub fn coarsen(b: &Behavior, q: &str, map: &OutcomeMap, new_id: Option<&str>) -> Result<Behavior, TransformError> {
    let s = b.scenario();
    let qi = s.require_observable(q)?;
    let f = resolve_map(s, &[qi], map)?;
    let id = match new_id {
        Some(n) if n != q => {
            check_user_id(n)?;
            check_fresh(s, n)?;
            n.to_string()
        }
        _ => q.to_string(),
    };
    let mut d = draft_of(b);
    d.observables[qi] = Observable { id: id.clone(), outcomes: f.targets.clone() };
    for (c, (_, members, table)) in d.contexts.iter_mut().enumerate() {
        if let Some(pos) = s.context(c).position(qi) {
            members[pos] = id.clone();
            let mut shape = table.shape().to_vec();
            shape[pos] = f.targets.len();
            *table = table.push_forward(shape, |t| {
                let mut t = t.to_vec();
                t[pos] = f.apply(&[t[pos]]);
                t
            });
        }
    }
    assemble(d)
}

fn append_function(b: &Behavior, source: &[usize], f: &ResolvedMap, new_id: &str) -> Result<Behavior, TransformError> {
    let s = b.scenario();
    check_fresh(s, new_id)?;
    let mut d = draft_of(b);
    d.observables.push(Observable { id: new_id.to_string(), outcomes: f.targets.clone() });
    for (c, (_, members, table)) in d.contexts.iter_mut().enumerate() {
        let ctx = s.context(c);
        let Some(pos) = source.iter().map(|&q| ctx.position(q)).collect::<Option<Vec<_>>>() else {
            continue;
        };
        members.push(new_id.to_string());
        let mut shape = table.shape().to_vec();
        shape.push(f.targets.len());
        *table = table.push_forward(shape, |t| {
            let key: Vec<usize> = pos.iter().map(|&p| t[p]).collect();
            let mut t = t.to_vec();
            t.push(f.apply(&key));
            t
        });
    }
    assemble(d)
}

/// Appends `new_id = f(composite)` wherever the composite is measured.
pub fn post_process(
    b: &Behavior,
    composite: &[String],
    map: &OutcomeMap,
    new_id: &str,
) -> Result<Behavior, TransformError> {
    check_user_id(new_id)?;
    post_process_unchecked(b, composite, map, new_id)
}

pub(crate) fn post_process_unchecked(
    b: &Behavior,
    composite: &[String],
    map: &OutcomeMap,
    new_id: &str,
) -> Result<Behavior, TransformError> {
    let s = b.scenario();
    if composite.is_empty() {
        return Err(ModelError::EmptyComposite.into());
    }
    let source = composite.iter().map(|q| s.require_observable(q)).collect::<Result<Vec<_>, _>>()?;
    if source.iter().collect::<BTreeSet<_>>().len() != source.len() {
        return Err(TransformError::BadMap {
            source_desc: composite.join(","),
            detail: "repeated observable in composite".into(),
        });
    }
    let mut sorted = source.clone();
    sorted.sort_unstable();
    if s.contexts_containing(&sorted).is_empty() {
        return Err(ModelError::NotInContext { observable: composite.join(","), context: "any".into() }.into());
    }
    let f = resolve_map(s, &source, map)?;
    append_function(b, &source, &f, new_id)
}

/// Label of a joint outcome: the bare label for one observable, else
/// `(l1,l2,...)`.
pub fn joint_label(labels: &[String]) -> String {
    if labels.len() == 1 {
        labels[0].clone()
    } else {
        format!("({})", labels.join(","))
    }
}

/// Identity map on the joint outcomes of `composite`, in the order given.
pub fn identity_map(b: &Behavior, composite: &[String]) -> Result<OutcomeMap, TransformError> {
    let s = b.scenario();
    let obs =
        composite.iter().map(|q| s.require_observable(q).map(|i| s.observable(i))).collect::<Result<Vec<_>, _>>()?;
    let radices: Vec<usize> = obs.iter().map(|o| o.len()).collect();
    let entries: Vec<(Vec<String>, String)> = domain(&radices)
        .map(|t| {
            let labels: Vec<String> = obs.iter().zip(&t).map(|(o, &i)| o.outcomes[i].clone()).collect();
            let l = joint_label(&labels);
            (labels, l)
        })
        .collect();
    let targets = entries.iter().map(|(_, l)| l.clone()).collect();
    Ok(OutcomeMap { entries, targets: Some(targets) })
}

/// Appends a copy of the joint value of `composite`.
pub fn join(b: &Behavior, composite: &[String], new_id: &str) -> Result<Behavior, TransformError> {
    check_user_id(new_id)?;
    join_unchecked(b, composite, new_id)
}

pub(crate) fn join_unchecked(b: &Behavior, composite: &[String], new_id: &str) -> Result<Behavior, TransformError> {
    let map = identity_map(b, composite)?;
    post_process_unchecked(b, composite, &map, new_id)
}

/// Independent product over all pairs of contexts; context ids are
/// `c1::c2`. With `auto_prefix` observable ids become `l::q` and `r::q`.
pub fn product(p1: &Behavior, p2: &Behavior, auto_prefix: bool) -> Result<Behavior, TransformError> {
    let (s1, s2) = (p1.scenario(), p2.scenario());
    let name = |side: &str, id: &str| if auto_prefix { format!("{side}{RESERVED}{id}") } else { id.to_string() };
    if !auto_prefix {
        if let Some(q) = s1.observables().iter().find(|q| s2.observable_index(&q.id).is_some()) {
            return Err(TransformError::IdCollision(q.id.clone()));
        }
    }
    let mut observables = Vec::new();
    for q in s1.observables() {
        observables.push(Observable { id: name("l", &q.id), outcomes: q.outcomes.clone() });
    }
    for q in s2.observables() {
        observables.push(Observable { id: name("r", &q.id), outcomes: q.outcomes.clone() });
    }
    let mut contexts = Vec::new();
    for (c1, t1) in s1.contexts().iter().zip(p1.tables()) {
        for (c2, t2) in s2.contexts().iter().zip(p2.tables()) {
            let mut members: Vec<String> = c1.members.iter().map(|&q| name("l", &s1.observable(q).id)).collect();
            members.extend(c2.members.iter().map(|&q| name("r", &s2.observable(q).id)));
            let shape = [t1.shape(), t2.shape()].concat();
            let mut t = Distribution::empty(shape);
            for (k1, w1) in t1.iter() {
                for (k2, w2) in t2.iter() {
                    t.add([k1.as_slice(), k2.as_slice()].concat(), w1 * w2);
                }
            }
            contexts.push((format!("{}{RESERVED}{}", c1.id, c2.id), members, t));
        }
    }
    assemble(Draft { observables, contexts })
}

/// Splits `q` into one observable per block of contexts.
pub fn relabel(
    b: &Behavior,
    q: &str,
    partition: &[Vec<String>],
    new_ids: &[String],
) -> Result<Behavior, TransformError> {
    let s = b.scenario();
    let qi = s.require_observable(q)?;
    let not_partition = |detail: String| TransformError::NotAPartition { observable: q.to_string(), detail };
    if partition.len() != new_ids.len() {
        return Err(not_partition(format!("{} blocks but {} new ids", partition.len(), new_ids.len())));
    }
    let mut block_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, block) in partition.iter().enumerate() {
        if block.is_empty() {
            return Err(not_partition(format!("block {i} is empty")));
        }
        for c in block {
            let ci = s.require_context(c)?;
            if !s.context(ci).contains(qi) {
                return Err(not_partition(format!("{q:?} is not measured in {c:?}")));
            }
            if block_of.insert(ci, i).is_some() {
                return Err(not_partition(format!("context {c:?} appears twice")));
            }
        }
    }
    let gaps: Vec<String> =
        s.contexts_of(qi).into_iter().filter(|c| !block_of.contains_key(c)).map(|c| s.context(c).id.clone()).collect();
    if !gaps.is_empty() {
        return Err(not_partition(format!("contexts {gaps:?} are not covered")));
    }
    let mut seen = BTreeSet::new();
    for id in new_ids {
        check_user_id(id)?;
        if id != q {
            check_fresh(s, id)?;
        }
        if !seen.insert(id) {
            return Err(TransformError::IdCollision(id.clone()));
        }
    }
    let mut d = draft_of(b);
    let outcomes = d.observables.remove(qi).outcomes;
    for id in new_ids {
        d.observables.push(Observable { id: id.clone(), outcomes: outcomes.clone() });
    }
    for (c, (_, members, _)) in d.contexts.iter_mut().enumerate() {
        if let Some(pos) = s.context(c).position(qi) {
            members[pos] = new_ids[block_of[&c]].clone();
        }
    }
    assemble(d)
}

/// Adds `q` to context `c` with deterministic outcome `u`. A new `q` needs its
/// outcome set; it defaults to `[u]`.
pub fn add_deterministic(
    b: &Behavior,
    q: &str,
    outcomes: Option<&[String]>,
    c: &str,
    u: &str,
) -> Result<Behavior, TransformError> {
    let s = b.scenario();
    let ci = s.require_context(c)?;
    let mut d = draft_of(b);
    let obs = match s.observable_index(q) {
        Some(qi) => {
            let existing = s.observable(qi);
            if let Some(given) = outcomes {
                if given != existing.outcomes.as_slice() {
                    return Err(TransformError::OutcomeConflict {
                        observable: q.to_string(),
                        existing: existing.outcomes.clone(),
                        given: given.to_vec(),
                    });
                }
            }
            if s.context(ci).contains(qi) {
                return Err(TransformError::AlreadyInContext { observable: q.to_string(), context: c.to_string() });
            }
            existing.clone()
        }
        None => {
            check_user_id(q)?;
            let o = Observable {
                id: q.to_string(),
                outcomes: outcomes.map(|o| o.to_vec()).unwrap_or_else(|| vec![u.to_string()]),
            };
            d.observables.push(o.clone());
            o
        }
    };
    let ui = obs
        .outcome_index(u)
        .ok_or_else(|| TransformError::UnknownOutcome { observable: q.to_string(), label: u.to_string() })?;
    let (_, members, table) = &mut d.contexts[ci];
    members.push(q.to_string());
    let mut shape = table.shape().to_vec();
    shape.push(obs.len());
    *table = table.push_forward(shape, |t| {
        let mut t = t.to_vec();
        t.push(ui);
        t
    });
    assemble(d)
}

/// Renames observables, contexts and outcome labels. Outcome renames are
/// keyed by the old observable id. Unmentioned names are kept.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Renaming {
    pub observables: BTreeMap<String, String>,
    pub contexts: BTreeMap<String, String>,
    pub outcomes: BTreeMap<String, BTreeMap<String, String>>,
}

pub fn rename(b: &Behavior, r: &Renaming) -> Result<Behavior, TransformError> {
    let s = b.scenario();
    for q in r.observables.keys().chain(r.outcomes.keys()) {
        s.require_observable(q)?;
    }
    for c in r.contexts.keys() {
        s.require_context(c)?;
    }
    for (q, labels) in &r.outcomes {
        let obs = s.observable(s.require_observable(q)?);
        for l in labels.keys() {
            if obs.outcome_index(l).is_none() {
                return Err(TransformError::UnknownOutcome { observable: q.clone(), label: l.clone() });
            }
        }
    }
    for new in r.observables.values() {
        check_user_id(new)?;
    }
    let obs_name = |id: &str| r.observables.get(id).cloned().unwrap_or_else(|| id.to_string());
    let mut d = draft_of(b);
    for q in d.observables.iter_mut() {
        if let Some(labels) = r.outcomes.get(&q.id) {
            for o in q.outcomes.iter_mut() {
                if let Some(n) = labels.get(o) {
                    *o = n.clone();
                }
            }
        }
        q.id = obs_name(&q.id);
    }
    for (id, members, _) in d.contexts.iter_mut() {
        if let Some(n) = r.contexts.get(id) {
            *id = n.clone();
        }
        for m in members.iter_mut() {
            *m = obs_name(m);
        }
    }
    assemble(d)
}
