//! Finite measurement scenarios and behaviors.
//!
//! Observables are kept sorted by id and every context lists its members in
//! that order, so a joint outcome tuple of a context always has one coordinate
//! per member in ascending id order. Contexts keep the order they were given.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::rational::{format_rational, one, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Observable {
    pub id: String,
    pub outcomes: Vec<String>,
}

impl Observable {
    pub fn new(id: impl Into<String>, outcomes: &[&str]) -> Self {
        Observable { id: id.into(), outcomes: outcomes.iter().map(|s| s.to_string()).collect() }
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.outcomes.iter().position(|o| o == label)
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Context {
    pub id: String,
    /// Indices into the scenario's observable list, ascending.
    pub members: Vec<usize>,
}

impl Context {
    /// Coordinate of observable `q` inside this context's outcome tuples.
    pub fn position(&self, q: usize) -> Option<usize> {
        self.members.binary_search(&q).ok()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.position(q).is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    observables: Vec<Observable>,
    contexts: Vec<Context>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown observable {0:?}")]
    UnknownObservable(String),
    #[error("unknown context {0:?}")]
    UnknownContext(String),
    #[error("observable {observable:?} is not measured in context {context:?}")]
    NotInContext { observable: String, context: String },
    #[error("composite observable must be nonempty")]
    EmptyComposite,
    #[error("invalid behavior: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// One broken structural invariant, with enough locus to find it in a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyId,
    DuplicateObservable(String),
    DuplicateContext(String),
    NoOutcomes(String),
    DuplicateOutcome { observable: String, label: String },
    EmptyContext(String),
    UnknownObservable { context: String, observable: String },
    RepeatedMember { context: String, observable: String },
    UnknownContext(String),
    DomainMismatch { context: String, detail: String },
    UnknownOutcome { context: String, observable: String, label: String },
    DuplicateRow { context: String, outcome: Vec<String> },
    NegativeWeight { context: String, outcome: Vec<String>, weight: Rational },
    Normalization { context: String, total: Rational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EmptyId => write!(f, "empty identifier"),
            DuplicateObservable(q) => write!(f, "observable {q:?} declared twice"),
            DuplicateContext(c) => write!(f, "context {c:?} declared twice"),
            NoOutcomes(q) => write!(f, "observable {q:?} has no outcomes"),
            DuplicateOutcome { observable, label } => {
                write!(f, "observable {observable:?} repeats outcome {label:?}")
            }
            EmptyContext(c) => write!(f, "context {c:?} measures no observable"),
            UnknownObservable { context, observable } => {
                write!(f, "context {context:?} lists unknown observable {observable:?}")
            }
            RepeatedMember { context, observable } => {
                write!(f, "context {context:?} lists {observable:?} twice")
            }
            UnknownContext(c) => write!(f, "table given for unknown context {c:?}"),
            DomainMismatch { context, detail } => {
                write!(f, "table of context {context:?} has the wrong domain: {detail}")
            }
            UnknownOutcome { context, observable, label } => {
                write!(f, "table of context {context:?} uses {label:?}, not an outcome of {observable:?}")
            }
            DuplicateRow { context, outcome } => {
                write!(f, "table of context {context:?} repeats outcome {outcome:?}")
            }
            NegativeWeight { context, outcome, weight } => {
                write!(f, "table of context {context:?} gives {outcome:?} negative weight {}", format_rational(weight))
            }
            Normalization { context, total } => {
                write!(f, "table of context {context:?} sums to {}, not 1", format_rational(total))
            }
        }
    }
}

impl Scenario {
    /// Builds a scenario; observables are sorted by id, context member lists
    /// are resolved and sorted.
    pub fn new(mut observables: Vec<Observable>, contexts: Vec<(String, Vec<String>)>) -> Result<Scenario, ModelError> {
        let mut violations = Vec::new();
        observables.sort_by(|a, b| a.id.cmp(&b.id));
        for (i, q) in observables.iter().enumerate() {
            if q.id.is_empty() {
                violations.push(Violation::EmptyId);
            }
            if i > 0 && observables[i - 1].id == q.id {
                violations.push(Violation::DuplicateObservable(q.id.clone()));
            }
            if q.outcomes.is_empty() {
                violations.push(Violation::NoOutcomes(q.id.clone()));
            }
            let mut seen = BTreeSet::new();
            for o in &q.outcomes {
                if !seen.insert(o) {
                    violations.push(Violation::DuplicateOutcome { observable: q.id.clone(), label: o.clone() });
                }
            }
        }
        let index: BTreeMap<&str, usize> = observables.iter().enumerate().map(|(i, q)| (q.id.as_str(), i)).collect();
        let mut ctx_ids = BTreeSet::new();
        let mut resolved = Vec::with_capacity(contexts.len());
        for (id, members) in &contexts {
            if id.is_empty() {
                violations.push(Violation::EmptyId);
            }
            if !ctx_ids.insert(id.clone()) {
                violations.push(Violation::DuplicateContext(id.clone()));
            }
            if members.is_empty() {
                violations.push(Violation::EmptyContext(id.clone()));
            }
            let mut idx = Vec::with_capacity(members.len());
            for m in members {
                match index.get(m.as_str()) {
                    Some(&i) => {
                        if idx.contains(&i) {
                            violations.push(Violation::RepeatedMember { context: id.clone(), observable: m.clone() });
                        } else {
                            idx.push(i);
                        }
                    }
                    None => {
                        violations.push(Violation::UnknownObservable { context: id.clone(), observable: m.clone() })
                    }
                }
            }
            idx.sort_unstable();
            resolved.push(Context { id: id.clone(), members: idx });
        }
        if violations.is_empty() {
            Ok(Scenario { observables, contexts: resolved })
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn observable(&self, q: usize) -> &Observable {
        &self.observables[q]
    }

    pub fn context(&self, c: usize) -> &Context {
        &self.contexts[c]
    }

    pub fn observable_index(&self, id: &str) -> Option<usize> {
        self.observables.binary_search_by(|q| q.id.as_str().cmp(id)).ok()
    }

    pub fn context_index(&self, id: &str) -> Option<usize> {
        self.contexts.iter().position(|c| c.id == id)
    }

    pub fn require_observable(&self, id: &str) -> Result<usize, ModelError> {
        self.observable_index(id).ok_or_else(|| ModelError::UnknownObservable(id.to_string()))
    }

    pub fn require_context(&self, id: &str) -> Result<usize, ModelError> {
        self.context_index(id).ok_or_else(|| ModelError::UnknownContext(id.to_string()))
    }

    /// Contexts measuring `q`, in context order.
    pub fn contexts_of(&self, q: usize) -> Vec<usize> {
        (0..self.contexts.len()).filter(|&c| self.contexts[c].contains(q)).collect()
    }

    /// Contexts measuring every member of `composite` (sorted indices).
    pub fn contexts_containing(&self, composite: &[usize]) -> Vec<usize> {
        (0..self.contexts.len()).filter(|&c| composite.iter().all(|&q| self.contexts[c].contains(q))).collect()
    }

    /// Outcome counts of a context's members, i.e. the shape of O^c.
    pub fn shape(&self, c: usize) -> Vec<usize> {
        self.contexts[c].members.iter().map(|&q| self.observables[q].len()).collect()
    }

    /// Number of (observable, context) incidences.
    pub fn incidence_count(&self) -> usize {
        self.contexts.iter().map(|c| c.members.len()).sum()
    }

    pub fn resolve_composite(&self, ids: &[String]) -> Result<Vec<usize>, ModelError> {
        if ids.is_empty() {
            return Err(ModelError::EmptyComposite);
        }
        let mut out = ids.iter().map(|id| self.require_observable(id)).collect::<Result<Vec<_>, _>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// Joint distribution over a product of outcome index sets. Only nonzero
/// weights are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    shape: Vec<usize>,
    weights: BTreeMap<Vec<usize>, Rational>,
}

impl Distribution {
    pub fn empty(shape: Vec<usize>) -> Self {
        Distribution { shape, weights: BTreeMap::new() }
    }

    /// Accumulates the given weights; zero totals are dropped.
    pub fn from_weights<I>(shape: Vec<usize>, entries: I) -> Self
    where
        I: IntoIterator<Item = (Vec<usize>, Rational)>,
    {
        let mut d = Distribution::empty(shape);
        for (k, w) in entries {
            d.add(k, w);
        }
        d
    }

    pub fn point(shape: Vec<usize>, tuple: Vec<usize>) -> Self {
        Distribution::from_weights(shape, [(tuple, one())])
    }

    pub fn add(&mut self, key: Vec<usize>, w: Rational) {
        if w.is_zero() {
            return;
        }
        match self.weights.get_mut(&key) {
            Some(e) => {
                *e += w;
                if e.is_zero() {
                    self.weights.remove(&key);
                }
            }
            None => {
                self.weights.insert(key, w);
            }
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn get(&self, tuple: &[usize]) -> Rational {
        self.weights.get(tuple).cloned().unwrap_or_else(Rational::zero)
    }

    /// Nonzero entries in lexicographic tuple order.
    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, &Rational)> {
        self.weights.iter()
    }

    pub fn support(&self) -> Vec<Vec<usize>> {
        self.weights.iter().filter(|(_, w)| w.is_positive()).map(|(k, _)| k.clone()).collect()
    }

    pub fn support_len(&self) -> usize {
        self.weights.values().filter(|w| w.is_positive()).count()
    }

    pub fn total(&self) -> Rational {
        self.weights.values().fold(Rational::zero(), |a, b| a + b)
    }

    /// Marginal on the given coordinates, in the order given.
    pub fn marginal(&self, coords: &[usize]) -> Distribution {
        let shape = coords.iter().map(|&i| self.shape[i]).collect();
        Distribution::from_weights(
            shape,
            self.weights.iter().map(|(k, w)| (coords.iter().map(|&i| k[i]).collect(), w.clone())),
        )
    }

    pub fn push_forward<F>(&self, shape: Vec<usize>, f: F) -> Distribution
    where
        F: Fn(&[usize]) -> Vec<usize>,
    {
        Distribution::from_weights(shape, self.weights.iter().map(|(k, w)| (f(k), w.clone())))
    }

    /// Dense probability vector of a one-coordinate distribution.
    pub fn vector(&self) -> Vec<Rational> {
        assert_eq!(self.shape.len(), 1, "vector() needs a single coordinate");
        let mut v = vec![Rational::zero(); self.shape[0]];
        for (k, w) in &self.weights {
            v[k[0]] = w.clone();
        }
        v
    }

    pub fn is_point(&self) -> bool {
        self.weights.len() == 1 && self.weights.values().next().unwrap() == &one()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Behavior {
    scenario: Scenario,
    tables: Vec<Distribution>,
}

impl Behavior {
    /// Validated constructor: tables are indexed like the scenario's contexts.
    pub fn new(scenario: Scenario, tables: Vec<Distribution>) -> Result<Self, ModelError> {
        let b = Behavior { scenario, tables };
        let v = validate(&b);
        if v.is_empty() {
            Ok(b)
        } else {
            Err(ModelError::Invalid(v))
        }
    }

    /// Unchecked constructor; `validate` reports what is wrong with the result.
    pub fn from_parts(scenario: Scenario, tables: Vec<Distribution>) -> Self {
        Behavior { scenario, tables }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn tables(&self) -> &[Distribution] {
        &self.tables
    }

    pub fn table(&self, c: usize) -> &Distribution {
        &self.tables[c]
    }

    pub fn observables(&self) -> &[Observable] {
        self.scenario.observables()
    }

    pub fn contexts(&self) -> &[Context] {
        self.scenario.contexts()
    }

    pub fn table_of(&self, context: &str) -> Result<&Distribution, ModelError> {
        Ok(&self.tables[self.scenario.require_context(context)?])
    }

    /// Marginal P(·|q,c) for sorted observable indices.
    pub fn marginal_idx(&self, composite: &[usize], c: usize) -> Result<Distribution, ModelError> {
        let ctx = self.scenario.context(c);
        let coords = composite
            .iter()
            .map(|&q| {
                ctx.position(q).ok_or_else(|| ModelError::NotInContext {
                    observable: self.scenario.observable(q).id.clone(),
                    context: ctx.id.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.tables[c].marginal(&coords))
    }

    /// Marginal of a composite observable in a context. Coordinates follow
    /// ascending observable id.
    pub fn marginal(&self, composite: &CompositeObservable, context: &str) -> Result<Distribution, ModelError> {
        let c = self.scenario.require_context(context)?;
        let idx = self.scenario.resolve_composite(composite.members())?;
        self.marginal_idx(&idx, c)
    }

    /// Single-observable marginal as a dense vector over O_q.
    pub fn single_marginal(&self, q: usize, c: usize) -> Vec<Rational> {
        let pos = self.scenario.context(c).position(q).expect("q measured in c");
        self.tables[c].marginal(&[pos]).vector()
    }
}

/// A nonempty set of observable ids that is jointly measured somewhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CompositeObservable {
    members: Vec<String>,
}

impl CompositeObservable {
    pub fn new<S: AsRef<str>>(members: &[S]) -> Result<Self, ModelError> {
        let mut m: Vec<String> = members.iter().map(|s| s.as_ref().to_string()).collect();
        if m.is_empty() {
            return Err(ModelError::EmptyComposite);
        }
        m.sort();
        m.dedup();
        Ok(CompositeObservable { members: m })
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    /// Checks that some context of `b` measures every member.
    pub fn check_in(&self, b: &Behavior) -> Result<Vec<usize>, ModelError> {
        let idx = b.scenario().resolve_composite(&self.members)?;
        if b.scenario().contexts_containing(&idx).is_empty() {
            return Err(ModelError::NotInContext { observable: self.members.join(","), context: "any".into() });
        }
        Ok(idx)
    }
}

/// Lists every broken invariant of a behavior; empty when valid.
pub fn validate(b: &Behavior) -> Vec<Violation> {
    let s = b.scenario();
    let mut out = Vec::new();
    if b.tables.len() != s.contexts().len() {
        out.push(Violation::DomainMismatch {
            context: "*".into(),
            detail: format!("{} tables for {} contexts", b.tables.len(), s.contexts().len()),
        });
        return out;
    }
    for (c, ctx) in s.contexts().iter().enumerate() {
        let table = &b.tables[c];
        let shape = s.shape(c);
        if ctx.members.is_empty() {
            out.push(Violation::EmptyContext(ctx.id.clone()));
            continue;
        }
        if table.shape() != shape.as_slice() {
            out.push(Violation::DomainMismatch {
                context: ctx.id.clone(),
                detail: format!("shape {:?}, expected {:?}", table.shape(), shape),
            });
            continue;
        }
        let mut bad_key = false;
        for (k, w) in table.iter() {
            if k.len() != shape.len() || k.iter().zip(&shape).any(|(a, n)| a >= n) {
                if !bad_key {
                    out.push(Violation::DomainMismatch {
                        context: ctx.id.clone(),
                        detail: format!("tuple {k:?} outside {shape:?}"),
                    });
                }
                bad_key = true;
                continue;
            }
            if w.is_negative() {
                out.push(Violation::NegativeWeight {
                    context: ctx.id.clone(),
                    outcome: labels_of(s, c, k),
                    weight: w.clone(),
                });
            }
        }
        if !bad_key {
            let total = table.total();
            if total != one() {
                out.push(Violation::Normalization { context: ctx.id.clone(), total });
            }
        }
    }
    out
}

/// Outcome labels of a context tuple.
pub fn labels_of(s: &Scenario, c: usize, tuple: &[usize]) -> Vec<String> {
    s.context(c).members.iter().zip(tuple).map(|(&q, &o)| s.observable(q).outcomes[o].clone()).collect()
}

/// Where nondisturbance first fails: a smallest composite inside c ∩ c'
/// whose marginals differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disturbance {
    pub composite: Vec<String>,
    pub first: String,
    pub second: String,
}

const WITNESS_SUBSET_LIMIT: usize = 4096;

pub fn disturbance_witness(b: &Behavior) -> Option<Disturbance> {
    let s = b.scenario();
    let n = s.contexts().len();
    for i in 0..n {
        for j in i + 1..n {
            let shared: Vec<usize> =
                s.context(i).members.iter().copied().filter(|&q| s.context(j).contains(q)).collect();
            if shared.is_empty() {
                continue;
            }
            let differs = |set: &[usize]| b.marginal_idx(set, i).unwrap() != b.marginal_idx(set, j).unwrap();
            if !differs(&shared) {
                continue;
            }
            let minimal = smallest_disturbing_subset(&shared, &differs).unwrap_or(shared);
            return Some(Disturbance {
                composite: minimal.iter().map(|&q| s.observable(q).id.clone()).collect(),
                first: s.context(i).id.clone(),
                second: s.context(j).id.clone(),
            });
        }
    }
    None
}

fn smallest_disturbing_subset(shared: &[usize], differs: &dyn Fn(&[usize]) -> bool) -> Option<Vec<usize>> {
    let k = shared.len();
    let mut budget = WITNESS_SUBSET_LIMIT;
    for size in 1..k {
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            if budget == 0 {
                return None;
            }
            budget -= 1;
            let set: Vec<usize> = comb.iter().map(|&i| shared[i]).collect();
            if differs(&set) {
                return Some(set);
            }
            if !next_combination(&mut comb, k) {
                break;
            }
        }
    }
    None
}

/// Advances a sorted index combination in lexicographic order.
pub(crate) fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    for i in (0..k).rev() {
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub fn is_nondisturbing(b: &Behavior) -> bool {
    disturbance_witness(b).is_none()
}

/// Where consistent connectedness first fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inconsistency {
    pub observable: String,
    pub first: String,
    pub second: String,
}

pub fn inconsistency_witness(b: &Behavior) -> Option<Inconsistency> {
    let s = b.scenario();
    for q in 0..s.observables().len() {
        let ctxs = s.contexts_of(q);
        for w in ctxs.windows(2) {
            if b.single_marginal(q, w[0]) != b.single_marginal(q, w[1]) {
                return Some(Inconsistency {
                    observable: s.observable(q).id.clone(),
                    first: s.context(w[0]).id.clone(),
                    second: s.context(w[1]).id.clone(),
                });
            }
        }
    }
    None
}

pub fn is_consistently_connected(b: &Behavior) -> bool {
    inconsistency_witness(b).is_none()
}

pub fn is_deterministic(b: &Behavior) -> bool {
    b.tables().iter().all(|t| t.is_point())
}

/// Incremental construction from labelled rows, used by the JSON reader and
/// the built-in corpus.
#[derive(Debug, Clone, Default)]
pub struct BehaviorBuilder {
    observables: Vec<Observable>,
    contexts: Vec<(String, Vec<String>)>,
    rows: Vec<(String, Vec<String>, Rational)>,
    extra_violations: Vec<Violation>,
}

impl BehaviorBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observable(mut self, id: &str, outcomes: &[&str]) -> Self {
        self.observables.push(Observable::new(id, outcomes));
        self
    }

    pub fn push_observable(&mut self, q: Observable) {
        self.observables.push(q);
    }

    pub fn push_context(&mut self, id: String, members: Vec<String>) {
        self.contexts.push((id, members));
    }

    /// Adds a row whose labels follow the context's listed member order.
    pub fn push_row(&mut self, context: String, labels: Vec<String>, p: Rational) {
        self.rows.push((context, labels, p));
    }

    pub fn push_violation(&mut self, v: Violation) {
        self.extra_violations.push(v);
    }

    /// Context with rows given as (labels, "num/den").
    pub fn context(mut self, id: &str, members: &[&str], rows: &[(&[&str], &str)]) -> Self {
        self.contexts.push((id.to_string(), members.iter().map(|s| s.to_string()).collect()));
        for (labels, p) in rows {
            let p = crate::rational::parse_rational(p).expect("literal probability");
            self.rows.push((id.to_string(), labels.iter().map(|s| s.to_string()).collect(), p));
        }
        self
    }

    /// Resolves everything, returning the behavior only when no invariant is
    /// broken.
    pub fn check(self) -> (Option<Behavior>, Vec<Violation>) {
        let mut violations = self.extra_violations;
        let listed: BTreeMap<String, Vec<String>> = self.contexts.iter().cloned().collect();
        let scenario = match Scenario::new(self.observables, self.contexts) {
            Ok(s) => s,
            Err(ModelError::Invalid(v)) => {
                violations.extend(v);
                return (None, violations);
            }
            Err(e) => unreachable!("{e}"),
        };
        let n = scenario.contexts().len();
        let mut tables: Vec<Distribution> = (0..n).map(|c| Distribution::empty(scenario.shape(c))).collect();
        let mut broken = vec![false; n];
        let mut seen: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); n];
        for (ctx_id, labels, p) in self.rows {
            let Some(c) = scenario.context_index(&ctx_id) else {
                if !violations.contains(&Violation::UnknownContext(ctx_id.clone())) {
                    violations.push(Violation::UnknownContext(ctx_id));
                }
                continue;
            };
            if broken[c] {
                continue;
            }
            let order = &listed[&ctx_id];
            if labels.len() != order.len() {
                violations.push(Violation::DomainMismatch {
                    context: ctx_id.clone(),
                    detail: format!(
                        "row {:?} has {} labels but the context measures {}",
                        labels,
                        labels.len(),
                        order.len()
                    ),
                });
                broken[c] = true;
                continue;
            }
            let ctx = scenario.context(c);
            let mut key = vec![0; ctx.members.len()];
            let mut ok = true;
            for (member, label) in order.iter().zip(&labels) {
                let q = scenario.observable_index(member).unwrap();
                match scenario.observable(q).outcome_index(label) {
                    Some(o) => key[ctx.position(q).unwrap()] = o,
                    None => {
                        violations.push(Violation::UnknownOutcome {
                            context: ctx_id.clone(),
                            observable: member.clone(),
                            label: label.clone(),
                        });
                        ok = false;
                    }
                }
            }
            if !ok {
                broken[c] = true;
                continue;
            }
            if !seen[c].insert(key.clone()) {
                violations.push(Violation::DuplicateRow { context: ctx_id, outcome: labels });
                continue;
            }
            if p.is_negative() {
                violations.push(Violation::NegativeWeight { context: ctx_id, outcome: labels, weight: p.clone() });
            }
            tables[c].add(key, p);
        }
        for c in 0..n {
            if broken[c] {
                continue;
            }
            let total = tables[c].total();
            if total != one() {
                violations.push(Violation::Normalization { context: scenario.context(c).id.clone(), total });
            }
        }
        if violations.is_empty() {
            (Some(Behavior { scenario, tables }), violations)
        } else {
            (None, violations)
        }
    }

    pub fn build(self) -> Result<Behavior, ModelError> {
        match self.check() {
            (Some(b), _) => Ok(b),
            (None, v) => Err(ModelError::Invalid(v)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn two_cycle() -> Behavior {
        BehaviorBuilder::new()
            .observable("q1", &["0", "1"])
            .observable("q2", &["0", "1"])
            .context("c1", &["q1", "q2"], &[(&["0", "0"], "1/2"), (&["1", "1"], "1/2")])
            .context("c2", &["q2", "q1"], &[(&["1", "0"], "1/2"), (&["0", "1"], "1/2")])
            .build()
            .unwrap()
    }

    #[test]
    fn rows_are_rekeyed_to_sorted_members() {
        let b = two_cycle();
        let c2 = b.table_of("c2").unwrap();
        assert_eq!(c2.get(&[0, 1]), ratio(1, 2));
        assert_eq!(c2.get(&[1, 0]), ratio(1, 2));
        assert_eq!(c2.get(&[0, 0]), ratio(0, 1));
    }

    #[test]
    fn normalization_violation_is_reported_once() {
        let (b, v) = BehaviorBuilder::new()
            .observable("q", &["0", "1"])
            .context("c", &["q"], &[(&["0"], "1/2"), (&["1"], "1/3")])
            .check();
        assert!(b.is_none());
        assert_eq!(v, vec![Violation::Normalization { context: "c".into(), total: ratio(5, 6) }]);
    }

    #[test]
    fn short_rows_give_one_domain_mismatch() {
        let (_, v) = BehaviorBuilder::new()
            .observable("a", &["0", "1"])
            .observable("b", &["0", "1"])
            .context("c", &["a", "b"], &[(&["0"], "1/2"), (&["1"], "1/2")])
            .check();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::DomainMismatch { .. }));
    }

    #[test]
    fn empty_context_is_rejected() {
        let r = Scenario::new(vec![Observable::new("q", &["0"])], vec![("c".into(), vec![])]);
        assert!(matches!(r, Err(ModelError::Invalid(v)) if v == vec![Violation::EmptyContext("c".into())]));
    }

    #[test]
    fn two_cycle_is_consistently_connected_but_disturbing() {
        let b = two_cycle();
        assert!(is_consistently_connected(&b));
        let w = disturbance_witness(&b).unwrap();
        assert_eq!(w.composite, vec!["q1", "q2"]);
        assert!(!is_deterministic(&b));
    }

    #[test]
    fn marginal_rejects_missing_member() {
        let b = BehaviorBuilder::new()
            .observable("a", &["0"])
            .observable("b", &["0"])
            .context("c", &["a"], &[(&["0"], "1")])
            .context("d", &["b"], &[(&["0"], "1")])
            .build()
            .unwrap();
        let comp = CompositeObservable::new(&["b"]).unwrap();
        let err = b.marginal(&comp, "c").unwrap_err();
        assert_eq!(err, ModelError::NotInContext { observable: "b".into(), context: "c".into() });
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all.len(), 6);
        assert_eq!(all.last().unwrap(), &vec![2, 3]);
    }
}
