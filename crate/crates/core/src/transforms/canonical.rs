//! Canonical binary representation: join shared composites, add every binary
//! coarse-graining of every many-valued observable, keep only binary ones.
//!
//! Joins are never materialized. For a composite jointly measured in a set
//! of contexts K, every binary function of it is a binary function of the
//! largest composite measured in all of K (the intersection of K), so only
//! those intersections are split. Splits range over the outcomes that occur
//! somewhere, taken up to complement, and a split that is almost surely equal
//! (or complementary) to an observable already present on the same contexts
//! is skipped.

use std::collections::{BTreeSet, HashSet};

use crate::model::{Behavior, Distribution, Observable};

use super::{assemble, joint_label, member_ids, Draft, TransformError};

pub const DEFAULT_MAX_GENERATED: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CanonicalOptions {
    /// Upper bound on splits created.
    pub max_generated: usize,
    /// Re-apply the construction until the behavior stops changing.
    pub join_closure: bool,
}

impl Default for CanonicalOptions {
    fn default() -> Self {
        CanonicalOptions { max_generated: DEFAULT_MAX_GENERATED, join_closure: false }
    }
}

/// Something to split: one many-valued observable or a shared composite.
struct Source {
    id: String,
    members: Vec<usize>,
    contexts: Vec<usize>,
    /// Distinct joint outcomes seen in any context, sorted.
    support: Vec<Vec<usize>>,
    /// Per context of `contexts`, the support index of each table row.
    rows: Vec<Vec<usize>>,
}

struct Split {
    id: String,
    source: usize,
    mask: u64,
}

pub fn canonical_binary(b: &Behavior, opts: &CanonicalOptions) -> Result<Behavior, TransformError> {
    let mut cur = once(b, opts.max_generated)?;
    if opts.join_closure {
        loop {
            let next = once(&cur, opts.max_generated)?;
            if next == cur {
                break;
            }
            cur = next;
        }
    }
    Ok(cur)
}

/// Member sets of every intersection of two or more contexts with at least
/// two observables.
fn shared_composites(b: &Behavior, budget: usize) -> Result<BTreeSet<Vec<usize>>, TransformError> {
    let s = b.scenario();
    let ctxs = s.contexts();
    let meet =
        |a: &[usize], c: &[usize]| -> Vec<usize> { a.iter().copied().filter(|q| c.binary_search(q).is_ok()).collect() };
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    for i in 0..ctxs.len() {
        for j in i + 1..ctxs.len() {
            let m = meet(&ctxs[i].members, &ctxs[j].members);
            if m.len() >= 2 {
                found.insert(m);
            }
        }
    }
    let mut frontier: Vec<Vec<usize>> = found.iter().cloned().collect();
    while let Some(a) = frontier.pop() {
        for c in ctxs {
            let m = meet(&a, &c.members);
            if m.len() >= 2 && found.insert(m.clone()) {
                if found.len() > budget {
                    return Err(TransformError::Budget { composite: member_ids(s, &m), budget });
                }
                frontier.push(m);
            }
        }
    }
    Ok(found)
}

fn source(b: &Behavior, id: String, members: Vec<usize>) -> Source {
    let s = b.scenario();
    let contexts = s.contexts_containing(&members);
    let mut projected: Vec<Vec<Vec<usize>>> = Vec::with_capacity(contexts.len());
    let mut support = BTreeSet::new();
    for &c in &contexts {
        let pos: Vec<usize> = members.iter().map(|&q| s.context(c).position(q).unwrap()).collect();
        let rows: Vec<Vec<usize>> = b.table(c).iter().map(|(t, _)| pos.iter().map(|&p| t[p]).collect()).collect();
        support.extend(rows.iter().cloned());
        projected.push(rows);
    }
    let support: Vec<Vec<usize>> = support.into_iter().collect();
    let rows = projected.into_iter().map(|rs| rs.iter().map(|r| support.binary_search(r).unwrap()).collect()).collect();
    Source { id, members, contexts, support, rows }
}

fn once(b: &Behavior, budget: usize) -> Result<Behavior, TransformError> {
    let s = b.scenario();
    let mut sources: Vec<Source> = Vec::new();
    for (q, obs) in s.observables().iter().enumerate() {
        if obs.len() >= 3 {
            sources.push(source(b, obs.id.clone(), vec![q]));
        }
    }
    for m in shared_composites(b, budget)? {
        let id = member_ids(s, &m).join("::join::");
        sources.push(source(b, id, m));
    }
    sources.sort_by(|x, y| x.id.cmp(&y.id));

    // Signature of a binary function: its context set and its value on every
    // table row of those contexts, normalized so the first value is 0.
    let mut seen: HashSet<(Vec<usize>, Vec<bool>)> = HashSet::new();
    let normalize = |mut bits: Vec<bool>| {
        if bits.first() == Some(&true) {
            bits.iter_mut().for_each(|x| *x = !*x);
        }
        bits
    };
    let binary: Vec<usize> = (0..s.observables().len()).filter(|&q| s.observable(q).len() == 2).collect();
    for &q in &binary {
        let ctxs = s.contexts_of(q);
        let mut bits = Vec::new();
        for &c in &ctxs {
            let pos = s.context(c).position(q).unwrap();
            bits.extend(b.table(c).iter().map(|(t, _)| t[pos] == 1));
        }
        seen.insert((ctxs, normalize(bits)));
    }

    // A split can share its name with an observable kept from an earlier
    // canonicalization that lives on other contexts.
    let mut taken: HashSet<String> = binary.iter().map(|&q| s.observable(q).id.clone()).collect();
    let mut generated = 0usize;
    let mut splits: Vec<Split> = Vec::new();
    for (si, src) in sources.iter().enumerate() {
        let k = src.support.len();
        if k < 2 {
            continue;
        }
        let free = k - 1;
        let count = if free >= 63 { usize::MAX } else { (1usize << free) - 1 };
        if count > budget.saturating_sub(generated) {
            return Err(TransformError::Budget { composite: member_ids(s, &src.members), budget });
        }
        generated += count;
        for m in 0..count as u64 {
            let mask = 1 | (m << 1);
            let bits: Vec<bool> = src.rows.iter().flatten().map(|&r| mask >> r & 1 == 1).collect();
            if !seen.insert((src.contexts.clone(), normalize(bits))) {
                continue;
            }
            let labels: Vec<String> = (0..k)
                .filter(|&r| mask >> r & 1 == 1)
                .map(|r| {
                    let parts: Vec<String> = src
                        .members
                        .iter()
                        .zip(&src.support[r])
                        .map(|(&q, &o)| s.observable(q).outcomes[o].clone())
                        .collect();
                    joint_label(&parts)
                })
                .collect();
            let base = format!("{}::split::{{{}}}", src.id, labels.join(","));
            let mut id = base.clone();
            let mut n = 2;
            while !taken.insert(id.clone()) {
                id = format!("{base}::{n}");
                n += 1;
            }
            splits.push(Split { id, source: si, mask });
        }
    }

    let mut observables: Vec<Observable> = binary.iter().map(|&q| s.observable(q).clone()).collect();
    observables.extend(splits.iter().map(|sp| Observable::new(sp.id.clone(), &["0", "1"])));
    let mut contexts = Vec::new();
    for (c, ctx) in s.contexts().iter().enumerate() {
        let kept: Vec<usize> = binary.iter().filter_map(|&q| ctx.position(q)).collect();
        let here: Vec<(&Split, &[usize])> = splits
            .iter()
            .filter_map(|sp| {
                let src = &sources[sp.source];
                src.contexts.iter().position(|&x| x == c).map(|i| (sp, src.rows[i].as_slice()))
            })
            .collect();
        if kept.is_empty() && here.is_empty() {
            continue;
        }
        let mut members: Vec<String> = kept.iter().map(|&p| s.observable(ctx.members[p]).id.clone()).collect();
        members.extend(here.iter().map(|(sp, _)| sp.id.clone()));
        let table = Distribution::from_weights(
            vec![2; members.len()],
            b.table(c).iter().enumerate().map(|(row, (t, w))| {
                let mut key: Vec<usize> = kept.iter().map(|&p| t[p]).collect();
                key.extend(here.iter().map(|(sp, rows)| (sp.mask >> rows[row] & 1) as usize));
                (key, w.clone())
            }),
        );
        contexts.push((ctx.id.clone(), members, table));
    }
    assemble(Draft { observables, contexts })
}
