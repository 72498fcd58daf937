//! Isomorphism search between behaviors: bijections of observables, contexts
//! and per-observable outcome sets that carry one behavior onto the other.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Behavior, Distribution};
use crate::rational::Rational;

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Isomorphism {
    pub observables: BTreeMap<String, String>,
    pub contexts: BTreeMap<String, String>,
    pub outcomes: BTreeMap<String, BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("isomorphism search exceeded its budget of {budget} nodes")]
pub struct IsoBudgetExceeded {
    pub budget: u64,
}

impl Isomorphism {
    pub fn inverse(&self) -> Isomorphism {
        let flip = |m: &BTreeMap<String, String>| m.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
        Isomorphism {
            observables: flip(&self.observables),
            contexts: flip(&self.contexts),
            outcomes: self.outcomes.iter().map(|(q, h)| (self.observables[q].clone(), flip(h))).collect(),
        }
    }

    /// Checks the defining equation P1(s|c) = P2(h(s)|g(c)) exactly.
    pub fn verify(&self, p1: &Behavior, p2: &Behavior) -> bool {
        let (s1, s2) = (p1.scenario(), p2.scenario());
        if s1.observables().len() != s2.observables().len()
            || s1.contexts().len() != s2.contexts().len()
            || self.observables.len() != s1.observables().len()
            || self.contexts.len() != s1.contexts().len()
        {
            return false;
        }
        for (c1, ctx1) in s1.contexts().iter().enumerate() {
            let Some(c2) = self.contexts.get(&ctx1.id).and_then(|id| s2.context_index(id)) else {
                return false;
            };
            let ctx2 = s2.context(c2);
            if ctx1.members.len() != ctx2.members.len() {
                return false;
            }
            let mut coord = Vec::new();
            let mut maps = Vec::new();
            for &q1 in &ctx1.members {
                let o1 = s1.observable(q1);
                let Some(q2) = self.observables.get(&o1.id).and_then(|id| s2.observable_index(id)) else {
                    return false;
                };
                let Some(pos) = ctx2.position(q2) else { return false };
                coord.push(pos);
                let o2 = s2.observable(q2);
                let mut m = Vec::new();
                for label in &o1.outcomes {
                    match self.outcomes.get(&o1.id).and_then(|h| h.get(label)).and_then(|l| o2.outcome_index(l)) {
                        Some(i) => m.push(i),
                        None => return false,
                    }
                }
                maps.push(m);
            }
            let mapped = remap(p1.table(c1), &coord, &maps, s2.shape(c2));
            if &mapped != p2.table(c2) {
                return false;
            }
        }
        true
    }
}

fn remap(d: &Distribution, coord: &[usize], maps: &[Vec<usize>], shape: Vec<usize>) -> Distribution {
    d.push_forward(shape, |t| {
        let mut out = vec![0; t.len()];
        for (i, &o) in t.iter().enumerate() {
            out[coord[i]] = maps[i][o];
        }
        out
    })
}

type TableKey = Vec<(Vec<usize>, Rational)>;

fn key(d: &Distribution) -> TableKey {
    d.iter().map(|(k, w)| (k.clone(), w.clone())).collect()
}

struct Side<'a> {
    b: &'a Behavior,
    cooc: Vec<Vec<usize>>,
    sig: Vec<(usize, usize, Vec<usize>, Vec<Vec<Rational>>)>,
    marginals: Vec<Vec<Vec<Rational>>>,
}

impl<'a> Side<'a> {
    fn new(b: &'a Behavior) -> Self {
        let s = b.scenario();
        let n = s.observables().len();
        let mut cooc = vec![vec![0; n]; n];
        for ctx in s.contexts() {
            for &a in &ctx.members {
                for &bb in &ctx.members {
                    cooc[a][bb] += 1;
                }
            }
        }
        let mut marginals = Vec::with_capacity(n);
        let mut sig = Vec::with_capacity(n);
        for q in 0..n {
            let ctxs = s.contexts_of(q);
            let m: Vec<Vec<Rational>> = ctxs.iter().map(|&c| b.single_marginal(q, c)).collect();
            let mut sizes: Vec<usize> = ctxs.iter().map(|&c| s.context(c).members.len()).collect();
            sizes.sort_unstable();
            let mut sorted: Vec<Vec<Rational>> = m
                .iter()
                .map(|v| {
                    let mut v = v.clone();
                    v.sort();
                    v
                })
                .collect();
            sorted.sort();
            sig.push((s.observable(q).len(), ctxs.len(), sizes, sorted));
            marginals.push(m);
        }
        Side { b, cooc, sig, marginals }
    }
}

struct Search<'a> {
    left: Side<'a>,
    right: Side<'a>,
    order: Vec<usize>,
    candidates: Vec<Vec<usize>>,
    f: Vec<Option<usize>>,
    used: Vec<bool>,
    nodes: u64,
    budget: u64,
}

impl<'a> Search<'a> {
    fn tick(&mut self) -> Result<(), IsoBudgetExceeded> {
        self.nodes += 1;
        if self.nodes > self.budget {
            Err(IsoBudgetExceeded { budget: self.budget })
        } else {
            Ok(())
        }
    }

    fn assign_observables(&mut self, depth: usize) -> Result<Option<Isomorphism>, IsoBudgetExceeded> {
        self.tick()?;
        if depth == self.order.len() {
            return self.with_observables_fixed();
        }
        let q = self.order[depth];
        for i in 0..self.candidates[q].len() {
            let r = self.candidates[q][i];
            if self.used[r] {
                continue;
            }
            let consistent = self.order[..depth].iter().all(|&p| {
                let fp = self.f[p].unwrap();
                self.left.cooc[q][p] == self.right.cooc[r][fp]
            }) && self.left.cooc[q][q] == self.right.cooc[r][r];
            if !consistent {
                continue;
            }
            self.f[q] = Some(r);
            self.used[r] = true;
            if let Some(found) = self.assign_observables(depth + 1)? {
                return Ok(Some(found));
            }
            self.f[q] = None;
            self.used[r] = false;
        }
        Ok(None)
    }

    /// With f fixed, groups contexts by image member set and searches outcome
    /// bijections.
    fn with_observables_fixed(&mut self) -> Result<Option<Isomorphism>, IsoBudgetExceeded> {
        let (s1, s2) = (self.left.b.scenario(), self.right.b.scenario());
        let f: Vec<usize> = self.f.iter().map(|x| x.unwrap()).collect();
        let mut classes: BTreeMap<Vec<usize>, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
        for (c, ctx) in s1.contexts().iter().enumerate() {
            let mut img: Vec<usize> = ctx.members.iter().map(|&q| f[q]).collect();
            img.sort_unstable();
            classes.entry(img).or_default().0.push(c);
        }
        for (c, ctx) in s2.contexts().iter().enumerate() {
            match classes.get_mut(&ctx.members) {
                Some(e) => e.1.push(c),
                None => return Ok(None),
            }
        }
        if classes.values().any(|(a, b)| a.len() != b.len()) {
            return Ok(None);
        }
        let n = s1.observables().len();
        let mut perms: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n);
        for q in 0..n {
            let r = f[q];
            let mut target: Vec<Vec<Rational>> = self.right.marginals[r].clone();
            target.sort();
            let mut ok = Vec::new();
            for p in permutations(s1.observable(q).len()) {
                self.tick()?;
                let mut mapped: Vec<Vec<Rational>> = self.left.marginals[q]
                    .iter()
                    .map(|v| {
                        let mut w = v.clone();
                        for (o, x) in v.iter().enumerate() {
                            w[p[o]] = x.clone();
                        }
                        w
                    })
                    .collect();
                mapped.sort();
                if mapped == target {
                    ok.push(p);
                }
            }
            if ok.is_empty() {
                return Ok(None);
            }
            perms.push(ok);
        }
        let classes: Vec<(Vec<usize>, Vec<usize>)> = classes.into_values().collect();
        let mut h: Vec<Option<Vec<usize>>> = vec![None; n];
        let order: Vec<usize> = (0..n).collect();
        self.assign_outcomes(&f, &perms, &classes, &order, 0, &mut h)
    }

    fn assign_outcomes(
        &mut self,
        f: &[usize],
        perms: &[Vec<Vec<usize>>],
        classes: &[(Vec<usize>, Vec<usize>)],
        order: &[usize],
        depth: usize,
        h: &mut Vec<Option<Vec<usize>>>,
    ) -> Result<Option<Isomorphism>, IsoBudgetExceeded> {
        self.tick()?;
        if depth == order.len() {
            return Ok(self.match_contexts(f, h, classes));
        }
        let q = order[depth];
        for p in &perms[q] {
            h[q] = Some(p.clone());
            if self.partial_tables_agree(f, h, classes) {
                if let Some(found) = self.assign_outcomes(f, perms, classes, order, depth + 1, h)? {
                    return Ok(Some(found));
                }
            }
        }
        h[q] = None;
        Ok(None)
    }

    /// Compares, within each context class, the multisets of marginals on the
    /// observables whose outcome map is already chosen.
    fn partial_tables_agree(
        &self,
        f: &[usize],
        h: &[Option<Vec<usize>>],
        classes: &[(Vec<usize>, Vec<usize>)],
    ) -> bool {
        let (s1, s2) = (self.left.b.scenario(), self.right.b.scenario());
        for (lc, rc) in classes {
            if lc.len() < 2 {
                continue;
            }
            let ctx1 = s1.context(lc[0]);
            let assigned: Vec<usize> = ctx1.members.iter().copied().filter(|&q| h[q].is_some()).collect();
            if assigned.is_empty() {
                continue;
            }
            let mut right_members: Vec<usize> = assigned.iter().map(|&q| f[q]).collect();
            right_members.sort_unstable();
            let coord: Vec<usize> = assigned.iter().map(|&q| right_members.binary_search(&f[q]).unwrap()).collect();
            let maps: Vec<Vec<usize>> = assigned.iter().map(|&q| h[q].clone().unwrap()).collect();
            let shape: Vec<usize> = right_members.iter().map(|&r| s2.observable(r).len()).collect();
            let mut left: Vec<TableKey> = lc
                .iter()
                .map(|&c| {
                    let m = self.left.b.marginal_idx(&assigned, c).unwrap();
                    key(&remap(&m, &coord, &maps, shape.clone()))
                })
                .collect();
            let mut right: Vec<TableKey> =
                rc.iter().map(|&c| key(&self.right.b.marginal_idx(&right_members, c).unwrap())).collect();
            left.sort();
            right.sort();
            if left != right {
                return false;
            }
        }
        true
    }

    fn match_contexts(
        &self,
        f: &[usize],
        h: &[Option<Vec<usize>>],
        classes: &[(Vec<usize>, Vec<usize>)],
    ) -> Option<Isomorphism> {
        let (s1, s2) = (self.left.b.scenario(), self.right.b.scenario());
        let mut g = BTreeMap::new();
        for (lc, rc) in classes {
            let mut free: Vec<usize> = rc.clone();
            for &c1 in lc {
                let ctx1 = s1.context(c1);
                let members2 = &s2.context(rc[0]).members;
                let coord: Vec<usize> = ctx1.members.iter().map(|&q| members2.binary_search(&f[q]).unwrap()).collect();
                let maps: Vec<Vec<usize>> = ctx1.members.iter().map(|&q| h[q].clone().unwrap()).collect();
                let mapped = remap(self.left.b.table(c1), &coord, &maps, s2.shape(rc[0]));
                let pos = free.iter().position(|&c2| self.right.b.table(c2) == &mapped)?;
                let c2 = free.remove(pos);
                g.insert(ctx1.id.clone(), s2.context(c2).id.clone());
            }
        }
        let mut observables = BTreeMap::new();
        let mut outcomes = BTreeMap::new();
        for (q, &r) in f.iter().enumerate() {
            let o1 = s1.observable(q);
            let o2 = s2.observable(r);
            observables.insert(o1.id.clone(), o2.id.clone());
            let p = h[q].as_ref().unwrap();
            outcomes.insert(
                o1.id.clone(),
                o1.outcomes.iter().enumerate().map(|(i, l)| (l.clone(), o2.outcomes[p[i]].clone())).collect(),
            );
        }
        Some(Isomorphism { observables, contexts: g, outcomes })
    }
}

/// All permutations of 0..n, identity first.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

pub fn find_isomorphism(p1: &Behavior, p2: &Behavior) -> Result<Option<Isomorphism>, IsoBudgetExceeded> {
    find_isomorphism_with_budget(p1, p2, DEFAULT_NODE_BUDGET)
}

pub fn find_isomorphism_with_budget(
    p1: &Behavior,
    p2: &Behavior,
    budget: u64,
) -> Result<Option<Isomorphism>, IsoBudgetExceeded> {
    let (s1, s2) = (p1.scenario(), p2.scenario());
    if s1.observables().len() != s2.observables().len() || s1.contexts().len() != s2.contexts().len() {
        return Ok(None);
    }
    let sizes = |s: &crate::model::Scenario| {
        let mut v: Vec<usize> = s.contexts().iter().map(|c| c.members.len()).collect();
        v.sort_unstable();
        v
    };
    if sizes(s1) != sizes(s2) {
        return Ok(None);
    }
    let left = Side::new(p1);
    let right = Side::new(p2);
    let n = s1.observables().len();
    let mut candidates = Vec::with_capacity(n);
    for q in 0..n {
        let mut cands: Vec<usize> = (0..n).filter(|&r| left.sig[q] == right.sig[r]).collect();
        if cands.is_empty() {
            return Ok(None);
        }
        let id = &s1.observable(q).id;
        cands.sort_by_key(|&r| (&s2.observable(r).id != id, r));
        candidates.push(cands);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&q| (candidates[q].len(), q));
    let mut search =
        Search { left, right, order, candidates, f: vec![None; n], used: vec![false; n], nodes: 0, budget };
    search.assign_observables(0)
}
