//! Coupling polytopes: one variable per joint choice of a supported row in
//! every context, with the maximality criteria as extra equalities.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::lp::{feasible, maximize, LinearSystem};
use crate::model::{labels_of, Behavior};
use crate::rational::{format_rational, Rational};

use super::{CouplingAtom, DecideError, Witness, DEFAULT_ATOM_BUDGET};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// Marginal equalities only.
    Plain,
    /// Probability that all copies of q equal u is min_c P(u|q,c).
    Maximal,
    /// Every pair of copies agrees with probability Σ_u min.
    Multimaximal,
}

/// Size of the coupling space as the definitions state it, before pruning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingSpace {
    /// (observable, context) pairs, by context then observable.
    pub pairs: Vec<(String, String)>,
    /// ∏ |O_q| over the pairs.
    pub nominal_atoms: BigUint,
    /// Σ_c |O^c|: one marginal equality per joint outcome of every context.
    pub marginal_equalities: BigUint,
}

pub fn coupling_space(b: &Behavior) -> CouplingSpace {
    let s = b.scenario();
    let mut pairs = Vec::new();
    let mut atoms = BigUint::one();
    let mut eqs = BigUint::zero();
    for c in s.contexts() {
        let mut size = BigUint::one();
        for &q in &c.members {
            pairs.push((s.observable(q).id.clone(), c.id.clone()));
            size *= BigUint::from(s.observable(q).len());
        }
        atoms *= &size;
        eqs += size;
    }
    CouplingSpace { pairs, nominal_atoms: atoms, marginal_equalities: eqs }
}

/// A pruned coupling LP. Atom `i` picks row `atoms[i][c]` of the support of
/// context `c`.
pub struct CouplingProblem {
    pub system: LinearSystem,
    supports: Vec<Vec<Vec<usize>>>,
    atoms: Vec<Vec<usize>>,
}

#[derive(Clone, Copy)]
enum Forbid {
    Equal,
    Unequal,
}

/// Copies of one observable: (context, coordinate) pairs.
fn copies(b: &Behavior, q: usize) -> Vec<(usize, usize)> {
    let s = b.scenario();
    s.contexts_of(q).into_iter().map(|c| (c, s.context(c).position(q).unwrap())).collect()
}

fn sum_min(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x.clone().min(y.clone()))
}

enum Extra {
    Pair { q: usize, a: (usize, usize), b: (usize, usize), rhs: Rational },
    AllEqual { q: usize, u: usize, cs: Vec<(usize, usize)>, rhs: Rational },
}

impl CouplingProblem {
    pub fn build(b: &Behavior, criterion: Criterion, budget: usize) -> Result<Self, DecideError> {
        let s = b.scenario();
        let n = s.contexts().len();
        let supports: Vec<Vec<Vec<usize>>> = b.tables().iter().map(|t| t.support()).collect();

        // Pairwise conditions, checked once both contexts are fixed.
        let mut pair_forbid: Vec<Vec<(Forbid, (usize, usize), (usize, usize))>> = vec![Vec::new(); n];
        // All copies equal to u is forbidden; checked at the last copy.
        let mut all_forbid: Vec<Vec<(usize, Vec<(usize, usize)>)>> = vec![Vec::new(); n];
        let mut extras = Vec::new();
        for q in 0..s.observables().len() {
            let cs = copies(b, q);
            if cs.len() < 2 {
                continue;
            }
            let marg: Vec<Vec<Rational>> = cs.iter().map(|&(c, _)| b.single_marginal(q, c)).collect();
            match criterion {
                Criterion::Plain => {}
                Criterion::Multimaximal => {
                    for i in 0..cs.len() {
                        for j in i + 1..cs.len() {
                            let m = sum_min(&marg[i], &marg[j]);
                            if m.is_zero() {
                                pair_forbid[cs[j].0].push((Forbid::Equal, cs[i], cs[j]));
                            } else if m.is_one() {
                                pair_forbid[cs[j].0].push((Forbid::Unequal, cs[i], cs[j]));
                            } else {
                                extras.push(Extra::Pair { q, a: cs[i], b: cs[j], rhs: m });
                            }
                        }
                    }
                }
                Criterion::Maximal => {
                    let k = s.observable(q).len();
                    let mins: Vec<Rational> =
                        (0..k).map(|u| marg.iter().map(|m| m[u].clone()).min().unwrap()).collect();
                    let total = mins.iter().fold(Rational::zero(), |a, x| a + x);
                    if total.is_one() {
                        for w in cs.windows(2) {
                            pair_forbid[w[1].0].push((Forbid::Unequal, w[0], w[1]));
                        }
                    }
                    for (u, m) in mins.into_iter().enumerate() {
                        if m.is_zero() {
                            all_forbid[cs.last().unwrap().0].push((u, cs.clone()));
                        } else {
                            extras.push(Extra::AllEqual { q, u, cs: cs.clone(), rhs: m });
                        }
                    }
                }
            }
        }

        let mut atoms: Vec<Vec<usize>> = Vec::new();
        let mut cur: Vec<usize> = Vec::with_capacity(n);
        let mut nodes = 0usize;
        let node_cap = budget.saturating_mul(16);
        let value = |cur: &[usize], (c, p): (usize, usize)| supports[c][cur[c]][p];
        fn dfs(
            depth: usize,
            n: usize,
            cur: &mut Vec<usize>,
            atoms: &mut Vec<Vec<usize>>,
            nodes: &mut usize,
            ctx: &dyn Fn(&[usize], usize) -> bool,
            width: &dyn Fn(usize) -> usize,
            limits: (usize, usize),
        ) -> Result<(), ()> {
            if depth == n {
                atoms.push(cur.clone());
                return if atoms.len() > limits.0 { Err(()) } else { Ok(()) };
            }
            for r in 0..width(depth) {
                *nodes += 1;
                if *nodes > limits.1 {
                    return Err(());
                }
                cur.push(r);
                if ctx(cur, depth) {
                    dfs(depth + 1, n, cur, atoms, nodes, ctx, width, limits)?;
                }
                cur.pop();
            }
            Ok(())
        }
        let ok = |cur: &[usize], d: usize| -> bool {
            for &(kind, x, y) in &pair_forbid[d] {
                let eq = value(cur, x) == value(cur, y);
                match kind {
                    Forbid::Equal if eq => return false,
                    Forbid::Unequal if !eq => return false,
                    _ => {}
                }
            }
            for (u, cs) in &all_forbid[d] {
                if cs.iter().all(|&x| value(cur, x) == *u) {
                    return false;
                }
            }
            true
        };
        let width = |d: usize| supports[d].len();
        if dfs(0, n, &mut cur, &mut atoms, &mut nodes, &ok, &width, (budget, node_cap)).is_err() {
            return Err(DecideError::Budget { what: "coupling atoms".into(), count: atoms.len().max(nodes), budget });
        }

        let mut system = LinearSystem::new(atoms.len());
        for c in 0..n {
            let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); supports[c].len()];
            for (i, a) in atoms.iter().enumerate() {
                by_row[a[c]].push(i);
            }
            for (r, vars) in by_row.iter().enumerate() {
                let labels = labels_of(s, c, &supports[c][r]);
                let label = format!("P({} | {})", labels.join(","), s.context(c).id);
                system.add_indicator_row(vars, b.table(c).get(&supports[c][r]), label);
            }
        }
        for e in extras {
            match e {
                Extra::Pair { q, a, b: bb, rhs } => {
                    let vars: Vec<usize> =
                        (0..atoms.len()).filter(|&i| value(&atoms[i], a) == value(&atoms[i], bb)).collect();
                    let label =
                        format!("agree({} @ {}, {})", s.observable(q).id, s.context(a.0).id, s.context(bb.0).id);
                    system.add_indicator_row(&vars, rhs, label);
                }
                Extra::AllEqual { q, u, cs, rhs } => {
                    let vars: Vec<usize> =
                        (0..atoms.len()).filter(|&i| cs.iter().all(|&x| value(&atoms[i], x) == u)).collect();
                    let label = format!("all({} = {})", s.observable(q).id, s.observable(q).outcomes[u]);
                    system.add_indicator_row(&vars, rhs, label);
                }
            }
        }
        Ok(CouplingProblem { system, supports, atoms })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    fn atom(&self, b: &Behavior, i: usize, p: Rational) -> CouplingAtom {
        let s = b.scenario();
        let mut assignment = BTreeMap::new();
        for (c, &r) in self.atoms[i].iter().enumerate() {
            let ctx = s.context(c);
            for (k, &q) in ctx.members.iter().enumerate() {
                let obs = s.observable(q);
                assignment.insert(copy_key(&obs.id, &ctx.id), obs.outcomes[self.supports[c][r][k]].clone());
            }
        }
        CouplingAtom { assignment, p }
    }

    /// Decides feasibility, returning the coupling or the Farkas rows.
    pub fn solve(&self, b: &Behavior) -> (bool, Witness) {
        let r = feasible(&self.system);
        if let Some(x) = r.witness {
            let atoms =
                x.into_iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(i, p)| self.atom(b, i, p)).collect();
            (true, Witness::Coupling { atoms })
        } else {
            let y = r.certificate.expect("infeasible systems carry a certificate");
            (false, farkas_witness(&self.system, y))
        }
    }
}

pub(crate) fn farkas_witness(system: &LinearSystem, y: Vec<Rational>) -> Witness {
    let rows = system.rows().iter().zip(y).filter(|(_, v)| !v.is_zero()).map(|(r, v)| (r.label.clone(), v)).collect();
    Witness::Farkas { rows }
}

pub fn copy_key(q: &str, c: &str) -> String {
    format!("{q}@{c}")
}

/// Largest Pr[T^c_q = T^{c'}_q] over all couplings of the behavior.
pub fn coupling_max_agreement(b: &Behavior, q: &str, c1: &str, c2: &str) -> Result<Rational, DecideError> {
    let s = b.scenario();
    let qi = s.require_observable(q).map_err(DecideError::Model)?;
    let a = s.require_context(c1).map_err(DecideError::Model)?;
    let bb = s.require_context(c2).map_err(DecideError::Model)?;
    let pa = s.context(a).position(qi);
    let pb = s.context(bb).position(qi);
    let (Some(pa), Some(pb)) = (pa, pb) else {
        return Err(DecideError::NotInBoth { observable: q.into(), first: c1.into(), second: c2.into() });
    };
    if a == bb {
        return Err(DecideError::SameContext(c1.into()));
    }
    let p = CouplingProblem::build(b, Criterion::Plain, DEFAULT_ATOM_BUDGET)?;
    let objective: Vec<Rational> =
        p.atoms
            .iter()
            .map(|at| {
                if p.supports[a][at[a]][pa] == p.supports[bb][at[bb]][pb] {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
    let (v, _) = maximize(&p.system, &objective).map_err(DecideError::Lp)?;
    Ok(v)
}

/// Σ over atoms where the copies of q in c and c' differ.
pub fn direct_influence(atoms: &[CouplingAtom], q: &str, c1: &str, c2: &str) -> Result<Rational, DecideError> {
    if c1 == c2 {
        return Err(DecideError::SameContext(c1.into()));
    }
    let (k1, k2) = (copy_key(q, c1), copy_key(q, c2));
    let mut sum = Rational::zero();
    for a in atoms {
        match (a.assignment.get(&k1), a.assignment.get(&k2)) {
            (Some(x), Some(y)) => {
                if x != y {
                    sum += &a.p;
                }
            }
            _ => return Err(DecideError::NotInBoth { observable: q.into(), first: c1.into(), second: c2.into() }),
        }
    }
    Ok(sum)
}

/// Exact replay of a coupling: marginals and the criterion's equalities.
pub fn check_coupling(b: &Behavior, criterion: Criterion, atoms: &[CouplingAtom]) -> Result<(), String> {
    let s = b.scenario();
    let total = atoms.iter().fold(Rational::zero(), |a, x| a + &x.p);
    if !total.is_one() || atoms.iter().any(|a| a.p < Rational::zero()) {
        return Err(format!("weights sum to {}", format_rational(&total)));
    }
    let value = |a: &CouplingAtom, q: usize, c: usize| -> Result<usize, String> {
        let (obs, ctx) = (s.observable(q), s.context(c));
        let label = a
            .assignment
            .get(&copy_key(&obs.id, &ctx.id))
            .ok_or_else(|| format!("atom misses {}@{}", obs.id, ctx.id))?;
        obs.outcome_index(label).ok_or_else(|| format!("unknown label {label:?} for {}", obs.id))
    };
    for (c, ctx) in s.contexts().iter().enumerate() {
        let mut got: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for a in atoms {
            let t = ctx.members.iter().map(|&q| value(a, q, c)).collect::<Result<Vec<_>, _>>()?;
            *got.entry(t).or_insert_with(Rational::zero) += &a.p;
        }
        got.retain(|_, w| !w.is_zero());
        let want: BTreeMap<Vec<usize>, Rational> = b.table(c).iter().map(|(k, w)| (k.clone(), w.clone())).collect();
        if got != want {
            return Err(format!("marginal mismatch in context {}", ctx.id));
        }
    }
    for q in 0..s.observables().len() {
        let cs = s.contexts_of(q);
        if cs.len() < 2 {
            continue;
        }
        let marg: Vec<Vec<Rational>> = cs.iter().map(|&c| b.single_marginal(q, c)).collect();
        match criterion {
            Criterion::Plain => {}
            Criterion::Multimaximal => {
                for i in 0..cs.len() {
                    for j in i + 1..cs.len() {
                        let mut agree = Rational::zero();
                        for a in atoms {
                            if value(a, q, cs[i])? == value(a, q, cs[j])? {
                                agree += &a.p;
                            }
                        }
                        if agree != sum_min(&marg[i], &marg[j]) {
                            return Err(format!(
                                "{} agrees with probability {} between {} and {}",
                                s.observable(q).id,
                                format_rational(&agree),
                                s.context(cs[i]).id,
                                s.context(cs[j]).id
                            ));
                        }
                    }
                }
            }
            Criterion::Maximal => {
                for u in 0..s.observable(q).len() {
                    let want = marg.iter().map(|m| m[u].clone()).min().unwrap();
                    let mut got = Rational::zero();
                    for a in atoms {
                        let mut all = true;
                        for &c in &cs {
                            all &= value(a, q, c)? == u;
                        }
                        if all {
                            got += &a.p;
                        }
                    }
                    if got != want {
                        return Err(format!("{} is jointly {} with the wrong probability", s.observable(q).id, u));
                    }
                }
            }
        }
    }
    Ok(())
}
