//! Global probability assignments: distributions over one outcome per
//! observable whose context marginals reproduce the behavior.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::lp::{feasible, LinearSystem};
use crate::model::{labels_of, Behavior};
use crate::rational::Rational;

use super::coupling::farkas_witness;
use super::{DecideError, GlobalAtom, Witness};

/// Pruned global-assignment LP: only assignments that restrict to a
/// supported row in every context get a variable.
pub struct GlobalProblem {
    pub system: LinearSystem,
    assignments: Vec<Vec<usize>>,
}

impl GlobalProblem {
    pub fn build(b: &Behavior, budget: usize) -> Result<Self, DecideError> {
        let s = b.scenario();
        let nq = s.observables().len();
        // Outcomes that occur somewhere; others carry no global weight.
        let mut allowed: Vec<Vec<usize>> = vec![Vec::new(); nq];
        for (c, ctx) in s.contexts().iter().enumerate() {
            for (t, _) in b.table(c).iter() {
                for (k, &q) in ctx.members.iter().enumerate() {
                    if !allowed[q].contains(&t[k]) {
                        allowed[q].push(t[k]);
                    }
                }
            }
        }
        for a in allowed.iter_mut() {
            a.sort_unstable();
            if a.is_empty() {
                a.push(0);
            }
        }
        // Contexts become checkable once their largest member is assigned.
        let mut closes: Vec<Vec<usize>> = vec![Vec::new(); nq];
        for (c, ctx) in s.contexts().iter().enumerate() {
            if let Some(&last) = ctx.members.last() {
                closes[last].push(c);
            }
        }
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(nq);
        let mut nodes = 0usize;
        let cap = budget.saturating_mul(16);
        let mut stack: Vec<usize> = vec![0];
        // Iterative depth-first enumeration; stack[d] is the next choice index at depth d.
        while let Some(choice) = stack.last().copied() {
            let d = stack.len() - 1;
            if d == nq {
                out.push(cur.clone());
                if out.len() > budget {
                    return Err(DecideError::Budget { what: "global assignments".into(), count: out.len(), budget });
                }
                stack.pop();
                cur.pop();
                continue;
            }
            if choice >= allowed[d].len() {
                stack.pop();
                if !stack.is_empty() {
                    cur.pop();
                }
                continue;
            }
            *stack.last_mut().unwrap() += 1;
            nodes += 1;
            if nodes > cap {
                return Err(DecideError::Budget { what: "global assignments".into(), count: nodes, budget });
            }
            cur.push(allowed[d][choice]);
            let fits = closes[d].iter().all(|&c| {
                let t: Vec<usize> = s.context(c).members.iter().map(|&q| cur[q]).collect();
                !b.table(c).get(&t).is_zero()
            });
            if fits {
                stack.push(0);
            } else {
                cur.pop();
            }
        }

        let mut system = LinearSystem::new(out.len());
        for (c, ctx) in s.contexts().iter().enumerate() {
            let mut by_row: BTreeMap<Vec<usize>, Vec<usize>> =
                b.table(c).iter().map(|(k, _)| (k.clone(), Vec::new())).collect();
            for (i, g) in out.iter().enumerate() {
                let t: Vec<usize> = ctx.members.iter().map(|&q| g[q]).collect();
                by_row.get_mut(&t).expect("pruned to supported rows").push(i);
            }
            for (t, vars) in by_row {
                let label = format!("P({} | {})", labels_of(s, c, &t).join(","), ctx.id);
                system.add_indicator_row(&vars, b.table(c).get(&t), label);
            }
        }
        Ok(GlobalProblem { system, assignments: out })
    }

    pub fn assignment_count(&self) -> usize {
        self.assignments.len()
    }

    pub fn solve(&self, b: &Behavior) -> (bool, Witness) {
        let s = b.scenario();
        let r = feasible(&self.system);
        match r.witness {
            Some(x) => {
                let atoms = x
                    .into_iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(i, p)| GlobalAtom {
                        assignment: self.assignments[i]
                            .iter()
                            .enumerate()
                            .map(|(q, &o)| (s.observable(q).id.clone(), s.observable(q).outcomes[o].clone()))
                            .collect(),
                        p,
                    })
                    .collect();
                (true, Witness::Global { atoms })
            }
            None => (false, farkas_witness(&self.system, r.certificate.expect("certificate"))),
        }
    }
}

/// Exact replay of a global assignment against every context table.
pub fn check_global(b: &Behavior, atoms: &[GlobalAtom]) -> Result<(), String> {
    let s = b.scenario();
    for (c, ctx) in s.contexts().iter().enumerate() {
        let mut got: BTreeMap<Vec<usize>, Rational> = BTreeMap::new();
        for a in atoms {
            let mut t = Vec::with_capacity(ctx.members.len());
            for &q in &ctx.members {
                let obs = s.observable(q);
                let label = a.assignment.get(&obs.id).ok_or_else(|| format!("atom misses {}", obs.id))?;
                t.push(obs.outcome_index(label).ok_or_else(|| format!("unknown label {label:?}"))?);
            }
            *got.entry(t).or_insert_with(Rational::zero) += &a.p;
        }
        got.retain(|_, w| !w.is_zero());
        let want: BTreeMap<Vec<usize>, Rational> = b.table(c).iter().map(|(k, w)| (k.clone(), w.clone())).collect();
        if got != want {
            return Err(format!("marginal mismatch in context {}", ctx.id));
        }
    }
    Ok(())
}
