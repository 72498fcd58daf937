//! Randomized axiom checks. Every trial derives its own seed from the run
//! seed, the (extension, axiom) cell and the trial index, so parallel and
//! serial runs agree.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::deciders::Extension;
use crate::model::Behavior;
use crate::transforms::{canonical_binary, joint_label, rename, CanonicalOptions, Renaming, Step};

use super::generator::{random_behavior, GenFlags, GenParams};
use super::{check_case, AuditError, AuditOutcome, AuditReport, AxiomId, Case, CaseOutcome};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one trial of one cell.
pub fn sub_seed(seed: u64, ext: Extension, axiom: AxiomId, trial: u64) -> u64 {
    let e = Extension::ALL.iter().position(|&x| x == ext).unwrap() as u64;
    let a = AxiomId::ALL.iter().position(|&x| x == axiom).unwrap() as u64;
    splitmix(splitmix(splitmix(seed) ^ (e << 8 | a)) ^ trial)
}

/// Input flavour by trial: nondisturbing, deterministic, unconstrained,
/// consistently connected.
fn flags_for(trial: u64, binary: bool) -> GenFlags {
    let mut f = GenFlags { binary, ..Default::default() };
    match trial % 4 {
        0 => f.nondisturbing = true,
        1 => f.deterministic = true,
        2 => {}
        _ => f.consistently_connected = true,
    }
    f
}

fn input(ext: Extension, params: GenParams, seed: u64, prefix: &str) -> Result<Behavior, AuditError> {
    let mut b = random_behavior(&params, seed).map_err(|e| AuditError::Malformed(e.to_string()))?;
    if !prefix.is_empty() {
        b = renamed_apart(&b, prefix)?;
    }
    if matches!(ext, Extension::Cbcbd2Lifted | Extension::Cbcbd2Strict) {
        return Ok(canonical_binary(&b, &CanonicalOptions::default())?);
    }
    Ok(b)
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    &xs[rng.gen_range(0..xs.len())]
}

/// Random surjection from `n` items onto `m` targets.
fn surjection(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut f = vec![0; n];
    for (i, &x) in order.iter().enumerate() {
        f[x] = if i < m { i } else { rng.gen_range(0..m) };
    }
    f
}

fn labels(xs: &[usize]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

fn renamed_apart(b: &Behavior, prefix: &str) -> Result<Behavior, AuditError> {
    let observables = b.observables().iter().map(|q| (q.id.clone(), format!("{prefix}{}", q.id))).collect();
    let contexts = b.contexts().iter().map(|c| (c.id.clone(), format!("{prefix}{}", c.id))).collect();
    Ok(rename(b, &Renaming { observables, contexts, outcomes: BTreeMap::new() })?)
}

/// A random instance of `axiom`'s transformation for `ext`.
pub fn random_case(
    ext: Extension,
    axiom: AxiomId,
    params: &GenParams,
    seed: u64,
    trial: u64,
) -> Result<Case, AuditError> {
    let binary = ext.is_binary();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ 0x5eed));
    let base = params.with_flags(GenFlags { binary, ..params.flags });
    let flags = match axiom {
        AxiomId::KsCompat => GenFlags { nondisturbing: true, binary, ..Default::default() },
        AxiomId::Determinism => GenFlags {
            deterministic: true,
            consistently_connected: trial.is_multiple_of(2),
            binary,
            ..Default::default()
        },
        _ => flags_for(trial, binary),
    };
    if matches!(axiom, AxiomId::Independence | AxiomId::IndependenceCanonical) {
        let tiny = GenParams { flags: flags_for(trial, binary), ..GenParams::tiny() };
        let p1 = input(ext, tiny, splitmix(seed ^ 1), "")?;
        let other = GenParams { flags: flags_for(trial / 4 + trial, binary), ..GenParams::tiny() };
        let p2 = input(ext, other, splitmix(seed ^ 2), "r")?;
        let mut steps = vec![Step::product_with(&p2, false)];
        if axiom == AxiomId::IndependenceCanonical {
            steps.push(Step::CanonicalBinary { max_generated: None, join_closure: false });
        }
        return Ok(Case::new(vec![p1, p2], steps));
    }
    let p = input(ext, base.with_flags(flags), splitmix(seed ^ 1), "")?;
    let s = p.scenario();
    let step = match axiom {
        AxiomId::KsCompat | AxiomId::Determinism => None,
        AxiomId::Isomorphism => {
            let mut perm: Vec<usize> = (0..s.observables().len()).collect();
            perm.shuffle(&mut rng);
            let observables = s.observables().iter().zip(&perm).map(|(q, i)| (q.id.clone(), format!("o{i}"))).collect();
            let mut cperm: Vec<usize> = (0..s.contexts().len()).collect();
            cperm.shuffle(&mut rng);
            let contexts = s.contexts().iter().zip(&cperm).map(|(c, i)| (c.id.clone(), format!("k{i}"))).collect();
            let outcomes = s
                .observables()
                .iter()
                .map(|q| {
                    let mut l = q.outcomes.clone();
                    l.shuffle(&mut rng);
                    (q.id.clone(), q.outcomes.iter().cloned().zip(l).collect())
                })
                .collect();
            Some(Step::Rename { observables, contexts, outcomes })
        }
        AxiomId::Nestedness => {
            let all: Vec<(String, String)> = s
                .contexts()
                .iter()
                .flat_map(|c| c.members.iter().map(move |&q| (s.observable(q).id.clone(), c.id.clone())))
                .collect();
            let mut keep: Vec<(String, String)> = all.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
            if keep.is_empty() {
                keep.push(pick(&mut rng, &all).clone());
            }
            Some(Step::Marginalize { keep })
        }
        AxiomId::Coarsening => {
            let q = pick(&mut rng, s.observables()).clone();
            let n = q.len();
            let m = if binary { n } else { rng.gen_range(1..=n) };
            let f = surjection(&mut rng, n, m);
            let map = q.outcomes.iter().zip(&f).map(|(u, &t)| (u.clone(), t.to_string())).collect();
            Some(Step::Coarsen {
                q: q.id.clone(),
                map,
                targets: Some(labels(&(0..m).collect::<Vec<_>>())),
                new_id: None,
            })
        }
        AxiomId::PostProcessing | AxiomId::Joining => {
            let c = pick(&mut rng, s.contexts()).clone();
            let mut members: Vec<usize> = c.members.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
            if members.is_empty() {
                members.push(*pick(&mut rng, &c.members));
            }
            members.shuffle(&mut rng);
            let composite: Vec<String> = members.iter().map(|&q| s.observable(q).id.clone()).collect();
            if axiom == AxiomId::Joining {
                Some(Step::Join { composite, new_id: "j".into() })
            } else {
                let radices: Vec<usize> = members.iter().map(|&q| s.observable(q).len()).collect();
                let tuples: Vec<Vec<usize>> = crate::transforms::domain(&radices).collect();
                let m = if binary { 2 } else { rng.gen_range(1..=tuples.len().min(3)) };
                let f = surjection(&mut rng, tuples.len(), m);
                let map = tuples
                    .iter()
                    .zip(&f)
                    .map(|(t, &v)| {
                        let ls: Vec<String> =
                            members.iter().zip(t).map(|(&q, &o)| s.observable(q).outcomes[o].clone()).collect();
                        (joint_label(&ls), v.to_string())
                    })
                    .collect();
                Some(Step::PostProcess {
                    composite,
                    map,
                    targets: Some(labels(&(0..m).collect::<Vec<_>>())),
                    new_id: "f".into(),
                })
            }
        }
        AxiomId::DetRedundancy => {
            let c = rng.gen_range(0..s.contexts().len());
            let absent: Vec<usize> = (0..s.observables().len()).filter(|&q| !s.context(c).contains(q)).collect();
            let ctx = s.context(c).id.clone();
            if absent.is_empty() || rng.gen_bool(0.3) {
                let u = rng.gen_range(0..2usize).to_string();
                Some(Step::AddDeterministic {
                    q: "d".into(),
                    outcomes: Some(vec!["0".into(), "1".into()]),
                    context: ctx,
                    outcome: u,
                })
            } else {
                let q = s.observable(*pick(&mut rng, &absent));
                let u = pick(&mut rng, &q.outcomes).clone();
                Some(Step::AddDeterministic { q: q.id.clone(), outcomes: None, context: ctx, outcome: u })
            }
        }
        AxiomId::Relabeling => {
            let q = rng.gen_range(0..s.observables().len());
            let mut ctxs = s.contexts_of(q);
            ctxs.shuffle(&mut rng);
            let k = rng.gen_range(1..=ctxs.len());
            let mut blocks: Vec<Vec<String>> = vec![Vec::new(); k];
            for (i, &c) in ctxs.iter().enumerate() {
                let b = if i < k { i } else { rng.gen_range(0..k) };
                blocks[b].push(s.context(c).id.clone());
            }
            let id = &s.observable(q).id;
            let new_ids = (0..k).map(|i| format!("x{q}_{i}")).collect();
            Some(Step::Relabel { q: id.clone(), partition: blocks, new_ids })
        }
        AxiomId::Independence | AxiomId::IndependenceCanonical => unreachable!(),
    };
    Ok(Case::new(vec![p], step.into_iter().collect()))
}

enum Trial {
    Violated(CaseOutcome),
    Exercised,
    Vacuous,
    Skipped,
}

/// Runs `trials` random cases and reports the first violation by trial
/// index, or how many trials actually exercised the axiom.
pub fn fuzz_axiom(
    ext: Extension,
    axiom: AxiomId,
    trials: usize,
    seed: u64,
    params: &GenParams,
) -> Result<AuditReport, AuditError> {
    if let Some(reason) = axiom.not_applicable(ext) {
        return Ok(AuditReport {
            extension: ext,
            axiom,
            outcome: AuditOutcome::NotApplicable { reason: reason.into() },
        });
    }
    let run = |t: usize| -> Result<Trial, AuditError> {
        let s = sub_seed(seed, ext, axiom, t as u64);
        let r = random_case(ext, axiom, params, s, t as u64).and_then(|case| check_case(ext, axiom, &case));
        match r {
            Ok(CaseOutcome::Holds) => Ok(Trial::Exercised),
            Ok(CaseOutcome::Vacuous) => Ok(Trial::Vacuous),
            Ok(v @ CaseOutcome::Violated(_)) => Ok(Trial::Violated(v)),
            Err(e) if e.is_budget() => Ok(Trial::Skipped),
            Err(e) => Err(e),
        }
    };
    let results: Vec<Trial> = (0..trials).into_par_iter().map(run).collect::<Result<_, _>>()?;
    let (mut exercised, mut skipped) = (0, 0);
    for r in results {
        match r {
            Trial::Violated(CaseOutcome::Violated(witness)) => {
                return Ok(AuditReport { extension: ext, axiom, outcome: AuditOutcome::Violated { witness } })
            }
            Trial::Exercised => exercised += 1,
            Trial::Skipped => skipped += 1,
            _ => {}
        }
    }
    Ok(AuditReport {
        extension: ext,
        axiom,
        outcome: AuditOutcome::NoCounterexampleFound { trials, seed, exercised, skipped },
    })
}
