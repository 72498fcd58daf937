//! Seeded random behaviors with small exact weights.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{is_consistently_connected, is_nondisturbing, Behavior, Distribution, Observable, Scenario};
use crate::rational::{ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub max_observables: usize,
    pub max_contexts: usize,
    pub max_outcomes: usize,
    /// Largest number of nonzero rows per table (or global atoms).
    pub max_support: usize,
    pub max_denominator: u32,
    pub flags: GenFlags,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_observables: 4,
            max_contexts: 4,
            max_outcomes: 3,
            max_support: 4,
            max_denominator: 12,
            flags: GenFlags::default(),
        }
    }
}

impl GenParams {
    pub fn with_flags(mut self, flags: GenFlags) -> Self {
        self.flags = flags;
        self
    }

    /// Factors for products: the product has many contexts and atoms.
    pub fn tiny() -> Self {
        GenParams { max_observables: 2, max_contexts: 2, max_outcomes: 2, max_support: 2, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenFlags {
    pub nondisturbing: bool,
    pub disturbing: bool,
    pub deterministic: bool,
    pub consistently_connected: bool,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("contradictory generator flags: {0}")]
    Contradictory(&'static str),
    #[error("generator bounds out of range: {0}")]
    Bounds(&'static str),
    #[error("no disturbing behavior found within {0} attempts")]
    Exhausted(usize),
}

const DISTURBING_ATTEMPTS: usize = 64;

fn check(p: &GenParams) -> Result<(), GenError> {
    let f = p.flags;
    if f.nondisturbing && f.disturbing {
        return Err(GenError::Contradictory("nondisturbing and disturbing"));
    }
    if f.disturbing && f.deterministic && f.consistently_connected {
        return Err(GenError::Contradictory("deterministic consistently connected behaviors never disturb"));
    }
    if p.max_observables == 0 || p.max_contexts == 0 || p.max_support == 0 || p.max_denominator == 0 {
        return Err(GenError::Bounds("sizes must be positive"));
    }
    if p.max_outcomes < 2 {
        return Err(GenError::Bounds("observables need at least two outcomes"));
    }
    if f.disturbing && p.max_contexts < 2 {
        return Err(GenError::Bounds("disturbance needs two contexts"));
    }
    Ok(())
}

/// Deterministic in `seed`.
pub fn random_behavior(params: &GenParams, seed: u64) -> Result<Behavior, GenError> {
    check(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if !params.flags.disturbing {
        return Ok(draw(params, &mut rng));
    }
    for _ in 0..DISTURBING_ATTEMPTS {
        let b = draw(params, &mut rng);
        if !is_nondisturbing(&b) {
            return Ok(b);
        }
    }
    Err(GenError::Exhausted(DISTURBING_ATTEMPTS))
}

/// Positive integers summing to `total`, as weights over `k` items.
fn weights(rng: &mut ChaCha8Rng, k: usize, max_den: u32) -> Vec<Rational> {
    let lo = k as u32;
    let total = rng.gen_range(lo.max(1)..=max_den.max(lo));
    let mut cuts: Vec<u32> = (1..total).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<u32> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    let mut prev = 0;
    let mut out = Vec::with_capacity(k);
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push(ratio((c - prev) as i64, total as i64));
        prev = c;
    }
    out
}

fn scenario(p: &GenParams, rng: &mut ChaCha8Rng) -> Scenario {
    let nq = rng.gen_range(1..=p.max_observables);
    let nc = rng.gen_range(if p.flags.disturbing { 2 } else { 1 }..=p.max_contexts);
    let observables: Vec<Observable> = (0..nq)
        .map(|i| {
            let k = if p.flags.binary { 2 } else { rng.gen_range(2..=p.max_outcomes) };
            let labels: Vec<String> = (0..k).map(|o| o.to_string()).collect();
            Observable { id: format!("q{}", i + 1), outcomes: labels }
        })
        .collect();
    let mut members: Vec<Vec<usize>> = (0..nc)
        .map(|_| {
            let m: Vec<usize> = (0..nq).filter(|_| rng.gen_bool(0.5)).collect();
            if m.is_empty() {
                vec![rng.gen_range(0..nq)]
            } else {
                m
            }
        })
        .collect();
    for q in 0..nq {
        if !members.iter().any(|m| m.contains(&q)) {
            let c = rng.gen_range(0..nc);
            members[c].push(q);
            members[c].sort_unstable();
        }
    }
    let specs = members
        .iter()
        .enumerate()
        .map(|(c, m)| (format!("c{}", c + 1), m.iter().map(|&q| observables[q].id.clone()).collect()))
        .collect();
    Scenario::new(observables, specs).expect("generated scenarios are valid")
}

fn random_tuple(rng: &mut ChaCha8Rng, shape: &[usize]) -> Vec<usize> {
    shape.iter().map(|&k| rng.gen_range(0..k)).collect()
}

/// A distribution over at most `max_support` random points of `shape`.
fn random_dist(rng: &mut ChaCha8Rng, shape: &[usize], p: &GenParams) -> Distribution {
    let cells: usize = shape.iter().product();
    let k = rng.gen_range(1..=p.max_support.min(cells));
    let mut points: Vec<Vec<usize>> = Vec::with_capacity(k);
    while points.len() < k {
        let t = random_tuple(rng, shape);
        if !points.contains(&t) {
            points.push(t);
        }
    }
    let w = weights(rng, k, p.max_denominator);
    Distribution::from_weights(shape.to_vec(), points.into_iter().zip(w))
}

/// A joint distribution with the given one-dimensional marginals, built by
/// greedily matching mass in a random order of outcomes.
fn couple(rng: &mut ChaCha8Rng, marginals: &[Vec<Rational>]) -> Distribution {
    let shape: Vec<usize> = marginals.iter().map(|m| m.len()).collect();
    let mut joint: Vec<(Vec<usize>, Rational)> = vec![(Vec::new(), ratio(1, 1))];
    for m in marginals {
        let mut order: Vec<usize> = (0..m.len()).filter(|&u| m[u] != ratio(0, 1)).collect();
        order.shuffle(rng);
        joint.shuffle(rng);
        let mut left: Vec<Rational> = m.clone();
        let mut next = Vec::new();
        let mut oi = 0;
        for (t, w) in joint {
            let mut w = w;
            while w > ratio(0, 1) {
                let u = order[oi];
                let take = if left[u] < w { left[u].clone() } else { w.clone() };
                let mut tt = t.clone();
                tt.push(u);
                next.push((tt, take.clone()));
                w -= &take;
                left[u] -= &take;
                if left[u] == ratio(0, 1) {
                    oi += 1;
                }
            }
        }
        joint = next;
    }
    Distribution::from_weights(shape, joint)
}

fn draw(p: &GenParams, rng: &mut ChaCha8Rng) -> Behavior {
    let s = scenario(p, rng);
    let f = p.flags;
    let all_shape: Vec<usize> = s.observables().iter().map(|o| o.len()).collect();
    let project = |g: &Distribution, c: usize| -> Distribution {
        let members = s.context(c).members.clone();
        g.marginal(&members)
    };
    let tables: Vec<Distribution> = if f.nondisturbing || (f.deterministic && f.consistently_connected) {
        let global = if f.deterministic {
            Distribution::point(all_shape.clone(), random_tuple(rng, &all_shape))
        } else {
            random_dist(rng, &all_shape, p)
        };
        (0..s.contexts().len()).map(|c| project(&global, c)).collect()
    } else if f.deterministic {
        (0..s.contexts().len())
            .map(|c| {
                let shape = s.shape(c);
                Distribution::point(shape.clone(), random_tuple(rng, &shape))
            })
            .collect()
    } else if f.consistently_connected {
        let marg: Vec<Vec<Rational>> =
            s.observables().iter().map(|o| random_dist(rng, &[o.len()], p).vector()).collect();
        (0..s.contexts().len())
            .map(|c| {
                let ms: Vec<Vec<Rational>> = s.context(c).members.iter().map(|&q| marg[q].clone()).collect();
                couple(rng, &ms)
            })
            .collect()
    } else {
        (0..s.contexts().len()).map(|c| random_dist(rng, &s.shape(c), p)).collect()
    };
    let b = Behavior::from_parts(s, tables);
    debug_assert!(!f.consistently_connected || is_consistently_connected(&b));
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::is_deterministic;

    #[test]
    fn flags_are_honored() {
        for seed in 0..200 {
            let nd = GenParams::default().with_flags(GenFlags { nondisturbing: true, ..Default::default() });
            assert!(is_nondisturbing(&random_behavior(&nd, seed).unwrap()));
            let det = GenParams::default().with_flags(GenFlags { deterministic: true, ..Default::default() });
            assert!(is_deterministic(&random_behavior(&det, seed).unwrap()));
            let cc = GenParams::default().with_flags(GenFlags { consistently_connected: true, ..Default::default() });
            assert!(is_consistently_connected(&random_behavior(&cc, seed).unwrap()));
            let bin = GenParams::default().with_flags(GenFlags { binary: true, ..Default::default() });
            assert!(random_behavior(&bin, seed).unwrap().observables().iter().all(|q| q.len() == 2));
        }
    }

    #[test]
    fn same_seed_same_behavior() {
        let p = GenParams::default();
        for seed in [0, 1, 99, u64::MAX] {
            let a = crate::io::to_json(&random_behavior(&p, seed).unwrap());
            let b = crate::io::to_json(&random_behavior(&p, seed).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn disturbing_flag_yields_disturbance() {
        let p = GenParams::default().with_flags(GenFlags { disturbing: true, ..Default::default() });
        for seed in 0..50 {
            assert!(!is_nondisturbing(&random_behavior(&p, seed).unwrap()));
        }
    }

    #[test]
    fn contradictory_flags_are_rejected() {
        let f = GenFlags { disturbing: true, deterministic: true, consistently_connected: true, ..Default::default() };
        assert!(matches!(random_behavior(&GenParams::default().with_flags(f), 0), Err(GenError::Contradictory(_))));
        let f = GenFlags { disturbing: true, nondisturbing: true, ..Default::default() };
        assert!(matches!(random_behavior(&GenParams::default().with_flags(f), 0), Err(GenError::Contradictory(_))));
    }
}
