//! Seeded property checks shared by the proptest suite and the acceptance
//! target. Each check draws its inputs from the seed and returns a
//! description of the first failure.

use std::collections::BTreeMap;

use contextuality::audit::{random_behavior, GenFlags, GenParams};
use contextuality::deciders::{decide, DecideError, Extension, Status};
use contextuality::model::{is_consistently_connected, is_nondisturbing, Behavior};
use contextuality::transforms::{
    add_deterministic, coarsen, drop_observables, identity_map, join, joint_label, marginalize, post_process, product,
    relabel, rename, OutcomeMap, Renaming, SubscenarioSpec,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = fn(u64) -> Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

pub fn nondisturbing(seed: u64) -> Behavior {
    let p = GenParams::default().with_flags(GenFlags { nondisturbing: true, ..Default::default() });
    random_behavior(&p, seed).unwrap()
}

/// Mixed inputs: nondisturbing, deterministic, consistently connected or free.
pub fn any_behavior(seed: u64) -> Behavior {
    let mut f = GenFlags::default();
    match seed % 4 {
        0 => f.nondisturbing = true,
        1 => f.deterministic = true,
        2 => f.consistently_connected = true,
        _ => {}
    }
    random_behavior(&GenParams::default().with_flags(f), seed).unwrap()
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    &xs[rng.gen_range(0..xs.len())]
}

/// A random surjection of `q`'s outcomes onto `0..m`.
fn random_coarsening(rng: &mut ChaCha8Rng, labels: &[String]) -> OutcomeMap {
    let m = rng.gen_range(1..=labels.len());
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(rng);
    let mut target = vec![0; labels.len()];
    for (i, &x) in order.iter().enumerate() {
        target[x] = if i < m { i } else { rng.gen_range(0..m) };
    }
    OutcomeMap {
        entries: labels.iter().zip(&target).map(|(l, t)| (vec![l.clone()], t.to_string())).collect(),
        targets: Some((0..m).map(|t| t.to_string()).collect()),
    }
}

/// A random composite inside one context and a random function of it.
fn random_post_processing(rng: &mut ChaCha8Rng, b: &Behavior) -> (Vec<String>, OutcomeMap) {
    let sc = b.scenario();
    let c = pick(rng, sc.contexts());
    let mut members: Vec<usize> = c.members.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
    if members.is_empty() {
        members.push(*pick(rng, &c.members));
    }
    members.shuffle(rng);
    let composite: Vec<String> = members.iter().map(|&q| sc.observable(q).id.clone()).collect();
    let id = identity_map(b, &composite).unwrap();
    let m = rng.gen_range(1..=3usize.min(id.entries.len()));
    let mut entries: Vec<(Vec<String>, String)> = id.entries.into_iter().map(|(k, _)| (k, String::new())).collect();
    for (i, e) in entries.iter_mut().enumerate() {
        e.1 = if i < m { i } else { rng.gen_range(0..m) }.to_string();
    }
    (composite, OutcomeMap { entries, targets: Some((0..m).map(|t| t.to_string()).collect()) })
}

fn random_partition(rng: &mut ChaCha8Rng, b: &Behavior, q: usize) -> Vec<Vec<String>> {
    let sc = b.scenario();
    let mut ctxs = sc.contexts_of(q);
    ctxs.shuffle(rng);
    let k = rng.gen_range(1..=ctxs.len());
    let mut blocks = vec![Vec::new(); k];
    for (i, &c) in ctxs.iter().enumerate() {
        let j = if i < k { i } else { rng.gen_range(0..k) };
        blocks[j].push(sc.context(c).id.clone());
    }
    blocks
}

fn block_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn renamed_apart(b: &Behavior, prefix: &str) -> Behavior {
    let observables = b.observables().iter().map(|q| (q.id.clone(), format!("{prefix}{}", q.id))).collect();
    let contexts = b.contexts().iter().map(|c| (c.id.clone(), format!("{prefix}{}", c.id))).collect();
    rename(b, &Renaming { observables, contexts, outcomes: BTreeMap::new() }).unwrap()
}

/// The verdict, or `None` when the input is over budget.
pub fn status(b: &Behavior, ext: Extension) -> Option<Status> {
    match decide(b, ext) {
        Ok(v) => Some(v.status),
        Err(DecideError::Budget { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

pub fn marginalizing_keeps_nondisturbance(seed: u64) -> Result<(), String> {
    let b = nondisturbing(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = SubscenarioSpec::full(&b);
    let mut pairs: Vec<_> = full.pairs.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
    if pairs.is_empty() {
        pairs.push(full.pairs[0].clone());
    }
    let m = marginalize(&b, &SubscenarioSpec { pairs }).unwrap();
    ensure!(is_nondisturbing(&m), "marginal of a nondisturbing behavior disturbs");
    Ok(())
}

pub fn coarsening_keeps_nondisturbance(seed: u64) -> Result<(), String> {
    let b = nondisturbing(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = pick(&mut rng, b.observables()).clone();
    let f = random_coarsening(&mut rng, &q.outcomes);
    ensure!(is_nondisturbing(&coarsen(&b, &q.id, &f, None).unwrap()), "coarsening {} disturbs", q.id);
    Ok(())
}

pub fn post_processing_keeps_nondisturbance(seed: u64) -> Result<(), String> {
    let b = nondisturbing(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (composite, f) = random_post_processing(&mut rng, &b);
    ensure!(
        is_nondisturbing(&post_process(&b, &composite, &f, "f").unwrap()),
        "post-processing {composite:?} disturbs"
    );
    Ok(())
}

pub fn joining_keeps_nondisturbance(seed: u64) -> Result<(), String> {
    let b = nondisturbing(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (composite, _) = random_post_processing(&mut rng, &b);
    ensure!(is_nondisturbing(&join(&b, &composite, "j").unwrap()), "joining {composite:?} disturbs");
    Ok(())
}

pub fn products_keep_nondisturbance(seed: u64) -> Result<(), String> {
    let tiny = GenParams { flags: GenFlags { nondisturbing: true, ..Default::default() }, ..GenParams::tiny() };
    let p1 = random_behavior(&tiny, seed).unwrap();
    let p2 = renamed_apart(&random_behavior(&tiny, seed ^ 0xabcd).unwrap(), "r");
    ensure!(is_nondisturbing(&product(&p1, &p2, false).unwrap()), "product disturbs");
    Ok(())
}

pub fn relabeling_keeps_nondisturbance(seed: u64) -> Result<(), String> {
    let b = nondisturbing(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = rng.gen_range(0..b.observables().len());
    let blocks = random_partition(&mut rng, &b, q);
    let r = relabel(&b, &b.observables()[q].id.clone(), &blocks, &block_ids(blocks.len())).unwrap();
    ensure!(is_nondisturbing(&r), "relabeling {} by {blocks:?} disturbs", b.observables()[q].id);
    Ok(())
}

pub fn fresh_deterministic_observables_keep_nondisturbance(seed: u64) -> Result<(), String> {
    let b = nondisturbing(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = pick(&mut rng, b.contexts()).id.clone();
    let outcomes: Vec<String> = ["0", "1", "2"].map(String::from).to_vec();
    let u = pick(&mut rng, &outcomes).clone();
    let d = add_deterministic(&b, "d", Some(&outcomes), &c, &u).unwrap();
    ensure!(is_nondisturbing(&d), "adding d = {u} in {c} disturbs");
    Ok(())
}

pub fn relabeling_and_coarsening_keep_consistent_connectedness(seed: u64) -> Result<(), String> {
    let cc = GenParams::default().with_flags(GenFlags { consistently_connected: true, ..Default::default() });
    let b = random_behavior(&cc, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = rng.gen_range(0..b.observables().len());
    let blocks = random_partition(&mut rng, &b, q);
    let r = relabel(&b, &b.observables()[q].id.clone(), &blocks, &block_ids(blocks.len())).unwrap();
    ensure!(is_consistently_connected(&r), "relabeling breaks consistent connectedness");
    let qq = pick(&mut rng, b.observables()).clone();
    let f = random_coarsening(&mut rng, &qq.outcomes);
    ensure!(is_consistently_connected(&coarsen(&b, &qq.id, &f, None).unwrap()), "coarsening breaks it");
    Ok(())
}

/// Coarsening is post-processing a single observable and dropping it.
pub fn coarsening_is_post_processing_then_dropping(seed: u64) -> Result<(), String> {
    let b = any_behavior(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = pick(&mut rng, b.observables()).clone();
    let f = random_coarsening(&mut rng, &q.outcomes);
    let direct = coarsen(&b, &q.id, &f, None).unwrap();
    let pp = post_process(&b, std::slice::from_ref(&q.id), &f, "fresh").unwrap();
    let dropped = drop_observables(&pp, std::slice::from_ref(&q.id)).unwrap();
    let back = rename(
        &dropped,
        &Renaming {
            observables: [("fresh".to_string(), q.id.clone())].into(),
            contexts: BTreeMap::new(),
            outcomes: BTreeMap::new(),
        },
    )
    .unwrap();
    ensure!(direct == back, "coarsening {} differs from post-process and drop", q.id);
    Ok(())
}

/// Joining is post-processing by the identity.
pub fn joining_is_identity_post_processing(seed: u64) -> Result<(), String> {
    let b = any_behavior(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (composite, _) = random_post_processing(&mut rng, &b);
    let id = identity_map(&b, &composite).unwrap();
    let via = post_process(&b, &composite, &id, "j").unwrap();
    ensure!(join(&b, &composite, "j").unwrap() == via, "joining {composite:?} differs");
    Ok(())
}

/// Relabeling is copying the observable once per block, restricting each
/// copy to its block and dropping the original.
pub fn relabeling_is_copies_restricted_to_blocks(seed: u64) -> Result<(), String> {
    let b = any_behavior(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qi = rng.gen_range(0..b.observables().len());
    let q = b.observables()[qi].id.clone();
    let blocks = random_partition(&mut rng, &b, qi);
    let ids = block_ids(blocks.len());
    let direct = relabel(&b, &q, &blocks, &ids).unwrap();

    let mut copies = b.clone();
    let id = identity_map(&b, std::slice::from_ref(&q)).unwrap();
    for new in &ids {
        copies = post_process(&copies, std::slice::from_ref(&q), &id, new).unwrap();
    }
    let mut keep: Vec<(String, String)> =
        SubscenarioSpec::full(&b).pairs.into_iter().filter(|(o, _)| *o != q).collect();
    for (block, new) in blocks.iter().zip(&ids) {
        keep.extend(block.iter().map(|c| (new.clone(), c.clone())));
    }
    let via = marginalize(&copies, &SubscenarioSpec { pairs: keep }).unwrap();
    ensure!(direct == via, "relabeling {q} by {blocks:?} differs");
    Ok(())
}

pub fn post_processing_composite_labels_are_joint_labels(seed: u64) -> Result<(), String> {
    let b = any_behavior(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (composite, _) = random_post_processing(&mut rng, &b);
    let j = join(&b, &composite, "j").unwrap();
    let obs = &j.observables()[j.scenario().observable_index("j").unwrap()];
    let id = identity_map(&b, &composite).unwrap();
    let want: Vec<String> = id.entries.iter().map(|(k, _)| joint_label(k)).collect();
    ensure!(obs.outcomes == want, "labels {:?}, expected {want:?}", obs.outcomes);
    Ok(())
}

pub fn cbd2_noncontextual_implies_cbd1_noncontextual(seed: u64) -> Result<(), String> {
    let b = any_behavior(seed);
    if let (Some(Status::Noncontextual), Some(v1)) = (status(&b, Extension::Cbd2), status(&b, Extension::Cbd1)) {
        ensure!(v1 == Status::Noncontextual, "cbd2 noncontextual but cbd1 {v1}");
    }
    Ok(())
}

/// Over-budget inputs pass vacuously.
pub fn ks_and_cbd_agree_without_disturbance(seed: u64) -> Result<(), String> {
    let b = nondisturbing(seed);
    let Some(ks) = status(&b, Extension::Ks) else { return Ok(()) };
    for ext in [Extension::Cbd1, Extension::Cbd2] {
        let v = status(&b, ext);
        ensure!(v == Some(ks), "ks {ks}, {} {v:?}", ext.label());
    }
    Ok(())
}

pub const ND_CLOSURE: [(&str, Check); 7] = [
    ("marginalization", marginalizing_keeps_nondisturbance),
    ("coarsening", coarsening_keeps_nondisturbance),
    ("post-processing", post_processing_keeps_nondisturbance),
    ("joining", joining_keeps_nondisturbance),
    ("product", products_keep_nondisturbance),
    ("relabeling", relabeling_keeps_nondisturbance),
    ("fresh deterministic", fresh_deterministic_observables_keep_nondisturbance),
];

pub const IDENTITIES: [(&str, Check); 3] = [
    ("coarsening = post-process + drop", coarsening_is_post_processing_then_dropping),
    ("joining = identity post-process", joining_is_identity_post_processing),
    ("relabeling = restricted copies", relabeling_is_copies_restricted_to_blocks),
];

pub const IMPLICATIONS: [(&str, Check); 2] = [
    ("cbd2 NC => cbd1 NC", cbd2_noncontextual_implies_cbd1_noncontextual),
    ("ks = cbd1 = cbd2 when nondisturbing", ks_and_cbd_agree_without_disturbance),
];
