//! One PASS/FAIL line per acceptance criterion. Criteria whose published
//! claim does not hold are expected to fail; the run prints why and only
//! errors out if the set of failures changes.

mod common;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::time::{Duration, Instant};

use common::fourier_motzkin as fm;
use common::props::{self, Check};
use common::systems::system;
use contextuality::audit::corpus::example;
use contextuality::audit::table1::{CellStatus, Mark, TABLE_EXTENSIONS};
use contextuality::audit::{table1, theorem_chain, AxiomId, Which};
use contextuality::deciders::{
    binary_cbd2_decide, canonical_binary_cbd2_decide, cbd1_decide, cbd2_decide, check_coupling, copy_key,
    coupling_max_agreement, direct_influence, ks_decide, CanonicalMode, CouplingAtom, Criterion as Maximality, Status,
    Witness,
};
use contextuality::iso::find_isomorphism;
use contextuality::lp::feasible;
use contextuality::rational::{ratio, Rational};
use contextuality::transforms::{coarsen, drop_observables, join, keep_contexts, post_process, product, OutcomeMap};
use num_traits::{One, Signed, Zero};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

type Outcome = Result<(), String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

/// Criteria whose claim is contradicted by an exact computation.
const KNOWN_RED: [u32; 2] = [7, 8];

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn s(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

/// Writes past the test harness's output capture, so the report shows up in
/// a plain `cargo test` run.
fn say(line: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

fn within(start: Instant, limit: Duration) -> Outcome {
    let t = start.elapsed();
    ensure!(t < limit, "took {t:.2?}, limit {limit:?}");
    Ok(())
}

fn coupling_atoms(w: &Option<Witness>) -> Result<&[CouplingAtom], String> {
    match w {
        Some(Witness::Coupling { atoms }) => Ok(atoms),
        other => Err(format!("expected a coupling witness, got {other:?}")),
    }
}

fn atom(pairs: &[(&str, &str, &str)], p: Rational) -> CouplingAtom {
    let assignment = pairs.iter().map(|(q, c, u)| (copy_key(q, c), u.to_string())).collect();
    CouplingAtom { assignment, p }
}

fn total_variation(p: &[Rational], q: &[Rational]) -> Rational {
    p.iter().zip(q).fold(Rational::zero(), |acc, (a, b)| acc + (a - b).abs()) / ratio(2, 1)
}

fn criterion1() -> Outcome {
    let t = Instant::now();
    let ex1 = example("EX1");
    ensure!(cbd1_decide(&ex1).map_err(|e| e.to_string())?.status == Status::Noncontextual, "cbd1(EX1) not NC");
    let m = keep_contexts(&ex1, &s(&["c1", "c2"])).map_err(|e| e.to_string())?;
    ensure!(m == example("EX1_MARGINAL"), "restriction differs from the 2-cycle");
    ensure!(cbd1_decide(&m).map_err(|e| e.to_string())?.status == Status::Contextual, "restriction not C");
    within(t, Duration::from_secs(1))
}

fn criterion2() -> Outcome {
    let t = Instant::now();
    let ex2 = example("EX2_P");
    ensure!(cbd2_decide(&ex2).map_err(|e| e.to_string())?.status == Status::Noncontextual, "cbd2(EX2_P) not NC");
    let merge = OutcomeMap::single(&[("1", "1"), ("1'", "1"), ("2", "2"), ("2'", "2"), ("3", "3"), ("3'", "3")]);
    let c = coarsen(&ex2, "q", &merge, None).map_err(|e| e.to_string())?;
    ensure!(c == example("EX2_PPRIME"), "coarsening differs from EX2_PPRIME");
    ensure!(cbd2_decide(&c).map_err(|e| e.to_string())?.status == Status::Contextual, "coarsening not C");
    within(t, Duration::from_secs(1))
}

fn criterion3() -> Outcome {
    let t = Instant::now();
    let ex3 = example("EX3_P");
    let v = cbd2_decide(&ex3).map_err(|e| e.to_string())?;
    ensure!(v.status == Status::Noncontextual, "cbd2(EX3_P) not NC");
    let found = coupling_atoms(&v.witness)?;
    check_coupling(&ex3, Maximality::Multimaximal, found)?;

    // T^i_j is the copy of q_j in c_i.
    let half = ratio(1, 2);
    let printed = [
        atom(&[("q1", "c1", "0"), ("q2", "c1", "1"), ("q1", "c2", "0"), ("q2", "c2", "0")], half.clone()),
        atom(&[("q1", "c1", "1"), ("q2", "c1", "1"), ("q1", "c2", "1"), ("q2", "c2", "0")], half),
    ];
    check_coupling(&ex3, Maximality::Multimaximal, &printed)?;
    for (q, want) in [("q1", Rational::one()), ("q2", Rational::zero())] {
        let max = coupling_max_agreement(&ex3, q, "c1", "c2").map_err(|e| e.to_string())?;
        let agree = |atoms: &[CouplingAtom]| direct_influence(atoms, q, "c1", "c2").map(|d| Rational::one() - d);
        let printed_agree = agree(&printed).map_err(|e| e.to_string())?;
        let found_agree = agree(found).map_err(|e| e.to_string())?;
        ensure!(max == want && printed_agree == want && found_agree == want, "{q}: agreements differ from {want}");
    }

    let delta =
        OutcomeMap::from_pairs(&[(&["0", "0"], "1"), (&["0", "1"], "0"), (&["1", "0"], "0"), (&["1", "1"], "1")])
            .with_targets(&["0", "1"]);
    let pp = post_process(&ex3, &s(&["q1", "q2"]), &delta, "q3").map_err(|e| e.to_string())?;
    let p_prime = drop_observables(&pp, &s(&["q2"])).map_err(|e| e.to_string())?;
    ensure!(p_prime == example("EX3_PPRIME"), "post-processed behavior differs from EX3_PPRIME");
    let v = binary_cbd2_decide(&p_prime).map_err(|e| e.to_string())?;
    ensure!(v.status == Status::Contextual, "binary cbd2 of the post-processing is {}", v.status);
    within(t, Duration::from_secs(1))
}

fn criterion4() -> Outcome {
    let t = Instant::now();
    let (coin, det) = (example("EX4_COIN"), example("EX4_DET"));
    for (name, b) in [("EX4_COIN", &coin), ("EX4_DET", &det)] {
        for mode in [CanonicalMode::Strict, CanonicalMode::Lifted] {
            let v = canonical_binary_cbd2_decide(b, mode).map_err(|e| e.to_string())?;
            ensure!(v.status == Status::Noncontextual, "{name} {mode:?}: {}", v.status);
        }
    }
    let prod = product(&coin, &det, false).map_err(|e| e.to_string())?;
    let v = canonical_binary_cbd2_decide(&prod, CanonicalMode::Lifted).map_err(|e| e.to_string())?;
    ensure!(v.status == Status::Contextual, "lifted(product) is {}", v.status);
    within(t, Duration::from_secs(5))
}

fn criterion5() -> Outcome {
    let t = Instant::now();
    let rep = theorem_chain(Which::Thm2).map_err(|e| e.to_string())?;
    for want in ["THM2_P3", "THM2_P4", "THM2_P5"] {
        let step = rep.steps.iter().find(|st| st.expected.as_ref().is_some_and(|(n, _)| n == want));
        let step = step.ok_or(format!("no step reproduces {want}"))?;
        let b = step.behavior.to_behavior().map_err(|e| e.to_string())?;
        ensure!(b == example(want), "{want} differs");
    }
    ensure!(rep.all_checks_pass(), "chain checks fail");
    let p5 = example("THM2_P5");
    let iso = find_isomorphism(&p5, &example("PR_BOX")).map_err(|e| e.to_string())?;
    ensure!(iso.is_some_and(|i| i.verify(&p5, &example("PR_BOX"))), "P5 not isomorphic to the PR box");
    ensure!(ks_decide(&p5).map_err(|e| e.to_string())?.status == Status::Contextual, "ks(P5) not C");
    let allowed = [
        AxiomId::KsCompat,
        AxiomId::Nestedness,
        AxiomId::PostProcessing,
        AxiomId::Independence,
        AxiomId::IndependenceCanonical,
        AxiomId::Determinism,
    ];
    ensure!(rep.traces.len() == TABLE_EXTENSIONS.len(), "{} traces", rep.traces.len());
    for tr in &rep.traces {
        let v = tr.first_violation.as_ref().ok_or(format!("{} is never contradicted", tr.extension))?;
        ensure!(allowed.contains(&v.axiom), "{} first breaks {:?}", tr.extension, v.axiom);
        ensure!(tr.verdicts[v.step] == Status::Contextual, "{} step {} not C", tr.extension, v.step);
        for &p in &rep.steps[v.step].premises {
            ensure!(tr.verdicts[p] == Status::Noncontextual, "{} premise {p} not NC", tr.extension);
        }
    }
    within(t, Duration::from_secs(10))
}

fn criterion6() -> Outcome {
    let rep = theorem_chain(Which::Thm3).map_err(|e| e.to_string())?;
    let step = rep.steps.iter().find(|st| st.expected.as_ref().is_some_and(|(n, _)| n == "THM2_P3"));
    let step = step.ok_or("no step reproduces THM2_P3")?;
    let b = step.behavior.to_behavior().map_err(|e| e.to_string())?;
    ensure!(b == example("THM2_P3"), "reconstruction differs from THM2_P3");
    ensure!(rep.all_checks_pass(), "chain checks fail");
    Ok(())
}

const TABLE_TRIALS: usize = 200;

fn criterion7() -> Outcome {
    let t = Instant::now();
    let table = table1(&TABLE_EXTENSIONS, TABLE_TRIALS, 7).map_err(|e| e.to_string())?;
    let mut wrong = Vec::new();
    for c in &table.cells {
        let ok = match c.published {
            Mark::Violates => c.status == CellStatus::Violated && c.evidence.starts_with("corpus: "),
            Mark::Satisfies => {
                c.status == CellStatus::NoCounterexample
                    && c.evidence.starts_with(&format!("no counterexample in {TABLE_TRIALS} "))
            }
            Mark::NotApplicable => c.status == CellStatus::NotApplicable,
        };
        if !ok {
            wrong.push(format!(
                "{} / {}: published {}, got {} ({})",
                c.extension.label(),
                c.axiom.label(),
                c.published.symbol(),
                c.symbol(),
                c.evidence
            ));
        }
    }
    within(t, Duration::from_secs(600))?;
    ensure!(wrong.is_empty(), "{}", wrong.join("; "));
    Ok(())
}

fn criterion8() -> Outcome {
    let p = example("PROP2_P");
    ensure!(cbd2_decide(&p).map_err(|e| e.to_string())?.status == Status::Noncontextual, "cbd2(PROP2_P) not NC");

    // Three equiprobable hidden states; y and z both read G everywhere.
    let g = ["1", "2", "3"];
    let fa = [("c", ["0", "1", "1"]), ("c'", ["1", "1", "1"])];
    let fb = [("c", ["0", "0", "0"]), ("c'", ["0", "0", "1"])];
    let model: Vec<CouplingAtom> = (0..3)
        .map(|k| {
            let mut pairs = vec![("y", "c", g[k]), ("y", "d", g[k]), ("z", "c'", g[k]), ("z", "d", g[k])];
            pairs.extend(fa.iter().map(|(c, f)| ("a", *c, f[k])));
            pairs.extend(fb.iter().map(|(c, f)| ("b", *c, f[k])));
            atom(&pairs, ratio(1, 3))
        })
        .collect();
    check_coupling(&p, Maximality::Multimaximal, &model).map_err(|e| format!("model does not replay: {e}"))?;

    let joined = join(&p, &s(&["a", "b"]), "q").map_err(|e| e.to_string())?;
    ensure!(cbd2_decide(&joined).map_err(|e| e.to_string())?.status == Status::Contextual, "joined not C");
    let max = coupling_max_agreement(&joined, "q", "c", "c'").map_err(|e| e.to_string())?;
    ensure!(max == ratio(2, 3), "max agreement {max}, expected 2/3");
    let sc = joined.scenario();
    let q = sc.observable_index("q").unwrap();
    let (c, c2) = (sc.context_index("c").unwrap(), sc.context_index("c'").unwrap());
    let tv = total_variation(&joined.single_marginal(q, c), &joined.single_marginal(q, c2));
    ensure!(
        tv.is_zero(),
        "TV of q between c and c' is {tv}, not 0, so the required agreement is {} and max {max} meets it",
        Rational::one() - &tv
    );
    Ok(())
}

fn criterion9() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = system();
    let (mut feasible_count, n) = (0, 500);
    for i in 0..n {
        let sys = strategy.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let r = feasible(&sys);
        ensure!(r.feasible == fm::feasible(&sys), "system {i} disagrees:\n{}", sys.to_text());
        if r.feasible {
            feasible_count += 1;
            ensure!(r.witness.as_ref().is_some_and(|x| sys.is_solution(x)), "system {i}: witness fails");
        } else {
            let ok = r.certificate.as_ref().is_some_and(|y| sys.is_infeasibility_certificate(y));
            ensure!(ok, "system {i}: certificate fails");
        }
    }
    ensure!(feasible_count > 0 && feasible_count < n, "{feasible_count} of {n} feasible; the sample is one-sided");
    Ok(())
}

const PROPERTY_TRIALS: u64 = 200;

fn criterion10() -> Outcome {
    let suites: [&[(&str, Check)]; 3] = [&props::ND_CLOSURE, &props::IDENTITIES, &props::IMPLICATIONS];
    for suite in suites {
        for (name, check) in suite {
            for seed in 0..PROPERTY_TRIALS {
                check(seed).map_err(|e| format!("{name}, seed {seed}: {e}"))?;
            }
        }
    }
    Ok(())
}

/// Why each known-red criterion fails, printed under the results.
fn analysis() -> BTreeMap<u32, &'static str> {
    BTreeMap::from([
        (
            7,
            "the canonical binary CbD 2.0 row violates deterministic redundancy: adding a deterministic \
             observable to one context creates a shared composite whose split is a fair coin equal to one \
             observable in one context and to its negation in the other. `ctxaudit audit -e cbcbd2-lifted \
             -a det-redundancy --seed 7 --trials 400` prints the replayable witness.",
        ),
        (
            8,
            "the joined observable q = (a,b) has P(q|c) = {(0,0): 1/3, (1,0): 2/3} and P(q|c') = {(1,0): 2/3, (1,1): 1/3}, \
             so its total variation is 1/3, not 0. Max agreement is 2/3 = 1 - TV, and the joined behavior is \
             still CbD 2.0 contextual, because the y and z constraints cap the agreement of q below 2/3.",
        ),
    ])
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        (1, "cbd1 on EX1 and its c1,c2 restriction", criterion1),
        (2, "cbd2 on EX2_P and its coarsening", criterion2),
        (3, "cbd2 coupling of EX3_P, binary cbd2 of its post-processing", criterion3),
        (4, "canonical binary cbd2 on EX4 and its product", criterion4),
        (5, "thm2 chain", criterion5),
        (6, "thm3 reconstruction of THM2_P3", criterion6),
        (7, "extension-by-axiom table", criterion7),
        (8, "joining counterexample for cbd2", criterion8),
        (9, "simplex vs Fourier-Motzkin on 500 systems", criterion9),
        (10, "property suites at 200 trials", criterion10),
    ];
    say(String::new());
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        let t = Instant::now();
        let r = run();
        let took = t.elapsed();
        match &r {
            Ok(()) => say(format!("PASS {id:>2} {name} ({took:.2?})")),
            Err(e) => {
                say(format!("FAIL {id:>2} {name} ({took:.2?}): {e}"));
                failed.push(id);
            }
        }
    }
    let notes = analysis();
    for id in &failed {
        if let Some(why) = notes.get(id) {
            say(format!("known red {id}: {why}"));
        }
    }
    assert_eq!(failed, KNOWN_RED, "the set of failing criteria changed");
}
