//! Built-in counterexample cases, all drawn from the corpus.

use crate::deciders::Extension;
use crate::transforms::Step;

use super::corpus::example;
use super::{AxiomId, Case};

fn strs(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// q3 = 1 when q1 = q2, else 0.
fn equality_step() -> Step {
    Step::post_process(
        &["q1", "q2"],
        &[(&["0", "0"], "1"), (&["0", "1"], "0"), (&["1", "0"], "0"), (&["1", "1"], "1")],
        "q3",
    )
}

/// Cases that exhibit a known violation of `axiom` by `ext`, with a short
/// description of each. Empty when none is known.
pub fn builtin_cases(ext: Extension, axiom: AxiomId) -> Vec<(&'static str, Case)> {
    use AxiomId::*;
    use Extension::*;
    let mut out = Vec::new();
    match (ext, axiom) {
        (Cbd1, Nestedness) => out.push((
            "EX1 restricted to contexts c1, c2",
            Case::new(vec![example("EX1")], vec![Step::KeepContexts { contexts: strs(&["c1", "c2"]) }]),
        )),
        (Cbd1, Coarsening) => {
            let merge = [("0", "0"), ("0'", "0"), ("1", "1"), ("1'", "1")];
            out.push((
                "PROP1_TILDE with primed outcomes merged, giving the 2-cycle",
                Case::new(vec![example("PROP1_TILDE")], vec![Step::coarsen("q1", &merge), Step::coarsen("q2", &merge)]),
            ))
        }
        (Cbd2, Coarsening) => out.push((
            "EX2_P with i and i' identified",
            Case::new(
                vec![example("EX2_P")],
                vec![Step::coarsen("q", &[("1", "1"), ("1'", "1"), ("2", "2"), ("2'", "2"), ("3", "3"), ("3'", "3")])],
            ),
        )),
        (Cbd1 | Cbd2 | Bcbd2, PostProcessing) => out
            .push(("EX3_P with q3 = [q1 = q2] incorporated", Case::new(vec![example("EX3_P")], vec![equality_step()]))),
        (Cbd1 | Cbd2, Joining) => out.push((
            "PROP2_P with (a,b) joined",
            Case::new(vec![example("PROP2_P")], vec![Step::Join { composite: strs(&["a", "b"]), new_id: "q".into() }]),
        )),
        (Cbd1, Relabeling) => {
            let part = vec![strs(&["c1", "c2"]), strs(&["c3", "c4"])];
            out.push((
                "EX1 with q1 and q2 relabeled across {c1,c2} | {c3,c4}",
                Case::new(
                    vec![example("EX1")],
                    vec![
                        Step::Relabel { q: "q1".into(), partition: part.clone(), new_ids: strs(&["q1a", "q1b"]) },
                        Step::Relabel { q: "q2".into(), partition: part, new_ids: strs(&["q2a", "q2b"]) },
                    ],
                ),
            ))
        }
        (Cbcbd2Lifted | Cbcbd2Strict, IndependenceCanonical) => {
            let det = example("EX4_DET");
            out.push((
                "canonical form of EX4_COIN x EX4_DET",
                Case::new(
                    vec![example("EX4_COIN"), det.clone()],
                    vec![
                        Step::product_with(&det, false),
                        Step::CanonicalBinary { max_generated: None, join_closure: false },
                    ],
                ),
            ))
        }
        (Dc, Determinism) => {
            out.push(("PROP8_DET_IC: q = 0 in c1, q = 1 in c2", Case::new(vec![example("PROP8_DET_IC")], vec![])))
        }
        (Dc, DetRedundancy) => out.push((
            "PROP9_BASE with q added to c2 as constantly 0",
            Case::new(
                vec![example("PROP9_BASE")],
                vec![Step::AddDeterministic {
                    q: "q".into(),
                    outcomes: None,
                    context: "c2".into(),
                    outcome: "0".into(),
                }],
            ),
        )),
        (Dnc | Dccc, Nestedness) => out.push((
            "PROP4_PRBOX_IC with x dropped, leaving the PR box",
            Case::new(vec![example("PROP4_PRBOX_IC")], vec![Step::DropObservables { observables: strs(&["x"]) }]),
        )),
        (Dnc | Dccc, Coarsening) => out.push((
            "PROP5_PRBOX_SPLIT with 0a, 0b merged, giving the PR box",
            Case::new(
                vec![example("PROP5_PRBOX_SPLIT")],
                vec![Step::coarsen("A0", &[("0a", "0"), ("0b", "0"), ("1", "1")])],
            ),
        )),
        (Dnc | Dccc, Relabeling) => out.push((
            "PROP7_PRBOX_IC_EXT with x relabeled per context",
            Case::new(
                vec![example("PROP7_PRBOX_IC_EXT")],
                vec![Step::Relabel {
                    q: "x".into(),
                    partition: vec![strs(&["c5"]), strs(&["c6"])],
                    new_ids: strs(&["x5", "x6"]),
                }],
            ),
        )),
        _ => {}
    }
    out
}
