//! The impossibility proof chains, rebuilt from transformations and checked
//! against the corpus tables, with every extension's verdicts along the way.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::deciders::{decide, ks_decide, DecideError, Extension, Status};
use crate::io::BehaviorDoc;
use crate::iso::find_isomorphism;
use crate::model::{is_nondisturbing, Behavior};
use crate::transforms::{
    add_deterministic, drop_observables, identity_map, marginalize, post_process, product, relabel, rename, OutcomeMap,
    Renaming, SubscenarioSpec, TransformError,
};

use super::corpus::example;
use super::AxiomId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Thm2,
    Thm3,
}

impl std::str::FromStr for Which {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "thm2" => Ok(Which::Thm2),
            "thm3" => Ok(Which::Thm3),
            _ => Err(format!("unknown chain {s:?}, expected thm2 or thm3")),
        }
    }
}

/// Extensions traced along the chains.
pub const CHAIN_EXTENSIONS: [Extension; 7] = [
    Extension::Cbd1,
    Extension::Cbd2,
    Extension::Bcbd2,
    Extension::Cbcbd2Lifted,
    Extension::Dc,
    Extension::Dnc,
    Extension::Dccc,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub name: String,
    pub description: String,
    /// The axiom that forces this step's verdict, given earlier ones.
    pub axiom: AxiomId,
    /// Indices of the steps the axiom takes as premises.
    pub premises: Vec<usize>,
    /// Corpus entry this step must reproduce exactly, and whether it does.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<(String, bool)>,
    pub behavior: BehaviorDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainViolation {
    pub step: usize,
    pub axiom: AxiomId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionTrace {
    pub extension: Extension,
    pub verdicts: Vec<Status>,
    pub first_violation: Option<ChainViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub which: Which,
    pub steps: Vec<ChainStep>,
    /// The two-relabeling route to the final behavior gives the same tables.
    pub relabel_route_agrees: bool,
    pub final_isomorphic_to_pr_box: bool,
    pub final_ks: Status,
    pub traces: Vec<ExtensionTrace>,
}

impl ChainReport {
    /// Every table check, the isomorphism and the final KS verdict hold.
    pub fn all_checks_pass(&self) -> bool {
        self.steps.iter().all(|s| s.expected.as_ref().is_none_or(|(_, ok)| *ok))
            && self.relabel_route_agrees
            && self.final_isomorphic_to_pr_box
            && self.final_ks == Status::Contextual
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let name_w = self.steps.iter().map(|s| s.name.len()).max().unwrap_or(4).max(4);
        let _ = write!(out, "{:<name_w$}  {:<24}", "step", "axiom");
        for t in &self.traces {
            let _ = write!(out, "  {:<15}", t.extension.label());
        }
        out.push('\n');
        for (i, s) in self.steps.iter().enumerate() {
            let _ = write!(out, "{:<name_w$}  {:<24}", s.name, s.axiom.label());
            for t in &self.traces {
                let mark = match &t.first_violation {
                    Some(v) if v.step == i => "!",
                    _ => "",
                };
                let _ = write!(out, "  {:<15}", format!("{}{}", t.verdicts[i], mark));
            }
            out.push('\n');
        }
        out.push('\n');
        for s in &self.steps {
            let _ = write!(out, "{}: {}", s.name, s.description);
            if let Some((name, ok)) = &s.expected {
                let _ = write!(out, " [{} {}]", if *ok { "matches" } else { "DIFFERS FROM" }, name);
            }
            out.push('\n');
        }
        out.push('\n');
        for t in &self.traces {
            match &t.first_violation {
                Some(v) => {
                    let _ = writeln!(
                        out,
                        "{} first violates {} at {}",
                        t.extension.label(),
                        v.axiom.label(),
                        self.steps[v.step].name
                    );
                }
                None => {
                    let _ = writeln!(out, "{} violates none of the chain's axioms", t.extension.label());
                }
            }
        }
        let _ = writeln!(out, "relabeling route agrees: {}", if self.relabel_route_agrees { "yes" } else { "no" });
        let _ = writeln!(
            out,
            "final behavior isomorphic to PR box: {}; ks verdict: {}",
            if self.final_isomorphic_to_pr_box { "yes" } else { "no" },
            self.final_ks
        );
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ChainError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Decide(#[from] DecideError),
}

fn s(x: &str) -> String {
    x.to_string()
}

fn strs(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

struct Builder {
    steps: Vec<(ChainStep, Behavior)>,
}

impl Builder {
    fn push(
        &mut self,
        name: &str,
        description: &str,
        axiom: AxiomId,
        premises: &[usize],
        b: Behavior,
        expected: Option<&str>,
    ) -> usize {
        let expected = expected.map(|e| (e.to_string(), example(e) == b));
        let step = ChainStep {
            name: name.into(),
            description: description.into(),
            axiom,
            premises: premises.to_vec(),
            expected,
            behavior: BehaviorDoc::from_behavior(&b),
        };
        self.steps.push((step, b));
        self.steps.len() - 1
    }

    fn last(&self) -> &Behavior {
        &self.steps.last().unwrap().1
    }
}

fn equality_map() -> OutcomeMap {
    OutcomeMap::from_pairs(&[(&["0", "0"], "1"), (&["0", "1"], "0"), (&["1", "0"], "0"), (&["1", "1"], "1")])
        .with_targets(&["0", "1"])
}

/// From P3 on, both chains coincide.
fn tail(bld: &mut Builder, p3: usize) -> Result<bool, ChainError> {
    let p3a = post_process(bld.last(), &strs(&["q1", "q2"]), &equality_map(), "q3")?;
    let i = bld.push("P3+q3", "P3 with q3 = [q1 = q2] incorporated", AxiomId::PostProcessing, &[p3], p3a, None);
    let p4 = drop_observables(bld.last(), &[s("q2")])?;
    let i = bld.push("P4", "q2 dropped", AxiomId::Nestedness, &[i], p4, Some("THM2_P4"));
    let p4_copy = bld.last().clone();
    let with_q4 = post_process(bld.last(), &[s("q1")], &identity_map(bld.last(), &[s("q1")])?, "q4")?;
    let i = bld.push("P4+q4", "copy q4 = q1 incorporated", AxiomId::PostProcessing, &[i], with_q4, None);
    let with_q5 = post_process(bld.last(), &[s("q3")], &identity_map(bld.last(), &[s("q3")])?, "q5")?;
    let i = bld.push("P4+q4+q5", "copy q5 = q3 incorporated", AxiomId::PostProcessing, &[i], with_q5, None);
    let keep: Vec<(String, String)> = [
        ("q1", "c1"),
        ("q1", "c2"),
        ("q4", "c3"),
        ("q4", "c4"),
        ("q3", "c1"),
        ("q3", "c3"),
        ("q5", "c2"),
        ("q5", "c4"),
    ]
    .iter()
    .map(|(q, c)| (s(q), s(c)))
    .collect();
    let p5 = marginalize(bld.last(), &SubscenarioSpec { pairs: keep })?;
    let i = bld.push(
        "P5",
        "each copy kept only where the relabeling puts it, originals dropped there",
        AxiomId::Nestedness,
        &[i],
        p5,
        Some("THM2_P5"),
    );
    // The direct route: relabel q1 on {c3,c4} and q3 on {c2,c4}.
    let r = relabel(&p4_copy, "q1", &[strs(&["c1", "c2"]), strs(&["c3", "c4"])], &strs(&["q1", "q4"]))?;
    let r = relabel(&r, "q3", &[strs(&["c1", "c3"]), strs(&["c2", "c4"])], &strs(&["q3", "q5"]))?;
    let agrees = r == bld.steps[i].1;
    let last = bld.last().clone();
    bld.push("P5 (KS)", "the final behavior, which is nondisturbing", AxiomId::KsCompat, &[], last, None);
    Ok(agrees)
}

fn first_violation(verdicts: &[Status], ks: &[Option<Status>], steps: &[ChainStep]) -> Option<ChainViolation> {
    for (i, st) in steps.iter().enumerate() {
        let v = verdicts[i];
        let bad = match st.axiom {
            AxiomId::KsCompat => ks[i].is_some_and(|k| k != v && v != Status::Undefined),
            AxiomId::Determinism => v == Status::Contextual,
            _ => v == Status::Contextual && st.premises.iter().all(|&p| verdicts[p] == Status::Noncontextual),
        };
        if bad {
            return Some(ChainViolation { step: i, axiom: st.axiom });
        }
    }
    None
}

pub fn theorem_chain(which: Which) -> Result<ChainReport, ChainError> {
    let mut bld = Builder { steps: Vec::new() };
    let p3 = match which {
        Which::Thm2 => {
            let p1 = bld.push("P1", "coin flip", AxiomId::KsCompat, &[], example("THM2_P1"), None);
            let p2 = bld.push("P2", "q2 deterministic 1,1,1,0", AxiomId::Determinism, &[], example("THM2_P2"), None);
            let prod = product(&bld.steps[p1].1, &bld.steps[p2].1, false)?;
            let contexts: BTreeMap<String, String> =
                ["c1", "c2", "c3", "c4"].iter().map(|c| (format!("c0::{c}"), s(c))).collect();
            let p3 = rename(&prod, &Renaming { contexts, ..Default::default() })?;
            bld.push("P3", "P1 x P2, contexts named after P2's", AxiomId::Independence, &[p1, p2], p3, Some("THM2_P3"))
        }
        Which::Thm3 => {
            let p = bld.push("P", "fair q1 in four contexts", AxiomId::KsCompat, &[], example("THM3_P"), None);
            let mut prev = p;
            let bin = strs(&["0", "1"]);
            for (c, u) in [("c1", "1"), ("c2", "1"), ("c3", "1"), ("c4", "0")] {
                let next = add_deterministic(bld.last(), "q2", Some(&bin), c, u)?;
                let name = format!("P+q2@{c}");
                let desc = format!("q2 = {u} added to {c}");
                let expected = if c == "c4" { Some("THM3_PPRIME") } else { None };
                prev = bld.push(&name, &desc, AxiomId::DetRedundancy, &[prev], next, expected);
            }
            prev
        }
    };
    let relabel_route_agrees = tail(&mut bld, p3)?;
    if which == Which::Thm3 {
        // The expanded behavior must equal the product built in the other chain.
        let ok = bld.steps[p3].1 == example("THM2_P3");
        bld.steps[p3].0.expected = Some((s("THM2_P3"), ok && bld.steps[p3].0.expected.as_ref().is_some_and(|e| e.1)));
    }
    let final_b = bld.last().clone();
    let final_isomorphic_to_pr_box = find_isomorphism(&final_b, &example("PR_BOX")).ok().flatten().is_some();
    let final_ks = ks_decide(&final_b)?.status;

    let ks: Vec<Option<Status>> = bld
        .steps
        .iter()
        .map(|(_, b)| if is_nondisturbing(b) { ks_decide(b).ok().map(|v| v.status) } else { None })
        .collect();
    let steps: Vec<ChainStep> = bld.steps.iter().map(|(s, _)| s.clone()).collect();
    let mut traces = Vec::new();
    for ext in CHAIN_EXTENSIONS {
        let verdicts =
            bld.steps.iter().map(|(_, b)| decide(b, ext).map(|v| v.status)).collect::<Result<Vec<_>, _>>()?;
        let mut first = first_violation(&verdicts, &ks, &steps);
        if let Some(v) = first.as_mut() {
            if ext == Extension::Cbcbd2Lifted && v.axiom == AxiomId::Independence {
                v.axiom = AxiomId::IndependenceCanonical;
            }
        }
        traces.push(ExtensionTrace { extension: ext, verdicts, first_violation: first });
    }
    Ok(ChainReport { which, steps, relabel_route_agrees, final_isomorphic_to_pr_box, final_ks, traces })
}
