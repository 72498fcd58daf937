//! Built-in behaviors: the worked examples, the proof chains of the
//! impossibility theorems, and witnesses for the blunt extensions.

use crate::model::{Behavior, BehaviorBuilder};
use crate::transforms::join;

pub struct Entry {
    pub name: &'static str,
    pub summary: &'static str,
    build: fn() -> Behavior,
}

impl Entry {
    pub fn behavior(&self) -> Behavior {
        (self.build)()
    }
}

const H: &str = "1/2";
const T: &str = "1/3";

fn bin(b: BehaviorBuilder, ids: &[&str]) -> BehaviorBuilder {
    ids.iter().fold(b, |b, q| b.observable(q, &["0", "1"]))
}

fn correlated(b: BehaviorBuilder, c: &str, m: &[&str]) -> BehaviorBuilder {
    b.context(c, m, &[(&["0", "0"], H), (&["1", "1"], H)])
}

fn anticorrelated(b: BehaviorBuilder, c: &str, m: &[&str]) -> BehaviorBuilder {
    b.context(c, m, &[(&["0", "1"], H), (&["1", "0"], H)])
}

fn uniform(b: BehaviorBuilder, c: &str, q: &str) -> BehaviorBuilder {
    b.context(c, &[q], &[(&["0"], H), (&["1"], H)])
}

fn point(b: BehaviorBuilder, c: &str, q: &str, u: &str) -> BehaviorBuilder {
    b.context(c, &[q], &[(&[u], "1")])
}

fn ex1() -> Behavior {
    let b = bin(BehaviorBuilder::new(), &["q1", "q2"]);
    let b = correlated(b, "c1", &["q1", "q2"]);
    let b = anticorrelated(b, "c2", &["q1", "q2"]);
    b.context("c3", &["q1", "q2"], &[(&["0", "0"], "1")])
        .context("c4", &["q1", "q2"], &[(&["1", "1"], "1")])
        .build()
        .unwrap()
}

fn ex1_marginal() -> Behavior {
    let b = bin(BehaviorBuilder::new(), &["q1", "q2"]);
    let b = correlated(b, "c1", &["q1", "q2"]);
    anticorrelated(b, "c2", &["q1", "q2"]).build().unwrap()
}

fn ex2_p() -> Behavior {
    BehaviorBuilder::new()
        .observable("q", &["1", "1'", "2", "2'", "3", "3'"])
        .context("c1", &["q"], &[(&["2'"], H), (&["3'"], H)])
        .context("c2", &["q"], &[(&["1'"], H), (&["3"], H)])
        .context("c3", &["q"], &[(&["1"], H), (&["2"], H)])
        .build()
        .unwrap()
}

fn ex2_pprime() -> Behavior {
    BehaviorBuilder::new()
        .observable("q", &["1", "2", "3"])
        .context("c1", &["q"], &[(&["2"], H), (&["3"], H)])
        .context("c2", &["q"], &[(&["1"], H), (&["3"], H)])
        .context("c3", &["q"], &[(&["1"], H), (&["2"], H)])
        .build()
        .unwrap()
}

fn ex3_p() -> Behavior {
    bin(BehaviorBuilder::new(), &["q1", "q2"])
        .context("c1", &["q1", "q2"], &[(&["0", "1"], H), (&["1", "1"], H)])
        .context("c2", &["q1", "q2"], &[(&["0", "0"], H), (&["1", "0"], H)])
        .build()
        .unwrap()
}

fn ex3_pprime() -> Behavior {
    let b = bin(BehaviorBuilder::new(), &["q1", "q3"]);
    let b = correlated(b, "c1", &["q1", "q3"]);
    anticorrelated(b, "c2", &["q1", "q3"]).build().unwrap()
}

fn coin() -> Behavior {
    uniform(bin(BehaviorBuilder::new(), &["q1"]), "c0", "q1").build().unwrap()
}

fn ex4_det() -> Behavior {
    let b = bin(BehaviorBuilder::new(), &["q2"]);
    point(point(b, "c1", "q2", "1"), "c2", "q2", "0").build().unwrap()
}

fn thm2_p2() -> Behavior {
    let mut b = bin(BehaviorBuilder::new(), &["q2"]);
    for (c, u) in [("c1", "1"), ("c2", "1"), ("c3", "1"), ("c4", "0")] {
        b = point(b, c, "q2", u);
    }
    b.build().unwrap()
}

fn thm2_p3() -> Behavior {
    let mut b = bin(BehaviorBuilder::new(), &["q1", "q2"]);
    for c in ["c1", "c2", "c3"] {
        b = b.context(c, &["q1", "q2"], &[(&["0", "1"], H), (&["1", "1"], H)]);
    }
    b.context("c4", &["q1", "q2"], &[(&["0", "0"], H), (&["1", "0"], H)]).build().unwrap()
}

fn thm2_p4() -> Behavior {
    let mut b = bin(BehaviorBuilder::new(), &["q1", "q3"]);
    for c in ["c1", "c2", "c3"] {
        b = correlated(b, c, &["q1", "q3"]);
    }
    anticorrelated(b, "c4", &["q1", "q3"]).build().unwrap()
}

fn thm2_p5() -> Behavior {
    let b = bin(BehaviorBuilder::new(), &["q1", "q3", "q4", "q5"]);
    let b = correlated(b, "c1", &["q1", "q3"]);
    let b = correlated(b, "c2", &["q1", "q5"]);
    let b = correlated(b, "c3", &["q4", "q3"]);
    anticorrelated(b, "c4", &["q4", "q5"]).build().unwrap()
}

fn thm3_p() -> Behavior {
    let mut b = bin(BehaviorBuilder::new(), &["q1"]);
    for c in ["c1", "c2", "c3", "c4"] {
        b = uniform(b, c, "q1");
    }
    b.build().unwrap()
}

fn prop1_tilde() -> Behavior {
    BehaviorBuilder::new()
        .observable("q1", &["0", "0'", "1", "1'"])
        .observable("q2", &["0", "0'", "1", "1'"])
        .context("c1", &["q1", "q2"], &[(&["0", "0"], H), (&["1", "1"], H)])
        .context("c2", &["q1", "q2"], &[(&["0'", "1'"], H), (&["1'", "0'"], H)])
        .build()
        .unwrap()
}

fn prop2_p() -> Behavior {
    let b =
        bin(BehaviorBuilder::new(), &["a", "b"]).observable("y", &["1", "2", "3"]).observable("z", &["1", "2", "3"]);
    b.context("c", &["a", "b", "y"], &[(&["0", "0", "1"], T), (&["1", "0", "2"], T), (&["1", "0", "3"], T)])
        .context("c'", &["a", "b", "z"], &[(&["1", "0", "1"], T), (&["1", "0", "2"], T), (&["1", "1", "3"], T)])
        .context("d", &["y", "z"], &[(&["1", "1"], T), (&["2", "2"], T), (&["3", "3"], T)])
        .build()
        .unwrap()
}

fn prop2_joined() -> Behavior {
    join(&prop2_p(), &["a".into(), "b".into()], "q").unwrap()
}

fn pr_box_with(b: BehaviorBuilder) -> BehaviorBuilder {
    let b = bin(b, &["A0", "A1", "B0", "B1"]);
    let b = correlated(b, "A1B0", &["A1", "B0"]);
    let b = correlated(b, "A0B1", &["A0", "B1"]);
    let b = anticorrelated(b, "A1B1", &["A1", "B1"]);
    correlated(b, "A0B0", &["A0", "B0"])
}

fn pr_box() -> Behavior {
    pr_box_with(BehaviorBuilder::new()).build().unwrap()
}

fn prop4() -> Behavior {
    let b = bin(BehaviorBuilder::new(), &["A0", "A1", "B0", "B1", "x"]);
    let b = correlated(b, "A1B0", &["A1", "B0"]);
    let b = b.context("A0B1", &["A0", "B1", "x"], &[(&["0", "0", "1"], H), (&["1", "1", "1"], H)]);
    let b = anticorrelated(b, "A1B1", &["A1", "B1"]);
    b.context("A0B0", &["A0", "B0", "x"], &[(&["0", "0", "0"], H), (&["1", "1", "0"], H)]).build().unwrap()
}

fn prop5() -> Behavior {
    let b = bin(BehaviorBuilder::new(), &["A1", "B0", "B1"]).observable("A0", &["0a", "0b", "1"]);
    let b = correlated(b, "A1B0", &["A1", "B0"]);
    let b = b.context("A0B1", &["A0", "B1"], &[(&["0b", "0"], H), (&["1", "1"], H)]);
    let b = anticorrelated(b, "A1B1", &["A1", "B1"]);
    b.context("A0B0", &["A0", "B0"], &[(&["0a", "0"], H), (&["1", "1"], H)]).build().unwrap()
}

fn prop7() -> Behavior {
    let b = pr_box_with(BehaviorBuilder::new()).observable("x", &["0", "1"]);
    point(point(b, "c5", "x", "0"), "c6", "x", "1").build().unwrap()
}

fn prop8() -> Behavior {
    let b = bin(BehaviorBuilder::new(), &["q"]);
    point(point(b, "c1", "q", "0"), "c2", "q", "1").build().unwrap()
}

fn prop9() -> Behavior {
    let b = bin(BehaviorBuilder::new(), &["q", "r"]);
    uniform(uniform(b, "c1", "q"), "c2", "r").build().unwrap()
}

pub const ENTRIES: &[Entry] = &[
    Entry {
        name: "EX1",
        summary: "two binary observables in four contexts, noncontextual under maximal couplings",
        build: ex1,
    },
    Entry { name: "EX1_MARGINAL", summary: "the 2-cycle: EX1 restricted to c1, c2", build: ex1_marginal },
    Entry { name: "EX2_P", summary: "six-outcome observable in three contexts", build: ex2_p },
    Entry { name: "EX2_PPRIME", summary: "EX2_P with i and i' identified", build: ex2_pprime },
    Entry { name: "EX3_P", summary: "coin q1 with context-dependent deterministic q2", build: ex3_p },
    Entry { name: "EX3_PPRIME", summary: "EX3_P with q3 = [q1 = q2], q2 dropped", build: ex3_pprime },
    Entry { name: "EX4_COIN", summary: "one fair binary observable in one context", build: coin },
    Entry { name: "EX4_DET", summary: "one observable, deterministic 1 in c1 and 0 in c2", build: ex4_det },
    Entry { name: "THM2_P1", summary: "coin flip", build: coin },
    Entry { name: "THM2_P2", summary: "q2 deterministic 1,1,1,0 over c1..c4", build: thm2_p2 },
    Entry { name: "THM2_P3", summary: "THM2_P1 x THM2_P2 with contexts renamed c1..c4", build: thm2_p3 },
    Entry { name: "THM2_P4", summary: "q3 = [q1 = q2] added to THM2_P3, q2 dropped", build: thm2_p4 },
    Entry {
        name: "THM2_P5",
        summary: "THM2_P4 with q1 relabeled q4 on c3,c4 and q3 relabeled q5 on c2,c4 (a PR box)",
        build: thm2_p5,
    },
    Entry { name: "THM3_P", summary: "fair q1 in four contexts", build: thm3_p },
    Entry { name: "THM3_PPRIME", summary: "THM3_P with q2 added deterministically (1,1,1,0)", build: thm2_p3 },
    Entry { name: "PROP1_TILDE", summary: "refinement of the 2-cycle with disjoint supports", build: prop1_tilde },
    Entry { name: "PROP2_P", summary: "a, b binary, y, z ternary in contexts c, c', d", build: prop2_p },
    Entry { name: "PROP2_JOINED", summary: "PROP2_P with (a,b) joined as q", build: prop2_joined },
    Entry { name: "PR_BOX", summary: "PR box on A0, A1, B0, B1", build: pr_box },
    Entry { name: "PROP4_PRBOX_IC", summary: "PR box plus x, deterministic 0 in A0B0 and 1 in A0B1", build: prop4 },
    Entry {
        name: "PROP5_PRBOX_SPLIT",
        summary: "PR box with A0 = 0 split into 0a in A0B0 and 0b in A0B1",
        build: prop5,
    },
    Entry {
        name: "PROP7_PRBOX_IC_EXT",
        summary: "PR box plus x in new contexts c5 (x = 0) and c6 (x = 1)",
        build: prop7,
    },
    Entry { name: "PROP8_DET_IC", summary: "q deterministic 0 in c1 and 1 in c2", build: prop8 },
    Entry { name: "PROP9_BASE", summary: "fair q in c1 and fair r in c2", build: prop9 },
];

pub fn names() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.name).collect()
}

pub fn get(name: &str) -> Option<Behavior> {
    ENTRIES.iter().find(|e| e.name == name).map(Entry::behavior)
}

/// Corpus behavior by name; panics on an unknown name.
pub fn example(name: &str) -> Behavior {
    get(name).unwrap_or_else(|| panic!("no corpus entry {name:?}"))
}

/// Every entry, in listing order.
pub fn corpus() -> Vec<(&'static str, Behavior)> {
    ENTRIES.iter().map(|e| (e.name, e.behavior())).collect()
}
