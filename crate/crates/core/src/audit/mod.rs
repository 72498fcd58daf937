//! Executable axioms. A [`Case`] is a list of input behaviors plus a pipeline
//! applied to the first input; checking it under an extension either finds a
//! pair of verdicts that contradicts the axiom or it does not.

pub mod chain;
pub mod corpus;
pub mod fuzz;
pub mod generator;
pub mod table1;
mod witnesses;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::deciders::{decide, ks_decide, DecideError, Extension, Status};
use crate::io::BehaviorDoc;
use crate::model::{is_deterministic, is_nondisturbing, Behavior};
use crate::transforms::{Step, TransformError};

pub use chain::{theorem_chain, ChainReport, ChainStep, Which};
pub use fuzz::{fuzz_axiom, random_case, sub_seed};
pub use generator::{random_behavior, GenError, GenFlags, GenParams};
pub use table1::{table1, Cell, CellStatus, Table1};
pub use witnesses::builtin_cases;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxiomId {
    KsCompat,
    Isomorphism,
    Nestedness,
    Coarsening,
    PostProcessing,
    Joining,
    Independence,
    IndependenceCanonical,
    Determinism,
    DetRedundancy,
    Relabeling,
}

impl AxiomId {
    pub const ALL: [AxiomId; 11] = [
        AxiomId::KsCompat,
        AxiomId::Isomorphism,
        AxiomId::Nestedness,
        AxiomId::Coarsening,
        AxiomId::PostProcessing,
        AxiomId::Joining,
        AxiomId::Independence,
        AxiomId::IndependenceCanonical,
        AxiomId::Determinism,
        AxiomId::DetRedundancy,
        AxiomId::Relabeling,
    ];

    pub fn code(self) -> &'static str {
        match self {
            AxiomId::KsCompat => "ks-compat",
            AxiomId::Isomorphism => "isomorphism",
            AxiomId::Nestedness => "nestedness",
            AxiomId::Coarsening => "coarsening",
            AxiomId::PostProcessing => "post-processing",
            AxiomId::Joining => "joining",
            AxiomId::Independence => "independence",
            AxiomId::IndependenceCanonical => "independence-canonical",
            AxiomId::Determinism => "determinism",
            AxiomId::DetRedundancy => "det-redundancy",
            AxiomId::Relabeling => "relabeling",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AxiomId::KsCompat => "KS Compatibility",
            AxiomId::Isomorphism => "Isomorphism",
            AxiomId::Nestedness => "Nestedness",
            AxiomId::Coarsening => "Coarsening",
            AxiomId::PostProcessing => "Post-processing",
            AxiomId::Joining => "Joining",
            AxiomId::Independence => "Independence",
            AxiomId::IndependenceCanonical => "Independence (canonical)",
            AxiomId::Determinism => "Determinism",
            AxiomId::DetRedundancy => "Det. Redundancy",
            AxiomId::Relabeling => "Relabeling",
        }
    }

    /// Axioms of the form "if the inputs are noncontextual, so is the output".
    pub fn is_implication(self) -> bool {
        !matches!(self, AxiomId::KsCompat | AxiomId::Isomorphism | AxiomId::Determinism)
    }

    /// Why the axiom says nothing about an extension, if it does not apply.
    pub fn not_applicable(self, ext: Extension) -> Option<&'static str> {
        match self {
            AxiomId::Joining if ext.is_binary() => Some("joins of binary observables are not binary"),
            _ => None,
        }
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for AxiomId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        AxiomId::ALL.into_iter().find(|a| a.code() == s).ok_or_else(|| format!("unknown axiom {s:?}"))
    }
}

/// Inputs and a pipeline over the first one. For independence the second
/// input is also the product operand.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub inputs: Vec<Behavior>,
    pub steps: Vec<Step>,
}

impl Case {
    pub fn new(inputs: Vec<Behavior>, steps: Vec<Step>) -> Self {
        Case { inputs, steps }
    }
}

/// A replayable counterexample: single-step pipeline, the verdicts that
/// contradict the axiom, and what they were computed on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomWitness {
    pub extension: Extension,
    pub axiom: AxiomId,
    pub inputs: Vec<BehaviorDoc>,
    pub steps: Vec<Step>,
    /// `(what was classified, verdict)`, in evaluation order.
    pub verdicts: Vec<(String, Status)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum AuditOutcome {
    Violated {
        witness: Box<AxiomWitness>,
    },
    NoCounterexampleFound {
        trials: usize,
        seed: u64,
        /// Trials whose premises held, so the axiom was actually exercised.
        exercised: usize,
        /// Trials abandoned on a budget error.
        skipped: usize,
    },
    NotApplicable {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub extension: Extension,
    pub axiom: AxiomId,
    #[serde(flatten)]
    pub outcome: AuditOutcome,
}

impl AuditReport {
    pub fn is_violated(&self) -> bool {
        matches!(self.outcome, AuditOutcome::Violated { .. })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn render_text(&self) -> String {
        let head = format!("{} / {}: ", self.extension.label(), self.axiom.label());
        match &self.outcome {
            AuditOutcome::Violated { witness } => {
                let mut s = head + "violated\n";
                for st in &witness.steps {
                    s += &format!("  step: {}\n", st.op());
                }
                for (what, v) in &witness.verdicts {
                    s += &format!("  {what}: {v}\n");
                }
                s
            }
            AuditOutcome::NoCounterexampleFound { trials, seed, exercised, skipped } => format!(
                "{head}no counterexample in {trials} trials (seed {seed}, {exercised} exercised, {skipped} skipped)\n"
            ),
            AuditOutcome::NotApplicable { reason } => format!("{head}not applicable ({reason})\n"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error(transparent)]
    Decide(#[from] DecideError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("malformed case: {0}")]
    Malformed(String),
}

impl AuditError {
    /// Budget exhaustion is skipped and counted, not fatal.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            AuditError::Decide(DecideError::Budget { .. })
                | AuditError::Decide(DecideError::Canonical(TransformError::Budget { .. }))
                | AuditError::Transform(TransformError::Budget { .. })
                | AuditError::Decide(DecideError::IsoBudget(_))
        )
    }
}

/// What checking one case established.
#[derive(Debug, Clone, PartialEq)]
pub enum CaseOutcome {
    Violated(Box<AxiomWitness>),
    /// Premises held and the conclusion did too.
    Holds,
    /// Premises failed, or a verdict was undefined.
    Vacuous,
}

fn status(b: &Behavior, ext: Extension) -> Result<Status, DecideError> {
    Ok(decide(b, ext)?.status)
}

fn docs(bs: &[&Behavior]) -> Vec<BehaviorDoc> {
    bs.iter().map(|b| BehaviorDoc::from_behavior(b)).collect()
}

/// Checks one case. Multi-step pipelines are walked step by step and the
/// first step that turns a noncontextual behavior into a contextual one is
/// reported on its own.
pub fn check_case(ext: Extension, axiom: AxiomId, case: &Case) -> Result<CaseOutcome, AuditError> {
    let first = case.inputs.first().ok_or_else(|| AuditError::Malformed("no inputs".into()))?;
    let violated = |inputs: Vec<BehaviorDoc>, steps: Vec<Step>, verdicts: Vec<(String, Status)>| {
        CaseOutcome::Violated(Box::new(AxiomWitness { extension: ext, axiom, inputs, steps, verdicts }))
    };
    match axiom {
        AxiomId::KsCompat => {
            if !is_nondisturbing(first) {
                return Ok(CaseOutcome::Vacuous);
            }
            let mine = status(first, ext)?;
            let ks = ks_decide(first)?.status;
            if mine == ks {
                return Ok(CaseOutcome::Holds);
            }
            Ok(violated(
                docs(&[first]),
                vec![],
                vec![(format!("input under {ext}"), mine), ("input under ks".into(), ks)],
            ))
        }
        AxiomId::Determinism => {
            if !is_deterministic(first) {
                return Ok(CaseOutcome::Vacuous);
            }
            match status(first, ext)? {
                Status::Contextual => {
                    Ok(violated(docs(&[first]), vec![], vec![(format!("input under {ext}"), Status::Contextual)]))
                }
                Status::Noncontextual => Ok(CaseOutcome::Holds),
                Status::Undefined => Ok(CaseOutcome::Vacuous),
            }
        }
        AxiomId::Isomorphism => {
            let out = crate::transforms::run_pipeline(first, &case.steps).map_err(|e| match e {
                crate::transforms::PipelineError::Transform { source, .. } => AuditError::Transform(source),
                other => AuditError::Malformed(other.to_string()),
            })?;
            let (a, b) = (status(first, ext)?, status(&out, ext)?);
            if a == Status::Undefined || b == Status::Undefined {
                return Ok(CaseOutcome::Vacuous);
            }
            if a == b {
                return Ok(CaseOutcome::Holds);
            }
            Ok(violated(
                docs(&[first]),
                case.steps.clone(),
                vec![(format!("input under {ext}"), a), (format!("output under {ext}"), b)],
            ))
        }
        _ => {
            let mut premises = Vec::new();
            for (i, b) in case.inputs.iter().enumerate() {
                let s = status(b, ext)?;
                premises.push((format!("input {} under {ext}", i + 1), s));
                if s != Status::Noncontextual {
                    return Ok(CaseOutcome::Vacuous);
                }
            }
            let mut cur = first.clone();
            for (k, step) in case.steps.iter().enumerate() {
                let next = step.apply(&cur)?;
                let s = status(&next, ext)?;
                if s == Status::Contextual {
                    let mut verdicts = if k == 0 {
                        premises
                    } else {
                        let mut v = vec![(format!("input 1 under {ext}"), Status::Noncontextual)];
                        v.extend(premises.into_iter().skip(1));
                        v
                    };
                    verdicts.push((format!("output under {ext}"), s));
                    let mut inputs = vec![BehaviorDoc::from_behavior(&cur)];
                    inputs.extend(case.inputs.iter().skip(1).map(BehaviorDoc::from_behavior));
                    return Ok(violated(inputs, vec![step.clone()], verdicts));
                }
                if s != Status::Noncontextual {
                    // Later steps would start from an undefined behavior.
                    return Ok(CaseOutcome::Vacuous);
                }
                cur = next;
            }
            Ok(CaseOutcome::Holds)
        }
    }
}

/// Runs `case` and reports the first contradiction, if any.
pub fn check_axiom(ext: Extension, axiom: AxiomId, case: &Case) -> Result<AuditReport, AuditError> {
    if let Some(reason) = axiom.not_applicable(ext) {
        return Ok(AuditReport {
            extension: ext,
            axiom,
            outcome: AuditOutcome::NotApplicable { reason: reason.into() },
        });
    }
    let outcome = match check_case(ext, axiom, case)? {
        CaseOutcome::Violated(witness) => AuditOutcome::Violated { witness },
        CaseOutcome::Holds => AuditOutcome::NoCounterexampleFound { trials: 1, seed: 0, exercised: 1, skipped: 0 },
        CaseOutcome::Vacuous => AuditOutcome::NoCounterexampleFound { trials: 1, seed: 0, exercised: 0, skipped: 0 },
    };
    Ok(AuditReport { extension: ext, axiom, outcome })
}

impl AxiomWitness {
    /// Re-runs the witness from its serialized form and checks that every
    /// recorded verdict comes out the same.
    pub fn replay(&self) -> Result<bool, AuditError> {
        let inputs = self
            .inputs
            .iter()
            .map(|d| d.to_behavior().map_err(|e| AuditError::Malformed(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let case = Case::new(inputs, self.steps.clone());
        Ok(match check_case(self.extension, self.axiom, &case)? {
            CaseOutcome::Violated(w) => w.verdicts == self.verdicts && w.steps == self.steps,
            _ => false,
        })
    }
}
