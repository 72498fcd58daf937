//! Contextuality deciders. Each maps a behavior to a three-way verdict with
//! an exact certificate: a global assignment or coupling when noncontextual,
//! Farkas multipliers when contextual.

pub mod coupling;
pub mod global;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::iso::find_isomorphism;
use crate::lp::LpError;
use crate::model::{is_consistently_connected, is_nondisturbing, Behavior, ModelError};
use crate::rational::Rational;
use crate::transforms::{canonical_binary, CanonicalOptions, TransformError};

pub use coupling::{
    check_coupling, copy_key, coupling_max_agreement, coupling_space, direct_influence, CouplingProblem, CouplingSpace,
    Criterion,
};
pub use global::{check_global, GlobalProblem};

pub const DEFAULT_ATOM_BUDGET: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    Ks,
    Cbd1,
    Cbd2,
    Bcbd2,
    Cbcbd2Strict,
    Cbcbd2Lifted,
    Dc,
    Dnc,
    Dccc,
}

impl Extension {
    pub const ALL: [Extension; 9] = [
        Extension::Ks,
        Extension::Cbd1,
        Extension::Cbd2,
        Extension::Bcbd2,
        Extension::Cbcbd2Strict,
        Extension::Cbcbd2Lifted,
        Extension::Dc,
        Extension::Dnc,
        Extension::Dccc,
    ];

    /// Command-line code.
    pub fn code(self) -> &'static str {
        match self {
            Extension::Ks => "ks",
            Extension::Cbd1 => "cbd1",
            Extension::Cbd2 => "cbd2",
            Extension::Bcbd2 => "bcbd2",
            Extension::Cbcbd2Strict => "cbcbd2-strict",
            Extension::Cbcbd2Lifted => "cbcbd2-lifted",
            Extension::Dc => "dc",
            Extension::Dnc => "dnc",
            Extension::Dccc => "dccc",
        }
    }

    /// Row label used in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            Extension::Ks => "KS",
            Extension::Cbd1 => "CbD1",
            Extension::Cbd2 => "CbD2",
            Extension::Bcbd2 => "B-CbD",
            Extension::Cbcbd2Strict => "CB-CbD (strict)",
            Extension::Cbcbd2Lifted => "CB-CbD",
            Extension::Dc => "DC",
            Extension::Dnc => "DnC",
            Extension::Dccc => "DCCC",
        }
    }

    /// Restricted to binary inputs.
    pub fn is_binary(self) -> bool {
        matches!(self, Extension::Bcbd2 | Extension::Cbcbd2Strict | Extension::Cbcbd2Lifted)
    }
}

impl fmt::Display for Extension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Extension {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Extension::ALL.into_iter().find(|e| e.code() == s).ok_or_else(|| format!("unknown extension {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Contextual,
    Noncontextual,
    Undefined,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Contextual => "contextual",
            Status::Noncontextual => "noncontextual",
            Status::Undefined => "undefined",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UndefinedReason {
    #[serde(rename = "disturbing-for-KS")]
    Disturbing,
    #[serde(rename = "non-binary-for-BCbD")]
    NonBinary,
    #[serde(rename = "non-canonical-for-CBCbD")]
    NonCanonical,
}

impl UndefinedReason {
    pub fn code(self) -> &'static str {
        match self {
            UndefinedReason::Disturbing => "disturbing-for-KS",
            UndefinedReason::NonBinary => "non-binary-for-BCbD",
            UndefinedReason::NonCanonical => "non-canonical-for-CBCbD",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingAtom {
    /// `q@c` → outcome label of that copy.
    pub assignment: BTreeMap<String, String>,
    #[serde(with = "crate::rational::serde_str")]
    pub p: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalAtom {
    pub assignment: BTreeMap<String, String>,
    #[serde(with = "crate::rational::serde_str")]
    pub p: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Witness {
    Global {
        atoms: Vec<GlobalAtom>,
    },
    Coupling {
        atoms: Vec<CouplingAtom>,
    },
    /// Row multipliers y with Aᵀy ≤ 0 and bᵀy > 0.
    Farkas {
        #[serde(with = "farkas_rows")]
        rows: Vec<(String, Rational)>,
    },
}

mod farkas_rows {
    use super::*;
    use crate::rational::{format_rational, parse_rational};
    use serde::{de::Error, Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Row {
        row: String,
        y: String,
    }

    pub fn serialize<S: Serializer>(rows: &[(String, Rational)], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Row> = rows.iter().map(|(r, y)| Row { row: r.clone(), y: format_rational(y) }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, Rational)>, D::Error> {
        Vec::<Row>::deserialize(d)?
            .into_iter()
            .map(|r| Ok((r.row, parse_rational(&r.y).map_err(D::Error::custom)?)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub extension: Extension,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<UndefinedReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    fn decided(extension: Extension, noncontextual: bool, witness: Option<Witness>) -> Self {
        let status = if noncontextual { Status::Noncontextual } else { Status::Contextual };
        Verdict { extension, status, reason: None, witness }
    }

    fn undefined(extension: Extension, reason: UndefinedReason) -> Self {
        Verdict { extension, status: Status::Undefined, reason: Some(reason), witness: None }
    }

    pub fn is_contextual(&self) -> bool {
        self.status == Status::Contextual
    }

    pub fn is_noncontextual(&self) -> bool {
        self.status == Status::Noncontextual
    }

    pub fn without_witness(mut self) -> Self {
        self.witness = None;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error("{what}: {count} exceeds the budget of {budget}")]
    Budget { what: String, count: usize, budget: usize },
    #[error("canonical binary representation failed: {0}")]
    Canonical(#[from] TransformError),
    #[error("isomorphism search budget of {0} nodes exceeded")]
    IsoBudget(u64),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Lp(LpError),
    #[error(transparent)]
    Model(ModelError),
    #[error("observable {observable:?} is not measured in both {first:?} and {second:?}")]
    NotInBoth { observable: String, first: String, second: String },
    #[error("the two contexts must differ, got {0:?} twice")]
    SameContext(String),
}

/// The blunt extensions, plus the fourth combination that is reserved but
/// not offered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BluntVariant {
    Dc,
    Dnc,
    Dccc,
    /// Inconsistently connected ⇒ contextual, disturbing but consistently
    /// connected ⇒ noncontextual.
    Iccc,
}

pub fn ks_decide(b: &Behavior) -> Result<Verdict, DecideError> {
    if !is_nondisturbing(b) {
        return Ok(Verdict::undefined(Extension::Ks, UndefinedReason::Disturbing));
    }
    let p = GlobalProblem::build(b, DEFAULT_ATOM_BUDGET)?;
    let (ok, w) = p.solve(b);
    Ok(Verdict::decided(Extension::Ks, ok, Some(w)))
}

fn coupling_decide(b: &Behavior, ext: Extension, criterion: Criterion) -> Result<Verdict, DecideError> {
    let p = CouplingProblem::build(b, criterion, DEFAULT_ATOM_BUDGET)?;
    let (ok, w) = p.solve(b);
    Ok(Verdict::decided(ext, ok, Some(w)))
}

pub fn cbd1_decide(b: &Behavior) -> Result<Verdict, DecideError> {
    coupling_decide(b, Extension::Cbd1, Criterion::Maximal)
}

pub fn cbd2_decide(b: &Behavior) -> Result<Verdict, DecideError> {
    coupling_decide(b, Extension::Cbd2, Criterion::Multimaximal)
}

fn all_binary(b: &Behavior) -> bool {
    b.observables().iter().all(|q| q.len() == 2)
}

pub fn binary_cbd2_decide(b: &Behavior) -> Result<Verdict, DecideError> {
    if !all_binary(b) {
        return Ok(Verdict::undefined(Extension::Bcbd2, UndefinedReason::NonBinary));
    }
    coupling_decide(b, Extension::Bcbd2, Criterion::Multimaximal)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalMode {
    /// Only behaviors already in canonical binary form are classified.
    Strict,
    /// Classify the canonical binary representation.
    Lifted,
}

/// True when the behavior is isomorphic to its own canonical binary form.
pub fn is_canonical_binary(b: &Behavior) -> Result<bool, DecideError> {
    if !all_binary(b) {
        return Ok(false);
    }
    let canon = canonical_binary(b, &CanonicalOptions::default())?;
    if canon == *b {
        return Ok(true);
    }
    if canon.observables().len() != b.observables().len() || canon.contexts().len() != b.contexts().len() {
        return Ok(false);
    }
    find_isomorphism(b, &canon).map(|m| m.is_some()).map_err(|e| DecideError::IsoBudget(e.budget))
}

pub fn canonical_binary_cbd2_decide(b: &Behavior, mode: CanonicalMode) -> Result<Verdict, DecideError> {
    match mode {
        CanonicalMode::Strict => {
            if !is_canonical_binary(b)? {
                return Ok(Verdict::undefined(Extension::Cbcbd2Strict, UndefinedReason::NonCanonical));
            }
            coupling_decide(b, Extension::Cbcbd2Strict, Criterion::Multimaximal)
        }
        CanonicalMode::Lifted => {
            let canon = canonical_binary(b, &CanonicalOptions::default())?;
            coupling_decide(&canon, Extension::Cbcbd2Lifted, Criterion::Multimaximal)
        }
    }
}

pub fn blunt_decide(b: &Behavior, variant: BluntVariant) -> Result<Verdict, DecideError> {
    let ext = match variant {
        BluntVariant::Dc => Extension::Dc,
        BluntVariant::Dnc => Extension::Dnc,
        BluntVariant::Dccc => Extension::Dccc,
        BluntVariant::Iccc => {
            return Err(DecideError::Unsupported(
                "the inconsistently-connected-implies-contextual variant is reserved and not implemented".into(),
            ))
        }
    };
    if is_nondisturbing(b) {
        let mut v = ks_decide(b)?;
        v.extension = ext;
        return Ok(v);
    }
    let noncontextual = match variant {
        BluntVariant::Dc => false,
        BluntVariant::Dnc => true,
        _ => !is_consistently_connected(b),
    };
    Ok(Verdict::decided(ext, noncontextual, None))
}

pub fn decide(b: &Behavior, ext: Extension) -> Result<Verdict, DecideError> {
    match ext {
        Extension::Ks => ks_decide(b),
        Extension::Cbd1 => cbd1_decide(b),
        Extension::Cbd2 => cbd2_decide(b),
        Extension::Bcbd2 => binary_cbd2_decide(b),
        Extension::Cbcbd2Strict => canonical_binary_cbd2_decide(b, CanonicalMode::Strict),
        Extension::Cbcbd2Lifted => canonical_binary_cbd2_decide(b, CanonicalMode::Lifted),
        Extension::Dc => blunt_decide(b, BluntVariant::Dc),
        Extension::Dnc => blunt_decide(b, BluntVariant::Dnc),
        Extension::Dccc => blunt_decide(b, BluntVariant::Dccc),
    }
}

/// The linear system a decider solves, for external cross-checking. Blunt
/// extensions and undefined inputs have none.
pub fn decision_system(b: &Behavior, ext: Extension) -> Result<Option<crate::lp::LinearSystem>, DecideError> {
    let coupling = |b: &Behavior| -> Result<_, DecideError> {
        Ok(Some(CouplingProblem::build(b, Criterion::Multimaximal, DEFAULT_ATOM_BUDGET)?.system))
    };
    match ext {
        Extension::Ks if is_nondisturbing(b) => Ok(Some(GlobalProblem::build(b, DEFAULT_ATOM_BUDGET)?.system)),
        Extension::Cbd1 => Ok(Some(CouplingProblem::build(b, Criterion::Maximal, DEFAULT_ATOM_BUDGET)?.system)),
        Extension::Cbd2 => coupling(b),
        Extension::Bcbd2 if all_binary(b) => coupling(b),
        Extension::Cbcbd2Strict if is_canonical_binary(b)? => coupling(b),
        Extension::Cbcbd2Lifted => coupling(&canonical_binary(b, &CanonicalOptions::default())?),
        Extension::Dc | Extension::Dnc | Extension::Dccc if is_nondisturbing(b) => {
            Ok(Some(GlobalProblem::build(b, DEFAULT_ATOM_BUDGET)?.system))
        }
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests;
