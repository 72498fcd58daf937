//! The extension-by-axiom table. Violation cells come only from the built-in
//! corpus cases; satisfaction cells are fuzzed and reported as bounded
//! evidence.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deciders::Extension;

use super::generator::GenParams;
use super::{builtin_cases, check_case, fuzz_axiom, AuditError, AuditOutcome, AuditReport, AxiomId, CaseOutcome};

pub const TABLE_EXTENSIONS: [Extension; 7] = [
    Extension::Cbd1,
    Extension::Cbd2,
    Extension::Bcbd2,
    Extension::Cbcbd2Lifted,
    Extension::Dc,
    Extension::Dnc,
    Extension::Dccc,
];

pub const TABLE_COLUMNS: [AxiomId; 10] = [
    AxiomId::KsCompat,
    AxiomId::Isomorphism,
    AxiomId::Nestedness,
    AxiomId::Coarsening,
    AxiomId::PostProcessing,
    AxiomId::Joining,
    AxiomId::Independence,
    AxiomId::Determinism,
    AxiomId::DetRedundancy,
    AxiomId::Relabeling,
];

/// The axiom a column stands for in a given row: the canonical-binary row
/// reads the independence column as independence in canonical form.
pub fn column_axiom(ext: Extension, column: AxiomId) -> AxiomId {
    match (ext, column) {
        (Extension::Cbcbd2Lifted | Extension::Cbcbd2Strict, AxiomId::Independence) => AxiomId::IndependenceCanonical,
        _ => column,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mark {
    Satisfies,
    Violates,
    NotApplicable,
}

impl Mark {
    pub fn symbol(self) -> &'static str {
        match self {
            Mark::Satisfies => "+",
            Mark::Violates => "−",
            Mark::NotApplicable => "∅",
        }
    }
}

/// The published classification of each cell.
pub fn published(ext: Extension, column: AxiomId) -> Mark {
    use AxiomId::*;
    use Extension::*;
    use Mark::*;
    match (ext, column) {
        (_, KsCompat | Isomorphism) => Satisfies,
        (Bcbd2 | Cbcbd2Lifted | Cbcbd2Strict, Joining) => NotApplicable,
        (Cbd1, Nestedness | Coarsening | PostProcessing | Joining | Relabeling) => Violates,
        (Cbd2, Coarsening | PostProcessing | Joining) => Violates,
        (Bcbd2, PostProcessing) => Violates,
        (Cbcbd2Lifted | Cbcbd2Strict, Independence) => Violates,
        (Dc, Determinism | DetRedundancy) => Violates,
        (Dnc | Dccc, Nestedness | Coarsening | Relabeling) => Violates,
        _ => Satisfies,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    /// Certified by a built-in corpus case.
    Violated,
    /// A fuzzed case contradicts the axiom.
    ViolatedByFuzzing,
    /// The built-in case did not produce the expected contradiction.
    WitnessFailed,
    NoCounterexample,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub extension: Extension,
    pub axiom: AxiomId,
    pub status: CellStatus,
    pub published: Mark,
    pub evidence: String,
    pub report: AuditReport,
}

impl Cell {
    pub fn symbol(&self) -> &'static str {
        match self.status {
            CellStatus::Violated => "−",
            CellStatus::ViolatedByFuzzing => "− (fuzz)",
            CellStatus::WitnessFailed => "?",
            CellStatus::NoCounterexample => "+",
            CellStatus::NotApplicable => "∅",
        }
    }

    pub fn matches_published(&self) -> bool {
        matches!(
            (self.status, self.published),
            (CellStatus::Violated, Mark::Violates)
                | (CellStatus::NoCounterexample, Mark::Satisfies)
                | (CellStatus::NotApplicable, Mark::NotApplicable)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub trials: usize,
    pub seed: u64,
    pub extensions: Vec<Extension>,
    pub columns: Vec<AxiomId>,
    /// Row-major.
    pub cells: Vec<Cell>,
}

fn cell(ext: Extension, column: AxiomId, trials: usize, seed: u64) -> Result<Cell, AuditError> {
    let axiom = column_axiom(ext, column);
    let published = published(ext, column);
    let mk = |status, evidence: String, report| Cell { extension: ext, axiom, status, published, evidence, report };
    if let Some(reason) = axiom.not_applicable(ext) {
        let report =
            AuditReport { extension: ext, axiom, outcome: AuditOutcome::NotApplicable { reason: reason.into() } };
        return Ok(mk(CellStatus::NotApplicable, reason.into(), report));
    }
    if published == Mark::Violates {
        let cases = builtin_cases(ext, axiom);
        for (what, case) in &cases {
            if let CaseOutcome::Violated(witness) = check_case(ext, axiom, case)? {
                let report = AuditReport { extension: ext, axiom, outcome: AuditOutcome::Violated { witness } };
                return Ok(mk(CellStatus::Violated, format!("corpus: {what}"), report));
            }
        }
        let what = cases.first().map(|(w, _)| *w).unwrap_or("no built-in case");
        let report = AuditReport {
            extension: ext,
            axiom,
            outcome: AuditOutcome::NoCounterexampleFound { trials: cases.len(), seed: 0, exercised: 0, skipped: 0 },
        };
        return Ok(mk(CellStatus::WitnessFailed, format!("built-in case did not violate: {what}"), report));
    }
    let report = fuzz_axiom(ext, axiom, trials, seed, &GenParams::default())?;
    Ok(match &report.outcome {
        AuditOutcome::Violated { .. } => mk(CellStatus::ViolatedByFuzzing, "fuzzed counterexample".into(), report),
        AuditOutcome::NoCounterexampleFound { trials, exercised, skipped, .. } => {
            let ev = format!("no counterexample in {trials} trials ({exercised} exercised, {skipped} skipped)");
            mk(CellStatus::NoCounterexample, ev, report)
        }
        AuditOutcome::NotApplicable { reason } => {
            let r = reason.clone();
            mk(CellStatus::NotApplicable, r, report)
        }
    })
}

pub fn table1(extensions: &[Extension], trials: usize, seed: u64) -> Result<Table1, AuditError> {
    let jobs: Vec<(Extension, AxiomId)> =
        extensions.iter().flat_map(|&e| TABLE_COLUMNS.iter().map(move |&a| (e, a))).collect();
    let cells = jobs.par_iter().map(|&(e, a)| cell(e, a, trials, seed)).collect::<Result<Vec<_>, _>>()?;
    Ok(Table1 { trials, seed, extensions: extensions.to_vec(), columns: TABLE_COLUMNS.to_vec(), cells })
}

impl Table1 {
    pub fn cell(&self, ext: Extension, column: AxiomId) -> Option<&Cell> {
        let r = self.extensions.iter().position(|&e| e == ext)?;
        let c = self.columns.iter().position(|&a| a == column)?;
        self.cells.get(r * self.columns.len() + c)
    }

    pub fn matches_published(&self) -> bool {
        self.cells.iter().all(Cell::matches_published)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables serialize")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let row_w = self.extensions.iter().map(|e| e.label().len()).max().unwrap_or(9).max(9);
        let widths: Vec<usize> = self.columns.iter().map(|a| a.label().len().max(8)).collect();
        let _ = write!(out, "{:<row_w$}", "Extension");
        for (a, w) in self.columns.iter().zip(&widths) {
            let _ = write!(out, "  {:<w$}", a.label());
        }
        out.push('\n');
        for (r, e) in self.extensions.iter().enumerate() {
            let _ = write!(out, "{:<row_w$}", e.label());
            for (c, w) in widths.iter().enumerate() {
                let cell = &self.cells[r * self.columns.len() + c];
                let mut sym = cell.symbol().to_string();
                if !cell.matches_published() {
                    sym = format!("{sym} (published {})", cell.published.symbol());
                }
                let _ = write!(out, "  {:<w$}", sym);
            }
            out.push('\n');
        }
        out.push('\n');
        for cell in &self.cells {
            if cell.status == CellStatus::NoCounterexample {
                continue;
            }
            let _ = writeln!(out, "{} / {}: {}", cell.extension.label(), cell.axiom.label(), cell.evidence);
        }
        let _ = writeln!(out, "\n−: violated, certified by the corpus case listed above. ∅: not applicable.");
        let _ = writeln!(
            out,
            "+: no counterexample in {} seeded trials (seed {}). This is bounded evidence, not a proof of the axiom.",
            self.trials, self.seed
        );
        out
    }
}
