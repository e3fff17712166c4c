//! Execution of change programs against the version store.
//!
//! [`execute`] runs every block of a program on a staged copy of the store
//! and commits only if nothing failed, so a store never ends up with half an
//! amendment applied. Within a run, blocks that depend (via
//! [`BaseSelector::BlockOutput`]) on a failed block are aborted; independent
//! blocks still execute and report their own results.

use crate::corpus::{
    parse_paragraph_block, CorpusError, DocumentVersion, DraftVersion, VersionRef, VersionStore,
};
use crate::ir::{validate, AmendmentProgram, BaseSelector, ChangeOp, Selector, VersionBlock, Violation};
use crate::locator::{
    find_occurrence, node_at_mut, resolve, siblings_at_mut, LocateError, ResolvedSpan,
};
use crate::patterns::Action;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;
use thiserror::Error;

/// Why one op (or a whole block) failed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Locate(#[from] LocateError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("block depends on block {depends_on}, which failed")]
    Aborted { depends_on: usize },
}

/// One failure entry: which block, which op (`None` for block-level failures
/// such as a missing base document), and why.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub block: usize,
    pub op: Option<usize>,
    pub error: EngineError,
}

/// Outcome of one [`execute`] run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionReport {
    /// Versions produced by the blocks that succeeded. They are in the store
    /// only when `committed` is true; on a failed run they describe work that
    /// was rolled back.
    pub created: Vec<VersionRef>,
    /// Ops applied successfully, including those in blocks that failed later.
    pub applied: usize,
    pub failures: Vec<Failure>,
    /// True when every block succeeded and the staged versions were kept.
    pub committed: bool,
}

/// A structurally invalid program is refused outright, before any execution.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExecuteError {
    #[error("program is invalid: {}", crate::ir::format_violations(.0))]
    Invalid(Vec<Violation>),
}

/// Runs `program` against `store`, transactionally. The store is modified
/// only when the whole program succeeds; the report says what happened either
/// way. A failing op stops its block (later ops in that block are not
/// attempted); blocks chained onto a failed block abort.
pub fn execute(
    program: &AmendmentProgram,
    store: &mut VersionStore,
) -> Result<ExecutionReport, ExecuteError> {
    let violations = validate(program);
    if !violations.is_empty() {
        return Err(ExecuteError::Invalid(violations));
    }

    let mut staged = store.clone();
    let mut report = ExecutionReport {
        created: Vec::new(),
        applied: 0,
        failures: Vec::new(),
        committed: false,
    };
    // Committed output of each block, for chained bases.
    let mut outputs: Vec<Option<DocumentVersion>> = Vec::new();

    for (b, block) in program.blocks.iter().enumerate() {
        match run_block(program, b, block, &outputs, &mut staged, &mut report) {
            Ok(version) => outputs.push(Some(version)),
            Err(failure) => {
                report.failures.push(failure);
                outputs.push(None);
            }
        }
    }

    report.committed = report.failures.is_empty();
    if report.committed {
        *store = staged;
    }
    Ok(report)
}

// The error carries the failed op's full context; its size is irrelevant on
// this cold path.
#[allow(clippy::result_large_err)]
fn run_block(
    program: &AmendmentProgram,
    b: usize,
    block: &VersionBlock,
    outputs: &[Option<DocumentVersion>],
    staged: &mut VersionStore,
    report: &mut ExecutionReport,
) -> Result<DocumentVersion, Failure> {
    let block_failure = |error: EngineError| Failure { block: b, op: None, error };

    let base: &DocumentVersion = match &block.base {
        BaseSelector::Stored { doc, at } => staged
            .get_version(doc, *at)
            .map_err(|e| block_failure(e.into()))?,
        BaseSelector::BlockOutput(j) => outputs[*j]
            .as_ref()
            .ok_or_else(|| block_failure(EngineError::Aborted { depends_on: *j }))?,
    };

    let mut draft = base
        .new_draft(block.effective)
        .map_err(|e| block_failure(e.into()))?;
    draft.provenance = Some(program.source.at(program.publication));

    for (o, op) in block.ops.iter().enumerate() {
        apply_op(&mut draft, op).map_err(|error| Failure { block: b, op: Some(o), error })?;
        report.applied += 1;
    }

    let version = draft.into_version();
    let handle = staged
        .add_version(version.clone())
        .map_err(|e| block_failure(e.into()))?;
    report.created.push(handle);
    Ok(version)
}

// ---------------------------------------------------------------------------
// Single-op semantics
// ---------------------------------------------------------------------------

/// Applies one change to a draft body. Public so single ops can be replayed
/// or previewed; [`execute`] is the transactional entry point.
pub fn apply_op(draft: &mut DraftVersion, op: &ChangeOp) -> Result<(), EngineError> {
    let resolved = resolve(&draft.body, &op.target)?;
    match op.action {
        Action::ReplaceParagraph => {
            let payload = op.payload.as_deref().unwrap_or("");
            let nodes = parse_paragraph_block(payload)?;
            let (siblings, idx) =
                siblings_at_mut(&mut draft.body, &resolved.path).expect("path just resolved");
            siblings.splice(idx..idx + 1, nodes);
        }
        Action::Prepend => {
            let payload = op.payload.as_deref().unwrap_or("");
            let node =
                node_at_mut(&mut draft.body, &resolved.path).expect("path just resolved");
            node.text = Some(match node.text.take() {
                Some(text) => {
                    let mut s = String::from(payload);
                    s.push(' ');
                    s.push_str(&text);
                    s
                }
                None => String::from(payload),
            });
        }
        Action::Insert => {
            let anchor = match &op.selector {
                Some(Selector::Word(w)) => w.as_str(),
                _ => unreachable!("validated insert carries a word anchor"),
            };
            let payload = op.payload.as_deref().unwrap_or("");
            edit_text(&mut draft.body, &resolved, |text, window| {
                let at = find_occurrence(text, window, anchor, 1)?;
                let mut insertion = String::from(" ");
                insertion.push_str(payload);
                Ok(splice_chars(text, at.end..at.end, &insertion, false))
            })?;
        }
        Action::Replace => {
            let (word, occurrence) = selector_parts(op);
            let payload = op.payload.as_deref().unwrap_or("");
            edit_text(&mut draft.body, &resolved, |text, window| {
                let at = find_occurrence(text, window, word, occurrence)?;
                Ok(splice_chars(text, at, payload, true))
            })?;
        }
        Action::Suppress => {
            let (word, occurrence) = selector_parts(op);
            edit_text(&mut draft.body, &resolved, |text, window| {
                let at = find_occurrence(text, window, word, occurrence)?;
                Ok(splice_chars(text, at, "", true))
            })?;
        }
    }
    Ok(())
}

fn selector_parts(op: &ChangeOp) -> (&str, u32) {
    match &op.selector {
        Some(Selector::Word(w)) => (w.as_str(), 1),
        Some(Selector::Occurrence(w, n)) => (w.as_str(), *n),
        None => unreachable!("validated replace/suppress carries a selector"),
    }
}

/// Runs a text edit on the resolved node, passing the sentence window along.
fn edit_text(
    body: &mut [crate::corpus::ParagraphNode],
    resolved: &ResolvedSpan,
    edit: impl FnOnce(&str, Option<&Range<usize>>) -> Result<String, EngineError>,
) -> Result<(), EngineError> {
    let node = node_at_mut(body, &resolved.path).expect("path just resolved");
    let text = node.text.as_deref().ok_or(LocateError::NoText)?;
    let new_text = edit(text, resolved.sentence.as_ref())?;
    node.text = Some(new_text);
    Ok(())
}

/// Splices `replacement` over the character range, optionally repairing the
/// seams: a doubled space left where text was removed collapses to one, and
/// the paragraph edges are trimmed. Only plain spaces collapse; newlines are
/// preserved.
fn splice_chars(text: &str, range: Range<usize>, replacement: &str, repair: bool) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let seam_lo = range.start;
    let rep: Vec<char> = replacement.chars().collect();
    let rep_len = rep.len();
    chars.splice(range, rep);
    if repair {
        // Right seam first so the left index stays valid after a removal.
        for seam in [seam_lo + rep_len, seam_lo] {
            if seam > 0
                && seam < chars.len()
                && chars[seam - 1] == ' '
                && chars[seam] == ' '
            {
                chars.remove(seam);
            }
        }
        while chars.last().map(|c| c.is_whitespace()).unwrap_or(false) {
            chars.pop();
        }
        while chars.first().map(|c| c.is_whitespace()).unwrap_or(false) {
            chars.remove(0);
        }
    }
    chars.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Version diffing
// ---------------------------------------------------------------------------

/// What happened to one paragraph between two versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChangeKind {
    /// Same paragraph, different text.
    TextChanged,
    /// The paragraph at this position now carries a different label: treated
    /// as wholesale replacement, children not compared.
    Replaced,
    Added,
    Removed,
}

/// One changed paragraph, addressed by its display path (labels where
/// present, `#position` otherwise).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffEntry {
    pub path: Vec<String>,
    pub change: ChangeKind,
}

/// Positional structural diff of two bodies: paragraphs are compared slot by
/// slot, a label change at a slot reads as replacement, and extra slots at
/// the end read as additions/removals.
pub fn diff_bodies(a: &[crate::corpus::ParagraphNode], b: &[crate::corpus::ParagraphNode]) -> Vec<DiffEntry> {
    let mut out = Vec::new();
    walk_diff(a, b, &mut Vec::new(), &mut out);
    out
}

/// [`diff_bodies`] over two stored versions.
pub fn diff_versions(a: &DocumentVersion, b: &DocumentVersion) -> Vec<DiffEntry> {
    diff_bodies(&a.body, &b.body)
}

fn walk_diff(
    a: &[crate::corpus::ParagraphNode],
    b: &[crate::corpus::ParagraphNode],
    prefix: &mut Vec<String>,
    out: &mut Vec<DiffEntry>,
) {
    use crate::corpus::normalize_label;
    let display = |node: &crate::corpus::ParagraphNode, i: usize| {
        node.label.clone().unwrap_or_else(|| alloc::format!("#{}", i + 1))
    };
    for i in 0..a.len().max(b.len()) {
        match (a.get(i), b.get(i)) {
            (Some(na), Some(nb)) => {
                let la = na.label.as_deref().map(normalize_label);
                let lb = nb.label.as_deref().map(normalize_label);
                prefix.push(display(nb, i));
                if la != lb {
                    out.push(DiffEntry { path: prefix.clone(), change: ChangeKind::Replaced });
                } else {
                    if na.text != nb.text {
                        out.push(DiffEntry {
                            path: prefix.clone(),
                            change: ChangeKind::TextChanged,
                        });
                    }
                    walk_diff(&na.children, &nb.children, prefix, out);
                }
                prefix.pop();
            }
            (Some(na), None) => {
                prefix.push(display(na, i));
                out.push(DiffEntry { path: prefix.clone(), change: ChangeKind::Removed });
                prefix.pop();
            }
            (None, Some(nb)) => {
                prefix.push(display(nb, i));
                out.push(DiffEntry { path: prefix.clone(), change: ChangeKind::Added });
                prefix.pop();
            }
            (None, None) => unreachable!(),
        }
    }
}

// ---------------------------------------------------------------------------
