//! The instruction compiler: amending-act text in, change program out.
//!
//! Compilation is a sequence of small passes, each consuming the previous
//! pass's output, so that a failure is attributable to one pass:
//!
//! 1. **segmentation** — walk the act's paragraph tree, peel off
//!    entry-into-force clauses and promulgation boilerplate, and keep the
//!    numbered instruction items under their "… is amended as follows:"
//!    headers;
//! 2. **reference detection** — resolve the documents named by headers and
//!    items;
//! 3. **literal extraction** — pull quoted redactions out of each item and
//!    mask them with `⟦n⟧` placeholders so later grammars never look inside
//!    quotes;
//! 4. **keyword classification** — decide each item's op kind;
//! 5. **locator-phrase lowering** — parse "In the first sentence of 2° of
//!    II …" into navigation steps and build the ops;
//! 6. **date analysis** — fold date clauses into per-scope effective dates;
//! 7. **block assembly** — group ops by `(document, date)`, chain blocks that
//!    build on one another, and emit the program.
//!
//! Items the grammars cannot handle become *residuals*: they are reported in
//! the [`CoverageReport`] for a human editor instead of silently dropped.

use crate::corpus::{normalize_label, DocId, DocumentVersion, ParagraphNode};
use crate::ir::{AmendmentProgram, BaseSelector, ChangeOp, Selector, VersionBlock};
use crate::locator::{split_sentences, Step};
use crate::patterns::{Action, PatternSet};
use crate::refdetect::{
    self, detect_references, is_boilerplate, match_date_clause, match_header, DateClause,
    RefError, Reference,
};
use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use chrono::NaiveDate;
use core::ops::Range;
use thiserror::Error;

/// Errors that abort compilation outright. Items that merely fail to parse
/// do not error; they land in [`CoverageReport::residuals`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("item {path}: quoted redaction never closes")]
    UnbalancedQuotes { path: String },
    #[error("item {path}: instruction recognized but no target document is named here or in an enclosing header")]
    NoTargetFound { path: String },
    #[error(transparent)]
    Dates(#[from] RefError),
}

/// Kind assigned by the keyword classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstructionKind {
    Prepend,
    Replace,
    Insert,
    Suppress,
    ReplaceParagraph,
    Unrecognized,
}

impl From<Action> for InstructionKind {
    fn from(action: Action) -> Self {
        match action {
            Action::Prepend => InstructionKind::Prepend,
            Action::Replace => InstructionKind::Replace,
            Action::Insert => InstructionKind::Insert,
            Action::Suppress => InstructionKind::Suppress,
            Action::ReplaceParagraph => InstructionKind::ReplaceParagraph,
        }
    }
}

impl InstructionKind {
    fn action(self) -> Option<Action> {
        Some(match self {
            InstructionKind::Prepend => Action::Prepend,
            InstructionKind::Replace => Action::Replace,
            InstructionKind::Insert => Action::Insert,
            InstructionKind::Suppress => Action::Suppress,
            InstructionKind::ReplaceParagraph => Action::ReplaceParagraph,
            InstructionKind::Unrecognized => return None,
        })
    }
}

/// One instruction the compiler could not turn into ops, kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Residual {
    /// Labels from the act root down to the item, joined with `/`.
    pub path: String,
    pub text: String,
}

/// What the compiler did with the act's instructions.
/// `compiled + residuals.len() == total` always holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub total: usize,
    pub compiled: usize,
    pub residuals: Vec<Residual>,
}

impl CoverageReport {
    /// Fraction of instructions compiled, 1.0 for an act with none.
    pub fn coverage(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.compiled as f64 / self.total as f64
        }
    }
}

/// The amending unit handed to the compiler: one dated version of an act's
/// article, read as of its publication date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    /// Perennial id of the amending unit.
    pub id: DocId,
    pub publication: NaiveDate,
    pub body: Vec<ParagraphNode>,
}

impl SourceUnit {
    pub fn from_version(version: &DocumentVersion) -> Self {
        SourceUnit {
            id: version.doc.clone(),
            publication: version.effective_date,
            body: version.body.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Literal extraction
// ---------------------------------------------------------------------------

/// A quoted redaction never closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("quoted redaction never closes")]
pub struct UnbalancedQuotes;

struct Masked {
    text: String,
    literals: Vec<String>,
    /// Copied (unquoted) runs: (chars in the original, chars in the masked text).
    segments: Vec<(Range<usize>, Range<usize>)>,
}

fn quote_closer(c: char) -> Option<char> {
    match c {
        '"' => Some('"'),
        '«' => Some('»'),
        '“' => Some('”'),
        _ => None,
    }
}

/// Replaces every quoted literal with a `⟦n⟧` placeholder (1-based). A run of
/// quoted lines separated only by whitespace is one multi-paragraph literal,
/// its parts joined with newlines — that is how multi-paragraph redactions
/// stay a single payload.
fn mask_text(text: &str) -> Result<Masked, UnbalancedQuotes> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::new();
    let mut out_len = 0usize; // chars pushed to `out`
    let mut literals: Vec<String> = Vec::new();
    let mut segments: Vec<(Range<usize>, Range<usize>)> = Vec::new();
    let mut seg_orig = 0usize;
    let mut seg_masked = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let Some(closer) = quote_closer(chars[i]) else {
            out.push(chars[i]);
            out_len += 1;
            i += 1;
            continue;
        };
        segments.push((seg_orig..i, seg_masked..out_len));
        let mut parts: Vec<String> = Vec::new();
        let mut closer = closer;
        loop {
            let start = i + 1;
            let end = (start..chars.len())
                .find(|&j| chars[j] == closer)
                .ok_or(UnbalancedQuotes)?;
            parts.push(chars[start..end].iter().collect());
            // Does another quoted line follow, separated by whitespace only?
            let mut k = end + 1;
            while k < chars.len() && chars[k].is_whitespace() {
                k += 1;
            }
            match chars.get(k).copied().and_then(quote_closer) {
                Some(next_closer) => {
                    i = k;
                    closer = next_closer;
                }
                None => {
                    i = end + 1;
                    break;
                }
            }
        }
        literals.push(parts.join("\n"));
        let placeholder = format!("⟦{}⟧", literals.len());
        out_len += placeholder.chars().count();
        out.push_str(&placeholder);
        seg_orig = i;
        seg_masked = out_len;
    }
    segments.push((seg_orig..chars.len(), seg_masked..out_len));
    Ok(Masked { text: out, literals, segments })
}

impl Masked {
    /// Maps a character range of the original text into the masked text, when
    /// it lies entirely inside one copied (unquoted) run.
    fn remap(&self, range: &Range<usize>) -> Option<Range<usize>> {
        self.segments.iter().find_map(|(orig, masked)| {
            (orig.start <= range.start && range.end <= orig.end).then(|| {
                let delta = masked.start;
                delta + (range.start - orig.start)..delta + (range.end - orig.start)
            })
        })
    }
}

/// The quoted literals of one instruction, in order, quotes stripped,
/// adjacent quoted lines merged into one newline-joined literal.
pub fn extract_literals(text: &str) -> Result<Vec<String>, UnbalancedQuotes> {
    mask_text(text).map(|m| m.literals)
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Keyword classification of one instruction. First pattern-table entry with
/// a keyword hit wins, so more specific phrasings must precede generic ones
/// in the table ("… redacted as follows" before "… is replaced by …").
pub fn classify(text: &str, pats: &PatternSet) -> InstructionKind {
    let haystack = text.to_lowercase();
    for rule in &pats.instructions {
        if rule.keywords.iter().any(|k| haystack.contains(&k.to_lowercase())) {
            return rule.action.into();
        }
    }
    InstructionKind::Unrecognized
}

// ---------------------------------------------------------------------------
// The compiler
// ---------------------------------------------------------------------------

/// Compiles amending acts into change programs using one pattern table.
#[derive(Debug, Clone)]
pub struct Compiler {
    patterns: PatternSet,
}

impl Default for Compiler {
    fn default() -> Self {
        Compiler::english()
    }
}

/// One act paragraph that survived segmentation as an instruction candidate.
struct WorkItem {
    /// Normalized labels from the root (positional `#k` when unlabelled).
    path: Vec<String>,
    /// Top-level label, for matching scoped date clauses.
    scope_label: String,
    text: String,
    header: Option<usize>,
    refs: Vec<Reference>,
    masked: String,
    literals: Vec<String>,
    kind: InstructionKind,
}

impl WorkItem {
    fn display_path(&self) -> String {
        self.path.join("/")
    }

    fn residual(&self) -> Residual {
        Residual { path: self.display_path(), text: self.text.clone() }
    }
}

struct Header {
    scope_text: String,
    target: Option<Reference>,
}

/// Ops produced from one item, with everything assembly needs.
struct LoweredItem {
    doc: DocId,
    relative: Option<String>,
    scope_label: String,
    ops: Vec<ChangeOp>,
}

impl Compiler {
    pub fn new(patterns: PatternSet) -> Self {
        Compiler { patterns }
    }

    /// Compiler over the bundled English pattern table.
    pub fn english() -> Self {
        Compiler::new(PatternSet::english())
    }

    pub fn patterns(&self) -> &PatternSet {
        &self.patterns
    }

    /// Runs all passes. Returns the program plus the coverage report;
    /// residual instructions make the report imperfect but do not abort the
    /// compile. The program only reads from `src`; no store is touched.
    pub fn compile(
        &self,
        src: &SourceUnit,
    ) -> Result<(AmendmentProgram, CoverageReport), CompileError> {
        // Pass 1: segmentation.
        let mut seg = Segmenter { pats: &self.patterns, items: Vec::new(), headers: Vec::new(), clauses: Vec::new() };
        seg.walk(&src.body, &mut Vec::new(), None);
        let Segmenter { mut items, mut headers, clauses, .. } = seg;

        // Pass 2: reference detection (headers and items).
        for header in &mut headers {
            header.target = detect_references(&header.scope_text, src.publication, &self.patterns)
                .into_iter()
                .next();
        }
        for item in &mut items {
            item.refs = detect_references(&item.text, src.publication, &self.patterns);
        }

        // Pass 3: literal extraction and masking; reference spans move to
        // masked coordinates (a reference inside a quote is dropped).
        for item in &mut items {
            let masked = mask_text(&item.text)
                .map_err(|_| CompileError::UnbalancedQuotes { path: item.display_path() })?;
            item.refs = item
                .refs
                .drain(..)
                .filter_map(|mut r| {
                    r.span = masked.remap(&r.span)?;
                    Some(r)
                })
                .collect();
            item.masked = masked.text;
            item.literals = masked.literals;
        }

        // Pass 4: keyword classification.
        for item in &mut items {
            item.kind = classify(&item.masked, &self.patterns);
        }

        // Pass 5: locator-phrase lowering.
        let total = items.len();
        let mut lowered: Vec<LoweredItem> = Vec::new();
        let mut residuals: Vec<Residual> = Vec::new();
        for item in &items {
            match self.lower(item, &headers)? {
                Some(li) => lowered.push(li),
                None => residuals.push(item.residual()),
            }
        }

        // Pass 6: date analysis.
        let effective = refdetect::effective_dates(src.publication, &clauses)?;

        // Pass 7: block assembly.
        let program = assemble(src, &lowered, &effective);

        let report =
            CoverageReport { total, compiled: total - residuals.len(), residuals };
        Ok((program, report))
    }

    /// Pass 5 for one item: `Ok(None)` means residual, `Err` means a
    /// recognized instruction with no resolvable target document.
    fn lower(
        &self,
        item: &WorkItem,
        headers: &[Header],
    ) -> Result<Option<LoweredItem>, CompileError> {
        let Some(action) = item.kind.action() else {
            return Ok(None);
        };
        let Some(caps) = self
            .patterns
            .instructions
            .iter()
            .filter(|r| r.action == action)
            .find_map(|r| r.regex.captures(&item.masked))
        else {
            return Ok(None);
        };

        // Selector / payload from the captured placeholder indices.
        let literal = |name: &str| -> Option<String> {
            let idx: usize = caps.name(name)?.as_str().parse().ok()?;
            item.literals.get(idx.wrapping_sub(1)).cloned()
        };
        let occurrence = match caps.name("ord") {
            Some(m) => match self.patterns.ordinal(m.as_str()) {
                Some(n) => Some(n),
                None => return Ok(None), // unknown ordinal word
            },
            None => None,
        };
        let (selector, payload) = match action {
            Action::Prepend | Action::ReplaceParagraph => match literal("payload") {
                Some(p) => (None, Some(p)),
                None => return Ok(None),
            },
            Action::Insert => match (literal("word"), literal("payload")) {
                (Some(w), Some(p)) => (Some(Selector::Word(w)), Some(p)),
                _ => return Ok(None),
            },
            Action::Replace => match (literal("word"), literal("payload")) {
                (Some(w), Some(p)) => {
                    let sel = match occurrence {
                        Some(n) => Selector::Occurrence(w, n),
                        None => Selector::Word(w),
                    };
                    (Some(sel), Some(p))
                }
                _ => return Ok(None),
            },
            Action::Suppress => match literal("word") {
                Some(w) => {
                    let sel = match occurrence {
                        Some(n) => Selector::Occurrence(w, n),
                        None => Selector::Word(w),
                    };
                    (Some(sel), None)
                }
                None => return Ok(None),
            },
        };

        // Target phrase: the captured group, with reference spans excised.
        let target_match = caps.name("target").expect("validated at table load");
        let target_span = refdetect::char_offset(&item.masked, target_match.start())
            ..refdetect::char_offset(&item.masked, target_match.end());
        let phrase = excise_refs(&item.masked, &target_span, &item.refs);
        let Some(paths) = parse_locator_phrase(&phrase, &self.patterns) else {
            return Ok(None);
        };

        // Target document: a reference in the item itself wins, otherwise the
        // enclosing header's. A recognized instruction with neither is a
        // hard error — it cannot be attached to any document.
        let (doc, relative) = match item.refs.first() {
            Some(r) => (r.target.clone(), r.relative_to.clone()),
            None => match item.header.and_then(|h| headers[h].target.as_ref()) {
                Some(r) => (r.target.clone(), r.relative_to.clone()),
                None => {
                    return Err(CompileError::NoTargetFound { path: item.display_path() })
                }
            },
        };

        let source: Vec<String> = item.path.iter().map(|l| attribution_label(l)).collect();
        let ops = paths
            .into_iter()
            .map(|target| ChangeOp {
                action,
                source: source.clone(),
                target,
                selector: selector.clone(),
                payload: payload.clone(),
            })
            .collect();
        Ok(Some(LoweredItem {
            doc,
            relative: relative.map(|r| attribution_label(&r)),
            scope_label: item.scope_label.clone(),
            ops,
        }))
    }
}

// ---------------------------------------------------------------------------
// Pass 1: segmentation
// ---------------------------------------------------------------------------

struct Segmenter<'p> {
    pats: &'p PatternSet,
    items: Vec<WorkItem>,
    headers: Vec<Header>,
    clauses: Vec<DateClause>,
}

impl Segmenter<'_> {
    fn walk(&mut self, nodes: &[ParagraphNode], path: &mut Vec<String>, header: Option<usize>) {
        for (i, node) in nodes.iter().enumerate() {
            let label = node
                .label
                .as_deref()
                .map(normalize_label)
                .unwrap_or_else(|| format!("#{}", i + 1));
            path.push(label);
            let mut child_header = header;
            // A node whose text was only date clauses or boilerplate is not
            // an instruction item at all.
            if let Some(kept) = node.text.as_deref().and_then(|t| self.strip_administrativia(t)) {
                if match_header(&kept, self.pats).is_some() {
                    self.headers.push(Header { scope_text: kept, target: None });
                    child_header = Some(self.headers.len() - 1);
                } else {
                    self.items.push(WorkItem {
                        path: path.clone(),
                        scope_label: path[0].clone(),
                        text: kept,
                        header,
                        refs: Vec::new(),
                        masked: String::new(),
                        literals: Vec::new(),
                        kind: InstructionKind::Unrecognized,
                    });
                }
            }
            self.walk(&node.children, path, child_header);
            path.pop();
        }
    }

    /// Removes date-clause and boilerplate sentences, collecting the former.
    /// Returns the remaining instruction text, `None` when nothing remains.
    fn strip_administrativia(&mut self, text: &str) -> Option<String> {
        let chars: Vec<char> = text.chars().collect();
        let sentences = split_sentences(text);
        let mut drop: Vec<Range<usize>> = Vec::new();
        for range in &sentences {
            let sentence: String = chars[range.clone()].iter().collect();
            if let Some(clause) = match_date_clause(&sentence, self.pats) {
                self.clauses.push(clause);
                drop.push(range.clone());
            } else if is_boilerplate(&sentence, self.pats) {
                drop.push(range.clone());
            }
        }
        let kept: String = if drop.is_empty() {
            text.to_owned() // untouched, preserving inner newlines
        } else {
            chars
                .iter()
                .enumerate()
                .filter(|(i, _)| !drop.iter().any(|r| r.contains(i)))
                .map(|(_, c)| *c)
                .collect()
        };
        let kept = kept.trim();
        (!kept.is_empty()).then(|| kept.to_owned())
    }
}

// ---------------------------------------------------------------------------
// Pass 5 helpers
// ---------------------------------------------------------------------------

/// Attribution form of an act paragraph label: normalized, degree signs
/// dropped — the form change programs use to name their source ("1°" → "1",
/// "II." → "II", "4° bis" → "4 bis").
pub fn attribution_label(label: &str) -> String {
    let stripped: String = normalize_label(label).chars().filter(|&c| c != '°').collect();
    normalize_label(&stripped)
}

const EXCISED: char = '\u{1}';

/// The target-phrase text with every overlapping reference span replaced by a
/// sentinel, so the phrase parser can drop those segments.
fn excise_refs(masked: &str, span: &Range<usize>, refs: &[Reference]) -> String {
    let chars: Vec<char> = masked.chars().collect();
    let mut out = String::new();
    let mut i = span.start;
    while i < span.end {
        if let Some(r) = refs.iter().find(|r| r.span.contains(&i)) {
            out.push(EXCISED);
            i = r.span.end.min(span.end);
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

/// Parses a locator phrase ("the first sentence of 2° of II", "3° and 4°",
/// "the last paragraph") into one navigation path per conjunct. `None` means
/// the phrase is beyond the grammar — the item becomes a residual.
fn parse_locator_phrase(phrase: &str, pats: &PatternSet) -> Option<Vec<Vec<Step>>> {
    let of_sep = format!(" {} ", pats.structure.of);
    let and_sep = format!(" {} ", pats.structure.and);
    let mut paths = Vec::new();
    for comma_part in phrase.split(", ") {
        for conjunct in comma_part.split(and_sep.as_str()) {
            let conjunct = conjunct.trim().trim_matches(',');
            if conjunct.is_empty() || conjunct.chars().all(|c| c == EXCISED) {
                continue;
            }
            let mut steps: Vec<Step> = Vec::new();
            let segments: Vec<&str> = conjunct.split(of_sep.as_str()).collect();
            for (pos, segment) in segments.iter().rev().enumerate() {
                let is_leftmost = pos + 1 == segments.len();
                match parse_segment(segment, pats)? {
                    Segmented::Skip => continue,
                    // Sentences cannot contain paragraphs.
                    Segmented::Step(Step::Sentence(_)) if !is_leftmost => return None,
                    Segmented::Step(s) => steps.push(s),
                }
            }
            if steps.is_empty() {
                continue;
            }
            paths.push(steps);
        }
    }
    (!paths.is_empty()).then_some(paths)
}

enum Segmented {
    Step(Step),
    /// An excised reference segment — contributes no step.
    Skip,
}

fn parse_segment(segment: &str, pats: &PatternSet) -> Option<Segmented> {
    let mut s = segment.trim();
    if s.contains(EXCISED) {
        return Some(Segmented::Skip);
    }
    let the_prefixes = [
        format!("{} ", pats.structure.the),
        {
            let mut t = pats.structure.the.clone();
            if let Some(first) = t.get_mut(0..1) {
                first.make_ascii_uppercase();
            }
            format!("{t} ")
        },
    ];
    for prefix in &the_prefixes {
        if let Some(rest) = s.strip_prefix(prefix.as_str()) {
            s = rest;
            break;
        }
    }
    // "<ordinal> paragraph" / "last paragraph" / "<ordinal> sentence".
    if let Some(word) = s.strip_suffix(pats.structure.paragraph.as_str()) {
        let word = word.trim();
        if word == pats.structure.last {
            return Some(Segmented::Step(Step::LastPar));
        }
        return pats.ordinal(word).map(|n| Segmented::Step(Step::ParByPosition(n)));
    }
    if let Some(word) = s.strip_suffix(pats.structure.sentence.as_str()) {
        return pats.ordinal(word.trim()).map(|n| Segmented::Step(Step::Sentence(n)));
    }
    // Otherwise a paragraph label: a roman numeral ("II", "II.") or an
    // ordinal number ("1°", "4° bis"). Anything else is prose the grammar
    // does not cover.
    if is_plausible_label(s) {
        Some(Segmented::Step(Step::ParByLabel(s.to_owned())))
    } else {
        None
    }
}

fn is_plausible_label(s: &str) -> bool {
    let s = s.strip_suffix('.').unwrap_or(s);
    let (head, tail) = s.split_once(' ').unwrap_or((s, ""));
    if !matches!(tail, "" | "bis" | "ter" | "quater") {
        return false;
    }
    let roman = !head.is_empty()
        && head.chars().all(|c| matches!(c, 'I' | 'V' | 'X' | 'L' | 'C' | 'D' | 'M'));
    let ordinal = head
        .strip_suffix('°')
        .map(|d| !d.is_empty() && d.chars().all(|c| c.is_ascii_digit()))
        .unwrap_or(false);
    let bare_number = !head.is_empty() && head.chars().all(|c| c.is_ascii_digit());
    roman || ordinal || bare_number
}

// ---------------------------------------------------------------------------
// Pass 7: block assembly
// ---------------------------------------------------------------------------

fn assemble(
    src: &SourceUnit,
    lowered: &[LoweredItem],
    effective: &refdetect::EffectiveDates,
) -> AmendmentProgram {
    struct Group {
        doc: DocId,
        date: NaiveDate,
        ops: Vec<ChangeOp>,
        hints: Vec<String>,
        first: usize,
    }
    let mut groups: Vec<Group> = Vec::new();
    for (order, item) in lowered.iter().enumerate() {
        let date = effective.for_scope(&item.scope_label);
        let group = match groups.iter_mut().find(|g| g.doc == item.doc && g.date == date) {
            Some(g) => g,
            None => {
                groups.push(Group {
                    doc: item.doc.clone(),
                    date,
                    ops: Vec::new(),
                    hints: Vec::new(),
                    first: order,
                });
                groups.last_mut().expect("just pushed")
            }
        };
        group.ops.extend(item.ops.iter().cloned());
        if let Some(hint) = &item.relative {
            if !group.hints.contains(hint) {
                group.hints.push(hint.clone());
            }
        }
    }
    groups.sort_by(|a, b| a.date.cmp(&b.date).then(a.first.cmp(&b.first)));

    let mut blocks: Vec<VersionBlock> = Vec::new();
    for group in groups {
        // Prefer the block the "as amended by …" marker points at; otherwise
        // chain onto the latest earlier block for the same document, so
        // successive amendments accumulate rather than fork.
        let same_doc = |b: &VersionBlock| block_doc(b, &blocks) == Some(&group.doc);
        let hinted = blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| same_doc(b))
            .filter(|(_, b)| {
                group.hints.iter().any(|h| {
                    b.ops.iter().any(|op| op.source.first().map(String::as_str) == Some(h))
                })
            })
            .map(|(i, _)| i)
            .next_back();
        let chained = hinted.or_else(|| {
            blocks
                .iter()
                .enumerate()
                .filter(|(_, b)| same_doc(b))
                .map(|(i, _)| i)
                .next_back()
        });
        let base = match chained {
            Some(i) => BaseSelector::BlockOutput(i),
            None => BaseSelector::Stored { doc: group.doc.clone(), at: src.publication },
        };
        blocks.push(VersionBlock {
            base,
            effective: group.date,
            ops: group.ops,
            source_unit: src.id.versionless(),
        });
    }

    AmendmentProgram {
        source: src.id.versionless(),
        publication: src.publication,
        blocks,
    }
}

/// The document a block produces a version of, following chains.
fn block_doc<'a>(block: &'a VersionBlock, blocks: &'a [VersionBlock]) -> Option<&'a DocId> {
    let mut current = block;
    loop {
        match &current.base {
            BaseSelector::Stored { doc, .. } => return Some(doc),
            BaseSelector::BlockOutput(j) => current = blocks.get(*j)?,
        }
    }
}

// ---------------------------------------------------------------------------
