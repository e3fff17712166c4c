//! Documents, dated versions and the temporal store.
//!
//! A *document* is one consolidation unit — an article of a code, or an
//! article of an act — identified by a perennial [`DocId`]. Its successive
//! texts are [`DocumentVersion`]s, each effective from its own date until the
//! next version takes over. The [`VersionStore`] keeps every version and
//! answers point-in-time queries; versions are never edited in place, new
//! ones are appended.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use chrono::NaiveDate;
use core::fmt;
use thiserror::Error;

/// Errors raised by identifier parsing and store operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("malformed document uri `{uri}`: {reason}")]
    MalformedUri { uri: String, reason: &'static str },
    #[error("point-in-time lookup requires a version-free id, got `{0}`")]
    DatedId(DocId),
    #[error("unknown document `{0}`")]
    UnknownDocument(DocId),
    #[error("`{doc}` has no version in force on {at}")]
    NotInForce { doc: DocId, at: NaiveDate },
    #[error("new version dated {draft} must be strictly after its base dated {base}")]
    NonMonotonicDate { base: NaiveDate, draft: NaiveDate },
    #[error("`{doc}` already has a version dated {date}")]
    DuplicateDate { doc: DocId, date: NaiveDate },
    #[error("invalid version of `{doc}`: {reason}")]
    InvalidVersion { doc: DocId, reason: &'static str },
}

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

/// Perennial identifier of a consolidation unit, URI-shaped:
/// `jurisdiction/nature/container/unit`, e.g. `fr/code/commerce/L723-4`
/// (article L723-4 of the Commercial Code) or `fr/loi/2022-1348/1`
/// (article 1 of act 2022-1348).
///
/// A fifth `YYYYMMDD` segment pins a specific dated version:
/// `fr/loi/2022-1348/1/20221025`. Segment count alone disambiguates the two
/// forms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocId {
    pub jurisdiction: String,
    pub nature: String,
    pub container: String,
    pub unit: String,
    /// Version date carried by five-segment ids; `None` for the perennial form.
    pub version_date: Option<NaiveDate>,
}

impl DocId {
    /// Builds a perennial (version-free) id from its four components.
    pub fn new(jurisdiction: &str, nature: &str, container: &str, unit: &str) -> Self {
        DocId {
            jurisdiction: jurisdiction.to_owned(),
            nature: nature.to_owned(),
            container: container.to_owned(),
            unit: unit.to_owned(),
            version_date: None,
        }
    }

    /// Parses the URI form. Four segments yield a perennial id, five segments
    /// require the last to be a valid `YYYYMMDD` date.
    pub fn parse(uri: &str) -> Result<Self, CorpusError> {
        let err = |reason| CorpusError::MalformedUri { uri: uri.to_owned(), reason };
        let segments: Vec<&str> = uri.split('/').collect();
        if segments.len() != 4 && segments.len() != 5 {
            return Err(err("expected 4 segments, or 5 with a trailing version date"));
        }
        if segments.iter().any(|s| s.is_empty()) {
            return Err(err("empty segment"));
        }
        let version_date = if segments.len() == 5 {
            let ds = segments[4];
            if ds.len() != 8 || !ds.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err("version date must be 8 digits (YYYYMMDD)"));
            }
            match NaiveDate::parse_from_str(ds, "%Y%m%d") {
                Ok(d) => Some(d),
                Err(_) => return Err(err("version date is not a valid calendar date")),
            }
        } else {
            None
        };
        Ok(DocId {
            jurisdiction: segments[0].to_owned(),
            nature: segments[1].to_owned(),
            container: segments[2].to_owned(),
            unit: segments[3].to_owned(),
            version_date,
        })
    }

    /// The same id without its version date.
    pub fn versionless(&self) -> DocId {
        DocId { version_date: None, ..self.clone() }
    }

    /// The same id pinned to a version date.
    pub fn at(&self, date: NaiveDate) -> DocId {
        DocId { version_date: Some(date), ..self.clone() }
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/{}", self.jurisdiction, self.nature, self.container, self.unit)?;
        if let Some(d) = self.version_date {
            write!(f, "/{}", d.format("%Y%m%d"))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Paragraph trees
// ---------------------------------------------------------------------------

/// One node of a document body: an optional label ("1°", "II.", "4° bis"),
/// optional running text, and ordered children. A node carries text, children
/// or both — never neither.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParagraphNode {
    pub label: Option<String>,
    pub text: Option<String>,
    pub children: Vec<ParagraphNode>,
}

impl ParagraphNode {
    /// Leaf paragraph with a label.
    pub fn labelled(label: &str, text: &str) -> Self {
        ParagraphNode {
            label: Some(label.to_owned()),
            text: Some(text.to_owned()),
            children: Vec::new(),
        }
    }

    /// Leaf paragraph without a label (intro or closing paragraphs).
    pub fn plain(text: &str) -> Self {
        ParagraphNode { label: None, text: Some(text.to_owned()), children: Vec::new() }
    }

    /// Attaches children, builder-style.
    pub fn with_children(mut self, children: Vec<ParagraphNode>) -> Self {
        self.children = children;
        self
    }

    fn check(&self, doc: &DocId) -> Result<(), CorpusError> {
        let invalid = |reason| CorpusError::InvalidVersion { doc: doc.clone(), reason };
        let has_text = self.text.as_deref().map(|t| !t.trim().is_empty()).unwrap_or(false);
        if self.text.as_deref().map(|t| t.trim().is_empty()).unwrap_or(false) {
            return Err(invalid("node text present but blank"));
        }
        if !has_text && self.children.is_empty() {
            return Err(invalid("node carries neither text nor children"));
        }
        if self.label.as_deref().map(|l| l.trim().is_empty()).unwrap_or(false) {
            return Err(invalid("node label present but blank"));
        }
        check_sibling_labels(&self.children, doc)?;
        for child in &self.children {
            child.check(doc)?;
        }
        Ok(())
    }
}

fn check_sibling_labels(siblings: &[ParagraphNode], doc: &DocId) -> Result<(), CorpusError> {
    let mut seen: Vec<String> = Vec::new();
    for node in siblings {
        if let Some(label) = &node.label {
            let norm = normalize_label(label);
            if seen.contains(&norm) {
                return Err(CorpusError::InvalidVersion {
                    doc: doc.clone(),
                    reason: "duplicate sibling label",
                });
            }
            seen.push(norm);
        }
    }
    Ok(())
}

/// Label form used for matching: surrounding whitespace trimmed, interior
/// whitespace collapsed, trailing periods dropped. `"II."` and `"II"` name
/// the same paragraph; `"4°  bis"` equals `"4° bis"`.
pub fn normalize_label(label: &str) -> String {
    let mut out = String::new();
    let mut last_ws = false;
    for c in label.trim().chars() {
        if c.is_whitespace() {
            last_ws = true;
        } else {
            if last_ws && !out.is_empty() {
                out.push(' ');
            }
            last_ws = false;
            out.push(c);
        }
    }
    while out.ends_with('.') {
        out.pop();
    }
    out
}

/// Parses the quoted block of a paragraph-replacement instruction into
/// paragraph nodes: one node per line, a leading roman (`II. -` / `II. —`) or
/// ordinal (`1°`, `4° bis`) marker becomes the label, and ordinal-labelled
/// lines following a roman-labelled line nest under it.
pub fn parse_paragraph_block(block: &str) -> Result<Vec<ParagraphNode>, CorpusError> {
    let doc = DocId::new("-", "-", "-", "-"); // placeholder for error context
    let invalid = |reason| CorpusError::InvalidVersion { doc: doc.clone(), reason };
    let mut roots: Vec<ParagraphNode> = Vec::new();
    let mut open_parent = false; // whether roots.last() accepts ordinal children
    for line in block.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let node = split_block_line(line);
        let is_ordinal_child = node
            .label
            .as_deref()
            .map(|l| l.chars().next().map(|c| c.is_ascii_digit()).unwrap_or(false))
            .unwrap_or(false);
        if is_ordinal_child && open_parent {
            if let Some(parent) = roots.last_mut() {
                parent.children.push(node);
                continue;
            }
        }
        open_parent = node
            .label
            .as_deref()
            .map(|l| l.chars().next().map(|c| c.is_ascii_alphabetic()).unwrap_or(false))
            .unwrap_or(false);
        roots.push(node);
    }
    if roots.is_empty() {
        return Err(invalid("replacement block is empty"));
    }
    for node in &roots {
        node.check(&doc)?;
    }
    check_sibling_labels(&roots, &doc)?;
    Ok(roots)
}

/// Splits one block line into `(label, text)`. Recognized label shapes:
/// `I.` / `II.` optionally followed by `-` or `—`, and `1°` / `4° bis` /
/// `2° ter`. Anything else is unlabelled text.
fn split_block_line(line: &str) -> ParagraphNode {
    // Roman-numeral heading: "II. - text" or "II. text".
    let mut chars = line.char_indices().peekable();
    let mut roman_end = 0;
    while let Some(&(i, c)) = chars.peek() {
        if matches!(c, 'I' | 'V' | 'X' | 'L' | 'C' | 'D' | 'M') {
            roman_end = i + c.len_utf8();
            chars.next();
        } else {
            break;
        }
    }
    if roman_end > 0 {
        let rest = &line[roman_end..];
        if let Some(rest) = rest.strip_prefix('.') {
            let text = rest
                .trim_start()
                .trim_start_matches(['-', '—'])
                .trim_start();
            if !text.is_empty() {
                // Label keeps its period, matching hand-authored trees.
                return ParagraphNode::labelled(&line[..roman_end + 1], text);
            }
        }
    }
    // Ordinal label: "1° text", "4° bis text".
    let digits_end = line.find(|c: char| !c.is_ascii_digit()).unwrap_or(0);
    if digits_end > 0 && line[digits_end..].starts_with('°') {
        let after = &line[digits_end + '°'.len_utf8()..];
        // Longest suffix first, or "4° bis" would split as "4°" + "bis …".
        for suffix in [" quater", " bis", " ter", ""] {
            if let Some(text) = after.strip_prefix(suffix) {
                if let Some(text) = text.strip_prefix(' ') {
                    if !text.trim().is_empty() {
                        let label_len = digits_end + '°'.len_utf8() + suffix.len();
                        return ParagraphNode::labelled(&line[..label_len], text.trim());
                    }
                }
            }
        }
    }
    ParagraphNode::plain(line)
}

// ---------------------------------------------------------------------------
// Versions
// ---------------------------------------------------------------------------

/// One dated text of a document. The version is in force from
/// `effective_date` (inclusive) until a later version supersedes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentVersion {
    /// Perennial id (no version date) of the document this text belongs to.
    pub doc: DocId,
    pub effective_date: NaiveDate,
    pub body: Vec<ParagraphNode>,
    /// Id of the act (dated) whose application produced this version, when known.
    pub provenance: Option<DocId>,
}

impl DocumentVersion {
    pub fn new(doc: DocId, effective_date: NaiveDate, body: Vec<ParagraphNode>) -> Self {
        DocumentVersion { doc, effective_date, body, provenance: None }
    }

    /// The dated five-segment id of this version.
    pub fn id(&self) -> DocId {
        self.doc.at(self.effective_date)
    }

    /// Checks the structural invariants: version-free `doc`, non-empty body,
    /// well-formed nodes, unique sibling labels.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.doc.version_date.is_some() {
            return Err(CorpusError::InvalidVersion {
                doc: self.doc.clone(),
                reason: "version doc id must be version-free",
            });
        }
        if self.body.is_empty() {
            return Err(CorpusError::InvalidVersion {
                doc: self.doc.clone(),
                reason: "body is empty",
            });
        }
        check_sibling_labels(&self.body, &self.doc)?;
        for node in &self.body {
            node.check(&self.doc)?;
        }
        Ok(())
    }

    /// Opens a draft for a new version effective on `date`, seeded with a
    /// copy of this body. Fails unless `date` is strictly later.
    pub fn new_draft(&self, date: NaiveDate) -> Result<DraftVersion, CorpusError> {
        if date <= self.effective_date {
            return Err(CorpusError::NonMonotonicDate {
                base: self.effective_date,
                draft: date,
            });
        }
        Ok(DraftVersion {
            doc: self.doc.clone(),
            base_date: self.effective_date,
            effective_date: date,
            body: self.body.clone(),
            provenance: None,
        })
    }
}

/// A mutable working copy of a document body, produced by
/// [`DocumentVersion::new_draft`] and turned back into an immutable
/// [`DocumentVersion`] once all scheduled changes have been applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DraftVersion {
    pub doc: DocId,
    /// Effective date of the version this draft was copied from.
    pub base_date: NaiveDate,
    pub effective_date: NaiveDate,
    pub body: Vec<ParagraphNode>,
    pub provenance: Option<DocId>,
}

impl DraftVersion {
    /// Seals the draft into a version ready for [`VersionStore::add_version`].
    pub fn into_version(self) -> DocumentVersion {
        DocumentVersion {
            doc: self.doc,
            effective_date: self.effective_date,
            body: self.body,
            provenance: self.provenance,
        }
    }
}

/// `(document, date)` handle returned when a version is committed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionRef {
    pub doc: DocId,
    pub effective_date: NaiveDate,
}

impl fmt::Display for VersionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.doc.at(self.effective_date))
    }
}

// ---------------------------------------------------------------------------
// Store
// ---------------------------------------------------------------------------

/// All known versions of all documents, indexed for point-in-time retrieval.
///
/// The store is a single-writer structure: readers may share `&VersionStore`
/// freely across threads (it is `Sync`), while mutation goes through
/// `&mut self` methods — callers wanting concurrent writes wrap it in a lock.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VersionStore {
    entries: BTreeMap<DocId, Vec<DocumentVersion>>,
}

impl VersionStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// The version of `doc` in force on `at`: the latest version whose
    /// effective date is `<= at`. A version is already in force on its own
    /// effective date.
    pub fn get_version(&self, doc: &DocId, at: NaiveDate) -> Result<&DocumentVersion, CorpusError> {
        if doc.version_date.is_some() {
            return Err(CorpusError::DatedId(doc.clone()));
        }
        let versions = self
            .entries
            .get(doc)
            .ok_or_else(|| CorpusError::UnknownDocument(doc.clone()))?;
        let idx = versions.partition_point(|v| v.effective_date <= at);
        if idx == 0 {
            return Err(CorpusError::NotInForce { doc: doc.clone(), at });
        }
        Ok(&versions[idx - 1])
    }

    /// Inserts a validated version, keeping each document's versions sorted
    /// by date. At most one version of a document per date.
    pub fn add_version(&mut self, version: DocumentVersion) -> Result<VersionRef, CorpusError> {
        version.validate()?;
        let slot = self.entries.entry(version.doc.clone()).or_default();
        match slot.binary_search_by_key(&version.effective_date, |v| v.effective_date) {
            Ok(_) => Err(CorpusError::DuplicateDate {
                doc: version.doc.clone(),
                date: version.effective_date,
            }),
            Err(pos) => {
                let handle = VersionRef {
                    doc: version.doc.clone(),
                    effective_date: version.effective_date,
                };
                slot.insert(pos, version);
                Ok(handle)
            }
        }
    }

    /// Every version date of `doc`, ascending.
    pub fn timeline(&self, doc: &DocId) -> Result<Vec<NaiveDate>, CorpusError> {
        if doc.version_date.is_some() {
            return Err(CorpusError::DatedId(doc.clone()));
        }
        let versions = self
            .entries
            .get(doc)
            .ok_or_else(|| CorpusError::UnknownDocument(doc.clone()))?;
        Ok(versions.iter().map(|v| v.effective_date).collect())
    }

    pub fn contains(&self, doc: &DocId) -> bool {
        self.entries.contains_key(&doc.versionless())
    }

    /// Perennial ids of all stored documents, in id order.
    pub fn documents(&self) -> impl Iterator<Item = &DocId> {
        self.entries.keys()
    }

    /// All versions of one document, ascending by date.
    pub fn versions(&self, doc: &DocId) -> Result<&[DocumentVersion], CorpusError> {
        self.entries
            .get(&doc.versionless())
            .map(Vec::as_slice)
            .ok_or_else(|| CorpusError::UnknownDocument(doc.clone()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of stored documents.
    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

// ---------------------------------------------------------------------------
