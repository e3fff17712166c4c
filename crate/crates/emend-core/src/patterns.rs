//! Pattern tables driving reference detection and instruction parsing.
//!
//! All language-specific knowledge — how cross-references are written, how
//! each kind of amendment instruction is phrased, how entry-into-force
//! clauses look — lives in one JSON file rather than in code, so a corpus in
//! another drafting tradition only needs a different table. The file bundled
//! at build time ([`PatternSet::english`]) covers English-style drafting for
//! French consolidated law; callers may load their own via
//! [`PatternSet::from_json`].

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use regex::Regex;
use serde::Deserialize;
use thiserror::Error;

/// The bundled English-language pattern table, verbatim.
pub const ENGLISH_JSON: &str = include_str!("../patterns/english.json");

/// Errors raised while loading a pattern table.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("pattern table is not valid JSON: {0}")]
    Json(String),
    #[error("cannot compile pattern `{pattern}`: {message}")]
    BadRegex { pattern: String, message: String },
    #[error("pattern `{pattern}` must define a `{group}` capture group")]
    MissingGroup { pattern: String, group: &'static str },
    #[error("reference pattern `{pattern}` needs either a `container` value or a `container` group")]
    MissingContainer { pattern: String },
    #[error("instruction action `{0}` is unknown (expected prepend, replace, insert, suppress or replace_par)")]
    UnknownAction(String),
}

/// The five kinds of textual change an instruction can compile to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Prepend,
    Replace,
    Insert,
    Suppress,
    ReplaceParagraph,
}

impl Action {
    /// Name used in the change-program surface syntax and in pattern files.
    pub fn name(self) -> &'static str {
        match self {
            Action::Prepend => "prepend",
            Action::Replace => "replace",
            Action::Insert => "insert",
            Action::Suppress => "suppress",
            Action::ReplaceParagraph => "replace_par",
        }
    }

    /// Inverse of [`Action::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "prepend" => Action::Prepend,
            "replace" => Action::Replace,
            "insert" => Action::Insert,
            "suppress" => Action::Suppress,
            "replace_par" => Action::ReplaceParagraph,
            _ => return None,
        })
    }
}

/// How one family of cross-references is written, and which document it
/// resolves to. `container` fixes the container segment (code name → slug);
/// alternatively the pattern captures it as a `container` group (act number).
#[derive(Debug, Clone)]
pub struct ReferenceRule {
    pub regex: Regex,
    pub nature: String,
    pub container: Option<String>,
}

/// One instruction phrasing: the keywords that make the classifier pick the
/// action, and the full grammar used for lowering. `⟦n⟧` in the grammar
/// matches the placeholder left where the n-th quoted literal was masked out.
#[derive(Debug, Clone)]
pub struct InstructionRule {
    pub action: Action,
    pub keywords: Vec<String>,
    pub regex: Regex,
}

/// An entry-into-force phrasing. The regex must capture `date`; a `scope`
/// group, when present, restricts the clause to one paragraph of the act.
#[derive(Debug, Clone)]
pub struct DateRule {
    pub regex: Regex,
    pub has_scope: bool,
}

/// Structural vocabulary used inside locator phrases ("the first sentence of
/// 2° of II"): the words for "of", "and", enumerable nouns, and "last".
#[derive(Debug, Clone, Deserialize)]
pub struct StructureWords {
    pub of: String,
    pub and: String,
    pub the: String,
    pub paragraph: String,
    pub sentence: String,
    pub last: String,
}

/// A compiled pattern table.
#[derive(Debug, Clone)]
pub struct PatternSet {
    pub name: String,
    /// Jurisdiction segment used when building document ids from references.
    pub jurisdiction: String,
    pub references: Vec<ReferenceRule>,
    /// Marker tying a reference to a paragraph of the amending act itself
    /// ("…, as amended by I of this article"). Captures `paragraph`.
    pub amended_by: Regex,
    /// Sentence shapes that introduce a run of instructions and name their
    /// common target ("X is amended as follows:"). Capture `scope`.
    pub headers: Vec<Regex>,
    pub instructions: Vec<InstructionRule>,
    pub date_clauses: Vec<DateRule>,
    /// `chrono` format strings tried in order on captured date text.
    pub date_formats: Vec<String>,
    /// Sentences carrying no consolidation content ("This act shall be
    /// executed as a law of the State.").
    pub boilerplate: Vec<Regex>,
    pub structure: StructureWords,
    /// Ordinal word → 1-based number ("second" → 2).
    pub ordinals: BTreeMap<String, u32>,
}

// Raw shapes mirroring the JSON file before regex compilation.
#[derive(Deserialize)]
struct RawTable {
    name: String,
    jurisdiction: String,
    references: Vec<RawReference>,
    amended_by: String,
    headers: Vec<String>,
    instructions: Vec<RawInstruction>,
    date_clauses: Vec<RawDateClause>,
    date_formats: Vec<String>,
    boilerplate: Vec<String>,
    structure: StructureWords,
    ordinals: BTreeMap<String, u32>,
}

#[derive(Deserialize)]
struct RawReference {
    pattern: String,
    nature: String,
    #[serde(default)]
    container: Option<String>,
}

#[derive(Deserialize)]
struct RawInstruction {
    action: String,
    keywords: Vec<String>,
    pattern: String,
}

#[derive(Deserialize)]
struct RawDateClause {
    pattern: String,
}

fn compile(pattern: &str) -> Result<Regex, PatternError> {
    Regex::new(pattern).map_err(|e| PatternError::BadRegex {
        pattern: pattern.to_owned(),
        message: e.to_string(),
    })
}

fn require_group(regex: &Regex, group: &'static str) -> Result<(), PatternError> {
    if regex.capture_names().any(|n| n == Some(group)) {
        Ok(())
    } else {
        Err(PatternError::MissingGroup { pattern: regex.as_str().to_owned(), group })
    }
}

fn has_group(regex: &Regex, group: &str) -> bool {
    regex.capture_names().any(|n| n == Some(group))
}

impl PatternSet {
    /// Loads and validates a pattern table from its JSON form.
    pub fn from_json(json: &str) -> Result<Self, PatternError> {
        let raw: RawTable =
            serde_json::from_str(json).map_err(|e| PatternError::Json(e.to_string()))?;

        let mut references = Vec::new();
        for r in raw.references {
            let regex = compile(&r.pattern)?;
            require_group(&regex, "unit")?;
            if r.container.is_none() && !has_group(&regex, "container") {
                return Err(PatternError::MissingContainer { pattern: r.pattern });
            }
            references.push(ReferenceRule { regex, nature: r.nature, container: r.container });
        }

        let amended_by = compile(&raw.amended_by)?;
        require_group(&amended_by, "paragraph")?;

        let mut headers = Vec::new();
        for h in raw.headers {
            let regex = compile(&h)?;
            require_group(&regex, "scope")?;
            headers.push(regex);
        }

        let mut instructions = Vec::new();
        for i in raw.instructions {
            let action = Action::from_name(&i.action)
                .ok_or_else(|| PatternError::UnknownAction(i.action.clone()))?;
            let regex = compile(&i.pattern)?;
            require_group(&regex, "target")?;
            match action {
                Action::Prepend | Action::ReplaceParagraph => {
                    require_group(&regex, "payload")?;
                }
                Action::Replace | Action::Insert => {
                    require_group(&regex, "word")?;
                    require_group(&regex, "payload")?;
                }
                Action::Suppress => {
                    require_group(&regex, "word")?;
                }
            }
            instructions.push(InstructionRule { action, keywords: i.keywords, regex });
        }

        let mut date_clauses = Vec::new();
        for d in raw.date_clauses {
            let regex = compile(&d.pattern)?;
            require_group(&regex, "date")?;
            let has_scope = has_group(&regex, "scope");
            date_clauses.push(DateRule { regex, has_scope });
        }

        let mut boilerplate = Vec::new();
        for b in raw.boilerplate {
            boilerplate.push(compile(&b)?);
        }

        Ok(PatternSet {
            name: raw.name,
            jurisdiction: raw.jurisdiction,
            references,
            amended_by,
            headers,
            instructions,
            date_clauses,
            date_formats: raw.date_formats,
            boilerplate,
            structure: raw.structure,
            ordinals: raw.ordinals,
        })
    }

    /// The bundled English table. The file ships inside the crate and is
    /// covered by tests, so loading it cannot fail.
    pub fn english() -> Self {
        Self::from_json(ENGLISH_JSON).expect("bundled pattern table is valid")
    }

    /// Ordinal word → number, if known ("second" → 2).
    pub fn ordinal(&self, word: &str) -> Option<u32> {
        self.ordinals.get(word).copied()
    }
}

// ---------------------------------------------------------------------------
