//! Navigation inside one document version.
//!
//! Amendment instructions point at places: "the first paragraph", "1°",
//! "the first sentence of 2° of II", "the second occurrence of the word
//! `and`". A [`Step`] sequence encodes such a path; [`resolve`] walks it over
//! a paragraph tree and yields the node (and, for sentence steps, a character
//! range inside its text). Word lookup is handled by [`find_occurrence`].
//!
//! All ranges produced here are **character** offsets, not byte offsets, so
//! they stay meaningful for accented legal prose.

use crate::corpus::{normalize_label, ParagraphNode};
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;
use thiserror::Error;

/// One navigation step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    /// Child paragraph carrying this label (matched after normalization).
    ParByLabel(String),
    /// N-th child paragraph, 1-based, labelled or not.
    ParByPosition(u32),
    /// Last child paragraph.
    LastPar,
    /// N-th sentence of the current paragraph's text, 1-based. Only valid as
    /// the final step.
    Sentence(u32),
}

impl Step {
    pub fn label(l: &str) -> Self {
        Step::ParByLabel(String::from(l))
    }
}

/// Errors raised while resolving a path or a word occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocateError {
    #[error("no paragraph labelled `{label}` at this level")]
    NoSuchLabel { label: String },
    #[error("no paragraph at position {position} (level has {len})")]
    NoSuchPosition { position: u32, len: usize },
    #[error("no paragraphs at this level")]
    Empty,
    #[error("paragraph has no text to address sentences or words in")]
    NoText,
    #[error("no sentence {index} (text has {len})")]
    NoSuchSentence { index: u32, len: usize },
    #[error("sentence step must be the final step")]
    SentenceNotFinal,
    #[error("paragraph positions and sentence indices are 1-based")]
    ZeroIndex,
    #[error("occurrence {wanted} of `{word}` not found ({found} present)")]
    OccurrenceNotFound { word: String, wanted: u32, found: u32 },
}

/// Where a path landed: the indices from the body root down to the node, and
/// the sentence character range when the path ended on a sentence step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedSpan {
    pub path: Vec<usize>,
    pub sentence: Option<Range<usize>>,
}

/// Walks `steps` from the body root. Label matching uses
/// [`normalize_label`]; positions are 1-based; a [`Step::Sentence`] must come
/// last and requires the node to carry text.
pub fn resolve(body: &[ParagraphNode], steps: &[Step]) -> Result<ResolvedSpan, LocateError> {
    let mut path: Vec<usize> = Vec::new();
    let mut level: &[ParagraphNode] = body;
    let mut sentence: Option<Range<usize>> = None;
    for (i, step) in steps.iter().enumerate() {
        if sentence.is_some() {
            return Err(LocateError::SentenceNotFinal);
        }
        match step {
            Step::ParByLabel(label) => {
                let wanted = normalize_label(label);
                let idx = level
                    .iter()
                    .position(|n| n.label.as_deref().map(normalize_label) == Some(wanted.clone()))
                    .ok_or_else(|| LocateError::NoSuchLabel { label: label.clone() })?;
                path.push(idx);
                level = &level[idx].children;
            }
            Step::ParByPosition(pos) => {
                if *pos == 0 {
                    return Err(LocateError::ZeroIndex);
                }
                let idx = (*pos - 1) as usize;
                if idx >= level.len() {
                    return Err(LocateError::NoSuchPosition { position: *pos, len: level.len() });
                }
                path.push(idx);
                level = &level[idx].children;
            }
            Step::LastPar => {
                if level.is_empty() {
                    return Err(LocateError::Empty);
                }
                path.push(level.len() - 1);
                level = &level[level.len() - 1].children;
            }
            Step::Sentence(n) => {
                if *n == 0 {
                    return Err(LocateError::ZeroIndex);
                }
                if i + 1 != steps.len() {
                    return Err(LocateError::SentenceNotFinal);
                }
                let node = node_at(body, &path).expect("path built above is valid");
                let text = node.text.as_deref().ok_or(LocateError::NoText)?;
                let sentences = split_sentences(text);
                let idx = (*n - 1) as usize;
                let range = sentences
                    .get(idx)
                    .cloned()
                    .ok_or(LocateError::NoSuchSentence { index: *n, len: sentences.len() })?;
                sentence = Some(range);
            }
        }
    }
    // An empty level walk (no steps) addresses the body root, which has no
    // single node; callers use non-empty paths for node operations.
    Ok(ResolvedSpan { path, sentence })
}

/// Node at `path` (child indices from the root), if the path is in bounds.
pub fn node_at<'a>(body: &'a [ParagraphNode], path: &[usize]) -> Option<&'a ParagraphNode> {
    let (&first, rest) = path.split_first()?;
    let mut node = body.get(first)?;
    for &idx in rest {
        node = node.children.get(idx)?;
    }
    Some(node)
}

/// Mutable access to the node at `path`.
pub fn node_at_mut<'a>(
    body: &'a mut [ParagraphNode],
    path: &[usize],
) -> Option<&'a mut ParagraphNode> {
    let (&first, rest) = path.split_first()?;
    let mut node = body.get_mut(first)?;
    for &idx in rest {
        node = node.children.get_mut(idx)?;
    }
    Some(node)
}

/// Mutable access to the sibling list holding the node at `path`, plus the
/// node's index in it. Used to splice whole paragraphs.
pub fn siblings_at_mut<'a>(
    body: &'a mut Vec<ParagraphNode>,
    path: &[usize],
) -> Option<(&'a mut Vec<ParagraphNode>, usize)> {
    let (&last, parents) = path.split_last()?;
    let list = if parents.is_empty() {
        body
    } else {
        &mut node_at_mut(body, parents)?.children
    };
    if last >= list.len() {
        return None;
    }
    Some((list, last))
}

// ---------------------------------------------------------------------------
// Sentences
// ---------------------------------------------------------------------------

/// Splits `text` into sentence character ranges.
///
/// A boundary is a `.`, `!` or `?` outside quotes, followed by whitespace and
/// then an uppercase letter, digit or opening quote/parenthesis. A period
/// after a single capital letter ("article L. 723-4") does not split. The
/// ranges partition the trimmed text in order: every character of the trimmed
/// text belongs to exactly one sentence. Text with no boundary is a single
/// sentence; blank text has none.
pub fn split_sentences(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<char> = text.chars().collect();
    let mut start = 0;
    while start < chars.len() && chars[start].is_whitespace() {
        start += 1;
    }
    let mut end = chars.len();
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if start >= end {
        return Vec::new();
    }

    let mut ranges = Vec::new();
    let mut sentence_start = start;
    let mut in_quotes = false;
    let mut i = start;
    while i < end {
        let c = chars[i];
        if is_quote(c) {
            in_quotes = !in_quotes;
        }
        if !in_quotes && matches!(c, '.' | '!' | '?') && !is_single_initial(&chars, i) {
            let mut j = i + 1;
            // Allow a closing quote to hug the punctuation: `word." Next`.
            if j < end && is_quote(chars[j]) {
                j += 1;
            }
            if j < end && chars[j].is_whitespace() {
                let mut k = j;
                while k < end && chars[k].is_whitespace() {
                    k += 1;
                }
                if k < end && opens_sentence(chars[k]) {
                    ranges.push(sentence_start..k);
                    sentence_start = k;
                    i = k;
                    continue;
                }
            }
        }
        i += 1;
    }
    ranges.push(sentence_start..end);
    ranges
}

fn is_quote(c: char) -> bool {
    matches!(c, '"' | '«' | '»' | '“' | '”')
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || is_quote(c) || c == '('
}

/// True when the period at `chars[i]` terminates a lone capital letter, as in
/// "L." or "R." of article numbers — not a sentence end.
fn is_single_initial(chars: &[char], i: usize) -> bool {
    if chars[i] != '.' || i == 0 {
        return false;
    }
    let prev = chars[i - 1];
    if !(prev.is_uppercase() && prev.is_alphabetic()) {
        return false;
    }
    // The capital must itself start a word.
    i < 2 || !chars[i - 2].is_alphanumeric()
}

// ---------------------------------------------------------------------------
// Word occurrences
// ---------------------------------------------------------------------------

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Finds the `occurrence`-th whole-word, case-sensitive match of `word` in
/// `text`, scanning left to right; `window` (a character range, e.g. one
/// sentence) restricts the search. Returns the match as a character range.
///
/// "Whole word" is checked against the full text: a match may not butt
/// against a letter or digit on either side, so `and` never matches inside
/// `sand`, while `rescue,` (with its comma) may be followed directly by a
/// letter's space. Matches never overlap.
pub fn find_occurrence(
    text: &str,
    window: Option<&Range<usize>>,
    word: &str,
    occurrence: u32,
) -> Result<Range<usize>, LocateError> {
    if occurrence == 0 {
        return Err(LocateError::ZeroIndex);
    }
    let chars: Vec<char> = text.chars().collect();
    let needle: Vec<char> = word.chars().collect();
    let (lo, hi) = match window {
        Some(r) => (r.start.min(chars.len()), r.end.min(chars.len())),
        None => (0, chars.len()),
    };
    if needle.is_empty() || lo >= hi || needle.len() > hi - lo {
        return Err(LocateError::OccurrenceNotFound {
            word: String::from(word),
            wanted: occurrence,
            found: 0,
        });
    }
    let first_is_word = is_word_char(needle[0]);
    let last_is_word = is_word_char(needle[needle.len() - 1]);
    let mut found = 0;
    let mut i = lo;
    while i + needle.len() <= hi {
        if chars[i..i + needle.len()] == needle[..] {
            let left_ok = !first_is_word || i == 0 || !is_word_char(chars[i - 1]);
            let end = i + needle.len();
            let right_ok = !last_is_word || end >= chars.len() || !is_word_char(chars[end]);
            if left_ok && right_ok {
                found += 1;
                if found == occurrence {
                    return Ok(i..end);
                }
                i = end;
                continue;
            }
        }
        i += 1;
    }
    Err(LocateError::OccurrenceNotFound { word: String::from(word), wanted: occurrence, found })
}

// ---------------------------------------------------------------------------
