//! Detection of cross-references and entry-into-force clauses in prose.
//!
//! Amending acts name their targets in words — "article L723-4 of the French
//! Commercial Code, as amended by I of this article" — and delay parts of
//! themselves with clauses like "II of this article shall apply as of
//! January 1, 2023". This module turns both into data: [`Reference`] values
//! with resolved document ids, and [`DateClause`] values folded into per-scope
//! effective dates. All span offsets are character offsets.

use crate::corpus::{normalize_label, DocId};
use crate::patterns::PatternSet;
use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use chrono::NaiveDate;
use core::ops::Range;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefError {
    #[error("scope `{scope}` is given two entry dates, {first} and {second}")]
    ConflictingDates { scope: String, first: NaiveDate, second: NaiveDate },
    #[error("cannot compute the day after {0}")]
    DateOverflow(NaiveDate),
}

/// One detected cross-reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    /// Character range of the reference text, including any attached
    /// "as amended by …" marker.
    pub span: Range<usize>,
    /// Perennial id of the document the reference resolves to.
    pub target: DocId,
    /// Date at which the referenced text is meant to be read — the
    /// publication date of the text doing the referring.
    pub read_at: NaiveDate,
    /// Normalized label of the amending act's own paragraph whose output this
    /// reference designates ("…, as amended by I of this article"), if any.
    /// It does not change `read_at`; it tells the interpreter to chain onto
    /// that paragraph's result instead of the stored version.
    pub relative_to: Option<String>,
}

/// Finds every cross-reference in `text`. Rules are tried in table order;
/// when two matches overlap, the earlier rule (then the earlier match) wins,
/// so the returned spans never overlap and arrive sorted by start.
pub fn detect_references(text: &str, read_at: NaiveDate, pats: &PatternSet) -> Vec<Reference> {
    struct Candidate {
        bytes: Range<usize>,
        target: DocId,
    }
    let mut kept: Vec<Candidate> = Vec::new();
    for rule in &pats.references {
        for caps in rule.regex.captures_iter(text) {
            let whole = caps.get(0).expect("group 0 always present");
            let overlap = kept
                .iter()
                .any(|c| whole.start() < c.bytes.end && c.bytes.start < whole.end());
            if overlap {
                continue;
            }
            let unit = caps.name("unit").map(|m| m.as_str()).unwrap_or_default();
            let container = rule
                .container
                .clone()
                .or_else(|| caps.name("container").map(|m| m.as_str().to_owned()))
                .unwrap_or_default();
            kept.push(Candidate {
                bytes: whole.start()..whole.end(),
                target: DocId::new(&pats.jurisdiction, &rule.nature, &container, unit),
            });
        }
    }
    kept.sort_by_key(|c| c.bytes.start);

    // Attach "as amended by …" markers to the reference they directly follow
    // (only whitespace or a comma may separate them), extending its span.
    let mut relative: Vec<Option<String>> = kept.iter().map(|_| None).collect();
    let mut ends: Vec<usize> = kept.iter().map(|c| c.bytes.end).collect();
    for caps in pats.amended_by.captures_iter(text) {
        let whole = caps.get(0).expect("group 0 always present");
        let paragraph = caps.name("paragraph").map(|m| m.as_str()).unwrap_or_default();
        let attached = kept
            .iter()
            .enumerate()
            .filter(|(i, c)| {
                c.bytes.end <= whole.start()
                    && text[ends[*i].min(whole.start())..whole.start()]
                        .chars()
                        .all(|ch| ch.is_whitespace() || ch == ',')
            })
            .map(|(i, _)| i)
            .next_back();
        if let Some(i) = attached {
            relative[i] = Some(normalize_label(paragraph));
            ends[i] = ends[i].max(whole.end());
        }
    }

    kept.into_iter()
        .enumerate()
        .map(|(i, c)| Reference {
            span: char_offset(text, c.bytes.start)..char_offset(text, ends[i]),
            target: c.target,
            read_at,
            relative_to: relative[i].take(),
        })
        .collect()
}

/// Character offset of byte position `byte` in `text`.
pub(crate) fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

// ---------------------------------------------------------------------------
// Entry into force
// ---------------------------------------------------------------------------

/// One parsed entry-into-force clause. `scope` is the normalized label of the
/// act paragraph the clause covers; `None` covers the whole act.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateClause {
    pub scope: Option<String>,
    pub date: NaiveDate,
}

/// Matches one (trimmed) sentence against the date-clause grammar. Returns
/// `None` when the sentence is not a date clause or its date text does not
/// parse under any configured format.
pub fn match_date_clause(sentence: &str, pats: &PatternSet) -> Option<DateClause> {
    let sentence = sentence.trim();
    for rule in &pats.date_clauses {
        if let Some(caps) = rule.regex.captures(sentence) {
            let raw = caps.name("date")?.as_str();
            let date = pats
                .date_formats
                .iter()
                .find_map(|fmt| NaiveDate::parse_from_str(raw, fmt).ok())?;
            let scope = if rule.has_scope {
                caps.name("scope").map(|m| normalize_label(m.as_str()))
            } else {
                None
            };
            return Some(DateClause { scope, date });
        }
    }
    None
}

/// True when the (trimmed) sentence is recognized promulgation boilerplate.
pub fn is_boilerplate(sentence: &str, pats: &PatternSet) -> bool {
    let sentence = sentence.trim();
    pats.boilerplate.iter().any(|re| re.is_match(sentence))
}

/// Matches a header sentence ("X is amended as follows:") and returns the
/// scope text naming the common target of the instructions that follow.
pub fn match_header(text: &str, pats: &PatternSet) -> Option<String> {
    let text = text.trim();
    for re in &pats.headers {
        if let Some(caps) = re.captures(text) {
            return Some(caps.name("scope")?.as_str().to_owned());
        }
    }
    None
}

/// The default entry into force: the day after publication.
pub fn default_effective(publication: NaiveDate) -> Result<NaiveDate, RefError> {
    publication.succ_opt().ok_or(RefError::DateOverflow(publication))
}

/// Effective dates for an act: the default (day after publication, unless an
/// unscoped clause overrides it) plus per-scope overrides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveDates {
    pub default: NaiveDate,
    pub by_scope: BTreeMap<String, NaiveDate>,
}

impl EffectiveDates {
    /// Entry date for the instructions under the act paragraph labelled
    /// `scope` (normalized).
    pub fn for_scope(&self, scope: &str) -> NaiveDate {
        self.by_scope.get(scope).copied().unwrap_or(self.default)
    }
}

/// Folds the act's date clauses. Two clauses for the same scope must agree;
/// repeating the same date is tolerated.
pub fn effective_dates(
    publication: NaiveDate,
    clauses: &[DateClause],
) -> Result<EffectiveDates, RefError> {
    let mut default = default_effective(publication)?;
    let mut by_scope: BTreeMap<String, NaiveDate> = BTreeMap::new();
    let mut saw_default: Option<NaiveDate> = None;
    for clause in clauses {
        match &clause.scope {
            None => {
                if let Some(prev) = saw_default {
                    if prev != clause.date {
                        return Err(RefError::ConflictingDates {
                            scope: String::from("(whole act)"),
                            first: prev,
                            second: clause.date,
                        });
                    }
                }
                saw_default = Some(clause.date);
                default = clause.date;
            }
            Some(scope) => {
                if let Some(&prev) = by_scope.get(scope) {
                    if prev != clause.date {
                        return Err(RefError::ConflictingDates {
                            scope: scope.clone(),
                            first: prev,
                            second: clause.date,
                        });
                    }
                }
                by_scope.insert(scope.clone(), clause.date);
            }
        }
    }
    Ok(EffectiveDates { default, by_scope })
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn pats() -> PatternSet {
        PatternSet::english()
    }

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn detects_code_article_reference() {
        let text = "Article L723-4 of the Commercial Code is amended as follows:";
        let refs = detect_references(text, d(2022, 10, 25), &pats());
        assert_eq!(refs.len(), 1);
        assert_eq!(format!("{}", refs[0].target), "fr/code/commerce/L723-4");
        assert_eq!(refs[0].read_at, d(2022, 10, 25));
        assert_eq!(refs[0].relative_to, None);
        assert_eq!(refs[0].span, 0.."Article L723-4 of the Commercial Code".chars().count());
    }

    #[test]
    fn detects_act_article_reference() {
        let text = "See article 2 of law no. 2019-222 for details.";
        let refs = detect_references(text, d(2022, 1, 1), &pats());
        assert_eq!(refs.len(), 1);
        assert_eq!(format!("{}", refs[0].target), "fr/loi/2019-222/2");
    }

    #[test]
    fn attaches_amended_by_marker() {
        let text = "In the first sentence of 2° of II of article L723-4 of the French \
                    Commercial Code, as amended by I of this article, the words are replaced.";
        let refs = detect_references(text, d(2022, 10, 25), &pats());
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].relative_to.as_deref(), Some("I"));
        // The span swallows the marker so the locator phrase can excise both.
        let covered: String =
            text.chars().skip(refs[0].span.start).take(refs[0].span.len()).collect();
        assert!(covered.ends_with("of this article"), "span was `{covered}`");
        // read_at stays at publication; chaining is the interpreter's job.
        assert_eq!(refs[0].read_at, d(2022, 10, 25));
    }

    #[test]
    fn marker_needs_adjacent_reference() {
        // Marker with intervening prose attaches to nothing.
        let text = "Article L723-4 of the Commercial Code applies. Everything else, \
                    as amended by I of this article, is untouched.";
        let refs = detect_references(text, d(2022, 1, 1), &pats());
        assert_eq!(refs.len(), 1);
        assert_eq!(refs[0].relative_to, None);
    }

    #[test]
    fn empty_text_has_no_references() {
        assert!(detect_references("", d(2022, 1, 1), &pats()).is_empty());
    }

    #[test]
    fn spans_never_overlap_and_are_sorted() {
        let text = "Under article L723-4 of the Commercial Code and article 2 of law 2019-222, \
                    and article L1221-1 of the Labor Code.";
        let refs = detect_references(text, d(2022, 1, 1), &pats());
        assert_eq!(refs.len(), 3);
        for pair in refs.windows(2) {
            assert!(pair[0].span.end <= pair[1].span.start);
        }
    }

    #[test]
    fn matches_scoped_date_clause() {
        let clause = match_date_clause("II of this article shall apply as of January 1, 2023.", &pats());
        assert_eq!(clause, Some(DateClause { scope: Some("II".into()), date: d(2023, 1, 1) }));
    }

    #[test]
    fn matches_unscoped_date_clause() {
        let clause = match_date_clause(" This act shall apply as of March 1, 2024. ", &pats());
        assert_eq!(clause, Some(DateClause { scope: None, date: d(2024, 3, 1) }));
        assert_eq!(match_date_clause("The weather is nice.", &pats()), None);
        // A clause-shaped sentence with an impossible date is not a clause.
        assert_eq!(
            match_date_clause("II of this article shall apply as of Febtember 1, 2023.", &pats()),
            None
        );
    }

    #[test]
    fn recognizes_boilerplate() {
        assert!(is_boilerplate("This act shall be executed as a law of the State.", &pats()));
        assert!(!is_boilerplate("This act matters.", &pats()));
    }

    #[test]
    fn matches_amendment_header() {
        let scope =
            match_header("Article L723-4 of the Commercial Code is amended as follows:", &pats());
        assert_eq!(scope.as_deref(), Some("Article L723-4 of the Commercial Code"));
        assert_eq!(match_header("Nothing to see here.", &pats()), None);
    }

    #[test]
    fn default_entry_is_day_after_publication() {
        assert_eq!(default_effective(d(2022, 10, 25)).unwrap(), d(2022, 10, 26));
        // Month boundary.
        assert_eq!(default_effective(d(2022, 12, 31)).unwrap(), d(2023, 1, 1));
    }

    #[test]
    fn folds_effective_dates_by_scope() {
        let clauses = vec![DateClause { scope: Some("II".into()), date: d(2023, 1, 1) }];
        let eff = effective_dates(d(2022, 10, 25), &clauses).unwrap();
        assert_eq!(eff.for_scope("I"), d(2022, 10, 26));
        assert_eq!(eff.for_scope("II"), d(2023, 1, 1));

        // An unscoped clause moves the default for everyone else.
        let clauses = vec![
            DateClause { scope: None, date: d(2024, 7, 1) },
            DateClause { scope: Some("II".into()), date: d(2024, 9, 1) },
        ];
        let eff = effective_dates(d(2024, 5, 1), &clauses).unwrap();
        assert_eq!(eff.for_scope("I"), d(2024, 7, 1));
        assert_eq!(eff.for_scope("II"), d(2024, 9, 1));
    }

    #[test]
    fn conflicting_dates_are_rejected_duplicates_tolerated() {
        let clauses = vec![
            DateClause { scope: Some("II".into()), date: d(2023, 1, 1) },
            DateClause { scope: Some("II".into()), date: d(2023, 2, 1) },
        ];
        assert!(matches!(
            effective_dates(d(2022, 10, 25), &clauses),
            Err(RefError::ConflictingDates { .. })
        ));

        let clauses = vec![
            DateClause { scope: Some("II".into()), date: d(2023, 1, 1) },
            DateClause { scope: Some("II".into()), date: d(2023, 1, 1) },
        ];
        assert!(effective_dates(d(2022, 10, 25), &clauses).is_ok());
    }
}
