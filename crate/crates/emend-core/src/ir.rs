//! The change-program representation and its text form.
//!
//! A compiled amendment is an [`AmendmentProgram`]: one [`VersionBlock`] per
//! `(target document, effective date)` pair, each holding the ordered
//! [`ChangeOp`]s that build the new version. Programs have a canonical text
//! form — a small scripting surface meant to be read by a human reviewer —
//! produced by [`print_program`] and read back by [`parse_program`]; the two
//! are exact inverses on valid programs.
//!
//! ```text
//! s = db.get_version("fr/loi/2022-1348/1", Date(2022, 10, 25))
//! t = db.get_version("fr/code/commerce/L723-4", Date(2022, 10, 25))
//!
//! v1 = t.new_version(Date(2022, 10, 26))
//! pI = s.par("I")
//! v1.schedule_changes(s, [
//!     v1.prepend(pI.par("1"), v1.par(1), "I. -"),
//!     v1.replace(pI.par("2"), v1.par("1°"), ("and", 2), "or")
//! ])
//! v1 = db.add_version(v1.apply_changes())
//! ```
//!
//! Variable names are fixed by the grammar: `s` is the amending act, `t`,
//! `t2`, … are stored bases, `v1`, `v2`, … are the blocks' drafts (in block
//! order), and `p…` names bind paragraphs of `s` for attribution.

use crate::corpus::DocId;
use crate::locator::Step;
use crate::patterns::Action;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use chrono::{Datelike, NaiveDate};
use core::fmt;
use core::fmt::Write as _;
use thiserror::Error;

/// Which piece of text inside the target paragraph an op acts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    /// First whole-word occurrence of the word(s).
    Word(String),
    /// N-th whole-word occurrence, 1-based, counted left to right.
    Occurrence(String, u32),
}

/// One elementary change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeOp {
    pub action: Action,
    /// Attribution: labels (outermost first) of the amending-act paragraph
    /// this op was compiled from. Empty when the whole act is the source.
    pub source: Vec<String>,
    /// Where the op applies inside the draft, from the body root.
    pub target: Vec<Step>,
    /// Word anchor ([`Action::Insert`]) or occurrence selector
    /// ([`Action::Replace`], [`Action::Suppress`]).
    pub selector: Option<Selector>,
    /// New text ([`Action::Prepend`], [`Action::Replace`], [`Action::Insert`],
    /// [`Action::ReplaceParagraph`]).
    pub payload: Option<String>,
}

/// Which version a block starts from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseSelector {
    /// The stored version of `doc` in force on `at`.
    Stored { doc: DocId, at: NaiveDate },
    /// The version produced by an earlier block of the same program
    /// (0-based block index).
    BlockOutput(usize),
}

/// All changes becoming effective for one document on one date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionBlock {
    pub base: BaseSelector,
    pub effective: NaiveDate,
    pub ops: Vec<ChangeOp>,
    /// Perennial id of the amending unit the block was compiled from.
    pub source_unit: DocId,
}

/// A full compiled amendment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmendmentProgram {
    /// Perennial id of the amending unit.
    pub source: DocId,
    pub publication: NaiveDate,
    /// Blocks ordered by effective date (ties keep compilation order).
    pub blocks: Vec<VersionBlock>,
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// A structural rule a type-correct program can still break.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("program source id must be version-free")]
    DatedSourceId,
    #[error("block {block} schedules no changes")]
    EmptyOps { block: usize },
    #[error("block {block} is effective before its predecessor")]
    BlocksOutOfOrder { block: usize },
    #[error("block {block} uses the output of block {referenced}, which comes later")]
    ForwardBlockReference { block: usize, referenced: usize },
    #[error("block {block} must become effective after its base")]
    EffectiveNotAfterBase { block: usize },
    #[error("block {block} op {op}: {} requires a payload", .action.name())]
    PayloadRequired { block: usize, op: usize, action: Action },
    #[error("block {block} op {op}: suppress takes no payload")]
    PayloadForbidden { block: usize, op: usize },
    #[error("block {block} op {op}: {} requires a selector", .action.name())]
    SelectorRequired { block: usize, op: usize, action: Action },
    #[error("block {block} op {op}: {} takes no selector", .action.name())]
    SelectorForbidden { block: usize, op: usize, action: Action },
    #[error("block {block} op {op}: insert anchors on a word, not an occurrence")]
    AnchorMustBeWord { block: usize, op: usize },
    #[error("block {block} op {op}: target path is empty")]
    EmptyTarget { block: usize, op: usize },
    #[error("block {block} op {op}: sentence step must be the final step")]
    SentenceNotFinal { block: usize, op: usize },
    #[error("block {block} op {op}: {} cannot target a sentence", .action.name())]
    SentenceTargetNotAllowed { block: usize, op: usize, action: Action },
    #[error("block {block} op {op}: paragraph positions, sentence and occurrence numbers are 1-based")]
    ZeroIndex { block: usize, op: usize },
}

/// Checks every structural invariant; an empty result means the program is
/// valid and [`print_program`]/[`parse_program`] round-trip it exactly.
pub fn validate(program: &AmendmentProgram) -> Vec<Violation> {
    let mut out = Vec::new();
    if program.source.version_date.is_some() {
        out.push(Violation::DatedSourceId);
    }
    for (b, block) in program.blocks.iter().enumerate() {
        if block.ops.is_empty() {
            out.push(Violation::EmptyOps { block: b });
        }
        if b > 0 && block.effective < program.blocks[b - 1].effective {
            out.push(Violation::BlocksOutOfOrder { block: b });
        }
        match &block.base {
            BaseSelector::Stored { at, .. } => {
                if block.effective <= *at {
                    out.push(Violation::EffectiveNotAfterBase { block: b });
                }
            }
            BaseSelector::BlockOutput(j) => {
                if *j >= b {
                    out.push(Violation::ForwardBlockReference { block: b, referenced: *j });
                } else if block.effective <= program.blocks[*j].effective {
                    out.push(Violation::EffectiveNotAfterBase { block: b });
                }
            }
        }
        for (o, op) in block.ops.iter().enumerate() {
            validate_op(b, o, op, &mut out);
        }
    }
    out
}

fn validate_op(b: usize, o: usize, op: &ChangeOp, out: &mut Vec<Violation>) {
    let action = op.action;
    let needs_payload = !matches!(action, Action::Suppress);
    if needs_payload && op.payload.is_none() {
        out.push(Violation::PayloadRequired { block: b, op: o, action });
    }
    if !needs_payload && op.payload.is_some() {
        out.push(Violation::PayloadForbidden { block: b, op: o });
    }
    match action {
        Action::Replace | Action::Suppress => {
            if op.selector.is_none() {
                out.push(Violation::SelectorRequired { block: b, op: o, action });
            }
        }
        Action::Insert => match op.selector {
            None => out.push(Violation::SelectorRequired { block: b, op: o, action }),
            Some(Selector::Occurrence(..)) => {
                out.push(Violation::AnchorMustBeWord { block: b, op: o })
            }
            Some(Selector::Word(_)) => {}
        },
        Action::Prepend | Action::ReplaceParagraph => {
            if op.selector.is_some() {
                out.push(Violation::SelectorForbidden { block: b, op: o, action });
            }
        }
    }
    if op.target.is_empty() {
        out.push(Violation::EmptyTarget { block: b, op: o });
    }
    for (i, step) in op.target.iter().enumerate() {
        match step {
            Step::Sentence(n) => {
                if i + 1 != op.target.len() {
                    out.push(Violation::SentenceNotFinal { block: b, op: o });
                } else if matches!(action, Action::Prepend | Action::ReplaceParagraph) {
                    out.push(Violation::SentenceTargetNotAllowed { block: b, op: o, action });
                }
                if *n == 0 {
                    out.push(Violation::ZeroIndex { block: b, op: o });
                }
            }
            Step::ParByPosition(0) => out.push(Violation::ZeroIndex { block: b, op: o }),
            _ => {}
        }
    }
    if let Some(Selector::Occurrence(_, 0)) = op.selector {
        out.push(Violation::ZeroIndex { block: b, op: o });
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

fn push_str_literal(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('"');
}

fn push_date(out: &mut String, d: NaiveDate) {
    let _ = write!(out, "Date({}, {}, {})", d.year(), d.month(), d.day());
}

/// Variable names for the program's stored bases and source-paragraph
/// bindings, assigned in first-use order.
struct Names {
    targets: Vec<(DocId, NaiveDate, String)>,
    bindings: Vec<(String, String)>, // (label, var)
}

impl Names {
    fn build(program: &AmendmentProgram) -> Names {
        let mut targets: Vec<(DocId, NaiveDate, String)> = Vec::new();
        for block in &program.blocks {
            if let BaseSelector::Stored { doc, at } = &block.base {
                if !targets.iter().any(|(d, a, _)| d == doc && a == at) {
                    let var = if targets.is_empty() {
                        String::from("t")
                    } else {
                        format!("t{}", targets.len() + 1)
                    };
                    targets.push((doc.clone(), *at, var));
                }
            }
        }
        let mut bindings: Vec<(String, String)> = Vec::new();
        for block in &program.blocks {
            for op in &block.ops {
                if let Some(first) = op.source.first() {
                    if !bindings.iter().any(|(l, _)| l == first) {
                        let mut var: String =
                            first.chars().filter(|c| c.is_alphanumeric()).collect();
                        if var.is_empty() {
                            var = format!("x{}", bindings.len() + 1);
                        }
                        let mut candidate = format!("p{var}");
                        let mut n = 1;
                        while bindings.iter().any(|(_, v)| *v == candidate) {
                            n += 1;
                            candidate = format!("p{var}_{n}");
                        }
                        bindings.push((first.clone(), candidate));
                    }
                }
            }
        }
        Names { targets, bindings }
    }

    fn target_var(&self, doc: &DocId, at: NaiveDate) -> &str {
        &self
            .targets
            .iter()
            .find(|(d, a, _)| d == doc && *a == at)
            .expect("target collected during build")
            .2
    }

    fn binding_var(&self, label: &str) -> &str {
        &self.bindings.iter().find(|(l, _)| l == label).expect("binding collected").1
    }
}

fn push_source_expr(out: &mut String, names: &Names, source: &[String]) {
    match source.split_first() {
        None => out.push('s'),
        Some((first, rest)) => {
            out.push_str(names.binding_var(first));
            for label in rest {
                out.push_str(".par(");
                push_str_literal(out, label);
                out.push(')');
            }
        }
    }
}

fn push_target_expr(out: &mut String, vname: &str, steps: &[Step]) {
    out.push_str(vname);
    for step in steps {
        match step {
            Step::ParByLabel(label) => {
                out.push_str(".par(");
                push_str_literal(out, label);
                out.push(')');
            }
            Step::ParByPosition(n) => {
                let _ = write!(out, ".par({n})");
            }
            Step::LastPar => out.push_str(".lastpar()"),
            Step::Sentence(n) => {
                let _ = write!(out, ".sen({n})");
            }
        }
    }
}

fn push_selector(out: &mut String, selector: &Selector) {
    match selector {
        Selector::Word(w) => push_str_literal(out, w),
        Selector::Occurrence(w, n) => {
            out.push('(');
            push_str_literal(out, w);
            let _ = write!(out, ", {n})");
        }
    }
}

fn push_op(out: &mut String, names: &Names, vname: &str, op: &ChangeOp) {
    out.push_str(vname);
    out.push('.');
    out.push_str(op.action.name());
    out.push('(');
    push_source_expr(out, names, &op.source);
    out.push_str(", ");
    push_target_expr(out, vname, &op.target);
    match op.action {
        Action::Prepend | Action::ReplaceParagraph => {
            out.push_str(", ");
            push_str_literal(out, op.payload.as_deref().unwrap_or(""));
        }
        Action::Replace => {
            out.push_str(", ");
            push_selector(out, op.selector.as_ref().unwrap_or(&Selector::Word(String::new())));
            out.push_str(", ");
            push_str_literal(out, op.payload.as_deref().unwrap_or(""));
        }
        Action::Insert => {
            out.push_str(", ");
            let anchor = match &op.selector {
                Some(Selector::Word(w)) => w.as_str(),
                Some(Selector::Occurrence(w, _)) => w.as_str(),
                None => "",
            };
            push_str_literal(out, anchor);
            out.push_str(", ");
            push_str_literal(out, op.payload.as_deref().unwrap_or(""));
        }
        Action::Suppress => {
            out.push_str(", ");
            push_selector(out, op.selector.as_ref().unwrap_or(&Selector::Word(String::new())));
        }
    }
    out.push(')');
}

/// Renders the canonical text form. Deterministic: equal programs print to
/// identical text. Intended for valid programs (see [`validate`]); invalid
/// ones still print on a best-effort basis.
pub fn print_program(program: &AmendmentProgram) -> String {
    let names = Names::build(program);
    let mut out = String::new();

    out.push_str("s = db.get_version(");
    push_str_literal(&mut out, &program.source.to_string());
    out.push_str(", ");
    push_date(&mut out, program.publication);
    out.push_str(")\n");
    for (doc, at, var) in &names.targets {
        out.push_str(var);
        out.push_str(" = db.get_version(");
        push_str_literal(&mut out, &doc.to_string());
        out.push_str(", ");
        push_date(&mut out, *at);
        out.push_str(")\n");
    }

    let mut bound: Vec<&str> = Vec::new();
    for (b, block) in program.blocks.iter().enumerate() {
        let vname = format!("v{}", b + 1);
        out.push('\n');
        out.push_str(&vname);
        out.push_str(" = ");
        match &block.base {
            BaseSelector::Stored { doc, at } => out.push_str(names.target_var(doc, *at)),
            BaseSelector::BlockOutput(j) => {
                let _ = write!(out, "v{}", j + 1);
            }
        }
        out.push_str(".new_version(");
        push_date(&mut out, block.effective);
        out.push_str(")\n");

        for op in &block.ops {
            if let Some(first) = op.source.first() {
                if !bound.iter().any(|l| l == first) {
                    bound.push(first);
                    out.push_str(names.binding_var(first));
                    out.push_str(" = s.par(");
                    push_str_literal(&mut out, first);
                    out.push_str(")\n");
                }
            }
        }

        out.push_str(&vname);
        out.push_str(".schedule_changes(s, [\n");
        for (o, op) in block.ops.iter().enumerate() {
            out.push_str("    ");
            push_op(&mut out, &names, &vname, op);
            if o + 1 < block.ops.len() {
                out.push(',');
            }
            out.push('\n');
        }
        out.push_str("])\n");

        let _ = writeln!(out, "{vname} = db.add_version({vname}.apply_changes())");
    }
    out
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Errors from [`parse_program`].
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {expected}")]
    Syntax { line: usize, col: usize, expected: String },
    #[error("program parses but violates invariants: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
}

pub(crate) fn format_violations(violations: &[Violation]) -> String {
    let mut out = String::new();
    for (i, v) in violations.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{v}");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Punct(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(_) => write!(f, "string"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::Punct(c) => write!(f, "`{c}`"),
        }
    }
}

struct Lexer {
    tokens: Vec<(Tok, usize, usize)>,
    pos: usize,
    end_line: usize,
    end_col: usize,
}

fn lex(text: &str) -> Result<Lexer, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    loop {
        let (tline, tcol) = (line, col);
        let Some(c) = chars.next() else { break };
        col += 1;
        match c {
            '\n' => {
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {}
            '=' | '.' | '(' | ')' | '[' | ']' | ',' => tokens.push((Tok::Punct(c), tline, tcol)),
            '"' => {
                let mut s = String::new();
                loop {
                    let Some(c) = chars.next() else {
                        return Err(ParseError::Syntax {
                            line,
                            col,
                            expected: String::from("closing `\"`"),
                        });
                    };
                    col += 1;
                    match c {
                        '"' => break,
                        '\\' => {
                            let Some(esc) = chars.next() else {
                                return Err(ParseError::Syntax {
                                    line,
                                    col,
                                    expected: String::from("escape character"),
                                });
                            };
                            col += 1;
                            s.push(match esc {
                                '"' => '"',
                                '\\' => '\\',
                                'n' => '\n',
                                'r' => '\r',
                                't' => '\t',
                                other => {
                                    return Err(ParseError::Syntax {
                                        line,
                                        col,
                                        expected: format!(
                                            "valid escape (\\\" \\\\ \\n \\r \\t), found `\\{other}`"
                                        ),
                                    })
                                }
                            });
                        }
                        '\n' => {
                            // Literal newlines in strings are accepted; the
                            // canonical printer escapes them.
                            s.push('\n');
                            line += 1;
                            col = 1;
                        }
                        other => s.push(other),
                    }
                }
                tokens.push((Tok::Str(s), tline, tcol));
            }
            c if c.is_ascii_digit() || c == '-' => {
                let mut n = String::new();
                n.push(c);
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        n.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                let value = n.parse::<i64>().map_err(|_| ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    expected: String::from("integer"),
                })?;
                tokens.push((Tok::Int(value), tline, tcol));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                s.push(c);
                while let Some(&d) = chars.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        s.push(d);
                        chars.next();
                        col += 1;
                    } else {
                        break;
                    }
                }
                tokens.push((Tok::Ident(s), tline, tcol));
            }
            other => {
                return Err(ParseError::Syntax {
                    line: tline,
                    col: tcol,
                    expected: format!("token, found `{other}`"),
                })
            }
        }
    }
    Ok(Lexer { tokens, pos: 0, end_line: line, end_col: col })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.tokens.get(self.pos + 1).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or((self.end_line, self.end_col))
    }

    fn err(&self, expected: &str) -> ParseError {
        let (line, col) = self.here();
        let expected = match self.peek() {
            Some(tok) => format!("{expected}, found {tok}"),
            None => format!("{expected}, found end of program"),
        };
        ParseError::Syntax { line, col, expected }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(&format!("`{c}`"))),
        }
    }

    fn expect_ident(&mut self, name: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == name => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(&format!("`{name}`"))),
        }
    }

    fn take_ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(what)),
        }
    }

    fn take_str(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err(what)),
        }
    }

    fn take_int(&mut self, what: &str) -> Result<i64, ParseError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.err(what)),
        }
    }

    fn take_u32(&mut self, what: &str) -> Result<u32, ParseError> {
        let (line, col) = self.here();
        let n = self.take_int(what)?;
        u32::try_from(n).map_err(|_| ParseError::Syntax {
            line,
            col,
            expected: format!("{what} (non-negative, small)"),
        })
    }
}

struct Parser {
    lex: Lexer,
    source: Option<(DocId, NaiveDate)>,
    targets: Vec<(String, DocId, NaiveDate)>,
    bindings: Vec<(String, String)>, // (var, label)
    blocks: Vec<VersionBlock>,
}

impl Parser {
    fn date(&mut self) -> Result<NaiveDate, ParseError> {
        let (line, col) = self.lex.here();
        self.lex.expect_ident("Date")?;
        self.lex.expect_punct('(')?;
        let y = self.lex.take_int("year")?;
        self.lex.expect_punct(',')?;
        let m = self.lex.take_u32("month")?;
        self.lex.expect_punct(',')?;
        let d = self.lex.take_u32("day")?;
        self.lex.expect_punct(')')?;
        let y = i32::try_from(y).map_err(|_| ParseError::Syntax {
            line,
            col,
            expected: String::from("year in range"),
        })?;
        NaiveDate::from_ymd_opt(y, m, d).ok_or(ParseError::Syntax {
            line,
            col,
            expected: String::from("valid calendar date"),
        })
    }

    fn get_version_rhs(&mut self) -> Result<(DocId, NaiveDate), ParseError> {
        self.lex.expect_ident("db")?;
        self.lex.expect_punct('.')?;
        let (line, col) = self.lex.here();
        self.lex.expect_ident("get_version")?;
        self.lex.expect_punct('(')?;
        let uri = self.lex.take_str("document uri string")?;
        let doc = DocId::parse(&uri).map_err(|e| ParseError::Syntax {
            line,
            col,
            expected: format!("document uri ({e})"),
        })?;
        self.lex.expect_punct(',')?;
        let date = self.date()?;
        self.lex.expect_punct(')')?;
        Ok((doc, date))
    }

    fn resolve_base(&self, var: &str, line: usize, col: usize) -> Result<BaseSelector, ParseError> {
        if let Some((_, doc, at)) = self.targets.iter().find(|(v, _, _)| v == var) {
            return Ok(BaseSelector::Stored { doc: doc.clone(), at: *at });
        }
        if let Some(idx) = parse_version_var(var) {
            if idx < self.blocks.len() {
                return Ok(BaseSelector::BlockOutput(idx));
            }
        }
        Err(ParseError::Syntax {
            line,
            col,
            expected: format!("a declared target (`t…`) or earlier version (`v…`), found `{var}`"),
        })
    }

    fn source_expr(&mut self) -> Result<Vec<String>, ParseError> {
        let (line, col) = self.lex.here();
        let var = self.lex.take_ident("source expression (`s` or a `p…` binding)")?;
        let mut path = if var == "s" {
            Vec::new()
        } else if let Some((_, label)) = self.bindings.iter().find(|(v, _)| *v == var) {
            alloc::vec![label.clone()]
        } else {
            return Err(ParseError::Syntax {
                line,
                col,
                expected: format!("`s` or a declared `p…` binding, found `{var}`"),
            });
        };
        while matches!(self.lex.peek(), Some(Tok::Punct('.'))) {
            self.lex.expect_punct('.')?;
            self.lex.expect_ident("par")?;
            self.lex.expect_punct('(')?;
            path.push(self.lex.take_str("label string")?);
            self.lex.expect_punct(')')?;
        }
        Ok(path)
    }

    fn target_expr(&mut self, vname: &str) -> Result<Vec<Step>, ParseError> {
        let (line, col) = self.lex.here();
        let var = self.lex.take_ident("target expression")?;
        if var != vname {
            return Err(ParseError::Syntax {
                line,
                col,
                expected: format!("target rooted at `{vname}`, found `{var}`"),
            });
        }
        let mut steps = Vec::new();
        while matches!(self.lex.peek(), Some(Tok::Punct('.'))) {
            self.lex.expect_punct('.')?;
            let method = self.lex.take_ident("`par`, `lastpar` or `sen`")?;
            match method.as_str() {
                "par" => {
                    self.lex.expect_punct('(')?;
                    match self.lex.peek() {
                        Some(Tok::Str(_)) => {
                            steps.push(Step::ParByLabel(self.lex.take_str("label")?))
                        }
                        Some(Tok::Int(_)) => {
                            steps.push(Step::ParByPosition(self.lex.take_u32("position")?))
                        }
                        _ => return Err(self.lex.err("label string or position number")),
                    }
                    self.lex.expect_punct(')')?;
                }
                "lastpar" => {
                    self.lex.expect_punct('(')?;
                    self.lex.expect_punct(')')?;
                    steps.push(Step::LastPar);
                }
                "sen" => {
                    self.lex.expect_punct('(')?;
                    steps.push(Step::Sentence(self.lex.take_u32("sentence number")?));
                    self.lex.expect_punct(')')?;
                }
                other => {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        expected: format!("`par`, `lastpar` or `sen`, found `{other}`"),
                    })
                }
            }
        }
        Ok(steps)
    }

    fn selector(&mut self) -> Result<Selector, ParseError> {
        match self.lex.peek() {
            Some(Tok::Str(_)) => Ok(Selector::Word(self.lex.take_str("word")?)),
            Some(Tok::Punct('(')) => {
                self.lex.expect_punct('(')?;
                let word = self.lex.take_str("word")?;
                self.lex.expect_punct(',')?;
                let n = self.lex.take_u32("occurrence number")?;
                self.lex.expect_punct(')')?;
                Ok(Selector::Occurrence(word, n))
            }
            _ => Err(self.lex.err("selector (word string or `(word, n)`)")),
        }
    }

    fn op(&mut self, vname: &str) -> Result<ChangeOp, ParseError> {
        let (line, col) = self.lex.here();
        let var = self.lex.take_ident("op")?;
        if var != vname {
            return Err(ParseError::Syntax {
                line,
                col,
                expected: format!("op on `{vname}`, found `{var}`"),
            });
        }
        self.lex.expect_punct('.')?;
        let (mline, mcol) = self.lex.here();
        let method = self.lex.take_ident("op name")?;
        let action = Action::from_name(&method).ok_or(ParseError::Syntax {
            line: mline,
            col: mcol,
            expected: format!(
                "one of prepend, replace, insert, suppress, replace_par, found `{method}`"
            ),
        })?;
        self.lex.expect_punct('(')?;
        let source = self.source_expr()?;
        self.lex.expect_punct(',')?;
        let target = self.target_expr(vname)?;
        let (selector, payload) = match action {
            Action::Prepend | Action::ReplaceParagraph => {
                self.lex.expect_punct(',')?;
                (None, Some(self.lex.take_str("payload string")?))
            }
            Action::Replace => {
                self.lex.expect_punct(',')?;
                let sel = self.selector()?;
                self.lex.expect_punct(',')?;
                (Some(sel), Some(self.lex.take_str("payload string")?))
            }
            Action::Insert => {
                self.lex.expect_punct(',')?;
                let anchor = self.lex.take_str("anchor word")?;
                self.lex.expect_punct(',')?;
                (Some(Selector::Word(anchor)), Some(self.lex.take_str("payload string")?))
            }
            Action::Suppress => {
                self.lex.expect_punct(',')?;
                (Some(self.selector()?), None)
            }
        };
        self.lex.expect_punct(')')?;
        Ok(ChangeOp { action, source, target, selector, payload })
    }

    fn block(&mut self, vname: String, base: BaseSelector) -> Result<(), ParseError> {
        self.lex.expect_punct('.')?;
        self.lex.expect_ident("new_version")?;
        self.lex.expect_punct('(')?;
        let effective = self.date()?;
        self.lex.expect_punct(')')?;

        // Paragraph bindings for attribution, then the scheduled ops.
        loop {
            match (self.lex.peek(), self.lex.peek2()) {
                (Some(Tok::Ident(var)), Some(Tok::Punct('='))) if var.starts_with('p') => {
                    let var = self.lex.take_ident("binding")?;
                    self.lex.expect_punct('=')?;
                    self.lex.expect_ident("s")?;
                    self.lex.expect_punct('.')?;
                    self.lex.expect_ident("par")?;
                    self.lex.expect_punct('(')?;
                    let label = self.lex.take_str("label string")?;
                    self.lex.expect_punct(')')?;
                    self.bindings.push((var, label));
                }
                _ => break,
            }
        }

        let (line, col) = self.lex.here();
        let sched_var = self.lex.take_ident("schedule_changes statement")?;
        if sched_var != vname {
            return Err(ParseError::Syntax {
                line,
                col,
                expected: format!("`{vname}.schedule_changes`, found `{sched_var}`"),
            });
        }
        self.lex.expect_punct('.')?;
        self.lex.expect_ident("schedule_changes")?;
        self.lex.expect_punct('(')?;
        self.lex.expect_ident("s")?;
        self.lex.expect_punct(',')?;
        self.lex.expect_punct('[')?;
        let mut ops = Vec::new();
        if !matches!(self.lex.peek(), Some(Tok::Punct(']'))) {
            loop {
                ops.push(self.op(&vname)?);
                if matches!(self.lex.peek(), Some(Tok::Punct(','))) {
                    self.lex.expect_punct(',')?;
                    // Tolerate a trailing comma before the closing bracket.
                    if matches!(self.lex.peek(), Some(Tok::Punct(']'))) {
                        break;
                    }
                } else {
                    break;
                }
            }
        }
        self.lex.expect_punct(']')?;
        self.lex.expect_punct(')')?;

        // v1 = db.add_version(v1.apply_changes())
        let (line, col) = self.lex.here();
        let commit_var = self.lex.take_ident("add_version statement")?;
        if commit_var != vname {
            return Err(ParseError::Syntax {
                line,
                col,
                expected: format!("`{vname} = db.add_version(…)`, found `{commit_var}`"),
            });
        }
        self.lex.expect_punct('=')?;
        self.lex.expect_ident("db")?;
        self.lex.expect_punct('.')?;
        self.lex.expect_ident("add_version")?;
        self.lex.expect_punct('(')?;
        let (line, col) = self.lex.here();
        let applied_var = self.lex.take_ident("apply_changes call")?;
        if applied_var != vname {
            return Err(ParseError::Syntax {
                line,
                col,
                expected: format!("`{vname}.apply_changes()`, found `{applied_var}`"),
            });
        }
        self.lex.expect_punct('.')?;
        self.lex.expect_ident("apply_changes")?;
        self.lex.expect_punct('(')?;
        self.lex.expect_punct(')')?;
        self.lex.expect_punct(')')?;

        let source_unit =
            self.source.as_ref().map(|(d, _)| d.clone()).expect("source parsed first");
        self.blocks.push(VersionBlock { base, effective, ops, source_unit });
        Ok(())
    }
}

/// `v7` → `Some(6)`.
fn parse_version_var(var: &str) -> Option<usize> {
    let num = var.strip_prefix('v')?;
    if num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: usize = num.parse().ok()?;
    (n >= 1).then(|| n - 1)
}

fn is_target_var(var: &str) -> bool {
    matches!(var.strip_prefix('t'), Some(rest) if rest.is_empty() || rest.bytes().all(|b| b.is_ascii_digit()))
}

/// Parses the canonical text form back into an [`AmendmentProgram`].
///
/// Tolerates flexible whitespace and trailing commas in op lists, but keeps
/// the fixed variable scheme (`s`, `t…`, `v…`, `p…`). A type-correct program
/// that breaks a structural invariant is rejected with
/// [`ParseError::Invalid`].
pub fn parse_program(text: &str) -> Result<AmendmentProgram, ParseError> {
    let lex = lex(text)?;
    let mut p = Parser { lex, source: None, targets: Vec::new(), bindings: Vec::new(), blocks: Vec::new() };

    // s = db.get_version("…", Date(…))
    p.lex.expect_ident("s").map_err(|_| p.lex.err("`s = db.get_version(…)`"))?;
    p.lex.expect_punct('=')?;
    let (doc, publication) = p.get_version_rhs()?;
    p.source = Some((doc, publication));

    loop {
        match (p.lex.peek(), p.lex.peek2()) {
            (None, _) => break,
            (Some(Tok::Ident(var)), Some(Tok::Punct('='))) => {
                let var = var.clone();
                let (line, col) = p.lex.here();
                if is_target_var(&var) {
                    p.lex.next();
                    p.lex.expect_punct('=')?;
                    let (doc, at) = p.get_version_rhs()?;
                    if p.targets.iter().any(|(v, _, _)| *v == var) {
                        return Err(ParseError::Syntax {
                            line,
                            col,
                            expected: format!("a fresh target variable, `{var}` is taken"),
                        });
                    }
                    p.targets.push((var, doc, at));
                } else if let Some(idx) = parse_version_var(&var) {
                    if idx != p.blocks.len() {
                        return Err(ParseError::Syntax {
                            line,
                            col,
                            expected: format!("`v{}` (blocks are numbered in order)", p.blocks.len() + 1),
                        });
                    }
                    p.lex.next();
                    p.lex.expect_punct('=')?;
                    let (bline, bcol) = p.lex.here();
                    let base_var = p.lex.take_ident("base (`t…` or earlier `v…`)")?;
                    let base = p.resolve_base(&base_var, bline, bcol)?;
                    p.block(var, base)?;
                } else {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        expected: format!("`t…` target or `v…` block declaration, found `{var}`"),
                    });
                }
            }
            _ => return Err(p.lex.err("`t…` target or `v…` block declaration")),
        }
    }

    let (source, publication) = p.source.expect("parsed above");
    let program = AmendmentProgram { source, publication, blocks: p.blocks };
    let violations = validate(&program);
    if violations.is_empty() {
        Ok(program)
    } else {
        Err(ParseError::Invalid(violations))
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn source_id() -> DocId {
        DocId::parse("fr/loi/2022-1348/1").unwrap()
    }

    fn target_id() -> DocId {
        DocId::parse("fr/code/commerce/L723-4").unwrap()
    }

    /// A two-block program shaped like the worked consolidation example.
    fn sample_program() -> AmendmentProgram {
        let ops1 = vec![
            ChangeOp {
                action: Action::Prepend,
                source: vec!["I".into(), "1".into()],
                target: vec![Step::ParByPosition(1)],
                selector: None,
                payload: Some("I. -".into()),
            },
            ChangeOp {
                action: Action::Replace,
                source: vec!["I".into(), "2".into()],
                target: vec![Step::label("1°")],
                selector: Some(Selector::Occurrence("and".into(), 2)),
                payload: Some("or".into()),
            },
            ChangeOp {
                action: Action::Insert,
                source: vec!["I".into(), "3".into()],
                target: vec![Step::label("3°")],
                selector: Some(Selector::Word("judicial".into())),
                payload: Some("rescue,".into()),
            },
            ChangeOp {
                action: Action::Suppress,
                source: vec!["I".into(), "4".into()],
                target: vec![Step::label("4° bis")],
                selector: Some(Selector::Occurrence("were".into(), 1)),
                payload: None,
            },
            ChangeOp {
                action: Action::ReplaceParagraph,
                source: vec!["I".into(), "6".into()],
                target: vec![Step::LastPar],
                selector: None,
                payload: Some("II. - Also eligible:\n1° Persons registered;".into()),
            },
        ];
        let ops2 = vec![ChangeOp {
            action: Action::Replace,
            source: vec!["II".into()],
            target: vec![Step::label("II"), Step::label("2°"), Step::Sentence(1)],
            selector: Some(Selector::Word("trade directory".into())),
            payload: Some("national register".into()),
        }];
        AmendmentProgram {
            source: source_id(),
            publication: d(2022, 10, 25),
            blocks: vec![
                VersionBlock {
                    base: BaseSelector::Stored { doc: target_id(), at: d(2022, 10, 25) },
                    effective: d(2022, 10, 26),
                    ops: ops1,
                    source_unit: source_id(),
                },
                VersionBlock {
                    base: BaseSelector::BlockOutput(0),
                    effective: d(2023, 1, 1),
                    ops: ops2,
                    source_unit: source_id(),
                },
            ],
        }
    }

    #[test]
    fn sample_is_valid() {
        assert_eq!(validate(&sample_program()), vec![]);
    }

    #[test]
    fn prints_canonical_text() {
        let text = print_program(&sample_program());
        let expected = "\
s = db.get_version(\"fr/loi/2022-1348/1\", Date(2022, 10, 25))
t = db.get_version(\"fr/code/commerce/L723-4\", Date(2022, 10, 25))

v1 = t.new_version(Date(2022, 10, 26))
pI = s.par(\"I\")
v1.schedule_changes(s, [
    v1.prepend(pI.par(\"1\"), v1.par(1), \"I. -\"),
    v1.replace(pI.par(\"2\"), v1.par(\"1°\"), (\"and\", 2), \"or\"),
    v1.insert(pI.par(\"3\"), v1.par(\"3°\"), \"judicial\", \"rescue,\"),
    v1.suppress(pI.par(\"4\"), v1.par(\"4° bis\"), (\"were\", 1)),
    v1.replace_par(pI.par(\"6\"), v1.lastpar(), \"II. - Also eligible:\\n1° Persons registered;\")
])
v1 = db.add_version(v1.apply_changes())

v2 = v1.new_version(Date(2023, 1, 1))
pII = s.par(\"II\")
v2.schedule_changes(s, [
    v2.replace(pII, v2.par(\"II\").par(\"2°\").sen(1), \"trade directory\", \"national register\")
])
v2 = db.add_version(v2.apply_changes())
";
        assert_eq!(text, expected);
    }

    #[test]
    fn round_trips_through_text() {
        let program = sample_program();
        let text = print_program(&program);
        let back = parse_program(&text).unwrap();
        assert_eq!(back, program);
        // And printing again is byte-stable.
        assert_eq!(print_program(&back), text);
    }

    #[test]
    fn parses_with_layout_freedom() {
        let text = "s = db.get_version(\"fr/loi/2022-1348/1\", Date(2022,10,25))
            t = db.get_version(\"fr/code/commerce/L723-4\", Date(2022, 10, 25))
            v1 = t.new_version(Date(2022, 10, 26))
            pI = s.par(\"I\")
            v1.schedule_changes(s, [v1.prepend(pI.par(\"1\"), v1.par(1), \"I. -\"),])
            v1 = db.add_version(v1.apply_changes())";
        let program = parse_program(text).unwrap();
        assert_eq!(program.blocks.len(), 1);
        assert_eq!(program.blocks[0].ops.len(), 1);
    }

    #[test]
    fn syntax_errors_carry_position_and_expectation() {
        // Misspelled op name.
        let text = print_program(&sample_program()).replace("v1.prepend(", "v1.prepnd(");
        match parse_program(&text) {
            Err(ParseError::Syntax { line, expected, .. }) => {
                assert_eq!(line, 7, "error should point at the op line");
                assert!(expected.contains("prepend"), "got: {expected}");
            }
            other => panic!("expected syntax error, got {other:?}"),
        }

        // Unterminated string.
        assert!(matches!(
            parse_program("s = db.get_version(\"fr/loi"),
            Err(ParseError::Syntax { .. })
        ));

        // Invalid calendar date.
        let text = "s = db.get_version(\"fr/loi/2022-1348/1\", Date(2022, 13, 1))";
        match parse_program(text) {
            Err(ParseError::Syntax { expected, .. }) => {
                assert!(expected.contains("valid calendar date"), "got: {expected}");
            }
            other => panic!("expected syntax error, got {other:?}"),
        }

        // Unknown base variable.
        let text = "s = db.get_version(\"fr/loi/2022-1348/1\", Date(2022, 10, 25))\n\
                    v1 = q.new_version(Date(2022, 10, 26))";
        assert!(matches!(parse_program(text), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn rejects_invalid_but_well_typed_programs() {
        // An empty op list parses but violates the non-empty invariant.
        let text = "s = db.get_version(\"fr/loi/2022-1348/1\", Date(2022, 10, 25))\n\
                    t = db.get_version(\"fr/code/commerce/L723-4\", Date(2022, 10, 25))\n\
                    v1 = t.new_version(Date(2022, 10, 26))\n\
                    v1.schedule_changes(s, [])\n\
                    v1 = db.add_version(v1.apply_changes())";
        match parse_program(text) {
            Err(ParseError::Invalid(violations)) => {
                assert!(violations.contains(&Violation::EmptyOps { block: 0 }));
            }
            other => panic!("expected validation failure, got {other:?}"),
        }
    }

    #[test]
    fn validation_catches_shape_errors() {
        let mut program = sample_program();
        // Suppress with a payload.
        program.blocks[0].ops[3].payload = Some("oops".into());
        // Insert with an occurrence selector.
        program.blocks[0].ops[2].selector = Some(Selector::Occurrence("judicial".into(), 2));
        // Prepend without payload.
        program.blocks[0].ops[0].payload = None;
        let violations = validate(&program);
        assert!(violations.contains(&Violation::PayloadForbidden { block: 0, op: 3 }));
        assert!(violations.contains(&Violation::AnchorMustBeWord { block: 0, op: 2 }));
        assert!(violations
            .contains(&Violation::PayloadRequired { block: 0, op: 0, action: Action::Prepend }));
    }

    #[test]
    fn validation_catches_order_errors() {
        let mut program = sample_program();
        program.blocks[1].effective = d(2022, 10, 25); // before block 1 and its base
        let violations = validate(&program);
        assert!(violations.contains(&Violation::BlocksOutOfOrder { block: 1 }));
        assert!(violations.contains(&Violation::EffectiveNotAfterBase { block: 1 }));

        let mut program = sample_program();
        program.blocks[0].base = BaseSelector::BlockOutput(1);
        assert!(validate(&program)
            .contains(&Violation::ForwardBlockReference { block: 0, referenced: 1 }));
    }

    #[test]
    fn validation_catches_sentence_misuse() {
        let mut program = sample_program();
        // Sentence step not final.
        program.blocks[1].ops[0].target =
            vec![Step::label("II"), Step::Sentence(1), Step::label("2°")];
        assert!(validate(&program).contains(&Violation::SentenceNotFinal { block: 1, op: 0 }));

        // Prepend onto a sentence.
        let mut program = sample_program();
        program.blocks[0].ops[0].target = vec![Step::ParByPosition(1), Step::Sentence(1)];
        assert!(validate(&program).contains(&Violation::SentenceTargetNotAllowed {
            block: 0,
            op: 0,
            action: Action::Prepend
        }));

        // Zero indices.
        let mut program = sample_program();
        program.blocks[0].ops[0].target = vec![Step::ParByPosition(0)];
        program.blocks[0].ops[1].selector = Some(Selector::Occurrence("and".into(), 0));
        let violations = validate(&program);
        assert!(violations.contains(&Violation::ZeroIndex { block: 0, op: 0 }));
        assert!(violations.contains(&Violation::ZeroIndex { block: 0, op: 1 }));
    }

    #[test]
    fn shared_stored_base_prints_one_target_var() {
        let mut program = sample_program();
        program.blocks[1].base =
            BaseSelector::Stored { doc: target_id(), at: d(2022, 10, 25) };
        // Same (doc, at) pair → same `t`; still one declaration line.
        let text = print_program(&program);
        assert_eq!(text.matches("db.get_version(\"fr/code/commerce/L723-4\"").count(), 1);
        assert_eq!(text.matches("v2 = t.new_version").count(), 1);
        let back = parse_program(&text).unwrap();
        assert_eq!(back, program);
    }

    #[test]
    fn distinct_read_dates_print_distinct_target_vars() {
        let mut program = sample_program();
        program.blocks[1].base =
            BaseSelector::Stored { doc: target_id(), at: d(2022, 12, 31) };
        let text = print_program(&program);
        assert!(text.contains("t2 = db.get_version(\"fr/code/commerce/L723-4\", Date(2022, 12, 31))"));
        assert_eq!(parse_program(&text).unwrap(), program);
    }

    #[test]
    fn string_escapes_round_trip() {
        let mut program = sample_program();
        program.blocks[0].ops[0].payload =
            Some("quote \" backslash \\ newline \n tab \t done".into());
        let text = print_program(&program);
        assert_eq!(parse_program(&text).unwrap(), program);
    }
}
