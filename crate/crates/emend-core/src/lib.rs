//! Consolidation engine for amendatory legal texts.
//!
//! Amending acts do not restate the law they modify; they describe edits in
//! prose ("In 1°, the second occurrence of the word: `and` is replaced by the
//! word: `or`"). This crate turns such instructions into an explicit,
//! reviewable change program and executes that program against a store of
//! dated document versions:
//!
//! 1. [`corpus`] — documents as ordered paragraph trees, perennial
//!    identifiers, and a temporal [`VersionStore`] answering "what was in
//!    force on date D?";
//! 2. [`locator`] — navigation inside one version (labelled paragraphs,
//!    positional paragraphs, sentences, word occurrences);
//! 3. [`refdetect`] — detection of cross-references ("article L723-4 of the
//!    Commercial Code") and entry-into-force clauses in running text;
//! 4. [`compiler`] — the multi-pass instruction compiler producing a change
//!    program plus a coverage report for the instructions it could not parse;
//! 5. [`ir`] — the change-program representation itself, with a canonical
//!    text form that round-trips through [`ir::parse_program`];
//! 6. [`engine`] — the interpreter that applies a program to the store,
//!    transactionally, creating new dated versions.
//!
//! The crate is `no_std` (with `alloc`) so the pipeline can be embedded in
//! services or tooling; file formats and the command-line front end live in
//! the companion `emend-cli` crate.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod compiler;
pub mod corpus;
pub mod engine;
pub mod ir;
pub mod locator;
pub mod patterns;
pub mod refdetect;

pub use compiler::{CompileError, Compiler, CoverageReport, SourceUnit};
pub use corpus::{CorpusError, DocId, DocumentVersion, DraftVersion, ParagraphNode, VersionRef, VersionStore};
pub use engine::{diff_versions, execute, DiffEntry, ExecuteError, ExecutionReport};
pub use ir::{parse_program, print_program, AmendmentProgram, ChangeOp, VersionBlock};
pub use patterns::PatternSet;
