//! File formats and report rendering behind the `emend` binary.
//!
//! The pipeline itself lives in `emend-core`; this crate adds what a
//! command-line workflow needs around it: a JSON corpus file that persists a
//! [`emend_core::VersionStore`] between invocations, and renderers that turn
//! coverage and execution reports into terminal or JSON output.

pub mod format;
pub mod report;
