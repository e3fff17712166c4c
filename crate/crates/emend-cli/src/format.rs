//! The on-disk corpus: one JSON file holding every document's version
//! timeline.
//!
//! ```json
//! {
//!   "documents": [
//!     {
//!       "id": "fr/code/commerce/L723-4",
//!       "versions": [
//!         {
//!           "date": "2021-10-13",
//!           "body": [{"label": "1°", "text": "…", "children": []}],
//!           "provenance": "fr/loi/2021-900/3/20211012"
//!         }
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! Loading re-validates everything through [`VersionStore::add_version`], so
//! a hand-edited file cannot smuggle in a malformed tree or a duplicate date.

// [`FormatError`] carries full ids and paths for error messages; every
// function here is a once-per-command IO entry point, so the wide `Result`
// costs nothing on this cold path.
#![allow(clippy::result_large_err)]

use chrono::NaiveDate;
use emend_core::corpus::{DocId, DocumentVersion, ParagraphNode, VersionStore};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: bad date `{date}` (expected YYYY-MM-DD)")]
    Date { path: String, date: String },
    #[error("{path}: {source}")]
    Corpus {
        path: String,
        #[source]
        source: emend_core::CorpusError,
    },
}

// --- serde surface ---------------------------------------------------------

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct CorpusFile {
    #[serde(default)]
    pub documents: Vec<DocumentEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DocumentEntry {
    pub id: String,
    #[serde(default)]
    pub versions: Vec<VersionEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VersionEntry {
    /// Effective date, ISO `YYYY-MM-DD`.
    pub date: String,
    pub body: Vec<NodeEntry>,
    /// Dated id of the act that produced this version, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NodeEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<NodeEntry>,
}

impl From<&ParagraphNode> for NodeEntry {
    fn from(node: &ParagraphNode) -> Self {
        NodeEntry {
            label: node.label.clone(),
            text: node.text.clone(),
            children: node.children.iter().map(NodeEntry::from).collect(),
        }
    }
}

impl From<&NodeEntry> for ParagraphNode {
    fn from(entry: &NodeEntry) -> Self {
        ParagraphNode {
            label: entry.label.clone(),
            text: entry.text.clone(),
            children: entry.children.iter().map(ParagraphNode::from).collect(),
        }
    }
}

// --- conversions ------------------------------------------------------------

fn context(path: &Path) -> String {
    path.display().to_string()
}

/// Builds a validated store from the portable representation.
pub fn store_from_file(file: &CorpusFile, path: &Path) -> Result<VersionStore, FormatError> {
    let mut store = VersionStore::default();
    for doc in &file.documents {
        let id = DocId::parse(&doc.id)
            .map_err(|source| FormatError::Corpus { path: context(path), source })?;
        for v in &doc.versions {
            let date: NaiveDate = v.date.parse().map_err(|_| FormatError::Date {
                path: context(path),
                date: v.date.clone(),
            })?;
            let provenance = v
                .provenance
                .as_deref()
                .map(DocId::parse)
                .transpose()
                .map_err(|source| FormatError::Corpus { path: context(path), source })?;
            let version = DocumentVersion {
                doc: id.clone(),
                effective_date: date,
                body: v.body.iter().map(ParagraphNode::from).collect(),
                provenance,
            };
            store
                .add_version(version)
                .map_err(|source| FormatError::Corpus { path: context(path), source })?;
        }
    }
    Ok(store)
}

/// Portable representation of a store, documents and versions in store
/// (sorted) order.
pub fn file_from_store(store: &VersionStore) -> CorpusFile {
    let documents = store
        .documents()
        .map(|doc| DocumentEntry {
            id: doc.to_string(),
            versions: store
                .versions(doc)
                .expect("listed document exists")
                .iter()
                .map(|v| VersionEntry {
                    date: v.effective_date.to_string(),
                    body: v.body.iter().map(NodeEntry::from).collect(),
                    provenance: v.provenance.as_ref().map(|p| p.to_string()),
                })
                .collect(),
        })
        .collect();
    CorpusFile { documents }
}

// --- file IO -----------------------------------------------------------------

pub fn load_store(path: &Path) -> Result<VersionStore, FormatError> {
    let data = fs::read_to_string(path)
        .map_err(|source| FormatError::Io { path: context(path), source })?;
    let file: CorpusFile = serde_json::from_str(&data)
        .map_err(|source| FormatError::Json { path: context(path), source })?;
    store_from_file(&file, path)
}

/// Saves atomically: the store is serialized to a sibling temp file which
/// then replaces `path`, so a crash mid-write never truncates the corpus.
pub fn save_store(path: &Path, store: &VersionStore) -> Result<(), FormatError> {
    let file = file_from_store(store);
    let mut data = serde_json::to_string_pretty(&file)
        .map_err(|source| FormatError::Json { path: context(path), source })?;
    data.push('\n');
    let io_err = |source| FormatError::Io { path: context(path), source };
    let tmp = path.with_extension("json.tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(data.as_bytes()).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

// ---------------------------------------------------------------------------
