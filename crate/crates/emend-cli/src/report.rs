//! Terminal and JSON renderings of compile and run results.
//!
//! Human output goes through the `*_human` functions; `--json` swaps in the
//! `*_json` ones, whose shapes are stable for scripting.

use emend_core::compiler::CoverageReport;
use emend_core::corpus::{DocumentVersion, ParagraphNode};
use emend_core::engine::{ChangeKind, DiffEntry};
use emend_core::ExecutionReport;
use serde_json::{json, Value};
use std::fmt::Write;

// --- coverage ----------------------------------------------------------------

pub fn coverage_human(report: &CoverageReport) -> String {
    let mut out = format!(
        "compiled {}/{} instructions ({:.1}%)\n",
        report.compiled,
        report.total,
        report.coverage() * 100.0
    );
    for residual in &report.residuals {
        let _ = writeln!(out, "residual at {}: {}", residual.path, residual.text);
    }
    out
}

pub fn coverage_json(report: &CoverageReport) -> Value {
    json!({
        "total": report.total,
        "compiled": report.compiled,
        "coverage": report.coverage(),
        "residuals": report
            .residuals
            .iter()
            .map(|r| json!({"path": r.path, "text": r.text}))
            .collect::<Vec<_>>(),
    })
}

// --- execution ----------------------------------------------------------------

pub fn execution_human(report: &ExecutionReport) -> String {
    let mut out = String::new();
    for created in &report.created {
        let _ = writeln!(out, "created {created}");
    }
    for failure in &report.failures {
        let at = match failure.op {
            Some(op) => format!("block {}, op {}", failure.block + 1, op + 1),
            None => format!("block {}", failure.block + 1),
        };
        let _ = writeln!(out, "failed at {at}: {}", failure.error);
    }
    let _ = writeln!(
        out,
        "{} ops applied; {}",
        report.applied,
        if report.committed { "committed" } else { "rolled back" }
    );
    out
}

pub fn execution_json(report: &ExecutionReport) -> Value {
    json!({
        "committed": report.committed,
        "applied": report.applied,
        "created": report.created.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "failures": report
            .failures
            .iter()
            .map(|f| json!({
                "block": f.block,
                "op": f.op,
                "error": f.error.to_string(),
            }))
            .collect::<Vec<_>>(),
    })
}

// --- document rendering ---------------------------------------------------------

/// Plain-text view of a version: the paragraph tree with two-space indents,
/// labels ahead of their text.
pub fn version_human(version: &DocumentVersion) -> String {
    let mut out = format!("{} (in force from {})\n", version.doc, version.effective_date);
    if let Some(p) = &version.provenance {
        let _ = writeln!(out, "produced by {p}");
    }
    render_nodes(&version.body, 0, &mut out);
    out
}

fn render_nodes(nodes: &[ParagraphNode], depth: usize, out: &mut String) {
    for node in nodes {
        let indent = "  ".repeat(depth);
        let line = match (&node.label, &node.text) {
            (Some(l), Some(t)) => format!("{indent}{l} {t}"),
            (Some(l), None) => format!("{indent}{l}"),
            (None, Some(t)) => format!("{indent}{t}"),
            (None, None) => continue,
        };
        // Multi-line paragraph text keeps the node's indent on every line.
        for (i, part) in line.split('\n').enumerate() {
            if i == 0 {
                out.push_str(part);
            } else {
                let _ = write!(out, "{indent}{part}");
            }
            out.push('\n');
        }
        render_nodes(&node.children, depth + 1, out);
    }
}

fn nodes_json(nodes: &[ParagraphNode]) -> Value {
    Value::Array(
        nodes
            .iter()
            .map(|n| {
                json!({
                    "label": n.label,
                    "text": n.text,
                    "children": nodes_json(&n.children),
                })
            })
            .collect(),
    )
}

pub fn version_json(version: &DocumentVersion) -> Value {
    json!({
        "id": version.doc.to_string(),
        "date": version.effective_date.to_string(),
        "provenance": version.provenance.as_ref().map(|p| p.to_string()),
        "body": nodes_json(&version.body),
    })
}

// --- timeline -------------------------------------------------------------------

pub fn timeline_human(versions: &[DocumentVersion]) -> String {
    let mut out = String::new();
    for v in versions {
        match &v.provenance {
            Some(p) => {
                let _ = writeln!(out, "{}  (produced by {p})", v.effective_date);
            }
            None => {
                let _ = writeln!(out, "{}", v.effective_date);
            }
        }
    }
    out
}

pub fn timeline_json(versions: &[DocumentVersion]) -> Value {
    Value::Array(
        versions
            .iter()
            .map(|v| {
                json!({
                    "date": v.effective_date.to_string(),
                    "provenance": v.provenance.as_ref().map(|p| p.to_string()),
                })
            })
            .collect(),
    )
}

// --- diff ------------------------------------------------------------------------

fn change_name(kind: ChangeKind) -> &'static str {
    match kind {
        ChangeKind::TextChanged => "text changed",
        ChangeKind::Replaced => "replaced",
        ChangeKind::Added => "added",
        ChangeKind::Removed => "removed",
    }
}

pub fn diff_human(entries: &[DiffEntry]) -> String {
    if entries.is_empty() {
        return "no changes\n".into();
    }
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{}: {}", e.path.join(" > "), change_name(e.change));
    }
    out
}

pub fn diff_json(entries: &[DiffEntry]) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|e| {
                json!({
                    "path": e.path,
                    "change": match e.change {
                        ChangeKind::TextChanged => "text_changed",
                        ChangeKind::Replaced => "replaced",
                        ChangeKind::Added => "added",
                        ChangeKind::Removed => "removed",
                    },
                })
            })
            .collect(),
    )
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use emend_core::compiler::Residual;
    use emend_core::corpus::DocId;

    #[test]
    fn coverage_rendering() {
        let report = CoverageReport {
            total: 27,
            compiled: 25,
            residuals: vec![Residual { path: "I/8°".into(), text: "Renumber the rest.".into() }],
        };
        let human = coverage_human(&report);
        assert!(human.contains("25/27"));
        assert!(human.contains("92.6%"));
        assert!(human.contains("residual at I/8°: Renumber the rest."));

        let js = coverage_json(&report);
        assert_eq!(js["total"], 27);
        assert_eq!(js["compiled"], 25);
        assert_eq!(js["residuals"][0]["path"], "I/8°");
        let cov = js["coverage"].as_f64().unwrap();
        assert!((cov - 25.0 / 27.0).abs() < 1e-9);
    }

    #[test]
    fn version_rendering_indents_children() {
        let v = DocumentVersion {
            doc: DocId::parse("fr/code/commerce/L723-4").unwrap(),
            effective_date: "2021-10-13".parse().unwrap(),
            body: vec![ParagraphNode {
                label: Some("II.".into()),
                text: Some("Top.".into()),
                children: vec![ParagraphNode::labelled("1°", "Child.")],
            }],
            provenance: None,
        };
        let text = version_human(&v);
        assert!(text.contains("fr/code/commerce/L723-4 (in force from 2021-10-13)"));
        assert!(text.contains("II. Top.\n  1° Child.\n"));

        let js = version_json(&v);
        assert_eq!(js["body"][0]["children"][0]["label"], "1°");
    }

    #[test]
    fn diff_rendering() {
        let entries = vec![
            DiffEntry { path: vec!["II.".into(), "2°".into()], change: ChangeKind::TextChanged },
            DiffEntry { path: vec!["#3".into()], change: ChangeKind::Added },
        ];
        let human = diff_human(&entries);
        assert!(human.contains("II. > 2°: text changed"));
        assert!(human.contains("#3: added"));
        assert_eq!(diff_json(&entries)[0]["change"], "text_changed");
        assert_eq!(diff_human(&[]), "no changes\n");
    }
}
