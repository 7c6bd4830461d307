//! The raw corpus format: UTF-8 JSON lines, one document per line, with
//! fields `doc_id`, `group_id`, `text`, and `labels`.

use std::collections::BTreeSet;
use std::path::Path;

use caml_core::corpus::RawDocument;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Deserialize, Serialize)]
struct DocumentLine {
    doc_id: String,
    group_id: String,
    text: String,
    labels: BTreeSet<String>,
}

pub fn read_corpus(path: &Path) -> Result<Vec<RawDocument>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read corpus {}: {e}", path.display())))?;
    let mut docs = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: DocumentLine = serde_json::from_str(line).map_err(|e| {
            CliError::data(format!(
                "{}:{}: malformed document: {e}",
                path.display(),
                i + 1
            ))
        })?;
        if !seen.insert(parsed.doc_id.clone()) {
            return Err(CliError::data(format!(
                "{}:{}: duplicate doc_id {:?}",
                path.display(),
                i + 1,
                parsed.doc_id
            )));
        }
        docs.push(RawDocument {
            doc_id: parsed.doc_id,
            group_id: parsed.group_id,
            text: parsed.text,
            labels: parsed.labels,
        });
    }
    if docs.is_empty() {
        return Err(CliError::data(format!(
            "corpus {} contains no documents",
            path.display()
        )));
    }
    Ok(docs)
}

/// Writes documents back out in the same format (used by tests and tools).
pub fn write_corpus(path: &Path, docs: &[RawDocument]) -> Result<()> {
    let mut out = String::new();
    for d in docs {
        let line = DocumentLine {
            doc_id: d.doc_id.clone(),
            group_id: d.group_id.clone(),
            text: d.text.clone(),
            labels: d.labels.clone(),
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    super::write_atomic(path, out.as_bytes())
}
