//! Review-sheet rendering: anonymized Markdown and JSON sheets, plus the
//! separate blind key mapping sheet entries back to methods.

use std::path::Path;

use caml_core::explain::{BlindKey, ReviewSheet};
use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Serialize, Deserialize)]
struct SheetDto {
    doc_id: String,
    code: String,
    code_description: Option<String>,
    entries: Vec<EntryDto>,
}

#[derive(Serialize, Deserialize)]
struct EntryDto {
    entry_id: usize,
    gram: Vec<String>,
    context: Vec<String>,
    gram_offset: usize,
}

#[derive(Serialize, Deserialize)]
pub struct KeyFileDto {
    /// sheet file stem -> (entry_id -> method name)
    pub sheets: std::collections::BTreeMap<String, std::collections::BTreeMap<String, String>>,
}

/// Markdown with the gram bolded inside its context, one section per
/// anonymous entry. No method names anywhere.
pub fn render_markdown(sheet: &ReviewSheet) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {} - {}\n\n", sheet.code, sheet.doc_id));
    if let Some(desc) = &sheet.code_description {
        out.push_str(&format!("Description: {desc}\n\n"));
    }
    for entry in &sheet.entries {
        out.push_str(&format!("## Snippet {}\n\n", entry.entry_id));
        let mut words = Vec::with_capacity(entry.context.len());
        for (i, w) in entry.context.iter().enumerate() {
            let in_gram = i >= entry.gram_offset && i < entry.gram_offset + entry.gram.len();
            if in_gram {
                words.push(format!("**{w}**"));
            } else {
                words.push(w.clone());
            }
        }
        out.push_str(&format!("...{}...\n\n", words.join(" ")));
    }
    out
}

pub fn write_sheet(dir: &Path, stem: &str, sheet: &ReviewSheet) -> Result<()> {
    let dto = SheetDto {
        doc_id: sheet.doc_id.clone(),
        code: sheet.code.clone(),
        code_description: sheet.code_description.clone(),
        entries: sheet
            .entries
            .iter()
            .map(|e| EntryDto {
                entry_id: e.entry_id,
                gram: e.gram.clone(),
                context: e.context.clone(),
                gram_offset: e.gram_offset,
            })
            .collect(),
    };
    super::write_atomic(
        &dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(&dto)?.as_bytes(),
    )?;
    super::write_atomic(
        &dir.join(format!("{stem}.md")),
        render_markdown(sheet).as_bytes(),
    )
}

/// Writes the single blind-key file covering all sheets of a run.
pub fn write_blind_key(dir: &Path, keys: &[(String, BlindKey)]) -> Result<()> {
    let mut sheets = std::collections::BTreeMap::new();
    for (stem, key) in keys {
        let mut map = std::collections::BTreeMap::new();
        for (entry_id, method) in &key.assignments {
            map.insert(entry_id.to_string(), method.name().to_string());
        }
        sheets.insert(stem.clone(), map);
    }
    let dto = KeyFileDto { sheets };
    super::write_atomic(
        &dir.join("blind_key.json"),
        serde_json::to_string_pretty(&dto)?.as_bytes(),
    )
}
