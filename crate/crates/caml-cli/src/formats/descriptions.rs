//! Code descriptions: CSV with header `code,description`. Codes contain no
//! commas; the description is everything after the first comma, optionally
//! double-quoted (with `""` escaping).

use std::path::Path;

use crate::{CliError, Result};

pub fn read_descriptions(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read descriptions {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            let lowered = line.to_lowercase();
            if lowered.starts_with("code,") {
                continue;
            }
            return Err(CliError::data(format!(
                "{}: expected header \"code,description\", found {line:?}",
                path.display()
            )));
        }
        let (code, rest) = line.split_once(',').ok_or_else(|| {
            CliError::data(format!("{}:{}: missing comma", path.display(), i + 1))
        })?;
        out.push((code.trim().to_string(), unquote(rest.trim())));
    }
    Ok(out)
}

fn unquote(field: &str) -> String {
    if field.len() >= 2 && field.starts_with('"') && field.ends_with('"') {
        field[1..field.len() - 1].replace("\"\"", "\"")
    } else {
        field.to_string()
    }
}

pub fn write_descriptions(path: &Path, rows: &[(String, String)]) -> Result<()> {
    let mut out = String::from("code,description\n");
    for (code, desc) in rows {
        if desc.contains(',') || desc.contains('"') {
            out.push_str(&format!("{code},\"{}\"\n", desc.replace('"', "\"\"")));
        } else {
            out.push_str(&format!("{code},{desc}\n"));
        }
    }
    super::write_atomic(path, out.as_bytes())
}
