//! On-disk formats: the JSONL corpus, the code-description CSV, the text
//! embedding format, the preprocessed dataset directory, the binary
//! checkpoint container, evaluation reports, review sheets, and run
//! manifests.

pub mod checkpoint;
pub mod corpus_file;
pub mod dataset;
pub mod descriptions;
pub mod embeddings;
pub mod manifest;
pub mod report;
pub mod sheets;

use std::path::Path;

use crate::Result;

/// FNV-1a hex fingerprint of a file's bytes; recorded in run manifests.
pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(format!("{:016x}", caml_core::numerics::fnv1a(&bytes)))
}

/// Writes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
