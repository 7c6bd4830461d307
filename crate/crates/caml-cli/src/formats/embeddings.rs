//! Loader for the word-per-line embedding text format.

use std::path::Path;

use caml_core::corpus::{parse_embeddings_text, EmbeddingTable, Vocabulary};
use caml_core::numerics::Rng;

use crate::{CliError, Result};

/// Reads `token v1 ... v_de` lines (optional `<count> <dim>` header) and
/// aligns rows to the vocabulary; tokens missing from the file are
/// initialized from the seeded stream.
pub fn load_embeddings(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    rng: &mut Rng,
) -> Result<EmbeddingTable> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read embeddings {}: {e}", path.display())))?;
    parse_embeddings_text(&text, vocab, dim, rng)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}
