//! Corpus ingestion: tokenization, vocabulary construction, document
//! encoding, grouped splitting, and pretrained-embedding alignment.
//!
//! All operations are pure functions of their inputs. Vocabulary indices
//! are assigned in lexicographic token order (after the PAD and UNK
//! specials), and split assignment hashes the group key, so the encoded
//! dataset is identical no matter how the input documents are ordered.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::numerics::{fnv1a, Matrix, Rng};

/// Token index reserved for padding. Its embedding row is pinned to zero.
pub const PAD: usize = 0;
/// Token index substituted for out-of-vocabulary tokens.
pub const UNK: usize = 1;

pub const DEFAULT_MIN_DOC_FREQ: u32 = 3;
pub const DEFAULT_MAX_LEN: usize = 2500;
pub const DEFAULT_EMBED_DIM: usize = 100;

/// One raw classification instance: free text plus its set of label codes.
///
/// `group_id` is the unit of split integrity: all documents sharing a
/// group land in the same split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawDocument {
    pub doc_id: String,
    pub group_id: String,
    pub text: String,
    pub labels: BTreeSet<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CorpusError {
    /// Every token fell below the document-frequency threshold.
    EmptyVocabulary,
    /// A document produced zero tokens and cannot be encoded.
    EmptyDocument { doc_id: String },
    /// Split fractions must be non-negative and sum to 1.
    BadFractions,
    /// A requested split received no groups.
    EmptySplit { split: &'static str },
    /// Embedding row with the wrong number of values.
    EmbeddingDimMismatch {
        token: String,
        expected: usize,
        found: usize,
    },
    /// Unparseable embedding value.
    EmbeddingParse { line: usize },
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::EmptyVocabulary => {
                write!(f, "no token met the document-frequency threshold")
            }
            CorpusError::EmptyDocument { doc_id } => {
                write!(f, "document {doc_id:?} tokenizes to zero tokens")
            }
            CorpusError::BadFractions => {
                write!(f, "split fractions must be non-negative and sum to 1")
            }
            CorpusError::EmptySplit { split } => {
                write!(f, "split {split:?} would be empty")
            }
            CorpusError::EmbeddingDimMismatch {
                token,
                expected,
                found,
            } => {
                write!(
                    f,
                    "embedding for {token:?} has {found} values, expected {expected}"
                )
            }
            CorpusError::EmbeddingParse { line } => {
                write!(f, "unparseable embedding value on line {line}")
            }
        }
    }
}

impl core::error::Error for CorpusError {}

/// Splits on Unicode whitespace, strips leading/trailing non-alphanumeric
/// characters, lowercases, and keeps only tokens containing at least one
/// alphabetic character ("250mg" survives, "500" and "7.2" do not).
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.chars().any(|c| c.is_alphabetic()) {
                Some(trimmed.to_lowercase())
            } else {
                None
            }
        })
        .collect()
}

/// Token <-> index bijection with document-frequency filtering.
///
/// Indices 0 and 1 are PAD and UNK; retained tokens follow in lexicographic
/// order, so the mapping is a deterministic function of the token set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_index: BTreeMap<String, usize>,
    index_to_token: Vec<String>,
    doc_freq: BTreeMap<String, u32>,
    min_doc_freq: u32,
}

impl Vocabulary {
    /// Counts in how many distinct training documents each token appears
    /// and retains tokens with document frequency >= `min_doc_freq`.
    pub fn build(train_docs: &[RawDocument], min_doc_freq: u32) -> Result<Self, CorpusError> {
        let mut doc_freq: BTreeMap<String, u32> = BTreeMap::new();
        for doc in train_docs {
            let uniq: BTreeSet<String> = tokenize(&doc.text).into_iter().collect();
            for token in uniq {
                *doc_freq.entry(token).or_insert(0) += 1;
            }
        }
        let retained: Vec<String> = doc_freq
            .iter()
            .filter(|(_, &df)| df >= min_doc_freq)
            .map(|(t, _)| t.clone())
            .collect();
        if retained.is_empty() {
            return Err(CorpusError::EmptyVocabulary);
        }
        let mut index_to_token = Vec::with_capacity(retained.len() + 2);
        index_to_token.push("<pad>".to_string());
        index_to_token.push("<unk>".to_string());
        index_to_token.extend(retained.iter().cloned());
        let token_to_index = index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        doc_freq.retain(|_, df| *df >= min_doc_freq);
        Ok(Vocabulary {
            token_to_index,
            index_to_token,
            doc_freq,
            min_doc_freq,
        })
    }

    /// Reassembles a vocabulary from its persisted parts.
    pub fn from_parts(
        index_to_token: Vec<String>,
        doc_freq: BTreeMap<String, u32>,
        min_doc_freq: u32,
    ) -> Self {
        let token_to_index = index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            token_to_index,
            index_to_token,
            doc_freq,
            min_doc_freq,
        }
    }

    pub fn index_of(&self, token: &str) -> usize {
        self.token_to_index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_index.contains_key(token)
    }

    pub fn token(&self, index: usize) -> &str {
        &self.index_to_token[index]
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_token.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.index_to_token
    }

    pub fn doc_freq(&self) -> &BTreeMap<String, u32> {
        &self.doc_freq
    }

    pub fn min_doc_freq(&self) -> u32 {
        self.min_doc_freq
    }

    /// Stable fingerprint over the index assignment; checkpoints refuse to
    /// load against a vocabulary with a different fingerprint.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = fnv1a(&self.min_doc_freq.to_le_bytes());
        for token in &self.index_to_token {
            h ^= fnv1a(token.as_bytes());
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelKind {
    Diagnosis,
    Procedure,
}

impl LabelKind {
    /// ICD-9 formatting convention: procedure codes have a two-digit
    /// numeric prefix, diagnosis codes a three-digit prefix optionally led
    /// by V or E. Codes matching neither pattern get no kind.
    pub fn infer(code: &str) -> Option<LabelKind> {
        let head = code.split('.').next().unwrap_or("");
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        let ve_prefixed = (head.starts_with('V') || head.starts_with('E')) && digits(&head[1..]);
        if digits(head) && head.len() == 2 {
            Some(LabelKind::Procedure)
        } else if (digits(head) && head.len() == 3) || ve_prefixed {
            Some(LabelKind::Diagnosis)
        } else {
            None
        }
    }
}

/// The ordered label universe, with optional per-code descriptions
/// (as vocabulary token ids) and diagnosis/procedure kinds.
///
/// The order is fixed at build time (lexicographic over codes) and
/// persisted; all label vectors and parameter rows index into it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSpace {
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
    descriptions: BTreeMap<String, Vec<usize>>,
    kinds: BTreeMap<String, LabelKind>,
}

impl LabelSpace {
    /// Builds the space from every label observed in `docs`, sorted.
    pub fn from_documents(docs: &[RawDocument]) -> Self {
        let codes: BTreeSet<String> = docs.iter().flat_map(|d| d.labels.iter().cloned()).collect();
        Self::from_codes(codes.into_iter().collect())
    }

    pub fn from_codes(labels: Vec<String>) -> Self {
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let kinds = labels
            .iter()
            .filter_map(|c| LabelKind::infer(c).map(|k| (c.clone(), k)))
            .collect();
        LabelSpace {
            labels,
            index,
            descriptions: BTreeMap::new(),
            kinds,
        }
    }

    /// Attaches a tokenized, vocabulary-encoded description to a code.
    /// Descriptions for codes outside the space are ignored.
    pub fn set_description(&mut self, code: &str, token_ids: Vec<usize>) {
        if self.index.contains_key(code) {
            self.descriptions.insert(code.to_string(), token_ids);
        }
    }

    pub fn set_kind(&mut self, code: &str, kind: LabelKind) {
        if self.index.contains_key(code) {
            self.kinds.insert(code.to_string(), kind);
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn codes(&self) -> &[String] {
        &self.labels
    }

    pub fn code(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn description(&self, code: &str) -> Option<&[usize]> {
        self.descriptions.get(code).map(|v| v.as_slice())
    }

    /// Descriptions aligned to label index; `None` for codes without one.
    pub fn descriptions_by_index(&self) -> Vec<Option<Vec<usize>>> {
        self.labels
            .iter()
            .map(|c| self.descriptions.get(c).cloned())
            .collect()
    }

    pub fn kind(&self, code: &str) -> Option<LabelKind> {
        self.kinds.get(code).copied()
    }

    /// Kinds aligned to label index.
    pub fn kinds_by_index(&self) -> Vec<Option<LabelKind>> {
        self.labels
            .iter()
            .map(|c| self.kinds.get(c).copied())
            .collect()
    }

    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for code in &self.labels {
            h ^= fnv1a(code.as_bytes());
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// A tokenized, index-encoded, truncated document with its binary label
/// vector over the label space.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDocument {
    pub doc_id: String,
    pub token_ids: Vec<usize>,
    pub label_vector: Vec<bool>,
}

impl EncodedDocument {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    pub fn positive_labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.label_vector
            .iter()
            .enumerate()
            .filter(|(_, &y)| y)
            .map(|(i, _)| i)
    }
}

/// Encodes one document: tokenize, map to ids (OOV -> UNK), truncate to
/// `max_len`, and project labels onto the space.
///
/// Returns the encoded document together with the number of document
/// labels that fell outside the label space (dropped with a count rather
/// than an error).
pub fn encode(
    doc: &RawDocument,
    vocab: &Vocabulary,
    space: &LabelSpace,
    max_len: usize,
) -> Result<(EncodedDocument, usize), CorpusError> {
    let tokens = tokenize(&doc.text);
    if tokens.is_empty() {
        return Err(CorpusError::EmptyDocument {
            doc_id: doc.doc_id.clone(),
        });
    }
    let token_ids: Vec<usize> = tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.index_of(t))
        .collect();
    let mut label_vector = alloc::vec![false; space.len()];
    let mut dropped = 0usize;
    for code in &doc.labels {
        match space.index_of(code) {
            Some(i) => label_vector[i] = true,
            None => dropped += 1,
        }
    }
    Ok((
        EncodedDocument {
            doc_id: doc.doc_id.clone(),
            token_ids,
            label_vector,
        },
        dropped,
    ))
}

/// Train/validation/test fractions; must be non-negative and sum to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self, CorpusError> {
        let ok = train >= 0.0
            && valid >= 0.0
            && test >= 0.0
            && (train + valid + test - 1.0).abs() < 1e-9;
        if ok {
            Ok(SplitFractions { train, valid, test })
        } else {
            Err(CorpusError::BadFractions)
        }
    }
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// Deterministic grouped split: every document of a group lands in the
/// split selected by hashing `(group_id, seed)`, independent of document
/// order. No group ever straddles two splits.
pub fn assign_split(group_id: &str, seed: u64, fractions: SplitFractions) -> Split {
    let mut h = fnv1a(group_id.as_bytes());
    h ^= seed.wrapping_mul(0x9e3779b97f4a7c15);
    // one SplitMix64-style mix so nearby seeds decorrelate
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d049bb133111eb);
    h ^= h >> 31;
    let u = (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    if u < fractions.train {
        Split::Train
    } else if u < fractions.train + fractions.valid {
        Split::Valid
    } else {
        Split::Test
    }
}

/// Partitions documents by group. Errors if any split comes out empty.
#[allow(clippy::type_complexity)]
pub fn split_by_group(
    docs: Vec<RawDocument>,
    fractions: SplitFractions,
    seed: u64,
) -> Result<(Vec<RawDocument>, Vec<RawDocument>, Vec<RawDocument>), CorpusError> {
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for doc in docs {
        match assign_split(&doc.group_id, seed, fractions) {
            Split::Train => train.push(doc),
            Split::Valid => valid.push(doc),
            Split::Test => test.push(doc),
        }
    }
    if train.is_empty() {
        return Err(CorpusError::EmptySplit { split: "train" });
    }
    if valid.is_empty() {
        return Err(CorpusError::EmptySplit { split: "valid" });
    }
    if test.is_empty() {
        return Err(CorpusError::EmptySplit { split: "test" });
    }
    Ok((train, valid, test))
}

/// The encoded dataset: one vector of documents per split.
#[derive(Clone, Debug)]
pub struct EncodedCorpus {
    pub train: Vec<EncodedDocument>,
    pub valid: Vec<EncodedDocument>,
    pub test: Vec<EncodedDocument>,
}

impl EncodedCorpus {
    /// Encodes all three splits against one vocabulary and label space.
    /// Returns the corpus and the total count of document labels that
    /// fell outside the label space.
    pub fn encode_splits(
        train: &[RawDocument],
        valid: &[RawDocument],
        test: &[RawDocument],
        vocab: &Vocabulary,
        space: &LabelSpace,
        max_len: usize,
    ) -> Result<(EncodedCorpus, usize), CorpusError> {
        let mut dropped = 0usize;
        let mut encode_all = |docs: &[RawDocument]| -> Result<Vec<EncodedDocument>, CorpusError> {
            docs.iter()
                .map(|doc| {
                    let (enc, d) = encode(doc, vocab, space, max_len)?;
                    dropped += d;
                    Ok(enc)
                })
                .collect()
        };
        let train = encode_all(train)?;
        let valid = encode_all(valid)?;
        let test = encode_all(test)?;
        Ok((EncodedCorpus { train, valid, test }, dropped))
    }
}

/// |V| x d_e embedding matrix aligned to vocabulary indices.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub matrix: Matrix,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    /// Random table with rows drawn from Uniform(-0.5/d_e, 0.5/d_e) and a
    /// zero PAD row.
    pub fn random(vocab_size: usize, dim: usize, rng: &mut Rng) -> Self {
        let half = 0.5 / dim as f64;
        let mut matrix = Matrix::from_fn(vocab_size, dim, |_, _| rng.uniform(-half, half));
        matrix.row_mut(PAD).fill(0.0);
        EmbeddingTable { matrix }
    }
}

/// Parses the word-per-line text format `token v1 ... v_de`, aligning rows
/// to vocabulary indices. An optional `<count> <dim>` header line is
/// tolerated and skipped. Vocabulary tokens missing from the text are
/// initialized from Uniform(-0.5/d_e, 0.5/d_e); the PAD row is zero.
pub fn parse_embeddings_text(
    text: &str,
    vocab: &Vocabulary,
    dim: usize,
    rng: &mut Rng,
) -> Result<EmbeddingTable, CorpusError> {
    let mut by_token: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        // a "<count> <dim>" header: first line, exactly two integer fields
        if line_no == 0 {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() == 2 && fields.iter().all(|f| f.parse::<u64>().is_ok()) {
                continue;
            }
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line has a first field");
        let values: Vec<f64> = parts
            .map(|v| v.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CorpusError::EmbeddingParse { line: line_no + 1 })?;
        if values.len() != dim {
            return Err(CorpusError::EmbeddingDimMismatch {
                token: token.to_string(),
                expected: dim,
                found: values.len(),
            });
        }
        by_token.insert(token.to_string(), values);
    }
    let half = 0.5 / dim as f64;
    let mut matrix = Matrix::zeros(vocab.len(), dim);
    for i in 0..vocab.len() {
        if i == PAD {
            continue; // stays zero
        }
        let row = matrix.row_mut(i);
        match by_token.get(vocab.token(i)) {
            Some(values) => row.copy_from_slice(values),
            None => {
                for x in row.iter_mut() {
                    *x = rng.uniform(-half, half);
                }
            }
        }
    }
    Ok(EmbeddingTable { matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn doc(id: &str, group: &str, text: &str, labels: &[&str]) -> RawDocument {
        RawDocument {
            doc_id: id.to_string(),
            group_id: group.to_string(),
            text: text.to_string(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn tokenize_drops_nonalphabetic_tokens() {
        assert_eq!(
            tokenize("Gave 500 of 250mg dose"),
            vec!["gave", "of", "250mg", "dose"]
        );
    }

    #[test]
    fn tokenize_empty_input() {
        assert_eq!(tokenize(""), Vec::<String>::new());
    }

    #[test]
    fn tokenize_strips_punctuation_and_filters() {
        assert_eq!(tokenize("A1c 7.2 %"), vec!["a1c"]);
        assert_eq!(tokenize("(fever), BP=120/80."), vec!["fever", "bp=120/80"]);
    }

    #[test]
    fn tokenize_is_idempotent() {
        let texts = [
            "Gave 500 of 250mg dose!",
            "A1c 7.2 % (stable)",
            "x-ray, re-done...",
        ];
        for t in texts {
            let once = tokenize(t);
            let again = tokenize(&once.join(" "));
            assert_eq!(once, again);
        }
    }

    #[test]
    fn vocabulary_respects_doc_freq_threshold() {
        let docs = vec![
            doc("1", "a", "fever and chills", &[]),
            doc("2", "b", "fever cough", &[]),
            doc("3", "c", "fever zebra", &[]),
        ];
        let vocab = Vocabulary::build(&docs, 3).unwrap();
        assert!(vocab.contains("fever"));
        assert!(!vocab.contains("zebra"));
        assert_eq!(vocab.index_of("zebra"), UNK);
        assert_eq!(vocab.doc_freq().get("fever"), Some(&3));
    }

    #[test]
    fn vocabulary_min_freq_one_keeps_everything() {
        let docs = vec![doc("1", "a", "alpha beta gamma", &[])];
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        for t in ["alpha", "beta", "gamma"] {
            assert!(vocab.contains(t));
        }
    }

    #[test]
    fn vocabulary_indices_are_lexicographic() {
        let docs = vec![doc("1", "a", "ab aa", &[])];
        let vocab = Vocabulary::build(&docs, 1).unwrap();
        assert!(vocab.index_of("aa") < vocab.index_of("ab"));
        assert_eq!(vocab.index_of("aa"), 2); // after PAD, UNK
    }

    #[test]
    fn vocabulary_build_is_order_independent() {
        let mut docs = vec![
            doc("1", "a", "one two three", &[]),
            doc("2", "b", "two three four", &[]),
            doc("3", "c", "three four one", &[]),
        ];
        let forward = Vocabulary::build(&docs, 2).unwrap();
        docs.reverse();
        let backward = Vocabulary::build(&docs, 2).unwrap();
        assert_eq!(forward, backward);
        assert_eq!(forward.fingerprint(), backward.fingerprint());
    }

    #[test]
    fn vocabulary_errors_when_everything_is_filtered() {
        let docs = vec![doc("1", "a", "only once each", &[])];
        assert_eq!(
            Vocabulary::build(&docs, 2),
            Err(CorpusError::EmptyVocabulary)
        );
    }

    #[test]
    fn encode_truncates_and_maps_oov() {
        let train = vec![doc("1", "a", "word word2 word", &[])];
        let vocab = Vocabulary::build(&train, 1).unwrap();
        let space = LabelSpace::from_codes(vec!["L1".into(), "L2".into()]);
        let long_text = core::iter::repeat_n("word", 3000)
            .collect::<Vec<_>>()
            .join(" ");
        let long = doc("big", "g", &long_text, &["L2"]);
        let (enc, dropped) = encode(&long, &vocab, &space, 2500).unwrap();
        assert_eq!(enc.len(), 2500);
        assert_eq!(dropped, 0);
        assert_eq!(enc.label_vector, vec![false, true]);

        let oov = doc("o", "g", "word unseen", &[]);
        let (enc, _) = encode(&oov, &vocab, &space, 2500).unwrap();
        assert_eq!(enc.token_ids[1], UNK);
        assert!(enc.label_vector.iter().all(|&y| !y));
    }

    #[test]
    fn encode_counts_labels_outside_space() {
        let train = vec![doc("1", "a", "word here", &[])];
        let vocab = Vocabulary::build(&train, 1).unwrap();
        let space = LabelSpace::from_codes(vec!["KNOWN".into()]);
        let d = doc("x", "g", "word here", &["KNOWN", "MYSTERY"]);
        let (enc, dropped) = encode(&d, &vocab, &space, 10).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(enc.label_vector, vec![true]);
    }

    #[test]
    fn encode_rejects_empty_documents() {
        let train = vec![doc("1", "a", "word", &[])];
        let vocab = Vocabulary::build(&train, 1).unwrap();
        let space = LabelSpace::from_codes(vec![]);
        let empty = doc("e", "g", "12 34 %%", &[]);
        assert!(matches!(
            encode(&empty, &vocab, &space, 10),
            Err(CorpusError::EmptyDocument { .. })
        ));
    }

    #[test]
    fn encode_decode_round_trip_without_oov() {
        let train = vec![doc("1", "a", "alpha beta gamma delta", &[])];
        let vocab = Vocabulary::build(&train, 1).unwrap();
        let space = LabelSpace::from_codes(vec![]);
        let (enc, _) = encode(&train[0], &vocab, &space, 100).unwrap();
        let decoded: Vec<&str> = enc.token_ids.iter().map(|&i| vocab.token(i)).collect();
        assert_eq!(decoded, vec!["alpha", "beta", "gamma", "delta"]);
    }

    #[test]
    fn groups_never_straddle_splits() {
        let mut docs = Vec::new();
        for g in 0..40 {
            for d in 0..3 {
                docs.push(doc(
                    &alloc::format!("{g}-{d}"),
                    &alloc::format!("g{g}"),
                    "text",
                    &[],
                ));
            }
        }
        let fr = SplitFractions::new(0.5, 0.25, 0.25).unwrap();
        let (train, valid, test) = split_by_group(docs, fr, 13).unwrap();
        let ids = |xs: &[RawDocument]| -> BTreeSet<String> {
            xs.iter().map(|d| d.group_id.clone()).collect()
        };
        let (a, b, c) = (ids(&train), ids(&valid), ids(&test));
        assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        // and each group's documents are together
        for set in [&train, &valid, &test] {
            let groups = ids(set);
            for g in groups {
                let n = set.iter().filter(|d| d.group_id == g).count();
                assert_eq!(n, 3);
            }
        }
    }

    #[test]
    fn split_is_deterministic() {
        let make = || {
            (0..30)
                .map(|g| doc(&alloc::format!("{g}"), &alloc::format!("g{g}"), "t", &[]))
                .collect::<Vec<_>>()
        };
        let fr = SplitFractions::default();
        let a = split_by_group(make(), fr, 5).unwrap();
        let b = split_by_group(make(), fr, 5).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2, b.2);
    }

    #[test]
    fn split_sizes_track_fractions() {
        let docs: Vec<RawDocument> = (0..100)
            .map(|g| doc(&alloc::format!("{g}"), &alloc::format!("g{g}"), "t", &[]))
            .collect();
        let fr = SplitFractions::new(0.8, 0.1, 0.1).unwrap();
        let (train, valid, test) = split_by_group(docs, fr, 7).unwrap();
        assert!(
            (train.len() as i64 - 80).abs() <= 10,
            "train {}",
            train.len()
        );
        assert!(
            (valid.len() as i64 - 10).abs() <= 10,
            "valid {}",
            valid.len()
        );
        assert!((test.len() as i64 - 10).abs() <= 10, "test {}", test.len());
    }

    #[test]
    fn split_rejects_bad_fractions() {
        assert!(SplitFractions::new(0.9, 0.2, 0.1).is_err());
        assert!(SplitFractions::new(-0.1, 0.6, 0.5).is_err());
    }

    #[test]
    fn split_errors_when_a_split_is_empty() {
        let docs = vec![doc("1", "only", "t", &[])];
        let fr = SplitFractions::default();
        assert!(matches!(
            split_by_group(docs, fr, 1),
            Err(CorpusError::EmptySplit { .. })
        ));
    }

    #[test]
    fn encode_splits_covers_all_three_and_counts_drops() {
        let train = vec![
            doc("1", "a", "alpha beta", &["K"]),
            doc("2", "b", "beta gamma", &[]),
        ];
        let valid = vec![doc("3", "c", "alpha", &["K", "MYSTERY"])];
        let test = vec![doc("4", "d", "gamma", &[])];
        let vocab = Vocabulary::build(&train, 1).unwrap();
        let space = LabelSpace::from_codes(vec!["K".into()]);
        let (corpus, dropped) =
            EncodedCorpus::encode_splits(&train, &valid, &test, &vocab, &space, 100).unwrap();
        assert_eq!(
            (corpus.train.len(), corpus.valid.len(), corpus.test.len()),
            (2, 1, 1)
        );
        assert_eq!(dropped, 1, "MYSTERY falls outside the label space");
        assert!(corpus.valid[0].label_vector[0]);
    }

    #[test]
    fn label_kind_inference() {
        assert_eq!(LabelKind::infer("38.93"), Some(LabelKind::Procedure));
        assert_eq!(LabelKind::infer("401.9"), Some(LabelKind::Diagnosis));
        assert_eq!(LabelKind::infer("V45.81"), Some(LabelKind::Diagnosis));
        assert_eq!(LabelKind::infer("E934.1"), Some(LabelKind::Diagnosis));
        assert_eq!(LabelKind::infer("L07"), None);
    }

    #[test]
    fn label_space_is_ordered_and_indexed() {
        let docs = vec![doc("1", "a", "t", &["B", "A"]), doc("2", "b", "t", &["C"])];
        let space = LabelSpace::from_documents(&docs);
        assert_eq!(space.codes(), &["A", "B", "C"]);
        assert_eq!(space.index_of("B"), Some(1));
        assert_eq!(space.index_of("Z"), None);
    }

    fn tiny_vocab() -> Vocabulary {
        let docs = vec![doc("1", "a", "apple banana cherry", &[])];
        Vocabulary::build(&docs, 1).unwrap()
    }

    #[test]
    fn embeddings_align_to_vocabulary() {
        let vocab = tiny_vocab();
        let text = "apple 1 2\nbanana 3 4\ncherry 5 6\n";
        let mut rng = Rng::new(1);
        let table = parse_embeddings_text(text, &vocab, 2, &mut rng).unwrap();
        assert_eq!(table.matrix.row(vocab.index_of("apple")), &[1.0, 2.0]);
        assert_eq!(table.matrix.row(vocab.index_of("cherry")), &[5.0, 6.0]);
        assert_eq!(table.matrix.row(PAD), &[0.0, 0.0]);
    }

    #[test]
    fn embeddings_header_line_is_skipped() {
        let vocab = tiny_vocab();
        let text = "3 2\napple 1 2\n";
        let mut rng = Rng::new(1);
        let table = parse_embeddings_text(text, &vocab, 2, &mut rng).unwrap();
        assert_eq!(table.matrix.row(vocab.index_of("apple")), &[1.0, 2.0]);
        assert!(!vocab.contains("3"));
    }

    #[test]
    fn empty_file_randomizes_all_but_pad() {
        let vocab = tiny_vocab();
        let mut rng = Rng::new(2);
        let table = parse_embeddings_text("", &vocab, 4, &mut rng).unwrap();
        assert_eq!(table.matrix.row(PAD), &[0.0; 4]);
        for i in 1..vocab.len() {
            assert!(table.matrix.row(i).iter().any(|&x| x != 0.0));
            assert!(table.matrix.row(i).iter().all(|&x| x.abs() <= 0.5 / 4.0));
        }
    }

    #[test]
    fn inconsistent_dimension_is_an_error() {
        let vocab = tiny_vocab();
        let text = "apple 1 2\nbanana 3\n";
        let mut rng = Rng::new(1);
        assert!(matches!(
            parse_embeddings_text(text, &vocab, 2, &mut rng),
            Err(CorpusError::EmbeddingDimMismatch { .. })
        ));
    }

    #[test]
    fn unparseable_value_is_an_error() {
        let vocab = tiny_vocab();
        let text = "apple 1 nope\n";
        let mut rng = Rng::new(1);
        assert!(matches!(
            parse_embeddings_text(text, &vocab, 2, &mut rng),
            Err(CorpusError::EmbeddingParse { line: 1 })
        ));
    }
}
