use super::*;
use crate::corpus::{RawDocument, Vocabulary};
use crate::model::{ForwardTrace, ModelKind, PoolingTrace};
use alloc::string::ToString;
use alloc::vec;

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(|s| s.to_string()).collect()
}

fn attention_trace(alpha_row: &[f64], n_tokens: usize) -> ForwardTrace {
    ForwardTrace {
        kind: ModelKind::Caml,
        token_ids: vec![2; n_tokens],
        embedded: Matrix::zeros(n_tokens, 1),
        dropout: None,
        hidden: Matrix::zeros(n_tokens, 1),
        pooling: PoolingTrace::Attention {
            alpha: Matrix::from_rows(&[alpha_row]),
            label_vectors: Matrix::zeros(1, 1),
        },
        logits: vec![0.0],
        yhat: vec![0.5],
    }
}

fn maxpool_trace(argmax: Vec<usize>, n_tokens: usize) -> ForwardTrace {
    let d_c = argmax.len();
    ForwardTrace {
        kind: ModelKind::MaxPoolCnn,
        token_ids: vec![2; n_tokens],
        embedded: Matrix::zeros(n_tokens, 1),
        dropout: None,
        hidden: Matrix::zeros(n_tokens, d_c),
        pooling: PoolingTrace::MaxPool {
            pooled: vec![0.0; d_c],
            argmax,
        },
        logits: vec![0.0],
        yhat: vec![0.5],
    }
}

#[test]
fn attention_one_hot_anchors_centered_gram() {
    let mut alpha = vec![0.0; 12];
    alpha[7] = 1.0;
    let trace = attention_trace(&alpha, 12);
    let tokens = words("t0 t1 t2 t3 t4 t5 t6 t7 t8 t9 t10 t11");
    let s = explain_attention(&trace, 0, 4, &tokens);
    assert_eq!(s.start, 6);
    assert_eq!(s.gram, words("t6 t7 t8 t9"));
    assert_eq!(s.score, 1.0);
    assert_eq!(s.context_start, 1);
    assert_eq!(s.context.len(), 4 + 5 + 2); // 5 left, gram, 2 right of an N=12 doc
}

#[test]
fn attention_uniform_ties_to_position_zero() {
    let alpha = vec![0.25; 4];
    let trace = attention_trace(&alpha, 4);
    let tokens = words("a b c d");
    let s = explain_attention(&trace, 0, 4, &tokens);
    assert_eq!(s.start, 0);
    assert_eq!(s.gram, tokens);
}

#[test]
fn attention_gram_clips_to_short_documents() {
    let alpha = vec![0.5, 0.5];
    let trace = attention_trace(&alpha, 2);
    let tokens = words("only two");
    let s = explain_attention(&trace, 0, 4, &tokens);
    assert_eq!(s.start, 0);
    assert_eq!(s.gram, tokens, "gram shrinks to the document");
}

#[test]
fn snippet_gram_is_verbatim_subsequence() {
    let mut alpha = vec![0.0; 30];
    alpha[17] = 1.0;
    let trace = attention_trace(&alpha, 30);
    let tokens: Vec<String> = (0..30).map(|i| alloc::format!("tok{i}")).collect();
    let s = explain_attention(&trace, 0, 4, &tokens);
    assert_eq!(&tokens[s.gram_range()], &s.gram[..]);
    assert_eq!(
        &tokens[s.context_start..s.context_start + s.context.len()],
        &s.context[..]
    );
}

#[test]
fn maxpool_importance_sums_final_layer_weights() {
    // d_c=2, both dimensions pool position 3: importance(3) = .2 + .5
    let trace = maxpool_trace(vec![3, 3], 8);
    let tokens = words("w0 w1 w2 w3 w4 w5 w6 w7");
    let beta = Matrix::from_rows(&[&[0.2, 0.5]]);
    let s = explain_maxpool(&trace, 0, &beta, 4, &tokens);
    assert!((s.score - 0.7).abs() < 1e-12);
    assert_eq!(s.start, 2); // anchored on position 3
    assert!(s.gram_range().contains(&3));
}

#[test]
fn maxpool_importance_with_negative_weights() {
    // a=[1,2], beta=[-1, .1]: position 2 (score .1) beats position 1 (-1)
    let trace = maxpool_trace(vec![1, 2], 6);
    let tokens = words("w0 w1 w2 w3 w4 w5");
    let beta = Matrix::from_rows(&[&[-1.0, 0.1]]);
    let s = explain_maxpool(&trace, 0, &beta, 4, &tokens);
    assert!((s.score - 0.1).abs() < 1e-12);
    assert!(s.gram_range().contains(&2));
}

#[test]
fn maxpool_single_dimension_concentrates() {
    let trace = maxpool_trace(vec![5], 9);
    let tokens = words("w0 w1 w2 w3 w4 w5 w6 w7 w8");
    let beta = Matrix::from_rows(&[&[0.9]]);
    let s = explain_maxpool(&trace, 0, &beta, 4, &tokens);
    assert!(s.gram_range().contains(&5));
}

fn lr_fixture(weights: &[(usize, f64)], vocab_words: &str) -> (LrParams, Vocabulary) {
    let doc = RawDocument {
        doc_id: "v".into(),
        group_id: "g".into(),
        text: vocab_words.into(),
        labels: Default::default(),
    };
    let vocab = Vocabulary::build(&[doc], 1).unwrap();
    let mut params = LrParams {
        weights: Matrix::zeros(1, vocab.len()),
        bias: vec![0.0],
        trained: vec![true],
    };
    for &(idx, w) in weights {
        params.weights[(0, idx)] = w;
    }
    (params, vocab)
}

#[test]
fn lr_zero_weights_pick_first_window() {
    let (params, vocab) = lr_fixture(&[], "alpha beta gamma delta epsilon");
    let tokens = words("alpha beta gamma delta epsilon");
    let s = explain_lr(&tokens, 0, &params, &vocab, 4);
    assert_eq!(s.start, 0);
    assert_eq!(s.score, 0.0);
}

#[test]
fn lr_hot_token_earliest_covering_window() {
    let tokens = words("alpha beta gamma delta epsilon zeta eta");
    let (params, vocab) = lr_fixture(&[], "alpha beta gamma delta epsilon zeta eta");
    let mut params = params;
    let p = 4; // "epsilon"
    params.weights[(0, vocab.index_of("epsilon"))] = 5.0;
    let s = explain_lr(&tokens, 0, &params, &vocab, 4);
    assert_eq!(s.start, p - 4 + 1, "earliest window covering the hot token");
    assert_eq!(s.score, 5.0);
}

#[test]
fn lr_repeated_token_window_sum() {
    let tokens = words("word word word word word");
    let (params, vocab) = lr_fixture(&[], "word");
    let mut params = params;
    params.weights[(0, vocab.index_of("word"))] = 1.0;
    let s = explain_lr(&tokens, 0, &params, &vocab, 4);
    assert_eq!(s.score, 4.0);
    assert_eq!(s.start, 0, "tie resolves to the first window");
}

#[test]
fn lr_window_score_is_additive() {
    let text = "one two three four five six seven eight nine ten";
    let tokens = words(text);
    let (mut params, vocab) = lr_fixture(&[], text);
    for (i, t) in tokens.iter().enumerate() {
        params.weights[(0, vocab.index_of(t))] = (i as f64 * 0.713).sin();
    }
    let k = 4;
    let s = explain_lr(&tokens, 0, &params, &vocab, k);
    for start in 0..=tokens.len() - k {
        let sum: f64 = tokens[start..start + k]
            .iter()
            .map(|t| params.weight(0, vocab.index_of(t)))
            .sum();
        assert!(s.score >= sum - 1e-12);
        if start == s.start {
            assert!((s.score - sum).abs() < 1e-12);
        }
    }
}

fn idf_over(notes: &[&str], descs: &[&str]) -> IdfTable {
    let mut idf = IdfTable::new();
    for n in notes {
        idf.add_document(&words(n));
    }
    for d in descs {
        idf.add_document(&words(d));
    }
    idf
}

#[test]
fn cosine_verbatim_description_term_wins() {
    let doc = "patient stable overnight aneurysm of visceral artery repaired well";
    let tokens = words(doc);
    let desc = words("aneurysm visceral artery");
    let idf = idf_over(
        &[doc, "unrelated filler note"],
        &["aneurysm visceral artery"],
    );
    let s = explain_cosine(&tokens, 0, &desc, &idf, 4).unwrap();
    assert!(s.gram.contains(&"aneurysm".to_string()));
    assert!(s.score > 0.0);
}

#[test]
fn cosine_no_overlap_is_absent() {
    let doc = "completely unrelated words here";
    let tokens = words(doc);
    let desc = words("aneurysm visceral artery");
    let idf = idf_over(&[doc], &["aneurysm visceral artery"]);
    assert_eq!(explain_cosine(&tokens, 0, &desc, &idf, 4), None);
}

#[test]
fn cosine_tie_picks_first_occurrence() {
    // the trigger bigram appears twice, in identical lexical contexts
    let doc = "fever chills pad pad pad pad fever chills pad pad";
    let tokens = words(doc);
    let desc = words("fever chills");
    let idf = idf_over(&[doc], &["fever chills"]);
    let s = explain_cosine(&tokens, 0, &desc, &idf, 4).unwrap();
    assert_eq!(s.start, 0);
}

#[test]
fn cosine_invariant_to_duplicated_description() {
    let doc = "alpha beta gamma delta epsilon zeta";
    let tokens = words(doc);
    let idf = idf_over(&[doc], &["gamma delta"]);
    let once = explain_cosine(&tokens, 0, &words("gamma delta"), &idf, 3).unwrap();
    let twice = explain_cosine(&tokens, 0, &words("gamma delta gamma delta"), &idf, 3).unwrap();
    assert_eq!(once.start, twice.start);
    assert!((once.score - twice.score).abs() < 1e-12);
}

#[test]
fn cosine_matches_stemmed_variants() {
    // "embolization" in the note, "embolize" in the description:
    // both stem to "embol"
    let doc = "coil embolization of the artery performed";
    let tokens = words(doc);
    let desc = words("embolize artery");
    let idf = idf_over(&[doc], &["embolize artery"]);
    let s = explain_cosine(&tokens, 0, &desc, &idf, 4).unwrap();
    assert!(s.gram.contains(&"embolization".to_string()));
}

fn snippet_fixture(method: ExplainMethod, start: usize) -> Snippet {
    Snippet {
        method,
        label_index: 0,
        start,
        gram: words("a b c d"),
        context_start: start,
        context: words("a b c d e"),
        score: 0.5,
    }
}

#[test]
fn review_sheet_anonymizes_and_keys_every_snippet() {
    let snippets = vec![
        snippet_fixture(ExplainMethod::Attention, 0),
        snippet_fixture(ExplainMethod::MaxPoolImportance, 2),
        snippet_fixture(ExplainMethod::LrWeights, 4),
        snippet_fixture(ExplainMethod::CosineSim, 6),
    ];
    let (sheet, key) = build_review_sheet(
        "doc-1",
        "934.1",
        Some("Foreign body in main bronchus"),
        &snippets,
        9,
    )
    .unwrap();
    assert_eq!(sheet.entries.len(), 4);
    assert_eq!(key.assignments.len(), 4);
    let mut methods: Vec<ExplainMethod> = key.assignments.iter().map(|(_, m)| *m).collect();
    methods.sort();
    assert_eq!(
        methods,
        vec![
            ExplainMethod::Attention,
            ExplainMethod::MaxPoolImportance,
            ExplainMethod::LrWeights,
            ExplainMethod::CosineSim,
        ]
    );
    // sheet carries no method information
    for e in &sheet.entries {
        assert!(e.entry_id >= 1 && e.entry_id <= 4);
    }
}

#[test]
fn review_sheet_shuffle_is_seeded() {
    let snippets = vec![
        snippet_fixture(ExplainMethod::Attention, 0),
        snippet_fixture(ExplainMethod::LrWeights, 2),
        snippet_fixture(ExplainMethod::CosineSim, 4),
    ];
    let (_, key_a) = build_review_sheet("d", "c", None, &snippets, 42).unwrap();
    let (_, key_b) = build_review_sheet("d", "c", None, &snippets, 42).unwrap();
    assert_eq!(key_a, key_b);
}

#[test]
fn review_sheet_requires_two_methods() {
    let one = vec![snippet_fixture(ExplainMethod::Attention, 0)];
    assert_eq!(
        build_review_sheet("d", "c", None, &one, 1),
        Err(ExplainError::TooFewSnippets { got: 1 })
    );
}
