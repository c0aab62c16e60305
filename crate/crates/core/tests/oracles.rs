mod common;

use common::{lcs_oracle, meteor_oracle, stream};
use ctses_core::lexer::TokenKind;
use ctses_core::textmetrics::{align, lcs_length, meteor, rouge_l, MetricConfig};
use proptest::prelude::*;

const VOCAB: [(TokenKind, &str); 8] = [
    (TokenKind::Identifier, "a"),
    (TokenKind::Identifier, "b"),
    (TokenKind::Identifier, "fooBar"),
    (TokenKind::Identifier, "foo_bar"),
    (TokenKind::Identifier, "BarFoo"),
    (TokenKind::Identifier, "c"),
    (TokenKind::Keyword, "int"),
    (TokenKind::Punctuation, ";"),
];

fn tokens(max: usize) -> impl Strategy<Value = Vec<(TokenKind, &'static str)>> {
    prop::collection::vec(prop::sample::select(VOCAB.to_vec()), 0..=max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lcs_matches_full_table(a in prop::collection::vec(0u8..5, 0..=30), b in prop::collection::vec(0u8..5, 0..=30)) {
        let sa: Vec<String> = a.iter().map(u8::to_string).collect();
        let sb: Vec<String> = b.iter().map(u8::to_string).collect();
        let ra: Vec<&str> = sa.iter().map(String::as_str).collect();
        let rb: Vec<&str> = sb.iter().map(String::as_str).collect();
        prop_assert_eq!(lcs_length(&ra, &rb), lcs_oracle(&ra, &rb));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn meteor_alignment_is_chunk_minimal(c in tokens(10), r in tokens(10)) {
        let cand = stream(&c);
        let refs = stream(&r);
        let got = align(&cand.tokens, &refs.tokens, true, 200_000);
        let want = meteor_oracle(&cand.tokens, &refs.tokens);
        prop_assert!(got.optimal);
        prop_assert_eq!(got.len(), want.matches.len());
        prop_assert_eq!(got.chunk_count, want.chunks);
        prop_assert_eq!(got.matches, want.matches);
    }

    #[test]
    fn metric_bounds(c in tokens(12), r in tokens(12)) {
        let cfg = MetricConfig::default();
        let cand = stream(&c);
        let refs = stream(&r);
        let m = meteor(&cand, &refs, &cfg);
        let l = rouge_l(&cand, &refs, &cfg);
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert!((0.0..=1.0).contains(&l));
    }
}

#[test]
fn meteor_oracle_on_ten_token_streams() {
    // Streams at the exhaustive limit, built so several alignments tie.
    let c = stream(&[
        (TokenKind::Identifier, "a"),
        (TokenKind::Identifier, "b"),
        (TokenKind::Identifier, "a"),
        (TokenKind::Identifier, "fooBar"),
        (TokenKind::Identifier, "c"),
        (TokenKind::Identifier, "a"),
        (TokenKind::Identifier, "b"),
        (TokenKind::Identifier, "c"),
        (TokenKind::Keyword, "int"),
        (TokenKind::Identifier, "a"),
    ]);
    let r = stream(&[
        (TokenKind::Identifier, "c"),
        (TokenKind::Identifier, "a"),
        (TokenKind::Identifier, "b"),
        (TokenKind::Identifier, "foo_bar"),
        (TokenKind::Identifier, "a"),
        (TokenKind::Keyword, "int"),
        (TokenKind::Identifier, "a"),
        (TokenKind::Identifier, "b"),
        (TokenKind::Identifier, "c"),
        (TokenKind::Identifier, "BarFoo"),
    ]);
    let got = align(&c.tokens, &r.tokens, true, 200_000);
    let want = meteor_oracle(&c.tokens, &r.tokens);
    assert!(got.optimal);
    assert_eq!((got.matches, got.chunk_count), (want.matches, want.chunks));
}

#[test]
fn fixture_alignments_are_proven_optimal() {
    let cfg = MetricConfig::default();
    let lex_cfg = ctses_core::lexer::LexConfig::default();
    let records =
        ctses_core::corpus::load_manifest(&common::fixture("corpus/manifest.jsonl")).unwrap();
    let mut pairs: Vec<(std::path::PathBuf, std::path::PathBuf)> = records
        .into_iter()
        .map(|r| (r.original_path, r.refactored_path))
        .collect();
    pairs.push((
        common::fixture("listings/original.java"),
        common::fixture("listings/refactored.java"),
    ));
    for (orig, refd) in pairs {
        let read = |p: &std::path::Path| {
            ctses_core::lexer::lex(&std::fs::read_to_string(p).unwrap(), &lex_cfg).unwrap()
        };
        let (o, r) = (read(&orig), read(&refd));
        let al = align(&r.tokens, &o.tokens, true, cfg.meteor_search_budget);
        assert!(al.optimal, "{} not proven optimal", refd.display());
    }
}
