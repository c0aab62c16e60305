//! CodeBLEU and the per-pair component record.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataflow::{dataflow_match, extract_dataflow, DataflowMatchConfig};
use crate::lexer::{lex, LexConfig, LexError, Token, TokenKind, TokenStream};
use crate::syntax::{parse, subtree_multiset, ParseError, SyntaxTree};
use crate::textmetrics::{bleu, bleu_with_weights, meteor, rouge_l, MetricConfig, MetricError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Flag {
    EmptyDataflowFallback,
    ParseFallback,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Flag::EmptyDataflowFallback => "EmptyDataflowFallback",
            Flag::ParseFallback => "ParseFallback",
        }
    }
}

/// What to do when either side fails to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParseMode {
    #[default]
    Strict,
    /// Score from the two n-gram components only and flag the pair.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax: f64,
    pub dataflow: f64,
    pub codebleu: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub cosine: Option<f64>,
    pub flags: BTreeSet<Flag>,
}

impl ComponentScores {
    /// Builds a record from the four CodeBLEU components, computing the
    /// combined score under `weights`.
    pub fn from_components(
        components: [f64; 4],
        weights: &[f64; 4],
        meteor: f64,
        rouge_l: f64,
    ) -> Self {
        let mut scores = Self {
            ngram: components[0],
            weighted_ngram: components[1],
            syntax: components[2],
            dataflow: components[3],
            codebleu: 0.0,
            meteor,
            rouge_l,
            cosine: None,
            flags: BTreeSet::new(),
        };
        scores.codebleu = scores.recompute_codebleu(weights);
        scores
    }

    pub fn components(&self) -> [f64; 4] {
        [self.ngram, self.weighted_ngram, self.syntax, self.dataflow]
    }

    /// The mixture actually applied, which differs from `weights` only when
    /// the parse fallback was taken.
    pub fn effective_weights(&self, weights: &[f64; 4]) -> [f64; 4] {
        if self.flags.contains(&Flag::ParseFallback) {
            fallback_weights(weights)
        } else {
            *weights
        }
    }

    pub fn recompute_codebleu(&self, weights: &[f64; 4]) -> f64 {
        let w = self.effective_weights(weights);
        let c = self.components();
        (w[0] * c[0] + w[1] * c[1] + w[2] * c[2] + w[3] * c[3]).clamp(0.0, 1.0)
    }
}

/// Moves the syntax and dataflow weight onto the n-gram components in
/// proportion to their own weights.
pub fn fallback_weights(weights: &[f64; 4]) -> [f64; 4] {
    let lexical = weights[0] + weights[1];
    let moved = weights[2] + weights[3];
    if lexical > 0.0 {
        [
            weights[0] + moved * weights[0] / lexical,
            weights[1] + moved * weights[1] / lexical,
            0.0,
            0.0,
        ]
    } else {
        [0.5, 0.5, 0.0, 0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Original,
    Refactored,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Original => "original",
            Side::Refactored => "refactored",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodeBleuError {
    #[error("{side} source: {source}")]
    Lex { side: Side, source: LexError },
    #[error("{side} source: {source}")]
    Parse { side: Side, source: ParseError },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub fn ngram_match(
    candidate: &TokenStream,
    reference: &TokenStream,
    cfg: &MetricConfig,
) -> Result<f64, MetricError> {
    bleu(candidate, reference, cfg)
}

pub fn weighted_ngram_match(
    candidate: &TokenStream,
    reference: &TokenStream,
    cfg: &MetricConfig,
) -> Result<f64, MetricError> {
    let token_weight = |t: &Token| {
        if t.kind == TokenKind::Keyword {
            cfg.keyword_weight
        } else {
            cfg.other_token_weight
        }
    };
    bleu_with_weights(candidate, reference, cfg, &|gram| {
        gram.iter().map(token_weight).sum()
    })
}

pub fn syntax_match(candidate: &SyntaxTree, reference: &SyntaxTree) -> f64 {
    let cand = subtree_multiset(candidate);
    let refs = subtree_multiset(reference);
    match (cand.is_empty(), refs.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => cand.intersection_size(&refs) as f64 / cand.len() as f64,
    }
}

/// Scores a refactored test (`candidate_src`) against its original
/// (`reference_src`): all four CodeBLEU components, CodeBLEU itself, METEOR
/// and ROUGE-L. Cosine is left empty.
pub fn codebleu_score(
    candidate_src: &str,
    reference_src: &str,
    cfg: &MetricConfig,
    lex_cfg: &LexConfig,
    mode: ParseMode,
) -> Result<ComponentScores, CodeBleuError> {
    let cand = lex(candidate_src, lex_cfg).map_err(|source| CodeBleuError::Lex {
        side: Side::Refactored,
        source,
    })?;
    let refs = lex(reference_src, lex_cfg).map_err(|source| CodeBleuError::Lex {
        side: Side::Original,
        source,
    })?;
    score_streams(&cand, &refs, cfg, mode)
}

pub fn score_streams(
    cand: &TokenStream,
    refs: &TokenStream,
    cfg: &MetricConfig,
    mode: ParseMode,
) -> Result<ComponentScores, CodeBleuError> {
    let ngram = ngram_match(cand, refs, cfg)?;
    let weighted = weighted_ngram_match(cand, refs, cfg)?;
    let meteor = meteor(cand, refs, cfg);
    let rouge = rouge_l(cand, refs, cfg);

    let parsed = parse(cand)
        .map_err(|source| CodeBleuError::Parse {
            side: Side::Refactored,
            source,
        })
        .and_then(|c| {
            parse(refs)
                .map(|r| (c, r))
                .map_err(|source| CodeBleuError::Parse {
                    side: Side::Original,
                    source,
                })
        });

    let mut flags = BTreeSet::new();
    let (syntax, dataflow) = match parsed {
        Ok((cand_tree, ref_tree)) => {
            let df_cfg = DataflowMatchConfig {
                collapse_relations: cfg.collapse_dataflow_relations,
                empty_candidate_score: cfg.empty_dataflow_score,
            };
            let df = dataflow_match(
                &extract_dataflow(&cand_tree),
                &extract_dataflow(&ref_tree),
                &df_cfg,
            );
            if df.empty_candidate_fallback {
                flags.insert(Flag::EmptyDataflowFallback);
            }
            (syntax_match(&cand_tree, &ref_tree), df.score)
        }
        Err(err) if mode == ParseMode::Strict => return Err(err),
        Err(_) => {
            flags.insert(Flag::ParseFallback);
            (0.0, 0.0)
        }
    };

    let mut scores = ComponentScores::from_components(
        [ngram, weighted, 0.0, 0.0],
        &cfg.codebleu_weights,
        meteor,
        rouge,
    );
    scores.syntax = syntax;
    scores.dataflow = dataflow;
    scores.flags = flags;
    scores.codebleu = scores.recompute_codebleu(&cfg.codebleu_weights);
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textmetrics::smoothed_precisions;
    use proptest::prelude::*;

    fn tree(src: &str) -> SyntaxTree {
        parse(&lex(src, &LexConfig::default()).unwrap()).unwrap()
    }

    #[test]
    fn keyword_weighting_example() {
        let cfg = MetricConfig::default();
        let cand = lex("return x", &LexConfig::default()).unwrap();
        let refs = lex("return y", &LexConfig::default()).unwrap();
        let w = |g: &[Token]| {
            g.iter()
                .map(|t| {
                    if t.kind == TokenKind::Keyword {
                        1.0
                    } else {
                        0.2
                    }
                })
                .sum()
        };
        let p = smoothed_precisions(&cand.tokens, &refs.tokens, &cfg, &w);
        assert!((p[0].unwrap() - 1.0 / 1.2).abs() < 1e-12);
        let unweighted = smoothed_precisions(&cand.tokens, &refs.tokens, &cfg, &|_| 1.0);
        assert_eq!(unweighted[0], Some(0.5));
        assert!(
            weighted_ngram_match(&cand, &refs, &cfg).unwrap()
                > ngram_match(&cand, &refs, &cfg).unwrap()
        );
    }

    #[test]
    fn weighted_identity_and_disjoint() {
        let cfg = MetricConfig::default();
        let s = lex("if (a) { return b; }", &LexConfig::default()).unwrap();
        assert_eq!(weighted_ngram_match(&s, &s, &cfg).unwrap(), 1.0);
        let other = lex("x y z", &LexConfig::default()).unwrap();
        let none = lex("p q r", &LexConfig::default()).unwrap();
        assert_eq!(weighted_ngram_match(&other, &none, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn syntax_match_cases() {
        let a = tree("void f() { int a = 1; g(a); }");
        let b = tree("void f() { int zz = 7; g(zz); }");
        assert_eq!(syntax_match(&a, &a), 1.0);
        assert_eq!(syntax_match(&a, &b), 1.0);
        let empty = tree("");
        assert_eq!(syntax_match(&empty, &empty), 1.0);
        assert_eq!(syntax_match(&a, &empty), 0.0);
        assert_eq!(syntax_match(&empty, &a), 0.0);
    }

    #[test]
    fn syntax_match_is_a_candidate_ratio() {
        // Candidate multiset: LocalVarDecl, its Type and declarator, plus
        // the root. Only the root differs from the reference's.
        let cand = tree("int a = 1;");
        let refs = tree("int a = 1; int b = 2;");
        assert_eq!(subtree_multiset(&cand).len(), 4);
        assert_eq!(syntax_match(&cand, &refs), 0.75);
    }

    #[test]
    fn table_seven_mean_identity() {
        let s = ComponentScores::from_components(
            [0.4612, 0.5431, 0.8221, 0.6854],
            &[0.25; 4],
            0.0,
            0.0,
        );
        assert!((s.codebleu - 0.62795).abs() < 1e-12);
        assert!((s.codebleu - 0.6280).abs() <= 0.0005);
    }

    #[test]
    fn trivial_combinations() {
        let one = ComponentScores::from_components([1.0; 4], &[0.25; 4], 1.0, 1.0);
        assert_eq!(one.codebleu, 1.0);
        let zero = ComponentScores::from_components([0.0; 4], &[0.25; 4], 0.0, 0.0);
        assert_eq!(zero.codebleu, 0.0);
    }

    #[test]
    fn strict_mode_reports_the_failing_side() {
        let cfg = MetricConfig::default();
        let err = codebleu_score(
            "int x = ;",
            "int x = 1;",
            &cfg,
            &LexConfig::default(),
            ParseMode::Strict,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            CodeBleuError::Parse {
                side: Side::Refactored,
                ..
            }
        ));
    }

    #[test]
    fn lenient_mode_redistributes() {
        let cfg = MetricConfig::default();
        let s = codebleu_score(
            "int x = ;",
            "int x = 1;",
            &cfg,
            &LexConfig::default(),
            ParseMode::Lenient,
        )
        .unwrap();
        assert!(s.flags.contains(&Flag::ParseFallback));
        assert_eq!((s.syntax, s.dataflow), (0.0, 0.0));
        assert_eq!(fallback_weights(&[0.25; 4]), [0.5, 0.5, 0.0, 0.0]);
        let expected = 0.5 * s.ngram + 0.5 * s.weighted_ngram;
        assert!((s.codebleu - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_candidate_is_an_error() {
        let cfg = MetricConfig::default();
        let err = codebleu_score(
            "",
            "int x = 1;",
            &cfg,
            &LexConfig::default(),
            ParseMode::Strict,
        )
        .unwrap_err();
        assert_eq!(err, CodeBleuError::Metric(MetricError::EmptyCandidate));
    }

    #[test]
    fn empty_dataflow_is_flagged() {
        let cfg = MetricConfig::default();
        let s = codebleu_score(
            "int x;",
            "int x = 1; int y = x;",
            &cfg,
            &LexConfig::default(),
            ParseMode::Strict,
        )
        .unwrap();
        assert!(s.flags.contains(&Flag::EmptyDataflowFallback));
        assert_eq!(s.dataflow, 1.0);
    }

    fn unit() -> impl Strategy<Value = f64> {
        0.0f64..=1.0
    }

    proptest! {
        #[test]
        fn codebleu_is_recomputable(c in prop::array::uniform4(unit()), raw in prop::array::uniform4(0.01f64..1.0)) {
            let total: f64 = raw.iter().sum();
            let w = raw.map(|x| x / total);
            let s = ComponentScores::from_components(c, &w, 0.5, 0.5);
            let dot: f64 = (0..4).map(|i| w[i] * c[i]).sum();
            prop_assert!((s.codebleu - dot).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&s.codebleu));
        }

        #[test]
        fn codebleu_is_monotone(c in prop::array::uniform4(0.0f64..0.9), idx in 0usize..4, delta in 0.01f64..0.1) {
            let w = [0.25; 4];
            let base = ComponentScores::from_components(c, &w, 0.0, 0.0);
            let mut bumped = c;
            bumped[idx] += delta;
            let up = ComponentScores::from_components(bumped, &w, 0.0, 0.0);
            prop_assert!(up.codebleu > base.codebleu);
        }
    }
}
