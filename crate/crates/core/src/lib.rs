//! Composite similarity scoring for refactored unit tests.
//!
//! A refactored Java test (the candidate) is compared against its original
//! (the reference) with CodeBLEU, METEOR and ROUGE-L, and the three are mixed
//! into one weighted score with an acceptance gate.

pub mod codebleu;
pub mod corpus;
pub mod ctses;
pub mod dataflow;
pub mod lexer;
pub mod multiset;
pub mod syntax;
pub mod textmetrics;

pub use codebleu::{codebleu_score, ComponentScores, Flag, ParseMode};
pub use ctses::{ctses_score, evaluate, ThresholdConfig, Verdict, Warning, WeightProfile};
pub use lexer::{lex, LexConfig, TokenStream};
pub use textmetrics::MetricConfig;
