//! Token-sequence metrics: BLEU-style modified n-gram precision, METEOR,
//! ROUGE-L and cosine similarity over precomputed vectors.
//!
//! All metrics take the refactored test as `candidate` and the original as
//! `reference`. None of them is symmetric.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexer::{is_keyword, split_subtokens, Token, TokenKind, TokenStream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("candidate token stream is empty")]
    EmptyCandidate,
    #[error("vector dimensions differ ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("invalid metric configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Smoothing {
    /// `(0 + 1) / (total + 1)` for orders n >= 2 with no matches.
    #[default]
    AddOneNumeratorDenominator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub max_n: usize,
    pub bleu_component_weights: Vec<f64>,
    pub meteor_alpha: f64,
    pub meteor_beta: f64,
    pub meteor_gamma: f64,
    pub meteor_subtoken_matching: bool,
    /// Node budget for the exact METEOR alignment search.
    pub meteor_search_budget: u64,
    pub rouge_beta: f64,
    pub smoothing: Smoothing,
    /// Mixture of (n-gram, weighted n-gram, syntax, dataflow) in CodeBLEU.
    pub codebleu_weights: [f64; 4],
    pub keyword_weight: f64,
    pub other_token_weight: f64,
    pub collapse_dataflow_relations: bool,
    pub empty_dataflow_score: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            max_n: 4,
            bleu_component_weights: vec![0.25; 4],
            meteor_alpha: 0.9,
            meteor_beta: 3.0,
            meteor_gamma: 0.5,
            meteor_subtoken_matching: true,
            meteor_search_budget: 1_000_000,
            rouge_beta: 1.0,
            smoothing: Smoothing::default(),
            codebleu_weights: [0.25; 4],
            keyword_weight: 1.0,
            other_token_weight: 0.2,
            collapse_dataflow_relations: false,
            empty_dataflow_score: 1.0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        let bad = |msg: String| Err(MetricError::InvalidConfig(msg));
        if self.max_n == 0 {
            return bad("max_n must be at least 1".into());
        }
        if self.bleu_component_weights.len() != self.max_n {
            return bad(format!(
                "bleu_component_weights has {} entries, expected max_n = {}",
                self.bleu_component_weights.len(),
                self.max_n
            ));
        }
        if self
            .bleu_component_weights
            .iter()
            .any(|w| w.is_nan() || *w < 0.0)
        {
            return bad("bleu_component_weights must be nonnegative".into());
        }
        let sum: f64 = self.bleu_component_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("bleu_component_weights sum to {sum}, expected 1"));
        }
        if !(self.meteor_alpha > 0.0 && self.meteor_alpha < 1.0) {
            return bad("meteor_alpha must lie in (0, 1)".into());
        }
        if self.meteor_beta.is_nan() || self.meteor_beta <= 0.0 {
            return bad("meteor_beta must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.meteor_gamma) {
            return bad("meteor_gamma must lie in [0, 1]".into());
        }
        if self.rouge_beta.is_nan() || self.rouge_beta <= 0.0 {
            return bad("rouge_beta must be positive".into());
        }
        if self.codebleu_weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return bad("codebleu_weights must be nonnegative".into());
        }
        let sum: f64 = self.codebleu_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("codebleu_weights sum to {sum}, expected 1"));
        }
        if !(self.keyword_weight >= 0.0 && self.other_token_weight >= 0.0) {
            return bad("token weights must be nonnegative".into());
        }
        if !(0.0..=1.0).contains(&self.empty_dataflow_score) {
            return bad("empty_dataflow_score must lie in [0, 1]".into());
        }
        Ok(())
    }
}

// ---- n-gram precision -------------------------------------------------------

fn ngram_counts(tokens: &[Token], n: usize) -> HashMap<Vec<&str>, Vec<usize>> {
    let mut counts: HashMap<Vec<&str>, Vec<usize>> = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for (start, window) in tokens.windows(n).enumerate() {
        let key = window.iter().map(|t| t.text.as_str()).collect();
        counts.entry(key).or_default().push(start);
    }
    counts
}

/// Clipped n-gram matches and total candidate n-grams.
pub fn ngram_precision(
    candidate: &TokenStream,
    reference: &TokenStream,
    n: usize,
) -> (usize, usize) {
    let total = (candidate.len() + 1).saturating_sub(n);
    if n == 0 {
        return (0, 0);
    }
    let cand = ngram_counts(&candidate.tokens, n);
    let refs = ngram_counts(&reference.tokens, n);
    let clipped = cand
        .iter()
        .map(|(gram, occ)| occ.len().min(refs.get(gram).map_or(0, Vec::len)))
        .sum();
    (clipped, total)
}

/// Weighted clipped matches and weighted total for order `n`. Each distinct
/// n-gram contributes its occurrence weights summed over the candidate.
pub(crate) fn weighted_ngram_stats(
    candidate: &[Token],
    reference: &[Token],
    n: usize,
    weight: &dyn Fn(&[Token]) -> f64,
) -> (f64, f64) {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let mut matched = 0.0;
    let mut total = 0.0;
    // Sorted for a deterministic summation order.
    let mut grams: Vec<_> = cand.iter().collect();
    grams.sort_unstable_by(|a, b| a.0.cmp(b.0));
    for (gram, starts) in grams {
        let occurrence_weight: f64 = starts.iter().map(|&s| weight(&candidate[s..s + n])).sum();
        let clipped = starts.len().min(refs.get(gram).map_or(0, Vec::len));
        total += occurrence_weight;
        matched += occurrence_weight * clipped as f64 / starts.len() as f64;
    }
    (matched, total)
}

/// Per-order precisions after smoothing; `None` for orders with no
/// candidate n-grams.
pub(crate) fn smoothed_precisions(
    candidate: &[Token],
    reference: &[Token],
    cfg: &MetricConfig,
    weight: &dyn Fn(&[Token]) -> f64,
) -> Vec<Option<f64>> {
    (1..=cfg.max_n)
        .map(|n| {
            if candidate.len() < n {
                return None;
            }
            let (matched, total) = weighted_ngram_stats(candidate, reference, n, weight);
            if total <= 0.0 {
                return None;
            }
            let p = if n >= 2 && matched == 0.0 {
                match cfg.smoothing {
                    Smoothing::AddOneNumeratorDenominator => 1.0 / (total + 1.0),
                }
            } else {
                matched / total
            };
            Some(p)
        })
        .collect()
}

pub fn brevity_penalty(candidate_len: usize, reference_len: usize) -> f64 {
    if candidate_len >= reference_len {
        1.0
    } else {
        (1.0 - reference_len as f64 / candidate_len as f64).exp()
    }
}

pub(crate) fn bleu_with_weights(
    candidate: &TokenStream,
    reference: &TokenStream,
    cfg: &MetricConfig,
    weight: &dyn Fn(&[Token]) -> f64,
) -> Result<f64, MetricError> {
    if candidate.is_empty() {
        return Err(MetricError::EmptyCandidate);
    }
    let precisions = smoothed_precisions(&candidate.tokens, &reference.tokens, cfg, weight);
    let included: Vec<(f64, f64)> = precisions
        .iter()
        .zip(&cfg.bleu_component_weights)
        .filter_map(|(p, &w)| p.map(|p| (p, w)))
        .collect();
    // Zero-weight tokens everywhere leave nothing to measure.
    if included.is_empty() || included.iter().any(|&(p, _)| p == 0.0) {
        return Ok(0.0);
    }
    let weight_sum: f64 = included.iter().map(|&(_, w)| w).sum();
    let log_mean = if weight_sum > 0.0 {
        included.iter().map(|&(p, w)| w * p.ln()).sum::<f64>() / weight_sum
    } else {
        included.iter().map(|&(p, _)| p.ln()).sum::<f64>() / included.len() as f64
    };
    let bp = brevity_penalty(candidate.len(), reference.len());
    Ok((bp * log_mean.exp()).clamp(0.0, 1.0))
}

/// Corpus-free BLEU between one candidate and one reference stream.
pub fn bleu(
    candidate: &TokenStream,
    reference: &TokenStream,
    cfg: &MetricConfig,
) -> Result<f64, MetricError> {
    bleu_with_weights(candidate, reference, cfg, &|_| 1.0)
}

// ---- METEOR -----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alignment {
    /// `(candidate_index, reference_index)`, sorted by candidate index.
    pub matches: Vec<(usize, usize)>,
    pub chunk_count: usize,
    /// False when the search budget ran out before optimality was proven.
    pub optimal: bool,
}

impl Alignment {
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }
}

/// Maximal runs contiguous in both sequences.
pub fn count_chunks(matches: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(i, j) in matches {
        let extends = prev.is_some_and(|(pi, pj)| pi + 1 == i && pj + 1 == j);
        if !extends {
            chunks += 1;
        }
        prev = Some((i, j));
    }
    chunks
}

/// Lowercased subtoken-set key per distinct text, defined only for texts
/// that occur exclusively as identifiers.
fn subtoken_classes(candidate: &[Token], reference: &[Token]) -> HashMap<String, Option<String>> {
    let mut classes: HashMap<String, Option<String>> = HashMap::new();
    for tok in candidate.iter().chain(reference) {
        let entry = classes.entry(tok.text.clone()).or_insert_with(|| {
            let mut parts: Vec<String> = split_subtokens(&tok.text)
                .into_iter()
                .map(|p| p.to_lowercase())
                .collect();
            parts.sort_unstable();
            parts.dedup();
            (!parts.is_empty()).then(|| parts.join("\u{1f}"))
        });
        if tok.kind != TokenKind::Identifier || is_keyword(&tok.text) {
            *entry = None;
        }
    }
    classes
}

struct AlignProblem {
    cand_text: Vec<usize>,
    cand_class: Vec<Option<usize>>,
    ref_text: Vec<usize>,
    ref_class: Vec<Option<usize>>,
    exact_quota: Vec<usize>,
    stage2_quota: Vec<usize>,
    n_texts: usize,
}

impl AlignProblem {
    fn new<'a>(candidate: &'a [Token], reference: &'a [Token], subtoken_matching: bool) -> Self {
        let classes = if subtoken_matching {
            subtoken_classes(candidate, reference)
        } else {
            HashMap::new()
        };
        let mut text_ids: HashMap<&str, usize> = HashMap::new();
        let mut intern = |t: &'a Token| {
            let next = text_ids.len();
            *text_ids.entry(t.text.as_str()).or_insert(next)
        };
        let cand_text: Vec<usize> = candidate.iter().map(&mut intern).collect();
        let ref_text: Vec<usize> = reference.iter().map(&mut intern).collect();
        let n_texts = text_ids.len();

        let mut texts: Vec<(&str, usize)> = text_ids.iter().map(|(t, &id)| (*t, id)).collect();
        texts.sort_unstable_by_key(|&(_, id)| id);
        let mut key_ids: HashMap<&str, usize> = HashMap::new();
        let text_class: Vec<Option<usize>> = texts
            .iter()
            .map(|(text, _)| {
                classes.get(*text).and_then(|k| k.as_deref()).map(|key| {
                    let next = key_ids.len();
                    *key_ids.entry(key).or_insert(next)
                })
            })
            .collect();
        let n_classes = key_ids.len();

        let mut cand_count = vec![0usize; n_texts];
        let mut ref_count = vec![0usize; n_texts];
        cand_text.iter().for_each(|&t| cand_count[t] += 1);
        ref_text.iter().for_each(|&t| ref_count[t] += 1);

        let exact_quota: Vec<usize> = (0..n_texts)
            .map(|t| cand_count[t].min(ref_count[t]))
            .collect();
        let mut left_cand = vec![0usize; n_classes];
        let mut left_ref = vec![0usize; n_classes];
        for t in 0..n_texts {
            if let Some(k) = text_class[t] {
                left_cand[k] += cand_count[t] - exact_quota[t];
                left_ref[k] += ref_count[t] - exact_quota[t];
            }
        }
        let stage2_quota = (0..n_classes)
            .map(|k| left_cand[k].min(left_ref[k]))
            .collect();

        Self {
            cand_class: cand_text.iter().map(|&t| text_class[t]).collect(),
            ref_class: ref_text.iter().map(|&t| text_class[t]).collect(),
            cand_text,
            ref_text,
            exact_quota,
            stage2_quota,
            n_texts,
        }
    }

    /// Whether candidate `i` may pair with reference `j` in some stage.
    fn compatible(&self, i: usize, j: usize) -> bool {
        self.cand_text[i] == self.ref_text[j]
            || (self.cand_class[i].is_some() && self.cand_class[i] == self.ref_class[j])
    }

    fn total_matches(&self) -> usize {
        self.exact_quota.iter().sum::<usize>() + self.stage2_quota.iter().sum::<usize>()
    }

    /// Pair the k-th candidate occurrence with the k-th reference occurrence,
    /// per text, then the same over stage-two leftovers per class.
    fn occurrence_order_alignment(&self) -> Vec<Option<usize>> {
        let mut assign = vec![None; self.cand_text.len()];
        let mut ref_used = vec![false; self.ref_text.len()];
        let mut ref_by_text: Vec<Vec<usize>> = vec![Vec::new(); self.n_texts];
        for (j, &t) in self.ref_text.iter().enumerate() {
            ref_by_text[t].push(j);
        }
        let mut taken = vec![0usize; self.n_texts];
        for (i, &t) in self.cand_text.iter().enumerate() {
            if taken[t] < self.exact_quota[t] {
                let j = ref_by_text[t][taken[t]];
                assign[i] = Some(j);
                ref_used[j] = true;
                taken[t] += 1;
            }
        }
        let mut by_class: HashMap<usize, Vec<usize>> = HashMap::new();
        for (j, class) in self.ref_class.iter().enumerate() {
            if let (Some(k), false) = (class, ref_used[j]) {
                by_class.entry(*k).or_default().push(j);
            }
        }
        let mut class_taken: HashMap<usize, usize> = HashMap::new();
        for (i, class) in self.cand_class.iter().enumerate() {
            let Some(k) = class else { continue };
            if assign[i].is_some() {
                continue;
            }
            let used = class_taken.entry(*k).or_insert(0);
            if *used < self.stage2_quota[*k] {
                assign[i] = Some(by_class[k][*used]);
                *used += 1;
            }
        }
        assign
    }
}

fn assignment_chunks(assign: &[Option<usize>]) -> usize {
    let matches: Vec<(usize, usize)> = assign
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    count_chunks(&matches)
}

struct Search<'p> {
    p: &'p AlignProblem,
    ref_by_text: Vec<Vec<usize>>,
    ref_by_class: Vec<Vec<usize>>,
    used: Vec<bool>,
    exact_left: Vec<usize>,
    stage2_left: Vec<usize>,
    cand_ahead: Vec<usize>,
    ref_unused: Vec<usize>,
    remaining: usize,
    /// `cont_refs[k]`: reference positions `j` such that candidate `k` at `j`
    /// could continue a chunk started by `k - 1` at `j - 1`.
    cont_refs: Vec<Vec<usize>>,
    assign: Vec<Option<usize>>,
    chunks: usize,
    seed_cost: usize,
    best: Option<(usize, Vec<Option<usize>>)>,
    floor: usize,
    nodes: u64,
    budget: u64,
    /// Try the option that continues the current chunk before the others.
    /// Only used to find a good bound quickly; it does not respect the
    /// leftmost tie-break.
    extend_first: bool,
    exhausted: bool,
    done: bool,
}

impl<'p> Search<'p> {
    fn new(p: &'p AlignProblem, seed_cost: usize, budget: u64, extend_first: bool) -> Self {
        let mut ref_by_text = vec![Vec::new(); p.n_texts];
        for (j, &t) in p.ref_text.iter().enumerate() {
            ref_by_text[t].push(j);
        }
        let mut ref_by_class = vec![Vec::new(); p.stage2_quota.len()];
        for (j, class) in p.ref_class.iter().enumerate() {
            if let Some(k) = class {
                ref_by_class[*k].push(j);
            }
        }
        let mut cand_ahead = vec![0; p.n_texts];
        p.cand_text.iter().for_each(|&t| cand_ahead[t] += 1);
        let mut ref_unused = vec![0; p.n_texts];
        p.ref_text.iter().for_each(|&t| ref_unused[t] += 1);
        let remaining = p.total_matches();
        let n = p.cand_text.len();
        let cont_refs = (0..n)
            .map(|k| {
                if k == 0 {
                    return Vec::new();
                }
                (1..p.ref_text.len())
                    .filter(|&j| p.compatible(k - 1, j - 1) && p.compatible(k, j))
                    .collect()
            })
            .collect();
        Self {
            p,
            cont_refs,
            ref_by_text,
            ref_by_class,
            used: vec![false; p.ref_text.len()],
            exact_left: p.exact_quota.clone(),
            stage2_left: p.stage2_quota.clone(),
            cand_ahead,
            ref_unused,
            remaining,
            assign: vec![None; p.cand_text.len()],
            chunks: 0,
            seed_cost,
            best: None,
            floor: usize::from(remaining > 0),
            nodes: 0,
            budget,
            extend_first,
            exhausted: false,
            done: false,
        }
    }

    fn quota_allows(&self, k: usize, j: usize) -> bool {
        let t = self.p.cand_text[k];
        if self.p.ref_text[j] == t {
            self.exact_left[t] > 0
        } else {
            self.p.cand_class[k].is_some_and(|c| self.stage2_left[c] > 0)
        }
    }

    fn limit_exceeded(&self, lower_bound: usize) -> bool {
        match &self.best {
            Some((cost, _)) => lower_bound >= *cost,
            None => lower_bound > self.seed_cost,
        }
    }

    fn dfs(&mut self, i: usize, prev: Option<usize>) {
        if self.done {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            self.done = true;
            return;
        }
        let n = self.p.cand_text.len();
        if i == n {
            if self.remaining == 0 && !self.limit_exceeded(self.chunks) {
                self.best = Some((self.chunks, self.assign.clone()));
                if self.chunks <= self.floor {
                    self.done = true;
                }
            }
            return;
        }
        if self.remaining > n - i {
            return;
        }

        let t = self.p.cand_text[i];
        let class = self.p.cand_class[i];
        let can_extend = prev.is_some_and(|pj| {
            let j = pj + 1;
            j < self.used.len()
                && !self.used[j]
                && (self.p.ref_text[j] == t || (class.is_some() && self.p.ref_class[j] == class))
        });
        // Each remaining match opens a chunk unless it continues one, and a
        // continuation needs two adjacent reference slots that are still free.
        let free_cont = (i + 1..n)
            .filter(|&k| {
                self.cont_refs[k].iter().any(|&j| {
                    !self.used[j - 1]
                        && !self.used[j]
                        && self.quota_allows(k - 1, j - 1)
                        && self.quota_allows(k, j)
                })
            })
            .count();
        let continuations = usize::from(can_extend) + free_cont;
        let opened = self
            .remaining
            .saturating_sub(continuations)
            .max(usize::from(self.remaining > 0 && !can_extend));
        let lower_bound = self.chunks + opened;
        if self.limit_exceeded(lower_bound) {
            return;
        }

        let spare_cand = self.cand_ahead[t] > self.exact_left[t];
        let mut options: Vec<(usize, bool)> = Vec::new();
        if self.exact_left[t] > 0 {
            options.extend(
                self.ref_by_text[t]
                    .iter()
                    .filter(|&&j| !self.used[j])
                    .map(|&j| (j, true)),
            );
        }
        if let Some(k) = class {
            if self.stage2_left[k] > 0 && spare_cand {
                options.extend(self.ref_by_class[k].iter().filter_map(|&j| {
                    let rt = self.p.ref_text[j];
                    let spare_ref = self.ref_unused[rt] > self.exact_left[rt];
                    (!self.used[j] && rt != t && spare_ref).then_some((j, false))
                }));
            }
        }
        options.sort_unstable();
        if self.extend_first {
            if let Some(pos) = options
                .iter()
                .position(|&(j, _)| prev.is_some_and(|pj| pj + 1 == j))
            {
                let cont = options.remove(pos);
                options.insert(0, cont);
            }
        }

        self.cand_ahead[t] -= 1;
        for (j, exact) in options {
            let rt = self.p.ref_text[j];
            let new_chunk = usize::from(prev.is_none_or(|pj| pj + 1 != j));
            self.used[j] = true;
            self.ref_unused[rt] -= 1;
            if exact {
                self.exact_left[t] -= 1;
            } else if let Some(k) = class {
                self.stage2_left[k] -= 1;
            }
            self.remaining -= 1;
            self.chunks += new_chunk;
            self.assign[i] = Some(j);

            self.dfs(i + 1, Some(j));

            self.assign[i] = None;
            self.chunks -= new_chunk;
            self.remaining += 1;
            if exact {
                self.exact_left[t] += 1;
            } else if let Some(k) = class {
                self.stage2_left[k] += 1;
            }
            self.ref_unused[rt] += 1;
            self.used[j] = false;
            if self.done {
                self.cand_ahead[t] += 1;
                return;
            }
        }
        if spare_cand {
            self.dfs(i + 1, None);
        }
        self.cand_ahead[t] += 1;
    }
}

/// Maximal two-stage unigram alignment with the fewest chunks, ties broken
/// by the leftmost reference indices (in candidate order).
pub fn align(
    candidate: &[Token],
    reference: &[Token],
    subtoken_matching: bool,
    budget: u64,
) -> Alignment {
    let problem = AlignProblem::new(candidate, reference, subtoken_matching);
    let seed = problem.occurrence_order_alignment();
    let seed_cost = assignment_chunks(&seed);

    // A short chunk-greedy pass tightens the bound; the exact pass then
    // only has to beat or tie it in leftmost order.
    let mut quick = Search::new(&problem, seed_cost, budget / 10, true);
    quick.dfs(0, None);
    let (bound, fallback) = match quick.best {
        Some((cost, assign)) => (cost, assign),
        None => (seed_cost, seed),
    };

    let mut search = Search::new(&problem, bound, budget - budget / 10, false);
    search.dfs(0, None);

    let optimal = !search.exhausted;
    let assign = match search.best {
        Some((_, assign)) => assign,
        None => fallback,
    };
    let matches: Vec<(usize, usize)> = assign
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect();
    Alignment {
        chunk_count: count_chunks(&matches),
        matches,
        optimal,
    }
}

pub fn meteor_from_alignment(
    alignment: &Alignment,
    candidate_len: usize,
    reference_len: usize,
    cfg: &MetricConfig,
) -> f64 {
    let m = alignment.len();
    if m == 0 || candidate_len == 0 || reference_len == 0 {
        return 0.0;
    }
    let m = m as f64;
    let precision = m / candidate_len as f64;
    let recall = m / reference_len as f64;
    let alpha = cfg.meteor_alpha;
    let f_mean = precision * recall / (alpha * precision + (1.0 - alpha) * recall);
    let fragmentation = alignment.chunk_count as f64 / m;
    let penalty = cfg.meteor_gamma * fragmentation.powf(cfg.meteor_beta);
    (f_mean * (1.0 - penalty)).clamp(0.0, 1.0)
}

pub fn meteor(candidate: &TokenStream, reference: &TokenStream, cfg: &MetricConfig) -> f64 {
    let alignment = align(
        &candidate.tokens,
        &reference.tokens,
        cfg.meteor_subtoken_matching,
        cfg.meteor_search_budget,
    );
    meteor_from_alignment(&alignment, candidate.len(), reference.len(), cfg)
}

// ---- ROUGE-L ----------------------------------------------------------------

/// Longest common subsequence length in linear memory.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; short.len() + 1];
    let mut curr = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                curr[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

pub fn rouge_l(candidate: &TokenStream, reference: &TokenStream, cfg: &MetricConfig) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_length(&candidate.texts(), &reference.texts());
    if lcs == 0 {
        return 0.0;
    }
    let recall = lcs as f64 / reference.len() as f64;
    let precision = lcs as f64 / candidate.len() as f64;
    let beta2 = cfg.rouge_beta * cfg.rouge_beta;
    ((1.0 + beta2) * recall * precision / (recall + beta2 * precision)).clamp(0.0, 1.0)
}

// ---- cosine -----------------------------------------------------------------

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, MetricError> {
    if u.len() != v.len() {
        return Err(MetricError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> TokenStream {
        TokenStream::from_words(s)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ngram_precision_examples() {
        assert_eq!(
            ngram_precision(&words("a b c"), &words("a b c d"), 2),
            (2, 2)
        );
        assert_eq!(ngram_precision(&words("a a a"), &words("a a"), 1), (2, 3));
        let s = words("x y z x y");
        for n in 1..=5 {
            let (m, t) = ngram_precision(&s, &s, n);
            assert_eq!(m, t);
        }
        assert_eq!(ngram_precision(&words("a b"), &words("a b"), 3), (0, 0));
    }

    #[test]
    fn bleu_examples() {
        let cfg = MetricConfig::default();
        let ten = words("a b c d e f g h i j");
        assert_eq!(bleu(&ten, &ten, &cfg).unwrap(), 1.0);
        // p1 = p2 = p3 = 1, p4 excluded, BP = exp(1 - 4/3).
        let score = bleu(&words("a b c"), &words("a b c d"), &cfg).unwrap();
        assert!(close(score, 0.71653, 1e-5), "{score}");
        assert_eq!(bleu(&words("x y"), &words("a b"), &cfg).unwrap(), 0.0);
        assert_eq!(
            bleu(&words(""), &words("a"), &cfg),
            Err(MetricError::EmptyCandidate)
        );
    }

    #[test]
    fn bleu_smooths_zero_higher_orders() {
        let cfg = MetricConfig::default();
        // p1 = 1/2, p2 = (0 + 1) / (1 + 1), orders 3 and 4 excluded.
        let score = bleu(&words("a x"), &words("a b"), &cfg).unwrap();
        let expected = (0.5f64.ln() * 0.5 + 0.5f64.ln() * 0.5).exp();
        assert!(close(score, expected, 1e-12));
    }

    #[test]
    fn meteor_permutation_example() {
        let cfg = MetricConfig::default();
        let cand = words("a c b d");
        let refs = words("a b c d");
        let al = align(&cand.tokens, &refs.tokens, true, cfg.meteor_search_budget);
        assert_eq!(al.matches, vec![(0, 0), (1, 2), (2, 1), (3, 3)]);
        assert_eq!(al.chunk_count, 4);
        assert_eq!(meteor(&cand, &refs, &cfg), 0.5);
    }

    #[test]
    fn meteor_identity_and_disjoint() {
        let cfg = MetricConfig::default();
        let s = words("a b a b c");
        let expected = 1.0 - 0.5 * (1.0f64 / 5.0).powi(3);
        assert_eq!(meteor(&s, &s, &cfg), expected);
        assert_eq!(meteor(&words("x y"), &words("a b"), &cfg), 0.0);
        assert_eq!(meteor(&words(""), &words(""), &cfg), 0.0);
    }

    #[test]
    fn meteor_prefers_fewest_chunks_then_leftmost() {
        // `a` could align to either reference `a`; pairing with the second
        // keeps `a b` as one chunk.
        let al = align(&words("a b").tokens, &words("a x a b").tokens, true, 1_000);
        assert_eq!(al.matches, vec![(0, 2), (1, 3)]);
        assert_eq!(al.chunk_count, 1);
        // Equal chunk counts: leftmost reference index wins.
        let al = align(&words("a").tokens, &words("a a").tokens, true, 1_000);
        assert_eq!(al.matches, vec![(0, 0)]);
        assert!(al.optimal);
    }

    #[test]
    fn meteor_subtoken_stage() {
        let cfg = MetricConfig::default();
        let cand = words("stringArray");
        let refs = words("string_array");
        let al = align(&cand.tokens, &refs.tokens, true, 1_000);
        assert_eq!(al.matches, vec![(0, 0)]);
        let off = align(&cand.tokens, &refs.tokens, false, 1_000);
        assert!(off.is_empty());
        assert!(meteor(&cand, &refs, &cfg) > 0.0);
    }

    #[test]
    fn exact_matches_take_priority_over_subtoken_matches() {
        // Stage one must pair `foo_bar` with itself even though `fooBar`
        // could also use it.
        let al = align(
            &words("fooBar foo_bar").tokens,
            &words("foo_bar FooBar").tokens,
            true,
            1_000,
        );
        assert_eq!(al.matches, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn rouge_examples() {
        let cfg = MetricConfig::default();
        let score = rouge_l(&words("a c d"), &words("a b c d"), &cfg);
        assert!(close(score, 0.85714, 1e-5), "{score}");
        let s = words("p q r");
        assert_eq!(rouge_l(&s, &s, &cfg), 1.0);
        assert_eq!(rouge_l(&words("x"), &words("y"), &cfg), 0.0);
        assert_eq!(rouge_l(&words(""), &words("y"), &cfg), 0.0);
    }

    #[test]
    fn rouge_is_direction_sensitive_with_beta() {
        let cfg = MetricConfig {
            rouge_beta: 2.0,
            ..MetricConfig::default()
        };
        let a = rouge_l(&words("a c d"), &words("a b c d"), &cfg);
        let b = rouge_l(&words("a b c d"), &words("a c d"), &cfg);
        assert_ne!(a, b);
    }

    #[test]
    fn lcs_small() {
        assert_eq!(lcs_length(&[1, 2, 3, 4], &[2, 4, 3]), 2);
        assert_eq!(lcs_length::<u8>(&[], &[1]), 0);
    }

    #[test]
    fn cosine_examples() {
        assert!(close(cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0, 1e-12));
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(close(
            cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            1e-12
        ));
        assert_eq!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(MetricError::DimensionMismatch { left: 1, right: 2 })
        );
        assert_eq!(
            cosine(&[0.0, 0.0], &[1.0, 2.0]),
            Err(MetricError::ZeroVector)
        );
    }

    #[test]
    fn config_validation() {
        assert!(MetricConfig::default().validate().is_ok());
        let bad = MetricConfig {
            bleu_component_weights: vec![0.5, 0.5],
            ..MetricConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = MetricConfig {
            meteor_alpha: 1.0,
            ..MetricConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = MetricConfig {
            codebleu_weights: [0.5, 0.5, 0.5, 0.0],
            ..MetricConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
