//! Batch evaluation over a manifest of (original, refactored) test pairs.
//!
//! Manifest format: JSON Lines, one [`PairRecord`] object per line. Blank
//! lines and lines starting with `#` are ignored; an optional first line
//! `#ctses-manifest v1` pins the format version. Relative paths resolve
//! against the manifest's directory.
//!
//! Embedding sidecar: JSON Lines of `{"key": "...", "vector": [..]}`. A pair
//! with `embedding_key` K takes its vectors from `K/original` and
//! `K/refactored`.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codebleu::{codebleu_score, CodeBleuError, ComponentScores, ParseMode};
use crate::ctses::{
    builtin_profiles, evaluate, CtsesError, ThresholdConfig, Verdict, WeightProfile,
};
use crate::lexer::LexConfig;
use crate::textmetrics::{cosine, MetricConfig, MetricError};

pub const MANIFEST_VERSION: &str = "v1";
const MANIFEST_HEADER_PREFIX: &str = "#ctses-manifest";
pub const QUARTILE_CONVENTION: &str = "linear interpolation at index (n-1)*q on the sorted sample";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {message}")]
    ManifestParse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: duplicate pair_id {pair_id:?}")]
    DuplicatePairId {
        path: PathBuf,
        line: usize,
        pair_id: String,
    },
    #[error("file not found: {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    SidecarParse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("embedding {key:?} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        key: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("could not start worker pool: {0}")]
    Pool(String),
    #[error("report serialization failed: {0}")]
    Report(String),
}

impl CorpusError {
    fn io(path: &Path, source: io::Error) -> Self {
        if source.kind() == io::ErrorKind::NotFound {
            CorpusError::MissingFile {
                path: path.to_path_buf(),
            }
        } else {
            CorpusError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

/// Why a single pair could not be scored.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PairError {
    #[error("file not found: {}", path.display())]
    MissingFile { path: PathBuf },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Score(#[from] CodeBleuError),
    #[error(transparent)]
    Profile(#[from] CtsesError),
    #[error("cosine: {0}")]
    Cosine(MetricError),
}

/// A [`PairError`] tagged with the pair it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Error)]
#[error("pair {pair_id}: {message}")]
pub struct Failure {
    pub pair_id: String,
    pub dataset: String,
    pub model: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub pair_id: String,
    pub dataset: String,
    pub model: String,
    pub original_path: PathBuf,
    pub refactored_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lex: LexConfig,
    pub metric: MetricConfig,
    pub thresholds: ThresholdConfig,
    pub profiles: Vec<WeightProfile>,
    pub lenient_parse: bool,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lex: LexConfig::default(),
            metric: MetricConfig::default(),
            thresholds: ThresholdConfig::default(),
            profiles: builtin_profiles(),
            lenient_parse: false,
            workers: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |e: &dyn std::fmt::Display| CorpusError::Config(e.to_string());
        self.metric.validate().map_err(|e| bad(&e))?;
        self.thresholds.validate().map_err(|e| bad(&e))?;
        if self.profiles.is_empty() {
            return Err(CorpusError::Config(
                "at least one profile is required".into(),
            ));
        }
        let mut seen = HashSet::new();
        for p in &self.profiles {
            p.validate().map_err(|e| bad(&e))?;
            if !seen.insert(p.name.as_str()) {
                return Err(CorpusError::Config(format!(
                    "profile {:?} is defined twice",
                    p.name
                )));
            }
        }
        if self.workers == 0 {
            return Err(CorpusError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn parse_mode(&self) -> ParseMode {
        if self.lenient_parse {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        }
    }

    /// Everything that can change a score. Worker count is excluded.
    pub fn scoring_view(&self) -> ScoringConfig<'_> {
        ScoringConfig {
            lex: &self.lex,
            metric: &self.metric,
            thresholds: &self.thresholds,
            profiles: &self.profiles,
            lenient_parse: self.lenient_parse,
        }
    }

    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_vec(&self.scoring_view()).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

#[derive(Debug, Serialize)]
pub struct ScoringConfig<'a> {
    pub lex: &'a LexConfig,
    pub metric: &'a MetricConfig,
    pub thresholds: &'a ThresholdConfig,
    pub profiles: &'a [WeightProfile],
    pub lenient_parse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResult {
    pub pair_id: String,
    pub dataset: String,
    pub model: String,
    pub components: ComponentScores,
    /// One verdict per configured profile, in configuration order.
    pub verdicts: Vec<Verdict>,
}

impl PairResult {
    pub fn verdict(&self, profile: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.profile_name == profile)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        let c = &self.components;
        match name {
            "ngram" => Some(c.ngram),
            "weighted_ngram" => Some(c.weighted_ngram),
            "syntax" => Some(c.syntax),
            "dataflow" => Some(c.dataflow),
            "codebleu" => Some(c.codebleu),
            "meteor" => Some(c.meteor),
            "rouge_l" => Some(c.rouge_l),
            "cosine" => c.cosine,
            profile => self.verdict(profile).map(|v| v.ctses),
        }
    }
}

pub type Embeddings = BTreeMap<String, Vec<f64>>;

pub fn load_manifest(path: &Path) -> Result<Vec<PairRecord>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    parse_manifest(&text, path)
}

/// Parses manifest text; `path` locates relative entries and error messages.
pub fn parse_manifest(text: &str, path: &Path) -> Result<Vec<PairRecord>, CorpusError> {
    let base = path.parent().unwrap_or(Path::new(""));
    let mut records: Vec<PairRecord> = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if let Some(rest) = trimmed.strip_prefix(MANIFEST_HEADER_PREFIX) {
            let version = rest.trim();
            if version != MANIFEST_VERSION {
                return Err(CorpusError::ManifestParse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("unsupported manifest version {version:?}"),
                });
            }
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut record: PairRecord =
            serde_json::from_str(trimmed).map_err(|e| CorpusError::ManifestParse {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
        if record.pair_id.is_empty() {
            return Err(CorpusError::ManifestParse {
                path: path.to_path_buf(),
                line,
                message: "pair_id is empty".into(),
            });
        }
        if !seen.insert(record.pair_id.clone()) {
            return Err(CorpusError::DuplicatePairId {
                path: path.to_path_buf(),
                line,
                pair_id: record.pair_id,
            });
        }
        record.original_path = base.join(&record.original_path);
        record.refactored_path = base.join(&record.refactored_path);
        records.push(record);
    }
    Ok(records)
}

pub fn load_embeddings(path: &Path) -> Result<Embeddings, CorpusError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Entry {
        key: String,
        vector: Vec<f64>,
    }

    let text = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut map = Embeddings::new();
    let mut dim: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let sidecar_err = |message: String| CorpusError::SidecarParse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let entry: Entry = serde_json::from_str(trimmed).map_err(|e| sidecar_err(e.to_string()))?;
        match dim {
            None => dim = Some(entry.vector.len()),
            Some(d) if d != entry.vector.len() => {
                return Err(CorpusError::DimensionMismatch {
                    key: entry.key,
                    expected: d,
                    found: entry.vector.len(),
                });
            }
            Some(_) => {}
        }
        if map.insert(entry.key.clone(), entry.vector).is_some() {
            return Err(sidecar_err(format!("duplicate key {:?}", entry.key)));
        }
    }
    Ok(map)
}

fn read_source(path: &Path) -> Result<String, PairError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => PairError::MissingFile {
            path: path.to_path_buf(),
        },
        _ => PairError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        },
    })
}

/// Scores two sources directly (refactored is the candidate).
pub fn score_sources(
    original: &str,
    refactored: &str,
    cfg: &RunConfig,
) -> Result<(ComponentScores, Vec<Verdict>), PairError> {
    let components = codebleu_score(
        refactored,
        original,
        &cfg.metric,
        &cfg.lex,
        cfg.parse_mode(),
    )?;
    let verdicts = verdicts_for(&components, cfg)?;
    Ok((components, verdicts))
}

fn verdicts_for(components: &ComponentScores, cfg: &RunConfig) -> Result<Vec<Verdict>, PairError> {
    cfg.profiles
        .iter()
        .map(|p| evaluate(components, p, &cfg.thresholds).map_err(PairError::from))
        .collect()
}

pub fn score_pair(
    record: &PairRecord,
    cfg: &RunConfig,
    embeddings: Option<&Embeddings>,
) -> Result<PairResult, Failure> {
    let tag = |e: PairError| Failure {
        pair_id: record.pair_id.clone(),
        dataset: record.dataset.clone(),
        model: record.model.clone(),
        message: e.to_string(),
    };
    let original = read_source(&record.original_path).map_err(tag)?;
    let refactored = read_source(&record.refactored_path).map_err(tag)?;
    let mut components = codebleu_score(
        &refactored,
        &original,
        &cfg.metric,
        &cfg.lex,
        cfg.parse_mode(),
    )
    .map_err(|e| tag(e.into()))?;

    if let (Some(key), Some(vectors)) = (&record.embedding_key, embeddings) {
        let orig = vectors.get(&format!("{key}/original"));
        let refd = vectors.get(&format!("{key}/refactored"));
        if let (Some(o), Some(r)) = (orig, refd) {
            components.cosine = Some(cosine(r, o).map_err(|e| tag(PairError::Cosine(e)))?);
        }
    }

    let verdicts = verdicts_for(&components, cfg).map_err(tag)?;
    Ok(PairResult {
        pair_id: record.pair_id.clone(),
        dataset: record.dataset.clone(),
        model: record.model.clone(),
        components,
        verdicts,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BatchOutcome {
    /// Sorted by pair_id.
    pub results: Vec<PairResult>,
    /// Sorted by pair_id.
    pub failures: Vec<Failure>,
}

pub fn run_batch(
    records: &[PairRecord],
    cfg: &RunConfig,
    embeddings: Option<&Embeddings>,
) -> Result<BatchOutcome, CorpusError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CorpusError::Pool(e.to_string()))?;
    let scored: Vec<Result<PairResult, Failure>> = pool.install(|| {
        records
            .par_iter()
            .map(|r| score_pair(r, cfg, embeddings))
            .collect()
    });

    let mut outcome = BatchOutcome::default();
    for item in scored {
        match item {
            Ok(result) => outcome.results.push(result),
            Err(failure) => outcome.failures.push(failure),
        }
    }
    outcome.results.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    outcome.failures.sort_by(|a, b| a.pair_id.cmp(&b.pair_id));
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub dataset: String,
    pub model: String,
    pub metric: String,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub pct_below: f64,
    pub pct_at_or_above: f64,
}

/// Quantile of an ascending sample by linear interpolation at (n-1)*q.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Summary row for one sample. Returns `None` for an empty sample.
pub fn summarize(values: &[f64], threshold: f64) -> Option<[f64; 8]> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let above = sorted.iter().filter(|&&x| x >= threshold).count() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    Some([
        sorted[0],
        quantile(&sorted, 0.25),
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.75),
        sorted[sorted.len() - 1],
        mean,
        100.0 * (n - above) / n,
        100.0 * above / n,
    ])
}

/// One row per (dataset, model) group that has at least one value for
/// `metric_name`. Groups without values are skipped.
pub fn aggregate(results: &[PairResult], metric_name: &str, threshold: f64) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in results {
        let entry = groups
            .entry((r.dataset.as_str(), r.model.as_str()))
            .or_default();
        if let Some(v) = r.metric(metric_name) {
            entry.push(v);
        }
    }
    groups
        .into_iter()
        .filter_map(|((dataset, model), values)| {
            let [min, q1, median, q3, max, mean, pct_below, pct_at_or_above] =
                summarize(&values, threshold)?;
            Some(AggregateRow {
                dataset: dataset.to_string(),
                model: model.to_string(),
                metric: metric_name.to_string(),
                count: values.len(),
                min,
                q1,
                median,
                q3,
                max,
                mean,
                pct_below,
                pct_at_or_above,
            })
        })
        .collect()
}

pub const COMPONENT_METRICS: [&str; 8] = [
    "ngram",
    "weighted_ngram",
    "syntax",
    "dataflow",
    "codebleu",
    "meteor",
    "rouge_l",
    "cosine",
];

/// Aggregates for every component metric followed by every profile, all
/// at the acceptance threshold.
pub fn aggregate_all(results: &[PairResult], cfg: &RunConfig) -> Vec<AggregateRow> {
    let names = COMPONENT_METRICS
        .iter()
        .copied()
        .chain(cfg.profiles.iter().map(|p| p.name.as_str()));
    names
        .flat_map(|name| aggregate(results, name, cfg.thresholds.accept_min))
        .collect()
}

pub const PAIRS_HEADER: [&str; 16] = [
    "pair_id",
    "dataset",
    "model",
    "profile",
    "ngram",
    "weighted_ngram",
    "syntax",
    "dataflow",
    "codebleu",
    "meteor",
    "rouge_l",
    "cosine",
    "ctses",
    "accepted",
    "warnings",
    "flags",
];

pub const AGGREGATES_HEADER: [&str; 11] = [
    "dataset",
    "model",
    "metric",
    "min",
    "q1",
    "median",
    "q3",
    "max",
    "mean",
    "pct_below",
    "pct_at_or_above",
];

pub const FAILURES_HEADER: [&str; 4] = ["pair_id", "dataset", "model", "error"];

/// Shortest representation that parses back to the same value.
fn num(x: f64) -> String {
    format!("{x}")
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>, CorpusError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let err = |e: csv::Error| CorpusError::Report(e.to_string());
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| CorpusError::Report(e.to_string()))
}

pub fn pairs_csv(results: &[PairResult]) -> Result<Vec<u8>, CorpusError> {
    let rows = results.iter().flat_map(|r| {
        r.verdicts.iter().map(move |v| {
            let c = &r.components;
            let warnings: Vec<&str> = v.warnings.iter().map(|w| w.as_str()).collect();
            let flags: Vec<&str> = c.flags.iter().map(|f| f.as_str()).collect();
            vec![
                r.pair_id.clone(),
                r.dataset.clone(),
                r.model.clone(),
                v.profile_name.clone(),
                num(c.ngram),
                num(c.weighted_ngram),
                num(c.syntax),
                num(c.dataflow),
                num(c.codebleu),
                num(c.meteor),
                num(c.rouge_l),
                c.cosine.map(num).unwrap_or_default(),
                num(v.ctses),
                v.accepted.to_string(),
                warnings.join(";"),
                flags.join(";"),
            ]
        })
    });
    csv_bytes(&PAIRS_HEADER, rows)
}

pub fn aggregates_csv(rows: &[AggregateRow]) -> Result<Vec<u8>, CorpusError> {
    csv_bytes(
        &AGGREGATES_HEADER,
        rows.iter().map(|a| {
            vec![
                a.dataset.clone(),
                a.model.clone(),
                a.metric.clone(),
                num(a.min),
                num(a.q1),
                num(a.median),
                num(a.q3),
                num(a.max),
                num(a.mean),
                num(a.pct_below),
                num(a.pct_at_or_above),
            ]
        }),
    )
}

pub fn failures_csv(failures: &[Failure]) -> Result<Vec<u8>, CorpusError> {
    csv_bytes(
        &FAILURES_HEADER,
        failures.iter().map(|f| {
            vec![
                f.pair_id.clone(),
                f.dataset.clone(),
                f.model.clone(),
                f.message.clone(),
            ]
        }),
    )
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    format: &'static str,
    config: ScoringConfig<'a>,
    fingerprints: BTreeMap<&'static str, String>,
    quartile_convention: &'static str,
    pair_count: usize,
    failure_count: usize,
    failed_pairs: Vec<&'a str>,
    aggregates: &'a [AggregateRow],
}

pub fn summary_json(
    outcome: &BatchOutcome,
    aggregates: &[AggregateRow],
    cfg: &RunConfig,
) -> Result<Vec<u8>, CorpusError> {
    let summary = Summary {
        format: "ctses-summary v1",
        config: cfg.scoring_view(),
        fingerprints: BTreeMap::from([("lex", cfg.lex.fingerprint()), ("run", cfg.fingerprint())]),
        quartile_convention: QUARTILE_CONVENTION,
        pair_count: outcome.results.len(),
        failure_count: outcome.failures.len(),
        failed_pairs: outcome
            .failures
            .iter()
            .map(|f| f.pair_id.as_str())
            .collect(),
        aggregates,
    };
    let mut bytes =
        serde_json::to_vec_pretty(&summary).map_err(|e| CorpusError::Report(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub const PAIRS_FILE: &str = "pairs.csv";
pub const AGGREGATES_FILE: &str = "aggregates.csv";
pub const FAILURES_FILE: &str = "failures.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Writes the four report files and returns their paths.
pub fn write_reports(
    outcome: &BatchOutcome,
    aggregates: &[AggregateRow],
    cfg: &RunConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CorpusError> {
    fs::create_dir_all(out_dir).map_err(|e| CorpusError::io(out_dir, e))?;
    let files = [
        (PAIRS_FILE, pairs_csv(&outcome.results)?),
        (AGGREGATES_FILE, aggregates_csv(aggregates)?),
        (FAILURES_FILE, failures_csv(&outcome.failures)?),
        (SUMMARY_FILE, summary_json(outcome, aggregates, cfg)?),
    ];
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| CorpusError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
