//! `ctses`: score refactored Java tests against their originals.
//!
//! Exit codes: 0 pass, 1 gate failure, 2 usage or processing error,
//! 3 batch finished with some failed pairs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ctses_core::corpus::{
    aggregate_all, aggregates_csv, load_embeddings, load_manifest, pairs_csv, run_batch,
    score_sources, write_reports, AggregateRow, PairResult, RunConfig,
};
use ctses_core::ctses::{
    builtin_profile, builtin_profiles, ThresholdConfig, Verdict, WeightProfile,
};
use ctses_core::dataflow::extract_dataflow;
use ctses_core::lexer::{lex, LexConfig};
use ctses_core::syntax::parse;
use ctses_core::textmetrics::MetricConfig;
use ctses_core::ComponentScores;

const EXIT_GATE_FAIL: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

// Stdout writes that exit quietly once the reader has gone away, as in
// `ctses score ... | head`.
macro_rules! out {
    ($($arg:tt)*) => {
        if write!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(i32::from(EXIT_ERROR));
        }
    };
}

macro_rules! outln {
    ($($arg:tt)*) => {
        if writeln!(std::io::stdout(), $($arg)*).is_err() {
            std::process::exit(i32::from(EXIT_ERROR));
        }
    };
}

#[derive(Debug, Parser)]
#[command(
    name = "ctses",
    version,
    about = "Composite similarity scoring for refactored unit tests"
)]
struct Cli {
    /// TOML run configuration; command-line flags override it.
    #[arg(long, global = true, env = "CTSES_CONFIG")]
    config: Option<PathBuf>,
    /// Profile to use (repeatable). Built-in names or names from the config file.
    #[arg(long = "profile", global = true)]
    profiles: Vec<String>,
    /// Custom weights `alpha,beta,gamma` for CodeBLEU, METEOR and ROUGE-L.
    #[arg(long, global = true, value_parser = parse_weights, conflicts_with = "profiles")]
    weights: Option<[f64; 3]>,
    /// Drop comment words from the token stream.
    #[arg(long, global = true)]
    no_comments: bool,
    /// Score unparsable files from their n-gram components instead of failing.
    #[arg(long, global = true)]
    lenient_parse: bool,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score one pair and print every sub-metric and verdict.
    Score {
        original: PathBuf,
        refactored: PathBuf,
    },
    /// Score every pair in a manifest and write reports.
    Batch {
        manifest: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// JSON Lines sidecar of precomputed embedding vectors.
        #[arg(long)]
        embeddings: Option<PathBuf>,
    },
    /// Pass or fail one pair under the first configured profile.
    Gate {
        original: PathBuf,
        refactored: PathBuf,
        /// Also fail on any warning.
        #[arg(long)]
        strict: bool,
    },
    /// List the built-in weight profiles.
    Profiles,
    /// Inspect intermediate representations of one file.
    #[command(subcommand)]
    Debug(DebugCommand),
}

#[derive(Debug, Subcommand)]
enum DebugCommand {
    Tokens { file: PathBuf },
    Tree { file: PathBuf },
    Dataflow { file: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

/// Config file layout: the run configuration plus defaults for the
/// flags that have no counterpart in it.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    lex: LexConfig,
    metric: MetricConfig,
    thresholds: ThresholdConfig,
    profiles: Option<Vec<WeightProfile>>,
    lenient_parse: bool,
    workers: Option<usize>,
    format: Option<Format>,
    /// Names selecting which profiles are active, like repeated `--profile`.
    select: Vec<String>,
}

fn parse_weights(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b, g] = parts.as_slice() else {
        return Err(format!("expected three comma-separated weights, got {s:?}"));
    };
    let num = |x: &str| x.parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok([num(a)?, num(b)?, num(g)?])
}

struct Settings {
    run: RunConfig,
    format: Format,
}

fn resolve(cli: &Cli) -> Result<Settings, String> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let available = file.profiles.clone().unwrap_or_else(builtin_profiles);
    let lookup = |name: &str| -> Result<WeightProfile, String> {
        available
            .iter()
            .find(|p| p.name == name)
            .cloned()
            .map_or_else(|| builtin_profile(name).map_err(|e| e.to_string()), Ok)
    };
    let selection = if cli.profiles.is_empty() {
        &file.select
    } else {
        &cli.profiles
    };
    let profiles = if let Some([alpha, beta, gamma]) = cli.weights {
        let p = WeightProfile::new("custom", alpha, beta, gamma).map_err(|e| e.to_string())?;
        vec![p]
    } else if selection.is_empty() {
        available.clone()
    } else {
        selection
            .iter()
            .map(|n| lookup(n))
            .collect::<Result<_, _>>()?
    };

    let mut run = RunConfig {
        lex: file.lex,
        metric: file.metric,
        thresholds: file.thresholds,
        profiles,
        lenient_parse: file.lenient_parse || cli.lenient_parse,
        workers: cli.workers.or(file.workers).unwrap_or(1),
    };
    if cli.no_comments {
        run.lex.include_comments = false;
    }
    run.validate().map_err(|e| e.to_string())?;
    Ok(Settings {
        run,
        format: cli.format.or(file.format).unwrap_or_default(),
    })
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    if let Command::Profiles = cli.command {
        print_profiles(cli.format.unwrap_or_default())?;
        return Ok(0);
    }
    if let Command::Debug(cmd) = &cli.command {
        return debug(cmd, cli);
    }
    let settings = resolve(cli)?;
    match &cli.command {
        Command::Score {
            original,
            refactored,
        } => {
            let result = score_files(original, refactored, &settings.run)?;
            print_pair(&result, original, refactored, &settings)?;
            Ok(0)
        }
        Command::Gate {
            original,
            refactored,
            strict,
        } => {
            let result = score_files(original, refactored, &settings.run)?;
            let verdict = &result.verdicts[0];
            let pass = verdict.accepted && (!strict || verdict.warnings.is_empty());
            outln!("{}", gate_line(verdict, pass, *strict));
            Ok(if pass { 0 } else { EXIT_GATE_FAIL })
        }
        Command::Batch {
            manifest,
            out,
            embeddings,
        } => batch(manifest, out, embeddings.as_deref(), &settings),
        Command::Profiles | Command::Debug(_) => unreachable!("handled above"),
    }
}

fn score_files(original: &Path, refactored: &Path, cfg: &RunConfig) -> Result<PairResult, String> {
    let orig = read(original)?;
    let refd = read(refactored)?;
    let (components, verdicts) = score_sources(&orig, &refd, cfg).map_err(|e| e.to_string())?;
    Ok(PairResult {
        pair_id: String::from("pair"),
        dataset: String::new(),
        model: String::new(),
        components,
        verdicts,
    })
}

fn batch(
    manifest: &Path,
    out: &Path,
    embeddings: Option<&Path>,
    settings: &Settings,
) -> Result<u8, String> {
    let records = load_manifest(manifest).map_err(|e| e.to_string())?;
    let vectors = embeddings
        .map(load_embeddings)
        .transpose()
        .map_err(|e| e.to_string())?;
    let outcome =
        run_batch(&records, &settings.run, vectors.as_ref()).map_err(|e| e.to_string())?;
    let aggregates = aggregate_all(&outcome.results, &settings.run);
    write_reports(&outcome, &aggregates, &settings.run, out).map_err(|e| e.to_string())?;

    match settings.format {
        Format::Table => print_aggregates(&aggregates),
        Format::Json => outln!(
            "{}",
            serde_json::to_string_pretty(&aggregates).map_err(|e| e.to_string())?
        ),
        Format::Csv => out!(
            "{}",
            String::from_utf8_lossy(&aggregates_csv(&aggregates).map_err(|e| e.to_string())?)
        ),
    }
    for f in &outcome.failures {
        eprintln!("failed: {f}");
    }
    eprintln!(
        "{} scored, {} failed; reports in {}",
        outcome.results.len(),
        outcome.failures.len(),
        out.display()
    );
    Ok(if outcome.failures.is_empty() {
        0
    } else {
        EXIT_PARTIAL
    })
}

fn debug(cmd: &DebugCommand, cli: &Cli) -> Result<u8, String> {
    let (DebugCommand::Tokens { file }
    | DebugCommand::Tree { file }
    | DebugCommand::Dataflow { file }) = cmd;
    let settings = resolve(cli)?;
    let source = read(file)?;
    let tokens = lex(&source, &settings.run.lex).map_err(|e| format!("{}: {e}", file.display()))?;
    match cmd {
        DebugCommand::Tokens { .. } => {
            for t in &tokens.tokens {
                outln!("{}:{}\t{:?}\t{}", t.line, t.column, t.kind, t.text);
            }
        }
        DebugCommand::Tree { .. } | DebugCommand::Dataflow { .. } => {
            let tree = parse(&tokens).map_err(|e| format!("{}: {e}", file.display()))?;
            if matches!(cmd, DebugCommand::Tree { .. }) {
                outln!("{}", tree.root.to_sexpr());
            } else {
                out!("{}", extract_dataflow(&tree).to_lines());
            }
        }
    }
    Ok(0)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn joined<I: IntoIterator<Item = &'static str>>(items: I) -> String {
    let v: Vec<_> = items.into_iter().collect();
    if v.is_empty() {
        "-".into()
    } else {
        v.join(",")
    }
}

fn gate_line(v: &Verdict, pass: bool, strict: bool) -> String {
    format!(
        "{} profile={} ctses={:.4} accepted={} warnings={}{}",
        if pass { "PASS" } else { "FAIL" },
        v.profile_name,
        v.ctses,
        v.accepted,
        joined(v.warnings.iter().map(|w| w.as_str())),
        if strict { " strict" } else { "" }
    )
}

#[derive(Serialize)]
struct VerdictView<'a> {
    profile: &'a str,
    ctses: f64,
    accepted: bool,
    warnings: Vec<&'static str>,
}

#[derive(Serialize)]
struct ScoreView<'a> {
    original: &'a Path,
    refactored: &'a Path,
    components: &'a ComponentScores,
    verdicts: Vec<VerdictView<'a>>,
}

fn print_pair(
    result: &PairResult,
    original: &Path,
    refactored: &Path,
    settings: &Settings,
) -> Result<(), String> {
    match settings.format {
        Format::Json => {
            let view = ScoreView {
                original,
                refactored,
                components: &result.components,
                verdicts: result
                    .verdicts
                    .iter()
                    .map(|v| VerdictView {
                        profile: &v.profile_name,
                        ctses: v.ctses,
                        accepted: v.accepted,
                        warnings: v.warnings.iter().map(|w| w.as_str()).collect(),
                    })
                    .collect(),
            };
            outln!(
                "{}",
                serde_json::to_string_pretty(&view).map_err(|e| e.to_string())?
            );
        }
        Format::Csv => {
            let bytes = pairs_csv(std::slice::from_ref(result)).map_err(|e| e.to_string())?;
            out!("{}", String::from_utf8_lossy(&bytes));
        }
        Format::Table => {
            let c = &result.components;
            outln!("original    {}", original.display());
            outln!("refactored  {}", refactored.display());
            outln!();
            for (name, value) in [
                ("ngram", Some(c.ngram)),
                ("weighted_ngram", Some(c.weighted_ngram)),
                ("syntax", Some(c.syntax)),
                ("dataflow", Some(c.dataflow)),
                ("codebleu", Some(c.codebleu)),
                ("meteor", Some(c.meteor)),
                ("rouge_l", Some(c.rouge_l)),
                ("cosine", c.cosine),
            ] {
                outln!("{name:<16}{}", opt(value));
            }
            outln!(
                "{:<16}{}",
                "flags",
                joined(c.flags.iter().map(|f| f.as_str()))
            );
            outln!();
            outln!(
                "{:<12}{:>7}{:>7}{:>7}{:>9}  {:<8}warnings",
                "profile",
                "alpha",
                "beta",
                "gamma",
                "ctses",
                "verdict"
            );
            for v in &result.verdicts {
                let p = settings
                    .run
                    .profiles
                    .iter()
                    .find(|p| p.name == v.profile_name);
                let w = |f: fn(&WeightProfile) -> f64| opt(p.map(f));
                outln!(
                    "{:<12}{:>7}{:>7}{:>7}{:>9.4}  {:<8}{}",
                    v.profile_name,
                    w(|p| p.alpha),
                    w(|p| p.beta),
                    w(|p| p.gamma),
                    v.ctses,
                    if v.accepted { "accept" } else { "reject" },
                    joined(v.warnings.iter().map(|w| w.as_str()))
                );
            }
        }
    }
    Ok(())
}

fn print_aggregates(rows: &[AggregateRow]) {
    outln!(
        "{:<12}{:<14}{:<16}{:>6}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}{:>9}",
        "dataset",
        "model",
        "metric",
        "n",
        "min",
        "q1",
        "median",
        "q3",
        "max",
        "mean",
        "%>=thr"
    );
    for r in rows {
        outln!(
            "{:<12}{:<14}{:<16}{:>6}{:>8.4}{:>8.4}{:>8.4}{:>8.4}{:>8.4}{:>8.4}{:>9.2}",
            r.dataset,
            r.model,
            r.metric,
            r.count,
            r.min,
            r.q1,
            r.median,
            r.q3,
            r.max,
            r.mean,
            r.pct_at_or_above
        );
    }
}

fn print_profiles(format: Format) -> Result<(), String> {
    let profiles = builtin_profiles();
    match format {
        Format::Json => outln!(
            "{}",
            serde_json::to_string_pretty(&profiles).map_err(|e| e.to_string())?
        ),
        Format::Csv => {
            outln!("name,alpha,beta,gamma");
            for p in &profiles {
                outln!("{},{},{},{}", p.name, p.alpha, p.beta, p.gamma);
            }
        }
        Format::Table => {
            outln!(
                "{:<10}{:>8}{:>8}{:>8}  description",
                "name",
                "alpha",
                "beta",
                "gamma"
            );
            for p in &profiles {
                let description = match p.name.as_str() {
                    "ctses1" => "Semantic-Prioritized",
                    "ctses2" => "Readability-Aware",
                    _ => "Uniform average",
                };
                outln!(
                    "{:<10}{:>8.4}{:>8.4}{:>8.4}  {description}",
                    p.name,
                    p.alpha,
                    p.beta,
                    p.gamma
                );
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_flag_parsing() {
        assert_eq!(parse_weights("0.5,0.3,0.2").unwrap(), [0.5, 0.3, 0.2]);
        assert_eq!(parse_weights(" 1, 0 ,0").unwrap(), [1.0, 0.0, 0.0]);
        assert!(parse_weights("0.5,0.5").is_err());
        assert!(parse_weights("a,b,c").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
