//! Subcommand definitions and handlers.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smellprop_core::causal::{causal_report, derive_seed, EstimateConfig, Outcome, RefuteConfig};
use smellprop_core::infogain::{ig_report, IgRow, SeverityDataset, SeverityRow, DEFAULT_BINS};
use smellprop_core::psc::{score_batch, Aggregate, BoundsScope, ScoreConfig, ScoreItem, DEFAULT_EPSILON, DEFAULT_LAMBDA};
use smellprop_core::robustness::{robustness_report, CiMethod, RobustnessConfig, VariantScores};
use smellprop_core::{align, in_generated_segment, SmellDiagnostic, TokenTrace};
use smellprop_inference::stub::{StubConfig, StubServer};
use smellprop_inference::{read_traces, Client, DecodingConfig, EndpointConfig, Strategy};
use smellprop_python::bridge::{read_records, DiagnosticsRecord};
use smellprop_python::features::extract_features_with;
use smellprop_python::sect::{transform, SiteSelector, SourceRange, TransformKind};
use smellprop_python::smells::{self, RuleSet, SYNTAX_ERROR_RULE};
use tracing::{info, warn};

use crate::atomic::{write_atomic, write_csv, write_jsonl};
use crate::corpus::{filter_corpus, read_samples, CorpusFilter, Sample};
use crate::frame::read_frames;
use crate::mitigation::{
    mitigation_svg, run_mitigation, summarize, MitigationConfig, MitigationSample, PairedRow, PromptId,
    PromptTemplate,
};
use crate::plot::{bar_chart_svg, boxplot_svg, BoxStats, Panel};

#[derive(Debug, Parser)]
#[command(name = "smellprop", version, about = "Measure how readily code models generate code smells")]
pub struct Cli {
    /// Base seed; every random task derives its own stream from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker bound for corpus-parallel steps and concurrent requests.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Exit with status 1 when any sample fails.
    #[arg(long, global = true)]
    pub strict: bool,
    /// `key = value` file of flag defaults; command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate linter diagnostics files and normalize them to JSONL records.
    Ingest(IngestArgs),
    /// Run the native smell detector over a corpus.
    Detect(DetectArgs),
    /// Align diagnostics to traces and compute propensity scores.
    Score(ScoreArgs),
    /// Write semantic-preserving variants of each snippet.
    Transform(TransformArgs),
    /// ANOVA of relative scores across transformation variants.
    Robustness(RobustnessArgs),
    /// Information gain of metric scores about smell severity.
    Infogain(InfogainArgs),
    /// Treatment effects with refutations from experiment frames.
    Causal(CausalArgs),
    /// Paired baseline vs. instruction-prompt completions against an endpoint.
    Mitigate(MitigateArgs),
    /// Markdown summary and figures from analysis outputs.
    Report(ReportArgs),
    /// Token-length and per-rule sampling filter for corpora.
    Filter(FilterArgs),
    /// Syntactic and lexical confounder features per snippet.
    Features(FeaturesArgs),
    /// Serve the deterministic stub completion endpoint.
    Stub(StubArgs),
}

impl Command {
    pub const NAMES: [&'static str; 12] = [
        "ingest",
        "detect",
        "score",
        "transform",
        "robustness",
        "infogain",
        "causal",
        "mitigate",
        "report",
        "filter",
        "features",
        "stub",
    ];
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Diagnostics JSON files, or directories of them.
    #[arg(long, required = true, num_args = 1..)]
    pub diagnostics: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// JSONL corpus, a `.py` file, or a directory of `.py` files.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated rule ids (default: every implemented rule).
    #[arg(long, value_delimiter = ',')]
    pub rules: Vec<String>,
    #[arg(long, default_value_t = smells::DEFAULT_MAX_LINE_LENGTH)]
    pub max_line_length: usize,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long)]
    pub diagnostics: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// `per-rule` or `global` reference bounds.
    #[arg(long, default_value = "per-rule")]
    pub bounds_scope: BoundsScope,
    /// Aggregate that decides `propense`: mean, median or relative.
    #[arg(long, default_value = "median")]
    pub aggregate: Aggregate,
    /// Keep only smells inside the generated segment of each trace.
    #[arg(long)]
    pub generated_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SelectorArg {
    All,
    First,
    Random,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Comma-separated transformation names, or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub kinds: Vec<String>,
    #[arg(long, value_enum, default_value_t = SelectorArg::All)]
    pub selector: SelectorArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CiArg {
    Normal,
    T,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    /// Scores CSV with `rule_id`, `variant` and the value column.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "psc_relative")]
    pub column: String,
    #[arg(long, default_value_t = 1e-6)]
    pub clamp_delta: f64,
    #[arg(long, value_enum, default_value_t = CiArg::Normal)]
    pub ci: CiArg,
}

#[derive(Debug, Args)]
pub struct InfogainArgs {
    /// Severity rows as JSONL, or one JSON dataset object.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics to rank (default: every metric in the dataset).
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Also write a bar chart of the gains.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CausalArgs {
    /// Frame CSVs; rows are grouped by their `treatment` column.
    #[arg(long, required = true, num_args = 1..)]
    pub frames: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Control level overriding each family's default.
    #[arg(long)]
    pub control: Option<String>,
    #[arg(long, default_value = "y1")]
    pub outcome: Outcome,
    #[arg(long, default_value_t = smellprop_core::causal::MIN_ROWS_PER_LEVEL)]
    pub min_rows: usize,
    #[arg(long, default_value_t = 0.3)]
    pub kappa: f64,
    #[arg(long, default_value_t = 20)]
    pub subset_rounds: usize,
}

#[derive(Debug, Args)]
pub struct MitigateArgs {
    /// Corpus whose samples carry `rule_id` and `source`.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub endpoint: String,
    #[arg(long, default_value = "default")]
    pub model: String,
    #[arg(long, default_value = "p0_minimal")]
    pub baseline: PromptId,
    #[arg(long, default_value = "p3_structured")]
    pub treatment: PromptId,
    /// Rule ids listed by the structured prompt.
    #[arg(long, value_delimiter = ',')]
    pub avoid: Vec<String>,
    #[arg(long, default_value = "greedy")]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 128)]
    pub max_new_tokens: u32,
    #[arg(long, default_value_t = 0.5)]
    pub cut_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Request timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
    /// Paired CSV output.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: PathBuf,
    /// Per-rule summary and incomplete pairs as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub anova: Option<PathBuf>,
    #[arg(long)]
    pub ig: Option<PathBuf>,
    #[arg(long)]
    pub causal: Option<PathBuf>,
    /// Paired mitigation CSV.
    #[arg(long)]
    pub mitigation: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// JSONL corpus with `rule_id` and `token_count` per sample.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 700)]
    pub max_tokens: usize,
    #[arg(long, default_value_t = 500)]
    pub per_rule_cap: usize,
    /// Where to write the filter report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// JSONL of `{"sample_id", "pos_counts"}` replacing the built-in tagger.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StubArgs {
    #[arg(long, default_value = "127.0.0.1:0")]
    pub addr: String,
    /// Corpus of snippets the stub model completes from memory.
    #[arg(long)]
    pub memorize: Option<PathBuf>,
    /// `TEXT=LOGPROB`: prompts containing TEXT get that generated logprob.
    #[arg(long)]
    pub marker: Vec<String>,
    #[arg(long, default_value_t = 0.8f64.ln())]
    pub generated_logprob: f64,
}

/// Settings shared by every handler.
#[derive(Debug, Clone, Copy)]
pub struct Globals {
    pub seed: u64,
    pub jobs: usize,
}

/// What a handler reports back: how many samples failed without aborting.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub failures: usize,
}

pub fn execute(command: Command, g: Globals) -> Result<RunSummary> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Detect(a) => detect(a),
        Command::Score(a) => score(a),
        Command::Transform(a) => transform_cmd(a, g),
        Command::Robustness(a) => robustness(a),
        Command::Infogain(a) => infogain(a),
        Command::Causal(a) => causal(a, g),
        Command::Mitigate(a) => mitigate(a, g),
        Command::Report(a) => report(a),
        Command::Filter(a) => filter(a, g),
        Command::Features(a) => features(a),
        Command::Stub(a) => stub(a),
    }
}

fn ok() -> Result<RunSummary> {
    Ok(RunSummary::default())
}

fn json_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json" || x == "jsonl"))
                .collect();
            inner.sort();
            out.extend(inner);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn ingest(a: IngestArgs) -> Result<RunSummary> {
    let mut records = Vec::new();
    for file in json_files(&a.diagnostics)? {
        for mut r in read_records(&file)? {
            let mut diags = r.diagnostics();
            smellprop_core::diagnostic::sort_diagnostics(&mut diags);
            let version = r.linter_version.take();
            let error = r.error.take();
            let mut sorted = DiagnosticsRecord::from_diagnostics(&r.sample_id, &diags, version.as_deref());
            sorted.error = error;
            records.push(sorted);
        }
    }
    info!(records = records.len(), "ingested diagnostics");
    write_jsonl(&a.out, &records)?;
    ok()
}

fn detect(a: DetectArgs) -> Result<RunSummary> {
    let rules = if a.rules.is_empty() {
        RuleSet::new(smells::RULES.iter().map(|(id, _)| *id), a.max_line_length)?
    } else {
        RuleSet::new(a.rules.iter().map(|r| r.trim()), a.max_line_length)?
    };
    let samples = read_samples(&a.corpus)?;
    let version = format!("smellprop-native {}", env!("CARGO_PKG_VERSION"));
    let results: Vec<Result<DiagnosticsRecord>> = samples
        .par_iter()
        .map(|s| {
            let diags = smells::detect(&s.sample_id, s.source()?, &rules);
            Ok(DiagnosticsRecord::from_diagnostics(&s.sample_id, &diags, Some(&version)))
        })
        .collect();
    let mut records = Vec::new();
    let mut failures = 0;
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                warn!("{e:#}");
                failures += 1;
            }
        }
    }
    write_jsonl(&a.out, &records)?;
    Ok(RunSummary { failures })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub sample_id: String,
    pub rule_id: String,
    pub variant: String,
    pub span_i: usize,
    pub span_j: usize,
    pub psc_mean: f64,
    pub psc_median: f64,
    pub psc_relative: f64,
    pub propense: bool,
}

fn score(a: ScoreArgs) -> Result<RunSummary> {
    let traces: Vec<TokenTrace> = read_traces(&a.traces)?.collect::<std::result::Result<_, _>>()?;
    let by_id: HashMap<&str, &TokenTrace> = traces.iter().map(|t| (t.sample_id(), t)).collect();
    let diags: Vec<SmellDiagnostic> = smellprop_python::bridge::ingest_diagnostics(&a.diagnostics)?;

    let mut failures = 0;
    let mut items = Vec::new();
    for d in diags.iter().filter(|d| d.rule_id != SYNTAX_ERROR_RULE) {
        let Some(trace) = by_id.get(d.sample_id.as_str()) else {
            warn!(sample = d.sample_id, "no trace for diagnostic");
            failures += 1;
            continue;
        };
        let span = match align(d, trace) {
            Ok(s) => s,
            Err(e) => {
                warn!(sample = d.sample_id, rule = d.rule_id, "alignment failed: {e}");
                failures += 1;
                continue;
            }
        };
        if a.generated_only {
            match in_generated_segment(&span, trace) {
                Ok(true) => {}
                Ok(false) => continue,
                Err(e) => {
                    warn!(sample = d.sample_id, "{e}");
                    failures += 1;
                    continue;
                }
            }
        }
        items.push(ScoreItem {
            trace,
            rule_id: &d.rule_id,
            span,
        });
    }
    let config = ScoreConfig {
        lambda: a.lambda,
        epsilon: a.epsilon,
        scope: a.bounds_scope,
        aggregate: a.aggregate,
    };
    let scores = score_batch(&items, &config)?;
    let rows: Vec<ScoreRow> = items
        .iter()
        .zip(scores)
        .map(|(it, s)| ScoreRow {
            sample_id: s.sample_id,
            rule_id: s.rule_id,
            variant: it.trace.meta().get("variant").cloned().unwrap_or_else(|| "original".into()),
            span_i: s.span_i,
            span_j: s.span_j,
            psc_mean: s.psc_mean,
            psc_median: s.psc_median,
            psc_relative: s.psc_relative,
            propense: s.propense,
        })
        .collect();
    info!(rows = rows.len(), "scored smells");
    write_csv(&a.out, &rows)?;
    Ok(RunSummary { failures })
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    sample_id: String,
    kind: TransformKind,
    file: String,
    applied_sites: Vec<SourceRange>,
}

fn transform_cmd(a: TransformArgs, g: Globals) -> Result<RunSummary> {
    let kinds: Vec<TransformKind> = if a.kinds.iter().any(|k| k.eq_ignore_ascii_case("all")) {
        TransformKind::ALL.to_vec()
    } else {
        a.kinds.iter().map(|k| k.parse()).collect::<std::result::Result<_, _>>()?
    };
    let samples = read_samples(&a.corpus)?;
    let tasks: Vec<(&Sample, TransformKind)> =
        samples.iter().flat_map(|s| kinds.iter().map(move |k| (s, *k))).collect();
    let results: Vec<Result<Option<(ManifestEntry, String)>>> = tasks
        .par_iter()
        .map(|(s, kind)| {
            let selector = match a.selector {
                SelectorArg::All => SiteSelector::All,
                SelectorArg::First => SiteSelector::First,
                SelectorArg::Random => {
                    SiteSelector::SeededRandom(derive_seed(g.seed, &["transform", &s.sample_id, kind.as_str()]))
                }
            };
            let out = transform(s.source()?, *kind, selector)
                .with_context(|| format!("{} {kind}", s.sample_id))?;
            if out.transformation.applied_sites.is_empty() {
                return Ok(None);
            }
            let file = format!("{}.{}.py", s.sample_id, kind);
            Ok(Some((
                ManifestEntry {
                    sample_id: s.sample_id.clone(),
                    kind: *kind,
                    file,
                    applied_sites: out.transformation.applied_sites,
                },
                out.source,
            )))
        })
        .collect();

    let mut manifest = Vec::new();
    let mut failures = 0;
    for r in results {
        match r {
            Ok(Some((entry, source))) => {
                write_atomic(&a.out_dir.join(&entry.file), source.as_bytes())?;
                manifest.push(entry);
            }
            Ok(None) => {}
            Err(e) => {
                warn!("{e:#}");
                failures += 1;
            }
        }
    }
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    write_atomic(&a.out_dir.join("manifest.json"), &json)?;
    info!(variants = manifest.len(), "wrote variants");
    Ok(RunSummary { failures })
}

fn read_csv_columns(path: &Path, wanted: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let idx: Vec<usize> = wanted
        .iter()
        .map(|w| {
            headers
                .iter()
                .position(|h| h == *w)
                .ok_or_else(|| anyhow!("{}: missing column `{w}`", path.display()))
        })
        .collect::<Result<_>>()?;
    reader
        .records()
        .enumerate()
        .map(|(k, r)| {
            let r = r.with_context(|| format!("{}: line {}", path.display(), k + 2))?;
            Ok(idx.iter().map(|&i| r.get(i).unwrap_or_default().to_owned()).collect())
        })
        .collect()
}

fn parse_num(s: &str, path: &Path) -> Result<f64> {
    s.trim()
        .parse()
        .with_context(|| format!("{}: `{s}` is not a number", path.display()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnovaRow {
    pub rule_id: String,
    pub f_stat: f64,
    pub p_value: f64,
    pub eta_squared: f64,
    pub ci_mean: f64,
    pub ci_half_width: f64,
    pub group_sizes: String,
    pub variants: String,
    pub ss_between: f64,
    pub ss_within: f64,
    pub robust: bool,
}

fn robustness(a: RobustnessArgs) -> Result<RunSummary> {
    let mut scores: VariantScores = BTreeMap::new();
    for row in read_csv_columns(&a.scores, &["rule_id", "variant", &a.column])? {
        let v = parse_num(&row[2], &a.scores)?;
        scores
            .entry(row[0].clone())
            .or_default()
            .entry(row[1].clone())
            .or_default()
            .push(v);
    }
    let config = RobustnessConfig {
        clamp_delta: a.clamp_delta,
        ci_method: match a.ci {
            CiArg::Normal => CiMethod::Normal,
            CiArg::T => CiMethod::StudentT,
        },
    };
    let join = |v: Vec<String>| v.join(";");
    let rows: Vec<AnovaRow> = robustness_report(&scores, &config)?
        .into_iter()
        .map(|r| AnovaRow {
            robust: r.robust(),
            rule_id: r.rule_id,
            f_stat: r.f_stat,
            p_value: r.p_value,
            eta_squared: r.eta_squared,
            ci_mean: r.ci95.0,
            ci_half_width: r.ci95.1,
            group_sizes: join(r.group_sizes.iter().map(usize::to_string).collect()),
            variants: join(r.variants),
            ss_between: r.ss_between,
            ss_within: r.ss_within,
        })
        .collect();
    write_csv(&a.out, &rows)?;
    ok()
}

fn read_dataset(path: &Path) -> Result<SeverityDataset> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let dataset = match serde_json::from_str::<SeverityDataset>(&text) {
        Ok(d) => d,
        Err(_) => SeverityDataset {
            rows: crate::corpus::parse_jsonl::<SeverityRow>(&text, &path.display().to_string())?,
        },
    };
    dataset.validate()?;
    Ok(dataset)
}

fn ig_bars(rows: &[IgRow]) -> Vec<(String, f64)> {
    rows.iter()
        .map(|r| (format!("{} {}", r.rule_id, r.metric), r.ig_bits))
        .collect()
}

fn infogain(a: InfogainArgs) -> Result<RunSummary> {
    let dataset = read_dataset(&a.dataset)?;
    let metrics: Vec<String> = if a.metrics.is_empty() {
        let mut all: Vec<String> = dataset
            .rows
            .iter()
            .flat_map(|r| r.metric_scores.keys().cloned())
            .collect();
        all.sort();
        all.dedup();
        all
    } else {
        a.metrics.clone()
    };
    let rows = ig_report(&dataset, &metrics, a.bins)?;
    write_csv(&a.out, &rows)?;
    if let Some(svg) = &a.svg {
        write_atomic(svg, bar_chart_svg("Information gain (bits)", &ig_bars(&rows)).as_bytes())?;
    }
    ok()
}

fn causal(a: CausalArgs, g: Globals) -> Result<RunSummary> {
    let mut frames = Vec::new();
    for p in &a.frames {
        frames.extend(read_frames(p, a.control.as_deref())?);
    }
    let config = EstimateConfig {
        outcome: a.outcome,
        min_rows: a.min_rows,
    };
    let refute = RefuteConfig {
        kappa: a.kappa,
        subset_rounds: a.subset_rounds,
        ..RefuteConfig::default()
    };
    // task seeds depend only on (seed, treatment, rule, level), so the
    // parallel split does not change any estimate
    let per_frame: Vec<_> = frames
        .par_iter()
        .map(|f| causal_report(std::slice::from_ref(f), &config, &refute, g.seed))
        .collect::<std::result::Result<_, _>>()?;
    let rows: Vec<_> = per_frame.into_iter().flatten().collect();
    write_csv(&a.out, &rows)?;
    ok()
}

fn mitigate(a: MitigateArgs, g: Globals) -> Result<RunSummary> {
    let samples: Vec<MitigationSample> = read_samples(&a.corpus)?
        .into_iter()
        .map(|s| {
            Ok(MitigationSample {
                rule_id: s
                    .rule_id
                    .clone()
                    .ok_or_else(|| anyhow!("sample {} has no rule_id", s.sample_id))?,
                source: s.source()?.to_owned(),
                sample_id: s.sample_id,
            })
        })
        .collect::<Result<_>>()?;
    let mut treatment = PromptTemplate::builtin(a.treatment);
    if !a.avoid.is_empty() {
        treatment = treatment.with_avoid_list(a.avoid.clone());
    }
    let mut decoding = DecodingConfig::new(a.strategy, a.max_new_tokens);
    if matches!(a.strategy, Strategy::Sampling | Strategy::TopK | Strategy::TopP) {
        decoding = decoding.with_seed(derive_seed(g.seed, &["mitigate"]));
    }
    let config = MitigationConfig {
        baseline: PromptTemplate::builtin(a.baseline),
        treatment,
        decoding,
        cut_fraction: a.cut_fraction,
        lambda: a.lambda,
        jobs: g.jobs,
    };
    let mut endpoint = EndpointConfig::new(a.endpoint.clone(), a.model.clone()).with_env_key();
    endpoint.request_timeout = std::time::Duration::from_secs_f64(a.timeout);
    endpoint.retries = a.retries;
    endpoint.max_concurrent = g.jobs.max(1);

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(g.jobs.clamp(1, 8))
        .enable_all()
        .build()?;
    let outcome = runtime.block_on(async {
        let client = Client::new(endpoint)?;
        run_mitigation(&client, &samples, &config).await
    })?;

    write_csv(&a.out, &outcome.rows)?;
    write_atomic(&a.svg, mitigation_svg(&outcome).as_bytes())?;
    if let Some(p) = &a.summary {
        let mut json = serde_json::to_vec_pretty(&outcome)?;
        json.push(b'\n');
        write_atomic(p, &json)?;
    }
    for s in &outcome.summary {
        info!(
            rule = s.rule_id,
            pairs = s.pairs,
            baseline = s.baseline_median,
            treatment = s.treatment_median,
            "median propensity"
        );
    }
    Ok(RunSummary {
        failures: outcome.incomplete.len(),
    })
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

fn table(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut s = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
    for r in rows {
        s.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    s
}

fn report(a: ReportArgs) -> Result<RunSummary> {
    let mut md = String::from("# Smell propensity report\n");

    if let Some(p) = &a.anova {
        let rows = read_csv_columns(p, &["rule_id", "f_stat", "p_value", "eta_squared", "ci_mean", "ci_half_width", "robust"])?;
        let robust = rows.iter().filter(|r| r[6] == "true").count();
        md.push_str(&format!(
            "\n## Robustness to semantic-preserving transformations\n\n{robust} of {} smell types are robust.\n\n",
            rows.len()
        ));
        let body = rows
            .iter()
            .map(|r| {
                Ok(vec![
                    r[0].clone(),
                    fmt(parse_num(&r[1], p)?),
                    fmt(parse_num(&r[2], p)?),
                    fmt(parse_num(&r[3], p)?),
                    format!("{} ± {}", fmt(parse_num(&r[4], p)?), fmt(parse_num(&r[5], p)?)),
                    r[6].clone(),
                ])
            })
            .collect::<Result<_>>()?;
        md.push_str(&table(&["rule", "F", "p", "eta^2", "CI95", "robust"], body));
    }

    if let Some(p) = &a.ig {
        let rows = read_csv_columns(p, &["rule_id", "metric", "ig_bits", "h_s_bits", "n"])?;
        md.push_str("\n## Information gain about severity\n\n");
        let mut bars = Vec::new();
        let mut body = Vec::new();
        for r in &rows {
            let ig = parse_num(&r[2], p)?;
            bars.push((format!("{} {}", r[0], r[1]), ig));
            body.push(vec![r[0].clone(), r[1].clone(), fmt(ig), fmt(parse_num(&r[3], p)?), r[4].clone()]);
        }
        md.push_str(&table(&["rule", "metric", "IG (bits)", "H(S)", "n"], body));
        write_atomic(&a.out_dir.join("infogain.svg"), bar_chart_svg("Information gain (bits)", &bars).as_bytes())?;
        md.push_str("\n![information gain](infogain.svg)\n");
    }

    if let Some(p) = &a.causal {
        let rows = read_csv_columns(p, &["rule_id", "treatment", "level", "control", "rho", "ate", "significance", "robust"])?;
        md.push_str("\n## Causal effects\n\n");
        let body = rows
            .iter()
            .map(|r| {
                Ok(vec![
                    r[0].clone(),
                    r[1].clone(),
                    format!("{} vs {}", r[2], r[3]),
                    fmt(parse_num(&r[4], p)?),
                    format!("{}{}", fmt(parse_num(&r[5], p)?), r[6]),
                    r[7].clone(),
                ])
            })
            .collect::<Result<_>>()?;
        md.push_str(&table(&["rule", "treatment", "level", "rho", "ATE", "robust"], body));
        let findings: Vec<String> = rows
            .iter()
            .filter(|r| r[7] == "true" && !r[6].is_empty())
            .map(|r| format!("- {} {} {}: ATE {}{}", r[0], r[1], r[2], r[5], r[6]))
            .collect();
        md.push_str("\nRobust significant findings:\n\n");
        md.push_str(&if findings.is_empty() { "- none\n".to_owned() } else { findings.join("\n") + "\n" });
    }

    if let Some(p) = &a.mitigation {
        let raw = read_csv_columns(p, &["sample_id", "rule_id", "condition", "psc_median", "propense"])?;
        let rows: Vec<PairedRow> = raw
            .iter()
            .map(|r| {
                Ok(PairedRow {
                    sample_id: r[0].clone(),
                    rule_id: r[1].clone(),
                    condition: r[2].clone(),
                    psc_median: parse_num(&r[3], p)?,
                    propense: r[4] == "true",
                })
            })
            .collect::<Result<_>>()?;
        let mut conditions: Vec<&str> = Vec::new();
        for r in &rows {
            if !conditions.contains(&r.condition.as_str()) {
                conditions.push(&r.condition);
            }
        }
        if conditions.len() != 2 {
            bail!("{}: expected exactly two conditions, found {conditions:?}", p.display());
        }
        let summary = summarize(&rows, conditions[0], conditions[1], a.lambda);
        md.push_str(&format!("\n## Mitigation: {} vs {}\n\n", conditions[0], conditions[1]));
        let body = summary
            .iter()
            .map(|s| {
                vec![
                    s.rule_id.clone(),
                    s.pairs.to_string(),
                    fmt(s.baseline_median),
                    fmt(s.treatment_median),
                    fmt(s.median_gap),
                    fmt(s.treatment_below_lambda),
                ]
            })
            .collect();
        md.push_str(&table(&["rule", "pairs", "baseline median", "treatment median", "gap", "below lambda"], body));
        let panels: Vec<Panel<'_>> = summary
            .iter()
            .map(|s| Panel {
                title: &s.rule_id,
                boxes: vec![
                    (conditions[0], BoxStats::new(&values(&rows, &s.rule_id, conditions[0]))),
                    (conditions[1], BoxStats::new(&values(&rows, &s.rule_id, conditions[1]))),
                ],
            })
            .collect();
        let svg = boxplot_svg("Median propensity by prompt", &panels, Some(a.lambda));
        write_atomic(&a.out_dir.join("mitigation.svg"), svg.as_bytes())?;
        md.push_str("\n![mitigation](mitigation.svg)\n");
    }

    write_atomic(&a.out_dir.join("report.md"), md.as_bytes())?;
    ok()
}

fn values(rows: &[PairedRow], rule: &str, condition: &str) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.rule_id == rule && r.condition == condition)
        .map(|r| r.psc_median)
        .collect()
}

fn filter(a: FilterArgs, g: Globals) -> Result<RunSummary> {
    let samples = read_samples(&a.corpus)?;
    let config = CorpusFilter {
        max_tokens: a.max_tokens,
        per_rule_cap: a.per_rule_cap,
        seed: g.seed,
    };
    let (kept, report) = filter_corpus(samples, &config)?;
    write_jsonl(&a.out, &kept)?;
    if let Some(p) = &a.report {
        let mut json = serde_json::to_vec_pretty(&report)?;
        json.push(b'\n');
        write_atomic(p, &json)?;
    }
    ok()
}

#[derive(Deserialize)]
struct Annotation {
    sample_id: String,
    pos_counts: BTreeMap<smellprop_core::causal::PosTag, usize>,
}

fn features(a: FeaturesArgs) -> Result<RunSummary> {
    let samples = read_samples(&a.corpus)?;
    let annotations: HashMap<String, BTreeMap<_, _>> = match &a.annotations {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            crate::corpus::parse_jsonl::<Annotation>(&text, &p.display().to_string())?
                .into_iter()
                .map(|x| (x.sample_id, x.pos_counts))
                .collect()
        }
        None => HashMap::new(),
    };
    let rows: Vec<Result<Vec<String>>> = samples
        .par_iter()
        .map(|s| {
            let f = extract_features_with(s.source()?, annotations.get(&s.sample_id));
            let mut row = vec![s.sample_id.clone()];
            row.extend(f.values().iter().map(|v| v.to_string()));
            Ok(row)
        })
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sample_id".to_owned()];
    header.extend(smellprop_core::causal::FeatureVector::names());
    w.write_record(&header)?;
    let mut failures = 0;
    for r in rows {
        match r {
            Ok(row) => w.write_record(&row)?,
            Err(e) => {
                warn!("{e:#}");
                failures += 1;
            }
        }
    }
    write_atomic(&a.out, &w.into_inner().map_err(|e| anyhow!("{e}"))?)?;
    Ok(RunSummary { failures })
}

fn stub(a: StubArgs) -> Result<RunSummary> {
    let mut config = StubConfig {
        generated_logprob: a.generated_logprob,
        ..StubConfig::default()
    };
    if let Some(p) = &a.memorize {
        config.memorized = read_samples(p)?
            .iter()
            .map(|s| s.source().map(str::to_owned))
            .collect::<Result<_>>()?;
    }
    for m in &a.marker {
        let (text, lp) = m
            .rsplit_once('=')
            .ok_or_else(|| anyhow!("marker `{m}` is not TEXT=LOGPROB"))?;
        config.prompt_markers.push((text.to_owned(), lp.parse()?));
    }
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let server = StubServer::bind(config, &a.addr).await?;
        println!("{}", server.base_url());
        server.wait().await;
        Ok::<_, anyhow::Error>(())
    })?;
    ok()
}
