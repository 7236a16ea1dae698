//! Acceptance checks. Runs as a plain binary (no libtest harness) and prints
//! one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use smellprop_core::align::{align, LineIndex};
use smellprop_core::causal::synthetic::{planted_frame, PlantedScm};
use smellprop_core::causal::{estimate_ate, refute, EstimateConfig, RefutationKind, RefuteConfig};
use smellprop_core::infogain::{ig_report, information_gain, label_entropy, SeverityDataset, SeverityRow};
use smellprop_core::psc::{self, score_batch, Aggregate, BoundsScope, ReferenceBounds, ScoreConfig, ScoreItem};
use smellprop_core::robustness::one_way_anova;
use smellprop_core::{SeverityLabel, SmellDiagnostic, TokenSpan, TokenTrace};
use smellprop_inference::stub::{BackgroundStub, StubConfig};
use smellprop_python::bridge::read_records;
use smellprop_python::sect::{
    check_equivalence_batch, transform, CallSpec, EquivalenceCase, SiteSelector, TransformKind, DEFAULT_TIMEOUT_SECS,
};
use smellprop_python::smells::{agreement, detect, RuleAgreement, RuleSet, RULES};
use smellprop_python::{syntax, Error as PyError};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(started: Instant, limit: f64) -> Result<(), String> {
    let t = started.elapsed().as_secs_f64();
    ensure(t < limit, || format!("took {t:.2}s, limit {limit}s"))
}

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

// ---------------------------------------------------------------- 1

fn random_trace(rng: &mut ChaCha8Rng, id: usize) -> (TokenTrace, Vec<f64>) {
    let n = rng.random_range(1..60);
    let texts: Vec<String> = (0..n).map(|k| format!("t{}_{k} ", rng.random_range(0..1000))).collect();
    let probs: Vec<f64> = (0..n).map(|_| rng.random_range(1e-6..=1.0f64)).collect();
    let pieces: Vec<(&str, f64)> = texts.iter().zip(&probs).map(|(t, p)| (t.as_str(), p.ln())).collect();
    let trace = TokenTrace::from_pieces(&format!("r{id}"), &pieces, None).expect("valid trace");
    // what the trace will report back, so the oracle sees the same numbers
    let stored = trace.tokens().iter().map(|t| t.logprob.exp()).collect();
    (trace, stored)
}

fn oracle_median(v: &[f64]) -> f64 {
    // brute force: an element with at least half of the values on each side
    let n = v.len();
    let rank = |x: f64| (v.iter().filter(|y| **y < x).count(), v.iter().filter(|y| **y <= x).count());
    let kth = |k: usize| {
        *v.iter()
            .find(|x| {
                let (lt, le) = rank(**x);
                lt <= k && k < le
            })
            .expect("order statistic exists")
    };
    if n % 2 == 1 {
        kth(n / 2)
    } else {
        (kth(n / 2 - 1) + kth(n / 2)) / 2.0
    }
}

fn criterion_psc() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases: Vec<(TokenTrace, Vec<f64>, TokenSpan)> = (0..1000)
        .map(|id| {
            let (trace, probs) = random_trace(&mut rng, id);
            let i = rng.random_range(0..probs.len());
            let j = rng.random_range(i..probs.len());
            let span = TokenSpan { i, j, coverage: smellprop_core::Coverage::Exact };
            (trace, probs, span)
        })
        .collect();

    let tol = 1e-12;
    let mut worst: f64 = 0.0;
    for (trace, probs, span) in &cases {
        let window = &probs[span.i..=span.j];
        let mean = window.iter().sum::<f64>() / window.len() as f64;
        worst = worst.max((psc::psc_mean(trace, span).unwrap() - mean).abs());
        worst = worst.max((psc::psc_median(trace, span).unwrap() - oracle_median(window)).abs());

        // relative against random explicit bounds
        let bounds: Vec<(f64, f64)> = (0..window.len())
            .map(|_| {
                let a = rng.random::<f64>();
                let b = rng.random::<f64>();
                (a.min(b), a.max(b))
            })
            .collect();
        let rb = ReferenceBounds::new(bounds.clone(), 1e-9, BoundsScope::GlobalBatch).unwrap();
        let mut expect = 0.0;
        for (p, (lo, hi)) in window.iter().zip(&bounds) {
            expect += (p - lo) / (hi - lo + 1e-9);
        }
        expect /= window.len() as f64;
        worst = worst.max((psc::psc_relative(trace, span, &rb).unwrap() - expect).abs());

        // permutation: order inside the span never matters
        let mut shuffled = window.to_vec();
        shuffled.shuffle(&mut rng);
        ensure((psc::mean(&shuffled) - mean).abs() < tol, || "mean depends on order".into())?;
        ensure(psc::median(&shuffled) == psc::median(window), || "median depends on order".into())?;

        // degenerate bounds: p_min == p_max == p gives exactly 0
        let flat = ReferenceBounds::new(window.iter().map(|p| (*p, *p)).collect(), 1e-9, BoundsScope::GlobalBatch).unwrap();
        ensure(psc::relative(window, &flat).unwrap() == 0.0, || "degenerate bounds are not 0".into())?;
    }

    // batch scoring with bounds taken from the batch itself
    let items: Vec<ScoreItem<'_>> = cases
        .iter()
        .map(|(t, _, s)| ScoreItem { trace: t, rule_id: "R", span: *s })
        .collect();
    let config = ScoreConfig { scope: BoundsScope::GlobalBatch, aggregate: Aggregate::Relative, ..ScoreConfig::default() };
    let scored = score_batch(&items, &config).unwrap();
    let mut positions: Vec<(f64, f64)> = Vec::new();
    for (_, probs, s) in &cases {
        for (k, p) in probs[s.i..=s.j].iter().enumerate() {
            if k == positions.len() {
                positions.push((*p, *p));
            }
            positions[k] = (positions[k].0.min(*p), positions[k].1.max(*p));
        }
    }
    for ((_, probs, s), got) in cases.iter().zip(&scored) {
        let w = &probs[s.i..=s.j];
        let expect = w
            .iter()
            .enumerate()
            .map(|(k, p)| (p - positions[k].0) / (positions[k].1 - positions[k].0 + config.epsilon))
            .sum::<f64>()
            / w.len() as f64;
        worst = worst.max((got.psc_relative - expect).abs());
        ensure(got.propense == (got.psc_relative >= config.lambda), || "propense flag disagrees".into())?;
    }

    ensure(worst <= tol, || format!("max deviation {worst:e}"))?;
    within_time(started, 5.0)?;
    Ok(format!("1000 traces, max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- 2

#[derive(Deserialize)]
struct SectCase {
    id: String,
    source: String,
    calls: Vec<CallSpec>,
}

fn criterion_sect() -> Check {
    let started = Instant::now();
    let table = [
        ("a += 9", TransformKind::Add2Equal, "a = a + 9"),
        ("a == b", TransformKind::SwitchEqualExp, "b == a"),
        ("x = a + b * c", TransformKind::InfixDividing, "temp = b * c\nx = a + temp"),
        ("a > b", TransformKind::SwitchRelation, "b < a"),
        (
            "def f():\n    number = 1\n    return number\n",
            TransformKind::RenameVariable1,
            "def f():\n    n = 1\n    return n\n",
        ),
        (
            "def f():\n    number = 1\n    return number\n",
            TransformKind::RenameVariable2,
            "def f():\n    myNumber = 1\n    return myNumber\n",
        ),
    ];
    for (src, kind, want) in table {
        let got = transform(src, kind, SiteSelector::All).map_err(|e| e.to_string())?.source;
        ensure(got == want, || format!("{kind}: {src:?} gave {got:?}"))?;
    }

    let path = workspace().join("crates/python/tests/sect_corpus/corpus.jsonl");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let corpus: Vec<SectCase> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    ensure(corpus.len() >= 100, || format!("corpus has {} snippets", corpus.len()))?;

    let mut outputs = 0;
    let mut cases = Vec::new();
    for c in &corpus {
        for kind in TransformKind::ALL {
            for sel in [SiteSelector::All, SiteSelector::First, SiteSelector::SeededRandom(7)] {
                let out = match transform(&c.source, kind, sel) {
                    Ok(o) => o,
                    Err(PyError::RenameCollision { .. }) => continue,
                    Err(e) => return Err(format!("{} {kind}: {e}", c.id)),
                };
                outputs += 1;
                ensure(syntax::parse(&out.source).is_ok(), || format!("{} {kind}: output does not parse", c.id))?;
                if out.source != c.source {
                    cases.push(EquivalenceCase {
                        id: format!("{}/{kind}/{sel:?}", c.id),
                        original: c.source.clone(),
                        transformed: out.source,
                        calls: c.calls.clone(),
                    });
                }
            }
        }
    }
    let reports = check_equivalence_batch(&cases, DEFAULT_TIMEOUT_SECS).map_err(|e| e.to_string())?;
    let differing = reports.iter().filter(|r| !r.equivalent()).count();
    ensure(differing == 0, || format!("{differing} behavioural differences"))?;
    within_time(started, 30.0)?;
    Ok(format!(
        "{} snippets, {outputs} outputs parse, {} changed programs equivalent",
        corpus.len(),
        cases.len()
    ))
}

// ---------------------------------------------------------------- 3

fn criterion_anova() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..100 {
        let k = rng.random_range(2..7);
        let groups: Vec<Vec<f64>> = (0..k)
            .map(|g| (0..rng.random_range(2..40)).map(|_| rng.random::<f64>() * 3.0 + g as f64 * 0.2).collect())
            .collect();
        let all: Vec<f64> = groups.iter().flatten().copied().collect();
        let grand = all.iter().sum::<f64>() / all.len() as f64;
        let (mut ssb, mut ssw) = (0.0, 0.0);
        for g in &groups {
            let m = g.iter().sum::<f64>() / g.len() as f64;
            ssb += g.len() as f64 * (m - grand).powi(2);
            ssw += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
        }
        let f = (ssb / (k as f64 - 1.0)) / (ssw / (all.len() - k) as f64);
        let t = one_way_anova(&groups).map_err(|e| e.to_string())?;
        ensure((t.f_stat - f).abs() <= 1e-9 * f.max(1.0), || format!("trial {trial}: F {} vs {f}", t.f_stat))?;
        ensure((t.eta_squared - ssb / (ssb + ssw)).abs() <= 1e-9, || format!("trial {trial}: eta^2"))?;
        ensure((t.ss_between - ssb).abs() <= 1e-9 * ssb.max(1.0), || format!("trial {trial}: SSB"))?;
        ensure((t.ss_within - ssw).abs() <= 1e-9 * ssw.max(1.0), || format!("trial {trial}: SSW"))?;
    }
    for _ in 0..20 {
        let g: Vec<f64> = (0..rng.random_range(2..20)).map(|_| rng.random()).collect();
        let t = one_way_anova(&[g.clone(), g.clone(), g]).map_err(|e| e.to_string())?;
        ensure((t.f_stat, t.p_value, t.eta_squared) == (0.0, 1.0, 0.0), || {
            format!("identical groups gave F={} p={} eta2={}", t.f_stat, t.p_value, t.eta_squared)
        })?;
    }
    for _ in 0..50 {
        let a: Vec<f64> = (0..rng.random_range(2..30)).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..rng.random_range(2..30)).map(|_| rng.random::<f64>() + 0.1).collect();
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (ma, mb) = (a.iter().sum::<f64>() / na, b.iter().sum::<f64>() / nb);
        let ss = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
        let tstat = (ma - mb) / (ss / (na + nb - 2.0) * (1.0 / na + 1.0 / nb)).sqrt();
        let f = one_way_anova(&[a, b]).map_err(|e| e.to_string())?.f_stat;
        ensure((f - tstat * tstat).abs() <= 1e-9 * f.max(1.0), || format!("F {f} vs t^2 {}", tstat * tstat))?;
    }
    within_time(started, 5.0)?;
    Ok("100 group sets match, identical groups exact, F = t^2".into())
}

// ---------------------------------------------------------------- 4

fn label(high: bool) -> SeverityLabel {
    if high {
        SeverityLabel::High
    } else {
        SeverityLabel::Low
    }
}

fn criterion_infogain() -> Check {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // perfect separation: every high-severity score above every low one
    for (n, n_high, bins) in [(100, 30, 10), (100, 50, 2), (60, 20, 3)] {
        let scores: Vec<f64> = (0..n).map(|k| k as f64 + rng.random::<f64>() * 0.5).collect();
        let labels: Vec<SeverityLabel> = (0..n).map(|k| label(k >= n - n_high)).collect();
        let ig = information_gain(&labels, &scores, bins).map_err(|e| e.to_string())?;
        let h = label_entropy(&labels);
        ensure((ig - h).abs() <= 1e-12, || format!("separation: IG {ig} vs H(S) {h}"))?;
    }

    // invariance under 100 random strictly increasing maps
    for m in 0..100 {
        let n = rng.random_range(20..300);
        let labels: Vec<SeverityLabel> = (0..n).map(|_| label(rng.random_bool(0.4))).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (a, b, c) = (rng.random_range(0.1..4.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..1.0));
        let map = |x: f64| match m % 4 {
            0 => a * x + b,
            1 => (a * x / 5.0).exp() + b,
            2 => x.powi(3) + c * x,
            _ => (x / 3.0).atan() * a + b,
        };
        let mapped: Vec<f64> = scores.iter().map(|x| map(*x)).collect();
        let bins = rng.random_range(2..12);
        let base = information_gain(&labels, &scores, bins).map_err(|e| e.to_string())?;
        let other = information_gain(&labels, &mapped, bins).map_err(|e| e.to_string())?;
        ensure((base - other).abs() <= 1e-12, || format!("map {m}: {base} vs {other}"))?;
    }

    // a severity-correlated metric against pure noise
    let mut wins = 0;
    for trial in 0..100 {
        let mut rows = Vec::new();
        for k in 0..200 {
            let n_t = rng.random_range(10..60);
            let n_s = rng.random_range(0..=n_t);
            let share = n_s as f64 / n_t as f64;
            let mut metrics = BTreeMap::new();
            metrics.insert("psc".to_owned(), share + rng.random_range(-0.25..0.25));
            metrics.insert("noise".to_owned(), rng.random::<f64>());
            rows.push(SeverityRow {
                sample_id: format!("t{trial}s{k}"),
                rule_id: "R".into(),
                n_s,
                n_t,
                severity: SeverityLabel::from_counts(n_s, n_t),
                metric_scores: metrics,
            });
        }
        let report = ig_report(&SeverityDataset { rows }, &["psc".into(), "noise".into()], 10).map_err(|e| e.to_string())?;
        let ig = |m: &str| report.iter().find(|r| r.metric == m).map(|r| r.ig_bits).unwrap_or(0.0);
        if ig("psc") > ig("noise") {
            wins += 1;
        }
    }
    ensure(wins >= 95, || format!("correlated metric won {wins}/100"))?;
    within_time(started, 10.0)?;
    Ok(format!("separation exact, 100 maps invariant, correlated metric won {wins}/100"))
}

// ---------------------------------------------------------------- 5

fn criterion_causal() -> Check {
    let started = Instant::now();
    let config = EstimateConfig::default();
    let rc = RefuteConfig::default();
    let results: Vec<Result<(f64, f64, f64, f64), String>> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let frame = planted_frame(&PlantedScm::default(), seed);
            let r = estimate_ate(&frame, "treated", "control", &config).map_err(|e| e.to_string())?;
            let refs = refute(&frame, &r, &config, &rc, seed + 1000).map_err(|e| e.to_string())?;
            let null_frame = planted_frame(&PlantedScm { effect: 0.0, ..PlantedScm::default() }, seed + 500);
            let null = estimate_ate(&null_frame, "treated", "control", &config).map_err(|e| e.to_string())?;
            Ok((
                r.ate,
                null.ate,
                refs[&RefutationKind::Placebo].new_estimate,
                refs[&RefutationKind::RandomCommonCause].new_estimate - r.ate,
            ))
        })
        .collect();
    let results: Vec<(f64, f64, f64, f64)> = results.into_iter().collect::<Result<_, _>>()?;
    let n = results.len() as f64;
    let mean_ate = results.iter().map(|r| r.0).sum::<f64>() / n;
    let mean_null = results.iter().map(|r| r.1).sum::<f64>() / n;
    let placebo_ok = results.iter().filter(|r| r.2.abs() < 0.02).count();
    let rcc_ok = results.iter().filter(|r| r.3.abs() < 0.01).count();
    ensure((mean_ate - 0.3).abs() <= 0.02, || format!("mean ATE {mean_ate}"))?;
    ensure(mean_null.abs() <= 0.02, || format!("mean null ATE {mean_null}"))?;
    ensure(placebo_ok >= 48, || format!("placebo passed {placebo_ok}/50"))?;
    ensure(rcc_ok >= 48, || format!("random common cause passed {rcc_ok}/50"))?;
    within_time(started, 60.0)?;
    Ok(format!(
        "mean ATE {mean_ate:.4}, null {mean_null:.4}, placebo {placebo_ok}/50, common cause {rcc_ok}/50"
    ))
}

// ---------------------------------------------------------------- 6

fn criterion_detector() -> Check {
    let started = Instant::now();
    let dir = workspace().join("crates/python/tests/golden");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.join("snippets"))
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "py"))
        .collect();
    paths.sort();
    ensure(paths.len() == 50, || format!("{} golden snippets", paths.len()))?;

    let token = regex::Regex::new(r"\w+|[ \t]+|\n|[^\w\s]|\s").unwrap();
    let mut totals: BTreeMap<String, RuleAgreement> = BTreeMap::new();
    let mut spans = 0;
    for p in &paths {
        let id = p.file_stem().unwrap().to_string_lossy().into_owned();
        let source = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
        let records = read_records(&dir.join("diagnostics").join(format!("{id}.json"))).map_err(|e| e.to_string())?;
        let expected: Vec<SmellDiagnostic> = records.iter().flat_map(|r| r.diagnostics()).collect();
        let actual = detect(&id, &source, &RuleSet::default());
        for (rule, a) in agreement(&expected, &actual) {
            let t = totals.entry(rule).or_default();
            t.true_positives += a.true_positives;
            t.false_positives += a.false_positives;
            t.false_negatives += a.false_negatives;
        }

        // minimality of every exact golden span, by brute force
        let pieces: Vec<(&str, f64)> = token.find_iter(&source).map(|m| (m.as_str(), -0.5)).collect();
        let trace = TokenTrace::from_pieces(&id, &pieces, None).map_err(|e| e.to_string())?;
        let index = LineIndex::new(&source);
        for d in &expected {
            let (Some(el), Some(ec)) = (d.end_line, d.end_col) else { continue };
            let (Some(a), Some(b)) = (index.to_byte(d.start_line, d.start_col), index.to_byte(el, ec)) else {
                continue;
            };
            if b <= a {
                continue;
            }
            let span = align(d, &trace).map_err(|e| e.to_string())?;
            let toks = trace.tokens();
            let covers = |i: usize, j: usize| toks[i].byte_start <= a && toks[j].byte_end >= b;
            ensure(covers(span.i, span.j), || format!("{id}: span does not cover {d:?}"))?;
            for i in 0..toks.len() {
                for j in i..toks.len() {
                    if covers(i, j) && j - i < span.j - span.i {
                        return Err(format!("{id}: smaller cover {i}..{j} than {}..{}", span.i, span.j));
                    }
                }
            }
            spans += 1;
        }
    }
    for (rule, _) in RULES {
        let a = totals[*rule];
        ensure(a.precision() >= 0.95 && a.recall() >= 0.95, || {
            format!("{rule}: precision {:.3} recall {:.3}", a.precision(), a.recall())
        })?;
    }
    let worst = totals.values().map(|a| a.precision().min(a.recall())).fold(1.0, f64::min);
    within_time(started, 10.0)?;
    Ok(format!("{} rules, worst precision/recall {worst:.3}, {spans} spans minimal", RULES.len()))
}

// ---------------------------------------------------------------- 7

/// Twenty snippets whose target smell sits in the second half.
fn mitigation_corpus() -> Vec<(String, String, String)> {
    (0..20)
        .map(|k| {
            let (rule, source) = match k % 3 {
                0 => (
                    "W0719",
                    format!(
                        "def process_{k}(items):\n    total = 0\n    for item in items:\n        total += item * {k}\n    if total < 0:\n        raise Exception(\"negative total\")\n    return total\n"
                    ),
                ),
                1 => (
                    "W0612",
                    format!(
                        "def compute_{k}(values):\n    result = []\n    for value in values:\n        result.append(value + {k})\n    count = len(result)\n    return result\n"
                    ),
                ),
                _ => (
                    "C0304",
                    format!(
                        "def label_{k}(name):\n    prefix = \"item\"\n    text = prefix + \"-\" + name\n    return text.upper() + \"{k}\""
                    ),
                ),
            };
            (format!("m{k:02}"), rule.to_owned(), source)
        })
        .collect()
}

const BASELINE_P: f64 = 0.8;
const TREATMENT_P: f64 = 0.6;

fn smellprop(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_smellprop"))
        .args(args)
        .output()
        .map_err(|e| format!("running smellprop: {e}"))
}

fn check_mitigation(dir: &Path) -> Result<String, String> {
    let corpus = mitigation_corpus();
    let stub = BackgroundStub::start(StubConfig {
        memorized: corpus.iter().map(|c| c.2.clone()).collect(),
        generated_logprob: BASELINE_P.ln(),
        prompt_markers: vec![("Avoid the following code smells".into(), TREATMENT_P.ln())],
        ..StubConfig::default()
    })
    .map_err(|e| e.to_string())?;

    let corpus_path = dir.join("mitigation.jsonl");
    let lines: Vec<String> = corpus
        .iter()
        .map(|(id, rule, src)| serde_json::json!({"sample_id": id, "rule_id": rule, "source": src}).to_string())
        .collect();
    std::fs::write(&corpus_path, lines.join("\n") + "\n").map_err(|e| e.to_string())?;
    let (csv_path, svg_path) = (dir.join("paired.csv"), dir.join("paired.svg"));
    let out = smellprop(&[
        "mitigate",
        "--corpus",
        corpus_path.to_str().unwrap(),
        "--endpoint",
        stub.base_url(),
        "--baseline",
        "p0_minimal",
        "--treatment",
        "p3_structured",
        "--avoid",
        "W0719,C0304,W0612",
        "--max-new-tokens",
        "256",
        "--lambda",
        "0.7",
        "--out",
        csv_path.to_str().unwrap(),
        "--svg",
        svg_path.to_str().unwrap(),
        "--jobs",
        "4",
        "--strict",
    ])?;
    ensure(out.status.success(), || {
        format!("mitigate exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;

    let mut reader = csv::Reader::from_path(&csv_path).map_err(|e| e.to_string())?;
    let header: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(str::to_owned).collect();
    ensure(header == ["sample_id", "rule_id", "condition", "psc_median", "propense"], || {
        format!("CSV header {header:?}")
    })?;
    let mut by_rule: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    let mut per_sample: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let v: f64 = rec[3].parse().map_err(|_| format!("bad psc_median {:?}", &rec[3]))?;
        ensure((0.0..=1.0).contains(&v), || format!("psc_median {v} out of range"))?;
        ensure(rec[4] == *if v >= 0.7 { "true" } else { "false" }, || "propense flag disagrees".into())?;
        by_rule.entry(rec[1].to_owned()).or_default().entry(rec[2].to_owned()).or_default().push(v);
        per_sample.entry(rec[0].to_owned()).or_default().push(rec[2].to_owned());
    }
    ensure(per_sample.len() == 20, || format!("{} paired samples", per_sample.len()))?;
    for (id, conds) in &per_sample {
        ensure(conds.len() == 2 && conds[0] != conds[1], || format!("{id} is not paired: {conds:?}"))?;
    }
    let expected_gap = BASELINE_P - TREATMENT_P;
    for (rule, conds) in &by_rule {
        let gap = psc::median(&conds["p0_minimal"]) - psc::median(&conds["p3_structured"]);
        ensure((gap - expected_gap).abs() <= 1e-9, || format!("{rule}: gap {gap} vs {expected_gap}"))?;
    }

    let svg = std::fs::read_to_string(&svg_path).map_err(|e| e.to_string())?;
    ensure(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"), || "SVG envelope".into())?;
    ensure(svg.contains("xmlns=\"http://www.w3.org/2000/svg\""), || "SVG namespace".into())?;
    ensure(svg.matches('<').count() == svg.matches('>').count(), || "unbalanced SVG markup".into())?;
    for rule in by_rule.keys() {
        ensure(svg.contains(rule.as_str()), || format!("SVG lacks panel {rule}"))?;
    }
    Ok(format!("{} rules, median gap {expected_gap:.1}", by_rule.len()))
}

#[derive(Deserialize)]
struct Kept {
    sample_id: String,
    rule_id: String,
    token_count: usize,
}

fn run_filter(dir: &Path, corpus: &Path, seed: &str) -> Result<Vec<Kept>, String> {
    let out_path = dir.join(format!("filtered{seed}.jsonl"));
    let out = smellprop(&["filter", "--corpus", corpus.to_str().unwrap(), "--out", out_path.to_str().unwrap(), "--seed", seed])?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let text = std::fs::read_to_string(&out_path).map_err(|e| e.to_string())?;
    Ok(text.lines().map(|l| serde_json::from_str(l).unwrap()).collect())
}

fn check_filter(dir: &Path) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut lines = Vec::new();
    let mut push = |rule: &str, k: usize, tokens: usize| {
        lines.push(
            serde_json::json!({"sample_id": format!("{rule}-{k}"), "rule_id": rule, "token_count": tokens, "source": "pass\n"})
                .to_string(),
        );
    };
    for k in 0..600 {
        push("W0611", k, rng.random_range(5..=700));
    }
    for k in 0..499 {
        push("C0303", k, rng.random_range(5..=700));
    }
    // 530 samples of which 25 are too long: 505 remain, sampled down to 500
    for k in 0..530 {
        push("W0719", k, if k % 21 == 0 { 701 } else { rng.random_range(5..=699) });
    }
    push("R1705", 0, 700);
    let corpus = dir.join("filter.jsonl");
    std::fs::write(&corpus, lines.join("\n") + "\n").map_err(|e| e.to_string())?;

    let a = run_filter(dir, &corpus, "3")?;
    let b = run_filter(dir, &corpus, "3")?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &a {
        *counts.entry(&s.rule_id).or_default() += 1;
    }
    ensure(counts.get("W0611") == Some(&500), || format!("W0611 kept {:?}", counts.get("W0611")))?;
    ensure(counts.get("W0719") == Some(&500), || format!("W0719 kept {:?}", counts.get("W0719")))?;
    ensure(!counts.contains_key("C0303"), || "rule with 499 samples was kept".into())?;
    ensure(!counts.contains_key("R1705"), || "rule with 1 sample was kept".into())?;
    ensure(a.iter().all(|s| s.token_count <= 700), || "a sample over 700 tokens survived".into())?;
    let ids = |v: &[Kept]| v.iter().map(|s| s.sample_id.clone()).collect::<Vec<_>>();
    ensure(ids(&a) == ids(&b), || "same seed gave different samples".into())?;
    let c = run_filter(dir, &corpus, "4")?;
    ensure(ids(&a) != ids(&c), || "different seeds gave identical samples".into())?;
    Ok("exact 500, under-500 excluded, over-700 dropped, reproducible".into())
}

fn criterion_end_to_end() -> Check {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let m = check_mitigation(dir.path())?;
    let f = check_filter(dir.path())?;
    within_time(started, 30.0)?;
    Ok(format!("{m}; filter: {f}"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("PSC aggregators vs brute-force oracle", criterion_psc),
        ("SECT parse, equivalence and table examples", criterion_sect),
        ("ANOVA vs sum-of-squares oracle", criterion_anova),
        ("information gain properties", criterion_infogain),
        ("causal recovery on the planted SCM", criterion_causal),
        ("detector agreement with golden files", criterion_detector),
        ("hermetic mitigate run and corpus filter", criterion_end_to_end),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {}: PASS ({secs:.2}s) {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL ({secs:.2}s) {name}: {why}", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
