use std::path::Path;
use std::process::{Command, Output};

use smellprop_core::causal::synthetic::{planted_frame, PlantedScm};
use smellprop_core::TokenTrace;
use smellprop_inference::stub::{BackgroundStub, StubConfig};
use smellprop_inference::write_traces;

fn smellprop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smellprop")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(smellprop(&["score", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(smellprop(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(smellprop(&["filter"]).status.code(), Some(2));
    let help = smellprop(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("mitigate"));
}

#[test]
fn runtime_errors_exit_1() {
    let out = smellprop(&["detect", "--corpus", "/nonexistent/corpus.jsonl", "--out", "/tmp/x.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn detect_then_score() {
    let dir = tempfile::tempdir().unwrap();
    let source = "import os\n\ndef f():\n    return 1\n";
    std::fs::write(dir.path().join("s1.py"), source).unwrap();
    let diags = dir.path().join("d.jsonl");
    let out = smellprop(&["detect", "--corpus", p(dir.path()), "--out", p(&diags)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&diags).unwrap();
    assert!(text.contains("\"W0611\""), "{text}");

    let pieces: Vec<(&str, f64)> = vec![
        ("import", -0.1),
        (" os", -0.2),
        ("\n", -0.3),
        ("\n", -0.3),
        ("def", -0.4),
        (" f", -0.5),
        ("():", -0.6),
        ("\n", -0.1),
        ("    return", -0.2),
        (" 1", -0.3),
        ("\n", -0.1),
    ];
    let trace = TokenTrace::from_pieces("s1", &pieces, None).unwrap();
    assert_eq!(trace.source(), source);
    let traces = dir.path().join("t.jsonl");
    write_traces(&[trace], &traces).unwrap();

    let scores = dir.path().join("scores.csv");
    let out = smellprop(&["score", "--traces", p(&traces), "--diagnostics", p(&diags), "--out", p(&scores)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&scores).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("sample_id,rule_id,variant,span_i,span_j,psc_mean,psc_median,psc_relative,propense")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[..5], ["s1", "W0611", "original", "0", "1"]);
    let median: f64 = row[6].parse().unwrap();
    assert!((median - ((-0.1f64).exp() + (-0.2f64).exp()) / 2.0).abs() < 1e-12);
}

#[test]
fn identical_groups_are_robust() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("sample_id,rule_id,variant,psc_relative\n");
    for variant in ["original", "Add2Equal", "SwitchRelation"] {
        for (k, v) in [0.2, 0.4, 0.6, 0.8].iter().enumerate() {
            csv.push_str(&format!("s{k},W0611,{variant},{v}\n"));
            csv.push_str(&format!("s{k},C0303,{variant},{}\n", v / 2.0));
        }
    }
    let scores = dir.path().join("s.csv");
    std::fs::write(&scores, csv).unwrap();
    let anova = dir.path().join("anova.csv");
    let out = smellprop(&["robustness", "--scores", p(&scores), "--out", p(&anova)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(&anova).unwrap();
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(&r[col("robust")], "true");
        assert_eq!(&r[col("f_stat")], "0.0");
        assert_eq!(&r[col("p_value")], "1.0");
    }
}

#[test]
fn causal_report_and_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    let frame = planted_frame(&PlantedScm { n: 2000, ..PlantedScm::default() }, 1);
    let frame_path = dir.path().join("frame.csv");
    std::fs::write(&frame_path, smellprop_cli::frame::frame_csv(&frame).unwrap()).unwrap();
    let causal = dir.path().join("causal.csv");
    let out = smellprop(&["causal", "--frames", p(&frame_path), "--control", "control", "--out", p(&causal), "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&causal).unwrap();
    assert_eq!(text.lines().count(), 2, "{text}");
    assert!(text.lines().nth(1).unwrap().starts_with("SYN,T0,treated,control,"));

    let mut reports = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("report{k}"));
        let out = smellprop(&["report", "--causal", p(&causal), "--out-dir", p(&out_dir)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(std::fs::read(out_dir.join("report.md")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert!(String::from_utf8_lossy(&reports[0]).contains("Causal effects"));

    // same seed, same estimates
    let again = dir.path().join("again.csv");
    smellprop(&["causal", "--frames", p(&frame_path), "--control", "control", "--out", p(&again), "--seed", "9"]);
    assert_eq!(std::fs::read(&causal).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn transform_writes_variants_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(&corpus, "{\"sample_id\": \"a\", \"source\": \"def f(x):\\n    x += 9\\n    return x > 1\\n\"}\n").unwrap();
    let out_dir = dir.path().join("variants");
    let out = smellprop(&["transform", "--corpus", p(&corpus), "--out-dir", p(&out_dir), "--kinds", "Add2Equal,switch-relation"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read_to_string(out_dir.join("a.Add2Equal.py")).unwrap(),
        "def f(x):\n    x = x + 9\n    return x > 1\n"
    );
    assert_eq!(
        std::fs::read_to_string(out_dir.join("a.SwitchRelation.py")).unwrap(),
        "def f(x):\n    x += 9\n    return 1 < x\n"
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.as_array().unwrap().len(), 2);
    assert_eq!(manifest[0]["applied_sites"][0]["start_line"], 2);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    let lines: Vec<String> = (0..30)
        .map(|k| format!("{{\"sample_id\": \"s{k}\", \"rule_id\": \"W0611\", \"token_count\": {}}}", 10 * k))
        .collect();
    std::fs::write(&corpus, lines.join("\n")).unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "per_rule_cap = 5\nmax_tokens = 100\n").unwrap();

    let out_path = dir.path().join("f.jsonl");
    let run = |extra: &[&str]| {
        let mut args = vec!["--config", p(&config), "filter", "--corpus", p(&corpus), "--out", p(&out_path)];
        args.extend_from_slice(extra);
        let out = smellprop(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(&out_path).unwrap().lines().count()
    };
    assert_eq!(run(&[]), 5);
    assert_eq!(run(&["--per-rule-cap", "8"]), 8);
}

#[test]
fn identical_prompts_give_zero_gap_and_strict_flags_unpaired() {
    let snippet = "def f(a):\n    if a < 0:\n        raise Exception(\"negative\")\n    return a\n";
    let stub = BackgroundStub::start(StubConfig {
        memorized: vec![snippet.to_owned()],
        ..StubConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    let clean = "def g(b):\n    total = b + 1\n    return total\n";
    std::fs::write(
        &corpus,
        format!(
            "{}\n{}\n",
            serde_json::json!({"sample_id": "smelly", "rule_id": "W0719", "source": snippet}),
            serde_json::json!({"sample_id": "clean", "rule_id": "W0719", "source": clean}),
        ),
    )
    .unwrap();
    let (csv_path, svg, summary) = (dir.path().join("m.csv"), dir.path().join("m.svg"), dir.path().join("m.json"));
    let args = [
        "mitigate",
        "--corpus",
        p(&corpus),
        "--endpoint",
        stub.base_url(),
        "--baseline",
        "p1",
        "--treatment",
        "p2",
        "--out",
        p(&csv_path),
        "--svg",
        p(&svg),
        "--summary",
        p(&summary),
    ];
    let out = smellprop(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["summary"][0]["median_gap"], 0.0);
    assert_eq!(s["incomplete"][0]["sample_id"], "clean");
    assert_eq!(std::fs::read_to_string(&csv_path).unwrap().lines().count(), 3);

    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(smellprop(&strict).status.code(), Some(1));
}
