use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, Output};

use clap::CommandFactory;
use furstenberg_cli::canonical::{to_canonical_json, to_tree};
use furstenberg_cli::commands::{Cli, EntropyArgs, FamilyArg, FolnerArgs, Format};
use furstenberg_cli::{run, Command as Sub, OPERATION_COVERAGE, STOCHASTIC_COMMANDS};
use furstenberg_core::boundary::{CylinderMeasure, GeneratorMeasure};
use furstenberg_core::divergence::{ConvexGenerator, FiniteMeasure};
use furstenberg_core::majorant::{Majorant, WeightedFunction};
use furstenberg_core::walk::AnySequence;
use serde_json::{json, Value};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_furstenberg"))
        .args(args)
        .env_remove("FE_THREADS")
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_kind(out: &Output) -> String {
    let doc: Value = serde_json::from_slice(&out.stderr).unwrap();
    doc["error"]["kind"].as_str().unwrap().to_string()
}

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("golden")
        .join(name)
}

/// Numeric-tolerant equality of JSON documents.
fn equivalent(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            (x - y).abs() <= 1e-15 * x.abs().max(1.0)
        }
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| equivalent(p, q))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x.iter()
                    .all(|(k, v)| y.get(k).is_some_and(|w| equivalent(v, w)))
        }
        _ => a == b,
    }
}

#[test]
fn scan_matches_golden_report() {
    let out = cli(&[
        "scan",
        "--lambda",
        "uniform:2",
        "--f",
        "kl",
        "--depth",
        "3",
        "--samples",
        "10000",
        "--seed",
        "42",
    ]);
    let doc = stdout_json(&out);
    let results = &doc["results"];
    let reference = results["reference_entropy"].as_f64().unwrap();
    let min = results["min_entropy"].as_f64().unwrap();
    assert!(min >= reference - 1e-9);
    assert_eq!(results["theorem_A_violated"], json!(false));
    assert!((reference - 0.5 * 3f64.ln()).abs() < 1e-12);
    let masses = results["argmin_masses"].as_object().unwrap();
    assert_eq!(masses.len(), 4 * 3 * 3);
    let expected = std::fs::read(golden("scan_uniform2_kl_depth3_seed42.json")).unwrap();
    assert_eq!(
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&expected)
    );
}

#[test]
fn entropy_and_tmap_examples() {
    let doc = stdout_json(&cli(&[
        "entropy",
        "--lambda",
        "uniform:2",
        "--f",
        "kl",
        "--depth",
        "2",
    ]));
    let h = doc["results"]["h"].as_f64().unwrap();
    assert!((h - 0.5 * 3f64.ln()).abs() < 1e-12);
    assert!((h - 0.549306).abs() < 1e-6);

    let doc = stdout_json(&cli(&["tmap", "--mu", "uniform:2", "--f", "kl"]));
    let lambda: GeneratorMeasure =
        serde_json::from_value(doc["results"]["lambda"].clone()).unwrap();
    assert_eq!(lambda.weights(), GeneratorMeasure::uniform(2).weights());
}

#[test]
fn schema_examples_round_trip() {
    let finite = json!({"atoms": {"a": 0.25, "b": 0.75}});
    let m: FiniteMeasure<String> = serde_json::from_value(finite.clone()).unwrap();
    m.validate().unwrap();
    assert!(equivalent(&serde_json::to_value(&m).unwrap(), &finite));

    for spec in ["kl", "chi2", "power:0.5", "power:2"] {
        let f: ConvexGenerator = serde_json::from_value(json!(spec)).unwrap();
        assert_eq!(serde_json::to_value(f).unwrap(), json!(spec));
    }

    let mu = json!({"d": 2, "p": {"1": 0.4, "-1": 0.4, "2": 0.1, "-2": 0.1}});
    let parsed: GeneratorMeasure = serde_json::from_value(mu.clone()).unwrap();
    assert!(equivalent(&serde_json::to_value(&parsed).unwrap(), &mu));

    let twelfth = 1.0 / 12.0;
    let words = [
        "1,1", "1,2", "1,-2", "-1,-1", "-1,2", "-1,-2", "2,1", "2,-1", "2,2", "-2,1", "-2,-1",
        "-2,-2",
    ];
    for tail in ["harmonic", "uniform"] {
        let masses: serde_json::Map<String, Value> = words
            .iter()
            .map(|w| (w.to_string(), json!(twelfth)))
            .collect();
        let cyl = json!({"d": 2, "depth": 2, "tail": tail, "masses": masses});
        let mu = GeneratorMeasure::uniform(2);
        let parsed = CylinderMeasure::from_json_value(cyl.clone(), Some(&mu)).unwrap();
        assert!(equivalent(&parsed.to_json_value(None), &cyl), "{tail}");
    }

    let sigma = json!({
        "group": {"kind": "free", "d": 2},
        "ell": [1],
        "matrices": [[[[
            {"elem": "1", "mass": 0.25}, {"elem": "-1", "mass": 0.25},
            {"elem": "2", "mass": 0.25}, {"elem": "-2", "mass": 0.25}
        ]]]],
        "beyond": "hold-last"
    });
    let parsed = AnySequence::from_json_value(sigma.clone()).unwrap();
    let back = AnySequence::from_json_value(parsed.to_json_value()).unwrap();
    assert_eq!(back, parsed);
    let z = json!({
        "group": {"kind": "int"},
        "ell": [1],
        "matrices": [[[[{"elem": "-1", "mass": 0.5}, {"elem": "1", "mass": 0.5}]]]],
        "beyond": "cycle"
    });
    let parsed = AnySequence::from_json_value(z.clone()).unwrap();
    assert!(equivalent(&parsed.to_json_value(), &z));

    for gauge in [
        json!({"kind": "power", "q": 2}),
        json!({"kind": "pwl", "points": [[0, 0], [0.5, 0.8], [1, 1]]}),
    ] {
        let rho: Majorant = serde_json::from_value(gauge.clone()).unwrap();
        assert!(rho.check_invariants().passes);
        assert!(equivalent(&rho.to_json_value(), &gauge));
    }

    let wf = json!({"space": {"atoms": {"a": 0.5, "b": 0.5}}, "values": {"a": 1.0, "b": -2.0}});
    let parsed: WeightedFunction = serde_json::from_value(wf.clone()).unwrap();
    assert!(equivalent(&serde_json::to_value(&parsed).unwrap(), &wf));
}

#[test]
fn every_core_operation_has_a_subcommand() {
    let core_operations = [
        "f_divergence",
        "furstenberg_entropy",
        "reduce",
        "multiply",
        "solve_q",
        "harmonic_measure",
        "pushforward",
        "rn_generator",
        "cylinder_entropy",
        "t_map",
        "t_inverse",
        "minimality_scan",
        "entropy_gradient_at_harmonic",
        "validate_sigma",
        "exact_distribution",
        "sample_trajectory",
        "check_harmonic",
        "martingale_check",
        "boundary_empirical",
        "abel_measure",
        "folner_entropy_curve",
        "combine",
        "rho_norm",
        "rho_abs_continuity",
        "concave_envelope",
        "vallee_poussin",
        "split_integrable",
    ];
    let subcommands: BTreeSet<String> = Cli::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let covered: BTreeSet<&str> = OPERATION_COVERAGE.iter().map(|(op, _)| *op).collect();
    for op in core_operations {
        assert!(covered.contains(op), "{op} has no subcommand");
    }
    for (op, sub) in OPERATION_COVERAGE {
        assert!(subcommands.contains(*sub), "{op} maps to missing `{sub}`");
    }
    let mapped: BTreeSet<&str> = OPERATION_COVERAGE.iter().map(|(_, s)| *s).collect();
    for sub in &subcommands {
        assert!(mapped.contains(sub.as_str()), "`{sub}` covers no operation");
    }
    for sub in [
        "solve-q",
        "harmonic",
        "entropy",
        "tmap",
        "tinv",
        "scan",
        "gradient",
        "walk-exact",
        "walk-sample",
        "walk-boundary",
        "harmonic-check",
        "abel",
        "abel-identity",
        "folner",
        "rho-norm",
        "rho-ac",
        "envelope",
        "vp",
        "split",
    ] {
        assert!(subcommands.contains(sub), "missing `{sub}`");
    }
    for sub in STOCHASTIC_COMMANDS {
        assert!(subcommands.contains(*sub));
    }
}

#[test]
fn emitting_the_same_report_twice_is_identical() {
    let cmd = Sub::Entropy(EntropyArgs {
        lambda: "uniform:3".into(),
        f: "chi2".into(),
        depth: Some(2),
        mu: None,
        nu: None,
    });
    let report = run(&cmd).unwrap();
    assert_eq!(
        report.emit(Format::Json).unwrap(),
        report.emit(Format::Json).unwrap()
    );
    assert_eq!(
        to_canonical_json(&report.tree()),
        to_canonical_json(&to_tree(&report.tree()).unwrap())
    );
}

#[test]
fn folner_curve_csv_has_three_rows_and_a_header() {
    let cmd = Sub::Folner(FolnerArgs {
        lambda: r#"{"atoms": {"-1": 0.5, "1": 0.5}}"#.into(),
        f: "kl".into(),
        a_values: vec![0.3, 0.5, 0.7],
        eps: 1e-8,
        family: FamilyArg::Linear,
        budget: 1_000_000,
    });
    let csv = String::from_utf8(run(&cmd).unwrap().emit(Format::Csv).unwrap()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("a,h,"));
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let h: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap()[1].parse().unwrap())
        .collect();
    assert!(h[0] >= h[1] && h[1] >= h[2]);
}

#[test]
fn exit_codes_follow_error_classes() {
    let out = cli(&["solve-q", "--mu", "uniform:1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "ValidationError");

    let out = cli(&["solve-q", "--mu", "/nonexistent/mu.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "ParseError");

    let out = cli(&["solve-q", "--mu", "{\"d\": 2, \"p\": {\"1\": 0.9"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "ParseError");

    let coin = r#"{"group":{"kind":"int"},"ell":[1],"matrices":[[[[{"elem":"-1","mass":0.5},{"elem":"1","mass":0.5}]]]],"beyond":"hold-last"}"#;
    let out = cli(&["walk-exact", "--sigma", coin, "--n", "50", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_kind(&out), "BudgetExceeded");

    let out = cli(&["--format", "csv", "tmap", "--mu", "uniform:2", "--f", "kl"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "UnsupportedPayloadForCsv");

    let out = cli(&[
        "--out",
        "/nonexistent-dir/report.json",
        "solve-q",
        "--mu",
        "uniform:2",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_kind(&out), "IoError");

    let out = Command::new(env!("CARGO_BIN_EXE_furstenberg"))
        .args(["solve-q", "--mu", "uniform:2"])
        .env("FE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_kind(&out), "ValidationError");
}

#[test]
fn out_flag_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    let out = cli(&[
        "--out",
        path.to_str().unwrap(),
        "solve-q",
        "--mu",
        "uniform:3",
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    let q = doc["results"]["q"]["1"].as_f64().unwrap();
    assert!((q - 0.2).abs() < 1e-12);
    assert_eq!(doc["command"], json!("solve-q"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn harmonic_csv_lists_cylinders() {
    let out = cli(&[
        "--format",
        "csv",
        "harmonic",
        "--mu",
        "uniform:2",
        "--depth",
        "2",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "word,mass");
    assert_eq!(lines.len(), 13);
    for line in &lines[1..] {
        let mass: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!((mass - 1.0 / 12.0).abs() < 1e-15);
    }
}
