use std::path::Path;
use std::process::{Command, Output};

use accommodate_cli::{embedded_config, without_timestamp, Command as Cmd};
use serde_json::Value;

const ROLES: [&str; 4] = ["--from-role", "originator", "--to-role", "respondent"];

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_accommodate")).args(args).current_dir(dir).output().unwrap()
}

fn with_roles<'a>(args: &[&'a str]) -> Vec<&'a str> {
    [args, &ROLES[..]].concat()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

/// Writes `gen.toml` and simulates `corpus.jsonl` in a fresh directory.
fn simulated(extra: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "dialogues = 12\nexchanges = 20\ncontext_variance = 1.0\nseed = 3\n\n[length]\na = 1.0\nalpha = 1.0\nbeta = 0.5\nnoise_o = 1.0\nnoise_r = 1.0\n{extra}"
    );
    std::fs::write(dir.path().join("gen.toml"), cfg).unwrap();
    let out = run(&["simulate", "--input", "gen.toml", "--output", "corpus.jsonl"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

const TWO_MARKERS: &str = "\n[[markers]]\nname = \"article\"\nw_length = 1.5\n\n[[markers]]\nname = \"ppron\"\ngamma = 1.5\n";

#[test]
fn simulate_is_reproducible_and_writes_truth() {
    let dir = simulated(TWO_MARKERS);
    let d = dir.path();
    let first = std::fs::read(d.join("corpus.jsonl")).unwrap();
    let out = run(&["simulate", "--input", "gen.toml", "--output", "again.jsonl"], d);
    assert!(out.status.success());
    assert_eq!(first, std::fs::read(d.join("again.jsonl")).unwrap());

    let truth = json(d, "corpus.truth.json");
    assert_eq!(truth["seed"], 3);
    assert_eq!(truth["config"]["command"], "simulate");
    let g = &truth["ground_truth"];
    assert!((g["latent_gaussian"]["olc"].as_f64().unwrap() - 0.6112).abs() < 1e-4);
    assert!((g["latent_gaussian"]["tlc"].as_f64().unwrap() - 0.1610).abs() < 1e-4);
    assert!(g["analytic"].is_null());
    assert_eq!(g["flags"]["length_turn_by_turn"], true);
    assert_eq!(g["flags"]["style_turn_by_turn"], true);
    assert_eq!(g["flags"]["style_contextual"], false);
    assert_eq!(g["contexts"].as_array().unwrap().len(), 12);
    // True contexts never reach the corpus.
    assert!(!String::from_utf8(first).unwrap().contains("context"));
}

#[test]
fn seed_flag_overrides_generator_seed() {
    let dir = simulated("");
    let d = dir.path();
    assert!(run(&["simulate", "--input", "gen.toml", "--seed", "4", "--output", "other.jsonl"], d).status.success());
    assert_ne!(std::fs::read(d.join("corpus.jsonl")).unwrap(), std::fs::read(d.join("other.jsonl")).unwrap());
    assert_eq!(json(d, "other.truth.json")["ground_truth"]["generator"]["seed"], 4);
}

#[test]
fn invalid_variance_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.toml"),
        "dialogues = 2\nexchanges = 3\ncontext_variance = 0.0\n",
    )
    .unwrap();
    let out = run(&["simulate", "--input", "bad.toml", "--output", "c.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("context_variance"));
}

#[test]
fn single_marker_style_report() {
    let dir = simulated(TWO_MARKERS);
    let d = dir.path();
    let out = run(
        &with_roles(&["style", "--input", "corpus.jsonl", "--markers", "article", "--permutations", "50", "--output", "s.json"]),
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(d, "s.json");
    let markers = r["report"]["markers"].as_array().unwrap();
    assert_eq!(markers.len(), 1);
    assert_eq!(markers[0]["marker"], "article");
    for key in ["mi_band", "osc_band", "zero_band"] {
        let b = &markers[0][key];
        assert!(b["lower"].as_f64().unwrap() <= b["upper"].as_f64().unwrap());
    }
    assert_eq!(r["tool"], "accommodate");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert!(r["generated_unix"].as_u64().unwrap() > 0);
    assert_eq!(r["config"]["markers"][0], "article");
}

#[test]
fn missing_dictionary_names_path() {
    let dir = simulated("");
    let out = run(&with_roles(&["style", "--input", "corpus.jsonl", "--dict", "missing.dic"]), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.dic"));
}

#[test]
fn missing_input_and_bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(&with_roles(&["length", "--input", "nowhere.jsonl"]), d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.jsonl"));
    assert_eq!(run(&["length", "--input", "x.jsonl"], d).status.code(), Some(2));
    assert_eq!(run(&with_roles(&["length", "--input", "x.jsonl", "--permutations", "18"]), d).status.code(), Some(2));
    assert_eq!(run(&with_roles(&["style", "--input", "x.jsonl", "--cond", "bins:x"]), d).status.code(), Some(2));
    assert_eq!(run(&with_roles(&["style", "--input", "x.jsonl", "--units", "hartleys"]), d).status.code(), Some(2));
    assert_eq!(run(&with_roles(&["style", "--input", "x.jsonl", "--alpha", "1.5"]), d).status.code(), Some(2));
}

#[test]
fn parse_error_names_line() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.jsonl"), "{\"dialogue_id\":\"a\",\"speaker_id\":\"x\",\"turn_index\":0,\"text\":\"hi\"}\nnot json\n").unwrap();
    let out = run(&with_roles(&["style", "--input", "c.jsonl"]), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn small_sample_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("gen.toml"), "dialogues = 2\nexchanges = 5\ncontext_variance = 1.0\n").unwrap();
    assert!(run(&["simulate", "--input", "gen.toml", "--output", "c.jsonl"], d).status.success());
    let out = run(&with_roles(&["style", "--input", "c.jsonl"]), d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("aggregate"));
}

#[test]
fn length_report_notes_p_resolution() {
    let dir = simulated("");
    let d = dir.path();
    let out = run(&with_roles(&["length", "--input", "corpus.jsonl", "--permutations", "19", "--alpha", "0.05", "--output", "l.json"]), d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(d, "l.json");
    let t = &r["report"]["tlc_test"];
    assert_eq!(t["min_p_value"], 0.05);
    assert_eq!(t["null_replicates"].as_array().unwrap().len(), 19);
    let p = t["p_value"].as_f64().unwrap();
    let expected = if p <= 0.05 { "reject" } else { "fail_to_reject" };
    assert_eq!(t["decision"], expected);
    assert!(t.get("zero_band").is_none());
}

#[test]
fn nats_scale_bits() {
    let dir = simulated("");
    let d = dir.path();
    for (units, name) in [("bits", "b.json"), ("nats", "n.json")] {
        let args = with_roles(&["length", "--input", "corpus.jsonl", "--permutations", "19", "--units", units, "--output", name]);
        assert!(run(&args, d).status.success());
    }
    let b = json(d, "b.json")["report"]["olc"].as_f64().unwrap();
    let n = json(d, "n.json")["report"]["olc"].as_f64().unwrap();
    assert!((n - b * std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn tsc_report_per_marker_and_empty_subset() {
    let dir = simulated(TWO_MARKERS);
    let d = dir.path();
    let args = with_roles(&["tsc", "--input", "corpus.jsonl", "--markers", "article,ppron", "--permutations", "39", "--output", "t.json"]);
    let out = run(&args, d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(d, "t.json");
    let tests = r["report"]["tsc_test"].as_object().unwrap();
    assert_eq!(tests.len(), 2);
    for t in tests.values() {
        assert!(t["zero_band"].is_object());
        assert!(t["verdict"].is_string());
    }
    let out = run(&with_roles(&["tsc", "--input", "corpus.jsonl", "--markers", ""]), d);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&with_roles(&["tsc", "--input", "corpus.jsonl", "--markers", "nonsense"]), d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_embeds_config_and_replays() {
    let dir = simulated(TWO_MARKERS);
    let d = dir.path();
    let args = with_roles(&["tsc", "--input", "corpus.jsonl", "--markers", "article,ppron", "--permutations", "19", "--bootstrap-B", "0", "--format", "csv", "--output", "t.csv"]);
    assert!(run(&args, d).status.success());
    let text = std::fs::read_to_string(d.join("t.csv")).unwrap();
    let cfg = embedded_config(&text).unwrap();
    assert_eq!(cfg.command, Cmd::Tsc);
    assert_eq!(cfg.bootstrap_b, 0);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("marker,osc0,p_value"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);
    assert!(run(&["replay", "--input", "t.csv", "--output", "t2.csv"], d).status.success());
    assert_eq!(without_timestamp(&text), without_timestamp(&std::fs::read_to_string(d.join("t2.csv")).unwrap()));
}

#[test]
fn stdout_when_no_output() {
    let dir = simulated("");
    let out = run(&with_roles(&["length", "--input", "corpus.jsonl", "--permutations", "19"]), dir.path());
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["output"], Value::Null);
}

#[test]
fn merge_and_min_exchange_flags_change_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut lines = String::new();
    for dlg in 0..30 {
        let turns = [
            ("a", "x", "the cat".to_string()),
            ("a", "x", format!("and {} dogs", "very ".repeat(dlg % 7))),
            ("b", "y", "the end".to_string()),
            ("a", "x", "so".to_string()),
            ("b", "y", format!("an {}ox", "big ".repeat(dlg % 5))),
            ("a", "x", "fine".to_string()),
        ];
        for (t, (spk, role, text)) in turns.iter().enumerate() {
            lines.push_str(&format!(
                "{{\"dialogue_id\":\"d{dlg}\",\"speaker_id\":\"{spk}{dlg}\",\"role\":\"{role}\",\"turn_index\":{t},\"text\":\"{text}\"}}\n"
            ));
        }
    }
    // A dialogue whose respondent never originates.
    lines.push_str("{\"dialogue_id\":\"z\",\"speaker_id\":\"a\",\"role\":\"x\",\"turn_index\":0,\"text\":\"hi\"}\n");
    lines.push_str("{\"dialogue_id\":\"z\",\"speaker_id\":\"b\",\"role\":\"y\",\"turn_index\":1,\"text\":\"yo\"}\n");
    std::fs::write(d.join("c.jsonl"), lines).unwrap();
    let base = ["length", "--input", "c.jsonl", "--from-role", "x", "--to-role", "y", "--permutations", "19"];
    let report = |extra: &[&str]| {
        let out = run(&[&base[..], extra].concat(), d);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["report"].clone()
    };
    let merged = report(&[]);
    assert_eq!(merged["exchanges"], 60);
    let unmerged = report(&["--no-merge-turns"]);
    assert_eq!(unmerged["exchanges"], 60);
    assert_ne!(merged["length_pearson"], unmerged["length_pearson"]);
    assert_eq!(report(&["--min-exchanges", "0"])["exchanges"], 61);
    assert_eq!(run(&[&base[..], &["--min-exchanges", "3"]].concat(), d).status.code(), Some(1));
}
