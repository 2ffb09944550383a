use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const HONEST: &str = r#"
[adversary]
kind = "none"
fraction = 0.0
eve_bases = []
delayed_readout = false
"#;

const INTERCEPT_ALL: &str = r#"
[adversary]
kind = "intercept-resend"
fraction = 1.0
eve_bases = ["Z", "X"]
delayed_readout = true
"#;

fn qkdlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkdlab"))
        .current_dir(dir)
        .env_remove("QKDLAB_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn footer(csv: &str, key: &str) -> Option<String> {
    csv.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = config(d, "run.toml", &format!("[session]\nn_signals = 10000\n{HONEST}"));
    for out in ["a", "b"] {
        let o = qkdlab(d, &["simulate", "--config", &cfg, "--seed", "42", "--out", out]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let names: Vec<_> = fs::read_dir(d.join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 9);
    for name in names {
        let a = fs::read(d.join("a").join(&name)).unwrap();
        let b = fs::read(d.join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs");
        let text = String::from_utf8(a).unwrap();
        for stamp in ["tool_version", "config_hash", "seed"] {
            assert!(text.contains(stamp), "{name:?} lacks {stamp}");
        }
    }
    let s = summary(&d.join("a"));
    assert_eq!(s["qber"], 0.0);
    assert_eq!(s["keys_match"], true);
    assert!(s["n_fin"].as_u64().unwrap() > 4000);

    let key = fs::read_to_string(d.join("a/final_alice.key")).unwrap();
    for field in ["n_S=30", "tau1=", "eve_info_bound=", "format=hex"] {
        assert!(key.contains(field), "key header lacks {field}");
    }
}

#[test]
fn full_intercept_resend_aborts() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = config(d, "ir.toml", &format!("[session]\nn_signals = 20000\nseed = 42\n{INTERCEPT_ALL}"));
    let o = qkdlab(d, &["simulate", "--config", &cfg, "--out", "out"]);
    assert_eq!(code(&o), 3);
    let s = summary(&d.join("out"));
    assert!((s["qber"].as_f64().unwrap() - 0.25).abs() < 0.015);
    assert_eq!(s["status"]["status"], "aborted-insecure");
    assert!(!d.join("out/final_alice.key").exists());
    let eve = &s["eve_knowledge"];
    assert!((eve["information_per_bit"].as_f64().unwrap() - 0.5).abs() < 0.02);
}

#[test]
fn override_marks_outputs_insecure() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = config(d, "ir.toml", &format!("[session]\nn_signals = 20000\nseed = 42\n{INTERCEPT_ALL}"));
    let o = qkdlab(d, &["simulate", "--config", &cfg, "--out", "out", "--override-insecure"]);
    let s = summary(&d.join("out"));
    assert_eq!(s["insecure"], true);
    // At 25% error the τ₁ shrinkage leaves nothing to keep.
    assert_eq!(code(&o), 3);
    assert_eq!(s["status"]["status"], "key-exhausted");
    let sifted = fs::read_to_string(d.join("out/sifted_alice.key")).unwrap();
    assert!(sifted.contains("# status=INSECURE"));
}

#[test]
fn failed_reconciliation_exits_4() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = config(
        d,
        "ir.toml",
        &format!("[session]\nn_signals = 20000\nseed = 1\n[postproc]\npasses = 1\n{INTERCEPT_ALL}"),
    );
    let o = qkdlab(d, &["simulate", "--config", &cfg, "--out", "out", "--override-insecure"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(&d.join("out"))["status"]["status"], "reconciliation-failed");
}

#[test]
fn ekert_summary_reports_chsh() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = config(d, "e.toml", &format!("[session]\nprotocol = \"ekert\"\nn_signals = 30000\n{HONEST}"));
    let o = qkdlab(d, &["simulate", "--config", &cfg, "--seed", "3", "--out", "out"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&d.join("out"))["chsh"]["s"].as_f64().unwrap();
    assert!((s.abs() - 2.0 * 2f64.sqrt()).abs() < 0.1, "S = {s}");
}

#[test]
fn weak_pulses_report_pns_flag() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = config(
        d,
        "p.toml",
        &format!("[session]\nn_signals = 10000\nmu = 0.5\n[channel]\nloss_prob = 0.99\n{HONEST}"),
    );
    // Too few sifted bits to estimate: post-processing refuses, the
    // summary is still written.
    let o = qkdlab(d, &["simulate", "--config", &cfg, "--out", "out"]);
    assert_eq!(code(&o), 2);
    let s = summary(&d.join("out"));
    assert_eq!(s["pns"]["flag"], "insecure");
    assert_eq!(s["status"]["status"], "postproc-error");
}

#[test]
fn seed_precedence() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let bare = config(d, "bare.toml", &format!("[session]\nn_signals = 2000\n{HONEST}"));
    let seeded = config(d, "seeded.toml", &format!("[session]\nn_signals = 2000\nseed = 5\n{HONEST}"));
    let run = |cfg: &str, env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qkdlab"));
        cmd.current_dir(d).env_remove("QKDLAB_SEED");
        if let Some(v) = env {
            cmd.env("QKDLAB_SEED", v);
        }
        cmd.args(["simulate", "--config", cfg, "--out", "out"]);
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        assert!(cmd.output().unwrap().status.success());
        summary(&d.join("out"))["provenance"]["seed"].as_u64().unwrap()
    };
    assert_eq!(run(&bare, None, None), 0);
    assert_eq!(run(&bare, Some("11"), None), 11);
    assert_eq!(run(&seeded, Some("11"), None), 5);
    assert_eq!(run(&seeded, Some("11"), Some("9")), 9);
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cases = [
        ("no-adversary.toml", "[session]\nn_signals = 100\n".to_string()),
        ("partial.toml", "[adversary]\nkind = \"none\"\nfraction = 0.0\neve_bases = []\n".into()),
        ("typo.toml", format!("[session]\nn_signal = 100\n{HONEST}")),
        ("pns-gv.toml", "[session]\nprotocol = \"gv\"\n[adversary]\nkind = \"pns-split\"\nfraction = 1.0\neve_bases = []\ndelayed_readout = true\n".into()),
        ("zero.toml", format!("[session]\nn_signals = 0\n{HONEST}")),
    ];
    for (name, text) in cases {
        let cfg = config(d, name, &text);
        let o = qkdlab(d, &["simulate", "--config", &cfg, "--out", "out"]);
        assert_eq!(code(&o), 2, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = qkdlab(d, &["simulate", "--config", "missing.toml"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_transcript_outcomes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = config(d, "run.toml", &format!("[session]\nprotocol = \"b92\"\nn_signals = 3000\n{INTERCEPT_ALL}"));
    qkdlab(d, &["simulate", "--config", &cfg, "--seed", "8", "--out", "out"]);
    let good = qkdlab(d, &["verify-transcript", "out/transcript.jsonl"]);
    assert_eq!(code(&good), 0, "{}", String::from_utf8_lossy(&good.stderr));

    let text = fs::read_to_string(d.join("out/transcript.jsonl")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let flipped = if lines[1].contains("\"alice_bit\":0") {
        lines[1].replacen("\"alice_bit\":0", "\"alice_bit\":1", 1)
    } else {
        lines[1].replacen("\"alice_bit\":1", "\"alice_bit\":0", 1)
    };
    assert_ne!(flipped, lines[1]);
    lines[1] = flipped;
    fs::write(d.join("tampered.jsonl"), lines.join("\n")).unwrap();
    assert_eq!(code(&qkdlab(d, &["verify-transcript", "tampered.jsonl"])), 1);

    fs::write(d.join("broken.jsonl"), &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&qkdlab(d, &["verify-transcript", "broken.jsonl"])), 2);
}

#[test]
fn bb84_rates_root() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let o = qkdlab(d, &["rates", "--out", "r"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(d.join("r/rates.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("e,I_AB,tau1,R_corr,R_del,rate_per_signal"));
    let root: f64 = footer(&csv, "root").unwrap().parse().unwrap();
    assert!((root - 0.105).abs() <= 0.005);
    assert_eq!(footer(&csv, "tau1_source").as_deref(), Some("closed-form-bb84"));
    assert_eq!(footer(&csv, "seed").as_deref(), Some("0"));
}

#[test]
fn single_point_grid() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cfg = config(d, "g.toml", "[rates]\ngrid_start = 0.0\ngrid_end = 0.0\n");
    assert_eq!(code(&qkdlab(d, &["rates", "--config", &cfg, "--out", "r"])), 0);
    let csv = fs::read_to_string(d.join("r/rates.csv")).unwrap();
    let rows: Vec<_> = csv.lines().skip(1).filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1);
    let cols: Vec<f64> = rows[0].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[0], 0.0);
    assert_eq!(cols[3], 1.0);
    assert_eq!(cols[4], 1.0);
}

#[test]
fn tabulated_curves() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let o = qkdlab(d, &["rates", "--protocol", "six-state", "--out", "r"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--tau1-table"));

    // A linear τ₁ = 5e: R_del = 1 − h(e) − 5e(1 − e) − e.
    fs::write(d.join("t.csv"), "e,tau1\n0.0,0.0\n0.2,1.0\n").unwrap();
    let o = qkdlab(d, &["rates", "--protocol", "six-state", "--tau1-table", "t.csv", "--out", "r"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.join("r/rates.csv")).unwrap();
    assert_eq!(footer(&csv, "tau1_source").as_deref(), Some("tabulated-file"));
    let root: f64 = footer(&csv, "root").unwrap().parse().unwrap();
    let h = |e: f64| -e * e.log2() - (1.0 - e) * (1.0 - e).log2();
    let (mut lo, mut hi) = (1e-9, 0.2);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - h(mid) - 5.0 * mid * (1.0 - mid) - mid > 0.0 { lo = mid } else { hi = mid }
    }
    assert!((root - lo).abs() < 1e-5, "root {root} vs {lo}");
    let max_e: f64 = csv
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .fold(0.0, f64::max);
    assert!(max_e <= 0.2 + 1e-12);
}
