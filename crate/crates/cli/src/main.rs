//! `qkdlab`: run simulated key exchanges, export rate tables and replay
//! transcripts.
//!
//! Exit codes: 0 success, 1 I/O failure or transcript mismatch, 2 config
//! error, 3 insecure abort, 4 reconciliation failure.

mod artifacts;
mod config;

use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use qkdlab::analytics::{export_curve, find_tolerable_error};
use qkdlab::channel::{pns_insecurity_check, AttackKind};
use qkdlab::postproc::{run_pipeline, PipelineOutcome, PipelineStatus};
use qkdlab::protocols::{
    chsh_statistic, eve_knowledge, pns_counts, run_session, sift, ProtocolId, SessionError, SessionRecord,
};
use qkdlab::qstate::SourceModel;

use artifacts::{remove_if_present, render_key, write, write_json, Provenance};
use config::{Overrides, Resolved};

#[derive(Parser)]
#[command(name = "qkdlab", version, about = "Desk-scale quantum key distribution lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session and the classical post-processing.
    Simulate(RunArgs),
    /// Export key rates against the error rate, with the tolerable-error root.
    Rates(RunArgs),
    /// Re-run the session recorded in a transcript and compare.
    VerifyTranscript {
        file: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed and the QKDLAB_SEED environment variable.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    protocol: Option<ProtocolId>,
    /// CSV with columns `e,tau1`.
    #[arg(long)]
    tau1_table: Option<PathBuf>,
    /// Keep going past the tolerable error rate; outputs are stamped INSECURE.
    #[arg(long)]
    override_insecure: bool,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Config(e.into())
}

fn session_err(e: SessionError) -> Failure {
    match e {
        SessionError::Io(_) => Failure::Runtime(e.into()),
        other => Failure::Config(other.into()),
    }
}

const OK: u8 = 0;
const MISMATCH: u8 = 1;
const INSECURE_ABORT: u8 = 3;
const RECONCILIATION_FAILURE: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Rates(args) => rates(&args),
        Command::VerifyTranscript { file } => verify_transcript(&file),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(e)) => {
            eprintln!("qkdlab: config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("qkdlab: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn resolve(args: &RunArgs, need_adversary: bool) -> Result<Resolved, Failure> {
    let (file, base) = config::load(args.config.as_deref()).map_err(config_err)?;
    config::resolve(
        file,
        base.as_deref(),
        Overrides {
            seed: args.seed,
            protocol: args.protocol,
            tau1_table: args.tau1_table.as_deref(),
            override_insecure: args.override_insecure,
        },
        need_adversary,
    )
    .map_err(config_err)
}

const KEY_FILES: [&str; 6] = [
    "sifted_alice.key",
    "sifted_bob.key",
    "reconciled_alice.key",
    "reconciled_bob.key",
    "final_alice.key",
    "final_bob.key",
];

fn simulate(args: &RunArgs) -> Result<u8, Failure> {
    let cfg = resolve(args, true)?;
    let seed = cfg.session.seed;
    let prov = Provenance::new(seed, cfg.hash());
    let out = &args.out;

    let mut record = run_session(&cfg.session, &cfg.channel, &cfg.adversary).map_err(session_err)?;
    for (k, v) in prov.pairs() {
        record.set_meta(k, v);
    }
    write(out, "transcript.jsonl", record.to_jsonl().as_bytes())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let outcome = run_pipeline(&record, &cfg.pipeline, cfg.tau1.as_ref(), &mut rng);

    for name in KEY_FILES {
        remove_if_present(out, name)?;
    }
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            remove_if_present(out, "leakage.json")?;
            let mut s = session_summary(&cfg, &prov, &record);
            s["status"] = json!({ "status": "postproc-error", "detail": e.to_string() });
            write_json(out, "summary.json", &s)?;
            return Err(config_err(anyhow!(e).context("post-processing")));
        }
    };
    write_keys(out, &cfg, &prov, &outcome)?;

    let mut leakage = serde_json::to_value(&outcome.leakage).context("leakage report")?;
    leakage["key_leakage"] = json!(outcome.leakage.key_leakage());
    leakage["total_public"] = json!(outcome.leakage.total_public());
    leakage["preshared_consumed"] = json!(outcome.preshared_consumed);
    leakage["provenance"] = json!(prov);
    write_json(out, "leakage.json", &leakage)?;

    write_json(out, "summary.json", &summary(&cfg, &prov, &record, &outcome))?;

    Ok(match outcome.status {
        PipelineStatus::Completed | PipelineStatus::NoTau1Source => {
            if outcome.insecure {
                eprintln!("qkdlab: e_hat above the tolerable error rate; outputs stamped INSECURE");
            }
            OK
        }
        PipelineStatus::AbortedInsecure { e_hat, tolerable_error } => {
            eprintln!("qkdlab: aborted, e_hat {e_hat:.4} exceeds tolerable {tolerable_error:.4}");
            INSECURE_ABORT
        }
        PipelineStatus::KeyExhausted { n_fin } => {
            eprintln!("qkdlab: aborted, privacy amplification leaves {n_fin} bits");
            INSECURE_ABORT
        }
        PipelineStatus::ReconciliationFailed => {
            eprintln!("qkdlab: reconciliation failed verification");
            RECONCILIATION_FAILURE
        }
        PipelineStatus::AuthenticationFailed => {
            eprintln!("qkdlab: authentication tag rejected");
            RECONCILIATION_FAILURE
        }
    })
}

fn write_keys(out: &Path, cfg: &Resolved, prov: &Provenance, o: &PipelineOutcome) -> anyhow::Result<()> {
    let mut base: Vec<(&str, String)> = prov.pairs().into();
    base.push(("protocol", cfg.session.protocol.to_string()));
    if o.insecure {
        base.push(("status", "INSECURE".into()));
    }
    let with = |stage: &str, party: &str| {
        let mut h = base.clone();
        h.push(("stage", stage.into()));
        h.push(("party", party.into()));
        h
    };
    let fmt = cfg.key_format;
    write(out, "sifted_alice.key", render_key(&o.sifted_alice.bits, fmt, &with("sifted", "alice")).as_bytes())?;
    write(out, "sifted_bob.key", render_key(&o.sifted_bob.bits, fmt, &with("sifted", "bob")).as_bytes())?;
    if let Some((a, b)) = &o.reconciled {
        write(out, "reconciled_alice.key", render_key(&a.bits, fmt, &with("reconciled", "alice")).as_bytes())?;
        write(out, "reconciled_bob.key", render_key(&b.bits, fmt, &with("reconciled", "bob")).as_bytes())?;
    }
    for (name, party, key) in [
        ("final_alice.key", "alice", &o.final_alice),
        ("final_bob.key", "bob", &o.final_bob),
    ] {
        if let Some(k) = key {
            let mut h = with("final", party);
            h.push(("n_S", k.n_s.to_string()));
            h.push(("tau1", format!("{:.12}", k.tau1)));
            h.push(("eve_info_bound", format!("{:e}", k.eve_info_bound)));
            h.push(("leak_deducted", k.leak_deducted.to_string()));
            write(out, name, render_key(&k.bits, fmt, &h).as_bytes())?;
        }
    }
    Ok(())
}

/// Fields that depend on the session alone.
fn session_summary(cfg: &Resolved, prov: &Provenance, record: &SessionRecord) -> serde_json::Value {
    let n = record.rows().len();
    let (sifted, _) = sift(record);
    let pns = pns_counts(record);
    let pns_flag = match cfg.session.source {
        SourceModel::SinglePhoton => None,
        SourceModel::Poisson { .. } => Some(pns_insecurity_check(pns.multi_photon_sent, pns.received)),
    };
    let chsh = (cfg.session.protocol == ProtocolId::Ekert).then(|| match chsh_statistic(record) {
        Ok(c) => json!(c),
        Err(e) => json!({ "error": e.to_string() }),
    });
    let eve = (cfg.adversary.kind == AttackKind::InterceptResend).then(|| eve_knowledge(record));
    json!({
        "provenance": prov,
        "protocol": cfg.session.protocol,
        "n_signals": n,
        "sifted_bits": sifted.len(),
        "sift_fraction": sifted.len() as f64 / n as f64,
        "qber": sifted.qber_truth,
        "tau1_source": cfg.tau1_label,
        "pns": {
            "multi_photon_sent": pns.multi_photon_sent,
            "received": pns.received,
            "flag": pns_flag,
        },
        "chsh": chsh,
        "eve_knowledge": eve,
    })
}

fn summary(cfg: &Resolved, prov: &Provenance, record: &SessionRecord, o: &PipelineOutcome) -> serde_json::Value {
    let mut s = session_summary(cfg, prov, record);
    let final_key = o.final_alice.as_ref();
    let extra = json!({
        "e_hat": o.e_hat,
        "sample_size": o.sample_size,
        "tolerable_error": o.tolerable_error,
        "status": o.status,
        "insecure": o.insecure,
        "n_rec": o.reconciled.as_ref().map(|r| r.0.n_rec),
        "n_fin": final_key.map_or(0, |k| k.n_fin),
        "net_key_bits": o.net_key_bits(),
        "tau1": final_key.map(|k| k.tau1),
        "n_S": cfg.pipeline.n_s,
        "eve_info_bound": final_key.map(|k| k.eve_info_bound),
        "keys_match": match (&o.final_alice, &o.final_bob) {
            (Some(a), Some(b)) => Some(a.bits == b.bits),
            _ => None,
        },
        "security": o.security,
        "auth": o.auth_tag.map(|t| json!({
            "tag_width": t.width,
            "key_bits_consumed": t.key_bits_consumed,
        })),
        "preshared_consumed": o.preshared_consumed,
    });
    if let (Some(map), serde_json::Value::Object(more)) = (s.as_object_mut(), extra) {
        map.extend(more);
    }
    s
}

fn rates(args: &RunArgs) -> Result<u8, Failure> {
    let cfg = resolve(args, false)?;
    let protocol = cfg.session.protocol;
    let curve = cfg.tau1.as_ref().ok_or_else(|| {
        config_err(anyhow!(
            "{protocol} has no built-in τ₁ curve; supply one with --tau1-table"
        ))
    })?;
    let grid = cfg.rates.grid(curve.domain()).map_err(config_err)?;
    let table = export_curve(protocol, curve, &grid).map_err(config_err)?;
    let root = find_tolerable_error(protocol, curve)
        .map(|r| format!("{r:.6}"))
        .unwrap_or_else(|_| "none".into());
    let prov = Provenance::new(cfg.session.seed, cfg.hash());
    let mut footer = vec![
        ("root", root),
        ("protocol", protocol.to_string()),
        ("tau1_source", curve.source().label().to_string()),
    ];
    footer.extend(prov.pairs());
    write(&args.out, "rates.csv", table.to_csv(&footer).as_bytes())?;
    Ok(OK)
}

fn verify_transcript(path: &Path) -> Result<u8, Failure> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(config_err)?;
    let recorded = SessionRecord::read_jsonl(BufReader::new(file)).map_err(config_err)?;
    let h = recorded.header();
    let mut replay = run_session(&h.config, &h.channel, &h.adversary).map_err(session_err)?;
    for (k, v) in &h.meta {
        replay.set_meta(k.clone(), v.clone());
    }
    if replay == recorded {
        println!("transcript verified: {} signals, seed {}", recorded.rows().len(), h.config.seed);
        return Ok(OK);
    }
    let (a, b) = (recorded.to_jsonl(), replay.to_jsonl());
    let line = a.lines().zip(b.lines()).position(|(x, y)| x != y).map_or_else(
        || a.lines().count().min(b.lines().count()) + 1,
        |i| i + 1,
    );
    eprintln!("qkdlab: transcript differs from replay at line {line}");
    Ok(MISMATCH)
}
