//! Run configuration: a TOML file with one section per stage.
//!
//! ```toml
//! [session]
//! protocol = "bb84"
//! n_signals = 100000
//! seed = 42                 # optional
//! mu = 0.1                  # optional; omitted means a single-photon source
//!
//! [channel]
//! depolarize_prob = 0.1
//!
//! [adversary]               # every key required
//! kind = "intercept-resend"
//! fraction = 1.0
//! eve_bases = ["Z", "X"]
//! delayed_readout = true
//!
//! [postproc]
//! n_s = 30
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qkdlab::analytics::{Tau1Curve, Tau1Table};
use qkdlab::channel::{AttackKind, AttackModel, ChannelParams, NoiseOrder};
use qkdlab::postproc::{CascadeParams, PipelineConfig};
use qkdlab::protocols::{ProtocolId, SessionConfig};
use qkdlab::qstate::{Basis, SourceModel};

pub const SEED_ENV: &str = "QKDLAB_SEED";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub session: SessionSection,
    #[serde(default)]
    pub channel: ChannelSection,
    pub adversary: Option<AdversarySection>,
    #[serde(default)]
    pub postproc: PostprocSection,
    #[serde(default)]
    pub rates: RatesSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SessionSection {
    pub protocol: ProtocolId,
    pub n_signals: usize,
    pub seed: Option<u64>,
    /// Mean photon number of a weak-pulse source.
    pub mu: Option<f64>,
    pub b92_overlap: f64,
    pub ki_reflectivity: f64,
    pub random_send_times: bool,
}

impl Default for SessionSection {
    fn default() -> Self {
        Self {
            protocol: ProtocolId::Bb84,
            n_signals: 10_000,
            seed: None,
            mu: None,
            b92_overlap: std::f64::consts::FRAC_1_SQRT_2,
            ki_reflectivity: 0.5,
            random_send_times: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub depolarize_prob: f64,
    pub loss_prob: f64,
    pub dark_count_prob: f64,
    pub noise_order: NoiseOrder,
}

/// No defaults here: an absent key is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    pub kind: AttackKind,
    pub fraction: f64,
    pub eve_bases: Vec<String>,
    pub delayed_readout: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostprocSection {
    pub sample_fraction: f64,
    pub n_s: u32,
    pub passes: usize,
    pub block_factor: f64,
    pub verification_bits: usize,
    pub encrypt_parities: bool,
    pub tag_width: u32,
    pub preshared_key_bits: usize,
    /// Path to an `e,tau1` CSV, relative to the config file.
    pub tau1_table: Option<String>,
    pub key_format: KeyFormat,
}

impl Default for PostprocSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            sample_fraction: p.sample_fraction,
            n_s: p.n_s,
            passes: p.cascade.passes,
            block_factor: p.cascade.block_factor,
            verification_bits: p.cascade.verification_bits,
            encrypt_parities: p.cascade.encrypt_parities,
            tag_width: p.tag_width,
            preshared_key_bits: p.preshared_key_bits,
            tau1_table: None,
            key_format: KeyFormat::Hex,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyFormat {
    #[default]
    Hex,
    Bits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesSection {
    pub grid_start: f64,
    pub grid_end: f64,
    pub grid_step: f64,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self {
            grid_start: 0.0,
            grid_end: 0.25,
            grid_step: 0.005,
        }
    }
}

impl RatesSection {
    /// Grid points clipped to `domain`.
    pub fn grid(&self, domain: (f64, f64)) -> Result<Vec<f64>> {
        if !(self.grid_step > 0.0) || self.grid_end < self.grid_start {
            bail!("rates grid needs grid_step > 0 and grid_end >= grid_start");
        }
        let steps = ((self.grid_end - self.grid_start) / self.grid_step + 1e-9).floor() as usize;
        let grid: Vec<f64> = (0..=steps)
            .map(|i| self.grid_start + i as f64 * self.grid_step)
            .filter(|&e| e >= domain.0 && e <= domain.1)
            .collect();
        if grid.is_empty() {
            bail!("rates grid has no point inside the τ₁ domain [{}, {})", domain.0, domain.1);
        }
        Ok(grid)
    }
}

/// Everything a command needs, after the command line has been applied.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub session: SessionConfig,
    pub channel: ChannelParams,
    pub adversary: AttackModel,
    pub pipeline: PipelineConfig,
    pub key_format: KeyFormat,
    pub rates: RatesSection,
    /// τ₁ source: `closed-form-bb84`, a table path, or absent.
    pub tau1_label: Option<String>,
    #[serde(skip)]
    pub tau1: Option<Tau1Curve>,
    /// SHA-256 of the table file, when one is used.
    pub tau1_table_sha256: Option<String>,
}

pub struct Overrides<'a> {
    pub seed: Option<u64>,
    pub protocol: Option<ProtocolId>,
    pub tau1_table: Option<&'a Path>,
    pub override_insecure: bool,
}

pub fn load(path: Option<&Path>) -> Result<(FileConfig, Option<std::path::PathBuf>)> {
    let Some(path) = path else {
        return Ok((FileConfig::default(), None));
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg: FileConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((cfg, path.parent().map(Path::to_path_buf)))
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(None),
    }
}

/// Apply precedence: command line, then config file, then the environment.
pub fn resolve(
    file: FileConfig,
    base: Option<&Path>,
    over: Overrides<'_>,
    need_adversary: bool,
) -> Result<Resolved> {
    let s = &file.session;
    let seed = match (over.seed, s.seed) {
        (Some(x), _) | (None, Some(x)) => x,
        (None, None) => seed_from_env()?.unwrap_or(0),
    };
    let protocol = over.protocol.unwrap_or(s.protocol);
    let session = SessionConfig {
        protocol,
        n_signals: s.n_signals,
        source: match s.mu {
            Some(mu) => SourceModel::Poisson { mu },
            None => SourceModel::SinglePhoton,
        },
        b92_overlap: s.b92_overlap,
        ki_reflectivity: s.ki_reflectivity,
        random_send_times: s.random_send_times,
        seed,
    };
    session.validate()?;

    let c = &file.channel;
    let channel = ChannelParams {
        depolarize_prob: c.depolarize_prob,
        loss_prob: c.loss_prob,
        dark_count_prob: c.dark_count_prob,
        noise_order: c.noise_order,
    };
    channel.validate()?;

    let adversary = match (&file.adversary, need_adversary) {
        (Some(a), _) => {
            let eve_bases = a
                .eve_bases
                .iter()
                .map(|b| Basis::parse(b).with_context(|| format!("unknown basis {b:?} in eve_bases")))
                .collect::<Result<Vec<_>>>()?;
            AttackModel {
                kind: a.kind,
                fraction: a.fraction,
                eve_bases,
                delayed_readout: a.delayed_readout,
            }
        }
        (None, true) => bail!("the [adversary] section is required; write kind = \"none\" for an honest run"),
        (None, false) => AttackModel::none(),
    };
    if need_adversary {
        session.check_adversary(&adversary)?;
    }

    let p = &file.postproc;
    let pipeline = PipelineConfig {
        sample_fraction: p.sample_fraction,
        n_s: p.n_s,
        cascade: CascadeParams {
            passes: p.passes,
            block_factor: p.block_factor,
            verification_bits: p.verification_bits,
            encrypt_parities: p.encrypt_parities,
        },
        tag_width: p.tag_width,
        preshared_key_bits: p.preshared_key_bits,
        override_insecure: over.override_insecure,
    };

    let table_path = match (over.tau1_table, &p.tau1_table) {
        (Some(path), _) => Some(path.to_path_buf()),
        (None, Some(rel)) => Some(base.map_or_else(|| rel.into(), |b| b.join(rel))),
        (None, None) => None,
    };
    let (tau1, tau1_label, tau1_table_sha256) = match table_path {
        Some(path) => {
            let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
            let text = String::from_utf8(bytes.clone()).context("τ₁ table is not UTF-8")?;
            let table = Tau1Table::from_csv(&text)?;
            (
                Some(Tau1Curve::Tabulated(table)),
                Some("tabulated-file".to_string()),
                Some(hex::encode(Sha256::digest(&bytes))),
            )
        }
        None => match Tau1Curve::builtin_for(protocol) {
            Ok(curve) => (Some(curve), Some("closed-form-bb84".to_string()), None),
            Err(_) => (None, None, None),
        },
    };

    Ok(Resolved {
        session,
        channel,
        adversary,
        pipeline,
        key_format: p.key_format,
        rates: file.rates,
        tau1_label,
        tau1,
        tau1_table_sha256,
    })
}

impl Resolved {
    /// SHA-256 over the canonical JSON of the resolved settings.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}
