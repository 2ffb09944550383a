//! Protocol state machines and sifting.
//!
//! [`run_session`] drives one key exchange signal by signal and returns a
//! [`SessionRecord`]: what Alice sent, what Eve did, what the channel did and
//! what Bob saw, followed by the public announcements and Eve's guesses.
//! [`sift`] turns a record into the two sifted keys.

mod chsh;
mod ensemble;
mod eve;
mod record;
mod session;
mod sift;

pub use chsh::{chsh_statistic, ChshEstimate, CHSH_MIN_PAIRS};
pub use ensemble::{gv_prepare, ki_prepare, EKERT_ALICE_DIRECTIONS, EKERT_BOB_DIRECTIONS};
pub use eve::{eve_knowledge, pns_counts, EveKnowledge, PnsCounts};
pub use record::{Announcement, BobOutcome, ChannelEvent, SessionHeader, SessionRecord, SignalRow};
pub use session::run_session;
pub use sift::{sift, SiftedKey};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{AttackKind, AttackModel, ChannelError};
use crate::qstate::{Basis, SourceModel, StateError};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("{attack:?} attack is not available against {protocol}")]
    IncompatibleAdversary { protocol: ProtocolId, attack: AttackKind },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("needs at least {needed} {what}, got {got}")]
    InsufficientSamples { what: &'static str, needed: usize, got: usize },
    #[error("malformed transcript at line {line}: {detail}")]
    Transcript { line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolId {
    Bb84,
    B92,
    FourPlusTwo,
    SixState,
    Ekert,
    Gv,
    KoashiImoto,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 7] = [
        ProtocolId::Bb84,
        ProtocolId::B92,
        ProtocolId::FourPlusTwo,
        ProtocolId::SixState,
        ProtocolId::Ekert,
        ProtocolId::Gv,
        ProtocolId::KoashiImoto,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Bb84 => "bb84",
            ProtocolId::B92 => "b92",
            ProtocolId::FourPlusTwo => "four-plus-two",
            ProtocolId::SixState => "six-state",
            ProtocolId::Ekert => "ekert",
            ProtocolId::Gv => "gv",
            ProtocolId::KoashiImoto => "koashi-imoto",
        }
    }

    /// Protocols whose weak signal travels with a strong reference pulse.
    pub fn has_reference_pulse(self) -> bool {
        matches!(self, ProtocolId::B92 | ProtocolId::FourPlusTwo)
    }

    /// Protocols whose two signals are sent in two time bins.
    pub fn is_time_bin(self) -> bool {
        matches!(self, ProtocolId::Gv | ProtocolId::KoashiImoto)
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolId {
    type Err = SessionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect();
        Ok(match key.as_str() {
            "bb84" => ProtocolId::Bb84,
            "b92" => ProtocolId::B92,
            "fourplustwo" | "4+2" => ProtocolId::FourPlusTwo,
            "sixstate" | "six" => ProtocolId::SixState,
            "ekert" | "e91" => ProtocolId::Ekert,
            "gv" | "goldenbergvaidman" => ProtocolId::Gv,
            "koashiimoto" | "ki" => ProtocolId::KoashiImoto,
            _ => return Err(SessionError::InvalidConfig(format!("unknown protocol {s:?}"))),
        })
    }
}

/// A measurement or preparation choice, serialized as a short string:
/// `Z`, `X`, `Y` for bases, `@45` for a direction in degrees, `fixed` when
/// the protocol has no choice to make.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Setting {
    Basis(Basis),
    Direction(f64),
    Fixed,
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Basis(b) => f.write_str(b.label()),
            Setting::Direction(d) => write!(f, "@{d}"),
            Setting::Fixed => f.write_str("fixed"),
        }
    }
}

impl FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "fixed" {
            return Ok(Setting::Fixed);
        }
        if let Some(deg) = s.strip_prefix('@') {
            return deg
                .parse()
                .map(Setting::Direction)
                .map_err(|_| format!("bad direction {s:?}"));
        }
        Basis::parse(s)
            .map(Setting::Basis)
            .ok_or_else(|| format!("unknown setting {s:?}"))
    }
}

impl TryFrom<String> for Setting {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Setting> for String {
    fn from(s: Setting) -> Self {
        s.to_string()
    }
}

fn default_overlap() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

fn default_reflectivity() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub protocol: ProtocolId,
    pub n_signals: usize,
    pub source: SourceModel,
    /// `|⟨u0|u1⟩|` of the B92 pair and of each 4+2 basis pair.
    #[serde(default = "default_overlap")]
    pub b92_overlap: f64,
    /// Beam-splitter reflectivity `R` of the asymmetric time-bin scheme.
    #[serde(default = "default_reflectivity")]
    pub ki_reflectivity: f64,
    /// Randomize the send time of each time-bin signal within its slot.
    #[serde(default)]
    pub random_send_times: bool,
    pub seed: u64,
}

impl SessionConfig {
    pub fn new(protocol: ProtocolId, n_signals: usize, seed: u64) -> Self {
        Self {
            protocol,
            n_signals,
            source: SourceModel::SinglePhoton,
            b92_overlap: default_overlap(),
            ki_reflectivity: default_reflectivity(),
            random_send_times: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if self.n_signals == 0 {
            return Err(SessionError::InvalidConfig("n_signals must be at least 1".into()));
        }
        self.source.validate()?;
        if !(0.0..1.0).contains(&self.b92_overlap) {
            return Err(SessionError::InvalidConfig(format!(
                "b92_overlap must lie in [0, 1), got {}",
                self.b92_overlap
            )));
        }
        if !(self.ki_reflectivity > 0.0 && self.ki_reflectivity < 1.0) {
            return Err(SessionError::InvalidConfig(format!(
                "ki_reflectivity must lie in (0, 1), got {}",
                self.ki_reflectivity
            )));
        }
        Ok(())
    }

    /// Which attacks are modeled against which protocol.
    pub fn check_adversary(&self, adversary: &AttackModel) -> Result<(), SessionError> {
        adversary.validate()?;
        let ok = match adversary.kind {
            AttackKind::None => true,
            AttackKind::InterceptResend => !self.protocol.is_time_bin(),
            AttackKind::PnsSplit => matches!(
                self.protocol,
                ProtocolId::Bb84 | ProtocolId::B92 | ProtocolId::FourPlusTwo | ProtocolId::SixState
            ),
        };
        if ok {
            Ok(())
        } else {
            Err(SessionError::IncompatibleAdversary {
                protocol: self.protocol,
                attack: adversary.kind,
            })
        }
    }
}
