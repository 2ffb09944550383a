//! Session transcripts and their line-delimited form.
//!
//! One JSON object per line, each tagged by `"type"`:
//!
//! ```text
//! {"type":"header", ...}        exactly once, first
//! {"type":"signal", ...}        n_signals rows, index 0, 1, 2, ...
//! {"type":"announce", ...}      public discussion, in signal order
//! {"type":"eve-guess", ...}     Eve's post-announcement guesses
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{SessionConfig, SessionError, Setting};
use crate::channel::{AttackModel, ChannelParams, EveAction, EveGuess};

/// What the channel did to one signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelEvent {
    Clean,
    Depolarized,
    DarkCount,
    Lost,
    /// The weak signal was removed while its reference pulse arrived.
    Suppressed,
}

/// Bob's raw result, serialized as `0`, `1`, `?` (inconclusive) or `-` (no click).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BobOutcome {
    Bit(bool),
    Inconclusive,
    NoDetection,
}

impl BobOutcome {
    pub fn bit(self) -> Option<bool> {
        match self {
            BobOutcome::Bit(b) => Some(b),
            _ => None,
        }
    }

    pub fn clicked(self) -> bool {
        !matches!(self, BobOutcome::NoDetection)
    }
}

impl fmt::Display for BobOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BobOutcome::Bit(false) => "0",
            BobOutcome::Bit(true) => "1",
            BobOutcome::Inconclusive => "?",
            BobOutcome::NoDetection => "-",
        })
    }
}

impl FromStr for BobOutcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(BobOutcome::Bit(false)),
            "1" => Ok(BobOutcome::Bit(true)),
            "?" => Ok(BobOutcome::Inconclusive),
            "-" => Ok(BobOutcome::NoDetection),
            _ => Err(format!("unknown outcome {s:?}")),
        }
    }
}

impl TryFrom<String> for BobOutcome {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BobOutcome> for String {
    fn from(o: BobOutcome) -> Self {
        o.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRow {
    pub index: usize,
    pub alice_bit: u8,
    pub alice_setting: Setting,
    pub photons: u32,
    pub time_bin: u64,
    /// Bin in which Bob can read the signal out: after the delayed arm has arrived.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout_bin: Option<u64>,
    pub eve: EveAction,
    pub channel: ChannelEvent,
    pub bob_setting: Setting,
    pub bob_outcome: BobOutcome,
}

impl SignalRow {
    pub fn alice_bit(&self) -> bool {
        self.alice_bit != 0
    }
}

/// Public discussion about one detected signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Announcement {
    pub index: usize,
    /// Alice's setting when the protocol discloses it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice_setting: Option<Setting>,
    /// Bob's setting when the protocol discloses it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob_setting: Option<Setting>,
    /// Whether Bob's result was conclusive.
    pub conclusive: bool,
    /// Whether the position enters the sifted key.
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub config: SessionConfig,
    pub channel: ChannelParams,
    pub adversary: AttackModel,
    /// Free-form provenance: tool version, config hash and the like.
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum Line {
    Header(SessionHeader),
    Signal(SignalRow),
    Announce(Announcement),
    EveGuess(EveGuess),
}

/// Complete transcript of one run. Rows and events are append-only.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    header: SessionHeader,
    rows: Vec<SignalRow>,
    announcements: Vec<Announcement>,
    eve_guesses: Vec<EveGuess>,
}

impl SessionRecord {
    pub fn new(config: SessionConfig, channel: ChannelParams, adversary: AttackModel) -> Self {
        let n = config.n_signals;
        Self {
            header: SessionHeader {
                config,
                channel,
                adversary,
                meta: BTreeMap::new(),
            },
            rows: Vec::with_capacity(n),
            announcements: Vec::new(),
            eve_guesses: Vec::new(),
        }
    }

    /// Assemble a record from parts, checking the row numbering.
    pub fn from_parts(
        header: SessionHeader,
        rows: Vec<SignalRow>,
        announcements: Vec<Announcement>,
        eve_guesses: Vec<EveGuess>,
    ) -> Result<Self, SessionError> {
        let record = Self {
            header,
            rows,
            announcements,
            eve_guesses,
        };
        record.check()?;
        Ok(record)
    }

    pub fn header(&self) -> &SessionHeader {
        &self.header
    }

    pub fn config(&self) -> &SessionConfig {
        &self.header.config
    }

    pub fn rows(&self) -> &[SignalRow] {
        &self.rows
    }

    pub fn announcements(&self) -> &[Announcement] {
        &self.announcements
    }

    pub fn eve_guesses(&self) -> &[EveGuess] {
        &self.eve_guesses
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.header.meta.insert(key.into(), value.into());
    }

    pub(crate) fn push_row(&mut self, row: SignalRow) {
        debug_assert_eq!(row.index, self.rows.len());
        self.rows.push(row);
    }

    pub(crate) fn push_announcement(&mut self, a: Announcement) {
        self.announcements.push(a);
    }

    pub(crate) fn push_guess(&mut self, g: EveGuess) {
        self.eve_guesses.push(g);
    }

    fn check(&self) -> Result<(), SessionError> {
        let bad = |line: usize, detail: String| Err(SessionError::Transcript { line, detail });
        if self.rows.len() != self.header.config.n_signals {
            return bad(
                0,
                format!(
                    "header announces {} signals, found {}",
                    self.header.config.n_signals,
                    self.rows.len()
                ),
            );
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.index != i {
                return bad(i + 2, format!("signal index {} out of order, expected {i}", row.index));
            }
            if row.alice_bit > 1 {
                return bad(i + 2, format!("alice_bit {} is not a bit", row.alice_bit));
            }
        }
        let n = self.rows.len();
        let mut last = None;
        for a in &self.announcements {
            if a.index >= n || last.is_some_and(|l| a.index <= l) {
                return bad(0, format!("announcement for index {} out of order", a.index));
            }
            last = Some(a.index);
        }
        for g in &self.eve_guesses {
            if g.index >= n || g.guess > 1 {
                return bad(0, format!("bad eve guess at index {}", g.index));
            }
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), SessionError> {
        let mut line = |l: &Line| -> Result<(), SessionError> {
            serde_json::to_writer(&mut w, l).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
            Ok(())
        };
        line(&Line::Header(self.header.clone()))?;
        for r in &self.rows {
            line(&Line::Signal(r.clone()))?;
        }
        for a in &self.announcements {
            line(&Line::Announce(a.clone()))?;
        }
        for g in &self.eve_guesses {
            line(&Line::EveGuess(g.clone()))?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    /// Parse a transcript, enforcing section order and row numbering.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, SessionError> {
        let mut header = None;
        let mut rows = Vec::new();
        let mut announcements = Vec::new();
        let mut guesses = Vec::new();
        // 0 header, 1 signals, 2 announcements, 3 guesses
        let mut section = 0;
        for (i, text) in r.lines().enumerate() {
            let text = text?;
            let lineno = i + 1;
            if text.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&text).map_err(|e| SessionError::Transcript {
                line: lineno,
                detail: e.to_string(),
            })?;
            let (rank, allowed) = match &parsed {
                Line::Header(_) => (0, header.is_none() && section == 0),
                Line::Signal(_) => (1, header.is_some()),
                Line::Announce(_) => (2, header.is_some()),
                Line::EveGuess(_) => (3, header.is_some()),
            };
            if !allowed || rank < section {
                return Err(SessionError::Transcript {
                    line: lineno,
                    detail: "line out of section order".into(),
                });
            }
            section = rank;
            match parsed {
                Line::Header(h) => header = Some(h),
                Line::Signal(s) => rows.push(s),
                Line::Announce(a) => announcements.push(a),
                Line::EveGuess(g) => guesses.push(g),
            }
        }
        let header = header.ok_or(SessionError::Transcript {
            line: 1,
            detail: "missing header".into(),
        })?;
        Self::from_parts(header, rows, announcements, guesses)
    }
}
