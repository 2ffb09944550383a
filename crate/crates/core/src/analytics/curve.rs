//! τ₁ curves and exported rate tables.
//!
//! Tables are plain CSV with a one-line header. Rate tables use the fixed
//! column order `e,I_AB,tau1,R_corr,R_del,rate_per_signal`; trailing lines
//! starting with `#` carry `key=value` metadata. A τ₁ table needs only the
//! `e` and `tau1` columns, so an exported rate table can be fed back in.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{binary_information, rate_corr, rate_del, sift_factor, tau1_bb84, AnalyticsError};
use crate::protocols::ProtocolId;

pub const RATE_HEADER: [&str; 6] = ["e", "I_AB", "tau1", "R_corr", "R_del", "rate_per_signal"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tau1Source {
    ClosedFormBb84,
    Constant,
    TabulatedFile,
}

impl Tau1Source {
    pub fn label(self) -> &'static str {
        match self {
            Tau1Source::ClosedFormBb84 => "closed-form-bb84",
            Tau1Source::Constant => "constant",
            Tau1Source::TabulatedFile => "tabulated-file",
        }
    }
}

/// Piecewise-linear τ₁(e) from tabulated points.
#[derive(Debug, Clone, PartialEq)]
pub struct Tau1Table {
    points: Vec<(f64, f64)>,
}

impl Tau1Table {
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self, AnalyticsError> {
        if points.len() < 2 {
            return Err(AnalyticsError::BadTable("need at least two rows".into()));
        }
        for (i, &(e, tau)) in points.iter().enumerate() {
            if !e.is_finite() || !tau.is_finite() {
                return Err(AnalyticsError::BadTable(format!("row {i} is not finite")));
            }
            if !(0.0..=1.0).contains(&tau) {
                return Err(AnalyticsError::BadTable(format!("row {i}: tau1 = {tau} outside [0, 1]")));
            }
            if !(0.0..=0.5).contains(&e) {
                return Err(AnalyticsError::BadTable(format!("row {i}: e = {e} outside [0, 0.5]")));
            }
            if i > 0 && e <= points[i - 1].0 {
                return Err(AnalyticsError::BadTable(format!("row {i}: e is not strictly increasing")));
            }
        }
        Ok(Self { points })
    }

    /// Parse a CSV table with at least `e` and `tau1` columns.
    pub fn from_csv(text: &str) -> Result<Self, AnalyticsError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| AnalyticsError::BadTable(e.to_string()))?
            .clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| AnalyticsError::BadTable(format!("missing column `{name}`")))
        };
        let (ci, ti) = (column("e")?, column("tau1")?);
        let mut points = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| AnalyticsError::BadTable(e.to_string()))?;
            let parse = |i: usize| -> Result<f64, AnalyticsError> {
                let field = record.get(i).unwrap_or("");
                field
                    .parse()
                    .map_err(|_| AnalyticsError::BadTable(format!("cannot parse `{field}` as a number")))
            };
            points.push((parse(ci)?, parse(ti)?));
        }
        Self::from_points(points)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn eval(&self, e: f64) -> Result<f64, AnalyticsError> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&e) {
            return Err(AnalyticsError::OutOfDomain { e, lo, hi });
        }
        let j = self.points.partition_point(|&(x, _)| x <= e).clamp(1, self.points.len() - 1);
        let (x0, y0) = self.points[j - 1];
        let (x1, y1) = self.points[j];
        Ok(y0 + (y1 - y0) * (e - x0) / (x1 - x0))
    }
}

/// τ₁ as a function of the error rate.
#[derive(Debug, Clone, PartialEq)]
pub enum Tau1Curve {
    ClosedFormBb84,
    Constant(f64),
    Tabulated(Tau1Table),
}

impl Tau1Curve {
    /// The curve shipped for `protocol`. Only BB84 has one.
    pub fn builtin_for(protocol: ProtocolId) -> Result<Self, AnalyticsError> {
        match protocol {
            ProtocolId::Bb84 => Ok(Tau1Curve::ClosedFormBb84),
            other => Err(AnalyticsError::UnsupportedWithoutTable {
                protocol: other.to_string(),
            }),
        }
    }

    pub fn source(&self) -> Tau1Source {
        match self {
            Tau1Curve::ClosedFormBb84 => Tau1Source::ClosedFormBb84,
            Tau1Curve::Constant(_) => Tau1Source::Constant,
            Tau1Curve::Tabulated(_) => Tau1Source::TabulatedFile,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            Tau1Curve::ClosedFormBb84 => (0.0, 0.5),
            Tau1Curve::Constant(_) => (0.0, 0.5),
            Tau1Curve::Tabulated(t) => t.domain(),
        }
    }

    pub fn eval(&self, e: f64) -> Result<f64, AnalyticsError> {
        match self {
            Tau1Curve::ClosedFormBb84 => tau1_bb84(e),
            Tau1Curve::Constant(c) => {
                if (0.0..=0.5).contains(&e) {
                    Ok(*c)
                } else {
                    Err(AnalyticsError::OutOfDomain { e, lo: 0.0, hi: 0.5 })
                }
            }
            Tau1Curve::Tabulated(t) => t.eval(e),
        }
    }

    /// The BB84 closed form does not describe other signal sets.
    pub fn check_protocol(&self, protocol: ProtocolId) -> Result<(), AnalyticsError> {
        match (self, protocol) {
            (Tau1Curve::ClosedFormBb84, p) if p != ProtocolId::Bb84 => {
                Err(AnalyticsError::UnsupportedWithoutTable { protocol: p.to_string() })
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub e: f64,
    pub i_ab: f64,
    pub tau1: f64,
    pub r_corr: f64,
    pub r_del: f64,
    /// `R_del` times the protocol sift factor.
    pub rate_per_signal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub protocol: ProtocolId,
    pub tau1_source: Tau1Source,
    pub samples: Vec<RateRow>,
}

/// Evaluate every rate on `grid`, which must be strictly increasing and
/// inside the curve's domain.
pub fn export_curve(
    protocol: ProtocolId,
    tau1: &Tau1Curve,
    grid: &[f64],
) -> Result<RateCurve, AnalyticsError> {
    tau1.check_protocol(protocol)?;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalyticsError::BadTable("grid must be strictly increasing".into()));
    }
    let factor = sift_factor(protocol);
    let samples = grid
        .iter()
        .map(|&e| {
            let r_del = rate_del(e, tau1)?;
            Ok(RateRow {
                e,
                i_ab: binary_information(e),
                tau1: tau1.eval(e)?,
                r_corr: rate_corr(e, tau1)?,
                r_del,
                rate_per_signal: factor * r_del,
            })
        })
        .collect::<Result<Vec<_>, AnalyticsError>>()?;
    Ok(RateCurve {
        protocol,
        tau1_source: tau1.source(),
        samples,
    })
}

impl RateCurve {
    /// Render as CSV; `footer` entries become trailing `# key=value` lines.
    pub fn to_csv(&self, footer: &[(&str, String)]) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(RATE_HEADER).expect("in-memory write");
        for r in &self.samples {
            writer
                .write_record(
                    [r.e, r.i_ab, r.tau1, r.r_corr, r.r_del, r.rate_per_signal].map(|v| format!("{v:.12}")),
                )
                .expect("in-memory write");
        }
        let mut out = String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("ascii output");
        for (k, v) in footer {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }

    /// Parse a table written by [`RateCurve::to_csv`]. Footer lines are ignored
    /// except `protocol` and `tau1_source`.
    pub fn from_csv(text: &str) -> Result<Self, AnalyticsError> {
        let mut protocol = None;
        let mut source = Tau1Source::TabulatedFile;
        for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
            if let Some((k, v)) = line.trim().split_once('=') {
                match k.trim() {
                    "protocol" => protocol = v.trim().parse::<ProtocolId>().ok(),
                    "tau1_source" => {
                        source = match v.trim() {
                            "closed-form-bb84" => Tau1Source::ClosedFormBb84,
                            "constant" => Tau1Source::Constant,
                            _ => Tau1Source::TabulatedFile,
                        }
                    }
                    _ => {}
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| AnalyticsError::BadTable(e.to_string()))?;
        if headers.iter().ne(RATE_HEADER.iter().copied()) {
            return Err(AnalyticsError::BadTable(format!(
                "expected header {}",
                RATE_HEADER.join(",")
            )));
        }
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| AnalyticsError::BadTable(e.to_string()))?;
            let v: Vec<f64> = record
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| AnalyticsError::BadTable(e.to_string()))?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(AnalyticsError::BadTable("non-finite value".into()));
            }
            samples.push(RateRow {
                e: v[0],
                i_ab: v[1],
                tau1: v[2],
                r_corr: v[3],
                r_del: v[4],
                rate_per_signal: v[5],
            });
        }
        if samples.windows(2).any(|w| w[1].e <= w[0].e) {
            return Err(AnalyticsError::BadTable("e column must be strictly increasing".into()));
        }
        Ok(Self {
            protocol: protocol.ok_or_else(|| AnalyticsError::BadTable("missing `# protocol=` footer".into()))?,
            tau1_source: source,
            samples,
        })
    }
}
