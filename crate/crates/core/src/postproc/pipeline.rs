use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    authenticate, error_correct, estimate_qber, privacy_amplify_deducting, verify, AuthReservoir,
    AuthTag, CascadeParams, FinalKey, LeakageReport, PostprocError, ReconciledKey,
    DEFAULT_TAG_WIDTH,
};
use crate::analytics::{find_tolerable_error, SecurityStatement, Tau1Curve};
use crate::protocols::{sift, SessionRecord, SiftedKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Share of the sifted key sacrificed for error estimation.
    pub sample_fraction: f64,
    /// Security bits `n_S` removed in privacy amplification.
    pub n_s: u32,
    pub cascade: CascadeParams,
    pub tag_width: u32,
    /// Size of the secret shared before the session, for tags and padded parities.
    pub preshared_key_bits: usize,
    /// Continue past the tolerable error rate, marking the output insecure.
    pub override_insecure: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample_fraction: 0.1,
            n_s: 30,
            cascade: CascadeParams::default(),
            tag_width: DEFAULT_TAG_WIDTH,
            preshared_key_bits: 4096,
            override_insecure: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum PipelineStatus {
    Completed,
    /// The estimated error exceeds what the protocol tolerates.
    AbortedInsecure { e_hat: f64, tolerable_error: f64 },
    /// Reconciled, but no τ₁ curve was available to size the final key.
    NoTau1Source,
    ReconciliationFailed,
    KeyExhausted { n_fin: i64 },
    AuthenticationFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub status: PipelineStatus,
    /// Set when the run went past the abort threshold on request.
    pub insecure: bool,
    pub sifted_alice: SiftedKey,
    pub sifted_bob: SiftedKey,
    pub e_hat: f64,
    pub sample_size: usize,
    pub tolerable_error: Option<f64>,
    pub reconciled: Option<(ReconciledKey, ReconciledKey)>,
    pub final_alice: Option<FinalKey>,
    pub final_bob: Option<FinalKey>,
    pub leakage: LeakageReport,
    pub auth_tag: Option<AuthTag>,
    /// Pre-shared bits spent on tags and padded parities.
    pub preshared_consumed: usize,
    pub security: Option<SecurityStatement>,
}

impl PipelineOutcome {
    /// Final key length minus the pre-shared key it cost to produce.
    pub fn net_key_bits(&self) -> i64 {
        self.final_alice.as_ref().map_or(0, |k| k.n_fin as i64) - self.preshared_consumed as i64
    }
}

/// Sift, estimate, reconcile, authenticate and amplify one session.
///
/// Ordinary stopping points (too much error, failed reconciliation, no key
/// left) are reported in [`PipelineOutcome::status`]; `Err` is reserved for
/// unusable parameters.
pub fn run_pipeline<R: Rng + Clone>(
    record: &SessionRecord,
    config: &PipelineConfig,
    tau1: Option<&Tau1Curve>,
    rng: &mut R,
) -> Result<PipelineOutcome, PostprocError> {
    let protocol = record.config().protocol;
    let preshared: crate::bits::BitString = (0..config.preshared_key_bits).map(|_| rng.random::<bool>()).collect();
    let mut alice_secret = AuthReservoir::new(preshared.clone());
    let mut bob_secret = AuthReservoir::new(preshared);

    let (sifted_alice, sifted_bob) = sift(record);
    let est = estimate_qber(&sifted_alice, &sifted_bob, config.sample_fraction, rng)?;
    let tolerable_error = tau1.map(|c| find_tolerable_error(protocol, c)).transpose()?;

    let mut out = PipelineOutcome {
        status: PipelineStatus::Completed,
        insecure: false,
        sifted_alice,
        sifted_bob,
        e_hat: est.e_hat,
        sample_size: est.sample_size,
        tolerable_error,
        reconciled: None,
        final_alice: None,
        final_bob: None,
        leakage: LeakageReport {
            estimation_bits: est.sample_size,
            ..LeakageReport::default()
        },
        auth_tag: None,
        preshared_consumed: 0,
        security: None,
    };

    if let Some(e_star) = tolerable_error {
        if est.e_hat > e_star {
            if !config.override_insecure {
                out.status = PipelineStatus::AbortedInsecure {
                    e_hat: est.e_hat,
                    tolerable_error: e_star,
                };
                return Ok(out);
            }
            out.insecure = true;
        }
    }

    let block_estimate = est.e_hat.min(0.25);
    let (rec_a, rec_b, mut leakage) =
        match error_correct(&est.alice.bits, &est.bob.bits, block_estimate, &config.cascade, rng) {
            Ok(r) => r,
            Err(PostprocError::ReconciliationFailed) => {
                out.status = PipelineStatus::ReconciliationFailed;
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
    leakage.estimation_bits = est.sample_size;
    out.leakage = leakage;

    // Padded parities spend pre-shared key on both sides.
    alice_secret.take(out.leakage.encrypted_parity_bits)?;
    bob_secret.take(out.leakage.encrypted_parity_bits)?;

    // Authenticate what was said in public: the announcements are fixed by the
    // record, the rest by the counters below.
    let message = format!(
        "{}|{}|{}|{}|{}|{}",
        protocol,
        record.announcements().len(),
        est.sample_size,
        est.mismatches,
        out.leakage.parity_bits + out.leakage.encrypted_parity_bits,
        out.leakage.verification_bits
    );
    let tag = authenticate(message.as_bytes(), config.tag_width, &mut alice_secret)?;
    let accepted = verify(message.as_bytes(), &tag, &mut bob_secret)?;
    out.auth_tag = Some(tag);
    out.preshared_consumed = alice_secret.consumed();
    if !accepted {
        out.status = PipelineStatus::AuthenticationFailed;
        return Ok(out);
    }

    let Some(curve) = tau1 else {
        out.reconciled = Some((rec_a, rec_b));
        out.status = PipelineStatus::NoTau1Source;
        return Ok(out);
    };
    let tau = curve.eval(est.e_hat)?;
    let leak = out.leakage.key_leakage();
    let mut bob_rng = rng.clone();
    let final_a = privacy_amplify_deducting(&rec_a, tau, config.n_s, leak, rng);
    let final_b = privacy_amplify_deducting(&rec_b, tau, config.n_s, leak, &mut bob_rng);
    out.reconciled = Some((rec_a, rec_b));
    let (final_a, final_b) = match (final_a, final_b) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(PostprocError::KeyExhausted { n_fin }), _) => {
            out.status = PipelineStatus::KeyExhausted { n_fin };
            return Ok(out);
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };

    // Hoeffding: chance the true error rate exceeds the tolerable one given
    // the sample.
    let alpha = match tolerable_error {
        Some(e_star) if est.e_hat < e_star => {
            (-2.0 * est.sample_size as f64 * (e_star - est.e_hat).powi(2)).exp()
        }
        _ => 1.0,
    };
    let beta = out.reconciled.as_ref().map_or(1.0, |r| r.0.residual_mismatch_prob);
    out.security = Some(SecurityStatement::new(final_a.eve_info_bound, alpha, beta)?);
    out.final_alice = Some(final_a);
    out.final_bob = Some(final_b);
    Ok(out)
}
