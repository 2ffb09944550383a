use proptest::prelude::*;
use qkdlab::analytics::Tau1Curve;
use qkdlab::bits::BitString;
use qkdlab::channel::{AttackModel, ChannelParams};
use qkdlab::postproc::{
    authenticate, error_correct, estimate_qber, eve_info_bound, final_length, privacy_amplify,
    run_pipeline, verify, AuthReservoir, CascadeParams, PipelineConfig, PipelineStatus,
    PostprocError, ReconciledKey,
};
use qkdlab::protocols::{run_session, ProtocolId, SessionConfig, SiftedKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn key(bits: BitString) -> SiftedKey {
    let n = bits.len();
    SiftedKey { bits, positions: (0..n).collect(), qber_truth: 0.0 }
}

fn random_bits(n: usize, rng: &mut ChaCha8Rng) -> BitString {
    (0..n).map(|_| rng.random::<bool>()).collect()
}

#[test]
fn estimate_on_identical_keys() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = key(random_bits(1000, &mut rng));
    let est = estimate_qber(&a, &a, 0.2, &mut rng).unwrap();
    assert_eq!(est.e_hat, 0.0);
    assert_eq!(est.sample_size, 200);
    assert_eq!(est.alice.len(), 800);
    assert_eq!(est.alice.positions, est.bob.positions);
}

#[test]
fn estimate_with_a_quarter_wrong() {
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_bits(n, &mut rng);
    let mut b = a.clone();
    // Exactly 25% of positions differ.
    for i in rand::seq::index::sample(&mut rng, n, n / 4) {
        b.flip(i);
    }
    let est = estimate_qber(&key(a), &key(b), 0.5, &mut rng).unwrap();
    // Hypergeometric sd is below the binomial one.
    let sd = (0.25 * 0.75 / est.sample_size as f64).sqrt();
    assert!((est.e_hat - 0.25).abs() < 4.0 * sd);
}

#[test]
fn remaining_length_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (n, f) in [(100, 0.5), (1001, 0.1), (12345, 0.37)] {
        let a = key(random_bits(n, &mut rng));
        let est = estimate_qber(&a, &a, f, &mut rng).unwrap();
        assert_eq!(est.alice.len(), ((1.0 - f) * n as f64).ceil() as usize);
        assert_eq!(est.alice.len() + est.sample_size, n);
        assert!(est.alice.positions.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn estimate_refuses_small_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = key(random_bits(400, &mut rng));
    assert!(matches!(
        estimate_qber(&a, &a, 0.1, &mut rng),
        Err(PostprocError::Estimation { needed: 50, got: 40, .. })
    ));
    let short = key(random_bits(99, &mut rng));
    assert!(estimate_qber(&short, &short, 0.9, &mut rng).is_err());
}

#[test]
fn reconciliation_succeeds_at_high_error() {
    let mut ok = 0;
    for trial in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let a = random_bits(10_000, &mut rng);
        let b: BitString = a.iter().map(|x| x ^ rng.random_bool(0.15)).collect();
        if let Ok((ka, kb, _)) = error_correct(&a, &b, 0.15, &CascadeParams::default(), &mut rng) {
            assert_eq!(ka.bits, kb.bits);
            ok += 1;
        }
    }
    assert!(ok >= 99, "{ok}/100");
}

#[test]
fn privacy_amplified_bits_are_balanced() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 120_000;
    let rec = ReconciledKey {
        bits: random_bits(n, &mut rng),
        n_rec: n,
        leaked_bits: 0,
        residual_mismatch_prob: 0.0,
    };
    let fk = privacy_amplify(&rec, 0.1, 30, &mut rng).unwrap();
    assert!(fk.n_fin >= 100_000);
    let ones = fk.bits.count_ones() as f64;
    let m = fk.n_fin as f64;
    assert!((ones - m / 2.0).abs() < 4.0 * (m / 4.0).sqrt());
    // Neighbouring bits agree half the time.
    let same = fk.bits.as_slice().windows(2).filter(|w| w[0] == w[1]).count() as f64;
    assert!((same - (m - 1.0) / 2.0).abs() < 4.0 * ((m - 1.0) / 4.0).sqrt());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn final_length_formula(n_rec in 1usize..3000, tau1 in 0.0f64..=1.0, n_s in 0u32..64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rec = ReconciledKey {
            bits: random_bits(n_rec, &mut rng),
            n_rec,
            leaked_bits: 0,
            residual_mismatch_prob: 0.0,
        };
        let expected = ((1.0 - tau1) * n_rec as f64).floor() as i64 - n_s as i64;
        prop_assert_eq!(final_length(n_rec, tau1, n_s, 0), expected);
        match privacy_amplify(&rec, tau1, n_s, &mut rng) {
            Ok(fk) => {
                prop_assert_eq!(fk.n_fin as i64, expected);
                prop_assert_eq!(fk.bits.len() as i64, expected);
                let bound = (2f64.powi(-(n_s as i32)) + 1.0).log2();
                prop_assert!((fk.eve_info_bound - bound).abs() < 1e-12);
            }
            Err(PostprocError::KeyExhausted { n_fin }) => prop_assert!(n_fin < 1 && n_fin == expected),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn tags_verify(message in proptest::collection::vec(any::<u8>(), 0..200), seed: u64, width in 1u32..=64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let secret = AuthReservoir::new(random_bits(128, &mut rng));
        let (mut a, mut b) = (secret.clone(), secret);
        let tag = authenticate(&message, width, &mut a).unwrap();
        prop_assert!(verify(&message, &tag, &mut b).unwrap());
        prop_assert_eq!(tag.key_bits_consumed, 64 + width as usize);
    }
}

#[test]
fn single_bit_forgeries_fail() {
    let message = b"sifted positions 0..4096, e_hat 0.031".to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut accepted = 0;
    for k in 0..10_000 {
        let secret = AuthReservoir::new(random_bits(128, &mut rng));
        let tag = authenticate(&message, 64, &mut secret.clone()).unwrap();
        let mut forged = message.clone();
        forged[k % message.len()] ^= 1 << (k % 8);
        accepted += verify(&forged, &tag, &mut secret.clone()).unwrap() as usize;
    }
    assert_eq!(accepted, 0);
}

#[test]
fn narrow_tags_meet_their_bound() {
    // One message block plus the length block: degree 2, bound 2·2^-8.
    let message = b"abcdefgh".to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 10_000;
    let mut accepted = 0;
    for k in 0..trials {
        let secret = AuthReservoir::new(random_bits(72, &mut rng));
        let tag = authenticate(&message, 8, &mut secret.clone()).unwrap();
        let mut forged = message.clone();
        forged[k % 8] ^= 1 << (k % 7);
        accepted += verify(&forged, &tag, &mut secret.clone()).unwrap() as usize;
    }
    let p = 2.0 / 256.0;
    let limit = trials as f64 * p + 4.0 * (trials as f64 * p * (1.0 - p)).sqrt();
    assert!((accepted as f64) <= limit, "{accepted}");
}

fn bb84(n: usize, qber: f64, seed: u64) -> qkdlab::protocols::SessionRecord {
    run_session(
        &SessionConfig::new(ProtocolId::Bb84, n, seed),
        &ChannelParams::with_qber(qber),
        &AttackModel::none(),
    )
    .unwrap()
}

#[test]
fn pipeline_produces_matching_keys() {
    let record = bb84(40_000, 0.03, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let out = run_pipeline(&record, &PipelineConfig::default(), Some(&Tau1Curve::ClosedFormBb84), &mut rng).unwrap();
    assert_eq!(out.status, PipelineStatus::Completed);
    let (a, b) = (out.final_alice.as_ref().unwrap(), out.final_bob.as_ref().unwrap());
    assert_eq!(a.bits, b.bits);
    assert_eq!(a.leak_deducted, out.leakage.parity_bits + out.leakage.verification_bits);
    assert!(out.net_key_bits() > 0);
    let sec = out.security.unwrap();
    assert_eq!(sec.beta, 2f64.powi(-64));
    assert_eq!(sec.i_e_tol, eve_info_bound(30));
    assert!(sec.alpha < 1e-6);
    assert_eq!(out.preshared_consumed, 128);
}

#[test]
fn pipeline_aborts_or_stamps_above_the_cutoff() {
    let record = bb84(40_000, 0.13, 10);
    let curve = Tau1Curve::ClosedFormBb84;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let out = run_pipeline(&record, &PipelineConfig::default(), Some(&curve), &mut rng).unwrap();
    assert!(matches!(out.status, PipelineStatus::AbortedInsecure { .. }));
    assert!(out.final_alice.is_none());

    let config = PipelineConfig { override_insecure: true, ..PipelineConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let out = run_pipeline(&record, &config, Some(&curve), &mut rng).unwrap();
    assert!(out.insecure);
    assert!(!matches!(out.status, PipelineStatus::AbortedInsecure { .. }));
}

#[test]
fn pipeline_without_shrinkage_curve_stops_after_reconciliation() {
    let record = run_session(
        &SessionConfig::new(ProtocolId::SixState, 30_000, 12),
        &ChannelParams::with_qber(0.02),
        &AttackModel::none(),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let out = run_pipeline(&record, &PipelineConfig::default(), None, &mut rng).unwrap();
    assert_eq!(out.status, PipelineStatus::NoTau1Source);
    let (a, b) = out.reconciled.unwrap();
    assert_eq!(a.bits, b.bits);
}

#[test]
fn encrypted_parities_cost_preshared_key() {
    let record = bb84(40_000, 0.03, 14);
    let config = PipelineConfig {
        cascade: CascadeParams { encrypt_parities: true, ..CascadeParams::default() },
        preshared_key_bits: 10_000,
        ..PipelineConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let out = run_pipeline(&record, &config, Some(&Tau1Curve::ClosedFormBb84), &mut rng).unwrap();
    assert_eq!(out.status, PipelineStatus::Completed);
    assert_eq!(out.leakage.parity_bits, 0);
    assert_eq!(out.preshared_consumed, out.leakage.encrypted_parity_bits + 128);
    assert_eq!(out.final_alice.unwrap().leak_deducted, 64);

    let small = PipelineConfig { preshared_key_bits: 100, ..config };
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    assert!(matches!(
        run_pipeline(&record, &small, Some(&Tau1Curve::ClosedFormBb84), &mut rng),
        Err(PostprocError::AuthUnavailable { .. })
    ));
}

#[test]
fn net_key_changes_sign_around_the_cutoff() {
    let curve = Tau1Curve::ClosedFormBb84;
    let e_star = qkdlab::analytics::find_tolerable_error(ProtocolId::Bb84, &curve).unwrap();
    let config = PipelineConfig { override_insecure: true, ..PipelineConfig::default() };
    let net = |e: f64, seed: u64| {
        let record = bb84(100_000, e, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        run_pipeline(&record, &config, Some(&curve), &mut rng).unwrap()
    };
    let below = net(e_star - 0.02, 16);
    assert_eq!(below.status, PipelineStatus::Completed);
    assert!(below.net_key_bits() > 0);
    let above = net(e_star + 0.02, 17);
    assert!(above.final_alice.is_none(), "{:?}", above.status);
    assert!(above.net_key_bits() <= 0);
}
