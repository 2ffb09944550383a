use super::{binary_information, AnalyticsError, Tau1Curve};
use crate::protocols::ProtocolId;

/// Search bracket for the tolerable error rate.
pub const ROOT_BRACKET: (f64, f64) = (1e-6, 0.499);

/// Bisection stops once the bracket is narrower than this and `|R_del|` at
/// the midpoint is below it.
pub const ROOT_TOLERANCE: f64 = 1e-5;

/// Shrinkage for single-photon BB84 under individual attacks,
/// `τ₁(e) = log2(1 + 4e − 4e²)`, defined on `[0, 0.5)`.
pub fn tau1_bb84(e: f64) -> Result<f64, AnalyticsError> {
    if !(0.0..0.5).contains(&e) {
        return Err(AnalyticsError::OutOfDomain { e, lo: 0.0, hi: 0.5 });
    }
    Ok((1.0 + 4.0 * e - 4.0 * e * e).log2())
}

/// Secure bits per sifted bit when errors are corrected at the Shannon bound.
pub fn rate_corr(e: f64, tau1: &Tau1Curve) -> Result<f64, AnalyticsError> {
    Ok(binary_information(e) - tau1.eval(e)?)
}

/// Secure bits per sifted bit when erroneous bits are discarded.
pub fn rate_del(e: f64, tau1: &Tau1Curve) -> Result<f64, AnalyticsError> {
    Ok(binary_information(e) - tau1.eval(e)? * (1.0 - e) - e)
}

/// Fraction of sent signals that end up in the sifted key.
///
/// BB84 and B92 use ½ and six-state ⅓. The others use their ideal
/// sift fraction: ½ for 4+2 (basis agreement), 2/9 for Ekert with the
/// built-in direction sets, 1 for the two time-bin protocols.
pub fn sift_factor(protocol: ProtocolId) -> f64 {
    match protocol {
        ProtocolId::Bb84 | ProtocolId::B92 | ProtocolId::FourPlusTwo => 0.5,
        ProtocolId::SixState => 1.0 / 3.0,
        ProtocolId::Ekert => 2.0 / 9.0,
        ProtocolId::Gv | ProtocolId::KoashiImoto => 1.0,
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, AnalyticsError>
where
    F: Fn(f64) -> Result<f64, AnalyticsError>,
{
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(AnalyticsError::NoRoot { lo, hi, f_lo, f_hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 || (hi - lo < tol && f_mid.abs() < tol) {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Error rate at which `R_del` reaches zero.
pub fn find_tolerable_error(protocol: ProtocolId, tau1: &Tau1Curve) -> Result<f64, AnalyticsError> {
    tau1.check_protocol(protocol)?;
    let (dlo, dhi) = tau1.domain();
    let lo = ROOT_BRACKET.0.max(dlo);
    let hi = ROOT_BRACKET.1.min(dhi);
    bisect(|e| rate_del(e, tau1), lo, hi, ROOT_TOLERANCE)
}
