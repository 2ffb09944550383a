use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{QubitState, StateError};

/// Photon-number statistics of the transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceModel {
    /// Exactly one photon per pulse.
    SinglePhoton,
    /// Attenuated laser: Poisson photon number with mean `mu`.
    Poisson { mu: f64 },
}

impl SourceModel {
    pub fn validate(&self) -> Result<(), StateError> {
        match *self {
            SourceModel::SinglePhoton => Ok(()),
            SourceModel::Poisson { mu } if mu.is_finite() && mu >= 0.0 => Ok(()),
            SourceModel::Poisson { mu } => Err(StateError::InvalidMeanPhotonNumber(mu)),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u32, StateError> {
        match *self {
            SourceModel::SinglePhoton => Ok(1),
            SourceModel::Poisson { mu } => sample_photon_number(mu, rng),
        }
    }

    /// Probability that a pulse carries two or more photons.
    pub fn multi_photon_probability(&self) -> f64 {
        match *self {
            SourceModel::SinglePhoton => 0.0,
            SourceModel::Poisson { mu } => 1.0 - (-mu).exp() * (1.0 + mu),
        }
    }
}

/// One emitted pulse: the encoded state, how many photons carry it, and
/// the time bin it leaves the transmitter in.
#[derive(Debug, Clone)]
pub struct SignalPulse {
    pub state: QubitState,
    pub photon_count: u32,
    pub time_bin: u64,
}

impl SignalPulse {
    pub fn is_vacuum(&self) -> bool {
        self.photon_count == 0
    }

    pub fn is_multi_photon(&self) -> bool {
        self.photon_count >= 2
    }
}

/// Poisson-distributed photon number with mean `mu`.
pub fn sample_photon_number<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> Result<u32, StateError> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(StateError::InvalidMeanPhotonNumber(mu));
    }
    if mu == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mu).map_err(|_| StateError::InvalidMeanPhotonNumber(mu))?;
    Ok(dist.sample(rng) as u32)
}
