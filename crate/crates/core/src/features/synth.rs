use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::matrix::FeatureMatrix;
use crate::error::{Error, Result};

/// Isotropic Gaussian identity clouds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    pub identities: usize,
    pub samples_per_id: usize,
    pub dim: usize,
    /// Within-identity standard deviation `σ_w`.
    pub intra_spread: f64,
    /// Standard deviation of identity means, `σ_b`.
    pub inter_spread: f64,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            identities: 20,
            samples_per_id: 10,
            dim: 32,
            intra_spread: 1.0,
            inter_spread: 2.0,
            seed: 0,
        }
    }
}

/// Draws identity means from `N(0, σ_b² I)` and samples around each mean
/// from `N(mean, σ_w² I)`. Samples of one identity are contiguous.
pub fn gen_synthetic(params: &SyntheticParams) -> Result<(FeatureMatrix, Vec<u32>)> {
    let SyntheticParams {
        identities,
        samples_per_id,
        dim,
        intra_spread,
        inter_spread,
        seed,
    } = *params;
    if identities == 0 || samples_per_id == 0 || dim == 0 {
        return Err(Error::InvalidArgument(
            "identities, samples_per_id and dim must all be >= 1".into(),
        ));
    }
    if !(intra_spread > 0.0 && intra_spread.is_finite())
        || !(inter_spread > 0.0 && inter_spread.is_finite())
    {
        return Err(Error::InvalidArgument(format!(
            "spreads must be positive and finite, got intra={intra_spread} inter={inter_spread}"
        )));
    }
    let identities_u32 = u32::try_from(identities)
        .map_err(|_| Error::InvalidArgument("too many identities".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(identities * samples_per_id * dim);
    let mut labels = Vec::with_capacity(identities * samples_per_id);
    let mut mean = vec![0.0; dim];
    for id in 0..identities_u32 {
        for m in &mut mean {
            let z: f64 = StandardNormal.sample(&mut rng);
            *m = inter_spread * z;
        }
        for _ in 0..samples_per_id {
            for m in &mean {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(m + intra_spread * z);
            }
            labels.push(id);
        }
    }
    let features = FeatureMatrix::new(identities * samples_per_id, dim, data)?;
    Ok((features, labels))
}
