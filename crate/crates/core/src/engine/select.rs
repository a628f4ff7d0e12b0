use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngExt};

use crate::model::StateArchive;

/// Uniform choice over archive entries.
pub fn select_uniform<R: Rng + ?Sized>(archive: &StateArchive, rng: &mut R) -> usize {
    assert!(!archive.is_empty(), "cannot select from an empty archive");
    rng.random_range(0..archive.len())
}

/// Selection weights proportional to `visits^-alpha`.
pub fn novelty_weights(archive: &StateArchive, alpha: f64) -> Vec<f64> {
    archive.entries().iter().map(|e| (e.visits.max(1) as f64).powf(-alpha)).collect()
}

/// Samples an entry with probability proportional to `visits^-alpha`.
pub fn select_novelty<R: Rng + ?Sized>(archive: &StateArchive, alpha: f64, rng: &mut R) -> usize {
    assert!(!archive.is_empty(), "cannot select from an empty archive");
    let weights = novelty_weights(archive, alpha);
    match WeightedIndex::new(&weights) {
        Ok(dist) => dist.sample(rng),
        // all weights underflowed to zero: fall back to uniform
        Err(_) => select_uniform(archive, rng),
    }
}
