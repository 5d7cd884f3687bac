use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::GroupedSample;

/// Gaussian sample with the given group sizes; group `g` is shifted by `0.3 g`.
pub(crate) fn random_sample(seed: u64, sizes: &[usize], p: usize) -> GroupedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (g, &nk) in sizes.iter().enumerate() {
        for _ in 0..nk {
            for _ in 0..p {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(z + 0.3 * g as f64);
            }
            labels.push(g);
        }
    }
    GroupedSample::from_row_major(data, p, &labels).unwrap()
}

pub(crate) fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
