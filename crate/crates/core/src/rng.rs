//! Seed tree and Gaussian sampling.
//!
//! Every random stream is a ChaCha8 generator keyed by a 64-bit seed. Child
//! seeds are derived from a parent and a path of integer tags by folding each
//! tag through the SplitMix64 finalizer, so a stream depends only on its
//! position in the tree and never on scheduling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::psd_sqrt;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the node reached from `root` along `path`.
pub fn child_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(root), |acc, &tag| splitmix64(acc ^ splitmix64(tag)))
}

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn standard_normal(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Draws from `N(mean, cov)` using a symmetric square root, so singular
/// (including zero) covariances are allowed.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: DVector<f64>,
    root: DMatrix<f64>,
    zero: bool,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Self {
        let zero = cov.iter().all(|&v| v == 0.0);
        Self { mean, root: psd_sqrt(cov), zero }
    }

    pub fn centered(cov: &DMatrix<f64>) -> Self {
        Self::new(DVector::zeros(cov.nrows()), cov)
    }

    /// Draws a sample. The stream is consumed even for zero covariance so that
    /// all consumers of one stream stay aligned.
    pub fn sample(&self, rng: &mut impl Rng) -> DVector<f64> {
        let xi = standard_normal(rng, self.mean.len());
        if self.zero {
            self.mean.clone()
        } else {
            &self.mean + &self.root * xi
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_seeds_differ_by_path() {
        let a = child_seed(7, &[0, 1]);
        let b = child_seed(7, &[1, 0]);
        let c = child_seed(7, &[0, 1]);
        assert_ne!(a, b);
        assert_eq!(a, c);
        assert_ne!(child_seed(7, &[]), child_seed(8, &[]));
    }

    #[test]
    fn zero_covariance_returns_mean() {
        let g = Gaussian::new(DVector::from_vec(vec![1.0, -2.0]), &DMatrix::zeros(2, 2));
        let mut rng = stream(3);
        assert_eq!(g.sample(&mut rng), DVector::from_vec(vec![1.0, -2.0]));
    }
}
