//! Image-feature grids: deterministic pseudo features for desk-scale runs,
//! and `IFEA` files for externally extracted ones.

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::digest::sha256_bytes;
use crate::matrix_file::{self, FEATURE_MAGIC};
use crate::{Error, Result};

/// A `regions × dim` grid with entries in `[-1, 1]`, seeded by the SHA-256
/// of `sample_id`.
pub fn pseudo_image_features(sample_id: &str, regions: usize, dim: usize) -> Array2<f64> {
    let digest = sha256_bytes(sample_id.as_bytes());
    let mut rng = ChaCha8Rng::from_seed(digest);
    Array2::from_shape_fn((regions, dim), |_| rng.gen_range(-1.0..=1.0))
}

pub fn load_image_features(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let grid = matrix_file::load(path, FEATURE_MAGIC)?;
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("image features contain non-finite values".into()));
    }
    Ok(grid)
}

pub fn save_image_features(path: impl AsRef<Path>, grid: &Array2<f64>) -> Result<()> {
    matrix_file::save(path, FEATURE_MAGIC, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_features_are_seeded_by_id() {
        let a = pseudo_image_features("a1", 4, 6);
        assert_eq!(a, pseudo_image_features("a1", 4, 6));
        assert_ne!(a, pseudo_image_features("a2", 4, 6));
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn feature_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.ifea");
        let g = pseudo_image_features("x", 3, 2);
        save_image_features(&path, &g).unwrap();
        assert_eq!(load_image_features(&path).unwrap(), g);
    }
}
