//! Seeded randomness. Every sampler derives its stream from an explicit seed
//! so results are reproducible and independent of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{Matrix, C64};
use crate::spaces::Field;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; derives the child seed `index` of `master`.
pub fn split(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian(rng: &mut SeededRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_scalar(rng: &mut SeededRng, field: Field) -> C64 {
    match field {
        Field::Real => C64::new(gaussian(rng), 0.0),
        Field::Complex => C64::new(gaussian(rng), gaussian(rng)),
    }
}

pub fn gaussian_vector(rng: &mut SeededRng, dim: usize, field: Field) -> Vec<C64> {
    (0..dim).map(|_| gaussian_scalar(rng, field)).collect()
}

pub fn gaussian_matrix(rng: &mut SeededRng, rows: usize, cols: usize, field: Field) -> Matrix {
    let data: Vec<Vec<C64>> = (0..rows).map(|_| gaussian_vector(rng, cols, field)).collect();
    Matrix::from_rows(&data).expect("non-empty shape")
}

pub fn uniform(rng: &mut SeededRng) -> f64 {
    rng.random::<f64>()
}
