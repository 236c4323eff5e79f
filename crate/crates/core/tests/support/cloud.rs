//! Rotated, shifted Gaussian point clouds in three dimensions.

use molgan_core::neural::rng::stream;
use molgan_core::neural::Matrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// `n` points with axis scales `sd`, rotated by a fixed orthogonal map.
pub fn cloud(n: usize, sd: [f64; 3], seed: u64) -> Matrix {
    let mut rng = stream(seed, "cloud", &[]);
    let rot = [[0.6, -0.8, 0.0], [0.48, 0.36, -0.8], [0.64, 0.48, 0.6]];
    let mut m = Matrix::zeros((n, 3));
    for mut row in m.rows_mut() {
        let z: [f64; 3] = std::array::from_fn(|k| sd[k] * rng.sample::<f64, _>(StandardNormal));
        for i in 0..3 {
            row[i] = 1.5 + (0..3).map(|k| rot[i][k] * z[k]).sum::<f64>();
        }
    }
    m
}
