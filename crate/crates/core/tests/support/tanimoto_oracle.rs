//! Bit-by-bit Tanimoto and all-pairs diversity.

use molgan_chem::{Fingerprint, FINGERPRINT_BITS};

pub fn tanimoto_bits(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let (mut both, mut either) = (0u32, 0u32);
    for k in 0..FINGERPRINT_BITS {
        let (x, y) = (a.get(k), b.get(k));
        both += (x && y) as u32;
        either += (x || y) as u32;
    }
    if either == 0 {
        1.0
    } else {
        both as f64 / either as f64
    }
}

pub fn all_pairs_diversity(fps: &[Fingerprint]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0;
    for i in 0..fps.len() {
        for j in 0..i {
            sum += tanimoto_bits(&fps[i], &fps[j]);
            count += 1;
        }
    }
    1.0 - sum / count as f64
}
