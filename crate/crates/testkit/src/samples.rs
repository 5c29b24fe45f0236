//! Random mixture datasets for EM checks.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::rng;

/// Gray samples drawn from one to four clipped Gaussians.
pub fn random_gray(seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let centres: Vec<(f64, f64)> = (0..r.random_range(1..5)).map(|_| (r.random_range(0.05..0.95), r.random_range(0.01..0.1))).collect();
    (0..r.random_range(60..400))
        .map(|_| {
            let (m, s) = centres[r.random_range(0..centres.len())];
            Normal::new(m, s).unwrap().sample(&mut r).clamp(0.0, 1.0)
        })
        .collect()
}

/// RGB samples drawn from one to four clipped isotropic Gaussians.
pub fn random_rgb(seed: u64) -> Vec<[f64; 3]> {
    let mut r = rng(seed);
    let centres: Vec<[f64; 3]> = (0..r.random_range(1..5)).map(|_| [0; 3].map(|_| r.random_range(0.05..0.95))).collect();
    let spread = r.random_range(0.01..0.12);
    (0..r.random_range(60..400))
        .map(|_| {
            let c = centres[r.random_range(0..centres.len())];
            c.map(|m| Normal::new(m, spread).unwrap().sample(&mut r).clamp(0.0, 1.0))
        })
        .collect()
}

/// Point masses at 0.2 (60%) and 0.8 (40%), `n` samples.
pub fn delta_clusters(n: usize) -> Vec<f64> {
    (0..n).map(|i| if i % 5 < 3 { 0.2 } else { 0.8 }).collect()
}

pub const BLOB_LIGHT: [f64; 3] = [0.85, 0.8, 0.7];
pub const BLOB_DARK: [f64; 3] = [0.2, 0.15, 0.3];

/// Two colour blobs with spread 0.03: two thirds light, one third dark.
pub fn two_blobs(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 0.03).unwrap();
    (0..n)
        .map(|i| {
            let c = if i % 3 == 0 { BLOB_DARK } else { BLOB_LIGHT };
            c.map(|m: f64| (m + noise.sample(&mut r)).clamp(0.0, 1.0))
        })
        .collect()
}
