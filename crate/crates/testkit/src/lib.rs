//! Independent reference implementations and numerical gradient checks used
//! by the integration suites and the acceptance run.

pub mod fd;
pub mod oracle;
pub mod samples;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use docrestore::BinaryMask;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random mask with roughly `density` of its pixels set.
pub fn random_mask(w: usize, h: usize, density: f64, rng: &mut ChaCha8Rng) -> BinaryMask {
    BinaryMask::new(w, h, (0..w * h).map(|_| rng.random_bool(density)).collect()).expect("positive dims")
}

/// Random mask made of short strokes and blobs, closer to text than noise.
pub fn random_blobby_mask(w: usize, h: usize, rng: &mut ChaCha8Rng) -> BinaryMask {
    let mut bits = vec![false; w * h];
    for _ in 0..rng.random_range(1..6) {
        let (mut x, mut y) = (rng.random_range(0..w) as isize, rng.random_range(0..h) as isize);
        let thick = rng.random_range(1..3i32) as isize;
        for _ in 0..rng.random_range(2..12) {
            for dy in 0..thick {
                for dx in 0..thick {
                    let (px, py) = (x + dx, y + dy);
                    if px >= 0 && py >= 0 && (px as usize) < w && (py as usize) < h {
                        bits[py as usize * w + px as usize] = true;
                    }
                }
            }
            x += rng.random_range(-1..=1i32) as isize;
            y += rng.random_range(-1..=1i32) as isize;
        }
    }
    BinaryMask::new(w, h, bits).expect("positive dims")
}
