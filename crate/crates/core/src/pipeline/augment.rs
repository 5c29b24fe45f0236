use crate::error::Result;
use crate::image::{flip_horizontal, flip_vertical, Raster};

/// Originals, then their left-right mirrors, then their top-bottom mirrors.
/// Input and target of a pair are always flipped together.
pub fn augment_flips<R: Raster + Clone>(pairs: &[(R, R)]) -> Result<Vec<(R, R)>> {
    let mut out = Vec::with_capacity(3 * pairs.len());
    out.extend(pairs.iter().cloned());
    for (a, b) in pairs {
        out.push((flip_horizontal(a)?, flip_horizontal(b)?));
    }
    for (a, b) in pairs {
        out.push((flip_vertical(a)?, flip_vertical(b)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{ColorImage, GrayImage};

    #[test]
    fn triples_and_mirrors_consistently() {
        let a = GrayImage::from_fn(4, 3, |x, y| (x + 10 * y) as f64 / 40.0).unwrap();
        let b = ColorImage::from_fn(4, 3, |x, y| [x as f64 / 4.0, y as f64 / 3.0, 0.0]).unwrap();
        let pairs = vec![(a.clone(), a.clone()), (a.clone(), a.clone())];
        assert_eq!(augment_flips(&pairs).unwrap().len(), 6);
        let out = augment_flips(&[(b.clone(), b.clone())]).unwrap();
        assert_eq!(out[1].0.get(0, 1), b.get(3, 1));
        assert_eq!(out[2].1.get(2, 0), b.get(2, 2));
        assert_eq!(flip_horizontal(&out[1].0).unwrap(), b);
    }
}
