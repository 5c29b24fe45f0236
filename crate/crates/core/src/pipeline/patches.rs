use crate::error::{invalid, Error, Result};
use crate::image::Raster;
use crate::nn::Tensor;
use crate::scalar::Scalar;

/// Square patch anchors covering an image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchGrid {
    pub width: usize,
    pub height: usize,
    pub patch_size: usize,
    pub stride: usize,
    /// Top-left `(x, y)` corners, row-major.
    pub origins: Vec<(usize, usize)>,
}

/// Anchors `0, s, 2s, ...` that fit, plus `dim - p` if the tail is uncovered.
pub fn axis_anchors(dim: usize, patch: usize, stride: usize) -> Result<Vec<usize>> {
    if patch == 0 || stride == 0 || stride > patch {
        return Err(invalid(format!("stride {stride} must be in 1..={patch}")));
    }
    if patch > dim {
        return Err(invalid(format!("patch {patch} larger than image side {dim}")));
    }
    let mut out: Vec<usize> = (0..).map(|i| i * stride).take_while(|a| a + patch <= dim).collect();
    if out.last().is_some_and(|&a| a + patch < dim) {
        out.push(dim - patch);
    }
    Ok(out)
}

impl PatchGrid {
    pub fn new(width: usize, height: usize, patch_size: usize, stride: usize) -> Result<Self> {
        let xs = axis_anchors(width, patch_size, stride)?;
        let ys = axis_anchors(height, patch_size, stride)?;
        let origins = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();
        Ok(Self { width, height, patch_size, stride, origins })
    }

    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    /// Number of patches covering each pixel, row-major.
    pub fn coverage(&self) -> Vec<u32> {
        let mut c = vec![0u32; self.width * self.height];
        for &(ox, oy) in &self.origins {
            for y in oy..oy + self.patch_size {
                for v in &mut c[y * self.width + ox..y * self.width + ox + self.patch_size] {
                    *v += 1;
                }
            }
        }
        c
    }
}

fn crop<R: Raster>(img: &R, ox: usize, oy: usize, p: usize) -> Result<R> {
    let mut planes = Vec::with_capacity(img.channels() * p * p);
    for c in 0..img.channels() {
        for y in oy..oy + p {
            for x in ox..ox + p {
                planes.push(img.sample(c, x, y));
            }
        }
    }
    R::from_planes(p, p, &planes)
}

/// Cut an image into overlapping square patches.
pub fn patchify<R: Raster>(img: &R, patch_size: usize, stride: usize) -> Result<(PatchGrid, Vec<R>)> {
    let grid = PatchGrid::new(img.width(), img.height(), patch_size, stride)?;
    let patches = grid
        .origins
        .iter()
        .map(|&(x, y)| crop(img, x, y, patch_size))
        .collect::<Result<_>>()?;
    Ok((grid, patches))
}

/// Reassemble patches, averaging wherever they overlap.
pub fn stitch<R: Raster>(grid: &PatchGrid, patches: &[R]) -> Result<R> {
    if patches.len() != grid.origins.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} patches for a grid of {}",
            patches.len(),
            grid.origins.len()
        )));
    }
    let p = grid.patch_size;
    let channels = patches.first().map_or(1, |q| q.channels());
    if patches.iter().any(|q| q.width() != p || q.height() != p || q.channels() != channels) {
        return Err(Error::DimensionMismatch(format!("patches must all be {channels}x{p}x{p}")));
    }
    let (w, h) = (grid.width, grid.height);
    let mut mean = vec![0.0; channels * w * h];
    let mut count = vec![0u32; w * h];
    for (q, &(ox, oy)) in patches.iter().zip(&grid.origins) {
        for y in 0..p {
            for x in 0..p {
                let i = (oy + y) * w + ox + x;
                count[i] += 1;
                let k = count[i] as f64;
                for c in 0..channels {
                    // running mean keeps stitch(patchify(img)) bit-exact
                    let m = &mut mean[c * w * h + i];
                    *m += (q.sample(c, x, y) - *m) / k;
                }
            }
        }
    }
    R::from_planes(w, h, &mean)
}

/// Stack equally sized rasters into a `(n, c, p, p)` tensor.
pub fn to_tensor<T: Scalar, R: Raster>(patches: &[R]) -> Result<Tensor<T>> {
    let first = patches.first().ok_or_else(|| invalid("no patches"))?;
    let (c, h, w) = (first.channels(), first.height(), first.width());
    let mut data = Vec::with_capacity(patches.len() * c * h * w);
    for q in patches {
        if (q.channels(), q.height(), q.width()) != (c, h, w) {
            return Err(Error::DimensionMismatch("patches differ in shape".into()));
        }
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    data.push(T::from_f64_lossy(q.sample(ch, x, y)));
                }
            }
        }
    }
    Tensor::new([patches.len(), c, h, w], data)
}

/// Split a tensor back into rasters, one per batch element.
pub fn from_tensor<T: Scalar, R: Raster>(t: &Tensor<T>) -> Result<Vec<R>> {
    (0..t.batch())
        .map(|n| {
            let planes: Vec<f64> = t.sample(n).iter().map(|v| v.to_f64_lossy()).collect();
            let r = R::from_planes(t.width(), t.height(), &planes)?;
            if r.channels() != t.channels() {
                return Err(Error::DimensionMismatch(format!(
                    "tensor has {} channels, raster type holds {}",
                    t.channels(),
                    r.channels()
                )));
            }
            Ok(r)
        })
        .collect()
}
