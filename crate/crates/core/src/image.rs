//! Raster containers and the pixel-level operations the pipeline is built on.
//!
//! All computation happens on normalized `f64` samples in `[0, 1]`; 8-bit
//! values only appear when reading or writing files.

use crate::error::{invalid, Error, Result};

/// Convert a normalized sample to its 8-bit storage value.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

#[inline]
pub fn dequantize(v: u8) -> f64 {
    v as f64 / 255.0
}

/// Luma weights applied to (R, G, B) for bright writing media.
///
/// These are the published coefficients; they sum to 0.99, not 1.
pub const LUMA_WEIGHTS: [f64; 3] = [0.30, 0.59, 0.10];

#[inline]
pub fn luma(rgb: [f64; 3]) -> f64 {
    LUMA_WEIGHTS[0] * rgb[0] + LUMA_WEIGHTS[1] * rgb[1] + LUMA_WEIGHTS[2] * rgb[2]
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(invalid(format!("image dimensions must be positive, got {width}x{height}")));
    }
    Ok(())
}

/// Single channel image with normalized samples.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} gray image needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        check_dims(width, height)?;
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Ok(Self { width, height, data })
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| dequantize(b)).collect())
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// RGB image with normalized channels, stored as interleaved triples.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} colour image needs {} samples, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let data = std::iter::repeat_n(rgb, width * height).flatten().collect();
        Ok(Self { width, height, data })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Ok(Self { width, height, data })
    }

    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| dequantize(b)).collect())
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    /// Extract one channel as a gray image.
    pub fn channel(&self, c: usize) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().skip(c).step_by(3).copied().collect(),
        }
    }

    pub fn from_channels(r: &GrayImage, g: &GrayImage, b: &GrayImage) -> Result<Self> {
        if r.width != g.width || r.width != b.width || r.height != g.height || r.height != b.height {
            return Err(Error::DimensionMismatch("channel planes differ in size".into()));
        }
        let data = r
            .data
            .iter()
            .zip(&g.data)
            .zip(&b.data)
            .flat_map(|((&r, &g), &b)| [r, g, b])
            .collect();
        Ok(Self { width: r.width, height: r.height, data })
    }
}

/// Per-pixel foreground flags; `true` marks text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{width}x{height} mask needs {} bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        check_dims(width, height)?;
        let bits = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Ok(Self { width, height, bits })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn same_dims(&self, other: &Self) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Document rendering: text black, background white.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 0.0 } else { 1.0 }).collect(),
        }
    }

    /// Dark pixels (below one half) become text.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            bits: img.data.iter().map(|&v| v < 0.5).collect(),
        }
    }
}

/// 256-bin histogram of 8-bit gray levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram256 {
    pub bins: [u64; 256],
    pub total: u64,
}

pub fn histogram(img: &GrayImage) -> Histogram256 {
    let mut bins = [0u64; 256];
    for &v in img.data() {
        bins[quantize(v) as usize] += 1;
    }
    Histogram256 { bins, total: img.data().len() as u64 }
}

/// Monotone intensity map applied before thresholding.
#[derive(Clone, Debug, PartialEq)]
pub enum ContrastTransform {
    Identity,
    /// `v = I^exponent`
    Gamma(f64),
    /// `v = ln(1 + s I) / ln(1 + s)`
    Log(f64),
    /// Linear interpolation between `(input, output)` control points that
    /// start at input 0 and end at input 1.
    Piecewise(Vec<(f64, f64)>),
}

impl Default for ContrastTransform {
    fn default() -> Self {
        ContrastTransform::Gamma(0.8)
    }
}

impl ContrastTransform {
    pub fn validate(&self) -> Result<()> {
        match self {
            ContrastTransform::Identity => Ok(()),
            ContrastTransform::Gamma(e) if *e > 0.0 && e.is_finite() => Ok(()),
            ContrastTransform::Gamma(e) => Err(invalid(format!("gamma exponent must be positive, got {e}"))),
            ContrastTransform::Log(s) if *s > 0.0 && s.is_finite() => Ok(()),
            ContrastTransform::Log(s) => Err(invalid(format!("log scale must be positive, got {s}"))),
            ContrastTransform::Piecewise(points) => {
                if points.len() < 2 {
                    return Err(invalid("piecewise transform needs at least two control points"));
                }
                if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
                    return Err(invalid("piecewise control points must span inputs 0 to 1"));
                }
                for &(x, y) in points {
                    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                        return Err(invalid(format!("control point ({x}, {y}) outside [0,1]")));
                    }
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(invalid("piecewise control inputs must be strictly increasing"));
                    }
                    if w[1].1 < w[0].1 {
                        return Err(invalid(format!(
                            "piecewise transform is not monotone between inputs {} and {}",
                            w[0].0, w[1].0
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Evaluate on a single normalized sample.
    pub fn eval(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        match self {
            ContrastTransform::Identity => v,
            ContrastTransform::Gamma(e) => v.powf(*e),
            ContrastTransform::Log(s) => (1.0 + s * v).ln() / (1.0 + s).ln(),
            ContrastTransform::Piecewise(points) => {
                let i = points.partition_point(|p| p.0 <= v).clamp(1, points.len() - 1);
                let (x0, y0) = points[i - 1];
                let (x1, y1) = points[i];
                y0 + (y1 - y0) * (v - x0) / (x1 - x0)
            }
        }
    }
}

/// Per-pixel `v = T(I)`.
pub fn apply_contrast(img: &GrayImage, t: &ContrastTransform) -> Result<GrayImage> {
    t.validate()?;
    if matches!(t, ContrastTransform::Identity) {
        return Ok(img.clone());
    }
    Ok(img.map(|v| t.eval(v)))
}

/// Weighted luma conversion for bright media.
pub fn to_gray_luma(img: &ColorImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        data: img.pixels().map(|p| luma(p).clamp(0.0, 1.0)).collect(),
    }
}

/// Channel maximum, used for dark media.
pub fn to_gray_max(img: &ColorImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        data: img.pixels().map(|p| p[0].max(p[1]).max(p[2])).collect(),
    }
}

/// Normalized 1-D Gaussian taps, radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("blur sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

fn blur_plane(src: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0;
            for (t, &w) in taps.iter().enumerate() {
                acc += w * row[clamp(x as isize + t as isize - r, width)];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for (t, &w) in taps.iter().enumerate() {
            let sy = clamp(y as isize + t as isize - r, height);
            let src_row = &tmp[sy * width..(sy + 1) * width];
            let dst_row = &mut out[y * width..(y + 1) * width];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += w * s;
            }
        }
    }
    out
}

/// Separable Gaussian blur with edge replication.
pub trait GaussianBlur: Sized {
    fn gaussian_blur(&self, sigma: f64) -> Result<Self>;
}

impl GaussianBlur for GrayImage {
    fn gaussian_blur(&self, sigma: f64) -> Result<Self> {
        let taps = gaussian_kernel(sigma)?;
        Ok(Self {
            width: self.width,
            height: self.height,
            data: blur_plane(&self.data, self.width, self.height, &taps),
        })
    }
}

impl GaussianBlur for ColorImage {
    fn gaussian_blur(&self, sigma: f64) -> Result<Self> {
        let taps = gaussian_kernel(sigma)?;
        let planes: Vec<Vec<f64>> = (0..3)
            .map(|c| blur_plane(&self.channel(c).data, self.width, self.height, &taps))
            .collect();
        let data = (0..self.width * self.height)
            .flat_map(|i| [planes[0][i], planes[1][i], planes[2][i]])
            .collect();
        Ok(Self { width: self.width, height: self.height, data })
    }
}

pub fn gaussian_blur<I: GaussianBlur>(img: &I, sigma: f64) -> Result<I> {
    img.gaussian_blur(sigma)
}

/// Uniform access to the channel planes of gray and colour rasters.
pub trait Raster: Sized {
    fn channels(&self) -> usize;
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn sample(&self, c: usize, x: usize, y: usize) -> f64;
    /// Build from channel-planar data (`channels * height * width`).
    fn from_planes(width: usize, height: usize, planes: &[f64]) -> Result<Self>;
}

impl Raster for GrayImage {
    fn channels(&self) -> usize {
        1
    }
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    #[inline]
    fn sample(&self, _c: usize, x: usize, y: usize) -> f64 {
        self.get(x, y)
    }
    fn from_planes(width: usize, height: usize, planes: &[f64]) -> Result<Self> {
        GrayImage::new(width, height, planes.to_vec())
    }
}

impl Raster for ColorImage {
    fn channels(&self) -> usize {
        3
    }
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    #[inline]
    fn sample(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[(y * self.width + x) * 3 + c]
    }
    fn from_planes(width: usize, height: usize, planes: &[f64]) -> Result<Self> {
        let n = width * height;
        if planes.len() != 3 * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} planar samples, got {}",
                3 * n,
                planes.len()
            )));
        }
        let data = (0..n).flat_map(|i| [planes[i], planes[n + i], planes[2 * n + i]]).collect();
        ColorImage::new(width, height, data)
    }
}

/// Masks read as 1.0 for text and 0.0 elsewhere.
impl Raster for BinaryMask {
    fn channels(&self) -> usize {
        1
    }
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    #[inline]
    fn sample(&self, _c: usize, x: usize, y: usize) -> f64 {
        if self.get(x, y) {
            1.0
        } else {
            0.0
        }
    }
    fn from_planes(width: usize, height: usize, planes: &[f64]) -> Result<Self> {
        BinaryMask::new(width, height, planes.iter().map(|&v| v >= 0.5).collect())
    }
}

/// Mirror left-right.
pub fn flip_horizontal<R: Raster>(img: &R) -> Result<R> {
    remap(img, |x, y, w, _| (w - 1 - x, y))
}

/// Mirror top-bottom.
pub fn flip_vertical<R: Raster>(img: &R) -> Result<R> {
    remap(img, |x, y, _, h| (x, h - 1 - y))
}

fn remap<R: Raster>(img: &R, f: impl Fn(usize, usize, usize, usize) -> (usize, usize)) -> Result<R> {
    let (w, h) = (img.width(), img.height());
    let mut planes = Vec::with_capacity(img.channels() * w * h);
    for c in 0..img.channels() {
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = f(x, y, w, h);
                planes.push(img.sample(c, sx, sy));
            }
        }
    }
    R::from_planes(w, h, &planes)
}

/// Area-average downscale so that the longer edge is at most `max_edge`.
pub fn downscale_to_fit(img: &ColorImage, max_edge: usize) -> Result<ColorImage> {
    let long = img.width.max(img.height);
    if long <= max_edge {
        return Ok(img.clone());
    }
    let scale = long as f64 / max_edge as f64;
    let w = ((img.width as f64 / scale).round() as usize).max(1);
    let h = ((img.height as f64 / scale).round() as usize).max(1);
    ColorImage::from_fn(w, h, |x, y| {
        let x0 = x * img.width / w;
        let x1 = ((x + 1) * img.width / w).max(x0 + 1);
        let y0 = y * img.height / h;
        let y1 = ((y + 1) * img.height / h).max(y0 + 1);
        let mut acc = [0.0; 3];
        for sy in y0..y1 {
            for sx in x0..x1 {
                let p = img.get(sx, sy);
                (0..3).for_each(|c| acc[c] += p[c]);
            }
        }
        let n = ((x1 - x0) * (y1 - y0)) as f64;
        acc.map(|v| v / n)
    })
}
