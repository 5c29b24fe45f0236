use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::gmm::{fit_em_3d, identify_roles, subsample, synthesize_background, EmConfig};
use crate::image::{apply_contrast, gaussian_blur, to_gray_luma, to_gray_max, BinaryMask, ColorImage, ContrastTransform, GrayImage};
use crate::morpho::{adaptive_threshold, cleanup, moving_average_threshold, threshold_below, CleanupParams};
use crate::pnm::{read_color, read_mask, write_mask, write_ppm};

pub const FILL: [f64; 3] = [1.0, 1.0, 1.0];

/// Darkening factor applied to extracted ink, strictly inside (0, 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaParam(f64);

impl GammaParam {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma < 1.0 {
            Ok(Self(gamma))
        } else {
            Err(invalid(format!("gamma must lie in (0, 1), got {gamma}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for GammaParam {
    fn default() -> Self {
        Self(0.7)
    }
}

/// How colour is reduced to intensity before thresholding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GrayConversion {
    /// Weighted luma, for bright media.
    #[default]
    Luma,
    /// Channel maximum, for dark media.
    Max,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Preprocess {
    pub gray: GrayConversion,
    pub contrast: ContrastTransform,
}

impl Default for Preprocess {
    fn default() -> Self {
        Self { gray: GrayConversion::Luma, contrast: ContrastTransform::default() }
    }
}

impl Preprocess {
    pub fn apply(&self, img: &ColorImage) -> Result<GrayImage> {
        let gray = match self.gray {
            GrayConversion::Luma => to_gray_luma(img),
            GrayConversion::Max => to_gray_max(img),
        };
        apply_contrast(&gray, &self.contrast)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ThresholdMethod {
    Adaptive { window: usize, bias: f64 },
    /// Histogram valley; falls back to `Adaptive` with `fallback` on unimodal input.
    Valley { window: usize, fallback: (usize, f64) },
}

impl Default for ThresholdMethod {
    fn default() -> Self {
        ThresholdMethod::Adaptive { window: 31, bias: DEFAULT_GT_BIAS }
    }
}

pub const DEFAULT_GT_BIAS: f64 = 1.0;

/// Largest usable odd window not exceeding either image side.
fn fit_window(window: usize, img: &GrayImage) -> Result<usize> {
    let side = img.width().min(img.height());
    let w = window.min(if side % 2 == 1 { side } else { side - 1 });
    if w < 3 {
        return Err(invalid(format!("image {}x{} too small for a threshold window", img.width(), img.height())));
    }
    Ok(w)
}

impl ThresholdMethod {
    pub fn apply(&self, img: &GrayImage) -> Result<BinaryMask> {
        match *self {
            ThresholdMethod::Adaptive { window, bias } => adaptive_threshold(img, fit_window(window, img)?, bias),
            ThresholdMethod::Valley { window, fallback } => {
                match moving_average_threshold(&crate::image::histogram(img), window) {
                    Ok(level) => Ok(threshold_below(img, level)),
                    Err(Error::NoValley) => adaptive_threshold(img, fit_window(fallback.0, img)?, fallback.1),
                    Err(e) => Err(e),
                }
            }
        }
    }
}

/// Background-model settings shared by ground truth and Method 1.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub sample_cap: usize,
    pub blur_sigma: f64,
}

impl Default for BackgroundParams {
    fn default() -> Self {
        let em = EmConfig::default();
        Self { k: em.k, seed: 0, max_iter: em.max_iter, tol: em.tol, sample_cap: 200_000, blur_sigma: 1.5 }
    }
}

/// Fit a colour mixture to the page and redraw a text-free background.
pub fn reconstruct_background(img: &ColorImage, p: &BackgroundParams) -> Result<ColorImage> {
    let pixels: Vec<[f64; 3]> = img.pixels().collect();
    let samples = subsample(&pixels, p.sample_cap, p.seed);
    let cfg = EmConfig { k: p.k, seed: p.seed, max_iter: p.max_iter, tol: p.tol };
    let (model, _) = fit_em_3d(&samples, &cfg)?;
    let roles = identify_roles(&model)?;
    let blur = (p.blur_sigma > 0.0).then_some(p.blur_sigma);
    synthesize_background(&model, &roles, img.width(), img.height(), p.seed.wrapping_add(1), blur)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GtParams {
    pub preprocess: Preprocess,
    pub threshold: ThresholdMethod,
    pub cleanup: CleanupParams,
    pub text_blur_sigma: f64,
    pub gamma: GammaParam,
    pub background: BackgroundParams,
}

impl Default for GtParams {
    fn default() -> Self {
        Self {
            preprocess: Preprocess::default(),
            threshold: ThresholdMethod::default(),
            cleanup: CleanupParams::default(),
            text_blur_sigma: 0.5,
            gamma: GammaParam::default(),
            background: BackgroundParams::default(),
        }
    }
}

/// The four rasters produced for every document.
#[derive(Clone, Debug, PartialEq)]
pub struct RestorationBundle {
    pub binarized_text: BinaryMask,
    pub restored_foreground: ColorImage,
    pub restored_background: ColorImage,
    pub restored_document: ColorImage,
}

pub const BUNDLE_FILES: [&str; 4] = ["text.pgm", "foreground.ppm", "background.ppm", "restored.ppm"];

impl RestorationBundle {
    /// Assemble a bundle whose document is the overlay of foreground on background.
    pub fn compose(text: BinaryMask, foreground: ColorImage, background: ColorImage) -> Result<Self> {
        let document = overlay(&text, &foreground, &background)?;
        Ok(Self {
            binarized_text: text,
            restored_foreground: foreground,
            restored_background: background,
            restored_document: document,
        })
    }

    /// Document equals foreground under the text mask and background elsewhere.
    pub fn overlay_holds(&self) -> bool {
        let (w, h) = (self.binarized_text.width(), self.binarized_text.height());
        let dims = |c: &ColorImage| c.width() == w && c.height() == h;
        if !(dims(&self.restored_foreground) && dims(&self.restored_background) && dims(&self.restored_document)) {
            return false;
        }
        self.binarized_text.bits().iter().enumerate().all(|(i, &t)| {
            let src = if t { &self.restored_foreground } else { &self.restored_background };
            src.data()[3 * i..3 * i + 3] == self.restored_document.data()[3 * i..3 * i + 3]
        })
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        write_mask(&self.binarized_text, dir.join(BUNDLE_FILES[0]))?;
        write_ppm(&self.restored_foreground, dir.join(BUNDLE_FILES[1]))?;
        write_ppm(&self.restored_background, dir.join(BUNDLE_FILES[2]))?;
        write_ppm(&self.restored_document, dir.join(BUNDLE_FILES[3]))
    }

    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Ok(Self {
            binarized_text: read_mask(dir.join(BUNDLE_FILES[0]))?,
            restored_foreground: read_color(dir.join(BUNDLE_FILES[1]))?,
            restored_background: read_color(dir.join(BUNDLE_FILES[2]))?,
            restored_document: read_color(dir.join(BUNDLE_FILES[3]))?,
        })
    }
}

/// Copy foreground pixels under the mask onto the background.
pub fn overlay(mask: &BinaryMask, fg: &ColorImage, bg: &ColorImage) -> Result<ColorImage> {
    for (name, img) in [("foreground", fg), ("background", bg)] {
        if img.width() != mask.width() || img.height() != mask.height() {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{} but mask is {}x{}",
                img.width(),
                img.height(),
                mask.width(),
                mask.height()
            )));
        }
    }
    let mut out = bg.clone();
    for (i, &t) in mask.bits().iter().enumerate() {
        if t {
            out.data_mut()[3 * i..3 * i + 3].copy_from_slice(&fg.data()[3 * i..3 * i + 3]);
        }
    }
    Ok(out)
}

/// Ink colours scaled by gamma under the mask; white elsewhere.
pub fn restore_foreground_colour(mask: &BinaryMask, img: &ColorImage, gamma: GammaParam) -> Result<ColorImage> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} vs mask {}x{}",
            img.width(),
            img.height(),
            mask.width(),
            mask.height()
        )));
    }
    let g = gamma.value();
    ColorImage::from_fn(img.width(), img.height(), |x, y| {
        if mask.get(x, y) {
            img.get(x, y).map(|v| g * v)
        } else {
            FILL
        }
    })
}

/// Smooth a mask into a gray text image (text dark on white).
pub fn blurred_text(mask: &BinaryMask, sigma: f64) -> Result<GrayImage> {
    let gray = mask.to_gray();
    if sigma > 0.0 {
        gaussian_blur(&gray, sigma)
    } else {
        Ok(gray)
    }
}

/// Binarized text mask: preprocess, threshold, clean up, lightly blur and re-threshold.
pub fn extract_text(img: &ColorImage, params: &GtParams) -> Result<BinaryMask> {
    let v = params.preprocess.apply(img)?;
    let raw = params.threshold.apply(&v)?;
    let cleaned = cleanup(&raw, &params.cleanup)?;
    Ok(BinaryMask::from_gray(&blurred_text(&cleaned, params.text_blur_sigma)?))
}

pub fn generate_groundtruth(img: &ColorImage, params: &GtParams) -> Result<RestorationBundle> {
    let text = extract_text(img, params)?;
    let foreground = restore_foreground_colour(&text, img, params.gamma)?;
    let background = reconstruct_background(img, &params.background)?;
    RestorationBundle::compose(text, foreground, background)
}
