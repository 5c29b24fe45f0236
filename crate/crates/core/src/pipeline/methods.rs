use crate::error::{invalid, Error, Result};
use crate::image::{histogram, BinaryMask, ColorImage, GrayImage, Raster};
use crate::morpho::{adaptive_threshold, moving_average_threshold, threshold_below, toggle_filter, StructuringElement};
use crate::nn::Network;
use crate::pipeline::groundtruth::{
    reconstruct_background, restore_foreground_colour, BackgroundParams, GammaParam, Preprocess, RestorationBundle,
    FILL,
};
use crate::pipeline::patches::{from_tensor, patchify, stitch, to_tensor};
use crate::scalar::Scalar;

/// Patches forwarded through the network per call.
const INFERENCE_CHUNK: usize = 8;

/// Run a network over overlapping patches and average the outputs.
pub fn run_patched<T: Scalar, R: Raster>(net: &Network<T>, img: &R, patch_size: usize, stride: usize) -> Result<R> {
    let (grid, patches) = patchify(img, patch_size, stride)?;
    let mut outputs = Vec::with_capacity(patches.len());
    for chunk in patches.chunks(INFERENCE_CHUNK) {
        let x = to_tensor::<T, R>(chunk)?;
        let y = net.forward(&x)?;
        if y.shape() != x.shape() {
            return Err(Error::ShapeMismatch {
                layer: "network output".into(),
                expected: format!("{:?}", x.shape()),
                actual: format!("{:?}", y.shape()),
            });
        }
        outputs.extend(from_tensor::<T, R>(&y)?);
    }
    stitch(&grid, &outputs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BinarizeParams {
    pub preprocess: Preprocess,
    pub patch_size: usize,
    pub stride: usize,
    pub toggle: StructuringElement,
    pub valley_window: usize,
    /// Adaptive `(window, bias)` used when the histogram has no valley.
    pub fallback: (usize, f64),
}

impl Default for BinarizeParams {
    fn default() -> Self {
        Self {
            preprocess: Preprocess::default(),
            patch_size: 256,
            stride: 50,
            toggle: StructuringElement::Square(3),
            valley_window: 11,
            fallback: (31, 0.2),
        }
    }
}

/// Toggle-filter a text image and threshold it at its histogram valley.
pub fn threshold_text_image(text: &GrayImage, params: &BinarizeParams) -> Result<BinaryMask> {
    let toggled = toggle_filter(text, params.toggle);
    match moving_average_threshold(&histogram(&toggled), params.valley_window) {
        Ok(level) => Ok(threshold_below(&toggled, level)),
        Err(Error::NoValley) => {
            let side = toggled.width().min(toggled.height());
            let window = params.fallback.0.min(if side % 2 == 1 { side } else { side - 1 });
            adaptive_threshold(&toggled, window, params.fallback.1)
        }
        Err(e) => Err(e),
    }
}

/// Network text image before thresholding.
pub fn text_image<T: Scalar>(img: &ColorImage, net: &Network<T>, params: &BinarizeParams) -> Result<GrayImage> {
    let v = params.preprocess.apply(img)?;
    run_patched(net, &v, params.patch_size, params.stride)
}

/// Text extraction only: network, toggle filter, valley threshold.
pub fn binarize<T: Scalar>(img: &ColorImage, net: &Network<T>, params: &BinarizeParams) -> Result<BinaryMask> {
    threshold_text_image(&text_image(img, net, params)?, params)
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Method1Params {
    pub binarize: BinarizeParams,
    pub gamma: GammaParam,
    pub background: BackgroundParams,
}

/// Text network plus mixture-model background.
pub fn method1_restore<T: Scalar>(img: &ColorImage, text_net: &Network<T>, params: &Method1Params) -> Result<RestorationBundle> {
    let text = binarize(img, text_net, &params.binarize)?;
    let foreground = restore_foreground_colour(&text, img, params.gamma)?;
    let background = reconstruct_background(img, &params.background)?;
    RestorationBundle::compose(text, foreground, background)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Method2Params {
    pub patch_size: usize,
    pub stride: usize,
    /// Max-channel distance from the fill colour above which a foreground
    /// output pixel counts as ink.
    pub presence: f64,
}

impl Default for Method2Params {
    fn default() -> Self {
        Self { patch_size: 256, stride: 50, presence: 0.08 }
    }
}

/// Pixels of a foreground image that depart from the fill by more than `tau`.
pub fn ink_presence(fg: &ColorImage, tau: f64) -> BinaryMask {
    BinaryMask::from_fn(fg.width(), fg.height(), |x, y| {
        let p = fg.get(x, y);
        (0..3).map(|c| (FILL[c] - p[c]).abs()).fold(0.0, f64::max) > tau
    })
    .expect("same dims")
}

/// Merge a foreground image onto a background image.
pub fn merge_layers(fg: &ColorImage, bg: &ColorImage, presence: f64) -> Result<RestorationBundle> {
    if !(0.0..1.0).contains(&presence) {
        return Err(invalid(format!("presence threshold must lie in [0, 1), got {presence}")));
    }
    let mask = ink_presence(fg, presence);
    let foreground = ColorImage::from_fn(fg.width(), fg.height(), |x, y| if mask.get(x, y) { fg.get(x, y) } else { FILL })?;
    RestorationBundle::compose(mask, foreground, bg.clone())
}

/// Parallel foreground and background networks, merged by ink presence.
pub fn method2_restore<T: Scalar>(
    img: &ColorImage,
    fg_net: &Network<T>,
    bg_net: &Network<T>,
    params: &Method2Params,
) -> Result<RestorationBundle> {
    let fg = run_patched(fg_net, img, params.patch_size, params.stride)?;
    let bg = run_patched(bg_net, img, params.patch_size, params.stride)?;
    merge_layers(&fg, &bg, params.presence)
}
