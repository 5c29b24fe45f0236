//! Procedural handwritten pages with known ground truth.
//!
//! Strokes are quadratic curves stamped with a round pen. Degradation adds a
//! mirrored, faded copy of a second page (back-impression), ink blots, a fold
//! line and per-channel grain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};
use crate::image::{flip_horizontal, BinaryMask, ColorImage};
use crate::metrics::f_measure;
use crate::morpho::{dilate, StructuringElement};
use crate::pipeline::groundtruth::{overlay, restore_foreground_colour, GammaParam, RestorationBundle};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthParams {
    pub size: usize,
    pub gamma: GammaParam,
    /// Range of the ink fraction mixed into the paper for the back-impression.
    pub bleed_strength: (f64, f64),
    pub grain_sigma: f64,
    pub max_blots: usize,
    pub fold_probability: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            size: 128,
            gamma: GammaParam::default(),
            bleed_strength: (0.3, 0.45),
            grain_sigma: 0.02,
            max_blots: 2,
            fold_probability: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSample {
    pub seed: u64,
    pub clean: ColorImage,
    pub degraded: ColorImage,
    pub truth: RestorationBundle,
    /// Stroke mask of the reverse page, before mirroring.
    pub back_strokes: BinaryMask,
    /// Pixels carrying back-impression in `degraded` (mirrored reverse strokes minus front text).
    pub bleed_mask: BinaryMask,
    pub paper: [f64; 3],
    pub ink: [f64; 3],
    pub bleed_colour: [f64; 3],
}

type Point = (f64, f64);

fn stamp_segment(mask: &mut [bool], size: usize, a: Point, b: Point, r: f64) {
    let (x0, x1) = (a.0.min(b.0) - r, a.0.max(b.0) + r);
    let (y0, y1) = (a.1.min(b.1) - r, a.1.max(b.1) + r);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let clampi = |v: f64| (v.max(0.0) as usize).min(size - 1);
    if x1 < 0.0 || y1 < 0.0 || x0 >= size as f64 || y0 >= size as f64 {
        return;
    }
    for y in clampi(y0.floor())..=clampi(y1.ceil()) {
        for x in clampi(x0.floor())..=clampi(x1.ceil()) {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let t = if len2 > 0.0 { (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let (qx, qy) = (a.0 + t * dx - px, a.1 + t * dy - py);
            if qx * qx + qy * qy <= r * r {
                mask[y * size + x] = true;
            }
        }
    }
}

fn stamp_curve(mask: &mut [bool], size: usize, p0: Point, p1: Point, p2: Point, r: f64) {
    const STEPS: usize = 8;
    let at = |t: f64| {
        let u = 1.0 - t;
        (u * u * p0.0 + 2.0 * u * t * p1.0 + t * t * p2.0, u * u * p0.1 + 2.0 * u * t * p1.1 + t * t * p2.1)
    };
    let mut prev = p0;
    for i in 1..=STEPS {
        let next = at(i as f64 / STEPS as f64);
        stamp_segment(mask, size, prev, next, r);
        prev = next;
    }
}

/// Lines of cursive-like words.
fn render_page(rng: &mut ChaCha8Rng, size: usize) -> BinaryMask {
    let mut mask = vec![false; size * size];
    let s = size as f64;
    let margin = (s * 0.06).max(3.0);
    let line_h = (s / 7.5).max(10.0);
    let xh = line_h * 0.45;
    let pen = rng.random_range(0.9..1.3);
    let mut baseline = margin + line_h * 0.8;
    while baseline + line_h * 0.25 < s - margin {
        let mut x = margin + rng.random_range(0.0..line_h);
        while x < s - margin - xh {
            let word_len = rng.random_range(2..6);
            let mut pen_at: Point = (x, baseline);
            for _ in 0..word_len {
                let w = rng.random_range(0.5..1.0) * xh;
                if pen_at.0 + w > s - margin {
                    break;
                }
                let tall = rng.random_bool(0.2);
                let deep = !tall && rng.random_bool(0.12);
                let top = baseline - if tall { 2.0 * xh } else { xh };
                let bottom = baseline + if deep { 0.8 * xh } else { 0.0 };
                let (gx, gw) = (pen_at.0, w);
                let up: Point = (gx + rng.random_range(0.2..0.6) * gw, top);
                let down: Point = (gx + gw, bottom.max(baseline));
                let c1: Point = (gx + rng.random_range(-0.2..0.4) * gw, top + rng.random_range(0.0..0.5) * (baseline - top));
                let c2: Point = (gx + gw * rng.random_range(0.6..1.2), (top + bottom) / 2.0);
                stamp_curve(&mut mask, size, pen_at, c1, up, pen);
                stamp_curve(&mut mask, size, up, c2, down, pen);
                if rng.random_bool(0.5) {
                    // bowl on the baseline
                    let mid: Point = (gx + gw * 0.5, baseline - xh * rng.random_range(0.3..0.8));
                    stamp_curve(&mut mask, size, (gx + gw * 0.2, baseline), mid, (gx + gw * 0.9, baseline - xh * 0.2), pen);
                }
                pen_at = (gx + gw, baseline);
            }
            x = pen_at.0 + rng.random_range(0.6..1.4) * xh;
        }
        baseline += line_h;
    }
    BinaryMask::new(size, size, mask).expect("square page")
}

fn jitter(rng: &mut ChaCha8Rng, base: [f64; 3], amount: f64) -> [f64; 3] {
    base.map(|v| (v + rng.random_range(-amount..amount)).clamp(0.0, 1.0))
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|c| a[c] * (1.0 - t) + b[c] * t)
}

const INKS: [[f64; 3]; 3] = [[0.22, 0.14, 0.08], [0.10, 0.12, 0.28], [0.13, 0.13, 0.13]];

/// One synthetic page; fully determined by `seed`.
pub fn synth_document(seed: u64, params: &SynthParams) -> Result<SynthSample> {
    let size = params.size;
    if size < 16 {
        return Err(invalid(format!("synthetic pages need at least 16 pixels per side, got {size}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paper = [
        rng.random_range(0.88..0.96),
        rng.random_range(0.82..0.90),
        rng.random_range(0.66..0.80),
    ];
    let base = INKS[rng.random_range(0..INKS.len())];
    let ink = jitter(&mut rng, base, 0.04);
    let alpha = rng.random_range(params.bleed_strength.0..=params.bleed_strength.1);
    let bleed_colour = mix(paper, ink, alpha);

    let text = render_page(&mut rng, size);
    let back_strokes = render_page(&mut rng, size);
    let mirrored = flip_horizontal(&back_strokes)?;
    let bleed_mask = BinaryMask::from_fn(size, size, |x, y| mirrored.get(x, y) && !text.get(x, y))?;

    let paper_img = ColorImage::filled(size, size, paper)?;
    let ink_img = ColorImage::filled(size, size, ink)?;
    let clean = overlay(&text, &ink_img, &paper_img)?;
    let foreground = restore_foreground_colour(&text, &clean, params.gamma)?;
    let truth = RestorationBundle::compose(text.clone(), foreground, paper_img)?;

    let mut degraded = clean.clone();
    for (i, &b) in bleed_mask.bits().iter().enumerate() {
        if b {
            degraded.data_mut()[3 * i..3 * i + 3].copy_from_slice(&bleed_colour);
        }
    }
    let blots = rng.random_range(0..=params.max_blots);
    for _ in 0..blots {
        let (cx, cy) = (rng.random_range(0.0..size as f64), rng.random_range(0.0..size as f64));
        let r = rng.random_range(1.5..3.5);
        let strength = rng.random_range(0.3..0.6);
        for y in 0..size {
            for x in 0..size {
                let d2 = (x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2);
                if d2 <= r * r {
                    let p = degraded.get(x, y);
                    degraded.set(x, y, mix(p, ink, strength));
                }
            }
        }
    }
    if rng.random_bool(params.fold_probability) {
        let vertical = rng.random_bool(0.5);
        let at = rng.random_range(size as f64 * 0.2..size as f64 * 0.8);
        let depth = rng.random_range(0.06..0.12);
        for y in 0..size {
            for x in 0..size {
                let d = if vertical { x as f64 + 0.5 - at } else { y as f64 + 0.5 - at };
                let f = 1.0 - depth * (-d * d / 2.0).exp();
                let p = degraded.get(x, y);
                degraded.set(x, y, p.map(|v| v * f));
            }
        }
    }
    if params.grain_sigma > 0.0 {
        let grain = Normal::new(0.0, params.grain_sigma).map_err(|e| invalid(e.to_string()))?;
        for v in degraded.data_mut() {
            *v = (*v + grain.sample(&mut rng)).clamp(0.0, 1.0);
        }
    }
    Ok(SynthSample { seed, clean, degraded, truth, back_strokes, bleed_mask, paper, ink, bleed_colour })
}

/// Per-document seed derived from the corpus seed.
pub fn document_seed(corpus_seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = corpus_seed.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn synth_corpus(n: usize, seed: u64, params: &SynthParams) -> Result<Vec<SynthSample>> {
    if n == 0 {
        return Err(invalid("corpus size must be at least 1"));
    }
    (0..n).map(|i| synth_document(document_seed(seed, i), params)).collect()
}

/// Non-text pixels of `img` closer to the bleed colour than to the paper colour.
pub fn bleed_like_pixels(img: &ColorImage, text: &BinaryMask, paper: [f64; 3], bleed: [f64; 3]) -> BinaryMask {
    let d2 = |a: [f64; 3], b: [f64; 3]| (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>();
    BinaryMask::from_fn(img.width(), img.height(), |x, y| {
        let p = img.get(x, y);
        !text.get(x, y) && d2(p, bleed) < d2(p, paper)
    })
    .expect("same dims")
}

/// F-measure (percent) of bleed-like pixels remaining in `restored`
/// against the known back-impression mask. Pixels within `halo` pixels
/// (chessboard distance) of true text are left out of both sides, since
/// soft stroke edges share the faded-ink colour of the back impression.
pub fn residual_bleed_fm(restored: &ColorImage, sample: &SynthSample, halo: usize) -> Result<f64> {
    let text = &sample.truth.binarized_text;
    let near = if halo == 0 { text.clone() } else { dilate(text, StructuringElement::Square(2 * halo + 1)) };
    let keep = |m: BinaryMask| {
        BinaryMask::from_fn(m.width(), m.height(), |x, y| m.get(x, y) && !near.get(x, y)).expect("same dims")
    };
    let pred = keep(bleed_like_pixels(restored, text, sample.paper, sample.bleed_colour));
    f_measure(&pred, &keep(sample.bleed_mask.clone()))
}
