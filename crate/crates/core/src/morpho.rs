//! Binary and grayscale morphology, thresholding and speckle removal.

use crate::error::{invalid, Error, Result};
use crate::image::{BinaryMask, GrayImage, Histogram256};

/// Flat structuring element centred on its origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructuringElement {
    /// `n x n` square.
    Square(usize),
    /// Euclidean disk of radius `r`.
    Disk(usize),
    /// Plus shape with arms spanning `n` pixels.
    Cross(usize),
}

impl StructuringElement {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StructuringElement::Square(0) | StructuringElement::Disk(0) | StructuringElement::Cross(0) => {
                Err(invalid("structuring element size must be at least 1"))
            }
            _ => Ok(()),
        }
    }

    /// Support as `(dx, dy)` offsets from the origin.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        match *self {
            StructuringElement::Square(n) => {
                let lo = -((n / 2) as isize);
                let hi = lo + n as isize;
                (lo..hi).flat_map(|dy| (lo..hi).map(move |dx| (dx, dy))).collect()
            }
            StructuringElement::Disk(r) => {
                let r = r as isize;
                (-r..=r)
                    .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
                    .filter(|(dx, dy)| dx * dx + dy * dy <= r * r)
                    .collect()
            }
            StructuringElement::Cross(n) => {
                let lo = -((n / 2) as isize);
                let hi = lo + n as isize;
                let mut v: Vec<_> = (lo..hi).map(|d| (d, 0)).collect();
                v.extend((lo..hi).filter(|&d| d != 0).map(|d| (0, d)));
                v
            }
        }
    }

    /// Largest offset magnitude along either axis.
    pub fn radius(&self) -> usize {
        self.offsets()
            .iter()
            .map(|(dx, dy)| dx.unsigned_abs().max(dy.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }
}

impl std::str::FromStr for StructuringElement {
    type Err = Error;

    /// `square:3`, `disk:2` or `cross:3`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, size) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("structuring element `{s}` needs kind:size")))?;
        let n: usize = size
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad structuring element size `{size}`")))?;
        let se = match kind.trim() {
            "square" => StructuringElement::Square(n),
            "disk" => StructuringElement::Disk(n),
            "cross" => StructuringElement::Cross(n),
            other => return Err(Error::Parse(format!("unknown structuring element `{other}`"))),
        };
        se.validate()?;
        Ok(se)
    }
}

impl std::fmt::Display for StructuringElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StructuringElement::Square(n) => write!(f, "square:{n}"),
            StructuringElement::Disk(n) => write!(f, "disk:{n}"),
            StructuringElement::Cross(n) => write!(f, "cross:{n}"),
        }
    }
}

fn mirrored(offsets: &[(isize, isize)]) -> Vec<(isize, isize)> {
    offsets.iter().map(|&(dx, dy)| (-dx, -dy)).collect()
}

fn erode_offsets(mask: &BinaryMask, offsets: &[(isize, isize)]) -> BinaryMask {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let mut out = mask.clone();
    for y in 0..h {
        for x in 0..w {
            let keep = offsets.iter().all(|&(dx, dy)| {
                let (sx, sy) = (x + dx, y + dy);
                sx >= 0 && sy >= 0 && sx < w && sy < h && mask.get(sx as usize, sy as usize)
            });
            out.set(x as usize, y as usize, keep);
        }
    }
    out
}

fn dilate_offsets(mask: &BinaryMask, offsets: &[(isize, isize)]) -> BinaryMask {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let mut out = mask.clone();
    for y in 0..h {
        for x in 0..w {
            let hit = offsets.iter().any(|&(dx, dy)| {
                let (sx, sy) = (x - dx, y - dy);
                sx >= 0 && sy >= 0 && sx < w && sy < h && mask.get(sx as usize, sy as usize)
            });
            out.set(x as usize, y as usize, hit);
        }
    }
    out
}

/// Set erosion; pixels outside the image count as background, so
/// foreground touching the border is eaten away.
pub fn erode(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    erode_offsets(mask, &se.offsets())
}

/// Set dilation; pixels outside the image count as background.
pub fn dilate(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    dilate_offsets(mask, &se.offsets())
}

fn pad(mask: &BinaryMask, r: usize) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    BinaryMask::from_fn(w + 2 * r, h + 2 * r, |x, y| {
        x >= r && y >= r && x < w + r && y < h + r && mask.get(x - r, y - r)
    })
    .expect("padded dims are positive")
}

fn crop(mask: &BinaryMask, r: usize, w: usize, h: usize) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, y| mask.get(x + r, y + r)).expect("crop dims are positive")
}

/// Opening and closing are evaluated on a margin-padded canvas so they
/// match the unbounded-plane operators restricted to the image.
pub fn open(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    let r = se.radius();
    let offsets = se.offsets();
    let p = pad(mask, r);
    crop(&dilate_offsets(&erode_offsets(&p, &offsets), &offsets), r, mask.width(), mask.height())
}

pub fn close(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    let r = se.radius();
    let offsets = se.offsets();
    let p = pad(mask, 2 * r);
    crop(&erode_offsets(&dilate_offsets(&p, &offsets), &offsets), 2 * r, mask.width(), mask.height())
}

/// Dilation by the reflected element, used by the duality law.
pub fn dilate_mirrored(mask: &BinaryMask, se: StructuringElement) -> BinaryMask {
    dilate_offsets(mask, &mirrored(&se.offsets()))
}

fn gray_envelopes(img: &GrayImage, offsets: &[(isize, isize)]) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut lo = Vec::with_capacity(img.data().len());
    let mut hi = Vec::with_capacity(img.data().len());
    for y in 0..h {
        for x in 0..w {
            let mut mn = f64::INFINITY;
            let mut mx = f64::NEG_INFINITY;
            for &(dx, dy) in offsets {
                let (sx, sy) = (x + dx, y + dy);
                if sx >= 0 && sy >= 0 && sx < w && sy < h {
                    let v = img.get(sx as usize, sy as usize);
                    mn = mn.min(v);
                    mx = mx.max(v);
                }
            }
            lo.push(mn);
            hi.push(mx);
        }
    }
    (lo, hi)
}

/// Grayscale erosion (windowed minimum, window clipped to the image).
pub fn gray_erode(img: &GrayImage, se: StructuringElement) -> GrayImage {
    let (lo, _) = gray_envelopes(img, &se.offsets());
    GrayImage::new(img.width(), img.height(), lo).expect("same dims")
}

/// Grayscale dilation (windowed maximum, window clipped to the image).
pub fn gray_dilate(img: &GrayImage, se: StructuringElement) -> GrayImage {
    let (_, hi) = gray_envelopes(img, &se.offsets());
    GrayImage::new(img.width(), img.height(), hi).expect("same dims")
}

/// Toggle-contrast filter: each pixel snaps to whichever of its local
/// dilation or erosion is closer, and stays put on a tie.
pub fn toggle_filter(img: &GrayImage, se: StructuringElement) -> GrayImage {
    let (lo, hi) = gray_envelopes(img, &se.offsets());
    let data = img
        .data()
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(&f, (&e, &d))| {
            let up = d - f;
            let down = f - e;
            if up < down {
                d
            } else if down < up {
                e
            } else {
                f
            }
        })
        .collect();
    GrayImage::new(img.width(), img.height(), data).expect("same dims")
}

/// Summed-area table over an edge-replicated copy padded by `r`.
struct Integral {
    stride: usize,
    sum: Vec<f64>,
    sq: Vec<f64>,
}

impl Integral {
    fn new(img: &GrayImage, r: usize) -> Self {
        let (w, h) = (img.width(), img.height());
        let pw = w + 2 * r;
        let ph = h + 2 * r;
        let stride = pw + 1;
        let mut sum = vec![0.0; stride * (ph + 1)];
        let mut sq = vec![0.0; stride * (ph + 1)];
        for y in 0..ph {
            let sy = (y as isize - r as isize).clamp(0, h as isize - 1) as usize;
            let mut row = 0.0;
            let mut row_sq = 0.0;
            for x in 0..pw {
                let sx = (x as isize - r as isize).clamp(0, w as isize - 1) as usize;
                let v = img.get(sx, sy);
                row += v;
                row_sq += v * v;
                sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + row;
                sq[(y + 1) * stride + x + 1] = sq[y * stride + x + 1] + row_sq;
            }
        }
        Self { stride, sum, sq }
    }

    /// Sums over the padded-coordinate box `[x0, x1) x [y0, y1)`.
    fn box_sums(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> (f64, f64) {
        let s = self.stride;
        let at = |t: &[f64]| t[y1 * s + x1] - t[y0 * s + x1] - t[y1 * s + x0] + t[y0 * s + x0];
        (at(&self.sum), at(&self.sq))
    }
}

/// Local-statistics threshold: a pixel is text when it is darker than
/// `mean - bias * std` over the surrounding `window x window` box.
pub fn adaptive_threshold(img: &GrayImage, window: usize, bias: f64) -> Result<BinaryMask> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(invalid(format!("window must be odd and at least 3, got {window}")));
    }
    if window > img.width() || window > img.height() {
        return Err(invalid(format!(
            "window {window} larger than {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let r = window / 2;
    let table = Integral::new(img, r);
    let n = (window * window) as f64;
    BinaryMask::from_fn(img.width(), img.height(), |x, y| {
        let (s, sq) = table.box_sums(x, y, x + window, y + window);
        let mean = s / n;
        let var = (sq / n - mean * mean).max(0.0);
        // summed-table rounding must not flag perfectly flat regions
        img.get(x, y) < mean - bias * var.sqrt() - 1e-9
    })
}

/// Centred moving average; windows are clipped at the histogram ends and
/// averaged over the bins they actually cover.
pub fn smooth_histogram(h: &Histogram256, window: usize) -> Vec<f64> {
    let r = window / 2;
    (0usize..256)
        .map(|i| {
            let lo = i.saturating_sub(r);
            let hi = (i + r).min(255);
            h.bins[lo..=hi].iter().map(|&c| c as f64).sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Pick a global threshold at the deepest valley between the two dominant
/// modes of the smoothed histogram. Ties go to the lower gray level.
pub fn moving_average_threshold(h: &Histogram256, window: usize) -> Result<u8> {
    if h.total == 0 {
        return Err(invalid("histogram is empty"));
    }
    if window == 0 || window.is_multiple_of(2) {
        return Err(invalid(format!("moving-average window must be odd, got {window}")));
    }
    let s = smooth_histogram(h, window);
    // runs of equal smoothed counts: (start, end inclusive, value)
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, &v) in s.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.2 == v => run.1 = i,
            _ => runs.push((i, i, v)),
        }
    }
    let mut peaks: Vec<(usize, usize, f64)> = runs
        .iter()
        .enumerate()
        .filter(|&(j, run)| {
            run.2 > 0.0
                && (j == 0 || runs[j - 1].2 < run.2)
                && (j + 1 == runs.len() || runs[j + 1].2 < run.2)
        })
        .map(|(_, &run)| run)
        .collect();
    if peaks.len() < 2 {
        return Err(Error::NoValley);
    }
    peaks.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    let (a, b) = if peaks[0].0 < peaks[1].0 { (peaks[0], peaks[1]) } else { (peaks[1], peaks[0]) };
    let mut best = a.1 + 1;
    for i in a.1 + 1..b.0 {
        if s[i] < s[best] {
            best = i;
        }
    }
    Ok(best as u8)
}

/// Text where the 8-bit level is strictly below `level`.
pub fn threshold_below(img: &GrayImage, level: u8) -> BinaryMask {
    let data: Vec<bool> = img
        .data()
        .iter()
        .map(|&v| crate::image::quantize(v) < level)
        .collect();
    BinaryMask::new(img.width(), img.height(), data).expect("same dims")
}

/// 8-connected foreground components, as lists of pixel indices in
/// row-major discovery order.
pub fn connected_components(mask: &BinaryMask) -> Vec<Vec<usize>> {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut seen = vec![false; bits.len()];
    let mut comps = Vec::new();
    let mut stack = Vec::new();
    for start in 0..bits.len() {
        if !bits[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            comp.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if bits[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Drop 8-connected components smaller than `min_area` pixels.
pub fn remove_speckles(mask: &BinaryMask, min_area: usize) -> Result<BinaryMask> {
    if min_area == 0 {
        return Err(invalid("min_area must be at least 1"));
    }
    let mut bits = vec![false; mask.bits().len()];
    for comp in connected_components(mask) {
        if comp.len() >= min_area {
            comp.into_iter().for_each(|i| bits[i] = true);
        }
    }
    BinaryMask::new(mask.width(), mask.height(), bits)
}

/// Clean-up sequence for extracted text masks.
#[derive(Clone, Debug, PartialEq)]
pub struct CleanupParams {
    pub close: Option<StructuringElement>,
    pub open: Option<StructuringElement>,
    pub min_area: usize,
}

impl Default for CleanupParams {
    fn default() -> Self {
        Self {
            close: Some(StructuringElement::Square(3)),
            open: Some(StructuringElement::Square(3)),
            min_area: 8,
        }
    }
}

pub fn cleanup(mask: &BinaryMask, params: &CleanupParams) -> Result<BinaryMask> {
    let mut m = mask.clone();
    if let Some(se) = params.close {
        se.validate()?;
        m = close(&m, se);
    }
    if let Some(se) = params.open {
        se.validate()?;
        m = open(&m, se);
    }
    remove_speckles(&m, params.min_area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::histogram;

    fn mask_from(rows: &[&str]) -> BinaryMask {
        let w = rows[0].len();
        BinaryMask::from_fn(w, rows.len(), |x, y| rows[y].as_bytes()[x] == b'#').unwrap()
    }

    #[test]
    fn erode_full_mask_strips_border() {
        let full = BinaryMask::full(6, 5).unwrap();
        let e = erode(&full, StructuringElement::Square(3));
        for y in 0..5 {
            for x in 0..6 {
                let interior = x > 0 && y > 0 && x < 5 && y < 4;
                assert_eq!(e.get(x, y), interior);
            }
        }
    }

    #[test]
    fn se_shapes() {
        assert_eq!(StructuringElement::Square(3).offsets().len(), 9);
        assert_eq!(StructuringElement::Cross(3).offsets().len(), 5);
        assert_eq!(StructuringElement::Disk(1).offsets().len(), 5);
        assert_eq!(StructuringElement::Disk(2).offsets().len(), 13);
        assert_eq!("disk:2".parse::<StructuringElement>().unwrap(), StructuringElement::Disk(2));
        assert!("square:0".parse::<StructuringElement>().is_err());
        assert!("blob:3".parse::<StructuringElement>().is_err());
    }

    #[test]
    fn close_is_extensive_at_the_border() {
        let m = mask_from(&["#..#", "....", "#.##"]);
        let c = close(&m, StructuringElement::Square(3));
        for (a, b) in m.bits().iter().zip(c.bits()) {
            assert!(!a || *b);
        }
    }

    #[test]
    fn toggle_constant_and_ramp() {
        let flat = GrayImage::filled(5, 4, 0.3).unwrap();
        assert_eq!(toggle_filter(&flat, StructuringElement::Square(3)), flat);
        // linear ramp: every interior pixel is equidistant from both envelopes
        let ramp = GrayImage::new(5, 1, vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let out = toggle_filter(&ramp, StructuringElement::Square(3));
        assert_eq!(out.data(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        // hand-evaluated: p1 (e=0, f=.1, d=.5) -> 0; p3 (e=.5, f=.9, d=1) -> 1
        let bent = GrayImage::new(5, 1, vec![0.0, 0.1, 0.5, 0.9, 1.0]).unwrap();
        let out = toggle_filter(&bent, StructuringElement::Square(3));
        assert_eq!(out.data(), &[0.0, 0.0, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn adaptive_threshold_flat_and_errors() {
        let flat = GrayImage::filled(40, 40, 0.8).unwrap();
        assert_eq!(adaptive_threshold(&flat, 31, 0.2).unwrap().count(), 0);
        assert!(adaptive_threshold(&flat, 41, 0.2).is_err());
        assert!(adaptive_threshold(&flat, 4, 0.2).is_err());
        assert!(adaptive_threshold(&flat, 1, 0.2).is_err());
    }

    #[test]
    fn adaptive_threshold_recovers_strokes() {
        let truth = BinaryMask::from_fn(96, 64, |x, y| {
            (y % 16 < 2 && x > 5 && x < 90) || (x % 23 < 2 && y > 4 && y < 60)
        })
        .unwrap();
        let img = GrayImage::from_fn(96, 64, |x, y| {
            let grain = (((x * 7919 + y * 104729) % 97) as f64 / 97.0 - 0.5) * 0.04;
            if truth.get(x, y) { 0.2 + grain } else { 0.85 + grain }
        })
        .unwrap();
        let found = adaptive_threshold(&img, 31, 0.2).unwrap();
        let hits = truth.bits().iter().zip(found.bits()).filter(|(t, f)| **t && **f).count();
        assert!(hits as f64 / truth.count() as f64 >= 0.99);
    }

    #[test]
    fn forced_valley_takes_lowest_bin() {
        let mut h = Histogram256 { bins: [0; 256], total: 200 };
        h.bins[50] = 120;
        h.bins[200] = 80;
        assert_eq!(moving_average_threshold(&h, 1).unwrap(), 51);
        // with smoothing the spikes spread over +-5 bins
        assert_eq!(moving_average_threshold(&h, 11).unwrap(), 56);
    }

    #[test]
    fn unimodal_histogram_has_no_valley() {
        let img = GrayImage::filled(8, 8, 0.5).unwrap();
        assert!(matches!(moving_average_threshold(&histogram(&img), 11), Err(Error::NoValley)));
    }

    #[test]
    fn speckles() {
        let single = mask_from(&["...", ".#.", "..."]);
        assert_eq!(remove_speckles(&single, 2).unwrap().count(), 0);
        assert_eq!(remove_speckles(&single, 1).unwrap(), single);
        let touching = mask_from(&["###.", "..#.", "..##"]);
        assert_eq!(connected_components(&touching).len(), 1);
        let two = mask_from(&["###.......", "..........", "....######", "....######", "....######"]);
        let kept = remove_speckles(&two, 10).unwrap();
        assert_eq!(kept.count(), 18);
        assert!(!kept.get(0, 0));
    }

    #[test]
    fn cleanup_default_sequence_runs() {
        let m = mask_from(&["#.........", "..######..", "..######..", "..######..", ".........."]);
        let out = cleanup(&m, &CleanupParams::default()).unwrap();
        assert!(!out.get(0, 0));
        assert!(out.get(4, 2));
    }
}
