//! Binarization quality measures: F-measure, pseudo F-measure, PSNR and DRD.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::image::BinaryMask;

/// Reported PSNR when the masks agree everywhere.
pub const PSNR_CAP: f64 = 99.0;
pub const DRD_BLOCK: usize = 8;

fn same_dims(pred: &BinaryMask, gt: &BinaryMask) -> Result<()> {
    if pred.same_dims(gt) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )))
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        100.0 * 2.0 * p * r / (p + r)
    }
}

/// Percent F-measure of text detection.
pub fn f_measure(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    same_dims(pred, gt)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp + fn_ == 0 {
        return Ok(if fp == 0 { 100.0 } else { 0.0 });
    }
    if tp == 0 {
        return Ok(0.0);
    }
    Ok(harmonic(tp as f64 / (tp + fp) as f64, tp as f64 / (tp + fn_) as f64))
}

/// Zhang-Suen thinning of 8-connected strokes.
pub fn thin(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width() as isize, mask.height() as isize);
    let mut bits = mask.bits().to_vec();
    let at = |b: &[bool], x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && b[(y * w + x) as usize];
    let mut remove = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            remove.clear();
            for y in 0..h {
                for x in 0..w {
                    if !bits[(y * w + x) as usize] {
                        continue;
                    }
                    // P2..P9 clockwise from north
                    let n = [
                        at(&bits, x, y - 1),
                        at(&bits, x + 1, y - 1),
                        at(&bits, x + 1, y),
                        at(&bits, x + 1, y + 1),
                        at(&bits, x, y + 1),
                        at(&bits, x - 1, y + 1),
                        at(&bits, x - 1, y),
                        at(&bits, x - 1, y - 1),
                    ];
                    let b = n.iter().filter(|&&v| v).count();
                    let a = (0..8).filter(|&i| !n[i] && n[(i + 1) % 8]).count();
                    let (p2, p4, p6, p8) = (n[0], n[2], n[4], n[6]);
                    let cond = if pass == 0 { !(p2 && p4 && p6) && !(p4 && p6 && p8) } else { !(p2 && p4 && p8) && !(p2 && p6 && p8) };
                    if (2..=6).contains(&b) && a == 1 && cond {
                        remove.push((y * w + x) as usize);
                    }
                }
            }
            changed |= !remove.is_empty();
            for &i in &remove {
                bits[i] = false;
            }
        }
        if !changed {
            break;
        }
    }
    BinaryMask::new(mask.width(), mask.height(), bits).expect("same dims")
}

/// Skeleton used for pseudo-recall. Components that thin away entirely
/// (for example 2x2 blobs) are kept whole.
pub fn recall_skeleton(gt: &BinaryMask) -> BinaryMask {
    let mut skel = thin(gt);
    for comp in crate::morpho::connected_components(gt) {
        if comp.iter().all(|&i| !skel.bits()[i]) {
            let w = gt.width();
            for i in comp {
                skel.set(i % w, i / w, true);
            }
        }
    }
    skel
}

/// Percent pseudo F-measure. Recall is measured on the ground-truth
/// skeleton; a predicted pixel counts as precise when ground-truth text lies
/// within one pixel (8-neighbourhood) of it.
pub fn pseudo_f_measure(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    same_dims(pred, gt)?;
    let n_pred = pred.count();
    if gt.count() == 0 {
        return Ok(if n_pred == 0 { 100.0 } else { 0.0 });
    }
    if n_pred == 0 {
        return Ok(0.0);
    }
    let skel = recall_skeleton(gt);
    let skel_n = skel.count();
    let hit = skel.bits().iter().zip(pred.bits()).filter(|(&s, &p)| s && p).count();
    let near = crate::morpho::dilate(gt, crate::morpho::StructuringElement::Square(3));
    let precise = pred.bits().iter().zip(near.bits()).filter(|(&p, &g)| p && g).count();
    Ok(harmonic(precise as f64 / n_pred as f64, hit as f64 / skel_n as f64))
}

/// Peak signal-to-noise ratio of the masks as {0,1} images, capped.
pub fn psnr(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    same_dims(pred, gt)?;
    let wrong = pred.bits().iter().zip(gt.bits()).filter(|(a, b)| a != b).count();
    if wrong == 0 {
        return Ok(PSNR_CAP);
    }
    let mse = wrong as f64 / pred.bits().len() as f64;
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP))
}

/// Normalized 5x5 reciprocal-distance weights, row-major, centre zero.
pub fn drd_weights() -> [[f64; 5]; 5] {
    let mut w = [[0.0; 5]; 5];
    let mut total = 0.0;
    for (i, row) in w.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 2.0, j as f64 - 2.0);
            if di != 0.0 || dj != 0.0 {
                *v = 1.0 / (di * di + dj * dj).sqrt();
                total += *v;
            }
        }
    }
    for row in &mut w {
        for v in row {
            *v /= total;
        }
    }
    w
}

/// Count of 8x8 ground-truth blocks, edge remnants included, that mix text and background.
pub fn non_uniform_blocks(gt: &BinaryMask) -> usize {
    let (w, h) = (gt.width(), gt.height());
    let mut n = 0;
    for by in (0..h).step_by(DRD_BLOCK) {
        for bx in (0..w).step_by(DRD_BLOCK) {
            let first = gt.get(bx, by);
            let mixed = (by..(by + DRD_BLOCK).min(h)).any(|y| (bx..(bx + DRD_BLOCK).min(w)).any(|x| gt.get(x, y) != first));
            n += mixed as usize;
        }
    }
    n
}

/// Distance reciprocal distortion. Neighbours outside the image contribute nothing.
pub fn drd(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    same_dims(pred, gt)?;
    let nubn = non_uniform_blocks(gt);
    if nubn == 0 {
        return Ok(0.0);
    }
    let wm = drd_weights();
    let (w, h) = (gt.width() as isize, gt.height() as isize);
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let p = pred.get(x as usize, y as usize);
            if p == gt.get(x as usize, y as usize) {
                continue;
            }
            for (i, row) in wm.iter().enumerate() {
                for (j, &wt) in row.iter().enumerate() {
                    let (nx, ny) = (x + j as isize - 2, y + i as isize - 2);
                    if nx >= 0 && ny >= 0 && nx < w && ny < h && gt.get(nx as usize, ny as usize) != p {
                        total += wt;
                    }
                }
            }
        }
    }
    Ok(total / nubn as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub image: String,
    #[serde(rename = "FM")]
    pub fm: f64,
    #[serde(rename = "Fps")]
    pub fps: f64,
    #[serde(rename = "PSNR")]
    pub psnr: f64,
    #[serde(rename = "DRD")]
    pub drd: f64,
}

pub fn evaluate(image: impl Into<String>, pred: &BinaryMask, gt: &BinaryMask) -> Result<MetricsRow> {
    Ok(MetricsRow {
        image: image.into(),
        fm: f_measure(pred, gt)?,
        fps: pseudo_f_measure(pred, gt)?,
        psnr: psnr(pred, gt)?,
        drd: drd(pred, gt)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub average: MetricsRow,
}

pub const AVERAGE_LABEL: &str = "Average";

pub fn report(rows: Vec<MetricsRow>) -> Result<MetricsReport> {
    if rows.is_empty() {
        return Err(invalid("no images to report"));
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&MetricsRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let average = MetricsRow {
        image: AVERAGE_LABEL.into(),
        fm: mean(|r| r.fm),
        fps: mean(|r| r.fps),
        psnr: mean(|r| r.psnr),
        drd: mean(|r| r.drd),
    };
    Ok(MetricsReport { rows, average })
}

impl MetricsReport {
    /// Per-image rows followed by the average row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in self.rows.iter().chain(std::iter::once(&self.average)) {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Parse a report written by [`MetricsReport::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rows: Vec<MetricsRow> = csv::Reader::from_reader(r).deserialize().collect::<std::result::Result<_, _>>()?;
        let average = match rows.last() {
            Some(last) if last.image == AVERAGE_LABEL => rows.pop().expect("nonempty"),
            _ => return Err(Error::Parse("report has no average row".into())),
        };
        Ok(Self { rows, average })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, on: &[(usize, usize)]) -> BinaryMask {
        let mut m = BinaryMask::empty(w, h).unwrap();
        for &(x, y) in on {
            m.set(x, y, true);
        }
        m
    }

    #[test]
    fn f_measure_examples() {
        let gt = mask(2, 2, &[(0, 0), (1, 0)]);
        let pred = mask(2, 2, &[(0, 0), (0, 1)]);
        assert_eq!(f_measure(&pred, &gt).unwrap(), 50.0);
        assert_eq!(f_measure(&gt, &gt).unwrap(), 100.0);
        assert_eq!(f_measure(&gt.complement(), &gt).unwrap(), 0.0);
        let empty = mask(2, 2, &[]);
        assert_eq!(f_measure(&empty, &empty).unwrap(), 100.0);
        assert_eq!(f_measure(&gt, &empty).unwrap(), 0.0);
        assert!(f_measure(&mask(3, 2, &[]), &gt).is_err());
    }

    #[test]
    fn psnr_examples() {
        let a = mask(16, 16, &[(3, 3)]);
        let b = mask(16, 16, &[]);
        assert_eq!(psnr(&b, &b).unwrap(), PSNR_CAP);
        assert!((psnr(&a, &b).unwrap() - 10.0 * 256f64.log10()).abs() < 1e-12);
        assert!((psnr(&a, &b).unwrap() - 24.082).abs() < 1e-3);
        assert_eq!(psnr(&b.complement(), &b).unwrap(), 0.0);
    }

    #[test]
    fn drd_single_flip_is_one() {
        let gt = mask(24, 24, &[(0, 0)]);
        let mut pred = gt.clone();
        pred.set(12, 12, true);
        assert_eq!(non_uniform_blocks(&gt), 1);
        assert!((drd(&pred, &gt).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(drd(&gt, &gt).unwrap(), 0.0);
        let w: f64 = drd_weights().iter().flatten().sum();
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn drd_scales_with_block_count() {
        let gt1 = mask(24, 24, &[(0, 0)]);
        let gt2 = mask(24, 24, &[(0, 0), (23, 23)]);
        let mut p1 = gt1.clone();
        p1.set(12, 12, true);
        let mut p2 = gt2.clone();
        p2.set(12, 12, true);
        assert!((drd(&p1, &gt1).unwrap() - 2.0 * drd(&p2, &gt2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn thinning_reduces_bar_to_line() {
        let mut m = BinaryMask::empty(20, 9).unwrap();
        for y in 2..7 {
            for x in 2..18 {
                m.set(x, y, true);
            }
        }
        let s = thin(&m);
        assert!(s.count() > 0 && s.count() < 20);
        assert!(s.bits().iter().zip(m.bits()).all(|(&a, &b)| !a || b));
    }

    #[test]
    fn pseudo_f_tolerates_eroded_strokes() {
        let mut gt = BinaryMask::empty(30, 30).unwrap();
        for y in 5..25 {
            for x in 10..16 {
                gt.set(x, y, true);
            }
        }
        let pred = crate::morpho::erode(&gt, crate::morpho::StructuringElement::Square(3));
        let fm = f_measure(&pred, &gt).unwrap();
        let fps = pseudo_f_measure(&pred, &gt).unwrap();
        assert!(fps >= fm, "{fps} < {fm}");
        assert_eq!(pseudo_f_measure(&gt, &gt).unwrap(), 100.0);
        assert_eq!(pseudo_f_measure(&BinaryMask::empty(30, 30).unwrap(), &gt).unwrap(), 0.0);
    }

    #[test]
    fn report_average_and_csv_round_trip() {
        let rows = vec![
            MetricsRow { image: "a".into(), fm: 90.0, fps: 92.0, psnr: 15.0, drd: 3.0 },
            MetricsRow { image: "b".into(), fm: 80.0, fps: 84.0, psnr: 17.0, drd: 5.0 },
        ];
        let r = report(rows).unwrap();
        assert_eq!(r.average.fm, 85.0);
        assert_eq!(r.average.drd, 4.0);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("image,FM,Fps,PSNR,DRD\n"));
        assert_eq!(MetricsReport::read_csv(&buf[..]).unwrap(), r);
        assert!(report(Vec::new()).is_err());
    }
}
