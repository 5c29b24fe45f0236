//! Direct, unoptimized restatements of the evaluation measures and of patch
//! stitching. They share no code with the library.

use docrestore::image::Raster;
use docrestore::BinaryMask;

type Grid = Vec<Vec<bool>>;

fn grid(m: &BinaryMask) -> Grid {
    (0..m.height()).map(|y| (0..m.width()).map(|x| m.get(x, y)).collect()).collect()
}

fn cell(g: &Grid, x: isize, y: isize) -> bool {
    y >= 0 && x >= 0 && (y as usize) < g.len() && (x as usize) < g[0].len() && g[y as usize][x as usize]
}

pub fn f_measure(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let (p, g) = (grid(pred), grid(gt));
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for y in 0..p.len() {
        for x in 0..p[0].len() {
            tp += (p[y][x] && g[y][x]) as u64;
            fp += (p[y][x] && !g[y][x]) as u64;
            fn_ += (!p[y][x] && g[y][x]) as u64;
        }
    }
    if tp + fn_ == 0 {
        return if fp == 0 { 100.0 } else { 0.0 };
    }
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    200.0 * precision * recall / (precision + recall)
}

pub fn psnr(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let (p, g) = (grid(pred), grid(gt));
    let n = (p.len() * p[0].len()) as f64;
    let mut se = 0.0;
    for y in 0..p.len() {
        for x in 0..p[0].len() {
            let d = p[y][x] as u8 as f64 - g[y][x] as u8 as f64;
            se += d * d;
        }
    }
    if se == 0.0 {
        return 99.0;
    }
    (10.0 * (1.0 / (se / n)).log10()).min(99.0)
}

/// Zhang-Suen thinning on a one-pixel zero border.
pub fn zhang_suen(m: &BinaryMask) -> Grid {
    let mut g = grid(m);
    let (h, w) = (g.len() as isize, g[0].len() as isize);
    // P2..P9: N, NE, E, SE, S, SW, W, NW
    const RING: [(isize, isize); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];
    loop {
        let mut any = false;
        for step in 0..2 {
            let mut kill = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if !g[y as usize][x as usize] {
                        continue;
                    }
                    let p: Vec<bool> = RING.iter().map(|&(dx, dy)| cell(&g, x + dx, y + dy)).collect();
                    let b = p.iter().filter(|v| **v).count();
                    let mut a = 0;
                    for i in 0..8 {
                        if !p[i] && p[(i + 1) % 8] {
                            a += 1;
                        }
                    }
                    let ok = if step == 0 {
                        !(p[0] && p[2] && p[4]) && !(p[2] && p[4] && p[6])
                    } else {
                        !(p[0] && p[2] && p[6]) && !(p[0] && p[4] && p[6])
                    };
                    if (2..=6).contains(&b) && a == 1 && ok {
                        kill.push((x as usize, y as usize));
                    }
                }
            }
            any |= !kill.is_empty();
            for (x, y) in kill {
                g[y][x] = false;
            }
        }
        if !any {
            return g;
        }
    }
}

/// 8-connected labels by repeated minimum propagation; 0 is background.
pub fn labels(m: &BinaryMask) -> Vec<Vec<usize>> {
    let g = grid(m);
    let (h, w) = (g.len(), g[0].len());
    let mut lab: Vec<Vec<usize>> = (0..h).map(|y| (0..w).map(|x| if g[y][x] { y * w + x + 1 } else { 0 }).collect()).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                if lab[y][x] == 0 {
                    continue;
                }
                for dy in -1isize..=1 {
                    for dx in -1isize..=1 {
                        let (nx, ny) = (x as isize + dx, y as isize + dy);
                        if cell(&g, nx, ny) {
                            let other = lab[ny as usize][nx as usize];
                            if other < lab[y][x] {
                                lab[y][x] = other;
                                changed = true;
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            return lab;
        }
    }
}

/// Pseudo F-measure: recall on the skeleton (whole component when its
/// skeleton vanishes), precision against ground truth within one pixel.
pub fn pseudo_f_measure(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let (p, g) = (grid(pred), grid(gt));
    let (h, w) = (g.len(), g[0].len());
    let n_pred = p.iter().flatten().filter(|v| **v).count();
    let n_gt = g.iter().flatten().filter(|v| **v).count();
    if n_gt == 0 {
        return if n_pred == 0 { 100.0 } else { 0.0 };
    }
    if n_pred == 0 {
        return 0.0;
    }
    let mut skel = zhang_suen(gt);
    let lab = labels(gt);
    let mut ids: Vec<usize> = lab.iter().flatten().copied().filter(|&l| l > 0).collect();
    ids.sort_unstable();
    ids.dedup();
    for id in ids {
        let survives = (0..h).any(|y| (0..w).any(|x| lab[y][x] == id && skel[y][x]));
        if !survives {
            for y in 0..h {
                for x in 0..w {
                    if lab[y][x] == id {
                        skel[y][x] = true;
                    }
                }
            }
        }
    }
    let mut skel_n = 0usize;
    let mut hit = 0usize;
    let mut precise = 0usize;
    for y in 0..h {
        for x in 0..w {
            skel_n += skel[y][x] as usize;
            hit += (skel[y][x] && p[y][x]) as usize;
            if p[y][x] {
                let near = (-1isize..=1).any(|dy| (-1isize..=1).any(|dx| cell(&g, x as isize + dx, y as isize + dy)));
                precise += near as usize;
            }
        }
    }
    let precision = precise as f64 / n_pred as f64;
    let recall = hit as f64 / skel_n as f64;
    if precision + recall == 0.0 {
        return 0.0;
    }
    200.0 * precision * recall / (precision + recall)
}

/// Distance reciprocal distortion with a 5x5 reciprocal-distance kernel,
/// normalized by the number of non-uniform 8x8 blocks (partial edge blocks
/// included). Neighbours outside the image contribute nothing.
pub fn drd(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let (p, g) = (grid(pred), grid(gt));
    let (h, w) = (g.len(), g[0].len());
    let mut nubn = 0usize;
    let mut by = 0;
    while by < h {
        let mut bx = 0;
        while bx < w {
            let mut ones = 0;
            let mut total = 0;
            for y in by..(by + 8).min(h) {
                for x in bx..(bx + 8).min(w) {
                    ones += g[y][x] as usize;
                    total += 1;
                }
            }
            if ones != 0 && ones != total {
                nubn += 1;
            }
            bx += 8;
        }
        by += 8;
    }
    if nubn == 0 {
        return 0.0;
    }
    let mut norm = 0.0;
    for i in -2i32..=2 {
        for j in -2i32..=2 {
            if i != 0 || j != 0 {
                norm += 1.0 / ((i * i + j * j) as f64).sqrt();
            }
        }
    }
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            if p[y][x] == g[y][x] {
                continue;
            }
            for i in -2i32..=2 {
                for j in -2i32..=2 {
                    if i == 0 && j == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as isize + j as isize, y as isize + i as isize);
                    if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                        continue;
                    }
                    if g[ny as usize][nx as usize] != p[y][x] {
                        sum += 1.0 / ((i * i + j * j) as f64).sqrt() / norm;
                    }
                }
            }
        }
    }
    sum / nubn as f64
}

/// One flipped pixel in the middle of a white 24x24 page whose only
/// non-uniform block lies elsewhere; every neighbour disagrees with the flip,
/// so the distortion is exactly one.
pub fn single_flip_case() -> (BinaryMask, BinaryMask) {
    let mut gt = BinaryMask::new(24, 24, vec![false; 576]).expect("24x24");
    gt.set(1, 1, true);
    let mut pred = gt.clone();
    pred.set(12, 12, true);
    (pred, gt)
}

/// Per-pixel average over every patch that covers it.
pub fn stitch<R: Raster>(w: usize, h: usize, origins: &[(usize, usize)], patches: &[R]) -> Vec<f64> {
    let c = patches[0].channels();
    let p = patches[0].width();
    let mut out = vec![0.0; c * w * h];
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                let vals: Vec<f64> = origins
                    .iter()
                    .zip(patches)
                    .filter(|((ox, oy), _)| x >= *ox && x < ox + p && y >= *oy && y < oy + p)
                    .map(|((ox, oy), q)| q.sample(ch, x - ox, y - oy))
                    .collect();
                out[ch * w * h + y * w + x] = vals.iter().sum::<f64>() / vals.len() as f64;
            }
        }
    }
    out
}
