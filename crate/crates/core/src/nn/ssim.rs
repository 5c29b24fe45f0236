//! Windowed structural similarity and its dissimilarity loss.
//!
//! Statistics use a uniform `window x window` box evaluated at every
//! position where the box fits inside the plane; the score is the mean over
//! positions, channels and batch elements. Internally everything is
//! accumulated in `f64` regardless of the tensor scalar.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SsimConfig {
    pub window: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self { window: 23, c1: 0.01 * 0.01, c2: 0.03 * 0.03 }
    }
}

impl SsimConfig {
    pub fn with_window(window: usize) -> Self {
        Self { window, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidArgument("ssim window must be positive".into()));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::InvalidArgument("ssim stabilizers must be positive".into()));
        }
        Ok(())
    }
}

fn check<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>, cfg: &SsimConfig) -> Result<()> {
    cfg.validate()?;
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "ssim operands differ: {:?} vs {:?}",
            x.shape(),
            y.shape()
        )));
    }
    if cfg.window > x.height() || cfg.window > x.width() {
        return Err(Error::InvalidArgument(format!(
            "ssim window {} larger than {}x{} patch",
            cfg.window,
            x.height(),
            x.width()
        )));
    }
    Ok(())
}

/// Inclusive prefix sums with a zero border row and column.
struct Summed {
    w: usize,
    t: Vec<f64>,
}

impl Summed {
    fn new(h: usize, w: usize, f: impl Fn(usize) -> f64) -> Self {
        let stride = w + 1;
        let mut t = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += f(y * w + x);
                t[(y + 1) * stride + x + 1] = t[y * stride + x + 1] + row;
            }
        }
        Self { w, t }
    }

    /// Sum over rows `[y0, y1)` and columns `[x0, x1)`.
    #[inline]
    fn rect(&self, y0: usize, x0: usize, y1: usize, x1: usize) -> f64 {
        let s = self.w + 1;
        self.t[y1 * s + x1] - self.t[y0 * s + x1] - self.t[y1 * s + x0] + self.t[y0 * s + x0]
    }
}

struct PlaneStats {
    /// Mean SSIM over window positions.
    mean: f64,
    /// d(sum of SSIM over positions)/dx for every pixel, when requested.
    grad: Option<Vec<f64>>,
}

fn plane_ssim(x: &[f64], y: &[f64], h: usize, w: usize, cfg: &SsimConfig, want_grad: bool) -> PlaneStats {
    let win = cfg.window;
    let n = (win * win) as f64;
    let ph = h - win + 1;
    let pw = w - win + 1;
    let sx = Summed::new(h, w, |i| x[i]);
    let sy = Summed::new(h, w, |i| y[i]);
    let sxx = Summed::new(h, w, |i| x[i] * x[i]);
    let syy = Summed::new(h, w, |i| y[i] * y[i]);
    let sxy = Summed::new(h, w, |i| x[i] * y[i]);
    let mut total = 0.0;
    let (mut alpha, mut beta, mut gamma) = if want_grad {
        (vec![0.0; ph * pw], vec![0.0; ph * pw], vec![0.0; ph * pw])
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };
    for py in 0..ph {
        for px in 0..pw {
            let r = |s: &Summed| s.rect(py, px, py + win, px + win) / n;
            let mx = r(&sx);
            let my = r(&sy);
            let vx = r(&sxx) - mx * mx;
            let vy = r(&syy) - my * my;
            let cxy = r(&sxy) - mx * my;
            let a1 = 2.0 * mx * my + cfg.c1;
            let a2 = 2.0 * cxy + cfg.c2;
            let b1 = mx * mx + my * my + cfg.c1;
            let b2 = vx + vy + cfg.c2;
            let s = a1 * a2 / (b1 * b2);
            total += s;
            if want_grad {
                // dS/dx_i = (alpha + beta*y_i + gamma*x_i) / n for x_i in the window
                let i = py * pw + px;
                beta[i] = 2.0 * s / a2;
                gamma[i] = -2.0 * s / b2;
                alpha[i] = s * (2.0 * my / a1 - 2.0 * mx / b1) - beta[i] * my - gamma[i] * mx;
            }
        }
    }
    let grad = want_grad.then(|| {
        let sa = Summed::new(ph, pw, |i| alpha[i]);
        let sb = Summed::new(ph, pw, |i| beta[i]);
        let sg = Summed::new(ph, pw, |i| gamma[i]);
        let mut g = vec![0.0; h * w];
        for iy in 0..h {
            let y0 = iy.saturating_sub(win - 1);
            let y1 = iy.min(ph - 1) + 1;
            for ix in 0..w {
                let x0 = ix.saturating_sub(win - 1);
                let x1 = ix.min(pw - 1) + 1;
                if y0 >= y1 || x0 >= x1 {
                    continue;
                }
                let i = iy * w + ix;
                g[i] = (sa.rect(y0, x0, y1, x1) + y[i] * sb.rect(y0, x0, y1, x1) + x[i] * sg.rect(y0, x0, y1, x1)) / n;
            }
        }
        g
    });
    PlaneStats { mean: total / (ph * pw) as f64, grad }
}

fn planes<T: Scalar>(t: &Tensor<T>) -> impl Iterator<Item = Vec<f64>> + '_ {
    let hw = t.height() * t.width();
    t.data().chunks_exact(hw).map(|c| c.iter().map(|v| v.to_f64_lossy()).collect())
}

/// Mean SSIM of each batch element.
pub fn ssim_per_sample<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>, cfg: &SsimConfig) -> Result<Vec<f64>> {
    check(x, y, cfg)?;
    let (h, w, c) = (x.height(), x.width(), x.channels());
    let scores: Vec<f64> = planes(x)
        .zip(planes(y))
        .map(|(a, b)| plane_ssim(&a, &b, h, w, cfg, false).mean)
        .collect();
    Ok(scores.chunks_exact(c).map(|s| s.iter().sum::<f64>() / c as f64).collect())
}

/// Mean SSIM over windows, channels and batch.
pub fn ssim<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>, cfg: &SsimConfig) -> Result<f64> {
    let s = ssim_per_sample(x, y, cfg)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// `(1 - ssim) / 2`.
pub fn dssim<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>, cfg: &SsimConfig) -> Result<f64> {
    Ok((1.0 - ssim(x, y, cfg)?) / 2.0)
}

/// Per-sample DSSIM together with the gradient of their batch mean,
/// scaled by `upstream`, with respect to `x`.
pub fn dssim_with_grad<T: Scalar>(
    x: &Tensor<T>,
    y: &Tensor<T>,
    cfg: &SsimConfig,
    upstream: f64,
) -> Result<(Vec<f64>, Tensor<T>)> {
    check(x, y, cfg)?;
    let (h, w, c) = (x.height(), x.width(), x.channels());
    let positions = ((h - cfg.window + 1) * (w - cfg.window + 1)) as f64;
    let planes_total = (x.batch() * c) as f64;
    // d mean_dssim / d sum_ssim_over_positions of a plane
    let scale = upstream * -0.5 / (planes_total * positions);
    let mut grad = Vec::with_capacity(x.data().len());
    let mut per_plane = Vec::with_capacity(x.batch() * c);
    for (a, b) in planes(x).zip(planes(y)) {
        let st = plane_ssim(&a, &b, h, w, cfg, true);
        per_plane.push(st.mean);
        grad.extend(st.grad.expect("gradient requested").into_iter().map(|g| T::from_f64_lossy(g * scale)));
    }
    let losses = per_plane
        .chunks_exact(c)
        .map(|s| (1.0 - s.iter().sum::<f64>() / c as f64) / 2.0)
        .collect();
    Ok((losses, Tensor::new(x.shape(), grad)?))
}

/// Gradient of `upstream * dssim(x, y)` with respect to `x`.
pub fn dssim_backward<T: Scalar>(x: &Tensor<T>, y: &Tensor<T>, cfg: &SsimConfig, upstream: f64) -> Result<Tensor<T>> {
    Ok(dssim_with_grad(x, y, cfg, upstream)?.1)
}
