//! Central finite-difference checks and the convolution adjoint identity.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use docrestore::nn::{
    conv2d_backward, conv2d_forward, conv_transpose2d_backward, conv_transpose2d_forward, dssim, dssim_backward,
    Activation, LayerKind, LayerSpec, Padding, SsimConfig, Tensor,
};

pub const STEP: f64 = 1e-5;

pub fn central(mut f: impl FnMut(f64) -> f64) -> f64 {
    (f(STEP) - f(-STEP)) / (2.0 * STEP)
}

/// Largest absolute deviation over the largest derivative magnitude.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let scale = numeric.iter().chain(analytic).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    analytic.iter().zip(numeric).map(|(a, n)| (a - n).abs()).fold(0.0, f64::max) / scale
}

pub fn random_tensor(shape: [usize; 4], rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(lo..hi))
}

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-0.5..0.5)).collect()
}

pub fn layer(kind: LayerKind, in_ch: usize, out_ch: usize, k: usize, stride: usize, padding: Padding, act: Activation) -> LayerSpec {
    LayerSpec { kind, in_ch, out_ch, kernel: (k, k), stride, padding, activation: act }
}

/// A small random layer of `kind` without activation, and an input size it accepts.
pub fn random_layer(kind: LayerKind, rng: &mut ChaCha8Rng) -> (LayerSpec, (usize, usize)) {
    let k = rng.random_range(1..=4);
    let stride = rng.random_range(1..=2);
    let padding = if rng.random_bool(0.5) { Padding::Same } else { Padding::None };
    let s = layer(kind, rng.random_range(1..=3), rng.random_range(1..=3), k, stride, padding, Activation::None);
    let lo = if kind == LayerKind::Conv { k.max(3) } else { 2 };
    (s, (rng.random_range(lo..lo + 4), rng.random_range(lo..lo + 4)))
}

/// Worst relative error over input, weight and bias gradients of `<layer(x), r>`.
pub fn check_layer(s: &LayerSpec, in_hw: (usize, usize), rng: &mut ChaCha8Rng) -> f64 {
    let conv = s.kind == LayerKind::Conv;
    let fwd = |x: &Tensor<f64>, w: &[f64], b: &[f64]| {
        if conv { conv2d_forward(x, w, b, s) } else { conv_transpose2d_forward(x, w, b, s) }.expect("forward")
    };
    let x = random_tensor([2, s.in_ch, in_hw.0, in_hw.1], rng, -1.0, 1.0);
    let w = random_vec(s.weight_len(), rng);
    let b = random_vec(s.out_ch, rng);
    let r = random_tensor(fwd(&x, &w, &b).shape(), rng, -1.0, 1.0);
    let (gx, gw, gb) =
        if conv { conv2d_backward(&x, &w, &b, &r, s) } else { conv_transpose2d_backward(&x, &w, &b, &r, s) }.expect("backward");
    let f = |x: &Tensor<f64>, w: &[f64], b: &[f64]| fwd(x, w, b).dot(&r);

    let nx: Vec<f64> = (0..x.data().len())
        .map(|i| {
            central(|d| {
                let mut xp = x.clone();
                xp.data_mut()[i] += d;
                f(&xp, &w, &b)
            })
        })
        .collect();
    let nw: Vec<f64> = (0..w.len())
        .map(|i| {
            central(|d| {
                let mut wp = w.clone();
                wp[i] += d;
                f(&x, &wp, &b)
            })
        })
        .collect();
    let nb: Vec<f64> = (0..b.len())
        .map(|i| {
            central(|d| {
                let mut bp = b.clone();
                bp[i] += d;
                f(&x, &w, &bp)
            })
        })
        .collect();
    max_rel_err(gx.data(), &nx).max(max_rel_err(&gw, &nw)).max(max_rel_err(&gb, &nb))
}

/// Relative error of the activation derivative on a random tensor.
pub fn check_activation(act: Activation, rng: &mut ChaCha8Rng) -> f64 {
    let n = rng.random_range(8..40);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut y = x.clone();
    act.apply_in_place(&mut y);
    let mut g = r.clone();
    act.backprop_in_place(&y, &mut g);
    let num: Vec<f64> = (0..n).map(|i| r[i] * central(|d| act.apply(x[i] + d))).collect();
    max_rel_err(&g, &num)
}

/// Relative error of the DSSIM gradient on a random small pair.
pub fn check_dssim(rng: &mut ChaCha8Rng) -> f64 {
    let (h, w) = (rng.random_range(5..12), rng.random_range(5..12));
    let c = rng.random_range(1..=3);
    let cfg = SsimConfig::with_window(rng.random_range(2..=h.min(w)));
    let x = random_tensor([rng.random_range(1..=2), c, h, w], rng, 0.0, 1.0);
    let y = random_tensor(x.shape(), rng, 0.0, 1.0);
    let g = dssim_backward(&x, &y, &cfg, 1.0).expect("dssim gradient");
    let num: Vec<f64> = (0..x.data().len())
        .map(|i| {
            central(|d| {
                let mut xp = x.clone();
                xp.data_mut()[i] += d;
                dssim(&xp, &y, &cfg).expect("dssim")
            })
        })
        .collect();
    max_rel_err(g.data(), &num)
}

/// `|<conv(x), y> - <x, conv_t(y)>|`, or `None` when the transposed layer does
/// not map back onto the conv input size.
pub fn adjoint_gap(conv: &LayerSpec, hw: (usize, usize), rng: &mut ChaCha8Rng) -> Option<f64> {
    let x = random_tensor([1, conv.in_ch, hw.0, hw.1], rng, -1.0, 1.0);
    let w = random_vec(conv.weight_len(), rng);
    let cx = conv2d_forward(&x, &w, &vec![0.0; conv.out_ch], conv).ok()?;
    let y = random_tensor(cx.shape(), rng, -1.0, 1.0);
    // (in, out, kh, kw) of the transposed layer is the conv's (out, in, kh, kw)
    let t = LayerSpec { kind: LayerKind::ConvTranspose, in_ch: conv.out_ch, out_ch: conv.in_ch, ..conv.clone() };
    let ty = conv_transpose2d_forward(&y, &w, &vec![0.0; t.out_ch], &t).ok()?;
    (ty.shape() == x.shape()).then(|| (cx.dot(&y) - x.dot(&ty)).abs())
}

/// Gaps for the first `n` random conv parameterizations with matching geometry.
pub fn random_adjoint_gaps(n: usize, rng: &mut ChaCha8Rng) -> Vec<(String, f64)> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let k = rng.random_range(1..=6);
        let stride = rng.random_range(1..=2);
        let padding = if rng.random_bool(0.5) { Padding::Same } else { Padding::None };
        let s = layer(LayerKind::Conv, rng.random_range(1..=4), rng.random_range(1..=4), k, stride, padding, Activation::None);
        let hw = (rng.random_range(k.max(2)..14), rng.random_range(k.max(2)..14));
        if let Some(gap) = adjoint_gap(&s, hw, rng) {
            out.push((format!("{} on {}x{}", s.describe(), hw.0, hw.1), gap));
        }
    }
    out
}
