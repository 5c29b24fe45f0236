//! Convolution and transposed convolution layers.
//!
//! Both layer kinds share one geometry: a "wide" plane (convolution input,
//! transposed-convolution output) and a "narrow" plane (convolution output,
//! transposed-convolution input) related by kernel, stride and leading
//! padding. The transposed layer is exactly the adjoint of the convolution
//! with the same geometry, which is what makes the two reuse each other's
//! im2col and col2im kernels.

use crate::error::{Error, Result};
use crate::nn::activation::Activation;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv,
    ConvTranspose,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Padding {
    /// No implicit padding.
    None,
    /// Convolution: output `ceil(in / stride)`; transposed: output `in * stride`.
    Same,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: (usize, usize),
    pub stride: usize,
    pub padding: Padding,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kernel.0 == 0 || self.kernel.1 == 0 {
            return Err(Error::InvalidArgument(format!("kernel must be at least 1x1, got {:?}", self.kernel)));
        }
        if !(1..=2).contains(&self.stride) {
            return Err(Error::InvalidArgument(format!("stride must be 1 or 2, got {}", self.stride)));
        }
        if self.in_ch == 0 || self.out_ch == 0 {
            return Err(Error::InvalidArgument("channel counts must be positive".into()));
        }
        Ok(())
    }

    /// Weight layout: `(out, in, kh, kw)` for convolutions and
    /// `(in, out, kh, kw)` for transposed convolutions.
    pub fn weight_len(&self) -> usize {
        self.in_ch * self.out_ch * self.kernel.0 * self.kernel.1
    }

    pub fn fan_in(&self) -> usize {
        self.in_ch * self.kernel.0 * self.kernel.1
    }

    pub fn fan_out(&self) -> usize {
        self.out_ch * self.kernel.0 * self.kernel.1
    }

    pub fn geometry(&self, in_h: usize, in_w: usize) -> Result<Geometry> {
        if in_h == 0 || in_w == 0 {
            return Err(self.too_small(in_h, in_w));
        }
        let (kh, kw) = self.kernel;
        let s = self.stride;
        let axis = |n: usize, k: usize| -> Option<(usize, usize, usize)> {
            // (wide, narrow, leading pad)
            match (self.kind, self.padding) {
                (LayerKind::Conv, Padding::None) => (n >= k).then(|| (n, (n - k) / s + 1, 0)),
                (LayerKind::Conv, Padding::Same) => {
                    let out = n.div_ceil(s);
                    let total = ((out - 1) * s + k).saturating_sub(n);
                    Some((n, out, total / 2))
                }
                (LayerKind::ConvTranspose, Padding::None) => Some(((n - 1) * s + k, n, 0)),
                (LayerKind::ConvTranspose, Padding::Same) => Some((n * s, n, k.saturating_sub(s) / 2)),
            }
        };
        let (wide_h, narrow_h, pad_top) = axis(in_h, kh).ok_or_else(|| self.too_small(in_h, in_w))?;
        let (wide_w, narrow_w, pad_left) = axis(in_w, kw).ok_or_else(|| self.too_small(in_h, in_w))?;
        Ok(Geometry { wide_h, wide_w, narrow_h, narrow_w, kh, kw, stride: s, pad_top, pad_left })
    }

    fn too_small(&self, h: usize, w: usize) -> Error {
        Error::ShapeMismatch {
            layer: self.describe(),
            expected: format!("spatial size at least {:?}", self.kernel),
            actual: format!("{h}x{w}"),
        }
    }

    /// Output `(channels, height, width)` for an input of the given size.
    pub fn output_dims(&self, in_h: usize, in_w: usize) -> Result<(usize, usize, usize)> {
        let g = self.geometry(in_h, in_w)?;
        Ok(match self.kind {
            LayerKind::Conv => (self.out_ch, g.narrow_h, g.narrow_w),
            LayerKind::ConvTranspose => (self.out_ch, g.wide_h, g.wide_w),
        })
    }

    pub fn describe(&self) -> String {
        format!(
            "{} {}->{} k{}x{} s{} pad={} act={}",
            match self.kind {
                LayerKind::Conv => "conv",
                LayerKind::ConvTranspose => "conv_transpose",
            },
            self.in_ch,
            self.out_ch,
            self.kernel.0,
            self.kernel.1,
            self.stride,
            match self.padding {
                Padding::None => "none",
                Padding::Same => "same",
            },
            self.activation.name()
        )
    }
}

/// Spatial relation between the wide and narrow planes of a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Geometry {
    pub wide_h: usize,
    pub wide_w: usize,
    pub narrow_h: usize,
    pub narrow_w: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad_top: usize,
    pub pad_left: usize,
}

impl Geometry {
    fn narrow_len(&self) -> usize {
        self.narrow_h * self.narrow_w
    }

    fn wide_len(&self) -> usize {
        self.wide_h * self.wide_w
    }

    /// Range of narrow positions `o` such that `o * stride + k - pad` falls in `[0, wide)`.
    #[inline]
    fn valid_range(k: usize, pad: usize, stride: usize, narrow: usize, wide: usize) -> (usize, usize) {
        // need o*s + k >= pad and o*s + k - pad < wide
        let lo = if k >= pad { 0 } else { (pad - k).div_ceil(stride) };
        let hi = if wide + pad > k { (wide + pad - k - 1) / stride + 1 } else { 0 };
        (lo.min(narrow), hi.min(narrow).max(lo.min(narrow)))
    }
}

/// Unfold a `channels x wide` plane stack into a
/// `(channels * kh * kw) x narrow` column matrix.
pub(crate) fn im2col<T: Scalar>(src: &[T], channels: usize, g: &Geometry, cols: &mut [T]) {
    let np = g.narrow_len();
    let s = g.stride;
    cols.iter_mut().for_each(|v| *v = T::zero());
    for c in 0..channels {
        let plane = &src[c * g.wide_len()..(c + 1) * g.wide_len()];
        for i in 0..g.kh {
            let (oy0, oy1) = Geometry::valid_range(i, g.pad_top, s, g.narrow_h, g.wide_h);
            for j in 0..g.kw {
                let (ox0, ox1) = Geometry::valid_range(j, g.pad_left, s, g.narrow_w, g.wide_w);
                let row = ((c * g.kh + i) * g.kw + j) * np;
                for oy in oy0..oy1 {
                    let iy = oy * s + i - g.pad_top;
                    let src_row = &plane[iy * g.wide_w..(iy + 1) * g.wide_w];
                    let dst = &mut cols[row + oy * g.narrow_w..row + (oy + 1) * g.narrow_w];
                    if s == 1 {
                        let ix0 = ox0 + j - g.pad_left;
                        dst[ox0..ox1].copy_from_slice(&src_row[ix0..ix0 + (ox1 - ox0)]);
                    } else {
                        for ox in ox0..ox1 {
                            dst[ox] = src_row[ox * s + j - g.pad_left];
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulate columns back onto the wide planes.
pub(crate) fn col2im<T: Scalar>(cols: &[T], channels: usize, g: &Geometry, dst: &mut [T]) {
    let np = g.narrow_len();
    let s = g.stride;
    dst.iter_mut().for_each(|v| *v = T::zero());
    for c in 0..channels {
        let plane = &mut dst[c * g.wide_len()..(c + 1) * g.wide_len()];
        for i in 0..g.kh {
            let (oy0, oy1) = Geometry::valid_range(i, g.pad_top, s, g.narrow_h, g.wide_h);
            for j in 0..g.kw {
                let (ox0, ox1) = Geometry::valid_range(j, g.pad_left, s, g.narrow_w, g.wide_w);
                let row = ((c * g.kh + i) * g.kw + j) * np;
                for oy in oy0..oy1 {
                    let iy = oy * s + i - g.pad_top;
                    let src = &cols[row + oy * g.narrow_w..row + (oy + 1) * g.narrow_w];
                    let dst_row = &mut plane[iy * g.wide_w..(iy + 1) * g.wide_w];
                    for ox in ox0..ox1 {
                        let ix = ox * s + j - g.pad_left;
                        dst_row[ix] = dst_row[ix] + src[ox];
                    }
                }
            }
        }
    }
}

fn check_input<T: Scalar>(spec: &LayerSpec, x: &Tensor<T>, weights: &[T], bias: &[T]) -> Result<Geometry> {
    spec.validate()?;
    if x.channels() != spec.in_ch {
        return Err(Error::ShapeMismatch {
            layer: spec.describe(),
            expected: format!("{} input channels", spec.in_ch),
            actual: format!("input shape {:?}", x.shape()),
        });
    }
    if weights.len() != spec.weight_len() || bias.len() != spec.out_ch {
        return Err(Error::ShapeMismatch {
            layer: spec.describe(),
            expected: format!("{} weights and {} biases", spec.weight_len(), spec.out_ch),
            actual: format!("{} weights and {} biases", weights.len(), bias.len()),
        });
    }
    spec.geometry(x.height(), x.width())
}

/// Pre-activation output of a layer.
pub(crate) fn linear_forward<T: Scalar>(
    spec: &LayerSpec,
    x: &Tensor<T>,
    weights: &[T],
    bias: &[T],
) -> Result<Tensor<T>> {
    let g = check_input(spec, x, weights, bias)?;
    let (oc, oh, ow) = spec.output_dims(x.height(), x.width())?;
    let mut out = Tensor::zeros([x.batch(), oc, oh, ow]);
    let kk = g.kh * g.kw;
    let np = g.narrow_len();
    match spec.kind {
        LayerKind::Conv => {
            let rows = spec.in_ch * kk;
            let mut cols = vec![T::zero(); rows * np];
            for n in 0..x.batch() {
                im2col(x.sample(n), spec.in_ch, &g, &mut cols);
                let y = out.sample_mut(n);
                for (o, chunk) in y.chunks_exact_mut(np).enumerate() {
                    chunk.iter_mut().for_each(|v| *v = bias[o]);
                }
                T::gemm(oc, rows, np, T::one(), weights, (rows as isize, 1), &cols, (np as isize, 1), T::one(), y, (np as isize, 1));
            }
        }
        LayerKind::ConvTranspose => {
            let rows = spec.out_ch * kk;
            let mut cols = vec![T::zero(); rows * np];
            for n in 0..x.batch() {
                // cols = W^T x, W stored (in, out*kk)
                T::gemm(rows, spec.in_ch, np, T::one(), weights, (1, rows as isize), x.sample(n), (np as isize, 1), T::zero(), &mut cols, (np as isize, 1));
                let y = out.sample_mut(n);
                col2im(&cols, spec.out_ch, &g, y);
                let plane = g.wide_len();
                for (o, chunk) in y.chunks_exact_mut(plane).enumerate() {
                    chunk.iter_mut().for_each(|v| *v = *v + bias[o]);
                }
            }
        }
    }
    Ok(out)
}

/// Input gradient (when requested), weight gradient and bias gradient.
pub(crate) type LinearGrads<T> = (Option<Tensor<T>>, Vec<T>, Vec<T>);

/// Gradients of a layer's linear part given the gradient of its
/// pre-activation output.
pub(crate) fn linear_backward<T: Scalar>(
    spec: &LayerSpec,
    x: &Tensor<T>,
    weights: &[T],
    grad_pre: &Tensor<T>,
    need_input_grad: bool,
) -> Result<LinearGrads<T>> {
    let bias_stub = vec![T::zero(); spec.out_ch];
    let g = check_input(spec, x, weights, &bias_stub)?;
    let (oc, oh, ow) = spec.output_dims(x.height(), x.width())?;
    if grad_pre.shape() != [x.batch(), oc, oh, ow] {
        return Err(Error::ShapeMismatch {
            layer: spec.describe(),
            expected: format!("output gradient {:?}", [x.batch(), oc, oh, ow]),
            actual: format!("{:?}", grad_pre.shape()),
        });
    }
    let kk = g.kh * g.kw;
    let np = g.narrow_len();
    let mut gw = vec![T::zero(); weights.len()];
    let mut gb = vec![T::zero(); spec.out_ch];
    let mut gx = need_input_grad.then(|| Tensor::zeros(x.shape()));
    let out_plane = oh * ow;
    for n in 0..x.batch() {
        let gy = grad_pre.sample(n);
        for (o, chunk) in gy.chunks_exact(out_plane).enumerate() {
            gb[o] = gb[o] + chunk.iter().copied().sum::<T>();
        }
    }
    match spec.kind {
        LayerKind::Conv => {
            let rows = spec.in_ch * kk;
            let mut cols = vec![T::zero(); rows * np];
            let mut gcols = vec![T::zero(); rows * np];
            for n in 0..x.batch() {
                im2col(x.sample(n), spec.in_ch, &g, &mut cols);
                let gy = grad_pre.sample(n);
                // gW += gy (oc x np) * cols^T (np x rows)
                T::gemm(oc, np, rows, T::one(), gy, (np as isize, 1), &cols, (1, np as isize), T::one(), &mut gw, (rows as isize, 1));
                if let Some(gx) = gx.as_mut() {
                    // gcols = W^T (rows x oc) * gy (oc x np)
                    T::gemm(rows, oc, np, T::one(), weights, (1, rows as isize), gy, (np as isize, 1), T::zero(), &mut gcols, (np as isize, 1));
                    col2im(&gcols, spec.in_ch, &g, gx.sample_mut(n));
                }
            }
        }
        LayerKind::ConvTranspose => {
            let rows = spec.out_ch * kk;
            let mut gcols = vec![T::zero(); rows * np];
            for n in 0..x.batch() {
                im2col(grad_pre.sample(n), spec.out_ch, &g, &mut gcols);
                let xs = x.sample(n);
                // gW += x (in x np) * gcols^T (np x rows)
                T::gemm(spec.in_ch, np, rows, T::one(), xs, (np as isize, 1), &gcols, (1, np as isize), T::one(), &mut gw, (rows as isize, 1));
                if let Some(gx) = gx.as_mut() {
                    // gx = W (in x rows) * gcols (rows x np)
                    T::gemm(spec.in_ch, rows, np, T::one(), weights, (rows as isize, 1), &gcols, (np as isize, 1), T::zero(), gx.sample_mut(n), (np as isize, 1));
                }
            }
        }
    }
    Ok((gx, gw, gb))
}

fn forward_with_activation<T: Scalar>(
    x: &Tensor<T>,
    weights: &[T],
    bias: &[T],
    spec: &LayerSpec,
    kind: LayerKind,
) -> Result<Tensor<T>> {
    if spec.kind != kind {
        return Err(Error::InvalidArgument(format!("layer {} has the wrong kind", spec.describe())));
    }
    let mut out = linear_forward(spec, x, weights, bias)?;
    spec.activation.apply_in_place(out.data_mut());
    Ok(out)
}

/// Gradients `(input, weights, bias)` of a layer with activation, given
/// the gradient of its activated output.
pub type LayerGrads<T> = (Tensor<T>, Vec<T>, Vec<T>);

fn backward_with_activation<T: Scalar>(
    x: &Tensor<T>,
    weights: &[T],
    bias: &[T],
    grad_out: &Tensor<T>,
    spec: &LayerSpec,
    kind: LayerKind,
) -> Result<LayerGrads<T>> {
    let out = forward_with_activation(x, weights, bias, spec, kind)?;
    if out.shape() != grad_out.shape() {
        return Err(Error::ShapeMismatch {
            layer: spec.describe(),
            expected: format!("output gradient {:?}", out.shape()),
            actual: format!("{:?}", grad_out.shape()),
        });
    }
    let mut g = grad_out.clone();
    spec.activation.backprop_in_place(out.data(), g.data_mut());
    let (gx, gw, gb) = linear_backward(spec, x, weights, &g, true)?;
    Ok((gx.expect("input gradient requested"), gw, gb))
}

/// Cross-correlation layer with optional activation.
pub fn conv2d_forward<T: Scalar>(x: &Tensor<T>, weights: &[T], bias: &[T], spec: &LayerSpec) -> Result<Tensor<T>> {
    forward_with_activation(x, weights, bias, spec, LayerKind::Conv)
}

pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    weights: &[T],
    bias: &[T],
    grad_out: &Tensor<T>,
    spec: &LayerSpec,
) -> Result<LayerGrads<T>> {
    backward_with_activation(x, weights, bias, grad_out, spec, LayerKind::Conv)
}

/// Transposed convolution (fractionally strided) with optional activation.
pub fn conv_transpose2d_forward<T: Scalar>(
    x: &Tensor<T>,
    weights: &[T],
    bias: &[T],
    spec: &LayerSpec,
) -> Result<Tensor<T>> {
    forward_with_activation(x, weights, bias, spec, LayerKind::ConvTranspose)
}

pub fn conv_transpose2d_backward<T: Scalar>(
    x: &Tensor<T>,
    weights: &[T],
    bias: &[T],
    grad_out: &Tensor<T>,
    spec: &LayerSpec,
) -> Result<LayerGrads<T>> {
    backward_with_activation(x, weights, bias, grad_out, spec, LayerKind::ConvTranspose)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: LayerKind, cin: usize, cout: usize, k: usize, s: usize, p: Padding) -> LayerSpec {
        LayerSpec { kind, in_ch: cin, out_ch: cout, kernel: (k, k), stride: s, padding: p, activation: Activation::None }
    }

    #[test]
    fn output_size_arithmetic() {
        let c = spec(LayerKind::Conv, 1, 1, 8, 2, Padding::Same);
        assert_eq!(c.output_dims(256, 256).unwrap(), (1, 128, 128));
        let c = spec(LayerKind::Conv, 1, 1, 8, 2, Padding::None);
        assert_eq!(c.output_dims(256, 256).unwrap(), (1, 125, 125));
        assert!(c.output_dims(7, 7).is_err());
        let t = spec(LayerKind::ConvTranspose, 1, 1, 4, 2, Padding::Same);
        assert_eq!(t.output_dims(16, 16).unwrap(), (1, 32, 32));
        let t = spec(LayerKind::ConvTranspose, 1, 1, 4, 2, Padding::None);
        assert_eq!(t.output_dims(16, 16).unwrap(), (1, 34, 34));
        let t = spec(LayerKind::ConvTranspose, 1, 1, 1, 2, Padding::Same);
        assert_eq!(t.output_dims(5, 3).unwrap(), (1, 10, 6));
    }

    #[test]
    fn identity_kernels() {
        let x = Tensor::<f64>::from_fn([2, 1, 4, 5], |[n, _, y, x]| (n * 20 + y * 5 + x) as f64 * 0.1);
        let c = spec(LayerKind::Conv, 1, 1, 1, 1, Padding::None);
        assert_eq!(conv2d_forward(&x, &[1.0], &[0.0], &c).unwrap(), x);
        let t = spec(LayerKind::ConvTranspose, 1, 1, 1, 1, Padding::Same);
        assert_eq!(conv_transpose2d_forward(&x, &[1.0], &[0.0], &t).unwrap(), x);
    }

    #[test]
    fn ones_kernel_sums_neighbourhood() {
        let x = Tensor::<f64>::from_fn([1, 1, 6, 6], |_| 0.7);
        let c = spec(LayerKind::Conv, 1, 1, 3, 1, Padding::Same);
        let y = conv2d_forward(&x, &[1.0; 9], &[0.0], &c).unwrap();
        assert!((y.at([0, 0, 2, 3]) - 6.3).abs() < 1e-12);
        // zero padding at the corner leaves four taps
        assert!((y.at([0, 0, 0, 0]) - 2.8).abs() < 1e-12);
    }

    #[test]
    fn stride_two_transpose_tiles_input() {
        let x = Tensor::<f64>::new([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let t = spec(LayerKind::ConvTranspose, 1, 1, 2, 2, Padding::None);
        let y = conv_transpose2d_forward(&x, &[1.0; 4], &[0.0], &t).unwrap();
        let want = [1., 1., 2., 2., 1., 1., 2., 2., 3., 3., 4., 4., 3., 3., 4., 4.];
        assert_eq!(y.data(), &want);
    }

    #[test]
    fn tanh_bounds_output() {
        let x = Tensor::<f64>::from_fn([1, 2, 5, 5], |[_, c, y, x]| (c * 25 + y * 5 + x) as f64 - 20.0);
        let mut c = spec(LayerKind::Conv, 2, 3, 3, 2, Padding::Same);
        c.activation = Activation::Tanh;
        let w: Vec<f64> = (0..c.weight_len()).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let y = conv2d_forward(&x, &w, &[0.5, -0.5, 10.0], &c).unwrap();
        assert!(y.data().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn bias_gradient_is_channel_sum() {
        let x = Tensor::<f64>::from_fn([2, 1, 5, 5], |[n, _, y, x]| ((n + y * x) as f64).cos());
        let c = spec(LayerKind::Conv, 1, 2, 3, 1, Padding::Same);
        let w = vec![0.1; c.weight_len()];
        let g = Tensor::<f64>::from_fn([2, 2, 5, 5], |[n, o, y, x]| (n + 2 * o) as f64 + 0.01 * (y + x) as f64);
        let (_, _, gb) = conv2d_backward(&x, &w, &[0.0, 0.0], &g, &c).unwrap();
        for o in 0..2 {
            let mut s = 0.0;
            for n in 0..2 {
                for y in 0..5 {
                    for xx in 0..5 {
                        s += g.at([n, o, y, xx]);
                    }
                }
            }
            assert!((gb[o] - s).abs() < 1e-12);
        }
        let zero = Tensor::<f64>::zeros([2, 2, 5, 5]);
        let (gx, gw, gb) = conv2d_backward(&x, &w, &[0.0, 0.0], &zero, &c).unwrap();
        assert!(gx.data().iter().chain(&gw).chain(&gb).all(|&v| v == 0.0));
    }

    #[test]
    fn channel_mismatch_names_layer() {
        let x = Tensor::<f64>::zeros([1, 3, 8, 8]);
        let c = spec(LayerKind::Conv, 1, 2, 3, 1, Padding::Same);
        let err = conv2d_forward(&x, &vec![0.0; c.weight_len()], &[0.0; 2], &c).unwrap_err().to_string();
        assert!(err.contains("conv 1->2"), "{err}");
        assert!(err.contains("[1, 3, 8, 8]"), "{err}");
    }
}
