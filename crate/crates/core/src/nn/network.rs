use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::activation::Activation;
use crate::nn::layer::{linear_backward, linear_forward, LayerKind, LayerSpec, Padding};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Ordered layer stack of a fully convolutional autoencoder.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    pub input_channels: usize,
    /// Box window of the DSSIM training objective.
    pub dssim_window: usize,
}

const ENCODER: [(usize, usize); 4] = [(32, 8), (64, 5), (128, 3), (256, 2)];
const DECODER: [(usize, usize, usize); 5] = [(128, 4, 2), (64, 2, 2), (64, 2, 2), (16, 1, 2), (8, 2, 1)];

/// Encoder of four stride-2 convolutions and a decoder of six transposed
/// convolutions, the last two with stride 1; tanh everywhere except the
/// sigmoid output. Every layer uses `same` padding so that a `4k x 4k`
/// input is reproduced at its own size.
pub fn build_autoencoder(channels: usize) -> NetworkSpec {
    let mut layers = Vec::with_capacity(10);
    let mut in_ch = channels;
    for (out_ch, k) in ENCODER {
        layers.push(LayerSpec {
            kind: LayerKind::Conv,
            in_ch,
            out_ch,
            kernel: (k, k),
            stride: 2,
            padding: Padding::Same,
            activation: Activation::Tanh,
        });
        in_ch = out_ch;
    }
    for (out_ch, k, stride) in DECODER {
        layers.push(LayerSpec {
            kind: LayerKind::ConvTranspose,
            in_ch,
            out_ch,
            kernel: (k, k),
            stride,
            padding: Padding::Same,
            activation: Activation::Tanh,
        });
        in_ch = out_ch;
    }
    layers.push(LayerSpec {
        kind: LayerKind::ConvTranspose,
        in_ch,
        out_ch: channels,
        kernel: (3, 3),
        stride: 1,
        padding: Padding::Same,
        activation: Activation::Sigmoid,
    });
    NetworkSpec { layers, input_channels: channels, dssim_window: 23 }
}

/// Grayscale text-extraction network.
pub fn build_text_net() -> NetworkSpec {
    build_autoencoder(1)
}

/// Colour network used for both foreground and background restoration.
pub fn build_color_net(channels: usize) -> NetworkSpec {
    build_autoencoder(channels)
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let first = self.layers.first().ok_or_else(|| Error::InvalidArgument("network has no layers".into()))?;
        if first.in_ch != self.input_channels {
            return Err(Error::InvalidArgument(format!(
                "first layer takes {} channels but network input has {}",
                first.in_ch, self.input_channels
            )));
        }
        for (i, l) in self.layers.iter().enumerate() {
            l.validate()?;
            if let Some(next) = self.layers.get(i + 1) {
                if next.in_ch != l.out_ch {
                    return Err(Error::InvalidArgument(format!(
                        "layer {i} emits {} channels but layer {} expects {}",
                        l.out_ch,
                        i + 1,
                        next.in_ch
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn output_channels(&self) -> usize {
        self.layers.last().map(|l| l.out_ch).unwrap_or(self.input_channels)
    }

    /// `(channels, height, width)` after every layer, starting with the input.
    pub fn shape_trace(&self, h: usize, w: usize) -> Result<Vec<(usize, usize, usize)>> {
        let mut shapes = vec![(self.input_channels, h, w)];
        for l in &self.layers {
            let (_, h, w) = *shapes.last().expect("nonempty");
            shapes.push(l.output_dims(h, w)?);
        }
        Ok(shapes)
    }

    /// Stable textual description used to fingerprint weight files.
    pub fn canonical(&self) -> String {
        let mut s = format!("in={};dssim={}", self.input_channels, self.dssim_window);
        for l in &self.layers {
            s.push(';');
            s.push_str(&l.describe());
        }
        s
    }

    /// FNV-1a over [`NetworkSpec::canonical`].
    pub fn fingerprint(&self) -> u64 {
        self.canonical().bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight_len() + l.out_ch).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> LayerParams<T> {
    pub fn zeros_for(spec: &LayerSpec) -> Self {
        Self { weights: vec![T::zero(); spec.weight_len()], bias: vec![T::zero(); spec.out_ch] }
    }
}

/// Per-layer parameter gradients, same layout as the parameters.
pub type Gradients<T> = Vec<LayerParams<T>>;

/// Network architecture plus its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    pub spec: NetworkSpec,
    pub params: Vec<LayerParams<T>>,
}

impl<T: Scalar> Network<T> {
    /// Glorot-uniform weights, zero biases, drawn from a seeded stream.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = spec
            .layers
            .iter()
            .map(|l| {
                let limit = (6.0 / (l.fan_in() + l.fan_out()) as f64).sqrt();
                let weights = (0..l.weight_len())
                    .map(|_| T::from_f64_lossy(rng.random_range(-limit..limit)))
                    .collect();
                LayerParams { weights, bias: vec![T::zero(); l.out_ch] }
            })
            .collect();
        Ok(Self { spec, params })
    }

    pub fn from_params(spec: NetworkSpec, params: Vec<LayerParams<T>>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.layers.len() {
            return Err(Error::InvalidArgument(format!(
                "{} parameter blocks for {} layers",
                params.len(),
                spec.layers.len()
            )));
        }
        for (l, p) in spec.layers.iter().zip(&params) {
            if p.weights.len() != l.weight_len() || p.bias.len() != l.out_ch {
                return Err(Error::ShapeMismatch {
                    layer: l.describe(),
                    expected: format!("{} weights, {} biases", l.weight_len(), l.out_ch),
                    actual: format!("{} weights, {} biases", p.weights.len(), p.bias.len()),
                });
            }
        }
        Ok(Self { spec, params })
    }

    /// Convert parameters to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::from_f64_lossy(x.to_f64_lossy())).collect();
        Network {
            spec: self.spec.clone(),
            params: self
                .params
                .iter()
                .map(|p| LayerParams { weights: conv(&p.weights), bias: conv(&p.bias) })
                .collect(),
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels() != self.spec.input_channels {
            return Err(Error::ShapeMismatch {
                layer: "network input".into(),
                expected: format!("{} channels", self.spec.input_channels),
                actual: format!("{:?}", x.shape()),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut a = x.clone();
        for (l, p) in self.spec.layers.iter().zip(&self.params) {
            a = linear_forward(l, &a, &p.weights, &p.bias)?;
            l.activation.apply_in_place(a.data_mut());
        }
        Ok(a)
    }

    /// Forward pass keeping every activation; element 0 is the input.
    pub fn forward_trace(&self, x: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        self.check_input(x)?;
        let mut acts = Vec::with_capacity(self.spec.layers.len() + 1);
        acts.push(x.clone());
        for (l, p) in self.spec.layers.iter().zip(&self.params) {
            let mut a = linear_forward(l, acts.last().expect("nonempty"), &p.weights, &p.bias)?;
            l.activation.apply_in_place(a.data_mut());
            acts.push(a);
        }
        Ok(acts)
    }

    /// Backpropagate `grad_output` (gradient w.r.t. the network output)
    /// through a recorded forward pass. Returns parameter gradients and the
    /// gradient with respect to the input.
    pub fn backward(&self, acts: &[Tensor<T>], grad_output: &Tensor<T>) -> Result<(Gradients<T>, Tensor<T>)> {
        let layers = &self.spec.layers;
        if acts.len() != layers.len() + 1 {
            return Err(Error::InvalidArgument("activation trace does not match network depth".into()));
        }
        let mut grads: Vec<LayerParams<T>> = Vec::with_capacity(layers.len());
        let mut g = grad_output.clone();
        for i in (0..layers.len()).rev() {
            let l = &layers[i];
            l.activation.backprop_in_place(acts[i + 1].data(), g.data_mut());
            let (gx, gw, gb) = linear_backward(l, &acts[i], &self.params[i].weights, &g, true)?;
            grads.push(LayerParams { weights: gw, bias: gb });
            g = gx.expect("input gradient requested");
        }
        grads.reverse();
        Ok((grads, g))
    }
}
