use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::nn::network::{Gradients, LayerParams, Network};
use crate::nn::optim::{Adam, AdamConfig};
use crate::nn::ssim::{dssim_with_grad, ssim_per_sample, SsimConfig};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Training learning rate; larger steps settle into a position-only prior on
/// sparse text targets.
pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub patch_size: usize,
    pub patch_stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            batch_size: 8,
            epochs: 20,
            seed: 0,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            patch_size: 256,
            patch_stride: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning rate must be finite and non-negative"));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(invalid("batch size and epoch count must be positive"));
        }
        if self.patch_size == 0 || self.patch_stride == 0 || self.patch_stride > self.patch_size {
            return Err(invalid(format!(
                "patch stride {} must be in 1..={}",
                self.patch_stride, self.patch_size
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(invalid("adam hyper-parameters out of range"));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, beta1: self.beta1, beta2: self.beta2, epsilon: self.epsilon }
    }
}

/// Paired input and target patches, stacked along the batch axis.
#[derive(Clone, Debug)]
pub struct TrainingSet<T> {
    pub inputs: Tensor<T>,
    pub targets: Tensor<T>,
}

impl<T: Scalar> TrainingSet<T> {
    pub fn new(inputs: Tensor<T>, targets: Tensor<T>) -> Result<Self> {
        if inputs.batch() == 0 {
            return Err(invalid("training set is empty"));
        }
        if inputs.shape() != targets.shape() {
            return Err(Error::DimensionMismatch(format!(
                "inputs {:?} vs targets {:?}",
                inputs.shape(),
                targets.shape()
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.batch()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-epoch mean DSSIM. Entry 0 is measured before any update.
#[derive(Clone, Debug, PartialEq)]
pub struct LossCurve {
    pub losses: Vec<f64>,
}

impl LossCurve {
    pub fn first(&self) -> f64 {
        self.losses[0]
    }

    pub fn last(&self) -> f64 {
        *self.losses.last().expect("curve has an initial entry")
    }

    /// Fractional decrease from the first to the last entry.
    pub fn relative_drop(&self) -> f64 {
        (self.first() - self.last()) / self.first()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["epoch", "mean_dssim"])?;
        for (e, l) in self.losses.iter().enumerate() {
            out.write_record([e.to_string(), format!("{l:.9}")])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut losses = Vec::new();
        for (i, rec) in csv::Reader::from_reader(r).records().enumerate() {
            let rec = rec?;
            let epoch: usize = rec.get(0).unwrap_or("").parse().map_err(|e| Error::Parse(format!("row {}: epoch: {e}", i + 1)))?;
            if epoch != i {
                return Err(Error::Parse(format!("row {}: expected epoch {i}, found {epoch}", i + 1)));
            }
            losses.push(rec.get(1).unwrap_or("").parse().map_err(|e| Error::Parse(format!("row {}: loss: {e}", i + 1)))?);
        }
        if losses.is_empty() {
            return Err(Error::Parse("loss curve has no rows".into()));
        }
        Ok(Self { losses })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn check_compatible<T: Scalar>(net: &Network<T>, data: &TrainingSet<T>, ssim: &SsimConfig) -> Result<()> {
    let [_, c, h, w] = data.inputs.shape();
    if c != net.spec.input_channels || net.spec.output_channels() != c {
        return Err(Error::ShapeMismatch {
            layer: "network input".into(),
            expected: format!("{} channels", net.spec.input_channels),
            actual: format!("{c} channels"),
        });
    }
    let trace = net.spec.shape_trace(h, w)?;
    if trace.last() != Some(&(c, h, w)) {
        return Err(invalid(format!("network maps {h}x{w} patches to {:?}", trace.last())));
    }
    ssim.validate()?;
    if ssim.window > h || ssim.window > w {
        return Err(invalid(format!("ssim window {} larger than {h}x{w} patch", ssim.window)));
    }
    Ok(())
}

/// Mean DSSIM of the network's predictions over the whole set.
pub fn evaluate<T: Scalar>(net: &Network<T>, data: &TrainingSet<T>) -> Result<f64> {
    let ssim = SsimConfig::with_window(net.spec.dssim_window);
    let mut total = 0.0;
    for i in 0..data.len() {
        let x = data.inputs.select(&[i]);
        let y = data.targets.select(&[i]);
        let out = net.forward(&x)?;
        total += (1.0 - ssim_per_sample(&out, &y, &ssim)?[0]) / 2.0;
    }
    Ok(total / data.len() as f64)
}

fn accumulate<T: Scalar>(acc: &mut Gradients<T>, g: Gradients<T>) {
    for (a, b) in acc.iter_mut().zip(g) {
        a.weights.iter_mut().zip(b.weights).for_each(|(x, y)| *x = *x + y);
        a.bias.iter_mut().zip(b.bias).for_each(|(x, y)| *x = *x + y);
    }
}

/// Mini-batch Adam on mean DSSIM. Samples are visited in a seeded shuffled
/// order; within a batch, per-sample gradients are summed in batch order.
pub fn train<T: Scalar>(net: &mut Network<T>, data: &TrainingSet<T>, cfg: &TrainConfig) -> Result<LossCurve> {
    train_with_progress(net, data, cfg, |_, _| {})
}

/// [`train`] with a callback receiving `(epoch, mean_loss)` after each epoch.
pub fn train_with_progress<T: Scalar>(
    net: &mut Network<T>,
    data: &TrainingSet<T>,
    cfg: &TrainConfig,
    mut progress: impl FnMut(usize, f64),
) -> Result<LossCurve> {
    cfg.validate()?;
    let ssim = SsimConfig::with_window(net.spec.dssim_window);
    check_compatible(net, data, &ssim)?;
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Adam::new(cfg.adam(), &net.params);
    let mut losses = vec![evaluate(net, data)?];
    progress(0, losses[0]);
    let mut order: Vec<usize> = (0..n).collect();
    let mut sample_loss = vec![0.0; n];
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for (batch_index, batch) in order.chunks(cfg.batch_size).enumerate() {
            let upstream = 1.0 / batch.len() as f64;
            let mut grads: Gradients<T> = net.spec.layers.iter().map(LayerParams::zeros_for).collect();
            for &i in batch {
                let x = data.inputs.select(&[i]);
                let y = data.targets.select(&[i]);
                let acts = net.forward_trace(&x)?;
                let out = acts.last().expect("trace has output");
                let (loss, g_out) = dssim_with_grad(out, &y, &ssim, upstream)?;
                if !loss[0].is_finite() || !g_out.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, batch: batch_index });
                }
                sample_loss[i] = loss[0];
                let (g, _) = net.backward(&acts, &g_out)?;
                accumulate(&mut grads, g);
            }
            opt.step(&mut net.params, &grads);
        }
        let mean = sample_loss.iter().sum::<f64>() / n as f64;
        progress(epoch, mean);
        losses.push(mean);
    }
    Ok(LossCurve { losses })
}
