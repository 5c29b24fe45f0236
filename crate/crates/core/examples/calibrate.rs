//! Desk-scale calibration run: ground-truth threshold sweep, text network
//! training curve and held-out binarization scores.
//!
//! cargo run --release -p docrestore --example calibrate [epochs] [lr] [batch] [nosweep]

use std::time::Instant;

use docrestore::metrics::f_measure;
use docrestore::nn::{build_text_net, DEFAULT_LEARNING_RATE, train_with_progress, Network, TrainConfig, TrainingSet};
use docrestore::pipeline::{
    binarize, build_training_set, extract_text, synth_corpus, BinarizeParams, DatasetParams, GtParams, SynthParams,
    Task, ThresholdMethod,
};

fn main() -> docrestore::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map_or(40, |s| s.parse().expect("epochs"));
    let lr: f64 = args.get(2).map_or(DEFAULT_LEARNING_RATE, |s| s.parse().expect("lr"));
    let batch: usize = args.get(3).map_or(8, |s| s.parse().expect("batch"));
    let sweep = args.get(4).is_none_or(|s| s != "nosweep");
    let samples = synth_corpus(20, 2024, &SynthParams::default())?;

    println!("## ground-truth threshold sweep (mean FM vs construction mask, 20 docs)");
    for bias in [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.5].into_iter().filter(|_| sweep) {
        let params = GtParams { threshold: ThresholdMethod::Adaptive { window: 31, bias }, ..GtParams::default() };
        let mut total = 0.0;
        for s in &samples {
            total += f_measure(&extract_text(&s.degraded, &params)?, &s.truth.binarized_text)?;
        }
        println!("bias {bias:.1}: FM {:.3}", total / samples.len() as f64);
    }

    let (train_docs, held_out) = samples.split_at(16);
    let docs: Vec<_> = train_docs.iter().map(|s| (s.degraded.clone(), s.truth.clone())).collect();
    let dp = DatasetParams { patch_size: 64, stride: 16, ..DatasetParams::default() };
    let set: TrainingSet<f32> = build_training_set(Task::Text, &docs, &dp)?;
    let cfg = TrainConfig { epochs, learning_rate: lr, batch_size: batch, patch_size: 64, patch_stride: 16, seed: 7, ..TrainConfig::default() };
    let mut net = Network::<f32>::init(build_text_net(), 7)?;
    let bp = BinarizeParams { patch_size: 64, stride: 16, ..BinarizeParams::default() };

    println!("\n## text network, {} patches, lr {lr}, batch {}", set.len(), cfg.batch_size);
    let start = Instant::now();
    let curve = train_with_progress(&mut net, &set, &cfg, |e, loss| {
        println!("epoch {e:3}  dssim {loss:.5}  t {:.0}s", start.elapsed().as_secs_f64());
    })?;
    println!("relative drop {:.3}", curve.relative_drop());

    println!("\n## held-out binarization");
    let mut total = 0.0;
    for s in held_out {
        let fm = f_measure(&binarize(&s.degraded, &net, &bp)?, &s.truth.binarized_text)?;
        println!("doc {}: FM {fm:.2}", s.seed);
        total += fm;
    }
    println!("mean FM {:.2}", total / held_out.len() as f64);
    Ok(())
}
