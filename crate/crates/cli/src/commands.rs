//! The work behind each subcommand, independent of argument parsing.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};

use docrestore::metrics::{evaluate, report, MetricsReport};
use docrestore::nn::{build_color_net, build_text_net, load_weights, save_weights, train_with_progress, LossCurve, Network, NetworkSpec, TrainingSet};
use docrestore::pipeline::{
    binarize as binarize_image, build_training_set, generate_groundtruth, method1_restore, method2_restore, synth_corpus,
    write_corpus, Manifest, RestorationBundle, Task,
};
use docrestore::pnm::{read_color, read_mask, write_mask};
use docrestore::{BinaryMask, ColorImage};

use crate::config::Settings;

/// Network architecture for a task.
pub fn task_spec(task: Task) -> NetworkSpec {
    match task {
        Task::Text => build_text_net(),
        Task::Foreground | Task::Background => build_color_net(task.channels()),
    }
}

fn load_net(task: Task, path: &Path) -> Result<Network<f32>> {
    load_weights(&task_spec(task), path).with_context(|| format!("loading {task} weights from {}", path.display()))
}

fn read_image(path: &Path) -> Result<ColorImage> {
    read_color(path).with_context(|| format!("reading {}", path.display()))
}

pub fn synth(n: usize, seed: u64, out: &Path, settings: &Settings) -> Result<Manifest> {
    let params = settings.synth_params()?;
    let samples = synth_corpus(n, seed, &params)?;
    write_corpus(&samples, seed, &params, out).with_context(|| format!("writing corpus to {}", out.display()))
}

/// The ground-truth bundle for one image; shared by `gen-gt` and the service.
pub fn groundtruth_bundle(img: &ColorImage, settings: &Settings) -> Result<RestorationBundle> {
    Ok(generate_groundtruth(img, &settings.gt_params()?)?)
}

pub fn write_bundle(bundle: &RestorationBundle, out: &Path) -> Result<()> {
    bundle.write(out).with_context(|| format!("writing bundle to {}", out.display()))
}

pub fn gen_gt(input: &Path, out: &Path, settings: &Settings) -> Result<RestorationBundle> {
    let bundle = groundtruth_bundle(&read_image(input)?, settings)?;
    write_bundle(&bundle, out)?;
    Ok(bundle)
}

pub fn train(
    task: Task,
    manifest_path: &Path,
    out_weights: &Path,
    loss_csv: Option<&Path>,
    settings: &Settings,
    progress: impl FnMut(usize, f64),
) -> Result<LossCurve> {
    let manifest = Manifest::load(manifest_path).with_context(|| format!("reading {}", manifest_path.display()))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let holdout = settings.holdout()?;
    ensure!(
        holdout < manifest.entries.len(),
        "train.holdout {holdout} leaves no training documents out of {}",
        manifest.entries.len()
    );
    let docs = Manifest { entries: manifest.entries[..manifest.entries.len() - holdout].to_vec(), ..manifest }
        .load_documents(base)?;
    let pairs: Vec<_> = docs.into_iter().map(|d| (d.degraded, d.truth)).collect();
    let data: TrainingSet<f32> = build_training_set(task, &pairs, &settings.dataset_params()?)?;
    let cfg = settings.train_config()?;
    let mut net = Network::<f32>::init(task_spec(task), cfg.seed)?;
    let curve = train_with_progress(&mut net, &data, &cfg, progress)?;
    save_weights(&net, out_weights).with_context(|| format!("writing {}", out_weights.display()))?;
    if let Some(p) = loss_csv {
        curve.save_csv(p).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(curve)
}

pub fn restore(method: u8, input: &Path, weights: &[PathBuf], out: &Path, settings: &Settings) -> Result<RestorationBundle> {
    let img = read_image(input)?;
    let bundle = match (method, weights) {
        (1, [text]) => method1_restore(&img, &load_net(Task::Text, text)?, &settings.method1_params()?)?,
        (2, [fg, bg]) => {
            let (fg, bg) = (load_net(Task::Foreground, fg)?, load_net(Task::Background, bg)?);
            method2_restore(&img, &fg, &bg, &settings.method2_params()?)?
        }
        (1, _) => bail!("method 1 takes one weights file (text network), got {}", weights.len()),
        (2, _) => bail!("method 2 takes two weights files (foreground then background), got {}", weights.len()),
        _ => bail!("unknown method {method}, expected 1 or 2"),
    };
    write_bundle(&bundle, out)?;
    Ok(bundle)
}

pub fn binarize(input: &Path, weights: &Path, out: &Path, settings: &Settings) -> Result<BinaryMask> {
    let mask = binarize_image(&read_image(input)?, &load_net(Task::Text, weights)?, &settings.binarize_params()?)?;
    write_mask(&mask, out).with_context(|| format!("writing {}", out.display()))?;
    Ok(mask)
}

fn pgm_names(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "pgm") {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

/// Score every `.pgm` mask in `pred_dir` against the same name in `gt_dir`.
/// The report covers the images that could be scored; any failure is
/// returned as an error after it is written.
pub fn eval(pred_dir: &Path, gt_dir: &Path, out: &Path) -> Result<MetricsReport> {
    let names = pgm_names(pred_dir)?;
    ensure!(!names.is_empty(), "no .pgm masks in {}", pred_dir.display());
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for name in &names {
        let scored = (|| -> Result<_> {
            let pred = read_mask(pred_dir.join(name))?;
            let gt = read_mask(gt_dir.join(name)).with_context(|| format!("no ground truth for {name}"))?;
            Ok(evaluate(name.trim_end_matches(".pgm"), &pred, &gt)?)
        })();
        match scored {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(format!("{name}: {e:#}")),
        }
    }
    ensure!(!rows.is_empty(), "no image could be evaluated: {}", failures.join("; "));
    let rep = report(rows)?;
    rep.save_csv(out).with_context(|| format!("writing {}", out.display()))?;
    if !failures.is_empty() {
        bail!("{} image(s) failed to evaluate: {}", failures.len(), failures.join("; "));
    }
    Ok(rep)
}
