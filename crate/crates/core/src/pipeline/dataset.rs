use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Result};
use crate::image::{ColorImage, Raster};
use crate::nn::{Tensor, TrainingSet};
use crate::pipeline::augment::augment_flips;
use crate::pipeline::groundtruth::{blurred_text, Preprocess, RestorationBundle};
use crate::pipeline::patches::{patchify, to_tensor};
use crate::scalar::Scalar;

/// Which network a training set is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    /// Gray page to gray text image.
    Text,
    /// Colour page to darkened ink on white.
    Foreground,
    /// Colour page to text-free background.
    Background,
}

impl Task {
    pub fn channels(self) -> usize {
        match self {
            Task::Text => 1,
            Task::Foreground | Task::Background => 3,
        }
    }

    /// Flip augmentation is applied to background training by default.
    pub fn augments_by_default(self) -> bool {
        self == Task::Background
    }
}

impl FromStr for Task {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Task::Text),
            "fg" | "foreground" => Ok(Task::Foreground),
            "bg" | "background" => Ok(Task::Background),
            _ => Err(invalid(format!("unknown task {s:?}, expected text, fg or bg"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Text => "text",
            Task::Foreground => "fg",
            Task::Background => "bg",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetParams {
    pub preprocess: Preprocess,
    pub text_blur_sigma: f64,
    pub patch_size: usize,
    pub stride: usize,
    /// `None` uses the task default.
    pub augment: Option<bool>,
}

impl Default for DatasetParams {
    fn default() -> Self {
        Self { preprocess: Preprocess::default(), text_blur_sigma: 0.5, patch_size: 256, stride: 50, augment: None }
    }
}

fn patch_pairs<R: Raster + Clone>(input: &R, target: &R, p: &DatasetParams, augment: bool) -> Result<Vec<(R, R)>> {
    let (_, xs) = patchify(input, p.patch_size, p.stride)?;
    let (_, ys) = patchify(target, p.patch_size, p.stride)?;
    let pairs: Vec<(R, R)> = xs.into_iter().zip(ys).collect();
    if augment {
        augment_flips(&pairs)
    } else {
        Ok(pairs)
    }
}

fn stack<T: Scalar, R: Raster>(pairs: Vec<(R, R)>) -> Result<(Tensor<T>, Tensor<T>)> {
    let (xs, ys): (Vec<R>, Vec<R>) = pairs.into_iter().unzip();
    Ok((to_tensor(&xs)?, to_tensor(&ys)?))
}

/// Input and target patches of one document for `task`.
pub fn document_patches<T: Scalar>(
    task: Task,
    degraded: &ColorImage,
    truth: &RestorationBundle,
    params: &DatasetParams,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let augment = params.augment.unwrap_or(task.augments_by_default());
    match task {
        Task::Text => {
            let input = params.preprocess.apply(degraded)?;
            let target = blurred_text(&truth.binarized_text, params.text_blur_sigma)?;
            stack(patch_pairs(&input, &target, params, augment)?)
        }
        Task::Foreground => stack(patch_pairs(degraded, &truth.restored_foreground, params, augment)?),
        Task::Background => stack(patch_pairs(degraded, &truth.restored_background, params, augment)?),
    }
}

/// Patches of all documents, concatenated in document order.
pub fn build_training_set<T: Scalar>(
    task: Task,
    docs: &[(ColorImage, RestorationBundle)],
    params: &DatasetParams,
) -> Result<TrainingSet<T>> {
    if docs.is_empty() {
        return Err(invalid("no documents to train on"));
    }
    let mut xs = Vec::with_capacity(docs.len());
    let mut ys = Vec::with_capacity(docs.len());
    for (img, truth) in docs {
        let (x, y) = document_patches(task, img, truth, params)?;
        xs.push(x);
        ys.push(y);
    }
    TrainingSet::new(Tensor::concat(&xs)?, Tensor::concat(&ys)?)
}
