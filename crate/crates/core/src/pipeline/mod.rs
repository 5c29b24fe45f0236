//! Patch handling, ground-truth generation, the two restoration methods,
//! augmentation and the synthetic corpus.

pub mod augment;
pub mod dataset;
pub mod groundtruth;
pub mod manifest;
pub mod methods;
pub mod patches;
pub mod synth;

pub use augment::augment_flips;
pub use dataset::{build_training_set, document_patches, DatasetParams, Task};
pub use groundtruth::{
    blurred_text, extract_text, generate_groundtruth, overlay, reconstruct_background, restore_foreground_colour,
    BackgroundParams, GammaParam, GrayConversion, GtParams, Preprocess, RestorationBundle, ThresholdMethod, BUNDLE_FILES,
};
pub use manifest::{write_corpus, LoadedDocument, Manifest, ManifestEntry};
pub use methods::{
    binarize, ink_presence, merge_layers, method1_restore, method2_restore, run_patched, BinarizeParams, Method1Params,
    Method2Params,
};
pub use patches::{patchify, stitch, PatchGrid};
pub use synth::{residual_bleed_fm, synth_corpus, synth_document, SynthParams, SynthSample};
