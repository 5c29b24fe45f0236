//! JSON description of a generated corpus.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{BinaryMask, ColorImage};
use crate::pipeline::groundtruth::{RestorationBundle, BUNDLE_FILES};
use crate::pipeline::synth::{SynthParams, SynthSample};
use crate::pnm::{read_color, read_mask, write_mask, write_ppm};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSettings {
    pub size: usize,
    pub gamma: f64,
    pub bleed_strength: (f64, f64),
    pub grain_sigma: f64,
    pub max_blots: usize,
    pub fold_probability: f64,
}

impl From<&SynthParams> for GeneratorSettings {
    fn from(p: &SynthParams) -> Self {
        Self {
            size: p.size,
            gamma: p.gamma.value(),
            bleed_strength: p.bleed_strength,
            grain_sigma: p.grain_sigma,
            max_blots: p.max_blots,
            fold_probability: p.fold_probability,
        }
    }
}

/// One document; paths are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub seed: u64,
    pub degraded: String,
    pub gt_text: String,
    pub gt_fg: String,
    pub gt_bg: String,
    pub gt_restored: String,
    pub bleed_mask: String,
    pub paper: [f64; 3],
    pub ink: [f64; 3],
    pub bleed_colour: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub generator: GeneratorSettings,
    pub entries: Vec<ManifestEntry>,
}

/// A manifest entry with its rasters loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedDocument {
    pub entry: ManifestEntry,
    pub degraded: ColorImage,
    pub truth: RestorationBundle,
    pub bleed_mask: BinaryMask,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m: Manifest = serde_json::from_slice(&std::fs::read(path)?)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Parse(format!("unsupported manifest version {}", m.version)));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Load every document's rasters; `base` is the manifest's directory.
    pub fn load_documents(&self, base: impl AsRef<Path>) -> Result<Vec<LoadedDocument>> {
        let base = base.as_ref();
        self.entries
            .iter()
            .map(|e| {
                let p = |rel: &str| -> PathBuf { base.join(rel) };
                Ok(LoadedDocument {
                    entry: e.clone(),
                    degraded: read_color(p(&e.degraded))?,
                    truth: RestorationBundle {
                        binarized_text: read_mask(p(&e.gt_text))?,
                        restored_foreground: read_color(p(&e.gt_fg))?,
                        restored_background: read_color(p(&e.gt_bg))?,
                        restored_document: read_color(p(&e.gt_restored))?,
                    },
                    bleed_mask: read_mask(p(&e.bleed_mask))?,
                })
            })
            .collect()
    }
}

/// Write each sample under `dir/doc_NNN/` and the manifest at `dir/manifest.json`.
pub fn write_corpus(samples: &[SynthSample], corpus_seed: u64, params: &SynthParams, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let id = format!("doc_{i:03}");
        let rel = |name: &str| format!("{id}/{name}");
        s.truth.write(dir.join(&id).join("gt"))?;
        write_ppm(&s.degraded, dir.join(rel("degraded.ppm")))?;
        write_mask(&s.bleed_mask, dir.join(rel("bleed.pgm")))?;
        let gt = |k: usize| rel(&format!("gt/{}", BUNDLE_FILES[k]));
        entries.push(ManifestEntry {
            seed: s.seed,
            degraded: rel("degraded.ppm"),
            gt_text: gt(0),
            gt_fg: gt(1),
            gt_bg: gt(2),
            gt_restored: gt(3),
            bleed_mask: rel("bleed.pgm"),
            paper: s.paper,
            ink: s.ink,
            bleed_colour: s.bleed_colour,
            id,
        });
    }
    let manifest = Manifest { version: MANIFEST_VERSION, seed: corpus_seed, generator: params.into(), entries };
    manifest.save(dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
