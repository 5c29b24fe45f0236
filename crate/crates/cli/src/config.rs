//! Layered `key = value` settings: built-in defaults, then a config file,
//! then individual overrides. Every key is known in advance and every value is
//! checked when the typed parameter sets are built.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use docrestore::image::ContrastTransform;
use docrestore::morpho::{CleanupParams, StructuringElement};
use docrestore::nn::TrainConfig;
use docrestore::pipeline::{
    BackgroundParams, BinarizeParams, DatasetParams, GammaParam, GrayConversion, GtParams, Method1Params, Method2Params,
    Preprocess, SynthParams, ThresholdMethod,
};

/// Keys, defaults and one-line descriptions.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("gray", "luma", "gray conversion: luma or max"),
    ("contrast", "gamma:0.8", "identity, gamma:E, log:S or piecewise:x,y;x,y;..."),
    ("threshold", "adaptive", "ground-truth threshold: adaptive or valley"),
    ("threshold.window", "31", "adaptive threshold window (odd)"),
    ("threshold.bias", "1", "adaptive threshold bias in local standard deviations"),
    ("valley.window", "11", "histogram moving-average window"),
    ("fallback.window", "31", "adaptive window used when no histogram valley exists"),
    ("fallback.bias", "0.2", "adaptive bias used when no histogram valley exists"),
    ("morph.close", "square:3", "closing element or none"),
    ("morph.open", "square:3", "opening element or none"),
    ("morph.min_area", "8", "smallest kept component in pixels"),
    ("text.blur_sigma", "0.5", "blur applied to the text mask"),
    ("gamma", "0.7", "foreground darkening factor in (0,1)"),
    ("gmm.k", "4", "mixture components"),
    ("gmm.seed", "0", "mixture initialisation and background sampling seed"),
    ("gmm.max_iter", "200", "EM iteration cap"),
    ("gmm.tol", "0.000001", "EM convergence threshold on mean log-likelihood"),
    ("gmm.sample_cap", "200000", "pixels sampled for the mixture fit"),
    ("background.blur_sigma", "1.5", "smoothing of the synthesized background"),
    ("patch.size", "256", "network patch side"),
    ("patch.stride", "50", "network patch stride"),
    ("toggle", "square:3", "toggle filter element"),
    ("presence", "0.08", "ink presence threshold for the foreground network"),
    ("train.epochs", "20", "training epochs"),
    ("train.batch", "8", "mini-batch size"),
    ("train.lr", "0.0001", "Adam learning rate"),
    ("train.beta1", "0.9", "Adam first-moment decay"),
    ("train.beta2", "0.999", "Adam second-moment decay"),
    ("train.epsilon", "0.00000001", "Adam epsilon"),
    ("train.seed", "0", "weight initialisation and shuffling seed"),
    ("train.augment", "auto", "flip augmentation: auto, on or off"),
    ("train.holdout", "0", "trailing manifest entries excluded from training"),
    ("synth.size", "128", "synthetic page side"),
    ("synth.bleed_min", "0.3", "weakest back-impression ink fraction"),
    ("synth.bleed_max", "0.45", "strongest back-impression ink fraction"),
    ("synth.grain", "0.02", "per-channel grain standard deviation"),
    ("synth.max_blots", "2", "largest number of ink blots"),
    ("synth.fold_probability", "0.5", "chance of a fold line"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect() }
    }
}

impl Settings {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => Err(err(format!("unknown setting `{key}`"))),
        }
    }

    /// Apply one `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| err(format!("expected key=value, got `{pair}`")))?;
        self.set(k, v)
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_pair(line).map_err(|e| err(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Defaults, then an optional file, then overrides in order.
    pub fn layered(file: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut s = Self::default();
        if let Some(p) = file {
            s.apply_file(p)?;
        }
        for o in overrides {
            s.set_pair(o)?;
        }
        s.validate()?;
        Ok(s)
    }

    /// Build every parameter set once so bad values surface at load time.
    pub fn validate(&self) -> Result<()> {
        self.gt_params()?;
        self.binarize_params()?;
        self.method2_params()?;
        self.train_config()?;
        self.dataset_params()?;
        self.synth_params()?;
        self.holdout()?;
        Ok(())
    }

    /// Settings as `key = value` text, in key order.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    fn raw(&self, key: &str) -> &str {
        self.get(key).expect("known key")
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key);
        v.parse().map_err(|_| err(format!("{key}: cannot parse `{v}`")))
    }

    fn positive(&self, key: &str) -> Result<usize> {
        match self.parse::<usize>(key)? {
            0 => Err(err(format!("{key} must be positive"))),
            n => Ok(n),
        }
    }

    fn non_negative(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parse(key)?;
        if v >= 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(err(format!("{key} must be finite and non-negative, got {v}")))
        }
    }

    fn element(&self, key: &str) -> Result<Option<StructuringElement>> {
        match self.raw(key) {
            "none" => Ok(None),
            v => v.parse().map(Some).map_err(|e| err(format!("{key}: {e}"))),
        }
    }

    fn contrast(&self) -> Result<ContrastTransform> {
        let v = self.raw("contrast");
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(format!("contrast: cannot parse `{v}`")));
        let t = match v.split_once(':') {
            None if v == "identity" => ContrastTransform::Identity,
            Some(("gamma", e)) => ContrastTransform::Gamma(num(e)?),
            Some(("log", s)) => ContrastTransform::Log(num(s)?),
            Some(("piecewise", pts)) => ContrastTransform::Piecewise(
                pts.split(';')
                    .map(|p| {
                        let (x, y) = p.split_once(',').ok_or_else(|| err(format!("contrast: bad point `{p}`")))?;
                        Ok((num(x)?, num(y)?))
                    })
                    .collect::<Result<_>>()?,
            ),
            _ => return Err(err(format!("contrast: unknown transform `{v}`"))),
        };
        t.validate().map_err(|e| err(format!("contrast: {e}")))?;
        Ok(t)
    }

    pub fn preprocess(&self) -> Result<Preprocess> {
        let gray = match self.raw("gray") {
            "luma" => GrayConversion::Luma,
            "max" => GrayConversion::Max,
            v => return Err(err(format!("gray: expected luma or max, got `{v}`"))),
        };
        Ok(Preprocess { gray, contrast: self.contrast()? })
    }

    fn odd_window(&self, key: &str) -> Result<usize> {
        let w = self.positive(key)?;
        if w % 2 == 0 {
            return Err(err(format!("{key} must be odd, got {w}")));
        }
        Ok(w)
    }

    fn fallback(&self) -> Result<(usize, f64)> {
        Ok((self.odd_window("fallback.window")?, self.parse("fallback.bias")?))
    }

    pub fn gamma(&self) -> Result<GammaParam> {
        GammaParam::new(self.parse("gamma")?).map_err(|e| err(format!("gamma: {e}")))
    }

    pub fn background_params(&self) -> Result<BackgroundParams> {
        let k = self.positive("gmm.k")?;
        Ok(BackgroundParams {
            k,
            seed: self.parse("gmm.seed")?,
            max_iter: self.positive("gmm.max_iter")?,
            tol: self.non_negative("gmm.tol")?,
            sample_cap: self.positive("gmm.sample_cap")?,
            blur_sigma: self.non_negative("background.blur_sigma")?,
        })
    }

    pub fn gt_params(&self) -> Result<GtParams> {
        let threshold = match self.raw("threshold") {
            "adaptive" => {
                ThresholdMethod::Adaptive { window: self.odd_window("threshold.window")?, bias: self.parse("threshold.bias")? }
            }
            "valley" => ThresholdMethod::Valley { window: self.positive("valley.window")?, fallback: self.fallback()? },
            v => return Err(err(format!("threshold: expected adaptive or valley, got `{v}`"))),
        };
        Ok(GtParams {
            preprocess: self.preprocess()?,
            threshold,
            cleanup: CleanupParams {
                close: self.element("morph.close")?,
                open: self.element("morph.open")?,
                min_area: self.positive("morph.min_area")?,
            },
            text_blur_sigma: self.non_negative("text.blur_sigma")?,
            gamma: self.gamma()?,
            background: self.background_params()?,
        })
    }

    fn patch_geometry(&self) -> Result<(usize, usize)> {
        let (p, s) = (self.positive("patch.size")?, self.positive("patch.stride")?);
        if s > p {
            return Err(err(format!("patch.stride {s} exceeds patch.size {p}")));
        }
        Ok((p, s))
    }

    pub fn binarize_params(&self) -> Result<BinarizeParams> {
        let (patch_size, stride) = self.patch_geometry()?;
        Ok(BinarizeParams {
            preprocess: self.preprocess()?,
            patch_size,
            stride,
            toggle: self.element("toggle")?.ok_or_else(|| err("toggle: an element is required"))?,
            valley_window: self.positive("valley.window")?,
            fallback: self.fallback()?,
        })
    }

    pub fn method1_params(&self) -> Result<Method1Params> {
        Ok(Method1Params { binarize: self.binarize_params()?, gamma: self.gamma()?, background: self.background_params()? })
    }

    pub fn method2_params(&self) -> Result<Method2Params> {
        let (patch_size, stride) = self.patch_geometry()?;
        let presence: f64 = self.parse("presence")?;
        if !(0.0..1.0).contains(&presence) {
            return Err(err(format!("presence must lie in [0, 1), got {presence}")));
        }
        Ok(Method2Params { patch_size, stride, presence })
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let (patch_size, patch_stride) = self.patch_geometry()?;
        let cfg = TrainConfig {
            learning_rate: self.parse("train.lr")?,
            batch_size: self.positive("train.batch")?,
            epochs: self.positive("train.epochs")?,
            seed: self.parse("train.seed")?,
            beta1: self.parse("train.beta1")?,
            beta2: self.parse("train.beta2")?,
            epsilon: self.parse("train.epsilon")?,
            patch_size,
            patch_stride,
        };
        cfg.validate().map_err(|e| err(format!("train: {e}")))?;
        Ok(cfg)
    }

    pub fn dataset_params(&self) -> Result<DatasetParams> {
        let (patch_size, stride) = self.patch_geometry()?;
        let augment = match self.raw("train.augment") {
            "auto" => None,
            "on" => Some(true),
            "off" => Some(false),
            v => return Err(err(format!("train.augment: expected auto, on or off, got `{v}`"))),
        };
        Ok(DatasetParams {
            preprocess: self.preprocess()?,
            text_blur_sigma: self.non_negative("text.blur_sigma")?,
            patch_size,
            stride,
            augment,
        })
    }

    pub fn holdout(&self) -> Result<usize> {
        self.parse("train.holdout")
    }

    pub fn synth_params(&self) -> Result<SynthParams> {
        let (lo, hi): (f64, f64) = (self.parse("synth.bleed_min")?, self.parse("synth.bleed_max")?);
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(err(format!("synth bleed range {lo}..{hi} must satisfy 0 <= min <= max <= 1")));
        }
        let fold: f64 = self.parse("synth.fold_probability")?;
        if !(0.0..=1.0).contains(&fold) {
            return Err(err(format!("synth.fold_probability must lie in [0, 1], got {fold}")));
        }
        let size = self.positive("synth.size")?;
        if size < 16 {
            return Err(err(format!("synth.size must be at least 16, got {size}")));
        }
        Ok(SynthParams {
            size,
            gamma: self.gamma()?,
            bleed_strength: (lo, hi),
            grain_sigma: self.non_negative("synth.grain")?,
            max_blots: self.parse("synth.max_blots")?,
            fold_probability: fold,
        })
    }
}
