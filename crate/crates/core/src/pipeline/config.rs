//! Pipeline configuration as plain `key = value` text. `#` starts a comment;
//! unknown keys are errors.
//!
//! ```text
//! channel = B
//! depth = 3
//! bases = bior1.1, bior2.2, bior1.3
//! boundary = symmetric
//! decimate = 2
//! variant = improved
//! selection = U1,U2,U3
//! smooth_with = first
//! decimate_smoothing = true
//! classes = nest, kite, textile, plastic, background
//! width = 64
//! height = 64
//! hidden = 64, 16
//! threads = 4
//! lr = 0.001
//! momentum = 0.9
//! epochs = 200
//! batch_size = 32
//! steps_per_epoch = 150
//! seed = 0
//! train_fraction = 0.8
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::image::Channel;
use crate::classifier::{TrainConfig, DEFAULT_HIDDEN};
use crate::error::{Error, Result};
use crate::scattering::{ScatterConfig, Selection};
use crate::wavelet::Basis;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub channel: Channel,
    pub scatter: ScatterConfig,
    /// Class names; label indices follow this order.
    pub classes: Vec<String>,
    /// Expected image size; `None` takes it from the first image.
    pub dims: Option<(usize, usize)>,
    pub hidden: Vec<usize>,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub train: TrainConfig,
    pub train_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            channel: Channel::B,
            scatter: ScatterConfig::default(),
            classes: super::synth::SYNTH_CLASSES.iter().map(|s| s.to_string()).collect(),
            dims: None,
            hidden: DEFAULT_HIDDEN.to_vec(),
            threads: 0,
            train: TrainConfig::default(),
            train_fraction: 0.8,
        }
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

impl PipelineConfig {
    /// Model layer widths for a given feature length.
    pub fn mlp_dims(&self, features: usize) -> Vec<usize> {
        let mut dims = vec![features];
        dims.extend(&self.hidden);
        dims.push(self.classes.len());
        dims
    }

    pub fn validate(&self) -> Result<()> {
        self.scatter.validate()?;
        self.train.validate()?;
        if self.classes.len() < 2 {
            return Err(Error::InvalidConfig("at least two classes are required".into()));
        }
        if let Some((i, _)) = self.classes.iter().enumerate().find(|(i, c)| self.classes[..*i].contains(c)) {
            return Err(Error::InvalidConfig(format!("duplicate class `{}`", self.classes[i])));
        }
        if self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("hidden widths must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!("train_fraction {} outside (0, 1]", self.train_fraction)));
        }
        if matches!(self.dims, Some((0, _)) | Some((_, 0))) {
            return Err(Error::InvalidConfig("width and height must be positive".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        text.parse().map_err(|e: Error| e.at(path))
    }

    fn set(&mut self, key: &str, v: &str, width: &mut Option<usize>, height: &mut Option<usize>) -> Result<()> {
        let num = |v: &str| -> Result<usize> {
            v.parse().map_err(|_| Error::InvalidConfig(format!("`{key}` expects a non-negative integer, got `{v}`")))
        };
        let float = |v: &str| -> Result<f64> {
            v.parse().map_err(|_| Error::InvalidConfig(format!("`{key}` expects a number, got `{v}`")))
        };
        match key {
            "channel" => self.channel = v.parse()?,
            "depth" => self.scatter.depth = num(v)?,
            "bases" => self.scatter.level_bases = list(v).map(Basis::from_str).collect::<Result<_>>()?,
            "boundary" => self.scatter.boundary = v.parse()?,
            "decimate" => self.scatter.decimate = num(v)?,
            "variant" => self.scatter.variant = v.parse()?,
            "selection" => self.scatter.selection = v.parse::<Selection>()?,
            "smooth_with" => self.scatter.smooth_with = v.parse()?,
            "decimate_smoothing" => {
                self.scatter.decimate_smoothing = parse_bool(v)
                    .ok_or_else(|| Error::InvalidConfig(format!("`{key}` expects true or false, got `{v}`")))?
            }
            "classes" => self.classes = list(v).map(String::from).collect(),
            "width" => *width = Some(num(v)?),
            "height" => *height = Some(num(v)?),
            "hidden" => self.hidden = list(v).map(num).collect::<Result<_>>()?,
            "threads" => self.threads = num(v)?,
            "lr" => self.train.learning_rate = float(v)?,
            "momentum" => self.train.momentum = float(v)?,
            "epochs" => self.train.epochs = num(v)?,
            "batch_size" => self.train.batch_size = num(v)?,
            "steps_per_epoch" => {
                self.train.steps_per_epoch = match v {
                    "full" | "none" => None,
                    _ => Some(num(v)?),
                }
            }
            "seed" => self.train.seed = v.parse().map_err(|_| Error::InvalidConfig(format!("bad seed `{v}`")))?,
            "train_fraction" => self.train_fraction = float(v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Text form accepted by `FromStr`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let names: Vec<&str> = self.scatter.level_bases.iter().map(|b| b.name()).collect();
        let hidden: Vec<String> = self.hidden.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "channel = {}", self.channel);
        let _ = writeln!(s, "depth = {}", self.scatter.depth);
        let _ = writeln!(s, "bases = {}", names.join(", "));
        let _ = writeln!(s, "boundary = {}", self.scatter.boundary);
        let _ = writeln!(s, "decimate = {}", self.scatter.decimate);
        let _ = writeln!(s, "variant = {}", self.scatter.variant);
        let _ = writeln!(s, "selection = {}", self.scatter.selection);
        let _ = writeln!(s, "smooth_with = {}", self.scatter.smooth_with);
        let _ = writeln!(s, "decimate_smoothing = {}", self.scatter.decimate_smoothing);
        let _ = writeln!(s, "classes = {}", self.classes.join(", "));
        if let Some((w, h)) = self.dims {
            let _ = writeln!(s, "width = {w}\nheight = {h}");
        }
        let _ = writeln!(s, "hidden = {}", hidden.join(", "));
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "lr = {}", self.train.learning_rate);
        let _ = writeln!(s, "momentum = {}", self.train.momentum);
        let _ = writeln!(s, "epochs = {}", self.train.epochs);
        let _ = writeln!(s, "batch_size = {}", self.train.batch_size);
        match self.train.steps_per_epoch {
            Some(n) => {
                let _ = writeln!(s, "steps_per_epoch = {n}");
            }
            None => {
                let _ = writeln!(s, "steps_per_epoch = full");
            }
        }
        let _ = writeln!(s, "seed = {}", self.train.seed);
        let _ = writeln!(s, "train_fraction = {}", self.train_fraction);
        s
    }
}

impl FromStr for PipelineConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let (mut width, mut height) = (None, None);
        let mut depth_set = false;
        let mut selection_set = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::SpecSyntax { line: i + 1, reason: "expected `key = value`".into() })?;
            let (key, value) = (key.trim(), value.trim());
            depth_set |= key == "depth";
            selection_set |= key == "selection";
            cfg.set(key, value, &mut width, &mut height)
                .map_err(|e| Error::SpecSyntax { line: i + 1, reason: e.to_string() })?;
        }
        if depth_set && !selection_set {
            cfg.scatter.selection = Selection::modulus(cfg.scatter.depth.min(Selection::MAX_LEVEL));
        }
        cfg.dims = match (width, height) {
            (Some(w), Some(h)) => Some((w, h)),
            (None, None) => None,
            _ => return Err(Error::InvalidConfig("width and height must be given together".into())),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
