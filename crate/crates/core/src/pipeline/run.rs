use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::PipelineConfig;
use super::image::{load_image_channel, read_image};
use super::manifest::{read_manifest, resolve_entry};
use crate::classifier::{softmax, train, MlpModel, Sample, TrainOutcome};
use crate::error::{Error, Result};
use crate::metrics::ConfusionMatrix;
use crate::scattering::{feature_len, FeatureFile, FeatureHeader, Scatterer};

pub(crate) fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

#[derive(Debug)]
pub struct ExtractReport {
    pub file: FeatureFile,
    /// Images that were skipped, in manifest order.
    pub failures: Vec<(PathBuf, Error)>,
}

fn check_dims(path: &Path, expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::InvalidPlane(format!(
            "{} is {}x{}, expected {}x{}",
            path.display(),
            actual.0,
            actual.1,
            expected.0,
            expected.1
        )));
    }
    Ok(())
}

/// Extracts one feature record per manifest entry, in manifest order.
/// Unreadable or mismatched images are collected in `failures`.
pub fn extract_features(cfg: &PipelineConfig, manifest: &Path) -> Result<ExtractReport> {
    cfg.validate()?;
    let entries = read_manifest(manifest)?;
    let paths: Vec<PathBuf> = entries.iter().map(|e| resolve_entry(manifest, e)).collect();
    let dims = match cfg.dims {
        Some(d) => d,
        None => paths.iter().find_map(|p| read_image(p).ok()).map(|r| (r.width, r.height)).unwrap_or((0, 0)),
    };
    let header = FeatureHeader::new(&cfg.scatter, dims.0, dims.1, cfg.classes.clone())?;
    let scatterer = Scatterer::new(cfg.scatter.clone())?;
    let one = |(entry, path): (&super::manifest::ManifestEntry, &PathBuf)| -> Result<(u32, Vec<f32>)> {
        let label = cfg
            .classes
            .iter()
            .position(|c| *c == entry.label)
            .ok_or_else(|| Error::UnknownLabel(entry.label.clone()).at(path))?;
        let plane = load_image_channel(path, cfg.channel)?;
        check_dims(path, dims, (plane.width(), plane.height()))?;
        let v = scatterer.features(&plane).map_err(|e| e.at(path))?;
        Ok((label as u32, v.into_iter().map(|x| x as f32).collect()))
    };
    let results: Vec<Result<(u32, Vec<f32>)>> =
        pool(cfg.threads)?.install(|| entries.par_iter().zip(paths.par_iter()).map(one).collect());
    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (r, path) in results.into_iter().zip(paths) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push((path, e)),
        }
    }
    Ok(ExtractReport { file: FeatureFile { header, records }, failures })
}

/// Per-class seeded split. Each class's indices (in file order) are shuffled
/// with their own stream and the first `round(fraction * n)` go to training.
/// Both returned lists are sorted.
pub fn split_indices(labels: &[u32], classes: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] as usize == c).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        idx.shuffle(&mut rng);
        let n_train = ((fraction * idx.len() as f64).round() as usize).min(idx.len());
        train_idx.extend_from_slice(&idx[..n_train]);
        test_idx.extend_from_slice(&idx[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    (train_idx, test_idx)
}

fn samples(file: &FeatureFile, idx: &[usize]) -> Vec<Sample> {
    idx.iter()
        .map(|&i| {
            let (label, v) = &file.records[i];
            Sample { features: v.iter().map(|&x| x as f64).collect(), label: *label as usize }
        })
        .collect()
}

/// Rejects feature files produced under a different scattering or class setup.
pub fn check_compatible(cfg: &PipelineConfig, header: &FeatureHeader) -> Result<()> {
    if header.config != cfg.scatter {
        return Err(Error::InvalidConfig(
            "feature file was extracted with a different scattering configuration".into(),
        ));
    }
    if header.classes != cfg.classes {
        return Err(Error::InvalidConfig(format!(
            "feature file classes {:?} differ from configured {:?}",
            header.classes, cfg.classes
        )));
    }
    if let Some(d) = cfg.dims {
        if d != (header.width, header.height) {
            return Err(Error::DimensionMismatch { expected: d.0 * d.1, actual: header.width * header.height });
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub outcome: TrainOutcome,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub train_matrix: ConfusionMatrix,
    pub test_matrix: ConfusionMatrix,
}

/// Splits, trains from a seeded initialisation and scores both halves.
pub fn train_on_features(cfg: &PipelineConfig, file: &FeatureFile) -> Result<TrainReport> {
    cfg.validate()?;
    check_compatible(cfg, &file.header)?;
    let labels: Vec<u32> = file.records.iter().map(|r| r.0).collect();
    let (train_idx, test_idx) = split_indices(&labels, cfg.classes.len(), cfg.train_fraction, cfg.train.seed);
    let present = (0..cfg.classes.len()).filter(|&c| train_idx.iter().any(|&i| labels[i] as usize == c)).count();
    if present < 2 {
        return Err(Error::InvalidConfig(format!(
            "training split has {present} class(es) with samples; need at least 2"
        )));
    }
    let model = MlpModel::new_seeded(&cfg.mlp_dims(file.header.vector_len), cfg.train.seed)?;
    let outcome = train(&model, &samples(file, &train_idx), &cfg.train)?;
    let train_matrix = evaluate(&outcome.model, file, &train_idx)?;
    let test_matrix = evaluate(&outcome.model, file, &test_idx)?;
    Ok(TrainReport { outcome, train_idx, test_idx, train_matrix, test_matrix })
}

/// Confusion matrix of `model` over the given records.
pub fn evaluate(model: &MlpModel, file: &FeatureFile, idx: &[usize]) -> Result<ConfusionMatrix> {
    if model.classes() != file.header.classes.len() {
        return Err(Error::DimensionMismatch { expected: file.header.classes.len(), actual: model.classes() });
    }
    let mut m = ConfusionMatrix::new(file.header.classes.clone());
    for s in samples(file, idx) {
        m.record(s.label, model.predict(&s.features)?)?;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub path: PathBuf,
    pub class: usize,
    pub label: String,
    /// Softmax probabilities in class order.
    pub scores: Vec<f64>,
}

impl std::fmt::Display for Prediction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}\t{}", self.path.display(), self.label)?;
        for s in &self.scores {
            write!(f, "\t{s:.6}")?;
        }
        Ok(())
    }
}

/// Classifies one image file.
pub fn infer_image(cfg: &PipelineConfig, model: &MlpModel, path: &Path) -> Result<Prediction> {
    cfg.validate()?;
    if model.classes() != cfg.classes.len() {
        return Err(Error::DimensionMismatch { expected: cfg.classes.len(), actual: model.classes() });
    }
    let plane = load_image_channel(path, cfg.channel)?;
    if let Some(d) = cfg.dims {
        check_dims(path, d, (plane.width(), plane.height()))?;
    }
    let expected = feature_len(&cfg.scatter, plane.width(), plane.height())?;
    if expected != model.input_len() {
        return Err(Error::DimensionMismatch { expected: model.input_len(), actual: expected }.at(path));
    }
    let features = Scatterer::new(cfg.scatter.clone())?.features(&plane)?;
    let scores = softmax(&model.forward(&features)?);
    let class = crate::classifier::argmax(&scores);
    Ok(Prediction { path: path.to_path_buf(), class, label: cfg.classes[class].clone(), scores })
}
