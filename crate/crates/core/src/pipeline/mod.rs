//! File-level workflow: synthetic data, manifests, feature extraction,
//! training, inference, evaluation and throughput measurement.

mod bench;
mod config;
pub mod image;
pub mod manifest;
mod run;
pub mod synth;

pub use bench::{run_bench, BenchReport, TIMED_STAGES};
pub use config::PipelineConfig;
pub use image::{load_image_channel, read_image, Channel, Raster};
pub use manifest::{read_manifest, write_manifest, ManifestEntry};
pub use run::{
    check_compatible, evaluate, extract_features, infer_image, split_indices, train_on_features, ExtractReport,
    Prediction, TrainReport,
};
pub use synth::{generate, render, SynthSpec, SYNTH_CLASSES};
