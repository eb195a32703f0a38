//! Throughput harness. Frames are decoded once up front; each timed frame
//! covers channel extraction, scattering and the classifier forward pass.

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::config::PipelineConfig;
use super::image::Raster;
use super::run::pool;
use crate::classifier::{MlpF32, MlpModel};
use crate::error::{Error, Result};
use crate::metrics::efficiency;
use crate::scattering::Scatterer;

pub const TIMED_STAGES: &str = "channel extraction + scattering + single-precision MLP forward (image decode excluded)";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub threads: usize,
    pub wall: Duration,
    pub fps: f64,
    /// Mean per-frame milliseconds for channel extraction + scattering.
    pub features_ms: f64,
    /// Mean per-frame milliseconds for the classifier.
    pub classify_ms: f64,
    /// Frames per second per GFLOPS of the given peak.
    pub efficiency: Option<f64>,
}

impl BenchReport {
    pub fn frame_ms(&self) -> f64 {
        self.features_ms + self.classify_ms
    }

    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "width",
            "height",
            "frames",
            "threads",
            "wall_s",
            "fps",
            "features_ms",
            "classify_ms",
            "efficiency",
        ])?;
        w.write_record([
            self.width.to_string(),
            self.height.to_string(),
            self.frames.to_string(),
            self.threads.to_string(),
            format!("{:.6}", self.wall.as_secs_f64()),
            format!("{:.3}", self.fps),
            format!("{:.3}", self.features_ms),
            format!("{:.3}", self.classify_ms),
            self.efficiency.map_or_else(String::new, |e| format!("{e:.6}")),
        ])?;
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "timed: {TIMED_STAGES}")?;
        writeln!(
            f,
            "frames {} at {}x{} on {} thread(s), wall {:.3} s",
            self.frames,
            self.width,
            self.height,
            self.threads,
            self.wall.as_secs_f64()
        )?;
        writeln!(f, "fps {:.2}", self.fps)?;
        writeln!(
            f,
            "per frame: features {:.3} ms, classify {:.3} ms, total {:.3} ms",
            self.features_ms,
            self.classify_ms,
            self.frame_ms()
        )?;
        match self.efficiency {
            Some(e) => write!(f, "efficiency {e:.4} fps/GFLOPS"),
            None => write!(f, "efficiency n/a (no peak given)"),
        }
    }
}

fn frame(cfg: &PipelineConfig, scatterer: &Scatterer, model: &MlpF32, raster: &Raster) -> Result<(Duration, Duration)> {
    let t0 = Instant::now();
    let plane = raster.channel(cfg.channel);
    let features = scatterer.features(&plane)?;
    let t1 = Instant::now();
    let features: Vec<f32> = features.into_iter().map(|v| v as f32).collect();
    let scores = model.forward(&features)?;
    let t2 = Instant::now();
    std::hint::black_box(scores);
    Ok((t1 - t0, t2 - t1))
}

/// Runs one untimed warm-up frame, then `frames` timed frames spread over
/// the configured worker pool.
pub fn run_bench(
    cfg: &PipelineConfig,
    model: &MlpModel,
    raster: &Raster,
    frames: usize,
    peak_flops: Option<f64>,
) -> Result<BenchReport> {
    cfg.validate()?;
    if frames == 0 {
        return Err(Error::InvalidConfig("frame count must be positive".into()));
    }
    let scatterer = Scatterer::new(cfg.scatter.clone())?;
    let model = &model.to_f32();
    frame(cfg, &scatterer, model, raster)?;
    let pool = pool(cfg.threads)?;
    let threads = pool.current_num_threads();
    let start = Instant::now();
    let times: Vec<(Duration, Duration)> = pool.install(|| {
        (0..frames).into_par_iter().map(|_| frame(cfg, &scatterer, model, raster)).collect::<Result<_>>()
    })?;
    let wall = start.elapsed();
    let n = frames as f64;
    let features_ms = times.iter().map(|t| t.0.as_secs_f64()).sum::<f64>() * 1e3 / n;
    let classify_ms = times.iter().map(|t| t.1.as_secs_f64()).sum::<f64>() * 1e3 / n;
    let fps = n / wall.as_secs_f64();
    Ok(BenchReport {
        width: raster.width,
        height: raster.height,
        frames,
        threads,
        wall,
        fps,
        features_ms,
        classify_ms,
        efficiency: peak_flops.map(|p| efficiency(fps, p)).transpose()?,
    })
}
