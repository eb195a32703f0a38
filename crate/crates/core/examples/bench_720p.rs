//! Time the feature + classifier path on a synthetic 1280x720 frame.
//!
//! cargo run --release --example bench_720p -- [frames] [threads] [peak_flops]

use iwsn::classifier::MlpModel;
use iwsn::flops::pipeline_flops;
use iwsn::pipeline::{render, run_bench, PipelineConfig, Raster, SynthSpec};
use iwsn::scattering::feature_len;

fn main() -> iwsn::Result<()> {
    let mut args = std::env::args().skip(1);
    let frames = args.next().and_then(|a| a.parse().ok()).unwrap_or(30);
    let threads = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let peak = args.next().and_then(|a| a.parse().ok());
    let (w, h) = (1280, 720);

    let spec = SynthSpec { width: w, height: h, ..SynthSpec::default() };
    let rgb = render(&spec, 0, 0)?;
    let raster =
        Raster { width: w, height: h, channels: 3, maxval: 255, samples: rgb.into_iter().map(u16::from).collect() };

    let cfg = PipelineConfig { threads, dims: Some((w, h)), ..PipelineConfig::default() };
    let dims = cfg.mlp_dims(feature_len(&cfg.scatter, w, h)?);
    let model = MlpModel::new_seeded(&dims, 0)?;
    let flops = pipeline_flops(&cfg.scatter, w, h, &dims)?;
    println!("model {dims:?}, {:.4} GFLOPs per frame", flops.total as f64 / 1e9);

    let report = run_bench(&cfg, &model, &raster, frames, peak)?;
    println!("{report}");
    Ok(())
}
