//! Per-layer operation counts for the reference CNN and for the scattering
//! pipeline at three resolutions.
//!
//! cargo run --example flops_tables -- [peak_flops]

use iwsn::flops::{fc_flops, mlp_flops_closed_form, network_flops, pipeline_flops, relu_flops, NetworkSpec};
use iwsn::pipeline::PipelineConfig;
use iwsn::scattering::feature_len;

const SIZES: [(usize, usize); 3] = [(960, 540), (1280, 720), (1920, 1080)];

fn main() -> iwsn::Result<()> {
    let peak = std::env::args().nth(1).and_then(|a| a.parse::<f64>().ok());
    let mut stdout = std::io::stdout();

    println!("reference CNN at 1280x720:");
    let mut cnn = network_flops(&NetworkSpec::reference_cnn(1280, 720))?;
    if let Some(p) = peak {
        cnn = cnn.with_peak(p)?;
    }
    cnn.write_table(&mut stdout)?;
    for (w, h) in SIZES {
        let total = network_flops(&NetworkSpec::reference_cnn(w as u64, h as u64))?.total;
        println!("  {w}x{h}: {:.2} GFLOPs", total as f64 / 1e9);
    }

    println!("\nclassifier head over a 1,036,800-long input:");
    println!("  fc 1036800->64   {}", fc_flops(1_036_800, 64, true)?);
    println!("  relu 64          {}", relu_flops(64));
    println!("  fc 64->16        {}", fc_flops(64, 16, true)?);
    println!("  relu 16          {}", relu_flops(16));
    println!("  closed form      {}", mlp_flops_closed_form(1_036_800, &[64, 16])?);

    let cfg = PipelineConfig::default();
    println!("\nscattering pipeline ({} levels, {:?}):", cfg.scatter.depth, cfg.scatter.variant);
    for (w, h) in SIZES {
        let dims = cfg.mlp_dims(feature_len(&cfg.scatter, w, h)?);
        let report = pipeline_flops(&cfg.scatter, w, h, &dims)?;
        let per_px = report.total as f64 / (w * h) as f64;
        println!("  {w}x{h}: {:.2} MFLOPs, {per_px:.2} per pixel, {} features", report.total as f64 / 1e6, dims[0]);
    }
    let dims = cfg.mlp_dims(feature_len(&cfg.scatter, 1280, 720)?);
    println!();
    pipeline_flops(&cfg.scatter, 1280, 720, &dims)?.write_table(&mut stdout)?;
    Ok(())
}
