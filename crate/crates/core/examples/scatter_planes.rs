//! Run both cascades on one synthetic image and compare their planes.
//!
//! cargo run --release --example scatter_planes -- [class] [depth]

use iwsn::pipeline::{render, Channel, Raster, SynthSpec, SYNTH_CLASSES};
use iwsn::scattering::{feature_len, scatter, ImagePlane, ScatterConfig, Selection, Variant};

fn energy(p: &ImagePlane) -> f64 {
    p.values().iter().map(|v| v * v).sum::<f64>() / p.len() as f64
}

fn main() -> iwsn::Result<()> {
    let mut args = std::env::args().skip(1);
    let class = args.next().and_then(|a| a.parse().ok()).unwrap_or(2usize);
    let depth = args.next().and_then(|a| a.parse().ok()).unwrap_or(3usize);
    let spec = SynthSpec { width: 128, height: 128, ..SynthSpec::default() };
    let rgb = render(&spec, class, 0)?;
    let raster =
        Raster { width: 128, height: 128, channels: 3, maxval: 255, samples: rgb.into_iter().map(u16::from).collect() };
    let plane = raster.channel(Channel::B);
    println!("{} image, {}x{}, blue channel", SYNTH_CLASSES[class], plane.width(), plane.height());

    for variant in [Variant::Classic, Variant::Improved] {
        let base = ScatterConfig::default();
        let cfg = ScatterConfig {
            depth,
            level_bases: base.level_bases.iter().cycle().take(depth).copied().collect(),
            variant,
            selection: Selection::all(depth),
            ..base
        };
        let out = scatter(&plane, &cfg)?;
        println!("\n{variant:?}: {} features with every plane selected", feature_len(&cfg, 128, 128)?);
        println!("  S0 {:>3}x{:<3} mean energy {:.5}", out.s0.width(), out.s0.height(), energy(&out.s0));
        for (m, (u, s)) in out.u_levels.iter().zip(&out.s_levels).enumerate() {
            println!("  U{} {:>3}x{:<3} mean energy {:.5}", m + 1, u.width(), u.height(), energy(u));
            println!("  S{} {:>3}x{:<3} mean energy {:.5}", m + 1, s.width(), s.height(), energy(s));
        }
    }
    Ok(())
}
