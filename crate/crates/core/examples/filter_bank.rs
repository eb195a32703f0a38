//! Print the 1-D analysis filters of every supported basis and the 2-D
//! kernels built from them.
//!
//! cargo run --example filter_bank

use iwsn::wavelet::{filter_pair, make_kernel2d, Basis, KernelKind};

fn row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:+.6}")).collect::<Vec<_>>().join(" ")
}

fn main() {
    for basis in Basis::ALL {
        let pair = filter_pair(basis);
        println!("{} (orders {:?})", basis.name(), basis.orders());
        println!("  h: {}", row(pair.h()));
        println!("  g: {}", row(pair.g()));
        for kind in [KernelKind::Scale, KernelKind::WaveletDiagonal] {
            let k = make_kernel2d(pair, kind);
            let k = if kind == KernelKind::Scale { k.unit_dc() } else { k };
            println!("  {kind:?}: {0}x{0}, origin {1}, dc gain {2:.3e}", k.side(), k.origin(), k.dc_gain());
            if k.side() <= 4 {
                for r in 0..k.side() {
                    let taps: Vec<f64> = (0..k.side()).map(|c| k.tap(r, c)).collect();
                    println!("    {}", row(&taps));
                }
            }
        }
    }
}
