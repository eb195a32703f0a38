//! Build a confusion matrix from label pairs, derive per-class rates and
//! relate measured throughput to device peak.
//!
//! cargo run --example confusion_metrics

use iwsn::metrics::{acc, binary_tally, confusion_from_predictions, efficiency, ppv, tpr};

fn main() -> iwsn::Result<()> {
    let labels: Vec<String> = ["nest", "kite", "plastic"].iter().map(|s| s.to_string()).collect();
    let pairs = [
        ("nest", "nest"),
        ("nest", "nest"),
        ("nest", "kite"),
        ("kite", "kite"),
        ("kite", "kite"),
        ("kite", "plastic"),
        ("plastic", "plastic"),
        ("plastic", "plastic"),
        ("plastic", "nest"),
        ("nest", "nest"),
    ];
    let matrix = confusion_from_predictions(&pairs, &labels)?;
    println!("{matrix}");
    matrix.write_csv(std::io::stdout())?;

    println!();
    for label in &labels {
        let t = binary_tally(&matrix, label)?;
        let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        println!(
            "{label:<8} tp {} fp {} fn {} tn {}  TPR {} PPV {} ACC {}",
            t.tp,
            t.fp,
            t.fn_,
            t.tn,
            show(tpr(&t)),
            show(ppv(&t)),
            show(acc(&t))
        );
    }
    println!("overall accuracy {:.3}", matrix.overall_accuracy().unwrap_or(0.0));

    println!();
    for (fps, peak) in [(66.7, 472e9), (149.3, 3000e9)] {
        println!("{fps} FPS on a {:.0} GFLOPS device: {:.3} FPS per GFLOPS", peak / 1e9, efficiency(fps, peak)?);
    }
    Ok(())
}
