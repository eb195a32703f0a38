//! Generate a synthetic five-class set, extract scattering features, train
//! the classifier on an 8:2 split and print the held-out confusion matrix.
//!
//! cargo run --release --example synth_pipeline -- [per_class] [seed]

use iwsn::pipeline::{extract_features, generate, train_on_features, PipelineConfig, SynthSpec};

fn main() -> iwsn::Result<()> {
    let mut args = std::env::args().skip(1);
    let per_class = args.next().and_then(|a| a.parse().ok()).unwrap_or(60);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(7);
    let dir = std::env::temp_dir().join(format!("iwsn-synth-{per_class}-{seed}"));
    let spec = SynthSpec { per_class, seed, ..SynthSpec::default() };
    let manifest = generate(&spec, &dir)?;
    println!("wrote {} images under {}", per_class * spec.classes, dir.display());

    let mut cfg =
        PipelineConfig { classes: spec.labels(), dims: Some((spec.width, spec.height)), ..Default::default() };
    cfg.train.seed = seed;
    if let Some(s) = args.next().and_then(|a| a.parse().ok()) {
        cfg.train.steps_per_epoch = Some(s);
    }
    let extracted = extract_features(&cfg, &manifest)?;
    println!("{} feature vectors of length {}", extracted.file.records.len(), extracted.file.header.vector_len);

    let report = train_on_features(&cfg, &extracted.file)?;
    let loss = &report.outcome.loss_history;
    println!("loss: first {:.4}, last {:.4}", loss[0], loss[loss.len() - 1]);
    println!("train accuracy {:.3}", report.train_matrix.overall_accuracy().unwrap_or(0.0));
    println!("\nheld-out split:\n{}", report.test_matrix);
    Ok(())
}
