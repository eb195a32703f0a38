//! Train the MLP on noisy Gaussian clusters, save it, reload it and check
//! that predictions survive the round trip.
//!
//! cargo run --release --example train_classifier -- [epochs] [seed]

use iwsn::classifier::{load_model, save_model, train, MlpModel, Sample, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn clusters(rng: &mut ChaCha8Rng, centres: &[Vec<f64>], per_class: usize) -> Vec<Sample> {
    let classes = centres.len();
    (0..per_class * classes)
        .map(|i| {
            let label = i % classes;
            let features = centres[label].iter().map(|c| c + rng.random_range(-0.4..0.4)).collect();
            Sample { features, label }
        })
        .collect()
}

fn accuracy(model: &MlpModel, data: &[Sample]) -> iwsn::Result<f64> {
    let hits = data
        .iter()
        .map(|s| model.predict(&s.features).map(|p| (p == s.label) as usize))
        .sum::<iwsn::Result<usize>>()?;
    Ok(hits as f64 / data.len() as f64)
}

fn main() -> iwsn::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs = args.next().and_then(|a| a.parse().ok()).unwrap_or(50);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f64>> = (0..4).map(|_| (0..12).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let train_set = clusters(&mut rng, &centres, 40);
    let test_set = clusters(&mut rng, &centres, 10);

    let model = MlpModel::new_seeded(&[12, 64, 16, 4], seed)?;
    let cfg = TrainConfig { learning_rate: 0.01, epochs, seed, ..TrainConfig::default() };
    let outcome = train(&model, &train_set, &cfg)?;
    for (e, loss) in outcome.loss_history.iter().enumerate().step_by((epochs / 10).max(1)) {
        println!("epoch {:>4}  loss {loss:.5}", e + 1);
    }
    println!("train accuracy {:.3}", accuracy(&outcome.model, &train_set)?);
    println!("test accuracy  {:.3}", accuracy(&outcome.model, &test_set)?);

    let path = std::env::temp_dir().join(format!("iwsn-example-model-{seed}.bin"));
    save_model(&outcome.model, &path)?;
    let back = load_model(&path)?;
    println!(
        "saved {} ({} bytes), reload identical: {}",
        path.display(),
        std::fs::metadata(&path)?.len(),
        back == outcome.model
    );
    Ok(())
}
