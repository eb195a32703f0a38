use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use iwsn::classifier::{load_model, save_model, MlpModel};
use iwsn::flops::{network_flops, pipeline_flops, FlopsReport, NetworkSpec};
use iwsn::pipeline::{
    evaluate, extract_features, generate, infer_image, read_image, render, run_bench, split_indices, train_on_features,
    PipelineConfig, Raster, SynthSpec,
};
use iwsn::scattering::{feature_len, read_feature_file, write_feature_file};
use iwsn::wavelet::dump_filters;
use iwsn::{Error, Result};

#[derive(Parser)]
#[command(name = "iwsn", version, about = "Wavelet scattering features, MLP classifier and FLOPs model")]
struct Cli {
    /// Pipeline configuration (plain-text key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = automatic).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for data generation, splitting and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write the report as CSV.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    All,
    Train,
    Test,
}

#[derive(Subcommand)]
enum Command {
    /// Write a procedural labelled image set and its manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        per_class: usize,
        #[arg(long, default_value_t = 5)]
        classes: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
    },
    /// Scattering features for every image in a manifest.
    Extract {
        #[arg(long, required_unless_present = "dump_filters")]
        manifest: Option<PathBuf>,
        #[arg(long, required_unless_present = "dump_filters")]
        out: Option<PathBuf>,
        /// Print the wavelet filter tables.
        #[arg(long)]
        dump_filters: bool,
    },
    /// Split a feature file 8:2 per class, train, and save the model.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model_out: PathBuf,
    },
    /// Classify images.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
    /// Confusion matrix and per-class metrics over a feature file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: Split,
    },
    /// Time feature extraction + classification on a pre-decoded frame.
    Bench {
        /// Trained model; a seeded random model is used when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Frame to time; a synthetic frame is rendered when absent.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long, default_value_t = 1280)]
        width: usize,
        #[arg(long, default_value_t = 720)]
        height: usize,
        #[arg(long, default_value_t = 30)]
        frames: usize,
        /// Device peak in FLOPS, for the efficiency ratio.
        #[arg(long)]
        peak: Option<f64>,
    },
    /// Analytic FLOPs of a network spec, the reference CNN, or the
    /// configured scattering + MLP pipeline.
    Flops {
        /// Network spec file (`kind key=value ...` per line).
        spec: Option<PathBuf>,
        /// Reference CNN at WIDTHxHEIGHT.
        #[arg(long, value_parser = parse_dims)]
        reference: Option<(usize, usize)>,
        /// Configured pipeline at WIDTHxHEIGHT.
        #[arg(long, value_parser = parse_dims)]
        pipeline: Option<(usize, usize)>,
        /// Device peak in FLOPS, for the theoretical time.
        #[arg(long)]
        peak: Option<f64>,
        /// Print the wavelet filter tables.
        #[arg(long)]
        dump_filters: bool,
    },
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    match (w.parse(), h.parse()) {
        (Ok(w), Ok(h)) if w > 0 && h > 0 => Ok((w, h)),
        _ => Err(format!("bad dimensions `{s}`")),
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::from(e).at(path))
}

fn print_flops(report: &FlopsReport, csv: Option<&Path>) -> Result<()> {
    report.write_table(&mut io::stdout().lock())?;
    if let Some(p) = csv {
        report.write_csv(create(p)?)?;
    }
    Ok(())
}

/// `Ok(false)` means the command ran but some inputs failed.
fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.train.seed = s;
    }
    let csv = cli.csv.as_deref();
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Synth { out: dir, per_class, classes, width, height } => {
            let spec = SynthSpec { width, height, per_class, classes, seed: cli.seed.unwrap_or(0) };
            let manifest = generate(&spec, &dir)?;
            writeln!(out, "{} images, manifest {}", per_class * classes, manifest.display())?;
        }
        Command::Extract { manifest, out: path, dump_filters: dump } => {
            if dump {
                dump_filters(&mut out)?;
            }
            if let (Some(manifest), Some(path)) = (manifest, path) {
                let report = extract_features(&cfg, &manifest)?;
                write_feature_file(&path, &report.file)?;
                writeln!(
                    out,
                    "{} records of length {} written to {}",
                    report.file.records.len(),
                    report.file.header.vector_len,
                    path.display()
                )?;
                for (_, e) in &report.failures {
                    eprintln!("skipped: {e}");
                }
                if let Some(c) = csv {
                    let mut w = csv::Writer::from_writer(create(c)?);
                    w.write_record(["path", "error"])?;
                    for (p, e) in &report.failures {
                        w.write_record([p.display().to_string(), e.to_string()])?;
                    }
                    w.flush()?;
                }
                return Ok(report.failures.is_empty());
            }
        }
        Command::Train { features, model_out } => {
            let file = read_feature_file(&features)?;
            let report = train_on_features(&cfg, &file)?;
            save_model(&report.outcome.model, &model_out)?;
            for (i, l) in report.outcome.loss_history.iter().enumerate() {
                writeln!(out, "epoch {:>4} loss {l:.6}", i + 1)?;
            }
            writeln!(out, "\ntrain split ({} samples):\n{}", report.train_idx.len(), report.train_matrix)?;
            writeln!(out, "\ntest split ({} samples):\n{}", report.test_idx.len(), report.test_matrix)?;
            writeln!(out, "\nmodel written to {}", model_out.display())?;
            if let Some(c) = csv {
                let mut w = csv::Writer::from_writer(create(c)?);
                w.write_record(["epoch", "loss"])?;
                for (i, l) in report.outcome.loss_history.iter().enumerate() {
                    w.write_record([(i + 1).to_string(), format!("{l:.9}")])?;
                }
                w.flush()?;
            }
        }
        Command::Infer { model, images } => {
            let model = load_model(&model)?;
            let mut w = match csv {
                Some(c) => {
                    let mut w = csv::Writer::from_writer(create(c)?);
                    let mut head = vec!["path".to_string(), "class".to_string()];
                    head.extend(cfg.classes.iter().cloned());
                    w.write_record(&head)?;
                    Some(w)
                }
                None => None,
            };
            let mut ok = true;
            for img in &images {
                match infer_image(&cfg, &model, img) {
                    Ok(p) => {
                        writeln!(out, "{p}")?;
                        if let Some(w) = w.as_mut() {
                            let mut rec = vec![p.path.display().to_string(), p.label.clone()];
                            rec.extend(p.scores.iter().map(|s| format!("{s:.9}")));
                            w.write_record(&rec)?;
                        }
                    }
                    Err(e) if images.len() > 1 && !e.is_numeric() => {
                        eprintln!("skipped: {e}");
                        ok = false;
                    }
                    Err(e) => return Err(e),
                }
            }
            if let Some(mut w) = w {
                w.flush()?;
            }
            return Ok(ok);
        }
        Command::Eval { model, features, split } => {
            let model = load_model(&model)?;
            let file = read_feature_file(&features)?;
            iwsn::pipeline::check_compatible(&cfg, &file.header)?;
            let labels: Vec<u32> = file.records.iter().map(|r| r.0).collect();
            let (train_idx, test_idx) = split_indices(&labels, cfg.classes.len(), cfg.train_fraction, cfg.train.seed);
            let idx = match split {
                Split::All => (0..labels.len()).collect(),
                Split::Train => train_idx,
                Split::Test => test_idx,
            };
            let m = evaluate(&model, &file, &idx)?;
            writeln!(out, "{m}")?;
            if let Some(c) = csv {
                m.write_csv(create(c)?)?;
            }
        }
        Command::Bench { model, image, width, height, frames, peak } => {
            let raster = match image {
                Some(p) => read_image(&p)?,
                None => {
                    let spec = SynthSpec { width, height, seed: cfg.train.seed, ..SynthSpec::default() };
                    Raster {
                        width,
                        height,
                        channels: 3,
                        maxval: 255,
                        samples: render(&spec, 0, 0)?.into_iter().map(u16::from).collect(),
                    }
                }
            };
            let model = match model {
                Some(p) => load_model(&p)?,
                None => {
                    let n = feature_len(&cfg.scatter, raster.width, raster.height)?;
                    MlpModel::new_seeded(&cfg.mlp_dims(n), cfg.train.seed)?
                }
            };
            let report = run_bench(&cfg, &model, &raster, frames, peak)?;
            writeln!(out, "{report}")?;
            if let Some(c) = csv {
                report.write_csv(create(c)?)?;
            }
        }
        Command::Flops { spec, reference, pipeline, peak, dump_filters: dump } => {
            if dump {
                dump_filters(&mut out)?;
            }
            let report = if let Some(p) = spec {
                let text = std::fs::read_to_string(&p).map_err(|e| Error::from(e).at(&p))?;
                let net: NetworkSpec = text.parse().map_err(|e: Error| e.at(&p))?;
                Some(network_flops(&net)?)
            } else if let Some((w, h)) = reference {
                Some(network_flops(&NetworkSpec::reference_cnn(w as u64, h as u64))?)
            } else if let Some((w, h)) = pipeline {
                let n = feature_len(&cfg.scatter, w, h)?;
                Some(pipeline_flops(&cfg.scatter, w, h, &cfg.mlp_dims(n))?)
            } else {
                None
            };
            match report {
                Some(r) => {
                    let r = match peak {
                        Some(p) => r.with_peak(p)?,
                        None => r,
                    };
                    drop(out);
                    print_flops(&r, csv)?;
                }
                None if !dump => {
                    return Err(Error::InvalidConfig(
                        "give a spec file, --reference WxH, --pipeline WxH or --dump-filters".into(),
                    ))
                }
                None => {}
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}
