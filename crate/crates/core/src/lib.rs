//! Wavelet scattering features with an optional low-pass-chained ("improved")
//! cascade, a small fully connected classifier, an analytic FLOPs model, and
//! the file-level pipeline that ties them together.
//!
//! ```
//! use iwsn::scattering::{ImagePlane, ScatterConfig, Scatterer};
//!
//! let img = ImagePlane::from_fn(32, 32, |x, y| ((x * 7 + y * 3) % 11) as f64 / 10.0).unwrap();
//! let scatterer = Scatterer::new(ScatterConfig::default()).unwrap();
//! let features = scatterer.features(&img).unwrap();
//! assert_eq!(features.len(), 16 * 16 + 8 * 8 + 4 * 4);
//! ```

pub mod classifier;
pub mod error;
pub mod flops;
pub mod metrics;
pub mod pipeline;
pub mod scattering;
pub mod wavelet;

pub use error::{Error, Result};
