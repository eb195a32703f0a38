//! Classic and improved wavelet scattering over single-channel planes.
//!
//! Both cascades use the unit-DC scale kernel `phi` and the diagonal wavelet
//! kernel `psi` of each level's basis, and every convolution decimates.
//!
//! Classic:
//!
//! ```text
//! S0  = x * phi_1
//! U1  = |x * psi_1|
//! Un  = |U(n-1) * psi_n|
//! Sn  = Un * phi_n
//! ```
//!
//! Improved (low-pass chain first, a single high-pass at the end):
//!
//! ```text
//! S0  = x * phi_1
//! L0  = x,   Lk = |L(k-1) * phi_k|
//! Um  = |L(m-1) * psi_m|
//! Sm  = Um * phi_1            (phi_m with `SmoothWith::Last`)
//! ```
//!
//! At depth 1 the two definitions coincide.

mod conv;
pub(crate) mod features;
mod plane;

use std::fmt;
use std::str::FromStr;

pub use conv::{conv2_decimated, decimated_len, Boundary};
pub use features::{
    feature_len, feature_vector, read_feature_file, write_feature_file, FeatureFile, FeatureHeader, FEATURE_MAGIC,
};
pub use plane::ImagePlane;

use crate::error::{Error, Result};
use crate::wavelet::{filter_pair, make_kernel2d, Basis, Kernel2D, KernelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    Classic,
    #[default]
    Improved,
}

impl Variant {
    pub fn id(self) -> u8 {
        match self {
            Variant::Classic => 0,
            Variant::Improved => 1,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Classic => "classic",
            Variant::Improved => "improved",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "classic" => Ok(Variant::Classic),
            "improved" => Ok(Variant::Improved),
            other => Err(Error::InvalidConfig(format!("unknown variant `{other}`"))),
        }
    }
}

/// Which level's scale kernel smooths `Um` into `Sm` in the improved cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SmoothWith {
    #[default]
    First,
    Last,
}

impl fmt::Display for SmoothWith {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SmoothWith::First => "first",
            SmoothWith::Last => "last",
        })
    }
}

impl FromStr for SmoothWith {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "first" => Ok(SmoothWith::First),
            "last" => Ok(SmoothWith::Last),
            other => Err(Error::InvalidConfig(format!("unknown smooth_with `{other}`"))),
        }
    }
}

/// Subset of `{S0, U1..Um, S1..Sm}`.
///
/// As a bitmask: bit 0 is S0, bit `k` is `Uk` and bit `32 + k` is `Sk`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Selection(u64);

impl Selection {
    pub const MAX_LEVEL: usize = 31;

    pub fn empty() -> Self {
        Selection(0)
    }

    /// `U1..=Um`, the default feature set.
    pub fn modulus(depth: usize) -> Self {
        (1..=depth).fold(Selection::empty(), |s, k| s.with_u(k))
    }

    pub fn all(depth: usize) -> Self {
        (1..=depth).fold(Selection::empty().with_s0(), |s, k| s.with_u(k).with_s(k))
    }

    pub fn from_bits(bits: u64) -> Result<Self> {
        if bits & (1 << 32) != 0 {
            return Err(Error::InvalidConfig(format!("invalid selection bitmask {bits:#x}")));
        }
        Ok(Selection(bits))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn with_s0(self) -> Self {
        Selection(self.0 | 1)
    }

    pub fn with_u(self, level: usize) -> Self {
        assert!((1..=Self::MAX_LEVEL).contains(&level));
        Selection(self.0 | 1 << level)
    }

    pub fn with_s(self, level: usize) -> Self {
        assert!((1..=Self::MAX_LEVEL).contains(&level));
        Selection(self.0 | 1 << (32 + level))
    }

    pub fn has_s0(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn has_u(self, level: usize) -> bool {
        (1..=Self::MAX_LEVEL).contains(&level) && self.0 & (1 << level) != 0
    }

    pub fn has_s(self, level: usize) -> bool {
        (1..=Self::MAX_LEVEL).contains(&level) && self.0 & (1 << (32 + level)) != 0
    }

    /// Highest level referenced by the selection.
    pub fn max_level(self) -> usize {
        (1..=Self::MAX_LEVEL).rev().find(|&k| self.has_u(k) || self.has_s(k)).unwrap_or(0)
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.has_s0() {
            parts.push("S0".to_string());
        }
        for k in 1..=Self::MAX_LEVEL {
            if self.has_u(k) {
                parts.push(format!("U{k}"));
            }
        }
        for k in 1..=Self::MAX_LEVEL {
            if self.has_s(k) {
                parts.push(format!("S{k}"));
            }
        }
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut sel = Selection::empty();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let bad = || Error::InvalidConfig(format!("bad selection item `{item}`"));
            let (kind, level) = item.split_at(1);
            let level: usize = level.parse().map_err(|_| bad())?;
            sel = match (kind, level) {
                ("S" | "s", 0) => sel.with_s0(),
                (_, 0) => return Err(bad()),
                (_, l) if l > Self::MAX_LEVEL => return Err(bad()),
                ("U" | "u", l) => sel.with_u(l),
                ("S" | "s", l) => sel.with_s(l),
                _ => return Err(bad()),
            };
        }
        Ok(sel)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterConfig {
    pub depth: usize,
    pub level_bases: Vec<Basis>,
    pub boundary: Boundary,
    pub decimate: usize,
    pub variant: Variant,
    pub selection: Selection,
    pub smooth_with: SmoothWith,
    /// Whether the `Um -> Sm` smoothing convolution also decimates.
    pub decimate_smoothing: bool,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        ScatterConfig {
            depth: 3,
            level_bases: vec![Basis::Bior11, Basis::Bior22, Basis::Bior13],
            boundary: Boundary::Symmetric,
            decimate: 2,
            variant: Variant::Improved,
            selection: Selection::modulus(3),
            smooth_with: SmoothWith::First,
            decimate_smoothing: true,
        }
    }
}

impl ScatterConfig {
    /// Same basis at every level.
    pub fn uniform(basis: Basis, depth: usize, variant: Variant) -> Self {
        ScatterConfig {
            depth,
            level_bases: vec![basis; depth],
            variant,
            selection: Selection::modulus(depth),
            ..ScatterConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > Selection::MAX_LEVEL {
            return Err(Error::InvalidConfig(format!(
                "depth must be in 1..={}, got {}",
                Selection::MAX_LEVEL,
                self.depth
            )));
        }
        if self.level_bases.len() != self.depth {
            return Err(Error::InvalidConfig(format!(
                "{} level bases for depth {}",
                self.level_bases.len(),
                self.depth
            )));
        }
        if self.decimate == 0 {
            return Err(Error::InvalidConfig("decimation factor must be >= 1".into()));
        }
        Ok(())
    }

    fn smoothing_decimation(&self) -> usize {
        if self.decimate_smoothing {
            self.decimate
        } else {
            1
        }
    }

    /// (width, height) of S0 and of `(Uk, Sk)` for k = 1..=depth.
    pub fn plane_dims(&self, width: usize, height: usize) -> (Dims, Vec<(Dims, Dims)>) {
        let d = self.decimate;
        let ds = self.smoothing_decimation();
        let s0 = (decimated_len(width, d), decimated_len(height, d));
        let mut levels = Vec::with_capacity(self.depth);
        let mut cur = (width, height);
        for _ in 0..self.depth {
            cur = (decimated_len(cur.0, d), decimated_len(cur.1, d));
            let s = (decimated_len(cur.0, ds), decimated_len(cur.1, ds));
            levels.push((cur, s));
        }
        (s0, levels)
    }
}

pub type Dims = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterOutput {
    pub s0: ImagePlane,
    pub u_levels: Vec<ImagePlane>,
    pub s_levels: Vec<ImagePlane>,
    pub config: ScatterConfig,
}

/// Per-level kernels for one configuration.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub scale: Vec<Kernel2D>,
    pub wavelet: Vec<Kernel2D>,
}

impl KernelSet {
    pub fn new(bases: &[Basis]) -> Self {
        let scale = bases.iter().map(|&b| make_kernel2d(filter_pair(b), KernelKind::Scale).unit_dc()).collect();
        let wavelet = bases.iter().map(|&b| make_kernel2d(filter_pair(b), KernelKind::WaveletDiagonal)).collect();
        KernelSet { scale, wavelet }
    }
}

/// A validated configuration with its kernels built once, for repeated use.
#[derive(Debug, Clone)]
pub struct Scatterer {
    config: ScatterConfig,
    kernels: KernelSet,
}

impl Scatterer {
    pub fn new(config: ScatterConfig) -> Result<Self> {
        config.validate()?;
        let kernels = KernelSet::new(&config.level_bases);
        Ok(Scatterer { config, kernels })
    }

    pub fn config(&self) -> &ScatterConfig {
        &self.config
    }

    pub fn run(&self, plane: &ImagePlane) -> Result<ScatterOutput> {
        match self.config.variant {
            Variant::Classic => self.classic(plane),
            Variant::Improved => self.improved(plane),
        }
    }

    /// Scatters and flattens the configured selection.
    pub fn features(&self, plane: &ImagePlane) -> Result<Vec<f64>> {
        let out = self.run(plane)?;
        feature_vector(&out, self.config.selection)
    }

    fn conv(&self, plane: &ImagePlane, kernel: &Kernel2D, decimate: usize) -> Result<ImagePlane> {
        conv2_decimated(plane, kernel, self.config.boundary, decimate)
    }

    fn classic(&self, x: &ImagePlane) -> Result<ScatterOutput> {
        let c = &self.config;
        let k = &self.kernels;
        let ds = c.smoothing_decimation();
        let s0 = self.conv(x, &k.scale[0], c.decimate)?;
        let mut u_levels: Vec<ImagePlane> = Vec::with_capacity(c.depth);
        let mut s_levels = Vec::with_capacity(c.depth);
        for n in 0..c.depth {
            let input = if n == 0 { x } else { &u_levels[n - 1] };
            let u = self.conv(input, &k.wavelet[n], c.decimate)?.abs();
            s_levels.push(self.conv(&u, &k.scale[n], ds)?);
            u_levels.push(u);
        }
        Ok(ScatterOutput { s0, u_levels, s_levels, config: c.clone() })
    }

    fn improved(&self, x: &ImagePlane) -> Result<ScatterOutput> {
        let c = &self.config;
        let k = &self.kernels;
        let ds = c.smoothing_decimation();
        let s0 = self.conv(x, &k.scale[0], c.decimate)?;
        let mut u_levels = Vec::with_capacity(c.depth);
        let mut s_levels = Vec::with_capacity(c.depth);
        // `low` holds L(m-1); L1 = |x * phi_1| = |S0|.
        let mut low: Option<ImagePlane> = None;
        for m in 0..c.depth {
            let input = low.as_ref().unwrap_or(x);
            let u = self.conv(input, &k.wavelet[m], c.decimate)?.abs();
            let smooth = match c.smooth_with {
                SmoothWith::First => &k.scale[0],
                SmoothWith::Last => &k.scale[m],
            };
            s_levels.push(self.conv(&u, smooth, ds)?);
            u_levels.push(u);
            if m + 1 < c.depth {
                low = Some(if m == 0 { s0.abs() } else { self.conv(input, &k.scale[m], c.decimate)?.abs() });
            }
        }
        Ok(ScatterOutput { s0, u_levels, s_levels, config: c.clone() })
    }
}

/// Classic cascade. `config.variant` must be `Classic`.
pub fn scatter_classic(plane: &ImagePlane, config: &ScatterConfig) -> Result<ScatterOutput> {
    if config.variant != Variant::Classic {
        return Err(Error::InvalidConfig("scatter_classic needs variant=classic".into()));
    }
    Scatterer::new(config.clone())?.run(plane)
}

/// Improved cascade. `config.variant` must be `Improved`.
pub fn scatter_improved(plane: &ImagePlane, config: &ScatterConfig) -> Result<ScatterOutput> {
    if config.variant != Variant::Improved {
        return Err(Error::InvalidConfig("scatter_improved needs variant=improved".into()));
    }
    Scatterer::new(config.clone())?.run(plane)
}

/// Dispatches on `config.variant`.
pub fn scatter(plane: &ImagePlane, config: &ScatterConfig) -> Result<ScatterOutput> {
    Scatterer::new(config.clone())?.run(plane)
}
