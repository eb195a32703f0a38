//! Analytic floating-point operation counts for convolution, pooling,
//! fully-connected and ReLU layers, whole-network totals, and the
//! accounting used for the scattering front end.
//!
//! Counting rules (all exact integers):
//!
//! * conv: `M1 * M2 * (K^2 * C_in + bias) * C_out`
//! * fc: `(I + bias) * O`
//! * average pool: `C_in * W_in * H_in * K^2` over the pool *input* dims
//! * max pool: 0
//! * ReLU: one op per element
//!
//! Spatial sizes propagate with `floor((n - D(K-1) - 1 + 2P) / S) + 1`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scattering::{decimated_len, KernelSet, ScatterConfig, SmoothWith, Variant};

/// Counts above this are rejected as overflow.
const LIMIT: u64 = i64::MAX as u64;

fn mul(factors: &[u64]) -> Result<u64> {
    factors.iter().try_fold(1u64, |acc, &f| acc.checked_mul(f)).filter(|&v| v <= LIMIT).ok_or(Error::Overflow)
}

fn add(a: u64, b: u64) -> Result<u64> {
    a.checked_add(b).filter(|&v| v <= LIMIT).ok_or(Error::Overflow)
}

/// Output side of a convolution or pooling window.
pub fn conv_out_size(n: u64, kernel: u64, padding: u64, stride: u64, dilation: u64) -> Result<u64> {
    if kernel == 0 || stride == 0 || dilation == 0 {
        return Err(Error::InvalidLayer(format!(
            "kernel, stride and dilation must be >= 1 (K={kernel}, S={stride}, D={dilation})"
        )));
    }
    let span = dilation as i128 * (kernel as i128 - 1) + 1;
    let numer = n as i128 + 2 * padding as i128 - span;
    if numer < 0 {
        return Err(Error::InvalidLayer(format!(
            "window of span {span} (K={kernel}, D={dilation}, P={padding}) exceeds input side {n}"
        )));
    }
    Ok((numer / stride as i128) as u64 + 1)
}

pub fn conv_flops(m1: u64, m2: u64, kernel: u64, c_in: u64, c_out: u64, bias: bool) -> Result<u64> {
    let per_out = add(mul(&[kernel, kernel, c_in])?, bias as u64)?;
    mul(&[m1, m2, per_out, c_out])
}

pub fn fc_flops(inputs: u64, outputs: u64, bias: bool) -> Result<u64> {
    mul(&[add(inputs, bias as u64)?, outputs])
}

pub fn avgpool_flops(c_in: u64, w_in: u64, h_in: u64, kernel: u64) -> Result<u64> {
    mul(&[c_in, w_in, h_in, kernel, kernel])
}

/// Max pooling is counted as free.
pub fn maxpool_flops() -> u64 {
    0
}

pub fn relu_flops(elements: u64) -> u64 {
    elements
}

/// Closed form for a chain of FC layers with ReLUs between them:
/// `I*O1 + O1 + (O1+1)*O2 + O2 + (O2+1)*O3 + ...`.
///
/// This is an unbiased first layer, biased later layers, and one ReLU after
/// every hidden layer. `network_flops` over [`NetworkSpec::mlp`] biases the
/// first layer too and therefore reports `O1` more.
pub fn mlp_flops_closed_form(inputs: u64, outputs: &[u64]) -> Result<u64> {
    let Some((&first, rest)) = outputs.split_first() else {
        return Ok(0);
    };
    let mut total = mul(&[inputs, first])?;
    let mut prev = first;
    for &o in rest {
        total = add(total, prev)?;
        total = add(total, mul(&[prev + 1, o])?)?;
        prev = o;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub kernel: u64,
    pub padding: u64,
    pub stride: u64,
    pub dilation: u64,
}

impl Window {
    pub fn new(kernel: u64) -> Self {
        Window { kernel, padding: 0, stride: 1, dilation: 1 }
    }

    fn out(&self, n: u64) -> Result<u64> {
        conv_out_size(n, self.kernel, self.padding, self.stride, self.dilation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LayerSpec {
    Conv2d {
        window: Window,
        /// Checked against the incoming channel count when given.
        c_in: Option<u64>,
        c_out: u64,
        bias: bool,
    },
    AvgPool(Window),
    MaxPool(Window),
    Fc {
        /// Checked against the flattened incoming size when given.
        inputs: Option<u64>,
        outputs: u64,
        bias: bool,
    },
    Relu {
        elements: Option<u64>,
    },
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::AvgPool(_) => "avgpool",
            LayerSpec::MaxPool(_) => "maxpool",
            LayerSpec::Fc { .. } => "fc",
            LayerSpec::Relu { .. } => "relu",
        }
    }

    pub fn conv(kernel: u64, c_out: u64) -> Self {
        LayerSpec::Conv2d { window: Window::new(kernel), c_in: None, c_out, bias: true }
    }

    pub fn fc(outputs: u64) -> Self {
        LayerSpec::Fc { inputs: None, outputs, bias: true }
    }

    pub fn relu() -> Self {
        LayerSpec::Relu { elements: None }
    }
}

/// Activation shape between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Spatial { width: u64, height: u64, channels: u64 },
    Flat(u64),
}

impl Shape {
    pub fn elements(&self) -> Result<u64> {
        match *self {
            Shape::Spatial { width, height, channels } => mul(&[width, height, channels]),
            Shape::Flat(n) => Ok(n),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Spatial { width, height, channels } => write!(f, "{width}x{height}x{channels}"),
            Shape::Flat(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input: Shape,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn image(width: u64, height: u64, channels: u64) -> Self {
        NetworkSpec { input: Shape::Spatial { width, height, channels }, layers: Vec::new() }
    }

    pub fn layer(mut self, layer: LayerSpec) -> Self {
        self.layers.push(layer);
        self
    }

    /// Conv 7x7 (channels kept) -> ReLU -> avgpool 5x5 -> FC 128 -> ReLU ->
    /// FC 64, stride 1 and no padding throughout, biases on.
    pub fn reference_cnn(width: u64, height: u64) -> Self {
        NetworkSpec::image(width, height, 3)
            .layer(LayerSpec::conv(7, 3))
            .layer(LayerSpec::relu())
            .layer(LayerSpec::AvgPool(Window::new(5)))
            .layer(LayerSpec::fc(128))
            .layer(LayerSpec::relu())
            .layer(LayerSpec::fc(64))
    }

    /// FC/ReLU chain over `dims = [input, h1, ..., classes]`, biases on
    /// every layer, no ReLU after the last layer.
    pub fn mlp(dims: &[usize]) -> Self {
        let mut spec =
            NetworkSpec { input: Shape::Flat(dims.first().copied().unwrap_or(0) as u64), layers: Vec::new() };
        for (i, &o) in dims.iter().enumerate().skip(1) {
            spec.layers.push(LayerSpec::fc(o as u64));
            if i + 1 < dims.len() {
                spec.layers.push(LayerSpec::relu());
            }
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerCount {
    pub index: usize,
    pub label: String,
    pub output: Shape,
    pub flops: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlopsReport {
    pub per_layer: Vec<LayerCount>,
    pub total: u64,
    pub theoretical_time_s: Option<f64>,
}

impl FlopsReport {
    fn from_counts(per_layer: Vec<LayerCount>) -> Result<Self> {
        let total = per_layer.iter().try_fold(0u64, |acc, l| add(acc, l.flops))?;
        Ok(FlopsReport { per_layer, total, theoretical_time_s: None })
    }

    /// Concatenates two reports, renumbering the second.
    pub fn chain(mut self, other: FlopsReport) -> Result<Self> {
        let base = self.per_layer.len();
        self.per_layer.extend(other.per_layer.into_iter().map(|mut l| {
            l.index += base;
            l
        }));
        Self::from_counts(self.per_layer)
    }

    pub fn with_peak(mut self, peak_flops: f64) -> Result<Self> {
        self.theoretical_time_s = Some(theoretical_time(&self, peak_flops)?);
        Ok(self)
    }

    pub fn write_table(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "{:>5}  {:<24} {:>18} {:>18}", "layer", "kind", "output", "flops")?;
        for l in &self.per_layer {
            writeln!(out, "{:>5}  {:<24} {:>18} {:>18}", l.index, l.label, l.output.to_string(), l.flops)?;
        }
        writeln!(out, "total {} FLOPs ({:.4} GFLOPs)", self.total, self.total as f64 / 1e9)?;
        if let Some(t) = self.theoretical_time_s {
            writeln!(out, "theoretical time {:.6} ms", t * 1e3)?;
        }
        Ok(())
    }

    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "kind", "output", "flops"])?;
        for l in &self.per_layer {
            w.write_record([l.index.to_string(), l.label.clone(), l.output.to_string(), l.flops.to_string()])?;
        }
        w.write_record(["total".into(), String::new(), String::new(), self.total.to_string()])?;
        if let Some(t) = self.theoretical_time_s {
            w.write_record(["theoretical_time_s".into(), String::new(), String::new(), format!("{t:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn layer_flops(layer: &LayerSpec, shape: Shape) -> Result<(u64, Shape)> {
    match *layer {
        LayerSpec::Conv2d { window, c_in, c_out, bias } => {
            let Shape::Spatial { width, height, channels } = shape else {
                return Err(Error::InvalidLayer("convolution after flattening".into()));
            };
            if let Some(c) = c_in {
                if c != channels {
                    return Err(Error::InvalidLayer(format!("C_in={c} but {channels} channels arrive")));
                }
            }
            if c_out == 0 {
                return Err(Error::InvalidLayer("C_out must be >= 1".into()));
            }
            let m1 = window.out(width)?;
            let m2 = window.out(height)?;
            let flops = conv_flops(m1, m2, window.kernel, channels, c_out, bias)?;
            Ok((flops, Shape::Spatial { width: m1, height: m2, channels: c_out }))
        }
        LayerSpec::AvgPool(window) | LayerSpec::MaxPool(window) => {
            let Shape::Spatial { width, height, channels } = shape else {
                return Err(Error::InvalidLayer("pooling after flattening".into()));
            };
            let out = Shape::Spatial { width: window.out(width)?, height: window.out(height)?, channels };
            let flops = match layer {
                LayerSpec::AvgPool(_) => avgpool_flops(channels, width, height, window.kernel)?,
                _ => maxpool_flops(),
            };
            Ok((flops, out))
        }
        LayerSpec::Fc { inputs, outputs, bias } => {
            let n = shape.elements()?;
            if let Some(i) = inputs {
                if i != n {
                    return Err(Error::InvalidLayer(format!("declared {i} inputs but {n} arrive")));
                }
            }
            if n == 0 || outputs == 0 {
                return Err(Error::InvalidLayer("I and O must be >= 1".into()));
            }
            Ok((fc_flops(n, outputs, bias)?, Shape::Flat(outputs)))
        }
        LayerSpec::Relu { elements } => {
            let n = shape.elements()?;
            if let Some(e) = elements {
                if e != n {
                    return Err(Error::InvalidLayer(format!("declared {e} elements but {n} arrive")));
                }
            }
            Ok((relu_flops(n), shape))
        }
    }
}

/// Threads the input shape through every layer and counts each one.
pub fn network_flops(spec: &NetworkSpec) -> Result<FlopsReport> {
    let mut shape = spec.input;
    if shape.elements()? == 0 {
        return Err(Error::InvalidLayer("empty input".into()));
    }
    let mut per_layer = Vec::with_capacity(spec.layers.len());
    for (index, layer) in spec.layers.iter().enumerate() {
        let (flops, next) = layer_flops(layer, shape).map_err(|e| match e {
            Error::Overflow => Error::Overflow,
            Error::InvalidLayer(reason) => Error::Layer { layer: index, kind: layer.kind(), reason },
            other => Error::Layer { layer: index, kind: layer.kind(), reason: other.to_string() },
        })?;
        per_layer.push(LayerCount { index, label: layer.kind().to_string(), output: next, flops });
        shape = next;
    }
    FlopsReport::from_counts(per_layer)
}

pub fn theoretical_time(report: &FlopsReport, peak_flops: f64) -> Result<f64> {
    if !(peak_flops.is_finite() && peak_flops > 0.0) {
        return Err(Error::NonPositive { what: "peak FLOPS", value: peak_flops });
    }
    Ok(report.total as f64 / peak_flops)
}

/// Counts exactly the convolutions and modulus operations the scattering
/// cascade performs for a `width x height` input: each convolution as
/// `conv_flops(out_w, out_h, side, 1, 1, no bias)`, each modulus as one op
/// per element.
pub fn scatter_flops(config: &ScatterConfig, width: usize, height: usize) -> Result<FlopsReport> {
    config.validate()?;
    let kernels = KernelSet::new(&config.level_bases);
    let d = config.decimate;
    let ds = if config.decimate_smoothing { d } else { 1 };
    let mut per_layer = Vec::new();
    let mut push = |label: String, dims: (usize, usize), flops: u64| {
        per_layer.push(LayerCount {
            index: per_layer.len(),
            label,
            output: Shape::Spatial { width: dims.0 as u64, height: dims.1 as u64, channels: 1 },
            flops,
        });
    };
    let down = |dims: (usize, usize), by: usize| (decimated_len(dims.0, by), decimated_len(dims.1, by));
    let conv = |dims: (usize, usize), side: usize| conv_flops(dims.0 as u64, dims.1 as u64, side as u64, 1, 1, false);
    let area = |dims: (usize, usize)| (dims.0 * dims.1) as u64;

    let input = (width, height);
    let s0 = down(input, d);
    push("S0 conv phi1".into(), s0, conv(s0, kernels.scale[0].side())?);
    let mut prev = input;
    for m in 0..config.depth {
        let u = down(prev, d);
        push(format!("U{} conv psi{}", m + 1, m + 1), u, conv(u, kernels.wavelet[m].side())?);
        push(format!("U{} modulus", m + 1), u, area(u));
        let smooth = match (config.variant, config.smooth_with) {
            (Variant::Improved, SmoothWith::First) => 0,
            _ => m,
        };
        let s = down(u, ds);
        push(format!("S{} conv phi{}", m + 1, smooth + 1), s, conv(s, kernels.scale[smooth].side())?);
        if config.variant == Variant::Improved && m + 1 < config.depth {
            if m > 0 {
                push(format!("L{} conv phi{}", m + 1, m + 1), u, conv(u, kernels.scale[m].side())?);
            }
            push(format!("L{} modulus", m + 1), u, area(u));
        }
        prev = u;
    }
    FlopsReport::from_counts(per_layer)
}

/// Scattering front end followed by the classifier MLP over `mlp_dims`
/// (`mlp_dims[0]` must equal the feature length).
pub fn pipeline_flops(config: &ScatterConfig, width: usize, height: usize, mlp_dims: &[usize]) -> Result<FlopsReport> {
    let features = crate::scattering::feature_len(config, width, height)?;
    if mlp_dims.first() != Some(&features) {
        return Err(Error::DimensionMismatch { expected: features, actual: mlp_dims.first().copied().unwrap_or(0) });
    }
    scatter_flops(config, width, height)?.chain(network_flops(&NetworkSpec::mlp(mlp_dims))?)
}

impl FromStr for NetworkSpec {
    type Err = Error;

    /// One layer per line, `kind key=value ...`; `#` starts a comment.
    ///
    /// ```text
    /// input w=1280 h=720 c=3        # or: input n=1036800
    /// conv2d k=7 p=0 s=1 d=1 cout=3 bias=1
    /// relu
    /// avgpool k=5
    /// fc out=128
    /// ```
    fn from_str(text: &str) -> Result<Self> {
        let mut input = None;
        let mut layers = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = no + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let syntax = |reason: String| Error::SpecSyntax { line, reason };
            let mut words = content.split_whitespace();
            let kind = words.next().unwrap_or_default();
            let mut kv = std::collections::BTreeMap::new();
            for w in words {
                let (k, v) = w.split_once('=').ok_or_else(|| syntax(format!("expected key=value, got `{w}`")))?;
                kv.insert(k.to_ascii_lowercase(), v.to_string());
            }
            let mut take = |key: &str| kv.remove(key);
            let num = |v: Option<String>, key: &str| -> Result<Option<u64>> {
                v.map(|s| s.parse::<u64>().map_err(|_| syntax(format!("`{key}` is not a count: `{s}`")))).transpose()
            };
            let flag = |v: Option<String>| -> Result<bool> {
                match v.as_deref() {
                    None | Some("1" | "true" | "yes") => Ok(true),
                    Some("0" | "false" | "no") => Ok(false),
                    Some(other) => Err(syntax(format!("bad bias flag `{other}`"))),
                }
            };
            let window = |take: &mut dyn FnMut(&str) -> Option<String>| -> Result<Window> {
                Ok(Window {
                    kernel: num(take("k"), "k")?.ok_or_else(|| syntax("missing k".into()))?,
                    padding: num(take("p"), "p")?.unwrap_or(0),
                    stride: num(take("s"), "s")?.unwrap_or(1),
                    dilation: num(take("d"), "d")?.unwrap_or(1),
                })
            };
            match kind {
                "input" => {
                    let shape = if let Some(n) = num(take("n"), "n")? {
                        Shape::Flat(n)
                    } else {
                        Shape::Spatial {
                            width: num(take("w"), "w")?.ok_or_else(|| syntax("missing w".into()))?,
                            height: num(take("h"), "h")?.ok_or_else(|| syntax("missing h".into()))?,
                            channels: num(take("c"), "c")?.unwrap_or(1),
                        }
                    };
                    input = Some(shape);
                }
                "conv2d" | "conv" => {
                    let w = window(&mut take)?;
                    layers.push(LayerSpec::Conv2d {
                        window: w,
                        c_in: num(take("cin"), "cin")?,
                        c_out: num(take("cout"), "cout")?.ok_or_else(|| syntax("missing cout".into()))?,
                        bias: flag(take("bias"))?,
                    });
                }
                "avgpool" => layers.push(LayerSpec::AvgPool(window(&mut take)?)),
                "maxpool" => layers.push(LayerSpec::MaxPool(window(&mut take)?)),
                "fc" | "linear" => layers.push(LayerSpec::Fc {
                    inputs: num(take("in"), "in")?,
                    outputs: num(take("out"), "out")?.ok_or_else(|| syntax("missing out".into()))?,
                    bias: flag(take("bias"))?,
                }),
                "relu" => layers.push(LayerSpec::Relu { elements: num(take("n"), "n")? }),
                other => return Err(syntax(format!("unknown layer kind `{other}`"))),
            }
            if let Some(k) = kv.keys().next() {
                return Err(syntax(format!("unknown key `{k}` for {kind}")));
            }
        }
        let input = input.ok_or(Error::SpecSyntax { line: 0, reason: "no `input` line".into() })?;
        Ok(NetworkSpec { input, layers })
    }
}
