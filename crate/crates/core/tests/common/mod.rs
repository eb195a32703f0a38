//! Brute-force reference implementations shared by the integration suites.
//! Everything here is written straight from the definitions: explicit
//! boundary extension, direct 2-D sums, no separability.
#![allow(dead_code)]

use iwsn::classifier::MlpModel;
use iwsn::scattering::{Boundary, ImagePlane, ScatterConfig, SmoothWith, Variant};
use iwsn::wavelet::{filter_pair, Basis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Plain row-major matrix, `v[row][col]`.
pub type Grid = Vec<Vec<f64>>;

pub fn grid(p: &ImagePlane) -> Grid {
    (0..p.height()).map(|y| (0..p.width()).map(|x| p.get(x, y)).collect()).collect()
}

pub fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ImagePlane {
    ImagePlane::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0)).unwrap()
}

fn extend(i: isize, n: usize, boundary: Boundary) -> usize {
    let n = n as isize;
    match boundary {
        Boundary::Periodic => i.rem_euclid(n) as usize,
        Boundary::Symmetric => {
            let mut i = i;
            while i < 0 || i >= n {
                i = if i < 0 { -i - 1 } else { 2 * n - 1 - i };
            }
            i as usize
        }
    }
}

/// `outer(a, b) / norm`.
fn outer(a: &[f64], b: &[f64], norm: f64) -> Grid {
    a.iter().map(|&x| b.iter().map(|&y| x * y / norm).collect()).collect()
}

/// Low-pass kernel scaled to unit DC gain.
pub fn scale_kernel(b: Basis) -> Grid {
    let h = filter_pair(b).h();
    let s: f64 = h.iter().sum();
    outer(h, h, s * s)
}

/// Diagonal high-pass kernel `g (x) g`.
pub fn wavelet_kernel(b: Basis) -> Grid {
    let g = filter_pair(b).g();
    outer(g, g, 1.0)
}

/// `out[i][j] = sum_{r,c} k[r][c] * x[d*i + r - o][d*j + c - o]`, `o = (len-1)/2`.
pub fn conv_direct(x: &Grid, k: &Grid, boundary: Boundary, d: usize) -> Grid {
    let (h, w) = (x.len(), x[0].len());
    let o = ((k.len() - 1) / 2) as isize;
    let (oh, ow) = (h.div_ceil(d), w.div_ceil(d));
    (0..oh)
        .map(|i| {
            (0..ow)
                .map(|j| {
                    let mut acc = 0.0;
                    for (r, row) in k.iter().enumerate() {
                        let y = extend((d * i) as isize + r as isize - o, h, boundary);
                        for (c, &kv) in row.iter().enumerate() {
                            let xx = extend((d * j) as isize + c as isize - o, w, boundary);
                            acc += kv * x[y][xx];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn abs(x: &Grid) -> Grid {
    x.iter().map(|r| r.iter().map(|v| v.abs()).collect()).collect()
}

pub struct Planes {
    pub s0: Grid,
    pub u: Vec<Grid>,
    pub s: Vec<Grid>,
}

/// Classic cascade: `S0 = x*phi1`, `U1 = |x*psi1|`, `Un = |U(n-1)*psin|`, `Sn = Un*phin`.
pub fn classic_oracle(x: &Grid, cfg: &ScatterConfig) -> Planes {
    let d = cfg.decimate;
    let ds = if cfg.decimate_smoothing { d } else { 1 };
    let b = cfg.boundary;
    let s0 = conv_direct(x, &scale_kernel(cfg.level_bases[0]), b, d);
    let mut u = Vec::new();
    let mut s = Vec::new();
    let mut prev = x.clone();
    for &basis in &cfg.level_bases {
        let un = abs(&conv_direct(&prev, &wavelet_kernel(basis), b, d));
        s.push(conv_direct(&un, &scale_kernel(basis), b, ds));
        prev = un.clone();
        u.push(un);
    }
    Planes { s0, u, s }
}

/// Improved cascade: `L0 = x`, `Lk = |L(k-1)*phik|`, `Um = |L(m-1)*psim|`,
/// `Sm = Um*phi1` (or `phim`), `S0 = x*phi1`.
pub fn improved_oracle(x: &Grid, cfg: &ScatterConfig) -> Planes {
    let d = cfg.decimate;
    let ds = if cfg.decimate_smoothing { d } else { 1 };
    let b = cfg.boundary;
    let bases = &cfg.level_bases;
    let s0 = conv_direct(x, &scale_kernel(bases[0]), b, d);
    let mut low = vec![x.clone()];
    for k in 1..bases.len() {
        low.push(abs(&conv_direct(&low[k - 1], &scale_kernel(bases[k - 1]), b, d)));
    }
    let mut u = Vec::new();
    let mut s = Vec::new();
    for m in 0..bases.len() {
        let um = abs(&conv_direct(&low[m], &wavelet_kernel(bases[m]), b, d));
        let smooth = match cfg.smooth_with {
            SmoothWith::First => bases[0],
            SmoothWith::Last => bases[m],
        };
        s.push(conv_direct(&um, &scale_kernel(smooth), b, ds));
        u.push(um);
    }
    Planes { s0, u, s }
}

pub fn oracle(x: &Grid, cfg: &ScatterConfig) -> Planes {
    match cfg.variant {
        Variant::Classic => classic_oracle(x, cfg),
        Variant::Improved => improved_oracle(x, cfg),
    }
}

/// `max|a - b| / max|b|`; 0 when both are identically zero.
pub fn rel_err(a: &ImagePlane, b: &Grid) -> f64 {
    let ga = grid(a);
    assert_eq!((ga.len(), ga[0].len()), (b.len(), b[0].len()), "plane shape");
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (ra, rb) in ga.iter().zip(b) {
        for (x, y) in ra.iter().zip(rb) {
            diff = diff.max((x - y).abs());
            scale = scale.max(y.abs());
        }
    }
    if diff == 0.0 {
        0.0
    } else {
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

/// Numeric gradient of the loss with respect to every parameter by central
/// differences, returned layer by layer as (weights, biases).
pub fn numeric_gradients(model: &MlpModel, x: &[f64], target: usize, h: f64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let loss = |m: &MlpModel| {
        let z = m.forward(x).unwrap();
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        lse - z[target]
    };
    let mut out = Vec::new();
    let mut m = model.clone();
    for l in 0..model.layers() {
        let mut gw = Vec::new();
        for i in 0..model.weights(l).len() {
            let orig = m.weights(l)[i];
            m.weights_mut(l)[i] = orig + h;
            let up = loss(&m);
            m.weights_mut(l)[i] = orig - h;
            let down = loss(&m);
            m.weights_mut(l)[i] = orig;
            gw.push((up - down) / (2.0 * h));
        }
        let mut gb = Vec::new();
        for i in 0..model.biases(l).len() {
            let orig = m.biases(l)[i];
            m.biases_mut(l)[i] = orig + h;
            let up = loss(&m);
            m.biases_mut(l)[i] = orig - h;
            let down = loss(&m);
            m.biases_mut(l)[i] = orig;
            gb.push((up - down) / (2.0 * h));
        }
        out.push((gw, gb));
    }
    out
}

/// Pre-activations of the hidden layers, computed directly.
pub fn hidden_preactivations(model: &MlpModel, x: &[f64]) -> Vec<Vec<f64>> {
    let mut a = x.to_vec();
    let mut out = Vec::new();
    for l in 0..model.layers() - 1 {
        let (ins, outs) = (model.dims()[l], model.dims()[l + 1]);
        let w = model.weights(l);
        let z: Vec<f64> =
            (0..outs).map(|k| model.biases(l)[k] + (0..ins).map(|j| a[j] * w[j * outs + k]).sum::<f64>()).collect();
        a = z.iter().map(|v| v.max(0.0)).collect();
        out.push(z);
    }
    out
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn grad_rel_err(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}
