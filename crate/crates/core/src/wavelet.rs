//! Biorthogonal (CDF spline) decomposition filter pairs and the separable 2D
//! kernels built from them.
//!
//! Coefficients are the decomposition filters of the Cohen-Daubechies-Feauveau
//! spline family, normalized so that `sum(h) = sqrt(2)`. They were obtained by
//! expanding `((1 + z) / 2)^Nd * sum_{k<K} C(K-1+k, k) ((2 - z - 1/z) / 4)^k`
//! with `K = (Nr + Nd) / 2` in exact rational arithmetic and scaling by
//! `sqrt(2)`. The high-pass filter is the alternating flip of the matching
//! synthesis low-pass `sqrt(2) * ((1 + z) / 2)^Nr`.
//!
//! Filters are stored with minimal support (no zero padding). Every filter is
//! applied with its alignment origin at index `(len - 1) / 2`: the center tap
//! for odd lengths, the left one of the two center taps for even lengths.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const FRAC_1_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// The supported biorthogonal bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    Bior11,
    Bior22,
    Bior13,
    Bior26,
}

impl Basis {
    pub const ALL: [Basis; 4] = [Basis::Bior11, Basis::Bior22, Basis::Bior13, Basis::Bior26];

    pub fn name(self) -> &'static str {
        match self {
            Basis::Bior11 => "bior1.1",
            Basis::Bior22 => "bior2.2",
            Basis::Bior13 => "bior1.3",
            Basis::Bior26 => "bior2.6",
        }
    }

    /// Stable numeric id used in binary file headers.
    pub fn id(self) -> u8 {
        match self {
            Basis::Bior11 => 0,
            Basis::Bior22 => 1,
            Basis::Bior13 => 2,
            Basis::Bior26 => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Basis> {
        Basis::ALL.into_iter().find(|b| b.id() == id)
    }

    /// (reconstruction order, decomposition order)
    pub fn orders(self) -> (u32, u32) {
        match self {
            Basis::Bior11 => (1, 1),
            Basis::Bior22 => (2, 2),
            Basis::Bior13 => (1, 3),
            Basis::Bior26 => (2, 6),
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Basis::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownBasis(s.to_string()))
    }
}

/// Decomposition low-pass `h` and high-pass `g` of one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    basis: Basis,
    h: Vec<f64>,
    g: Vec<f64>,
}

impl FilterPair {
    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn basis_name(&self) -> &'static str {
        self.basis.name()
    }

    /// Low-pass decomposition filter.
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// High-pass decomposition filter.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// Synthesis low-pass dual of `h`: `sqrt(2) * ((1 + z) / 2)^Nr`.
    pub fn synthesis_lowpass(&self) -> Vec<f64> {
        let (nr, _) = self.basis.orders();
        let mut p = vec![1.0];
        for _ in 0..nr {
            p = poly_mul(&p, &[0.5, 0.5]);
        }
        p.iter().map(|c| c * SQRT2).collect()
    }
}

fn raw_pair(basis: Basis) -> (Vec<f64>, Vec<f64>) {
    let scale = |taps: &[f64]| taps.iter().map(|t| t * SQRT2).collect::<Vec<_>>();
    match basis {
        Basis::Bior11 => (vec![FRAC_1_SQRT2, FRAC_1_SQRT2], vec![FRAC_1_SQRT2, -FRAC_1_SQRT2]),
        Basis::Bior13 => {
            (scale(&[-1.0 / 16.0, 1.0 / 16.0, 0.5, 0.5, 1.0 / 16.0, -1.0 / 16.0]), vec![FRAC_1_SQRT2, -FRAC_1_SQRT2])
        }
        Basis::Bior22 => (scale(&[-1.0 / 8.0, 0.25, 0.75, 0.25, -1.0 / 8.0]), scale(&[0.25, -0.5, 0.25])),
        Basis::Bior26 => (
            scale(&[
                -5.0 / 1024.0,
                5.0 / 512.0,
                17.0 / 512.0,
                -39.0 / 512.0,
                -123.0 / 1024.0,
                81.0 / 256.0,
                175.0 / 256.0,
                81.0 / 256.0,
                -123.0 / 1024.0,
                -39.0 / 512.0,
                17.0 / 512.0,
                5.0 / 512.0,
                -5.0 / 1024.0,
            ]),
            scale(&[0.25, -0.5, 0.25]),
        ),
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn check_pair(pair: &FilterPair) -> Result<()> {
    let fail = |what: String| Error::FilterCheck { basis: pair.basis.name(), what };
    let sum_h: f64 = pair.h.iter().sum();
    if (sum_h - SQRT2).abs() > 1e-12 {
        return Err(fail(format!("sum(h) = {sum_h}")));
    }
    let sum_g: f64 = pair.g.iter().sum();
    if sum_g.abs() > 1e-12 {
        return Err(fail(format!("sum(g) = {sum_g}")));
    }

    // Biorthogonality of the low-pass pair: h * h~ must be half-band, with
    // 1 at its center and 0 at every even offset from it.
    let dual = pair.synthesis_lowpass();
    let p = poly_mul(&pair.h, &dual);
    if p.len().is_multiple_of(2) {
        return Err(fail("low-pass product has even length".into()));
    }
    let c = p.len() / 2;
    for (i, v) in p.iter().enumerate() {
        if i.abs_diff(c) % 2 != 0 {
            continue;
        }
        let want = if i == c { 1.0 } else { 0.0 };
        if (v - want).abs() > 1e-10 {
            return Err(fail(format!("half-band identity broken at offset {i}")));
        }
    }

    // Alias cancellation: g is the alternating flip of the synthesis low-pass.
    if pair.g.len() != dual.len() {
        return Err(fail("high-pass length differs from the dual low-pass".into()));
    }
    let n = dual.len();
    for (k, gk) in pair.g.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        if (gk - sign * dual[n - 1 - k]).abs() > 1e-10 {
            return Err(fail(format!("g[{k}] is not the alternating flip of the dual")));
        }
    }
    Ok(())
}

fn table() -> &'static [FilterPair; 4] {
    static TABLE: OnceLock<[FilterPair; 4]> = OnceLock::new();
    TABLE.get_or_init(|| {
        Basis::ALL.map(|basis| {
            let (h, g) = raw_pair(basis);
            let pair = FilterPair { basis, h, g };
            if let Err(e) = check_pair(&pair) {
                panic!("frozen filter table is inconsistent: {e}");
            }
            pair
        })
    })
}

/// Returns the decomposition filter pair of `basis`.
pub fn filter_pair(basis: Basis) -> &'static FilterPair {
    &table()[basis.id() as usize]
}

/// Looks a basis up by name and returns its filter pair.
pub fn make_filter_pair(name: &str) -> Result<FilterPair> {
    let basis: Basis = name.parse()?;
    Ok(filter_pair(basis).clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Scale,
    WaveletDiagonal,
}

/// A separable square kernel `taps[i][j] = f[i] * f[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    kind: KernelKind,
    basis: Basis,
    factor: Vec<f64>,
    taps: Vec<f64>,
    dc_gain: f64,
}

impl Kernel2D {
    fn from_factor(basis: Basis, kind: KernelKind, factor: Vec<f64>) -> Self {
        let taps: Vec<f64> = factor.iter().flat_map(|a| factor.iter().map(move |b| a * b)).collect();
        let dc_gain = taps.iter().sum();
        Kernel2D { kind, basis, factor, taps, dc_gain }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Side length.
    pub fn side(&self) -> usize {
        self.factor.len()
    }

    /// Index of the tap aligned with the output sample.
    pub fn origin(&self) -> usize {
        (self.factor.len() - 1) / 2
    }

    /// The 1D factor applied along both axes.
    pub fn factor(&self) -> &[f64] {
        &self.factor
    }

    /// Row-major `side x side` taps.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn tap(&self, row: usize, col: usize) -> f64 {
        self.taps[row * self.side() + col]
    }

    pub fn dc_gain(&self) -> f64 {
        self.dc_gain
    }

    /// Rescales the kernel so its taps sum to one. Zero-sum (wavelet)
    /// kernels are returned unchanged.
    pub fn unit_dc(&self) -> Kernel2D {
        let s: f64 = self.factor.iter().sum();
        if s.abs() < 1e-12 {
            return self.clone();
        }
        let factor = self.factor.iter().map(|f| f / s).collect();
        Kernel2D::from_factor(self.basis, self.kind, factor)
    }
}

/// Outer-product kernel of `pair`: `h (x) h` for scale, `g (x) g` for the
/// diagonal wavelet.
pub fn make_kernel2d(pair: &FilterPair, kind: KernelKind) -> Kernel2D {
    let factor = match kind {
        KernelKind::Scale => pair.h.clone(),
        KernelKind::WaveletDiagonal => pair.g.clone(),
    };
    Kernel2D::from_factor(pair.basis, kind, factor)
}

/// Writes every filter as plain decimal text, 17 significant digits, one
/// coefficient per line, each table introduced by a `# <basis> <h|g>` line.
pub fn dump_filters(out: &mut impl std::io::Write) -> std::io::Result<()> {
    for pair in table() {
        for (name, taps) in [("h", &pair.h), ("g", &pair.g)] {
            writeln!(out, "# {} {}", pair.basis, name)?;
            for t in taps.iter() {
                writeln!(out, "{t:.16e}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact rational expansion of the CDF analysis low-pass, computed
    /// independently from the frozen table.
    fn cdf_lowpass_rational(nr: u32, nd: u32) -> Vec<(i64, i64)> {
        fn mul(a: &[(i64, i64)], b: &[(i64, i64)]) -> Vec<(i64, i64)> {
            let mut out = vec![(0i64, 1i64); a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] = add(out[i + j], (x.0 * y.0, x.1 * y.1));
                }
            }
            out
        }
        fn gcd(a: i64, b: i64) -> i64 {
            if b == 0 {
                a.abs()
            } else {
                gcd(b, a % b)
            }
        }
        fn add(a: (i64, i64), b: (i64, i64)) -> (i64, i64) {
            let n = a.0 * b.1 + b.0 * a.1;
            let d = a.1 * b.1;
            let g = gcd(n, d).max(1);
            (n / g, d / g)
        }
        let k = (nr + nd) / 2;
        let mut p = vec![(1, 1)];
        for _ in 0..nd {
            p = mul(&p, &[(1, 2), (1, 2)]);
        }
        let width = 2 * k as usize - 1;
        let mut s = vec![(0, 1); width];
        for j in 0..k {
            let mut t = vec![(1, 1)];
            for _ in 0..j {
                t = mul(&t, &[(-1, 4), (1, 2), (-1, 4)]);
            }
            let binom = (1..=j as i64).fold(1i64, |acc, i| acc * (k as i64 - 1 + i) / i);
            let off = (k - 1 - j) as usize;
            for (i, c) in t.iter().enumerate() {
                s[off + i] = add(s[off + i], (binom * c.0, c.1));
            }
        }
        let mut h = mul(&p, &s);
        while h.first().is_some_and(|c| c.0 == 0) {
            h.remove(0);
        }
        while h.last().is_some_and(|c| c.0 == 0) {
            h.pop();
        }
        h
    }

    #[test]
    fn frozen_lowpass_matches_rational_construction() {
        for basis in Basis::ALL {
            let (nr, nd) = basis.orders();
            let want = cdf_lowpass_rational(nr, nd);
            let got = filter_pair(basis).h();
            assert_eq!(got.len(), want.len(), "{basis}");
            for (g, (n, d)) in got.iter().zip(want) {
                let w = SQRT2 * n as f64 / d as f64;
                assert!((g - w).abs() < 1e-15, "{basis}: {g} vs {w}");
            }
        }
    }

    #[test]
    fn bior11_by_hand() {
        let p = make_filter_pair("bior1.1").unwrap();
        let r = FRAC_1_SQRT2;
        assert_eq!(p.h(), &[r, r]);
        assert_eq!(p.g(), &[r, -r]);
        // 2-tap PR: h.h~ = 1, h.g~ = 0 with the Haar duals
        assert!((p.h()[0] * r + p.h()[1] * r - 1.0).abs() < 1e-15);
        assert!((p.g()[0] * r + p.g()[1] * r).abs() < 1e-15);
    }

    #[test]
    fn sums_and_lengths() {
        let lens = [(Basis::Bior11, 2), (Basis::Bior22, 5), (Basis::Bior13, 6), (Basis::Bior26, 13)];
        for (basis, len) in lens {
            let p = filter_pair(basis);
            assert_eq!(p.h().len(), len);
            assert!((p.h().iter().sum::<f64>() - SQRT2).abs() < 1e-12);
            assert!(p.g().iter().sum::<f64>().abs() < 1e-12);
            assert!(check_pair(p).is_ok());
        }
    }

    #[test]
    fn lowpass_is_symmetric() {
        for basis in Basis::ALL {
            let h = filter_pair(basis).h();
            let n = h.len();
            for i in 0..n {
                assert_eq!(h[i], h[n - 1 - i], "{basis}");
            }
        }
    }

    #[test]
    fn corrupted_pair_fails_self_check() {
        let mut p = filter_pair(Basis::Bior22).clone();
        p.h[0] += 1e-6;
        p.h[4] -= 1e-6;
        assert!(matches!(check_pair(&p), Err(Error::FilterCheck { .. })));
    }

    #[test]
    fn unknown_basis_names_the_input() {
        match make_filter_pair("db4") {
            Err(Error::UnknownBasis(name)) => assert_eq!(name, "db4"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(make_filter_pair("bior2.6").unwrap(), make_filter_pair("bior2.6").unwrap());
    }

    #[test]
    fn bior11_kernels() {
        let p = filter_pair(Basis::Bior11);
        let s = make_kernel2d(p, KernelKind::Scale);
        for t in s.taps() {
            assert!((t - 0.5).abs() < 1e-15);
        }
        assert!((s.dc_gain() - 2.0).abs() < 1e-15);
        let u = s.unit_dc();
        assert!((u.dc_gain() - 1.0).abs() < 1e-15);
        assert!(u.taps().iter().all(|t| (t - 0.25).abs() < 1e-15));

        let w = make_kernel2d(p, KernelKind::WaveletDiagonal);
        let want = [0.5, -0.5, -0.5, 0.5];
        for (t, w) in w.taps().iter().zip(want) {
            assert!((t - w).abs() < 1e-15);
        }
        assert_eq!(w.dc_gain(), 0.0);
    }

    #[test]
    fn kernels_are_outer_products() {
        for basis in Basis::ALL {
            let p = filter_pair(basis);
            let s = make_kernel2d(p, KernelKind::Scale);
            let w = make_kernel2d(p, KernelKind::WaveletDiagonal);
            for i in 0..s.side() {
                for j in 0..s.side() {
                    assert!((s.tap(i, j) - p.h()[i] * p.h()[j]).abs() <= 1e-15);
                }
            }
            for i in 0..w.side() {
                for j in 0..w.side() {
                    assert!((w.tap(i, j) - p.g()[i] * p.g()[j]).abs() <= 1e-15);
                }
            }
            assert!(w.dc_gain().abs() < 1e-12);
            assert!((s.unit_dc().dc_gain() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dump_has_17_significant_digits() {
        let mut buf = Vec::new();
        dump_filters(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first = text.lines().nth(1).unwrap();
        assert_eq!(first, "7.0710678118654757e-1");
        let values = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(values, 2 + 2 + 6 + 2 + 5 + 3 + 13 + 3);
    }
}
