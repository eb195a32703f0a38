use std::fmt;
use std::str::FromStr;

use super::ImagePlane;
use crate::error::{Error, Result};
use crate::wavelet::Kernel2D;

/// How samples outside the plane are synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Half-sample mirror: `x[-1] = x[0]`, `x[n] = x[n-1]`.
    #[default]
    Symmetric,
    /// Wrap-around: `x[-1] = x[n-1]`.
    Periodic,
}

impl Boundary {
    pub fn id(self) -> u8 {
        match self {
            Boundary::Symmetric => 0,
            Boundary::Periodic => 1,
        }
    }

    /// Maps a (possibly out-of-range) index into `0..n`. Valid for
    /// `-n <= i < 2n`.
    #[inline]
    pub fn resolve(self, i: isize, n: usize) -> usize {
        let n = n as isize;
        let r = match self {
            Boundary::Periodic => i.rem_euclid(n),
            Boundary::Symmetric => {
                if i < 0 {
                    -i - 1
                } else if i >= n {
                    2 * n - 1 - i
                } else {
                    i
                }
            }
        };
        r as usize
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Symmetric => "symmetric",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "symmetric" => Ok(Boundary::Symmetric),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidConfig(format!("unknown boundary mode `{other}`"))),
        }
    }
}

/// Output length of one axis after decimation.
pub fn decimated_len(n: usize, decimate: usize) -> usize {
    n.div_ceil(decimate)
}

/// Source index table for one axis: `table[i * side + b]` is the input index
/// read by tap `b` of output sample `i`. `None` when the kernel reaches past
/// one full boundary extension.
fn axis_table(n: usize, side: usize, origin: usize, decimate: usize, boundary: Boundary) -> Option<Vec<usize>> {
    let out = decimated_len(n, decimate);
    let reach_after = (out - 1) * decimate + (side - 1 - origin);
    if origin > n || reach_after > 2 * n - 1 {
        return None;
    }
    let mut table = Vec::with_capacity(out * side);
    for i in 0..out {
        let base = (i * decimate) as isize - origin as isize;
        for b in 0..side {
            table.push(boundary.resolve(base + b as isize, n));
        }
    }
    Some(table)
}

/// Correlates `plane` with the separable `kernel`, aligned at the kernel
/// origin, keeping every `decimate`-th sample per axis starting at index 0.
///
/// Output sample `(i, j)` is
/// `sum_{a,b} ext[i*d + a - o][j*d + b - o] * taps[a][b]`; the sum is
/// evaluated as a row pass followed by a column pass with taps accumulated
/// in ascending order, so results do not depend on threading.
pub fn conv2_decimated(
    plane: &ImagePlane,
    kernel: &Kernel2D,
    boundary: Boundary,
    decimate: usize,
) -> Result<ImagePlane> {
    if decimate == 0 {
        return Err(Error::InvalidConfig("decimation factor must be >= 1".into()));
    }
    let (w, h) = (plane.width(), plane.height());
    let side = kernel.side();
    let origin = kernel.origin();
    let too_large = || Error::KernelTooLarge { kernel: side, width: w, height: h };
    let cols = axis_table(w, side, origin, decimate, boundary).ok_or_else(too_large)?;
    let rows = axis_table(h, side, origin, decimate, boundary).ok_or_else(too_large)?;
    let (ow, oh) = (decimated_len(w, decimate), decimated_len(h, decimate));
    let f = kernel.factor();
    let src = plane.values();

    let mut tmp = vec![0.0; h * ow];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let dst = &mut tmp[y * ow..(y + 1) * ow];
        for (j, d) in dst.iter_mut().enumerate() {
            let idx = &cols[j * side..(j + 1) * side];
            let mut acc = 0.0;
            for (b, &x) in idx.iter().enumerate() {
                acc += row[x] * f[b];
            }
            *d = acc;
        }
    }

    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        let dst = &mut out[i * ow..(i + 1) * ow];
        let idx = &rows[i * side..(i + 1) * side];
        for (a, &y) in idx.iter().enumerate() {
            let fa = f[a];
            let srow = &tmp[y * ow..(y + 1) * ow];
            for (d, s) in dst.iter_mut().zip(srow) {
                *d += s * fa;
            }
        }
    }
    Ok(ImagePlane::from_raw(ow, oh, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::{filter_pair, make_kernel2d, Basis, KernelKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct 2D summation over an explicitly padded plane.
    fn brute(plane: &ImagePlane, k: &Kernel2D, boundary: Boundary, d: usize) -> ImagePlane {
        let (w, h) = (plane.width() as isize, plane.height() as isize);
        let pad = k.side() as isize;
        let pw = w + 2 * pad;
        let ph = h + 2 * pad;
        let mut ext = vec![0.0; (pw * ph) as usize];
        for y in -pad..h + pad {
            for x in -pad..w + pad {
                let (sx, sy) = match boundary {
                    Boundary::Periodic => (x.rem_euclid(w), y.rem_euclid(h)),
                    Boundary::Symmetric => {
                        let m = |i: isize, n: isize| {
                            if i < 0 {
                                -i - 1
                            } else if i >= n {
                                2 * n - 1 - i
                            } else {
                                i
                            }
                        };
                        (m(x, w), m(y, h))
                    }
                };
                ext[((y + pad) * pw + x + pad) as usize] = plane.get(sx as usize, sy as usize);
            }
        }
        let o = k.origin() as isize;
        let ow = (w as usize).div_ceil(d);
        let oh = (h as usize).div_ceil(d);
        let mut out = vec![0.0; ow * oh];
        for i in 0..oh {
            for j in 0..ow {
                let mut acc = 0.0;
                for a in 0..k.side() {
                    for b in 0..k.side() {
                        let y = (i * d) as isize + a as isize - o + pad;
                        let x = (j * d) as isize + b as isize - o + pad;
                        acc += ext[(y * pw + x) as usize] * k.tap(a, b);
                    }
                }
                out[i * ow + j] = acc;
            }
        }
        ImagePlane::new(ow, oh, out).unwrap()
    }

    fn random_plane(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ImagePlane {
        ImagePlane::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
    }

    #[test]
    fn zero_plane_stays_zero() {
        let z = ImagePlane::filled(9, 7, 0.0).unwrap();
        for basis in Basis::ALL {
            let k = make_kernel2d(filter_pair(basis), KernelKind::Scale);
            let out = conv2_decimated(&z, &k, Boundary::Symmetric, 2).unwrap();
            assert!(out.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn constant_plane_passes_unit_dc_scale_kernel() {
        let c = ImagePlane::filled(17, 11, 0.37).unwrap();
        for basis in Basis::ALL {
            let k = make_kernel2d(filter_pair(basis), KernelKind::Scale).unit_dc();
            for d in 1..=3 {
                let out = conv2_decimated(&c, &k, Boundary::Symmetric, d).unwrap();
                assert_eq!(out.width(), 17usize.div_ceil(d));
                assert!(out.values().iter().all(|v| (v - 0.37).abs() < 1e-14), "{basis} d={d}");
            }
        }
    }

    #[test]
    fn matches_brute_force_8x8_bior11() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = random_plane(&mut rng, 8, 8);
        let k = make_kernel2d(filter_pair(Basis::Bior11), KernelKind::Scale).unit_dc();
        let fast = conv2_decimated(&p, &k, Boundary::Symmetric, 2).unwrap();
        let slow = brute(&p, &k, Boundary::Symmetric, 2);
        assert_eq!((fast.width(), fast.height()), (4, 4));
        assert!(fast.max_abs_diff(&slow) <= 1e-12);
    }

    #[test]
    fn separable_equals_direct_all_bases_and_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let w = rng.random_range(13..=32);
            let h = rng.random_range(13..=32);
            let p = random_plane(&mut rng, w, h);
            for basis in Basis::ALL {
                for kind in [KernelKind::Scale, KernelKind::WaveletDiagonal] {
                    let k = make_kernel2d(filter_pair(basis), kind);
                    for boundary in [Boundary::Symmetric, Boundary::Periodic] {
                        for d in [1, 2, 3] {
                            let fast = conv2_decimated(&p, &k, boundary, d).unwrap();
                            let slow = brute(&p, &k, boundary, d);
                            assert!(fast.max_abs_diff(&slow) <= 1e-12 * slow.max_abs().max(1.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_oversized_kernel() {
        let p = ImagePlane::filled(3, 40, 1.0).unwrap();
        let k = make_kernel2d(filter_pair(Basis::Bior26), KernelKind::Scale);
        match conv2_decimated(&p, &k, Boundary::Symmetric, 2) {
            Err(Error::KernelTooLarge { kernel, width, height }) => {
                assert_eq!((kernel, width, height), (13, 3, 40));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_zero_decimation() {
        let p = ImagePlane::filled(4, 4, 1.0).unwrap();
        let k = make_kernel2d(filter_pair(Basis::Bior11), KernelKind::Scale);
        assert!(conv2_decimated(&p, &k, Boundary::Periodic, 0).is_err());
    }

    #[test]
    fn odd_dims_round_up() {
        let p = ImagePlane::filled(7, 5, 1.0).unwrap();
        let k = make_kernel2d(filter_pair(Basis::Bior22), KernelKind::Scale).unit_dc();
        let out = conv2_decimated(&p, &k, Boundary::Symmetric, 2).unwrap();
        assert_eq!((out.width(), out.height()), (4, 3));
    }
}
