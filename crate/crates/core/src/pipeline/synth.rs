//! Procedural stand-in dataset: five texture families drawn over noisy,
//! shaded backgrounds. The blue channel carries the pattern; red and green
//! are tinted copies.
//!
//! Every image has its own random stream derived from `(seed, class, index)`,
//! so a given image is identical no matter how many others are generated.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::image::encode_ppm;
use super::manifest::{write_manifest, ManifestEntry};
use crate::error::{Error, Result};

pub const SYNTH_CLASSES: [&str; 5] = ["nest", "kite", "textile", "plastic", "background"];
pub const MANIFEST_NAME: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub per_class: usize,
    /// Uses the first `classes` entries of [`SYNTH_CLASSES`].
    pub classes: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { width: 64, height: 64, per_class: 20, classes: SYNTH_CLASSES.len(), seed: 0 }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 64 || self.height < 64 {
            return Err(Error::InvalidConfig(format!(
                "synthetic images must be at least 64x64, got {}x{}",
                self.width, self.height
            )));
        }
        if !(1..=SYNTH_CLASSES.len()).contains(&self.classes) {
            return Err(Error::InvalidConfig(format!(
                "class count must be in 1..={}, got {}",
                SYNTH_CLASSES.len(),
                self.classes
            )));
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<String> {
        SYNTH_CLASSES[..self.classes.min(SYNTH_CLASSES.len())].iter().map(|s| s.to_string()).collect()
    }
}

struct Canvas {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Canvas {
    fn blend(&mut self, x: isize, y: isize, value: f64, alpha: f64) {
        if x < 0 || y < 0 || x as usize >= self.w || y as usize >= self.h {
            return;
        }
        let p = &mut self.v[y as usize * self.w + x as usize];
        *p = *p * (1.0 - alpha) + value * alpha;
    }

    fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, thickness: f64, value: f64) {
        let len = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
        let steps = (len * 2.0).ceil().max(1.0) as usize;
        let r = thickness / 2.0;
        let ri = r.ceil() as isize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let (cx, cy) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            for dy in -ri..=ri {
                for dx in -ri..=ri {
                    let (px, py) = (cx.round() as isize + dx, cy.round() as isize + dy);
                    let d = ((px as f64 - cx).powi(2) + (py as f64 - cy).powi(2)).sqrt();
                    if d <= r + 0.5 {
                        self.blend(px, py, value, 1.0);
                    }
                }
            }
        }
    }
}

fn background(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Canvas {
    let base = rng.random_range(0.25..0.55);
    let angle = rng.random_range(0.0..std::f64::consts::TAU);
    let slope = rng.random_range(0.0..0.15);
    let noise = rng.random_range(0.01..0.05);
    let (c, s) = (angle.cos(), angle.sin());
    let scale = w.max(h) as f64;
    let mut v = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let g = ((x as f64 - w as f64 / 2.0) * c + (y as f64 - h as f64 / 2.0) * s) / scale;
            let n: f64 = rng.random_range(-1.0..1.0) + rng.random_range(-1.0..1.0);
            v.push(base + slope * g + noise * n);
        }
    }
    Canvas { w, h, v }
}

fn nest(rng: &mut ChaCha8Rng, c: &mut Canvas) {
    let m = c.w.min(c.h) as f64;
    let (cx, cy) = center(rng, c);
    let r = rng.random_range(0.25..0.35) * m;
    let sticks = rng.random_range(45..80);
    for _ in 0..sticks {
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        let d = r * rng.random_range(0.0f64..1.0).sqrt();
        let (x0, y0) = (cx + d * a.cos(), cy + 0.7 * d * a.sin());
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        let len = rng.random_range(0.2..0.5) * r;
        let shade = rng.random_range(0.0..0.25);
        c.line(x0, y0, x0 + len * t.cos(), y0 + len * t.sin(), rng.random_range(1.0..2.0), shade);
    }
}

fn kite(rng: &mut ChaCha8Rng, c: &mut Canvas) {
    let m = c.w.min(c.h) as f64;
    let (cx, cy) = center(rng, c);
    let a = rng.random_range(0.18..0.28) * m;
    let b = a * rng.random_range(1.2..1.5);
    let value = rng.random_range(0.85..0.98);
    for y in 0..c.h {
        for x in 0..c.w {
            let (dx, dy) = ((x as f64 - cx).abs() / a, (y as f64 - cy).abs() / b);
            if dx + dy <= 1.0 {
                c.blend(x as isize, y as isize, value, 1.0);
            }
        }
    }
    let (mut x, mut y) = (cx, cy + b);
    let sway = rng.random_range(-1.0..1.0);
    for k in 0..12 {
        let nx = x + sway * 2.0 + (k as f64 * 0.9).sin() * 2.0;
        let ny = y + m * 0.04;
        c.line(x, y, nx, ny, 1.0, 0.05);
        (x, y) = (nx, ny);
    }
}

/// Twill: diagonal ribs over a fine basket weave.
fn textile(rng: &mut ChaCha8Rng, c: &mut Canvas) {
    let (w, h) = (c.w as f64, c.h as f64);
    let (x0, y0) = (rng.random_range(0.0..0.15) * w, rng.random_range(0.0..0.15) * h);
    let (x1, y1) = (rng.random_range(0.85..1.0) * w, rng.random_range(0.85..1.0) * h);
    let mut theta = rng.random_range(0.5..1.05);
    if rng.random::<bool>() {
        theta = std::f64::consts::PI - theta;
    }
    let rib = std::f64::consts::TAU / rng.random_range(4.0..7.0);
    let weave = std::f64::consts::TAU / rng.random_range(3.0..5.0);
    let base = rng.random_range(0.4..0.6);
    let amp = rng.random_range(0.2..0.3);
    let warp = rng.random_range(0.0..1.5);
    let (ct, st) = (theta.cos(), theta.sin());
    for y in y0 as usize..y1 as usize {
        for x in x0 as usize..x1 as usize {
            let (xf, yf) = (x as f64, y as f64);
            let u = xf * ct + yf * st + warp * (yf * 0.15).sin();
            let v = 0.6 * (rib * u).sin() + 0.4 * (weave * xf).sin() * (weave * yf).sin();
            c.blend(x as isize, y as isize, base + amp * v, 1.0);
        }
    }
}

fn plastic(rng: &mut ChaCha8Rng, c: &mut Canvas) {
    let m = c.w.min(c.h) as f64;
    for _ in 0..rng.random_range(1..4) {
        let (cx, cy) = (rng.random_range(0.25..0.75) * c.w as f64, rng.random_range(0.25..0.75) * c.h as f64);
        let rx = rng.random_range(0.12..0.25) * m;
        let ry = rx * rng.random_range(0.6..1.5);
        let rot = rng.random_range(0.0..std::f64::consts::PI);
        let (cr, sr) = (rot.cos(), rot.sin());
        let lobes = rng.random_range(0.0..0.25);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let value = rng.random_range(0.8..0.95);
        for y in 0..c.h {
            for x in 0..c.w {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                let (u, v) = ((dx * cr + dy * sr) / rx, (-dx * sr + dy * cr) / ry);
                let r = (u * u + v * v).sqrt();
                let edge = 1.0 + lobes * (3.0 * v.atan2(u) + phase).sin();
                let alpha = 1.0 / (1.0 + ((r - edge) * 6.0).exp());
                c.blend(x as isize, y as isize, value, alpha);
            }
        }
        for _ in 0..rng.random_range(2..5) {
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            let l = rng.random_range(0.3..0.8) * rx;
            let (x0, y0) = (cx - l * a.cos(), cy - l * a.sin());
            c.line(x0, y0, cx + l * a.cos(), cy + l * a.sin(), 1.0, value - 0.25);
        }
    }
}

fn center(rng: &mut ChaCha8Rng, c: &Canvas) -> (f64, f64) {
    (c.w as f64 * rng.random_range(0.4..0.6), c.h as f64 * rng.random_range(0.4..0.6))
}

/// Renders one image as interleaved 8-bit RGB.
pub fn render(spec: &SynthSpec, class: usize, index: usize) -> Result<Vec<u8>> {
    spec.validate()?;
    if class >= spec.classes {
        return Err(Error::ClassOutOfRange { index: class, classes: spec.classes });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(((class as u64) << 40) | index as u64);
    let mut canvas = background(&mut rng, spec.width, spec.height);
    match SYNTH_CLASSES[class] {
        "nest" => nest(&mut rng, &mut canvas),
        "kite" => kite(&mut rng, &mut canvas),
        "textile" => textile(&mut rng, &mut canvas),
        "plastic" => plastic(&mut rng, &mut canvas),
        _ => {}
    }
    let tint_r = rng.random_range(0.5..0.9);
    let tint_g = rng.random_range(0.6..1.0);
    let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    Ok(canvas.v.iter().flat_map(|&v| [q(v * tint_r), q(v * tint_g), q(v)]).collect())
}

/// Writes `<out>/<label>/<label>_<index>.ppm` for every image plus
/// `<out>/manifest.tsv`, and returns the manifest path.
pub fn generate(spec: &SynthSpec, out: &Path) -> Result<PathBuf> {
    spec.validate()?;
    let mut entries = Vec::with_capacity(spec.classes * spec.per_class);
    for (class, label) in spec.labels().iter().enumerate() {
        let dir = out.join(label);
        std::fs::create_dir_all(&dir).map_err(|e| Error::from(e).at(&dir))?;
        for index in 0..spec.per_class {
            let rel = PathBuf::from(label).join(format!("{label}_{index:04}.ppm"));
            let path = out.join(&rel);
            let rgb = render(spec, class, index)?;
            std::fs::write(&path, encode_ppm(spec.width, spec.height, &rgb)).map_err(|e| Error::from(e).at(&path))?;
            entries.push(ManifestEntry::new(rel, label.clone()));
        }
    }
    let manifest = out.join(MANIFEST_NAME);
    write_manifest(&manifest, &entries)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_is_per_image_deterministic() {
        let a = SynthSpec::default();
        let b = SynthSpec { per_class: 3, ..a.clone() };
        for class in 0..5 {
            assert_eq!(render(&a, class, 1).unwrap(), render(&b, class, 1).unwrap());
        }
        assert_ne!(render(&a, 0, 0).unwrap(), render(&a, 0, 1).unwrap());
        let other = SynthSpec { seed: 9, ..a.clone() };
        assert_ne!(render(&a, 2, 0).unwrap(), render(&other, 2, 0).unwrap());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(SynthSpec { width: 32, ..SynthSpec::default() }.validate().is_err());
        assert!(SynthSpec { classes: 6, ..SynthSpec::default() }.validate().is_err());
        assert!(render(&SynthSpec { classes: 2, ..SynthSpec::default() }, 2, 0).is_err());
    }
}
