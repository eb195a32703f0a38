//! Feature flattening and the `IWSNFV01` feature file.
//!
//! File layout, all integers little-endian:
//!
//! ```text
//! magic            8 bytes  "IWSNFV01"
//! width, height    u64, u64   input plane dims
//! depth            u64
//! basis ids        depth x u8 (0 bior1.1, 1 bior2.2, 2 bior1.3, 3 bior2.6)
//! variant          u8 (0 classic, 1 improved)
//! boundary         u8 (0 symmetric, 1 periodic)
//! smooth_with      u8 (0 first, 1 last)
//! smooth decimates u8 (0/1)
//! decimate         u64
//! selection        u64 bitmask (bit 0 S0, bit k Uk, bit 32+k Sk)
//! vector length    u64
//! class count      u64, then per class: u64 byte length + UTF-8 name
//! record count     u64
//! records          u32 label index, then `vector length` x f32
//! ```

use std::io::Write;
use std::path::Path;

use super::{Boundary, ScatterConfig, ScatterOutput, Selection, SmoothWith, Variant};
use crate::error::{Error, Result};
use crate::wavelet::Basis;

pub const FEATURE_MAGIC: &[u8; 8] = b"IWSNFV01";

/// Flattens the selected planes in the order S0, U1..Um, S1..Sm, each
/// row-major.
pub fn feature_vector(output: &ScatterOutput, selection: Selection) -> Result<Vec<f64>> {
    if selection.is_empty() {
        return Err(Error::EmptySelection);
    }
    let depth = output.u_levels.len();
    if selection.max_level() > depth {
        return Err(Error::MissingOutput { what: format!("level {} (depth is {depth})", selection.max_level()) });
    }
    let mut planes = Vec::new();
    if selection.has_s0() {
        planes.push(&output.s0);
    }
    planes.extend((1..=depth).filter(|&k| selection.has_u(k)).map(|k| &output.u_levels[k - 1]));
    planes.extend((1..=depth).filter(|&k| selection.has_s(k)).map(|k| &output.s_levels[k - 1]));
    let len = planes.iter().map(|p| p.len()).sum();
    let mut v = Vec::with_capacity(len);
    for p in planes {
        v.extend_from_slice(p.values());
    }
    Ok(v)
}

/// Length of the feature vector `config` produces for a `width x height` input.
pub fn feature_len(config: &ScatterConfig, width: usize, height: usize) -> Result<usize> {
    config.validate()?;
    let sel = config.selection;
    if sel.is_empty() {
        return Err(Error::EmptySelection);
    }
    if sel.max_level() > config.depth {
        return Err(Error::MissingOutput { what: format!("level {} (depth is {})", sel.max_level(), config.depth) });
    }
    let (s0, levels) = config.plane_dims(width, height);
    let area = |d: (usize, usize)| d.0 * d.1;
    let mut n = if sel.has_s0() { area(s0) } else { 0 };
    for (k, (u, s)) in levels.iter().enumerate() {
        if sel.has_u(k + 1) {
            n += area(*u);
        }
        if sel.has_s(k + 1) {
            n += area(*s);
        }
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureHeader {
    pub width: usize,
    pub height: usize,
    pub config: ScatterConfig,
    pub vector_len: usize,
    pub classes: Vec<String>,
}

impl FeatureHeader {
    pub fn new(config: &ScatterConfig, width: usize, height: usize, classes: Vec<String>) -> Result<Self> {
        Ok(FeatureHeader {
            width,
            height,
            vector_len: feature_len(config, width, height)?,
            config: config.clone(),
            classes,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFile {
    pub header: FeatureHeader,
    /// (label index into `header.classes`, feature values)
    pub records: Vec<(u32, Vec<f32>)>,
}

impl FeatureFile {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let h = &self.header;
        let c = &h.config;
        let mut out = Vec::new();
        out.extend_from_slice(FEATURE_MAGIC);
        for v in [h.width, h.height, c.depth] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend(c.level_bases.iter().map(|b| b.id()));
        out.push(c.variant.id());
        out.push(c.boundary.id());
        out.push(match c.smooth_with {
            SmoothWith::First => 0,
            SmoothWith::Last => 1,
        });
        out.push(c.decimate_smoothing as u8);
        out.extend_from_slice(&(c.decimate as u64).to_le_bytes());
        out.extend_from_slice(&c.selection.bits().to_le_bytes());
        out.extend_from_slice(&(h.vector_len as u64).to_le_bytes());
        out.extend_from_slice(&(h.classes.len() as u64).to_le_bytes());
        for name in &h.classes {
            out.extend_from_slice(&(name.len() as u64).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
        }
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for (label, values) in &self.records {
            if values.len() != h.vector_len {
                return Err(Error::DimensionMismatch { expected: h.vector_len, actual: values.len() });
            }
            out.extend_from_slice(&label.to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(8)?;
        if magic != FEATURE_MAGIC {
            return Err(Error::BadMagic {
                expected: String::from_utf8_lossy(FEATURE_MAGIC).into_owned(),
                found: String::from_utf8_lossy(magic).into_owned(),
            });
        }
        let width = r.usize()?;
        let height = r.usize()?;
        let depth_at = r.pos;
        let depth = r.usize()?;
        if depth == 0 || depth > Selection::MAX_LEVEL {
            return Err(Error::malformed(depth_at as u64, format!("depth {depth}")));
        }
        let mut level_bases = Vec::with_capacity(depth);
        for _ in 0..depth {
            let at = r.pos;
            let id = r.u8()?;
            level_bases.push(Basis::from_id(id).ok_or_else(|| Error::malformed(at as u64, format!("basis id {id}")))?);
        }
        let at = r.pos;
        let variant = match r.u8()? {
            0 => Variant::Classic,
            1 => Variant::Improved,
            v => return Err(Error::malformed(at as u64, format!("variant {v}"))),
        };
        let at = r.pos;
        let boundary = match r.u8()? {
            0 => Boundary::Symmetric,
            1 => Boundary::Periodic,
            v => return Err(Error::malformed(at as u64, format!("boundary {v}"))),
        };
        let at = r.pos;
        let smooth_with = match r.u8()? {
            0 => SmoothWith::First,
            1 => SmoothWith::Last,
            v => return Err(Error::malformed(at as u64, format!("smooth_with {v}"))),
        };
        let decimate_smoothing = r.u8()? != 0;
        let decimate = r.usize()?;
        let at = r.pos;
        let selection = Selection::from_bits(r.u64()?).map_err(|e| Error::malformed(at as u64, e.to_string()))?;
        let config = ScatterConfig {
            depth,
            level_bases,
            boundary,
            decimate,
            variant,
            selection,
            smooth_with,
            decimate_smoothing,
        };
        let at = r.pos;
        let vector_len = r.usize()?;
        match feature_len(&config, width, height) {
            Ok(n) if n == vector_len => {}
            Ok(n) => {
                return Err(Error::malformed(
                    at as u64,
                    format!("vector length {vector_len} but the header config implies {n}"),
                ))
            }
            Err(e) => return Err(Error::malformed(at as u64, e.to_string())),
        }
        let class_count = r.usize()?;
        let mut classes = Vec::new();
        for _ in 0..class_count {
            let len = r.usize()?;
            let at = r.pos;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::malformed(at as u64, "class name is not UTF-8"))?;
            classes.push(name.to_string());
        }
        let records_at = r.pos;
        let count = r.usize()?;
        let record_bytes = 4 + 4 * vector_len;
        if count.checked_mul(record_bytes).is_none_or(|n| n > r.remaining()) {
            return Err(Error::malformed(
                records_at as u64,
                format!("{count} records do not fit in the remaining {} bytes", r.remaining()),
            ));
        }
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let at = r.pos;
            let label = r.u32()?;
            if label as usize >= classes.len() {
                return Err(Error::malformed(at as u64, format!("label index {label}")));
            }
            let raw = r.take(4 * vector_len)?;
            let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
            records.push((label, values));
        }
        if r.remaining() != 0 {
            return Err(Error::malformed(r.pos as u64, "trailing bytes"));
        }
        Ok(FeatureFile { header: FeatureHeader { width, height, config, vector_len, classes }, records })
    }
}

pub fn write_feature_file(path: &Path, file: &FeatureFile) -> Result<()> {
    let bytes = file.encode()?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::from(e).at(path))?;
    f.write_all(&bytes).map_err(|e| Error::from(e).at(path))?;
    Ok(())
}

pub fn read_feature_file(path: &Path) -> Result<FeatureFile> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at(path))?;
    FeatureFile::decode(&bytes).map_err(|e| e.at(path))
}

/// Byte cursor that reports the offset of whatever it fails to read.
pub(crate) struct Reader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
}

impl<'a> Reader<'a> {
    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::malformed(
                self.pos as u64,
                format!("truncated: wanted {n} bytes, {} left", self.remaining()),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let at = self.pos;
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::malformed(at as u64, format!("value {v} too large")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scattering::{scatter, ImagePlane};

    #[test]
    fn single_plane_selection_is_row_major() {
        let x = ImagePlane::from_fn(8, 8, |x, y| ((x * 7 + y * 3) % 5) as f64 / 4.0).unwrap();
        let cfg = ScatterConfig::default();
        let out = scatter(&x, &cfg).unwrap();
        let v = feature_vector(&out, "U1".parse().unwrap()).unwrap();
        assert_eq!(v.len(), 16);
        assert_eq!(v, out.u_levels[0].values());
    }

    #[test]
    fn lengths() {
        let cfg = ScatterConfig::default();
        assert_eq!(feature_len(&cfg, 64, 64).unwrap(), 32 * 32 + 16 * 16 + 8 * 8);
        // 640*360 + 320*180 + 160*90
        assert_eq!(feature_len(&cfg, 1280, 720).unwrap(), 230_400 + 57_600 + 14_400);
        assert_eq!(feature_len(&cfg, 1280, 720).unwrap(), 302_400);
        let x = ImagePlane::filled(64, 64, 0.5).unwrap();
        let out = scatter(&x, &cfg).unwrap();
        assert_eq!(feature_vector(&out, cfg.selection).unwrap().len(), 1344);
    }

    #[test]
    fn declared_order() {
        let x = ImagePlane::from_fn(16, 16, |x, y| ((x ^ y) & 3) as f64).unwrap();
        let cfg = ScatterConfig::default();
        let out = scatter(&x, &cfg).unwrap();
        let sel: Selection = "S2,U1,S0".parse().unwrap();
        let v = feature_vector(&out, sel).unwrap();
        let mut want = out.s0.values().to_vec();
        want.extend_from_slice(out.u_levels[0].values());
        want.extend_from_slice(out.s_levels[1].values());
        assert_eq!(v, want);
    }

    #[test]
    fn empty_and_missing_selection() {
        let x = ImagePlane::filled(16, 16, 0.5).unwrap();
        let out = scatter(&x, &ScatterConfig::default()).unwrap();
        assert!(matches!(feature_vector(&out, Selection::empty()), Err(Error::EmptySelection)));
        assert!(matches!(feature_vector(&out, "U4".parse().unwrap()), Err(Error::MissingOutput { .. })));
    }

    fn sample_file() -> FeatureFile {
        let cfg = ScatterConfig::default();
        let header = FeatureHeader::new(&cfg, 16, 16, vec!["a".into(), "b".into()]).unwrap();
        let n = header.vector_len;
        FeatureFile { header, records: vec![(0, vec![0.25; n]), (1, (0..n).map(|i| i as f32).collect())] }
    }

    #[test]
    fn file_round_trip() {
        let f = sample_file();
        let bytes = f.encode().unwrap();
        assert_eq!(&bytes[..8], FEATURE_MAGIC);
        assert_eq!(FeatureFile::decode(&bytes).unwrap(), f);
    }

    #[test]
    fn truncated_file_reports_offset() {
        let bytes = sample_file().encode().unwrap();
        let cut = &bytes[..bytes.len() - 3];
        match FeatureFile::decode(cut) {
            Err(Error::Malformed { offset, .. }) => assert!(offset > 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = sample_file().encode().unwrap();
        bytes[7] = b'9';
        assert!(matches!(FeatureFile::decode(&bytes), Err(Error::BadMagic { .. })));
    }
}
