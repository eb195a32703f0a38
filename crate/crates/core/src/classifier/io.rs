//! `IWSNML01` model files.
//!
//! ```text
//! magic     8 bytes "IWSNML01"
//! version   u8 (1)
//! dims      u64 count, then count x u64
//! seed      u64
//! params    per layer: weights (inputs x outputs, row-major), then biases,
//!           all f64
//! ```
//!
//! Integers and floats are little-endian.

use std::path::Path;

use super::MlpModel;
use crate::error::{Error, Result};
use crate::scattering::features::Reader;

pub const MODEL_MAGIC: &[u8; 8] = b"IWSNML01";
pub const MODEL_VERSION: u8 = 1;

impl MlpModel {
    pub fn encode(&self) -> Vec<u8> {
        let params: usize = self.weights.iter().chain(&self.biases).map(Vec::len).sum();
        let mut out = Vec::with_capacity(8 + 1 + 8 * (self.dims.len() + 2 + params));
        out.extend_from_slice(MODEL_MAGIC);
        out.push(MODEL_VERSION);
        out.extend_from_slice(&(self.dims.len() as u64).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for v in w.iter().chain(b) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(8).map_err(|_| Error::BadMagic {
            expected: String::from_utf8_lossy(MODEL_MAGIC).into_owned(),
            found: String::from_utf8_lossy(bytes).into_owned(),
        })?;
        if magic != MODEL_MAGIC {
            return Err(Error::BadMagic {
                expected: String::from_utf8_lossy(MODEL_MAGIC).into_owned(),
                found: String::from_utf8_lossy(magic).into_owned(),
            });
        }
        let at = r.pos;
        let version = r.u8()?;
        if version != MODEL_VERSION {
            return Err(Error::malformed(at as u64, format!("unsupported version {version}")));
        }
        let at = r.pos;
        let n = r.usize()?;
        if !(2..=64).contains(&n) {
            return Err(Error::malformed(at as u64, format!("{n} layer widths")));
        }
        let mut dims = Vec::with_capacity(n);
        for _ in 0..n {
            let at = r.pos;
            let d = r.usize()?;
            if d == 0 {
                return Err(Error::malformed(at as u64, "zero layer width"));
            }
            dims.push(d);
        }
        let seed = r.u64()?;
        let params_at = r.pos;
        let params =
            dims.windows(2).try_fold(0usize, |acc, p| p[1].checked_mul(p[0] + 1).and_then(|v| acc.checked_add(v)));
        if params.and_then(|p| p.checked_mul(8)).is_none_or(|b| b != r.remaining()) {
            return Err(Error::malformed(
                params_at as u64,
                format!("parameter block does not match dims {dims:?} ({} bytes left)", r.remaining()),
            ));
        }
        let mut weights = Vec::with_capacity(n - 1);
        let mut biases = Vec::with_capacity(n - 1);
        for p in dims.windows(2) {
            for (len, dst) in [(p[0] * p[1], &mut weights), (p[1], &mut biases)] {
                let mut v = Vec::with_capacity(len);
                for _ in 0..len {
                    let at = r.pos;
                    let x = r.f64()?;
                    if !x.is_finite() {
                        return Err(Error::malformed(at as u64, "non-finite parameter"));
                    }
                    v.push(x);
                }
                dst.push(v);
            }
        }
        MlpModel::from_parts(dims, weights, biases, seed)
    }
}

pub fn save_model(model: &MlpModel, path: &Path) -> Result<()> {
    std::fs::write(path, model.encode()).map_err(|e| Error::from(e).at(path))
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at(path))?;
    MlpModel::decode(&bytes).map_err(|e| e.at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let m = MlpModel::new_seeded(&[7, 5, 3, 2], 99).unwrap();
        let back = MlpModel::decode(&m.encode()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.encode(), m.encode());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        let m = MlpModel::new_seeded(&[4, 3, 2], 1).unwrap();
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    #[test]
    fn truncation_is_rejected_with_offset() {
        let bytes = MlpModel::new_seeded(&[4, 3, 2], 1).unwrap().encode();
        for cut in [3, 8, 9, 20, bytes.len() - 1] {
            match MlpModel::decode(&bytes[..cut]) {
                Err(Error::Malformed { .. }) | Err(Error::BadMagic { .. }) => {}
                other => panic!("cut {cut}: unexpected {other:?}"),
            }
        }
        match MlpModel::decode(&bytes[..bytes.len() - 1]) {
            Err(Error::Malformed { offset, .. }) => assert_eq!(offset, 8 + 1 + 8 + 3 * 8 + 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_magic_names_expected() {
        let mut bytes = MlpModel::zeros(&[2, 2]).unwrap().encode();
        bytes[0] = b'X';
        match MlpModel::decode(&bytes) {
            Err(Error::BadMagic { expected, .. }) => assert_eq!(expected, "IWSNML01"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_version() {
        let mut bytes = MlpModel::zeros(&[2, 2]).unwrap().encode();
        bytes[8] = 7;
        assert!(matches!(MlpModel::decode(&bytes), Err(Error::Malformed { offset: 8, .. })));
    }
}
