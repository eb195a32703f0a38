//! Binary PPM (P6) / PGM (P5) decoding and encoding, plus single-channel
//! extraction. PNG decoding is available with the `png` feature.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scattering::ImagePlane;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Channel {
    R,
    G,
    #[default]
    B,
}

impl Channel {
    pub fn index(self) -> usize {
        match self {
            Channel::R => 0,
            Channel::G => 1,
            Channel::B => 2,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::R => "R",
            Channel::G => "G",
            Channel::B => "B",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R" | "r" => Ok(Channel::R),
            "G" | "g" => Ok(Channel::G),
            "B" | "b" => Ok(Channel::B),
            other => Err(Error::InvalidConfig(format!("unknown channel `{other}`"))),
        }
    }
}

/// Decoded raster, interleaved samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// 1 (gray) or 3 (RGB).
    pub channels: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

impl Raster {
    /// One channel scaled to `[0, 1]`. Gray rasters ignore the selector.
    pub fn channel(&self, channel: Channel) -> ImagePlane {
        let scale = 1.0 / self.maxval as f64;
        let (stride, offset) = if self.channels == 1 { (1, 0) } else { (self.channels, channel.index()) };
        let values = self.samples.iter().skip(offset).step_by(stride).map(|&s| s as f64 * scale).collect();
        ImagePlane::new(self.width, self.height, values).expect("raster dims are validated at decode")
    }
}

struct HeaderParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderParser<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::malformed(start as u64, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| Error::malformed(start as u64, format!("{what} out of range")))
    }
}

/// Decodes a binary P5/P6 image.
pub fn decode_pnm(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < 2 {
        return Err(Error::UnsupportedFormat(bytes.to_vec()));
    }
    let channels = match &bytes[..2] {
        b"P6" => 3,
        b"P5" => 1,
        other => return Err(Error::UnsupportedFormat(other.to_vec())),
    };
    let mut p = HeaderParser { bytes, pos: 2 };
    let width = p.number("width")?;
    let height = p.number("height")?;
    let maxval_at = p.pos;
    let maxval = p.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::malformed(maxval_at as u64, format!("empty image {width}x{height}")));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(Error::malformed(maxval_at as u64, format!("maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if p.pos >= bytes.len() || !bytes[p.pos].is_ascii_whitespace() {
        return Err(Error::malformed(p.pos as u64, "missing whitespace after maxval"));
    }
    let data_at = p.pos + 1;
    let bps = if maxval < 256 { 1 } else { 2 };
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::malformed(0, "image dimensions overflow"))?;
    let need = count * bps;
    let data = &bytes[data_at..];
    if data.len() < need {
        return Err(Error::malformed(
            (data_at + data.len()) as u64,
            format!("truncated raster: {} of {need} bytes", data.len()),
        ));
    }
    let samples: Vec<u16> = if bps == 1 {
        data[..need].iter().map(|&b| b as u16).collect()
    } else {
        data[..need].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    };
    if let Some(i) = samples.iter().position(|&s| s as usize > maxval) {
        return Err(Error::malformed((data_at + i * bps) as u64, format!("sample exceeds maxval {maxval}")));
    }
    Ok(Raster { width, height, channels, maxval: maxval as u16, samples })
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<Raster> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let bad = |e: png::DecodingError| Error::malformed(0, format!("png: {e}"));
    let mut reader = decoder.read_info().map_err(bad)?;
    let mut buf = vec![0; reader.output_buffer_size().ok_or_else(|| Error::malformed(0, "png too large"))?];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    let (w, h) = (info.width as usize, info.height as usize);
    let src = &buf[..info.buffer_size()];
    let (channels, samples): (usize, Vec<u16>) = match info.color_type {
        png::ColorType::Grayscale => (1, src.iter().map(|&b| b as u16).collect()),
        png::ColorType::GrayscaleAlpha => (1, src.iter().step_by(2).map(|&b| b as u16).collect()),
        png::ColorType::Rgb => (3, src.iter().map(|&b| b as u16).collect()),
        png::ColorType::Rgba => (3, src.chunks_exact(4).flat_map(|p| [p[0], p[1], p[2]]).map(u16::from).collect()),
        png::ColorType::Indexed => return Err(Error::malformed(0, "indexed png was not expanded")),
    };
    Ok(Raster { width: w, height: h, channels, maxval: 255, samples })
}

/// Decodes by magic bytes.
pub fn decode_image(bytes: &[u8]) -> Result<Raster> {
    #[cfg(feature = "png")]
    if bytes.starts_with(b"\x89PNG") {
        return decode_png(bytes);
    }
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        return decode_pnm(bytes);
    }
    Err(Error::UnsupportedFormat(bytes.iter().take(4).copied().collect()))
}

pub fn read_image(path: &Path) -> Result<Raster> {
    let bytes = std::fs::read(path).map_err(|e| Error::from(e).at(path))?;
    decode_image(&bytes).map_err(|e| e.at(path))
}

/// Loads `path` and returns one channel scaled to `[0, 1]`.
pub fn load_image_channel(path: &Path, channel: Channel) -> Result<ImagePlane> {
    Ok(read_image(path)?.channel(channel))
}

/// Encodes 8-bit interleaved RGB as binary P6.
pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    assert_eq!(rgb.len(), width * height * 3);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

/// Encodes 8-bit gray as binary P5.
pub fn encode_pgm(width: usize, height: usize, gray: &[u8]) -> Vec<u8> {
    assert_eq!(gray.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(gray);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solid_blue() {
        let rgb: Vec<u8> = [0u8, 0, 255].repeat(12);
        let raster = decode_pnm(&encode_ppm(4, 3, &rgb)).unwrap();
        let b = raster.channel(Channel::B);
        assert_eq!((b.width(), b.height()), (4, 3));
        assert!(b.values().iter().all(|&v| v == 1.0));
        assert!(raster.channel(Channel::R).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gray_ignores_channel() {
        let raster = decode_pnm(&encode_pgm(2, 2, &[0, 51, 102, 255])).unwrap();
        for c in [Channel::R, Channel::G, Channel::B] {
            assert_eq!(raster.channel(c).values(), &[0.0, 0.2, 0.4, 1.0]);
        }
    }

    #[test]
    fn header_comments_and_16_bit() {
        let mut bytes = b"P5 # comment\n2 1\n# another\n1000\n".to_vec();
        bytes.extend_from_slice(&500u16.to_be_bytes());
        bytes.extend_from_slice(&1000u16.to_be_bytes());
        let r = decode_pnm(&bytes).unwrap();
        assert_eq!(r.channel(Channel::B).values(), &[0.5, 1.0]);
    }

    #[test]
    fn truncated_raster_reports_offset() {
        let bytes = encode_ppm(2, 2, &[9; 12]);
        match decode_pnm(&bytes[..bytes.len() - 5]) {
            Err(Error::Malformed { offset, .. }) => assert_eq!(offset as usize, bytes.len() - 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_header() {
        assert!(matches!(decode_pnm(b"P6\n4 x\n255\n"), Err(Error::Malformed { offset: 5, .. })));
        assert!(matches!(decode_pnm(b"P6\n0 4\n255\n"), Err(Error::Malformed { .. })));
    }

    #[test]
    fn unsupported_magic() {
        match decode_image(b"GIF89a....") {
            Err(Error::UnsupportedFormat(m)) => assert_eq!(m, b"GIF8"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
