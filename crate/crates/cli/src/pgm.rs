//! 16-bit binary PGM (P5): the golden image format. No codec, no
//! compression, so identical runs are byte-identical and diffs are exact.
//!
//! Layout: "P5\n<width> <height>\n65535\n" followed by width x height
//! big-endian 16-bit samples, row-major with the top row first. The top row
//! is +y, columns run +x, so images sit in the camera orientation.

use oamtilt_core::{ComplexField, GridSpec, IntensityMap};

use crate::Failure;

pub const PGM_MAXVAL: u16 = 65535;

fn header(width: usize, height: usize) -> Vec<u8> {
    format!("P5\n{width} {height}\n{PGM_MAXVAL}\n").into_bytes()
}

fn push_sample(out: &mut Vec<u8>, q: u16) {
    out.extend_from_slice(&q.to_be_bytes());
}

/// Intensity mapped linearly from [0, max] to [0, 65535]; an all-zero map
/// encodes as black.
pub fn encode_intensity(map: &IntensityMap) -> Vec<u8> {
    let g = map.grid;
    let max = map.max();
    let mut out = header(g.nx, g.ny);
    out.reserve(2 * g.nx * g.ny);
    for row in 0..g.ny {
        let iy = g.ny - 1 - row;
        for ix in 0..g.nx {
            let q = if max > 0.0 {
                (map.at(ix, iy) / max * PGM_MAXVAL as f64).round().clamp(0.0, PGM_MAXVAL as f64)
            } else {
                0.0
            };
            push_sample(&mut out, q as u16);
        }
    }
    out
}

/// Phase mapped linearly from [-pi, pi] to [0, 65535].
pub fn encode_phase(field: &ComplexField) -> Vec<u8> {
    let g = field.grid;
    let mut out = header(g.nx, g.ny);
    out.reserve(2 * g.nx * g.ny);
    let scale = PGM_MAXVAL as f64 / (2.0 * std::f64::consts::PI);
    for row in 0..g.ny {
        let iy = g.ny - 1 - row;
        for ix in 0..g.nx {
            let phi = field.at(ix, iy).arg();
            let q = ((phi + std::f64::consts::PI) * scale).round().clamp(0.0, PGM_MAXVAL as f64);
            push_sample(&mut out, q as u16);
        }
    }
    out
}

/// Decoded image, still in file orientation (row 0 on top).
#[derive(Debug, Clone)]
pub struct RawPgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

/// Minimal P5 reader for round-trip checks; accepts `#` comments in the
/// header like the encoders never emit.
pub fn decode(bytes: &[u8]) -> Result<RawPgm, Failure> {
    let bad = |m: &str| Failure::Io(format!("pgm decode: {m}"));
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(bad("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for f in &mut fields {
        // skip whitespace and comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        *f = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad header field"))?;
    }
    let (width, height, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != PGM_MAXVAL as usize {
        return Err(bad(&format!("expected maxval {PGM_MAXVAL}, got {maxval}")));
    }
    // exactly one whitespace byte separates header and raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(bad("missing raster separator"));
    }
    pos += 1;
    let need = 2 * width * height;
    if bytes.len() - pos != need {
        return Err(bad(&format!("raster is {} bytes, expected {need}", bytes.len() - pos)));
    }
    let samples = bytes[pos..]
        .chunks_exact(2)
        .map(|p| u16::from_be_bytes([p[0], p[1]]))
        .collect();
    Ok(RawPgm { width, height, maxval: PGM_MAXVAL, samples })
}

impl RawPgm {
    /// Reattach physical coordinates, undoing the top-first row order.
    /// Values come back in [0, 1].
    pub fn to_intensity(&self, grid: GridSpec) -> Result<IntensityMap, Failure> {
        if grid.nx != self.width || grid.ny != self.height {
            return Err(Failure::Io(format!(
                "pgm is {}x{}, grid wants {}x{}",
                self.width, self.height, grid.nx, grid.ny
            )));
        }
        let mut values = vec![0.0; self.width * self.height];
        for row in 0..self.height {
            let iy = self.height - 1 - row;
            for ix in 0..self.width {
                values[ix * grid.ny + iy] = self.samples[row * self.width + ix] as f64 / PGM_MAXVAL as f64;
            }
        }
        Ok(IntensityMap { grid, values })
    }

    /// Phase samples back in (-pi, pi], same reorientation.
    pub fn to_phase(&self, grid: GridSpec) -> Result<Vec<f64>, Failure> {
        let unit = self.to_intensity(grid)?;
        Ok(unit.values.iter().map(|v| v * 2.0 * std::f64::consts::PI - std::f64::consts::PI).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn intensity_round_trips_through_the_codec() {
        let g = GridSpec::square(16, 1e-3).unwrap();
        let f = ComplexField::from_fn(g, |x, y| {
            Complex64::new((-(x * x + 3.0 * y * y) / 1e-7).exp(), 0.0)
        });
        let map = f.intensity();
        let bytes = encode_intensity(&map);
        let raw = decode(&bytes).unwrap();
        assert_eq!((raw.width, raw.height), (16, 16));
        let back = raw.to_intensity(g).unwrap();
        let peak = map.max();
        for ix in 0..16 {
            for iy in 0..16 {
                // quantization bound: half a level of the 16-bit scale
                assert!((back.at(ix, iy) - map.at(ix, iy) / peak).abs() <= 0.5 / PGM_MAXVAL as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn phase_encoding_is_linear_in_angle() {
        let g = GridSpec::square(8, 1e-3).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::from_polar(1.0, y.atan2(x)));
        let bytes = encode_phase(&f);
        let raw = decode(&bytes).unwrap();
        let phases = raw.to_phase(g).unwrap();
        for ix in 0..8 {
            for iy in 0..8 {
                let want = f.at(ix, iy).arg();
                let got = phases[ix * 8 + iy];
                assert!((got - want).abs() < 2.0 * std::f64::consts::PI / PGM_MAXVAL as f64);
            }
        }
    }

    #[test]
    fn header_is_exactly_the_contract() {
        let g = GridSpec::square(4, 1e-3).unwrap();
        let map = ComplexField::zeros(g).intensity();
        let bytes = encode_intensity(&map);
        assert!(bytes.starts_with(b"P5\n4 4\n65535\n"));
        assert_eq!(bytes.len(), b"P5\n4 4\n65535\n".len() + 2 * 16);
    }

    #[test]
    fn decode_rejects_corruption() {
        assert!(decode(b"P6\n2 2\n65535\n").is_err());
        assert!(decode(b"P5\n2 2\n255\n----").is_err());
        let g = GridSpec::square(4, 1e-3).unwrap();
        let mut bytes = encode_intensity(&ComplexField::zeros(g).intensity());
        bytes.pop();
        assert!(decode(&bytes).is_err());
    }
}
