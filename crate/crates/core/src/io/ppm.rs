//! Binary PPM (P6, 8-bit) images.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ImageRGB;
use crate::real::Real;

/// Clamps to `[0, 1]` and rounds to the nearest of 256 levels, halves away
/// from zero. NaN maps to 0.
pub fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_ppm<T: Real>(img: &ImageRGB<T>) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.data.iter().flat_map(|p| p.map(|c| quantize(c.as_f64()))));
    out
}

pub fn save_ppm<T: Real>(img: &ImageRGB<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_ppm(img))?;
    Ok(())
}

pub fn decode_ppm(bytes: &[u8]) -> Result<ImageRGB<f64>> {
    let bad = |m: &str| Error::Image(format!("PPM: {m}"));
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    pos += 1;
    if fields[0] != "P6" {
        return Err(bad("only binary P6 is supported"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, max) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if max != 255 {
        return Err(bad("only 8-bit (maxval 255) is supported"));
    }
    let body = bytes
        .get(pos..pos + 3 * w * h)
        .ok_or_else(|| bad("truncated pixel data"))?;
    let data = body
        .chunks_exact(3)
        .map(|p| [p[0], p[1], p[2]].map(|v| v as f64 / 255.0))
        .collect();
    ImageRGB::from_data(w, h, data)
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<ImageRGB<f64>> {
    decode_ppm(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_red_pixel() {
        let img = ImageRGB::new(1, 1, [1.0f64, 0.0, 0.0]);
        let mut want = b"P6\n1 1\n255\n".to_vec();
        want.extend_from_slice(&[0xFF, 0x00, 0x00]);
        assert_eq!(encode_ppm(&img), want);
    }

    #[test]
    fn clamping_and_rounding() {
        assert_eq!(quantize(1.5), 255);
        assert_eq!(quantize(-0.2), 0);
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(f64::NAN), 0);
    }

    #[test]
    fn decode_inverts_encode_on_levels() {
        let data = (0..6).map(|i| [i as f64 * 51.0 / 255.0, 1.0, 0.0]).collect();
        let img = ImageRGB::from_data(3, 2, data).unwrap();
        let back = decode_ppm(&encode_ppm(&img)).unwrap();
        assert!(back.max_abs_diff(&img) < 1e-12);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut b = b"P6\n# made by hand\n1 1\n255\n".to_vec();
        b.extend_from_slice(&[0, 255, 0]);
        assert_eq!(decode_ppm(&b).unwrap().data[0], [0.0, 1.0, 0.0]);
    }
}
