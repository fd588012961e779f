//! File formats: PLY scenes, PPM (and optionally PNG) images, JSON camera
//! sets and TOML run configuration.

mod cameras;
mod config;
mod ply;
mod ppm;

pub use cameras::{load_cameras, save_cameras, CameraEntry, CameraSet};
pub use config::{parse_footprint, parse_hybrid, parse_loss, parse_recip, RunConfig};
pub use ply::{decode_scene, encode_scene, load_scene, save_scene};
pub use ppm::{decode_ppm, encode_ppm, load_ppm, quantize, save_ppm};

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ImageRGB;
use crate::real::Real;

/// Writes `img` as PPM, or as PNG when the path ends in `.png` and the `png`
/// feature is enabled.
pub fn save_image<T: Real>(img: &ImageRGB<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
        return save_png(img, path);
    }
    save_ppm(img, path)
}

/// Reads a PPM, or a PNG when the `png` feature is enabled.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageRGB<f64>> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
        return load_png(path);
    }
    load_ppm(path)
}

#[cfg(feature = "png")]
fn save_png<T: Real>(img: &ImageRGB<T>, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = img.data.iter().flat_map(|p| p.map(|c| quantize(c.as_f64()))).collect();
    image::save_buffer(
        path,
        &bytes,
        img.width as u32,
        img.height as u32,
        image::ExtendedColorType::Rgb8,
    )
    .map_err(|e| Error::Image(e.to_string()))
}

#[cfg(feature = "png")]
fn load_png(path: &Path) -> Result<ImageRGB<f64>> {
    let img = image::open(path).map_err(|e| Error::Image(e.to_string()))?.to_rgb8();
    let data = img.pixels().map(|p| p.0.map(|v| v as f64 / 255.0)).collect();
    ImageRGB::from_data(img.width() as usize, img.height() as usize, data)
}

#[cfg(not(feature = "png"))]
fn save_png<T: Real>(_: &ImageRGB<T>, path: &Path) -> Result<()> {
    Err(Error::Image(format!(
        "{}: PNG support needs the `png` feature",
        path.display()
    )))
}

#[cfg(not(feature = "png"))]
fn load_png(path: &Path) -> Result<ImageRGB<f64>> {
    Err(Error::Image(format!(
        "{}: PNG support needs the `png` feature",
        path.display()
    )))
}
