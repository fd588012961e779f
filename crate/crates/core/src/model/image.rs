use crate::error::{Error, Result};
use crate::real::{cast, Real};

/// Row-major linear RGB image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRGB<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[T; 3]>,
}

impl<T: Real> ImageRGB<T> {
    pub fn new(width: usize, height: usize, fill: [T; 3]) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_data(width: usize, height: usize, data: Vec<[T; 3]>) -> Result<Self> {
        let img = Self { width, height, data };
        img.validate()?;
        Ok(img)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.width * self.height {
            return Err(Error::Image(format!(
                "{} pixels for a {}x{} image",
                self.data.len(),
                self.width,
                self.height
            )));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Image("non-finite pixel value".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [T; 3] {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [T; 3]) {
        self.data[y * self.width + x] = rgb;
    }

    pub fn cast<U: Real>(&self) -> ImageRGB<U> {
        ImageRGB {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|p| p.map(cast)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs().as_f64()))
            .fold(0.0, f64::max)
    }
}
