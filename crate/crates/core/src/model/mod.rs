//! Domain types: Gaussians, cameras, images, and the spherical-harmonic
//! colour model.

mod camera;
mod gaussian;
mod image;
pub mod sh;

pub use camera::Camera;
pub use gaussian::{covariance3, sigmoid, Activated, Covariance3, Gaussian3D, ParamGroup, OPACITY_MAX};
pub use image::ImageRGB;
pub use sh::eval_sh;
