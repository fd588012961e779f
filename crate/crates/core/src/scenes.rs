//! Seeded synthetic scene generators used by the tests, examples and the
//! analysis commands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{sh, Camera, Gaussian3D};
use crate::real::Real;

/// Gaussians with the camera they were generated for.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene<T> {
    pub gaussians: Vec<Gaussian3D<T>>,
    pub camera: Camera<T>,
}

impl SyntheticScene<f64> {
    pub fn cast<U: Real>(&self) -> SyntheticScene<U> {
        SyntheticScene {
            gaussians: self.gaussians.iter().map(|g| g.cast()).collect(),
            camera: self.camera.cast(),
        }
    }
}

/// Knobs for [`generate`]. Sizes are screen-space standard deviations in
/// pixels; depths are camera-space z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneParams {
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub focal: f64,
    pub depth: (f64, f64),
    pub sigma_px: (f64, f64),
    pub opacity: (f64, f64),
    pub sh_degree: usize,
    /// Fraction of the image added as margin around the spawn region.
    pub margin: f64,
}

impl SceneParams {
    pub fn new(count: usize, width: usize, height: usize) -> Self {
        Self {
            count,
            width,
            height,
            focal: width.max(height) as f64,
            depth: (2.0, 8.0),
            sigma_px: (1.0, 0.08 * width.max(height) as f64),
            opacity: (0.1, 0.95),
            sh_degree: 1,
            margin: 0.1,
        }
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn random_gaussian(rng: &mut ChaCha8Rng, p: &SceneParams, cam: &Camera<f64>) -> Gaussian3D<f64> {
    let (w, h) = (p.width as f64, p.height as f64);
    let u = rng.random_range(-p.margin * w..=(1.0 + p.margin) * w);
    let v = rng.random_range(-p.margin * h..=(1.0 + p.margin) * h);
    let z = rng.random_range(p.depth.0..=p.depth.1);
    let mean = [(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z];
    let log_scale = [0, 1, 2].map(|_| (rng.random_range(p.sigma_px.0..=p.sigma_px.1) * z / p.focal).ln());
    let rotation = loop {
        let q: [f64; 4] = [0, 1, 2, 3].map(|_| StandardNormal.sample(&mut *rng));
        if q.iter().map(|e| e * e).sum::<f64>() > 0.1 {
            break q;
        }
    };
    let opacity_logit = logit(rng.random_range(p.opacity.0..=p.opacity.1));
    let mut coeffs = vec![[0.0; 3]; sh::coeff_count(p.sh_degree)];
    coeffs[0] = [0, 1, 2].map(|_| sh::channel_to_dc(rng.random_range(0.15..=0.95)));
    for c in coeffs.iter_mut().skip(1) {
        *c = [0, 1, 2].map(|_| rng.random_range(-0.08..=0.08));
    }
    Gaussian3D {
        mean,
        log_scale,
        rotation,
        opacity_logit,
        sh: coeffs,
    }
}

/// Seeded random scene in front of an identity camera.
pub fn generate(p: &SceneParams, seed: u64) -> SyntheticScene<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let camera = Camera::identity(p.width, p.height, p.focal);
    let gaussians = (0..p.count).map(|_| random_gaussian(&mut rng, p, &camera)).collect();
    SyntheticScene { gaussians, camera }
}

/// General-purpose random scene.
pub fn random_scene(count: usize, width: usize, height: usize, seed: u64) -> SyntheticScene<f64> {
    generate(&SceneParams::new(count, width, height), seed)
}

/// Many large splats, like distant outdoor geometry: mean 3-sigma box well
/// above 48 pixels at 512x512.
pub fn outdoor_scene(count: usize, size: usize, seed: u64) -> SyntheticScene<f64> {
    let p = SceneParams {
        sigma_px: (0.012 * size as f64, 0.04 * size as f64),
        depth: (5.0, 40.0),
        opacity: (0.05, 0.6),
        sh_degree: 0,
        margin: 0.0,
        ..SceneParams::new(count, size, size)
    };
    generate(&p, seed)
}

/// Sub-pixel splats that rarely straddle tile boundaries.
pub fn small_splat_scene(count: usize, size: usize, seed: u64) -> SyntheticScene<f64> {
    let p = SceneParams {
        sigma_px: (0.2, 1.0),
        sh_degree: 0,
        margin: 0.0,
        ..SceneParams::new(count, size, size)
    };
    generate(&p, seed)
}

/// Heavily overlapping, mostly opaque splats, like a cluttered room.
pub fn indoor_scene(count: usize, size: usize, seed: u64) -> SyntheticScene<f64> {
    let p = SceneParams {
        sigma_px: (0.06 * size as f64, 0.16 * size as f64),
        depth: (1.0, 6.0),
        opacity: (0.7, 0.98),
        sh_degree: 0,
        margin: 0.05,
        ..SceneParams::new(count, size, size)
    };
    generate(&p, seed)
}

/// Random background splats behind a wall of large near-opaque splats that
/// covers the whole image.
pub fn opaque_foreground_scene(count: usize, size: usize, seed: u64) -> SyntheticScene<f64> {
    let mut s = generate(
        &SceneParams {
            depth: (6.0, 12.0),
            sh_degree: 0,
            ..SceneParams::new(count, size, size)
        },
        seed,
    );
    let step = size as f64 / 4.0;
    let z = 2.0;
    for j in 0..5 {
        for i in 0..5 {
            let (u, v) = (i as f64 * step, j as f64 * step);
            let cam = &s.camera;
            s.gaussians.push(Gaussian3D {
                mean: [(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z],
                log_scale: [(step * z / cam.fx).ln(), (step * z / cam.fy).ln(), -3.0],
                rotation: [1.0, 0.0, 0.0, 0.0],
                opacity_logit: 8.0,
                sh: vec![[sh::channel_to_dc(0.3); 3]],
            });
        }
    }
    s
}

/// Small scenes for gradient checks: every splat is well inside the view and
/// the colours stay away from the lower clamp.
pub fn gradcheck_scene(count: usize, size: usize, sh_degree: usize, seed: u64) -> SyntheticScene<f64> {
    let p = SceneParams {
        sigma_px: (0.8, 0.3 * size as f64),
        depth: (2.0, 5.0),
        opacity: (0.1, 0.9),
        sh_degree,
        margin: 0.0,
        ..SceneParams::new(count, size, size)
    };
    generate(&p, seed)
}

/// Ground-truth and initial scenes for the toy fitting problem; the target
/// image is rendered from the first.
pub fn toy_training_pair(count: usize, size: usize, seed: u64) -> (SyntheticScene<f64>, SyntheticScene<f64>) {
    let p = SceneParams {
        sigma_px: (0.8, 0.25 * size as f64),
        depth: (3.0, 5.0),
        opacity: (0.3, 0.9),
        sh_degree: 0,
        margin: 0.0,
        ..SceneParams::new(count, size, size)
    };
    (generate(&p, seed), generate(&p, seed.wrapping_add(0x9e37_79b9)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded() {
        assert_eq!(random_scene(20, 32, 32, 5), random_scene(20, 32, 32, 5));
        assert_ne!(random_scene(20, 32, 32, 5), random_scene(20, 32, 32, 6));
    }

    #[test]
    fn screen_size_follows_params() {
        let p = SceneParams {
            sigma_px: (4.0, 4.0),
            ..SceneParams::new(10, 64, 64)
        };
        let s = generate(&p, 1);
        for g in &s.gaussians {
            for ls in g.log_scale {
                assert!((ls.exp() * p.focal / g.mean[2] - 4.0).abs() < 1e-9);
            }
        }
    }
}
