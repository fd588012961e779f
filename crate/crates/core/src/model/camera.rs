use crate::error::{Error, Result};
use crate::linalg::{mat_vec3, mul3, norm3, sub3, transpose3, Mat3, Vec3};
use crate::real::{cast, Real};

/// Pinhole camera. `world_to_cam` maps world points into a camera frame with
/// +x right, +y down and +z forward.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera<T> {
    pub world_to_cam: [[T; 4]; 4],
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: usize,
    pub height: usize,
    pub near: T,
}

pub const DEFAULT_NEAR: f64 = 0.2;

impl<T: Real> Camera<T> {
    pub fn new(world_to_cam: [[T; 4]; 4], fx: T, fy: T, cx: T, cy: T, width: usize, height: usize) -> Result<Self> {
        let cam = Self {
            world_to_cam,
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            near: T::lit(DEFAULT_NEAR),
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Identity pose with the principal point at the image centre.
    pub fn identity(width: usize, height: usize, focal: T) -> Self {
        let mut w = [[T::zero(); 4]; 4];
        for (i, row) in w.iter_mut().enumerate() {
            row[i] = T::one();
        }
        Self {
            world_to_cam: w,
            fx: focal,
            fy: focal,
            cx: T::lit(width as f64 / 2.0),
            cy: T::lit(height as f64 / 2.0),
            width,
            height,
            near: T::lit(DEFAULT_NEAR),
        }
    }

    /// Camera at `eye` looking at `target`, with `up` mapped to image -y.
    pub fn look_at(eye: Vec3<T>, target: Vec3<T>, up: Vec3<T>, width: usize, height: usize, focal: T) -> Result<Self> {
        let f = sub3(&target, &eye);
        let fn_ = norm3(&f);
        let z = f.map(|v| v / fn_);
        let x = cross(&z, &up);
        let xn = norm3(&x);
        if !(xn > T::lit(1e-9)) || !(fn_ > T::zero()) {
            return Err(Error::Camera("look_at: degenerate eye/target/up".into()));
        }
        let x = x.map(|v| v / xn);
        let y = cross(&z, &x);
        let r = [x, y, z];
        let t = mat_vec3(&r, &eye).map(|v| -v);
        let mut w = [[T::zero(); 4]; 4];
        for i in 0..3 {
            w[i][..3].copy_from_slice(&r[i]);
            w[i][3] = t[i];
        }
        w[3][3] = T::one();
        let mut cam = Self::identity(width, height, focal);
        cam.world_to_cam = w;
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Camera("width and height must be positive".into()));
        }
        let r = self.rotation();
        let rtr = mul3(&transpose3(&r), &r);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                if (rtr[i][j].as_f64() - want).abs() > 1e-5 {
                    return Err(Error::Camera("rotation block is not orthonormal".into()));
                }
            }
        }
        let w = &self.world_to_cam;
        let bottom = [w[3][0], w[3][1], w[3][2], w[3][3]].map(|v| v.as_f64());
        if bottom != [0.0, 0.0, 0.0, 1.0] {
            return Err(Error::Camera("bottom row must be (0, 0, 0, 1)".into()));
        }
        if !(self.fx > T::zero() && self.fy > T::zero()) {
            return Err(Error::Camera("focal lengths must be positive".into()));
        }
        Ok(())
    }

    pub fn rotation(&self) -> Mat3<T> {
        let w = &self.world_to_cam;
        [
            [w[0][0], w[0][1], w[0][2]],
            [w[1][0], w[1][1], w[1][2]],
            [w[2][0], w[2][1], w[2][2]],
        ]
    }

    pub fn translation(&self) -> Vec3<T> {
        let w = &self.world_to_cam;
        [w[0][3], w[1][3], w[2][3]]
    }

    pub fn to_camera(&self, p: &Vec3<T>) -> Vec3<T> {
        let r = mat_vec3(&self.rotation(), p);
        let t = self.translation();
        [r[0] + t[0], r[1] + t[1], r[2] + t[2]]
    }

    /// World-space position of the camera centre, `-R^T t`.
    pub fn center(&self) -> Vec3<T> {
        mat_vec3(&transpose3(&self.rotation()), &self.translation()).map(|v| -v)
    }

    pub fn cast<U: Real>(&self) -> Camera<U> {
        Camera {
            world_to_cam: self.world_to_cam.map(|r| r.map(cast)),
            fx: cast(self.fx),
            fy: cast(self.fy),
            cx: cast(self.cx),
            cy: cast(self.cy),
            width: self.width,
            height: self.height,
            near: cast(self.near),
        }
    }
}

fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
