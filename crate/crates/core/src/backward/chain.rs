use crate::binning::{perspective_jacobian, DILATION};
use crate::error::Result;
use crate::linalg::{mat_vec3, mul3, norm3, quat_to_mat, quat_to_mat_jacobian, sub3, transpose3, Mat3};
use crate::model::{sh, sigmoid, Camera, Gaussian3D, OPACITY_MAX};
use crate::real::Real;

use super::tile::SplatGrad;

/// Gradient of the loss with respect to one Gaussian's raw parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianGrad<T> {
    pub mean: [T; 3],
    pub log_scale: [T; 3],
    pub rotation: [T; 4],
    pub opacity_logit: T,
    pub sh: Vec<[T; 3]>,
}

impl<T: Real> GaussianGrad<T> {
    pub fn zeros(sh_len: usize) -> Self {
        Self {
            mean: [T::zero(); 3],
            log_scale: [T::zero(); 3],
            rotation: [T::zero(); 4],
            opacity_logit: T::zero(),
            sh: vec![[T::zero(); 3]; sh_len],
        }
    }

    pub fn add(&mut self, o: &Self) {
        for i in 0..3 {
            self.mean[i] = self.mean[i] + o.mean[i];
            self.log_scale[i] = self.log_scale[i] + o.log_scale[i];
        }
        for i in 0..4 {
            self.rotation[i] = self.rotation[i] + o.rotation[i];
        }
        self.opacity_logit = self.opacity_logit + o.opacity_logit;
        for (a, b) in self.sh.iter_mut().zip(&o.sh) {
            for c in 0..3 {
                a[c] = a[c] + b[c];
            }
        }
    }

    /// Flattened in the same order as [`Gaussian3D::params`].
    pub fn flat(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(11 + 3 * self.sh.len());
        v.extend_from_slice(&self.mean);
        v.extend_from_slice(&self.log_scale);
        v.extend_from_slice(&self.rotation);
        v.push(self.opacity_logit);
        v.extend(self.sh.iter().flatten());
        v
    }

    pub fn is_finite(&self) -> bool {
        self.flat().iter().all(|v| v.is_finite())
    }
}

fn sym2_mul<T: Real>(a: &[[T; 2]; 2], b: &[[T; 2]; 2]) -> [[T; 2]; 2] {
    let mut o = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    o
}

/// Chains a splat's screen-space gradient back to its Gaussian's parameters.
pub fn chain_to_3d<T: Real>(sg: &SplatGrad<T>, g: &Gaussian3D<T>, cam: &Camera<T>) -> Result<GaussianGrad<T>> {
    let act = g.activate()?;
    let degree = g.sh_degree()?;
    let mut out = GaussianGrad::zeros(g.sh.len());

    // Opacity activation; the clamp at 0.99 blocks the gradient.
    let s = sigmoid(g.opacity_logit);
    if s < T::lit(OPACITY_MAX) {
        out.opacity_logit = sg.opacity * s * (T::one() - s);
    }

    // Colour from spherical harmonics along the viewing direction.
    let v = sub3(&g.mean, &cam.center());
    let n = norm3(&v);
    let dir = v.map(|e| e / n);
    let raw = sh::eval_sh_unclamped(&g.sh, &dir, degree)?;
    let d_rgb: [T; 3] = [0, 1, 2].map(|c| if raw[c] < T::zero() { T::zero() } else { sg.rgb[c] });
    let basis = sh::basis(&dir, degree);
    let basis_grad = sh::basis_grad(&dir, degree);
    let mut d_dir = [T::zero(); 3];
    for (k, coeff) in g.sh.iter().enumerate() {
        for c in 0..3 {
            out.sh[k][c] = basis[k] * d_rgb[c];
            let w = coeff[c] * d_rgb[c];
            for i in 0..3 {
                d_dir[i] = d_dir[i] + w * basis_grad[k][i];
            }
        }
    }
    let proj = d_dir[0] * dir[0] + d_dir[1] * dir[1] + d_dir[2] * dir[2];
    for i in 0..3 {
        out.mean[i] = out.mean[i] + (d_dir[i] - dir[i] * proj) / n;
    }

    // Camera-space position and screen mean.
    let t = cam.to_camera(&g.mean);
    let iz = T::one() / t[2];
    let iz2 = iz * iz;
    let mut d_t = [
        sg.mean2[0] * cam.fx * iz,
        sg.mean2[1] * cam.fy * iz,
        -(sg.mean2[0] * cam.fx * t[0] + sg.mean2[1] * cam.fy * t[1]) * iz2,
    ];

    // Conic -> 2D covariance.
    let w = cam.rotation();
    let rot = quat_to_mat(&act.rotation);
    let mut m = rot;
    for row in m.iter_mut() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = *e * act.scale[j];
        }
    }
    let sigma = mul3(&m, &transpose3(&m));
    let view_cov = mul3(&mul3(&w, &sigma), &transpose3(&w));
    let j = perspective_jacobian(cam, &t);
    let mut cov2 = [[T::zero(); 2]; 2];
    for r in 0..2 {
        let jv = mat_vec3(&view_cov, &j[r]);
        for c in 0..2 {
            cov2[r][c] = j[c][0] * jv[0] + j[c][1] * jv[1] + j[c][2] * jv[2];
        }
    }
    let d = T::lit(DILATION);
    let (ca, cb, cc) = (cov2[0][0] + d, cov2[0][1], cov2[1][1] + d);
    let inv_det = T::one() / (ca * cc - cb * cb);
    let conic = [[cc * inv_det, -cb * inv_det], [-cb * inv_det, ca * inv_det]];
    let half = T::lit(0.5);
    let g_conic = [[sg.conic[0], half * sg.conic[1]], [half * sg.conic[1], sg.conic[2]]];
    let g_cov2 = sym2_mul(&sym2_mul(&conic, &g_conic), &conic).map(|r| r.map(|e| -e));

    // 2D covariance -> view covariance and Jacobian.
    let mut d_view: Mat3<T> = [[T::zero(); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let mut acc = T::zero();
            for r in 0..2 {
                for c in 0..2 {
                    acc = acc + j[r][a] * g_cov2[r][c] * j[c][b];
                }
            }
            d_view[a][b] = acc;
        }
    }
    let two = T::lit(2.0);
    let mut d_j = [[T::zero(); 3]; 2];
    for r in 0..2 {
        for a in 0..3 {
            let mut acc = T::zero();
            for c in 0..2 {
                for b in 0..3 {
                    acc = acc + g_cov2[r][c] * j[c][b] * view_cov[b][a];
                }
            }
            d_j[r][a] = two * acc;
        }
    }
    let (fx, fy) = (cam.fx, cam.fy);
    d_t[0] = d_t[0] - d_j[0][2] * fx * iz2;
    d_t[1] = d_t[1] - d_j[1][2] * fy * iz2;
    d_t[2] = d_t[2] - (d_j[0][0] * fx + d_j[1][1] * fy) * iz2
        + two * (d_j[0][2] * fx * t[0] + d_j[1][2] * fy * t[1]) * iz2 * iz;

    let wt = transpose3(&w);
    let d_mean = mat_vec3(&wt, &d_t);
    for i in 0..3 {
        out.mean[i] = out.mean[i] + d_mean[i];
    }

    // View covariance -> world covariance -> scale and rotation.
    let d_sigma = mul3(&mul3(&wt, &d_view), &w);
    let d_m = mul3(&d_sigma, &m).map(|r| r.map(|e| two * e));
    let mut d_rot = [[T::zero(); 3]; 3];
    for jj in 0..3 {
        let mut ds = T::zero();
        for i in 0..3 {
            ds = ds + d_m[i][jj] * rot[i][jj];
            d_rot[i][jj] = d_m[i][jj] * act.scale[jj];
        }
        out.log_scale[jj] = ds * act.scale[jj];
    }
    let jac = quat_to_mat_jacobian(&act.rotation);
    let mut d_qn = [T::zero(); 4];
    for k in 0..4 {
        let mut acc = T::zero();
        for i in 0..3 {
            for jj in 0..3 {
                acc = acc + d_rot[i][jj] * jac[k][i][jj];
            }
        }
        d_qn[k] = acc;
    }
    let q = &g.rotation;
    let qn = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    let along = (0..4).fold(T::zero(), |a, k| a + act.rotation[k] * d_qn[k]);
    for k in 0..4 {
        out.rotation[k] = (d_qn[k] - act.rotation[k] * along) / qn;
    }
    Ok(out)
}
