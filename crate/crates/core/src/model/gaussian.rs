use crate::error::{Error, Result};
use crate::linalg::{mul3, quat_to_mat, transpose3, Mat3};
use crate::real::{cast, Real};

use super::sh;

/// Upper bound applied to activated opacity; keeps `1 / (1 - alpha)` finite.
pub const OPACITY_MAX: f64 = 0.99;

/// A world-space Gaussian in storage (pre-activation) form.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian3D<T> {
    pub mean: [T; 3],
    /// Log of the per-axis standard deviation.
    pub log_scale: [T; 3],
    /// Quaternion `(w, x, y, z)`, not necessarily normalised.
    pub rotation: [T; 4],
    pub opacity_logit: T,
    /// One RGB triple per basis function, `(degree + 1)^2` entries.
    pub sh: Vec<[T; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Activated<T> {
    pub scale: [T; 3],
    pub rotation: [T; 4],
    pub opacity: T,
}

/// Learning-rate group a flattened parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Position,
    Scale,
    Rotation,
    Opacity,
    Sh,
}

pub fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<T: Real> Gaussian3D<T> {
    /// Builds a Gaussian from activated values by inverting the activations.
    pub fn from_activated(mean: [T; 3], scale: [T; 3], rotation: [T; 4], opacity: T, sh: Vec<[T; 3]>) -> Self {
        Self {
            mean,
            log_scale: scale.map(|s| s.ln()),
            rotation,
            opacity_logit: (opacity / (T::one() - opacity)).ln(),
            sh,
        }
    }

    pub fn sh_degree(&self) -> Result<usize> {
        sh::degree_for_count(self.sh.len())
    }

    pub fn activate(&self) -> Result<Activated<T>> {
        let q = &self.rotation;
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::DegenerateRotation);
        }
        Ok(Activated {
            scale: self.log_scale.map(|s| s.exp()),
            rotation: q.map(|v| v / n),
            opacity: sigmoid(self.opacity_logit).min(T::lit(OPACITY_MAX)),
        })
    }

    pub fn cast<U: Real>(&self) -> Gaussian3D<U> {
        Gaussian3D {
            mean: self.mean.map(cast),
            log_scale: self.log_scale.map(cast),
            rotation: self.rotation.map(cast),
            opacity_logit: cast(self.opacity_logit),
            sh: self.sh.iter().map(|c| c.map(cast)).collect(),
        }
    }

    /// Number of scalar trainable parameters.
    pub fn param_count(&self) -> usize {
        11 + 3 * self.sh.len()
    }

    /// Flattened parameters: mean, log-scale, rotation, opacity logit, then
    /// SH coefficients basis-major.
    pub fn params(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.mean);
        p.extend_from_slice(&self.log_scale);
        p.extend_from_slice(&self.rotation);
        p.push(self.opacity_logit);
        for c in &self.sh {
            p.extend_from_slice(c);
        }
        p
    }

    pub fn param(&self, i: usize) -> T {
        match i {
            0..=2 => self.mean[i],
            3..=5 => self.log_scale[i - 3],
            6..=9 => self.rotation[i - 6],
            10 => self.opacity_logit,
            _ => self.sh[(i - 11) / 3][(i - 11) % 3],
        }
    }

    pub fn param_mut(&mut self, i: usize) -> &mut T {
        match i {
            0..=2 => &mut self.mean[i],
            3..=5 => &mut self.log_scale[i - 3],
            6..=9 => &mut self.rotation[i - 6],
            10 => &mut self.opacity_logit,
            _ => &mut self.sh[(i - 11) / 3][(i - 11) % 3],
        }
    }

    pub fn param_group(i: usize) -> ParamGroup {
        match i {
            0..=2 => ParamGroup::Position,
            3..=5 => ParamGroup::Scale,
            6..=9 => ParamGroup::Rotation,
            10 => ParamGroup::Opacity,
            _ => ParamGroup::Sh,
        }
    }

    pub fn param_name(i: usize) -> &'static str {
        const NAMES: [&str; 11] = [
            "mean.x",
            "mean.y",
            "mean.z",
            "log_scale.0",
            "log_scale.1",
            "log_scale.2",
            "rot.w",
            "rot.x",
            "rot.y",
            "rot.z",
            "opacity_logit",
        ];
        NAMES.get(i).copied().unwrap_or("sh")
    }
}

/// Symmetric 3x3 covariance stored as its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance3<T> {
    pub xx: T,
    pub xy: T,
    pub xz: T,
    pub yy: T,
    pub yz: T,
    pub zz: T,
}

impl<T: Real> Covariance3<T> {
    pub fn from_matrix(m: &Mat3<T>) -> Self {
        Self {
            xx: m[0][0],
            xy: m[0][1],
            xz: m[0][2],
            yy: m[1][1],
            yz: m[1][2],
            zz: m[2][2],
        }
    }

    pub fn to_matrix(&self) -> Mat3<T> {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }
}

/// `R diag(s)^2 R^T` for per-axis standard deviations `s` and unit quaternion `rot`.
pub fn covariance3<T: Real>(scale: &[T; 3], rot: &[T; 4]) -> Covariance3<T> {
    let r = quat_to_mat(rot);
    let mut m = r;
    for row in m.iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = *v * scale[j];
        }
    }
    Covariance3::from_matrix(&mul3(&m, &transpose3(&m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn g(log_scale: [f64; 3], rotation: [f64; 4], opacity_logit: f64) -> Gaussian3D<f64> {
        Gaussian3D {
            mean: [0.0; 3],
            log_scale,
            rotation,
            opacity_logit,
            sh: vec![[0.0; 3]],
        }
    }

    #[test]
    fn identity_activation() {
        let a = g([0.0; 3], [1.0, 0.0, 0.0, 0.0], 0.0).activate().unwrap();
        assert_eq!(a.scale, [1.0, 1.0, 1.0]);
        assert_eq!(a.opacity, 0.5);
        assert_eq!(a.rotation, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn opacity_saturates_at_clamp() {
        let a = g([0.0; 3], [1.0, 0.0, 0.0, 0.0], 20.0).activate().unwrap();
        assert_eq!(a.opacity, 0.99);
    }

    #[test]
    fn log_scale_exponentiates() {
        let a = g([LN_2, 0.0, -LN_2], [1.0, 0.0, 0.0, 0.0], 0.0).activate().unwrap();
        assert!((a.scale[0] - 2.0).abs() < 1e-15);
        assert_eq!(a.scale[1], 1.0);
        assert!((a.scale[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_quaternion_is_degenerate() {
        let err = g([0.0; 3], [0.0; 4], 0.0).activate().unwrap_err();
        assert!(matches!(err, Error::DegenerateRotation));
    }

    #[test]
    fn identity_covariance() {
        let c = covariance3(&[1.0_f64, 1.0, 1.0], &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(c.to_matrix(), crate::linalg::identity3::<f64>());
        let c = covariance3(&[2.0_f64, 1.0, 1.0], &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(c.to_matrix(), [[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    // Dense oracle: build R for a 90 degree turn about z by hand and form
    // R S S^T R^T with plain loops.
    #[test]
    fn rotated_axis_aligned_covariance_matches_dense_product() {
        let h = std::f64::consts::FRAC_PI_4;
        let q = [h.cos(), 0.0, 0.0, h.sin()];
        let c = covariance3(&[2.0_f64, 1.0, 1.0], &q).to_matrix();
        let r = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let s2 = [4.0, 1.0, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                let mut want = 0.0;
                for k in 0..3 {
                    want += r[i][k] * s2[k] * r[j][k];
                }
                assert!((c[i][j] - want).abs() < 1e-12);
            }
        }
        assert!((c[0][0] - 1.0).abs() < 1e-12 && (c[1][1] - 4.0).abs() < 1e-12);
    }

    fn min_eigenvalue_sym3(m: &Mat3<f64>) -> f64 {
        // Closed-form trigonometric eigenvalues of a symmetric 3x3 matrix.
        let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
        let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
        if p1 == 0.0 {
            return m[0][0].min(m[1][1]).min(m[2][2]);
        }
        let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let mut b = *m;
        for i in 0..3 {
            for j in 0..3 {
                b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
            }
        }
        let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
            + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
        let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
        q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
    }

    proptest! {
        #[test]
        fn covariance_is_symmetric_psd(
            q in prop::array::uniform4(-1.0f64..1.0),
            s in prop::array::uniform3(0.01f64..3.0),
        ) {
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assume!(n > 1e-3);
            let q = q.map(|v| v / n);
            let m = covariance3(&s, &q).to_matrix();
            for i in 0..3 { for j in 0..3 { prop_assert_eq!(m[i][j], m[j][i]); } }
            prop_assert!(min_eigenvalue_sym3(&m) >= -1e-9);
        }

        #[test]
        fn inverse_activation_round_trips(o in 0.01f64..0.98, s in prop::array::uniform3(0.01f64..5.0)) {
            let g = Gaussian3D::from_activated([0.0; 3], s, [1.0, 0.0, 0.0, 0.0], o, vec![[0.0; 3]]);
            let a = g.activate().unwrap();
            prop_assert!((a.opacity - o).abs() <= 1e-6);
            for k in 0..3 { prop_assert!((a.scale[k] - s[k]).abs() <= 1e-6 * s[k].max(1.0)); }
        }

        #[test]
        fn activated_rotation_is_unit(q in prop::array::uniform4(-5.0f64..5.0)) {
            let g = g([0.0; 3], q, 0.0);
            if let Ok(a) = g.activate() {
                let n = a.rotation.iter().map(|v| v * v).sum::<f64>().sqrt();
                prop_assert!((n - 1.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn flattened_params_round_trip_through_accessors() {
        let mut g = Gaussian3D {
            mean: [1.0, 2.0, 3.0],
            log_scale: [4.0, 5.0, 6.0],
            rotation: [7.0, 8.0, 9.0, 10.0],
            opacity_logit: 11.0,
            sh: vec![[12.0, 13.0, 14.0], [15.0, 16.0, 17.0], [0.0; 3], [0.0; 3]],
        };
        let p = g.params();
        assert_eq!(p.len(), g.param_count());
        for (i, v) in p.iter().enumerate() {
            assert_eq!(g.param(i), *v);
        }
        *g.param_mut(14) = -1.0;
        assert_eq!(g.sh[1][0], -1.0);
    }
}
