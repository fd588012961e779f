//! Real spherical harmonics up to degree 3, using the basis ordering, sign
//! convention and `+0.5` offset of the common 3DGS PLY interchange format.

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::real::Real;

pub const MAX_DEGREE: usize = 3;
pub const MAX_COEFFS: usize = 16;

pub const SH_C0: f64 = 0.282_094_791_773_878_14;
pub const SH_C1: f64 = 0.488_602_511_902_919_9;
pub const SH_C2: [f64; 5] = [
    1.092_548_430_592_079_2,
    -1.092_548_430_592_079_2,
    0.315_391_565_252_520_05,
    -1.092_548_430_592_079_2,
    0.546_274_215_296_039_6,
];
pub const SH_C3: [f64; 7] = [
    -0.590_043_589_926_643_5,
    2.890_611_442_640_554,
    -0.457_045_799_464_465_8,
    0.373_176_332_590_115_4,
    -0.457_045_799_464_465_8,
    1.445_305_721_320_277,
    -0.590_043_589_926_643_5,
];

pub const fn coeff_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

pub fn degree_for_count(count: usize) -> Result<usize> {
    match count {
        1 => Ok(0),
        4 => Ok(1),
        9 => Ok(2),
        16 => Ok(3),
        _ => Err(Error::ShCoefficients {
            degree: 0,
            expected: 1,
            got: count,
        }),
    }
}

/// Converts a target colour channel to the DC coefficient that reproduces it.
pub fn channel_to_dc<T: Real>(rgb: T) -> T {
    (rgb - T::lit(0.5)) / T::lit(SH_C0)
}

/// Basis values `Y_k(dir)` for `k < coeff_count(degree)`; remaining slots are zero.
pub fn basis<T: Real>(dir: &Vec3<T>, degree: usize) -> [T; MAX_COEFFS] {
    let mut b = [T::zero(); MAX_COEFFS];
    let c = T::lit;
    let [x, y, z] = *dir;
    b[0] = c(SH_C0);
    if degree > 0 {
        b[1] = -c(SH_C1) * y;
        b[2] = c(SH_C1) * z;
        b[3] = -c(SH_C1) * x;
    }
    if degree > 1 {
        let (xx, yy, zz) = (x * x, y * y, z * z);
        b[4] = c(SH_C2[0]) * x * y;
        b[5] = c(SH_C2[1]) * y * z;
        b[6] = c(SH_C2[2]) * (c(2.0) * zz - xx - yy);
        b[7] = c(SH_C2[3]) * x * z;
        b[8] = c(SH_C2[4]) * (xx - yy);
        if degree > 2 {
            b[9] = c(SH_C3[0]) * y * (c(3.0) * xx - yy);
            b[10] = c(SH_C3[1]) * x * y * z;
            b[11] = c(SH_C3[2]) * y * (c(4.0) * zz - xx - yy);
            b[12] = c(SH_C3[3]) * z * (c(2.0) * zz - c(3.0) * xx - c(3.0) * yy);
            b[13] = c(SH_C3[4]) * x * (c(4.0) * zz - xx - yy);
            b[14] = c(SH_C3[5]) * z * (xx - yy);
            b[15] = c(SH_C3[6]) * x * (xx - c(3.0) * yy);
        }
    }
    b
}

/// Gradients `dY_k/d(x, y, z)` of each basis polynomial at `dir`.
pub fn basis_grad<T: Real>(dir: &Vec3<T>, degree: usize) -> [Vec3<T>; MAX_COEFFS] {
    let o = T::zero();
    let mut g = [[o; 3]; MAX_COEFFS];
    let c = T::lit;
    let [x, y, z] = *dir;
    if degree > 0 {
        let k = c(SH_C1);
        g[1] = [o, -k, o];
        g[2] = [o, o, k];
        g[3] = [-k, o, o];
    }
    if degree > 1 {
        let s = |k: f64, v: Vec3<T>| v.map(|e| e * c(k));
        g[4] = s(SH_C2[0], [y, x, o]);
        g[5] = s(SH_C2[1], [o, z, y]);
        g[6] = s(SH_C2[2], [c(-2.0) * x, c(-2.0) * y, c(4.0) * z]);
        g[7] = s(SH_C2[3], [z, o, x]);
        g[8] = s(SH_C2[4], [c(2.0) * x, c(-2.0) * y, o]);
        if degree > 2 {
            let (xx, yy, zz) = (x * x, y * y, z * z);
            g[9] = s(SH_C3[0], [c(6.0) * x * y, c(3.0) * (xx - yy), o]);
            g[10] = s(SH_C3[1], [y * z, x * z, x * y]);
            g[11] = s(
                SH_C3[2],
                [c(-2.0) * x * y, c(4.0) * zz - xx - c(3.0) * yy, c(8.0) * y * z],
            );
            g[12] = s(
                SH_C3[3],
                [
                    c(-6.0) * x * z,
                    c(-6.0) * y * z,
                    c(6.0) * zz - c(3.0) * xx - c(3.0) * yy,
                ],
            );
            g[13] = s(
                SH_C3[4],
                [c(4.0) * zz - c(3.0) * xx - yy, c(-2.0) * x * y, c(8.0) * x * z],
            );
            g[14] = s(SH_C3[5], [c(2.0) * x * z, c(-2.0) * y * z, xx - yy]);
            g[15] = s(SH_C3[6], [c(3.0) * (xx - yy), c(-6.0) * x * y, o]);
        }
    }
    g
}

/// Colour before the lower clamp: `0.5 + sum_k c_k Y_k(dir)` per channel.
pub fn eval_sh_unclamped<T: Real>(coeffs: &[[T; 3]], dir: &Vec3<T>, degree: usize) -> Result<[T; 3]> {
    if degree > MAX_DEGREE {
        return Err(Error::ShDegree(degree));
    }
    let expected = coeff_count(degree);
    if coeffs.len() != expected {
        return Err(Error::ShCoefficients {
            degree,
            expected,
            got: coeffs.len(),
        });
    }
    let b = basis(dir, degree);
    let mut rgb = [T::lit(0.5); 3];
    for (k, c) in coeffs.iter().enumerate() {
        for ch in 0..3 {
            rgb[ch] = rgb[ch] + b[k] * c[ch];
        }
    }
    Ok(rgb)
}

/// View-dependent colour clamped below at zero.
pub fn eval_sh<T: Real>(coeffs: &[[T; 3]], dir: &Vec3<T>, degree: usize) -> Result<[T; 3]> {
    Ok(eval_sh_unclamped(coeffs, dir, degree)?.map(|v| v.max(T::zero())))
}
