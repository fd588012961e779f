//! Fixed-size vector and matrix helpers used by projection and its adjoint.

use crate::real::Real;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

pub fn zero3<T: Real>() -> Mat3<T> {
    [[T::zero(); 3]; 3]
}

pub fn identity3<T: Real>() -> Mat3<T> {
    let mut m = zero3();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn transpose3<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let mut t = zero3();
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

pub fn mul3<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut r = zero3();
    for i in 0..3 {
        for j in 0..3 {
            let mut s = T::zero();
            for k in 0..3 {
                s = s + a[i][k] * b[k][j];
            }
            r[i][j] = s;
        }
    }
    r
}

pub fn mat_vec3<T: Real>(m: &Mat3<T>, v: &Vec3<T>) -> Vec3<T> {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn dot3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3<T: Real>(v: &Vec3<T>) -> T {
    dot3(v, v).sqrt()
}

pub fn sub3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Rotation matrix of a unit quaternion stored as `(w, x, y, z)`.
pub fn quat_to_mat<T: Real>(q: &[T; 4]) -> Mat3<T> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    let one = T::one();
    let two = T::lit(2.0);
    [
        [
            one - two * (y * y + z * z),
            two * (x * y - w * z),
            two * (x * z + w * y),
        ],
        [
            two * (x * y + w * z),
            one - two * (x * x + z * z),
            two * (y * z - w * x),
        ],
        [
            two * (x * z - w * y),
            two * (y * z + w * x),
            one - two * (x * x + y * y),
        ],
    ]
}

/// Partial derivatives `dR/dq_k` of [`quat_to_mat`] for `k = w, x, y, z`.
pub fn quat_to_mat_jacobian<T: Real>(q: &[T; 4]) -> [Mat3<T>; 4] {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    let t = T::lit(2.0);
    let o = T::zero();
    let m2 = T::lit(-2.0);
    let s = |m: [[T; 3]; 3]| m.map(|r| r.map(|v| v * t));
    [
        s([[o, -z, y], [z, o, -x], [-y, x, o]]),
        s([[o, y, z], [y, m2 * x, -w], [z, w, m2 * x]]),
        s([[m2 * y, x, w], [x, o, z], [-w, z, m2 * y]]),
        s([[m2 * z, -w, x], [w, m2 * z, y], [x, y, o]]),
    ]
}

/// Eigenvalues of the symmetric 2x2 matrix `[[a, b], [b, c]]`, largest first.
pub fn sym2_eigenvalues<T: Real>(a: T, b: T, c: T) -> (T, T) {
    let mid = T::lit(0.5) * (a + c);
    let det = a * c - b * b;
    let disc = (mid * mid - det).max(T::zero()).sqrt();
    (mid + disc, mid - disc)
}

/// Inverse of the symmetric 2x2 matrix `[[a, b], [b, c]]`, or `None` when
/// the determinant is at or below `min_det`.
pub fn sym2_inverse<T: Real>(a: T, b: T, c: T, min_det: T) -> Option<[T; 3]> {
    let det = a * c - b * b;
    if !(det > min_det) {
        return None;
    }
    let inv = T::one() / det;
    Some([c * inv, -b * inv, a * inv])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quaternion_jacobian_matches_finite_differences() {
        let q = [0.7_f64, -0.2, 0.4, 0.55];
        let jac = quat_to_mat_jacobian(&q);
        let h = 1e-6;
        for k in 0..4 {
            let mut qp = q;
            let mut qm = q;
            qp[k] += h;
            qm[k] -= h;
            let rp = quat_to_mat(&qp);
            let rm = quat_to_mat(&qm);
            for i in 0..3 {
                for j in 0..3 {
                    let fd = (rp[i][j] - rm[i][j]) / (2.0 * h);
                    assert!((fd - jac[k][i][j]).abs() < 1e-8, "k={k} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn eigenvalues_of_diagonal_and_rotated() {
        let (l0, l1) = sym2_eigenvalues(4.0_f64, 0.0, 1.0);
        assert_eq!((l0, l1), (4.0, 1.0));
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let (l0, l1) = sym2_eigenvalues(2.0_f64, 1.0, 2.0);
        assert!((l0 - 3.0).abs() < 1e-12 && (l1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_inverse_is_rejected() {
        assert!(sym2_inverse(1.0_f64, 1.0, 1.0, 1e-12).is_none());
        let inv = sym2_inverse(2.0_f64, 0.0, 4.0, 1e-12).unwrap();
        assert_eq!(inv, [0.5, 0.0, 0.25]);
    }
}
