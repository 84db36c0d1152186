//! Fixed-size 3-vector and 3×3 matrix helpers over plain arrays.
//!
//! Matrices are row-major: `m[row][col]`.

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];
pub type Mat3<T> = [[T; 3]; 3];

#[inline]
pub fn zero3<T: Real>() -> Vec3<T> {
    [T::zero(); 3]
}

#[inline]
pub fn add<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `a + s * b`
#[inline]
pub fn axpy<T: Real>(a: Vec3<T>, s: T, b: Vec3<T>) -> Vec3<T> {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

#[inline]
pub fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm<T: Real>(a: Vec3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    norm(sub(a, b))
}

#[inline]
pub fn neg<T: Real>(a: Vec3<T>) -> Vec3<T> {
    [-a[0], -a[1], -a[2]]
}

#[inline]
pub fn mat_zero<T: Real>() -> Mat3<T> {
    [[T::zero(); 3]; 3]
}

#[inline]
pub fn identity<T: Real>() -> Mat3<T> {
    let mut m = mat_zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

#[inline]
pub fn mat_vec<T: Real>(m: &Mat3<T>, v: Vec3<T>) -> Vec3<T> {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

/// `mᵀ v`
#[inline]
pub fn mat_t_vec<T: Real>(m: &Mat3<T>, v: Vec3<T>) -> Vec3<T> {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

#[inline]
pub fn transpose<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let mut t = mat_zero();
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

#[inline]
pub fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut c = mat_zero();
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

#[inline]
pub fn det<T: Real>(m: &Mat3<T>) -> T {
    dot(m[0], cross(m[1], m[2]))
}

/// Inverse of `m`, or `None` when `|det m| < min_det`.
pub fn inverse<T: Real>(m: &Mat3<T>, min_det: T) -> Option<Mat3<T>> {
    let d = det(m);
    if !(d.abs() >= min_det) {
        return None;
    }
    let inv_d = T::one() / d;
    // Rows of the inverse are the columns of the adjugate.
    let c0 = cross(m[1], m[2]);
    let c1 = cross(m[2], m[0]);
    let c2 = cross(m[0], m[1]);
    Some([
        [c0[0] * inv_d, c1[0] * inv_d, c2[0] * inv_d],
        [c0[1] * inv_d, c1[1] * inv_d, c2[1] * inv_d],
        [c0[2] * inv_d, c1[2] * inv_d, c2[2] * inv_d],
    ])
}

#[inline]
pub fn mat_scale<T: Real>(m: &Mat3<T>, s: T) -> Mat3<T> {
    [scale(m[0], s), scale(m[1], s), scale(m[2], s)]
}

/// `(m + mᵀ) / 2`, exactly symmetric.
pub fn symmetrize<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let half = T::lit(0.5);
    let mut s = *m;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let v = (m[i][j] + m[j][i]) * half;
            s[i][j] = v;
            s[j][i] = v;
        }
    }
    s
}

pub fn cast3<T: Real, U: Real>(v: Vec3<T>) -> Vec3<U> {
    [
        U::lit(v[0].to_f64_lossy()),
        U::lit(v[1].to_f64_lossy()),
        U::lit(v[2].to_f64_lossy()),
    ]
}
