use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigen3<T> {
    pub values: [T; 3],
    pub vectors: [Vec3<T>; 3],
}

/// Cyclic Jacobi on a symmetric 3×3 matrix. Each eigenvector is signed so its
/// largest-magnitude component is positive (first such component on ties).
pub fn eig_sym3<T: Real>(h: &Mat3<T>) -> Eigen3<T> {
    let mut a = *h;
    let mut v = crate::linalg::identity::<T>();
    let scale = a.iter().flatten().fold(T::zero(), |m, x| m.max(x.abs()));
    for _sweep in 0..50 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= T::epsilon() * T::lit(1e-3) * scale || off == T::zero() {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if a[p][q] == T::zero() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (T::lit(2.0) * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..3 {
                let (akp, akq) = (a[k][p], a[k][q]);
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let (apk, aqk) = (a[p][k], a[q][k]);
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let (vp, vq) = (row[p], row[q]);
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.map(|i| a[i][i]);
    let vectors = order.map(|i| {
        let mut e = [v[0][i], v[1][i], v[2][i]];
        let mut big = 0;
        for k in 1..3 {
            if e[k].abs() > e[big].abs() {
                big = k;
            }
        }
        if e[big] < T::zero() {
            e = e.map(|x| -x);
        }
        e
    });
    Eigen3 { values, vectors }
}
