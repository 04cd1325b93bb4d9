//! Tiny dense complex helpers for 2x2 and 2x4 matrices.

use crate::scalar::{czero, modulus, Cx, Scalar};

pub type Mat2<T> = [[Cx<T>; 2]; 2];
pub type Mat24<T> = [[Cx<T>; 4]; 2];

pub fn frobenius<T: Scalar, const K: usize>(m: &[[Cx<T>; K]; 2]) -> T {
    let mut s = T::zero();
    for row in m {
        for z in row {
            s = s + z.norm_sqr();
        }
    }
    s.sqrt()
}

pub fn det2<T: Scalar>(m: &Mat2<T>) -> Cx<T> {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn mul2<T: Scalar>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    let mut out = [[czero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn inv2<T: Scalar>(m: &Mat2<T>) -> Option<Mat2<T>> {
    let d = det2(m);
    if d.norm_sqr() == T::zero() {
        return None;
    }
    Some([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
}

/// Left-multiplies a 2xK matrix by a 2x2 matrix.
pub fn left_mul<T: Scalar, const K: usize>(t: &Mat2<T>, m: &[[Cx<T>; K]; 2]) -> [[Cx<T>; K]; 2] {
    let mut out = [[czero(); K]; 2];
    for i in 0..2 {
        for k in 0..K {
            out[i][k] = t[i][0] * m[0][k] + t[i][1] * m[1][k];
        }
    }
    out
}

/// Largest and smallest singular value of a 2xK matrix.
///
/// The determinant of `M M*` comes from Cauchy-Binet so the small singular
/// value keeps its relative accuracy.
pub fn singular_values<T: Scalar, const K: usize>(m: &[[Cx<T>; K]; 2]) -> (T, T) {
    let g11: T = m[0].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
    let g22: T = m[1].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
    let mut g12 = czero::<T>();
    for k in 0..K {
        g12 = g12 + m[0][k] * m[1][k].conj();
    }
    let mut det = T::zero();
    for i in 0..K {
        for j in (i + 1)..K {
            det = det + (m[0][i] * m[1][j] - m[0][j] * m[1][i]).norm_sqr();
        }
    }
    let half = T::lit(0.5);
    let mid = (g11 + g22) * half;
    let rad = ((g11 - g22) * half).hypot(modulus(g12));
    let big = mid + rad;
    if big <= T::zero() {
        return (T::zero(), T::zero());
    }
    let small = (det / big).max(T::zero());
    (big.sqrt(), small.sqrt())
}

/// Orthonormal basis of the row span (modified Gram-Schmidt, two passes).
fn orthonormal_rows<T: Scalar>(m: &Mat24<T>) -> Vec<[Cx<T>; 4]> {
    let mut basis: Vec<[Cx<T>; 4]> = Vec::new();
    let scale = frobenius(m);
    for row in m {
        let mut v = *row;
        for _ in 0..2 {
            for b in &basis {
                let mut dot = czero::<T>();
                for k in 0..4 {
                    dot = dot + b[k].conj() * v[k];
                }
                for k in 0..4 {
                    v[k] = v[k] - b[k] * dot;
                }
            }
        }
        let n = v.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
        if n > scale * T::epsilon() * T::lit(16.0) {
            for z in v.iter_mut() {
                *z = *z / n;
            }
            basis.push(v);
        }
    }
    basis
}

/// Sine of the largest principal angle between the row spans of two
/// rank-2 2x4 matrices. Zero iff they are row equivalent.
pub fn row_space_distance<T: Scalar>(m1: &Mat24<T>, m2: &Mat24<T>) -> T {
    let q = orthonormal_rows(m1);
    let mut worst = T::zero();
    for row in m2 {
        let n = row.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt();
        if n == T::zero() {
            continue;
        }
        let mut v = *row;
        for b in &q {
            let mut dot = czero::<T>();
            for k in 0..4 {
                dot = dot + b[k].conj() * v[k];
            }
            for k in 0..4 {
                v[k] = v[k] - b[k] * dot;
            }
        }
        let r = v.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt() / n;
        worst = worst.max(r);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cx, real};

    #[test]
    fn singular_values_of_diagonal() {
        let m: Mat24<f64> = [[real(3.0), czero(), czero(), czero()], [czero(), czero(), real(-0.5), czero()]];
        let (big, small) = singular_values(&m);
        assert!((big - 3.0).abs() < 1e-15);
        assert!((small - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inverse_roundtrip() {
        let m: Mat2<f64> = [[cx(1.0, 2.0), cx(0.5, 0.0)], [cx(0.0, -1.0), cx(2.0, 1.0)]];
        let p = mul2(&m, &inv2(&m).unwrap());
        assert!((p[0][0] - real(1.0)).norm() < 1e-14);
        assert!(p[0][1].norm() < 1e-14);
        assert!(p[1][0].norm() < 1e-14);
        assert!((p[1][1] - real(1.0)).norm() < 1e-14);
    }

    #[test]
    fn row_distance_detects_equivalence() {
        let m: Mat24<f64> = [[real(1.0), real(2.0), czero(), czero()], [czero(), czero(), real(1.0), real(-1.0)]];
        let t: Mat2<f64> = [[cx(0.0, 1.0), real(3.0)], [real(1.0), cx(1.0, 1.0)]];
        let twisted = left_mul(&t, &m);
        assert!(row_space_distance(&m, &twisted) < 1e-14);
        let other: Mat24<f64> = [[real(1.0), czero(), czero(), czero()], [czero(), czero(), real(1.0), czero()]];
        assert!(row_space_distance(&m, &other) > 0.1);
    }
}
