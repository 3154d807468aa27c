//! Small fixed-size helpers for points and vectors in R^4.

use crate::dual::Scalar;

pub type Vec4 = [f64; 4];

#[inline]
pub fn dot<T: Scalar>(a: &[T; 4], b: &[T; 4]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
pub fn sub<T: Scalar>(a: &[T; 4], b: &[T; 4]) -> [T; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

#[inline]
pub fn add<T: Scalar>(a: &[T; 4], b: &[T; 4]) -> [T; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

#[inline]
pub fn scale<T: Scalar>(s: T, a: &[T; 4]) -> [T; 4] {
    [s * a[0], s * a[1], s * a[2], s * a[3]]
}

#[inline]
pub fn norm<T: Scalar>(a: &[T; 4]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn axpy(alpha: f64, x: &Vec4, y: &mut Vec4) {
    for k in 0..4 {
        y[k] += alpha * x[k];
    }
}

#[inline]
fn det3<T: Scalar>(a: [T; 3], b: [T; 3], c: [T; 3]) -> T {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Hodge dual of `a ∧ b ∧ c` in R^4: the vector `n` with `n · d = det[a; b; c; d]`.
pub fn triple_cross<T: Scalar>(a: &[T; 4], b: &[T; 4], c: &[T; 4]) -> [T; 4] {
    let minor = |skip: usize| {
        let pick = |v: &[T; 4]| {
            let mut out = [T::zero(); 3];
            let mut k = 0;
            for (j, x) in v.iter().enumerate() {
                if j != skip {
                    out[k] = *x;
                    k += 1;
                }
            }
            out
        };
        det3(pick(a), pick(b), pick(c))
    };
    [-minor(0), minor(1), -minor(2), minor(3)]
}

/// Determinant of the 4x4 matrix with rows `a, b, c, d`.
pub fn det4(a: &Vec4, b: &Vec4, c: &Vec4, d: &Vec4) -> f64 {
    dot(&triple_cross(a, b, c), d)
}

/// Symmetric 2x2 matrix stored as `[m11, m12, m22]`.
pub type Sym2<T> = [T; 3];

#[inline]
pub fn sym2_det<T: Scalar>(m: &Sym2<T>) -> T {
    m[0] * m[2] - m[1] * m[1]
}

/// Trace of `a⁻¹ b` for symmetric 2x2 `a`, `b`.
#[inline]
pub fn sym2_trace_inv_mul<T: Scalar>(a: &Sym2<T>, b: &Sym2<T>) -> T {
    (a[2] * b[0] - T::cst(2.0) * a[1] * b[1] + a[0] * b[2]) / sym2_det(a)
}

/// Gram matrix `[u·u, u·v, v·v]`.
#[inline]
pub fn gram<T: Scalar>(u: &[T; 4], v: &[T; 4]) -> Sym2<T> {
    [dot(u, u), dot(u, v), dot(v, v)]
}

/// Eigenvalues (ascending) of a symmetric 2x2 matrix.
pub fn sym2_eigenvalues(m: &Sym2<f64>) -> (f64, f64) {
    let half_tr = 0.5 * (m[0] + m[2]);
    let diff = 0.5 * (m[0] - m[2]);
    let r = (diff * diff + m[1] * m[1]).sqrt();
    (half_tr - r, half_tr + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_cross_is_orthogonal_and_matches_det() {
        let a = [0.3, -1.0, 0.2, 0.7];
        let b = [1.1, 0.4, -0.5, 0.0];
        let c = [-0.2, 0.9, 0.8, -1.3];
        let d = [0.5, 0.5, -0.25, 2.0];
        let n = triple_cross(&a, &b, &c);
        for v in [&a, &b, &c] {
            assert!(dot(&n, v).abs() < 1e-14);
        }
        // Leibniz expansion as an independent check.
        let rows = [a, b, c, d];
        let mut det = 0.0;
        let perms = permutations4();
        for (perm, sign) in perms {
            let mut prod = sign;
            for (i, &j) in perm.iter().enumerate() {
                prod *= rows[i][j];
            }
            det += prod;
        }
        assert!((dot(&n, &d) - det).abs() < 1e-13);
    }

    fn permutations4() -> Vec<([usize; 4], f64)> {
        let mut out = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let p = [a, b, c, d];
                        let mut seen = [false; 4];
                        if p.iter().all(|&x| !std::mem::replace(&mut seen[x], true)) {
                            let mut inversions = 0;
                            for i in 0..4 {
                                for j in i + 1..4 {
                                    if p[i] > p[j] {
                                        inversions += 1;
                                    }
                                }
                            }
                            out.push((p, if inversions % 2 == 0 { 1.0 } else { -1.0 }));
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn equatorial_triangle_normal_is_e4() {
        let n = triple_cross(
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
        );
        assert_eq!(n, [0.0, 0.0, 0.0, 1.0]);
    }
}
