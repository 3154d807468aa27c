//! The target manifold: the round unit sphere S^{M-1} ⊂ R^M.
//!
//! Everything downstream works on S³ (`M = 4`), but the operations here are
//! written for any ambient dimension `M ≥ 3`.

use crate::error::{Error, Result};

/// Norms at or below this are treated as zero by `project` and `retract`.
pub const NEAR_ZERO: f64 = 1e-9;
/// Tolerance for "is tangent" / "is unit" preconditions.
pub const PRE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AmbientSphere<const M: usize>;

/// The 3-sphere in R^4.
pub type S3 = AmbientSphere<4>;

#[inline]
fn dot<const M: usize>(a: &[f64; M], b: &[f64; M]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<const M: usize> AmbientSphere<M> {
    pub const DIM: usize = M;

    pub fn new() -> Self {
        assert!(M >= 3, "ambient dimension must be at least 3");
        Self
    }

    /// Radial projection `y / |y|`.
    pub fn project(&self, y: &[f64; M]) -> Result<[f64; M]> {
        let n = dot(y, y).sqrt();
        if n <= NEAR_ZERO {
            return Err(Error::NearZero(n));
        }
        Ok(y.map(|x| x / n))
    }

    /// Orthogonal projection of `v` onto `T_y S`: `v − (v·y) y`.
    #[inline]
    pub fn tangent_project(&self, y: &[f64; M], v: &[f64; M]) -> [f64; M] {
        debug_assert!((dot(y, y).sqrt() - 1.0).abs() <= PRE_TOL);
        let c = dot(v, y);
        let mut out = *v;
        for (o, yi) in out.iter_mut().zip(y) {
            *o -= c * yi;
        }
        out
    }

    /// Second fundamental form of the sphere: `A(y)(u, v) = −(u·v) y`.
    pub fn second_fundamental(&self, y: &[f64; M], u: &[f64; M], v: &[f64; M]) -> [f64; M] {
        debug_assert!(dot(u, y).abs() <= PRE_TOL && dot(v, y).abs() <= PRE_TOL);
        let c = dot(u, v);
        y.map(|x| -c * x)
    }

    /// Normalisation retraction `(y + v) / |y + v|` for a tangent `v`.
    pub fn retract(&self, y: &[f64; M], v: &[f64; M]) -> Result<[f64; M]> {
        let vn = dot(v, v).sqrt();
        if dot(v, y).abs() > PRE_TOL * vn.max(1.0) {
            return Err(Error::BadParam("retract: step is not tangent".into()));
        }
        let mut s = *y;
        for (si, vi) in s.iter_mut().zip(v) {
            *si += vi;
        }
        self.project(&s)
    }

    /// Unit check used by validators.
    pub fn on_sphere(&self, y: &[f64; M], tol: f64) -> bool {
        (dot(y, y).sqrt() - 1.0).abs() <= tol
    }
}
