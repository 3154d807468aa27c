//! Fundamental forms, Gauss map, mean curvature and the energy integrals.

use rayon::prelude::*;

use crate::dual::Scalar;
use crate::error::{Error, Result};
use crate::linalg::{self, Sym2, Vec4};
use crate::mesh::{DiscreteImmersion, FaceMetric};
use crate::reduce::canonical_sum;

/// Energies of one immersion at fixed `(p, σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub area: f64,
    pub f_p: f64,
    /// `area + σ² f_p`.
    pub relaxed: f64,
    /// Dirichlet energy against the equilateral reference metric.
    pub dirichlet: f64,
    pub conf_defect: f64,
    pub max_ii_sq: f64,
}

/// Face normals and their area-weighted vertex averages.
#[derive(Debug, Clone)]
pub struct GaussField {
    pub face_normals: Vec<Vec4>,
    pub vertex_normals: Vec<Vec4>,
    /// `|Σ dvol_f n_f|` before renormalisation, per vertex.
    pub vertex_weights: Vec<f64>,
}

pub fn face_metric(imm: &DiscreteImmersion, face: usize) -> Result<FaceMetric> {
    imm.face_metrics()
        .get(face)
        .copied()
        .ok_or_else(|| Error::BadParam(format!("face {face} out of range")))
}

/// Unit normal of the triangle inside `T S³`: the Hodge dual of
/// `x_a ∧ (x_b − x_a) ∧ (x_c − x_a)`, normalised.
pub(crate) fn face_normal<T: Scalar>(a: &[T; 4], b: &[T; 4], c: &[T; 4]) -> [T; 4] {
    let e1 = linalg::sub(b, a);
    let e2 = linalg::sub(c, a);
    let m = linalg::triple_cross(a, &e1, &e2);
    let len = linalg::norm(&m);
    m.map(|x| x / len)
}

/// `dvol · n` for one face.
pub(crate) fn weighted_normal<T: Scalar>(a: &[T; 4], b: &[T; 4], c: &[T; 4]) -> [T; 4] {
    let e1 = linalg::sub(b, a);
    let e2 = linalg::sub(c, a);
    let dvol = T::cst(0.5) * linalg::sym2_det(&linalg::gram(&e1, &e2)).sqrt();
    linalg::scale(dvol, &face_normal(a, b, c))
}

/// `|dn|²_g` on a face from the linear interpolant of vertex normals.
pub(crate) fn ii_sq_kernel<T: Scalar>(x: [&[T; 4]; 3], nu: [&[T; 4]; 3]) -> T {
    let g = linalg::gram(&linalg::sub(x[1], x[0]), &linalg::sub(x[2], x[0]));
    let h = linalg::gram(&linalg::sub(nu[1], nu[0]), &linalg::sub(nu[2], nu[0]));
    linalg::sym2_trace_inv_mul(&g, &h)
}

/// `(1 + |II|²)^p dvol` on one face.
pub(crate) fn fp_kernel<T: Scalar>(x: [&[T; 4]; 3], nu: [&[T; 4]; 3], p: f64) -> T {
    let g = linalg::gram(&linalg::sub(x[1], x[0]), &linalg::sub(x[2], x[0]));
    let h = linalg::gram(&linalg::sub(nu[1], nu[0]), &linalg::sub(nu[2], nu[0]));
    let ii = linalg::sym2_trace_inv_mul(&g, &h);
    let dvol = T::cst(0.5) * linalg::sym2_det(&g).sqrt();
    (T::cst(1.0) + ii).powf(p) * dvol
}

fn face_points<'a>(imm: &'a DiscreteImmersion, f: &[usize; 3]) -> [&'a Vec4; 3] {
    let c = imm.coords();
    [&c[f[0]], &c[f[1]], &c[f[2]]]
}

pub fn gauss_map(imm: &DiscreteImmersion) -> Result<GaussField> {
    let faces = imm.mesh().faces();
    let (face_normals, weighted): (Vec<Vec4>, Vec<Vec4>) = faces
        .par_iter()
        .map(|f| {
            let [a, b, c] = face_points(imm, f);
            let n = face_normal(a, b, c);
            let dvol = 0.5 * linalg::sym2_det(&linalg::gram(&linalg::sub(b, a), &linalg::sub(c, a))).sqrt();
            (n, linalg::scale(dvol, &n))
        })
        .unzip();
    let per_vertex: Vec<(Vec4, f64)> = (0..imm.n_vertices())
        .into_par_iter()
        .map(|v| {
            let ws: Vec<Vec4> = imm.mesh().vertex_faces(v).iter().map(|&f| weighted[f]).collect();
            let sum = crate::reduce::canonical_sum4(&ws);
            let len = linalg::norm(&sum);
            (sum.map(|x| x / len), len)
        })
        .collect();
    let (vertex_normals, vertex_weights): (Vec<Vec4>, Vec<f64>) = per_vertex.into_iter().unzip();
    for v in 0..imm.n_vertices() {
        for &f in imm.mesh().vertex_faces(v) {
            if !(linalg::dot(&face_normals[f], &vertex_normals[v]) > 0.0) {
                return Err(Error::Orientation { face: f });
            }
        }
    }
    Ok(GaussField {
        face_normals,
        vertex_normals,
        vertex_weights,
    })
}

pub fn ii_squared(imm: &DiscreteImmersion, gauss: &GaussField) -> Vec<f64> {
    let nu = &gauss.vertex_normals;
    imm.mesh()
        .faces()
        .par_iter()
        .map(|f| ii_sq_kernel(face_points(imm, f), [&nu[f[0]], &nu[f[1]], &nu[f[2]]]).max(0.0))
        .collect()
}

/// Cotangents of the three corner angles of every face (corner order as in
/// the face).
pub fn face_cotans(imm: &DiscreteImmersion) -> Vec<[f64; 3]> {
    imm.mesh()
        .faces()
        .par_iter()
        .zip(imm.face_metrics())
        .map(|(f, m)| {
            let x = face_points(imm, f);
            let two_area = 2.0 * m.dvol;
            std::array::from_fn(|k| {
                let o = x[k];
                let u = linalg::sub(x[(k + 1) % 3], o);
                let w = linalg::sub(x[(k + 2) % 3], o);
                linalg::dot(&u, &w) / two_area
            })
        })
        .collect()
}

/// `S x` for the cotangent stiffness matrix (positive semidefinite weak
/// Laplacian), applied coordinate-wise.
pub fn apply_stiffness(imm: &DiscreteImmersion, cot: &[[f64; 3]], x: &[Vec4]) -> Vec<Vec4> {
    let mut out = vec![[0.0; 4]; x.len()];
    for (f, c) in imm.mesh().faces().iter().zip(cot) {
        for k in 0..3 {
            // corner k is opposite edge (k+1, k+2)
            let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            let w = 0.5 * c[k];
            let d = linalg::sub(&x[i], &x[j]);
            linalg::axpy(w, &d, &mut out[i]);
            linalg::axpy(-w, &d, &mut out[j]);
        }
    }
    out
}

/// Mixed Voronoi vertex areas: Voronoi regions on non-obtuse faces, the
/// usual half/quarter split on obtuse ones. They sum to the total area.
pub fn mixed_areas(imm: &DiscreteImmersion, cot: &[[f64; 3]]) -> Vec<f64> {
    let mut out = vec![0.0; imm.n_vertices()];
    for ((f, c), m) in imm.mesh().faces().iter().zip(cot).zip(imm.face_metrics()) {
        let x = face_points(imm, f);
        if let Some(k) = (0..3).find(|&k| c[k] < 0.0) {
            for j in 0..3 {
                out[f[j]] += if j == k { 0.5 } else { 0.25 } * m.dvol;
            }
            continue;
        }
        for k in 0..3 {
            let (i, j) = ((k + 1) % 3, (k + 2) % 3);
            let e = linalg::sub(x[i], x[j]);
            let w = linalg::dot(&e, &e) * c[k] / 8.0;
            out[f[i]] += w;
            out[f[j]] += w;
        }
    }
    out
}

/// Mean curvature vector per vertex, `2H = ΔΦ − |dΦ|² Φ` with `Δ = M⁻¹S`
/// the positive cotangent Laplacian (M the mixed areas) and `|dΦ|² = ΔΦ · Φ` (so that H is
/// exactly tangent to S³).
pub fn mean_curvature(imm: &DiscreteImmersion) -> Result<Vec<Vec4>> {
    let cot = face_cotans(imm);
    let s = apply_stiffness(imm, &cot, imm.coords());
    let areas = mixed_areas(imm, &cot);
    Ok(s.iter()
        .zip(&areas)
        .zip(imm.coords())
        .map(|((sv, &a), y)| {
            let lap = linalg::scale(1.0 / a, sv);
            let radial = linalg::dot(&lap, y);
            let mut h = lap;
            linalg::axpy(-radial, y, &mut h);
            linalg::scale(0.5, &h)
        })
        .collect())
}

/// Dirichlet energy of a face against the unit equilateral reference:
/// `(|e₁|² + |e₂|² + |e₃|²) / (4√3)`.
pub(crate) fn dirichlet_face(x: [&Vec4; 3]) -> f64 {
    let s: f64 = (0..3)
        .map(|k| {
            let e = linalg::sub(x[(k + 1) % 3], x[k]);
            linalg::dot(&e, &e)
        })
        .sum();
    s / (4.0 * 3f64.sqrt())
}

pub fn dirichlet_per_face(imm: &DiscreteImmersion) -> Vec<f64> {
    imm.mesh()
        .faces()
        .par_iter()
        .map(|f| dirichlet_face(face_points(imm, f)))
        .collect()
}

pub(crate) fn check_params(p: f64, sigma: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::BadParam(format!("p = {p} must exceed 1")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::BadParam(format!("sigma = {sigma} must be nonnegative")));
    }
    Ok(())
}

/// Per-face `(1 + |II|²)^p dvol` terms and `|II|²` values.
pub fn fp_terms(imm: &DiscreteImmersion, gauss: &GaussField, p: f64) -> (Vec<f64>, Vec<f64>) {
    let ii = ii_squared(imm, gauss);
    let terms = ii
        .par_iter()
        .zip(imm.face_metrics())
        .map(|(&q, m)| (1.0 + q).powf(p) * m.dvol)
        .collect();
    (terms, ii)
}

pub fn energies(imm: &DiscreteImmersion, p: f64, sigma: f64) -> Result<EnergyBreakdown> {
    check_params(p, sigma)?;
    let gauss = gauss_map(imm)?;
    let (terms, ii) = fp_terms(imm, &gauss, p);
    let area = imm.total_area();
    let f_p = canonical_sum(terms);
    let dirichlet = canonical_sum(dirichlet_per_face(imm));
    Ok(EnergyBreakdown {
        area,
        f_p,
        relaxed: area + sigma * sigma * f_p,
        dirichlet,
        conf_defect: dirichlet - area,
        max_ii_sq: ii.iter().copied().fold(0.0, f64::max),
    })
}

/// Relaxed energy alone (used by line searches).
pub fn relaxed_energy(imm: &DiscreteImmersion, p: f64, sigma: f64) -> Result<f64> {
    if sigma == 0.0 {
        check_params(p, sigma)?;
        return Ok(imm.total_area());
    }
    energies(imm, p, sigma).map(|e| e.relaxed)
}

/// Inverse of a symmetric 2×2 matrix.
pub fn sym2_inverse(m: &Sym2<f64>) -> Sym2<f64> {
    let d = linalg::sym2_det(m);
    [m[2] / d, -m[1] / d, m[0] / d]
}
