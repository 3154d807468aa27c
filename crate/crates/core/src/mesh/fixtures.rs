//! Hand-built immersions used by the diagnostic tests: multi-sheet
//! configurations, pinched faces and necks.
//!
//! Several of these are deliberately disconnected.

use std::f64::consts::PI;
use std::sync::Arc;

use super::generate::{equator, icosphere, latitude_sphere};
use super::{DiscreteImmersion, ParamMesh};
use crate::ambient::S3;
use crate::error::{Error, Result};

/// Two coincident copies of `equator(level)`.
pub fn doubled_equator(level: u32) -> Result<DiscreteImmersion> {
    let e = equator(level)?;
    e.disjoint_union(&e)
}

/// `k` coincident copies of `imm`.
pub fn copies(imm: &DiscreteImmersion, k: usize) -> Result<DiscreteImmersion> {
    if k == 0 {
        return Err(Error::BadParam("need at least one copy".into()));
    }
    let mut out = imm.clone();
    for _ in 1..k {
        out = out.disjoint_union(imm)?;
    }
    Ok(out)
}

/// The equator together with the great sphere `{x₃ = 0}`; the two meet
/// transversally along the great circle in the `e₁e₂` plane.
pub fn crossing_equators(level: u32) -> Result<DiscreteImmersion> {
    let e = equator(level)?;
    let rotated: Vec<_> = e.coords().iter().map(|y| [y[0], y[1], 0.0, y[2]]).collect();
    let other = e.with_coords(rotated)?;
    e.disjoint_union(&other)
}

/// A point on the intersection circle of [`crossing_equators`].
pub fn crossing_point() -> [f64; 4] {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let n = (1.0 + phi * phi).sqrt();
    [1.0 / n, phi / n, 0.0, 0.0]
}

/// Latitude sphere of extrinsic diameter `diameter` near the pole `e₄`.
pub fn tiny_cap(diameter: f64, level: u32) -> Result<DiscreteImmersion> {
    if !(diameter > 0.0 && diameter < 2.0) {
        return Err(Error::BadParam("cap diameter must lie in (0, 2)".into()));
    }
    let rho = 0.5 * diameter;
    latitude_sphere((1.0 - rho * rho).sqrt(), level)
}

/// Clifford grid whose first `v`-column is squeezed to `gap` times the
/// regular spacing, producing a strip of nearly rank-one faces.
pub fn pinched_clifford(nu: usize, nv: usize, gap: f64) -> Result<DiscreteImmersion> {
    if nu < 8 || nv < 8 || !(gap > 0.0 && gap < 1.0) {
        return Err(Error::BadParam("pinched clifford parameters".into()));
    }
    let s3 = S3::default();
    let dv = 2.0 * PI / (nv as f64 - 1.0 + gap);
    let vs: Vec<f64> = (0..nv)
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                (gap + (j as f64 - 1.0)) * dv
            }
        })
        .collect();
    let mut coords = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for &v in &vs {
            coords.push(s3.project(&[u.cos(), u.sin(), v.cos(), v.sin()])?);
        }
    }
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    DiscreteImmersion::new(Arc::new(ParamMesh::new(nu * nv, faces)?), coords)
}

/// Indices of the faces in the squeezed column of [`pinched_clifford`].
pub fn pinched_faces(nu: usize, nv: usize) -> Vec<usize> {
    (0..nu).flat_map(|i| [2 * (i * nv), 2 * (i * nv) + 1]).collect()
}

/// Polar angle and azimuth of every icosphere point around `pts[x]`.
fn pole_coordinates(pts: &[[f64; 3]], x: usize) -> Vec<(f64, f64)> {
    let px = pts[x];
    let seed = if px[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let d = seed[0] * px[0] + seed[1] * px[1] + seed[2] * px[2];
    let ea = normalize3([seed[0] - d * px[0], seed[1] - d * px[1], seed[2] - d * px[2]]);
    let eb = [
        px[1] * ea[2] - px[2] * ea[1],
        px[2] * ea[0] - px[0] * ea[2],
        px[0] * ea[1] - px[1] * ea[0],
    ];
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    pts.iter()
        .map(|p| {
            (
                dot(p, &px).clamp(-1.0, 1.0).acos(),
                dot(p, &eb).atan2(dot(p, &ea)),
            )
        })
        .collect()
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Mean angle subtended by an edge of `icosphere(level)`.
pub fn icosphere_edge_angle(mesh: &ParamMesh, pts: &[[f64; 3]]) -> f64 {
    let s: f64 = mesh
        .edges()
        .iter()
        .map(|&[a, b]| {
            let (p, q) = (pts[a], pts[b]);
            (p[0] * q[0] + p[1] * q[1] + p[2] * q[2]).clamp(-1.0, 1.0).acos()
        })
        .sum();
    s / mesh.n_edges() as f64
}

/// Sphere with a long tube of radius `radius`, capped by a small bubble at
/// parameter vertex 0. In the conformal coordinate `s = log tan(θ/2)` around
/// that vertex the tube occupies the hop radii `[hops_in, hops_out]`.
/// Returns the immersion and the vertex.
pub fn neck_dumbbell(
    level: u32,
    radius: f64,
    hops_in: f64,
    hops_out: f64,
) -> Result<(DiscreteImmersion, usize)> {
    if !(radius > 0.0 && radius < 0.5 && hops_in > 0.0 && hops_out > hops_in) {
        return Err(Error::BadParam("neck parameters".into()));
    }
    let (mesh, pts) = icosphere(level)?;
    let step = icosphere_edge_angle(&mesh, &pts);
    let s_in = (0.5 * hops_in * step).tan().ln();
    let s_out = (0.5 * hops_out * step).tan().ln();
    if !(0.5 * hops_out * step < 0.5 * PI) {
        return Err(Error::BadParam("tube exceeds the parameter sphere".into()));
    }
    let mid = 0.5 * radius * (s_in + s_out);
    let s3 = S3::default();
    let coords = pole_coordinates(&pts, 0)
        .into_iter()
        .map(|(theta, phi)| {
            let s = (0.5 * theta).tan().ln();
            let (r, h) = if s < s_in {
                (radius / (s - s_in).cosh(), radius * (s_in + (s - s_in).tanh()))
            } else if s <= s_out {
                (radius, radius * s)
            } else {
                (radius / (s - s_out).cosh(), radius * (s_out + (s - s_out).tanh()))
            };
            s3.project(&[r * phi.cos(), r * phi.sin(), h - mid, 1.0])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((DiscreteImmersion::new(Arc::new(mesh), coords)?, 0))
}

/// The equator with a round bubble of radius `bubble` grafted at parameter
/// vertex 0. The bubble fills the parameter disc `tan(θ/2) ≲ scale`.
pub fn grafted_bubble(level: u32, scale: f64, bubble: f64) -> Result<(DiscreteImmersion, usize)> {
    if !(scale > 0.0 && bubble > 0.0 && bubble < 0.5) {
        return Err(Error::BadParam("bubble parameters".into()));
    }
    let (mesh, pts) = icosphere(level)?;
    let s3 = S3::default();
    let polar = pole_coordinates(&pts, 0);
    let coords = pts
        .iter()
        .zip(&polar)
        .map(|(p, &(theta, _))| {
            let w = (0.5 * theta).tan() / scale;
            let den = 1.0 + w * w;
            let radial = [
                p[0] - pts[0][0] * theta.cos(),
                p[1] - pts[0][1] * theta.cos(),
                p[2] - pts[0][2] * theta.cos(),
            ];
            let rn = (radial[0] * radial[0] + radial[1] * radial[1] + radial[2] * radial[2]).sqrt();
            let dir = if rn > 0.0 {
                [radial[0] / rn, radial[1] / rn, radial[2] / rn]
            } else {
                [0.0; 3]
            };
            let t = 2.0 * bubble * w / den;
            s3.project(&[
                p[0] + t * dir[0],
                p[1] + t * dir[1],
                p[2] + t * dir[2],
                -2.0 * bubble / den,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((DiscreteImmersion::new(Arc::new(mesh), coords)?, 0))
}
