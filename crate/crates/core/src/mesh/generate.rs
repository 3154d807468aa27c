//! Built-in immersions: the totally geodesic equator, the Clifford torus and
//! latitude spheres.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{refine, split_faces, DiscreteImmersion, ParamMesh};
use crate::ambient::S3;
use crate::error::{Error, Result};

/// Largest subdivision level accepted by the generators.
pub const MAX_LEVEL: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Equator { level: u32 },
    Clifford { nu: usize, nv: usize },
    LatitudeSphere { t: f64, level: u32 },
}

impl Shape {
    /// Parses `equator:4`, `clifford:64,64` or `latitude:0.5,4`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::BadParam(format!("cannot parse generator spec '{spec}'"));
        let (kind, args) = spec.split_once(':').ok_or_else(bad)?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        match (kind.trim(), args.as_slice()) {
            ("equator", [l]) => Ok(Shape::Equator {
                level: l.parse().map_err(|_| bad())?,
            }),
            ("clifford", [a, b]) => Ok(Shape::Clifford {
                nu: a.parse().map_err(|_| bad())?,
                nv: b.parse().map_err(|_| bad())?,
            }),
            ("latitude", [t, l]) => Ok(Shape::LatitudeSphere {
                t: t.parse().map_err(|_| bad())?,
                level: l.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

pub fn generate(shape: Shape) -> Result<DiscreteImmersion> {
    match shape {
        Shape::Equator { level } => equator(level),
        Shape::Clifford { nu, nv } => clifford(nu, nv),
        Shape::LatitudeSphere { t, level } => latitude_sphere(t, level),
    }
}

fn check_level(level: u32) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::BadParam(format!("level {level} exceeds {MAX_LEVEL}")));
    }
    Ok(())
}

const ICO_FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

fn icosahedron() -> Vec<[f64; 3]> {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    raw.iter().map(|v| normalize3(*v)).collect()
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Unit icosphere in R³ (outward counter-clockwise faces).
pub fn icosphere(level: u32) -> Result<(ParamMesh, Vec<[f64; 3]>)> {
    check_level(level)?;
    let mut mesh = ParamMesh::new(12, ICO_FACES.to_vec())?;
    let mut pts = icosahedron();
    for _ in 0..level {
        let (n, faces, mids) = split_faces(&mesh);
        for [a, b] in mids {
            let (p, q) = (pts[a], pts[b]);
            pts.push(normalize3([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
        }
        mesh = ParamMesh::new(n, faces)?;
    }
    Ok((mesh, pts))
}

/// Icosahedron in the hyperplane `x₄ = 0`, refined `level` times.
pub fn equator(level: u32) -> Result<DiscreteImmersion> {
    check_level(level)?;
    let coords = icosahedron().iter().map(|p| [p[0], p[1], p[2], 0.0]).collect();
    let mut imm = DiscreteImmersion::new(Arc::new(ParamMesh::new(12, ICO_FACES.to_vec())?), coords)?;
    for _ in 0..level {
        imm = refine(&imm)?;
    }
    Ok(imm)
}

/// Grid torus `(cos u, sin u, cos v, sin v)/√2`, each quad split in two.
pub fn clifford(nu: usize, nv: usize) -> Result<DiscreteImmersion> {
    if nu < 8 || nv < 8 {
        return Err(Error::BadParam(format!(
            "clifford grid {nu}x{nv}: need at least 8x8"
        )));
    }
    if nu.saturating_mul(nv) > 4_000_000 {
        return Err(Error::BadParam("clifford grid too large".into()));
    }
    let s3 = S3::default();
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut coords = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            coords.push(s3.project(&[u.cos(), u.sin(), v.cos(), v.sin()])?);
        }
    }
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

/// Round 2-sphere `{x₄ = t} ∩ S³` of radius `√(1 − t²)`.
pub fn latitude_sphere(t: f64, level: u32) -> Result<DiscreteImmersion> {
    if !(t > -1.0 && t < 1.0) {
        return Err(Error::BadParam(format!("latitude t = {t} outside (-1, 1)")));
    }
    let (mesh, pts) = icosphere(level)?;
    latitude_from(Arc::new(mesh), &pts, t)
}

/// Places a unit icosphere point set at height `t`; shared by sweep-outs so
/// that all frames reference one [`ParamMesh`].
pub fn latitude_from(mesh: Arc<ParamMesh>, pts: &[[f64; 3]], t: f64) -> Result<DiscreteImmersion> {
    let rho = (1.0 - t * t).sqrt();
    let coords = pts
        .iter()
        .map(|s| [rho * s[0], rho * s[1], rho * s[2], t])
        .collect();
    DiscreteImmersion::new(mesh, coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_faces_point_outward() {
        let p = icosahedron();
        for f in ICO_FACES {
            let (a, b, c) = (p[f[0]], p[f[1]], p[f[2]]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let n = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            assert!(n[0] * a[0] + n[1] * a[1] + n[2] * a[2] > 0.0);
        }
    }

    #[test]
    fn equator_is_a_sphere_in_the_hyperplane() {
        let e = equator(4).unwrap();
        assert_eq!(e.mesh().euler_characteristic(), 2);
        assert!(e.coords().iter().all(|y| y[3] == 0.0));
        assert_eq!(e.n_faces(), 20 * 256);
    }

    #[test]
    fn clifford_is_a_torus() {
        let c = clifford(64, 64).unwrap();
        assert_eq!(c.mesh().euler_characteristic(), 0);
        assert_eq!(c.mesh().genus(), Some(1));
        assert!(c
            .coords()
            .iter()
            .all(|y| (y.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-12));
        assert!(matches!(clifford(7, 64), Err(Error::BadParam(_))));
    }

    #[test]
    fn latitude_sphere_sits_at_height_t() {
        let s = latitude_sphere(0.5, 4).unwrap();
        assert!(s.coords().iter().all(|y| (y[3] - 0.5).abs() < 1e-12));
        assert!(matches!(latitude_sphere(1.0, 2), Err(Error::BadParam(_))));
    }

    #[test]
    fn parse_generator_specs() {
        assert_eq!(Shape::parse("equator:3").unwrap(), Shape::Equator { level: 3 });
        assert_eq!(
            Shape::parse("clifford:32,16").unwrap(),
            Shape::Clifford { nu: 32, nv: 16 }
        );
        assert_eq!(
            Shape::parse("latitude:0.3,4").unwrap(),
            Shape::LatitudeSphere { t: 0.3, level: 4 }
        );
        assert!(Shape::parse("torus:3").is_err());
    }
}
