//! Triangulated parameter surfaces and their vertex maps into S³.

pub mod fixtures;
mod generate;
mod io;

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::ambient::S3;
use crate::error::{Error, Result};
use crate::linalg::{self, Sym2, Vec4};

pub use generate::{generate, icosphere, latitude_from, Shape};
pub use io::{load, parse_imm4, save, write_imm4};

/// Ratio of face-Jacobian singular values below which a face is not immersed.
pub const RANK_TOL: f64 = 1e-6;
/// Unit-norm tolerance for vertex coordinates.
pub const UNIT_TOL: f64 = 1e-12;
/// Tangency tolerance for variation fields.
pub const TANGENT_TOL: f64 = 1e-10;

/// Closed, oriented triangulated surface (combinatorics only).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMesh {
    n_vertices: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    vf_offsets: Vec<usize>,
    vf_faces: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl ParamMesh {
    /// Builds the mesh and checks that it is closed and consistently oriented:
    /// every directed edge occurs once and its reverse occurs once.
    pub fn new(n_vertices: usize, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Validation("mesh has no faces".into()));
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                if f[k] >= n_vertices {
                    return Err(Error::Validation(format!(
                        "face {fi} references vertex {} out of range",
                        f[k]
                    )));
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Validation(format!("face {fi} repeats a vertex")));
            }
            for k in 0..3 {
                let e = (f[k], f[(k + 1) % 3]);
                if directed.insert(e, fi).is_some() {
                    return Err(Error::Validation(format!(
                        "oriented: directed edge {:?} used twice",
                        e
                    )));
                }
            }
        }
        let mut edges = Vec::with_capacity(directed.len() / 2);
        for f in &faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if !directed.contains_key(&(b, a)) {
                    return Err(Error::Validation(format!("closed: edge ({a}, {b}) has one face")));
                }
                if a < b {
                    edges.push([a, b]);
                }
            }
        }

        let mut counts = vec![0usize; n_vertices];
        for f in &faces {
            for &v in f {
                counts[v] += 1;
            }
        }
        if let Some(v) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Validation(format!("vertex {v} is not used by any face")));
        }
        let mut vf_offsets = vec![0usize; n_vertices + 1];
        for v in 0..n_vertices {
            vf_offsets[v + 1] = vf_offsets[v] + counts[v];
        }
        let mut fill = vf_offsets.clone();
        let mut vf_faces = vec![0usize; vf_offsets[n_vertices]];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vf_faces[fill[v]] = fi;
                fill[v] += 1;
            }
        }
        let mut neighbors = vec![Vec::new(); n_vertices];
        for e in &edges {
            neighbors[e[0]].push(e[1]);
            neighbors[e[1]].push(e[0]);
        }
        for n in neighbors.iter_mut() {
            n.sort_unstable();
        }
        Ok(Self {
            n_vertices,
            faces,
            edges,
            vf_offsets,
            vf_faces,
            neighbors,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Undirected edges `[a, b]` with `a < b`.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Faces incident to vertex `v`, in increasing face order.
    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vf_faces[self.vf_offsets[v]..self.vf_offsets[v + 1]]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n_vertices];
        let mut count = 0;
        let mut stack = Vec::new();
        for s in 0..self.n_vertices {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for &w in &self.neighbors[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Genus `(2 − χ)/2`; only defined for connected meshes.
    pub fn genus(&self) -> Option<i64> {
        if !self.is_connected() {
            return None;
        }
        let chi = self.euler_characteristic();
        Some((2 - chi) / 2)
    }

    /// Edge-hop distances from `source` (usize::MAX for unreachable vertices).
    pub fn hop_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n_vertices];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for &w in &self.neighbors[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Disjoint union; vertex and face indices of `other` are shifted.
    pub fn disjoint_union(&self, other: &ParamMesh) -> Result<ParamMesh> {
        let shift = self.n_vertices;
        let mut faces = self.faces.clone();
        faces.extend(other.faces.iter().map(|f| f.map(|v| v + shift)));
        ParamMesh::new(self.n_vertices + other.n_vertices, faces)
    }
}

/// Per-face first fundamental form in the edge frame `(x_b − x_a, x_c − x_a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceMetric {
    pub g: Sym2<f64>,
    /// `√det g · ½`, the area of the flat triangle.
    pub dvol: f64,
}

/// Singular-value ratio of the map from the equilateral reference triangle
/// to the face with Gram matrix `g` (edge frame).
pub fn rank_ratio(g: &Sym2<f64>) -> f64 {
    // G_ref = R^{-T} g R^{-1}, R = [[1, 1/2], [0, √3/2]]
    let s = 1.0 / 3f64.sqrt();
    let (a, b, c) = (g[0], g[1], g[2]);
    // R^{-1} = [[1, -s], [0, 2s]]
    let m11 = a;
    let m12 = -s * a + 2.0 * s * b;
    let m22 = s * s * a - 4.0 * s * s * b + 4.0 * s * s * c;
    let (lo, hi) = linalg::sym2_eigenvalues(&[m11, m12, m22]);
    if hi <= 0.0 {
        return 0.0;
    }
    (lo.max(0.0) / hi).sqrt()
}

/// A discrete immersion Φ: the vertex map of a [`ParamMesh`] into S³.
#[derive(Debug, Clone)]
pub struct DiscreteImmersion {
    mesh: Arc<ParamMesh>,
    coords: Vec<Vec4>,
    metrics: Vec<FaceMetric>,
}

impl DiscreteImmersion {
    /// Validates unit-norm coordinates and the rank condition on every face.
    pub fn new(mesh: Arc<ParamMesh>, coords: Vec<Vec4>) -> Result<Self> {
        if coords.len() != mesh.n_vertices() {
            return Err(Error::Validation(format!(
                "{} coordinates for {} vertices",
                coords.len(),
                mesh.n_vertices()
            )));
        }
        let s3 = S3::default();
        for (v, y) in coords.iter().enumerate() {
            if !y.iter().all(|x| x.is_finite()) || !s3.on_sphere(y, UNIT_TOL) {
                return Err(Error::Validation(format!("vertex {v} is not on the unit sphere")));
            }
        }
        let metrics = compute_metrics(&mesh, &coords)?;
        Ok(Self {
            mesh,
            coords,
            metrics,
        })
    }

    pub fn mesh(&self) -> &ParamMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<ParamMesh> {
        &self.mesh
    }

    pub fn coords(&self) -> &[Vec4] {
        &self.coords
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn n_faces(&self) -> usize {
        self.mesh.n_faces()
    }

    pub fn face_metrics(&self) -> &[FaceMetric] {
        &self.metrics
    }

    /// Same combinatorics, new coordinates.
    pub fn with_coords(&self, coords: Vec<Vec4>) -> Result<Self> {
        Self::new(self.mesh.clone(), coords)
    }

    pub fn shares_mesh(&self, other: &DiscreteImmersion) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    /// `retract(Φ_v, t w_v)` at every vertex.
    pub fn retract(&self, w: &TangentField, t: f64) -> Result<Self> {
        let s3 = S3::default();
        let coords = self
            .coords
            .iter()
            .zip(w.vectors())
            .map(|(y, v)| s3.retract(y, &linalg::scale(t, v)))
            .collect::<Result<Vec<_>>>()?;
        self.with_coords(coords)
    }

    /// Mean edge length in R^4.
    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.mesh.edges();
        let total: f64 = edges
            .iter()
            .map(|e| linalg::norm(&linalg::sub(&self.coords[e[1]], &self.coords[e[0]])))
            .sum();
        total / edges.len() as f64
    }

    pub fn total_area(&self) -> f64 {
        crate::reduce::canonical_sum(self.metrics.iter().map(|m| m.dvol).collect())
    }

    /// Barycentric dual areas (one third of the incident face areas).
    pub fn dual_areas(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vertices()];
        for (f, m) in self.mesh.faces().iter().zip(&self.metrics) {
            for &v in f {
                out[v] += m.dvol / 3.0;
            }
        }
        out
    }

    /// Smallest face rank ratio over the mesh.
    pub fn min_rank_ratio(&self) -> f64 {
        self.metrics
            .iter()
            .map(|m| rank_ratio(&m.g))
            .fold(f64::INFINITY, f64::min)
    }

    /// Re-runs every invariant check (closedness and orientation are
    /// guaranteed by [`ParamMesh`] construction).
    pub fn validate(&self) -> Result<()> {
        Self::new(self.mesh.clone(), self.coords.clone()).map(|_| ())
    }

    /// Relabels vertices by `perm` (new index of old vertex `v` is `perm[v]`)
    /// and reorders faces by `face_order`.
    pub fn relabel(&self, perm: &[usize], face_order: &[usize]) -> Result<Self> {
        let n = self.n_vertices();
        let mut coords = vec![[0.0; 4]; n];
        for (v, &p) in perm.iter().enumerate() {
            coords[p] = self.coords[v];
        }
        let faces = face_order
            .iter()
            .map(|&fi| self.mesh.faces()[fi].map(|v| perm[v]))
            .collect();
        Self::new(Arc::new(ParamMesh::new(n, faces)?), coords)
    }

    pub fn disjoint_union(&self, other: &DiscreteImmersion) -> Result<Self> {
        let mesh = self.mesh.disjoint_union(&other.mesh)?;
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Self::new(Arc::new(mesh), coords)
    }
}

fn compute_metrics(mesh: &ParamMesh, coords: &[Vec4]) -> Result<Vec<FaceMetric>> {
    mesh.faces()
        .iter()
        .enumerate()
        .map(|(fi, f)| {
            let e1 = linalg::sub(&coords[f[1]], &coords[f[0]]);
            let e2 = linalg::sub(&coords[f[2]], &coords[f[0]]);
            let g = linalg::gram(&e1, &e2);
            let ratio = rank_ratio(&g);
            if !(ratio >= RANK_TOL) {
                return Err(Error::DegenerateFace { face: fi, ratio });
            }
            Ok(FaceMetric {
                g,
                dvol: 0.5 * linalg::sym2_det(&g).max(0.0).sqrt(),
            })
        })
        .collect()
}

/// A per-vertex variation field with `w_v · Φ_v = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    vectors: Vec<Vec4>,
}

impl TangentField {
    pub fn zeros(n: usize) -> Self {
        Self {
            vectors: vec![[0.0; 4]; n],
        }
    }

    /// Projects arbitrary vectors onto the tangent spaces of `imm`.
    pub fn project(imm: &DiscreteImmersion, raw: &[Vec4]) -> Self {
        let s3 = S3::default();
        let vectors = imm
            .coords()
            .iter()
            .zip(raw)
            .map(|(y, v)| s3.tangent_project(y, v))
            .collect();
        Self { vectors }
    }

    /// Checked constructor: fails if any vector is not tangent.
    pub fn new(imm: &DiscreteImmersion, vectors: Vec<Vec4>) -> Result<Self> {
        if vectors.len() != imm.n_vertices() {
            return Err(Error::Validation("field length mismatch".into()));
        }
        for (v, (y, w)) in imm.coords().iter().zip(&vectors).enumerate() {
            if linalg::dot(y, w).abs() > TANGENT_TOL {
                return Err(Error::Validation(format!("field is not tangent at vertex {v}")));
            }
        }
        Ok(Self { vectors })
    }

    /// Independent Gaussian vectors per vertex, projected, scaled to unit RMS.
    pub fn random<R: Rng>(imm: &DiscreteImmersion, rng: &mut R) -> Self {
        let raw: Vec<Vec4> = (0..imm.n_vertices())
            .map(|_| std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Self::project(imm, &raw).normalized_rms()
    }

    /// Smooth random field: a random affine ambient field `y ↦ A y + b`
    /// restricted and projected, scaled to unit maximum norm.
    pub fn smooth_random<R: Rng>(imm: &DiscreteImmersion, rng: &mut R) -> Self {
        let b: Vec4 = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
        Self::affine_random(imm, rng, b)
    }

    /// Smooth random field odd under `y ↦ −y`: `y ↦ A y + B y³`
    /// (cube taken componentwise), projected and scaled to unit maximum norm.
    /// On a great sphere its normal part carries no constant mode.
    pub fn smooth_random_odd<R: Rng>(imm: &DiscreteImmersion, rng: &mut R) -> Self {
        let a: [[f64; 4]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal)));
        let b: [[f64; 4]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal)));
        let raw: Vec<Vec4> = imm
            .coords()
            .iter()
            .map(|y| {
                let cube = y.map(|x| x * x * x);
                std::array::from_fn(|i| linalg::dot(&a[i], y) + 4.0 * linalg::dot(&b[i], &cube))
            })
            .collect();
        Self::project(imm, &raw).unit_max()
    }

    fn affine_random<R: Rng>(imm: &DiscreteImmersion, rng: &mut R, b: Vec4) -> Self {
        let a: [[f64; 4]; 4] =
            std::array::from_fn(|_| std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal)));
        let raw: Vec<Vec4> = imm
            .coords()
            .iter()
            .map(|y| std::array::from_fn(|i| linalg::dot(&a[i], y) + b[i]))
            .collect();
        Self::project(imm, &raw).unit_max()
    }

    fn unit_max(self) -> Self {
        let max = self.max_norm();
        if max > 0.0 {
            self.scaled(1.0 / max)
        } else {
            self
        }
    }

    pub fn vectors(&self) -> &[Vec4] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<Vec4> {
        self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vectors: self.vectors.iter().map(|v| linalg::scale(s, v)).collect(),
        }
    }

    pub fn add(&self, other: &TangentField) -> Self {
        Self {
            vectors: self
                .vectors
                .iter()
                .zip(&other.vectors)
                .map(|(a, b)| linalg::add(a, b))
                .collect(),
        }
    }

    /// Euclidean pairing `Σ_v a_v · b_v`.
    pub fn pairing(&self, other: &[Vec4]) -> f64 {
        self.vectors
            .iter()
            .zip(other)
            .map(|(a, b)| linalg::dot(a, b))
            .sum()
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().map(linalg::norm).fold(0.0, f64::max)
    }

    fn normalized_rms(self) -> Self {
        let ss: f64 = self.vectors.iter().map(|v| linalg::dot(v, v)).sum();
        let rms = (ss / self.vectors.len().max(1) as f64).sqrt();
        if rms > 0.0 {
            self.scaled(1.0 / rms)
        } else {
            self
        }
    }
}

/// Midpoint subdivision: every triangle split in four, midpoints reprojected.
pub fn refine(imm: &DiscreteImmersion) -> Result<DiscreteImmersion> {
    let s3 = S3::default();
    let (n, faces, mids) = split_faces(imm.mesh());
    let mut coords = imm.coords().to_vec();
    coords.reserve(n - coords.len());
    for [a, b] in mids {
        let m = linalg::scale(0.5, &linalg::add(&imm.coords()[a], &imm.coords()[b]));
        coords.push(s3.project(&m)?);
    }
    DiscreteImmersion::new(Arc::new(ParamMesh::new(n, faces)?), coords)
}

/// 1-to-4 split; returns the new vertex count, faces, and the endpoints of
/// each new midpoint vertex in creation order.
pub(crate) fn split_faces(mesh: &ParamMesh) -> (usize, Vec<[usize; 3]>, Vec<[usize; 2]>) {
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mids = Vec::new();
    let mut next = mesh.n_vertices();
    let mut mid = |a: usize, b: usize, mids: &mut Vec<[usize; 2]>| {
        let key = (a.min(b), a.max(b));
        *index.entry(key).or_insert_with(|| {
            mids.push([key.0, key.1]);
            next += 1;
            next - 1
        })
    };
    let mut faces = Vec::with_capacity(mesh.n_faces() * 4);
    for &[a, b, c] in mesh.faces() {
        let ab = mid(a, b, &mut mids);
        let bc = mid(b, c, &mut mids);
        let ca = mid(c, a, &mut mids);
        faces.push([a, ab, ca]);
        faces.push([ab, b, bc]);
        faces.push([ca, bc, c]);
        faces.push([ab, bc, ca]);
    }
    (mesh.n_vertices() + mids.len(), faces, mids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> ParamMesh {
        ParamMesh::new(4, vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]]).unwrap()
    }

    #[test]
    fn tetrahedron_is_a_closed_sphere() {
        let m = tetra();
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.genus(), Some(0));
        assert_eq!(m.n_edges(), 6);
    }

    #[test]
    fn open_mesh_is_rejected() {
        let err = ParamMesh::new(4, vec![[0, 2, 1], [0, 1, 3], [1, 2, 3]]).unwrap_err();
        assert!(matches!(err, Error::Validation(msg) if msg.starts_with("closed")));
    }

    #[test]
    fn inconsistent_orientation_is_rejected() {
        let err = ParamMesh::new(4, vec![[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 3, 2]]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn rank_ratio_of_equilateral_is_one() {
        // equilateral with unit edges: g = [1, 1/2, 1]
        assert!((rank_ratio(&[1.0, 0.5, 1.0]) - 1.0).abs() < 1e-12);
        assert!(rank_ratio(&[1.0, 1.0, 1.0]) < 1e-7);
    }

    #[test]
    fn disjoint_union_counts_components() {
        let m = tetra();
        let u = m.disjoint_union(&m).unwrap();
        assert_eq!(u.component_count(), 2);
        assert_eq!(u.genus(), None);
        assert_eq!(u.euler_characteristic(), 4);
    }
}
