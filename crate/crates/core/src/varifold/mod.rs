//! Diagnostics of an immersion viewed as a varifold in R⁴: push-forward
//! masses in extrinsic balls, density profiles, stationarity and
//! target-harmonic residuals, and detectors for collapse, necks, bubbles and
//! degenerate faces.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{self, check_params, dirichlet_face, sym2_inverse};
use crate::linalg::{self, Sym2, Vec4};
use crate::mesh::{rank_ratio, DiscreteImmersion};
use crate::reduce::{canonical_sum, canonical_sum4};

/// Relative slack allowed when fitting the monotonicity constant.
pub const MONOTONICITY_SLACK: f64 = 0.01;
/// Low-density threshold for the quantization check.
pub const ETA_DEFAULT: f64 = PI / 3.0;
/// Default energy threshold of the neck scan.
pub const EPS0_DEFAULT: f64 = 0.5;
/// Largest radius accepted by [`integer_density`].
pub const DENSITY_MAX_RADIUS: f64 = 0.3;
/// Smallest radius accepted by windowed diagnostics, in mean edge lengths.
pub const MIN_RADIUS_EDGES: f64 = 4.0;
/// Support tolerance of target-harmonic test functions.
pub const SUPPORT_TOL: f64 = 1e-9;

// ---------------------------------------------------------------- masses

/// A face laid out in its own plane: `x_a + α u + β v`.
struct FacePlane {
    xa: Vec4,
    u: Vec4,
    v: Vec4,
    tri: [[f64; 2]; 3],
    pts: [Vec4; 3],
    centroid: Vec4,
    reach: f64,
    dvol: f64,
}

impl FacePlane {
    fn new(x: [&Vec4; 3], dvol: f64) -> Self {
        let e1 = linalg::sub(x[1], x[0]);
        let e2 = linalg::sub(x[2], x[0]);
        let l1 = linalg::norm(&e1);
        let u = e1.map(|c| c / l1);
        let w = linalg::sub(&e2, &linalg::scale(linalg::dot(&e2, &u), &u));
        let lw = linalg::norm(&w);
        let v = w.map(|c| c / lw);
        let centroid = [0, 1, 2, 3].map(|k| (x[0][k] + x[1][k] + x[2][k]) / 3.0);
        let reach = x
            .iter()
            .map(|p| linalg::norm(&linalg::sub(p, &centroid)))
            .fold(0.0, f64::max);
        Self {
            xa: *x[0],
            u,
            v,
            tri: [[0.0, 0.0], [l1, 0.0], [linalg::dot(&e2, &u), lw]],
            pts: [*x[0], *x[1], *x[2]],
            centroid,
            reach,
            dvol,
        }
    }

    /// Area of this face inside the closed ball `B_r(q)`.
    fn mass(&self, q: &Vec4, r: f64) -> f64 {
        let r2 = r * r;
        let inside = self
            .pts
            .iter()
            .all(|p| linalg::dot(&linalg::sub(p, q), &linalg::sub(p, q)) <= r2);
        if inside {
            return self.dvol;
        }
        if linalg::norm(&linalg::sub(&self.centroid, q)) - self.reach > r {
            return 0.0;
        }
        let w = linalg::sub(q, &self.xa);
        let (a, b) = (linalg::dot(&w, &self.u), linalg::dot(&w, &self.v));
        let d2 = (linalg::dot(&w, &w) - a * a - b * b).max(0.0);
        if d2 >= r2 {
            return 0.0;
        }
        disk_triangle_area([a, b], (r2 - d2).sqrt(), &self.tri)
    }
}

/// Exact area of a triangle intersected with a disc.
fn disk_triangle_area(center: [f64; 2], rad: f64, tri: &[[f64; 2]; 3]) -> f64 {
    let rel = |p: &[f64; 2]| [p[0] - center[0], p[1] - center[1]];
    let s: f64 = (0..3)
        .map(|k| segment_area(rel(&tri[k]), rel(&tri[(k + 1) % 3]), rad))
        .sum();
    s.abs()
}

/// Signed area of the disc of radius `rad` at the origin intersected with
/// the triangle `(0, p, q)`.
fn segment_area(p: [f64; 2], q: [f64; 2], rad: f64) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let a = d[0] * d[0] + d[1] * d[1];
    if a == 0.0 {
        return 0.0;
    }
    let b = p[0] * d[0] + p[1] * d[1];
    let c = p[0] * p[0] + p[1] * p[1] - rad * rad;
    let mut ts = vec![0.0, 1.0];
    let disc = b * b - a * c;
    if disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-b - sq) / a, (-b + sq) / a] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    let at = |t: f64| [p[0] + t * d[0], p[1] + t * d[1]];
    let mut s = 0.0;
    for w in ts.windows(2) {
        let (u, v) = (at(w[0]), at(w[1]));
        let m = at(0.5 * (w[0] + w[1]));
        let cross = u[0] * v[1] - u[1] * v[0];
        if m[0] * m[0] + m[1] * m[1] <= rad * rad {
            s += 0.5 * cross;
        } else {
            s += 0.5 * rad * rad * cross.atan2(u[0] * v[0] + u[1] * v[1]);
        }
    }
    s
}

/// Faces sorted by the first centroid coordinate, for repeated ball queries.
pub struct MassIndex {
    planes: Vec<FacePlane>,
    keys: Vec<f64>,
    reach: f64,
}

impl MassIndex {
    pub fn new(imm: &DiscreteImmersion) -> Self {
        let c = imm.coords();
        let mut planes: Vec<FacePlane> = imm
            .mesh()
            .faces()
            .iter()
            .zip(imm.face_metrics())
            .map(|(f, m)| FacePlane::new([&c[f[0]], &c[f[1]], &c[f[2]]], m.dvol))
            .collect();
        planes.sort_by(|a, b| a.centroid[0].total_cmp(&b.centroid[0]));
        let keys = planes.iter().map(|p| p.centroid[0]).collect();
        let reach = planes.iter().map(|p| p.reach).fold(0.0, f64::max);
        Self { planes, keys, reach }
    }

    /// `μ(B_r(q))`: area of the immersion inside the extrinsic ball.
    pub fn mass(&self, q: &Vec4, r: f64) -> f64 {
        let lo = self.keys.partition_point(|&k| k < q[0] - r - self.reach);
        let hi = self.keys.partition_point(|&k| k <= q[0] + r + self.reach);
        let parts: Vec<f64> = self.planes[lo..hi]
            .iter()
            .map(|f| f.mass(q, r))
            .filter(|&m| m > 0.0)
            .collect();
        canonical_sum(parts)
    }
}

/// Area of `Φ(Σ)` inside the extrinsic ball `B⁴_r(q)`. Faces are clipped
/// exactly: the ball meets each face plane in a disc.
pub fn pushforward_mass(imm: &DiscreteImmersion, q: &Vec4, r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(MassIndex::new(imm).mass(q, r))
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::BadParam(format!("radius {r} must be positive")));
    }
    Ok(())
}

// ---------------------------------------------------------------- profiles

#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub center: Vec4,
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    /// `mass / (π r²)`.
    pub ratios: Vec<f64>,
    /// Least `C ≥ 0` making `e^{Cr} mass / r²` nondecreasing up to the slack.
    pub fitted_c: f64,
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::BadParam("no radii".into()));
    }
    for (i, &r) in radii.iter().enumerate() {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::BadParam(format!("radius {r} outside (0, 1]")));
        }
        if i > 0 && !(r > radii[i - 1]) {
            return Err(Error::BadParam("radii must increase".into()));
        }
    }
    Ok(())
}

pub fn density_profile(imm: &DiscreteImmersion, q: &Vec4, radii: &[f64]) -> Result<DensityProfile> {
    check_radii(radii)?;
    Ok(profile_with(&MassIndex::new(imm), q, radii))
}

/// Profiles at several centers sharing one index.
pub fn density_profiles(
    imm: &DiscreteImmersion,
    centers: &[Vec4],
    radii: &[f64],
) -> Result<Vec<DensityProfile>> {
    check_radii(radii)?;
    let index = MassIndex::new(imm);
    Ok(centers
        .par_iter()
        .map(|q| profile_with(&index, q, radii))
        .collect())
}

fn profile_with(index: &MassIndex, q: &Vec4, radii: &[f64]) -> DensityProfile {
    let masses: Vec<f64> = radii.iter().map(|&r| index.mass(q, r)).collect();
    let ratios = radii.iter().zip(&masses).map(|(r, m)| m / (PI * r * r)).collect();
    DensityProfile {
        center: *q,
        radii: radii.to_vec(),
        fitted_c: fit_monotonicity(radii, &masses),
        masses,
        ratios,
    }
}

fn fit_monotonicity(radii: &[f64], masses: &[f64]) -> f64 {
    let mut c: f64 = 0.0;
    for i in 1..radii.len() {
        let lo = masses[i - 1] / (radii[i - 1] * radii[i - 1]);
        let hi = masses[i] / (radii[i] * radii[i]);
        if lo <= 0.0 {
            continue;
        }
        if hi <= 0.0 {
            return f64::INFINITY;
        }
        c = c.max(((1.0 - MONOTONICITY_SLACK) * lo / hi).ln() / (radii[i] - radii[i - 1]));
    }
    c
}

/// `n` radii in geometric progression from `r0` to `r1`.
pub fn geometric_radii(r0: f64, r1: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![r0];
    }
    (0..n)
        .map(|i| r0 * (r1 / r0).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Greedy farthest-point sample of `k` vertices, starting from vertex 0.
pub fn farthest_point_sample(imm: &DiscreteImmersion, k: usize) -> Vec<usize> {
    let c = imm.coords();
    let n = c.len();
    let mut out = Vec::with_capacity(k.min(n));
    if n == 0 || k == 0 {
        return out;
    }
    let dist = |a: usize, b: usize| linalg::norm(&linalg::sub(&c[a], &c[b]));
    let mut best: Vec<f64> = (0..n).map(|v| dist(v, 0)).collect();
    out.push(0);
    while out.len() < k.min(n) {
        let mut far = 0;
        for v in 1..n {
            if best[v] > best[far] {
                far = v;
            }
        }
        out.push(far);
        for v in 0..n {
            best[v] = best[v].min(dist(v, far));
        }
    }
    out
}

// ---------------------------------------------------------------- stationarity

type Mat4 = [[f64; 4]; 4];

/// Ambient test fields, tangent-projected to S³ when evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum TestVectorField {
    /// `x_i ∂_j − x_j ∂_i`.
    Rotation {
        i: usize,
        j: usize,
    },
    /// `∂_i`.
    Coordinate {
        i: usize,
    },
    /// `field` times `(1 − |y − c|²/ρ²)³₊`.
    Bump {
        field: Box<TestVectorField>,
        center: Vec4,
        radius: f64,
    },
    Combination(Vec<(f64, TestVectorField)>),
}

impl TestVectorField {
    /// Six rotation generators then four coordinate fields.
    pub fn standard_basis() -> Vec<Self> {
        let mut out = Vec::with_capacity(10);
        for i in 0..4 {
            for j in i + 1..4 {
                out.push(Self::Rotation { i, j });
            }
        }
        out.extend((0..4).map(|i| Self::Coordinate { i }));
        out
    }

    pub fn label(&self) -> String {
        match self {
            Self::Rotation { i, j } => format!("rot{}{}", i + 1, j + 1),
            Self::Coordinate { i } => format!("coord{}", i + 1),
            Self::Bump { field, .. } => format!("bump_{}", field.label()),
            Self::Combination(_) => "combination".into(),
        }
    }

    /// Ambient value `X(y)` and Jacobian `J[k][l] = ∂_l X_k`.
    fn ambient(&self, y: &Vec4) -> (Vec4, Mat4) {
        let mut x = [0.0; 4];
        let mut j = [[0.0; 4]; 4];
        match self {
            Self::Rotation { i, j: jj } => {
                x[*jj] = y[*i];
                x[*i] = -y[*jj];
                j[*jj][*i] = 1.0;
                j[*i][*jj] = -1.0;
            }
            Self::Coordinate { i } => x[*i] = 1.0,
            Self::Bump {
                field,
                center,
                radius,
            } => {
                let (fx, fj) = field.ambient(y);
                let d = linalg::sub(y, center);
                let s = linalg::dot(&d, &d) / (radius * radius);
                if s < 1.0 {
                    let phi = (1.0 - s).powi(3);
                    let dphi = d.map(|c| -6.0 * (1.0 - s).powi(2) * c / (radius * radius));
                    for k in 0..4 {
                        x[k] = phi * fx[k];
                        for l in 0..4 {
                            j[k][l] = phi * fj[k][l] + fx[k] * dphi[l];
                        }
                    }
                }
            }
            Self::Combination(terms) => {
                for (c, f) in terms {
                    let (fx, fj) = f.ambient(y);
                    for k in 0..4 {
                        x[k] += c * fx[k];
                        for l in 0..4 {
                            j[k][l] += c * fj[k][l];
                        }
                    }
                }
            }
        }
        (x, j)
    }

    /// Value and Jacobian of `X − (X·y) y`.
    pub fn eval(&self, y: &Vec4) -> (Vec4, Mat4) {
        let (x, j) = self.ambient(y);
        let xy = linalg::dot(&x, y);
        let mut jt = [[0.0; 4]; 4];
        for l in 0..4 {
            let yj: f64 = (0..4).map(|m| y[m] * j[m][l]).sum::<f64>() + x[l];
            for k in 0..4 {
                jt[k][l] = j[k][l] - y[k] * yj - if k == l { xy } else { 0.0 };
            }
        }
        (linalg::sub(&x, &linalg::scale(xy, y)), jt)
    }
}

fn face_frame(imm: &DiscreteImmersion, f: &[usize; 3]) -> (Vec4, Vec4) {
    let c = imm.coords();
    (linalg::sub(&c[f[1]], &c[f[0]]), linalg::sub(&c[f[2]], &c[f[0]]))
}

/// `tr(g⁻¹ Dᵀ J D)` for the face frame `D = [e1, e2]`.
fn trace_pullback(gi: &Sym2<f64>, e: [&Vec4; 2], j: &Mat4) -> f64 {
    let apply = |v: &Vec4| [0, 1, 2, 3].map(|k| (0..4).map(|l| j[k][l] * v[l]).sum::<f64>());
    let (j1, j2) = (apply(e[0]), apply(e[1]));
    let b00 = linalg::dot(e[0], &j1);
    let b01 = linalg::dot(e[0], &j2);
    let b10 = linalg::dot(e[1], &j1);
    let b11 = linalg::dot(e[1], &j2);
    gi[0] * b00 + gi[1] * (b01 + b10) + gi[2] * b11
}

/// `∫ [div_Σ X − (X·Φ)|dΦ|²]`, with the integrand averaged over the face
/// vertices.
pub fn stationarity_residual(imm: &DiscreteImmersion, field: &TestVectorField) -> f64 {
    let c = imm.coords();
    let parts: Vec<f64> = imm
        .mesh()
        .faces()
        .par_iter()
        .zip(imm.face_metrics())
        .map(|(f, m)| {
            let (e1, e2) = face_frame(imm, f);
            let gi = sym2_inverse(&m.g);
            let s: f64 = f
                .iter()
                .map(|&v| {
                    let (x, j) = field.eval(&c[v]);
                    trace_pullback(&gi, [&e1, &e2], &j) - 2.0 * linalg::dot(&x, &c[v])
                })
                .sum();
            s / 3.0 * m.dvol
        })
        .collect();
    canonical_sum(parts)
}

// ---------------------------------------------------------------- target harmonic

/// Scalar test functions on R⁴.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarTest {
    /// `amplitude (1 − |y − c|²/ρ²)³₊`.
    Bump {
        center: Vec4,
        radius: f64,
        amplitude: f64,
    },
    Linear(Vec4),
    Combination(Vec<(f64, ScalarTest)>),
}

impl ScalarTest {
    pub fn zero() -> Self {
        Self::Combination(Vec::new())
    }

    pub fn value(&self, y: &Vec4) -> f64 {
        match self {
            Self::Bump {
                center,
                radius,
                amplitude,
            } => {
                let d = linalg::sub(y, center);
                let s = linalg::dot(&d, &d) / (radius * radius);
                if s < 1.0 {
                    amplitude * (1.0 - s).powi(3)
                } else {
                    0.0
                }
            }
            Self::Linear(a) => linalg::dot(a, y),
            Self::Combination(t) => t.iter().map(|(c, f)| c * f.value(y)).sum(),
        }
    }
}

/// `∫_Ω N [⟨d(F∘Φ), dΦ⟩ − F(Φ) |dΦ|² Φ]` with `F∘Φ` interpolated linearly
/// on each face. Vanishes in the limit exactly for harmonic maps into S³.
/// `weights` defaults to `N ≡ 1`, `omega` to all faces.
pub fn target_harmonic_residual(
    imm: &DiscreteImmersion,
    weights: Option<&[u32]>,
    f: &ScalarTest,
    omega: Option<&[usize]>,
) -> Result<Vec4> {
    let nf = imm.n_faces();
    if let Some(w) = weights {
        if w.len() != nf {
            return Err(Error::MeshMismatch);
        }
        if w.contains(&0) {
            return Err(Error::BadParam("weights must be positive".into()));
        }
    }
    let mut member = vec![omega.is_none(); nf];
    if let Some(o) = omega {
        for &i in o {
            if i >= nf {
                return Err(Error::BadParam(format!("face {i} out of range")));
            }
            member[i] = true;
        }
    }
    let c = imm.coords();
    let values: Vec<f64> = c.par_iter().map(|y| f.value(y)).collect();
    if omega.is_some() {
        for v in 0..imm.n_vertices() {
            let adj = imm.mesh().vertex_faces(v);
            let inner = adj.iter().any(|&k| member[k]);
            let outer = adj.iter().any(|&k| !member[k]);
            if inner && outer && values[v].abs() > SUPPORT_TOL {
                return Err(Error::SupportViolation {
                    vertex: v,
                    value: values[v],
                });
            }
        }
    }
    let parts: Vec<Vec4> = imm
        .mesh()
        .faces()
        .par_iter()
        .enumerate()
        .filter(|(k, _)| member[*k])
        .map(|(k, fc)| {
            let m = &imm.face_metrics()[k];
            let (e1, e2) = face_frame(imm, fc);
            let gi = sym2_inverse(&m.g);
            let df = [values[fc[1]] - values[fc[0]], values[fc[2]] - values[fc[0]]];
            let a = gi[0] * df[0] + gi[1] * df[1];
            let b = gi[1] * df[0] + gi[2] * df[1];
            let n = weights.map_or(1.0, |w| w[k] as f64);
            let mut out = [0.0; 4];
            for i in 0..4 {
                let fy: f64 = fc.iter().map(|&v| values[v] * c[v][i]).sum::<f64>() / 3.0;
                out[i] = n * m.dvol * (a * e1[i] + b * e2[i] - 2.0 * fy);
            }
            out
        })
        .collect();
    Ok(canonical_sum4(&parts))
}

// ---------------------------------------------------------------- collapse & quantization

/// Largest distance in R⁴ between two vertices.
pub fn extrinsic_diameter(imm: &DiscreteImmersion) -> f64 {
    let c = imm.coords();
    (0..c.len())
        .into_par_iter()
        .map(|i| {
            c[i + 1..]
                .iter()
                .map(|y| linalg::norm(&linalg::sub(y, &c[i])))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseReport {
    pub diameter: f64,
    pub sigma2_fp: f64,
    pub area: f64,
    /// `σ² f_p ≤ ε area`.
    pub premise: bool,
    /// Premise holds and the diameter is at most `δ`.
    pub collapsed: bool,
}

pub fn collapse_check(
    imm: &DiscreteImmersion,
    p: f64,
    sigma: f64,
    eps: f64,
    delta: f64,
) -> Result<CollapseReport> {
    check_params(p, sigma)?;
    if !(eps >= 0.0 && delta >= 0.0) {
        return Err(Error::BadParam("eps and delta must be nonnegative".into()));
    }
    let e = geometry::energies(imm, p, sigma)?;
    let diameter = extrinsic_diameter(imm);
    let sigma2_fp = sigma * sigma * e.f_p;
    let premise = sigma2_fp <= eps * e.area;
    Ok(CollapseReport {
        diameter,
        sigma2_fp,
        area: e.area,
        premise,
        collapsed: premise && diameter <= delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationReport {
    pub sigma2_fp: f64,
    /// `Λ area / log(1/σ)`.
    pub bound: f64,
    pub premise: bool,
    pub area: f64,
    pub q0: f64,
    pub area_at_least_q0: bool,
    /// Vertices with `μ(B_σ(q)) / σ² < η`.
    pub low_density_count: usize,
    /// Their share of the total dual area.
    pub low_density_fraction: f64,
}

pub fn quantization_check(
    imm: &DiscreteImmersion,
    p: f64,
    sigma: f64,
    lambda: f64,
    eta: f64,
    q0: f64,
) -> Result<QuantizationReport> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::BadParam(format!("sigma {sigma} outside (0, 1)")));
    }
    if !(lambda > 0.0 && eta > 0.0) || !q0.is_finite() {
        return Err(Error::BadParam("lambda and eta must be positive".into()));
    }
    check_params(p, sigma)?;
    let e = geometry::energies(imm, p, sigma)?;
    let sigma2_fp = sigma * sigma * e.f_p;
    let bound = lambda / (1.0 / sigma).ln() * e.area;
    let index = MassIndex::new(imm);
    let low: Vec<bool> = imm
        .coords()
        .par_iter()
        .map(|q| index.mass(q, sigma) / (sigma * sigma) < eta)
        .collect();
    let dual = imm.dual_areas();
    let low_area = canonical_sum(
        dual.iter()
            .zip(&low)
            .filter(|(_, &l)| l)
            .map(|(a, _)| *a)
            .collect(),
    );
    Ok(QuantizationReport {
        sigma2_fp,
        bound,
        premise: sigma2_fp <= bound,
        area: e.area,
        q0,
        area_at_least_q0: e.area >= q0,
        low_density_count: low.iter().filter(|&&l| l).count(),
        low_density_fraction: low_area / canonical_sum(dual),
    })
}

// ---------------------------------------------------------------- necks

/// Hop distance of each face barycenter from `x` (mean of its vertices;
/// infinite when unreachable) and the eccentricity of `x`.
fn face_hops(imm: &DiscreteImmersion, x: usize) -> Result<(Vec<f64>, usize)> {
    if x >= imm.n_vertices() {
        return Err(Error::BadParam(format!("vertex {x} out of range")));
    }
    let hops = imm.mesh().hop_distances(x);
    let ecc = hops
        .iter()
        .copied()
        .filter(|&h| h != usize::MAX)
        .max()
        .unwrap_or(0);
    let faces = imm
        .mesh()
        .faces()
        .iter()
        .map(|f| {
            if f.iter().any(|&v| hops[v] == usize::MAX) {
                f64::INFINITY
            } else {
                f.iter().map(|&v| hops[v] as f64).sum::<f64>() / 3.0
            }
        })
        .collect();
    Ok((faces, ecc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeckScanReport {
    pub center: usize,
    pub delta: f64,
    /// Dirichlet energy of the annulus `[2^j δ, 2^{j+1} δ)`, `j = 1..=J`.
    pub annuli: Vec<f64>,
    pub max_annulus_energy: f64,
    pub total_energy: f64,
    pub neck_tol: f64,
    pub flagged: bool,
}

/// Dyadic annuli around `x` in hop distance. Flags a candidate neck when every
/// annulus carries less than `ε₀/4` while together they carry at least `ε₀`.
pub fn neck_scan(
    imm: &DiscreteImmersion,
    x: usize,
    delta: f64,
    big_j: u32,
    eps0: f64,
) -> Result<NeckScanReport> {
    if big_j == 0 {
        return Err(Error::BadParam("need at least one annulus".into()));
    }
    if !(delta > 0.0 && eps0 > 0.0) {
        return Err(Error::BadParam("delta and eps0 must be positive".into()));
    }
    let (hops, ecc) = face_hops(imm, x)?;
    let outer = 2f64.powi(big_j as i32 + 1) * delta;
    if outer > ecc as f64 {
        return Err(Error::BadParam(format!(
            "annuli reach {outer} hops, mesh scale is {ecc}"
        )));
    }
    let energy = geometry::dirichlet_per_face(imm);
    let annuli: Vec<f64> = (1..=big_j)
        .map(|j| {
            let lo = 2f64.powi(j as i32) * delta;
            let hi = 2.0 * lo;
            canonical_sum(
                hops.iter()
                    .zip(&energy)
                    .filter(|(&h, _)| h >= lo && h < hi)
                    .map(|(_, &e)| e)
                    .collect(),
            )
        })
        .collect();
    let max_annulus_energy = annuli.iter().copied().fold(0.0, f64::max);
    let total_energy = canonical_sum(annuli.clone());
    let neck_tol = 0.25 * eps0;
    Ok(NeckScanReport {
        center: x,
        delta,
        flagged: max_annulus_energy < neck_tol && total_energy >= eps0,
        annuli,
        max_annulus_energy,
        total_energy,
        neck_tol,
    })
}

// ---------------------------------------------------------------- oscillation & vanishing

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillationEntry {
    pub sigma: f64,
    /// Energy of the smoothed last map in `B_{2r}` over `ν(B_r)`.
    pub oscillation: f64,
    /// Global over local average of `(1 + |II|²)^p`.
    pub vanishing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    pub center: usize,
    pub radius: f64,
    pub entries: Vec<OscillationEntry>,
    /// Last minus first.
    pub oscillation_trend: f64,
    pub vanishing_trend: f64,
}

/// Uniform neighbour averaging with weight ½, `iterations` times, then
/// projection back to S³.
fn smoothed_coords(imm: &DiscreteImmersion, iterations: usize) -> Vec<Vec4> {
    let m = imm.mesh();
    let mut x: Vec<Vec4> = imm.coords().to_vec();
    for _ in 0..iterations {
        x = (0..x.len())
            .into_par_iter()
            .map(|v| {
                let nb = m.neighbors(v);
                let mut avg = [0.0; 4];
                for &w in nb {
                    linalg::axpy(1.0 / nb.len() as f64, &x[w], &mut avg);
                }
                [0, 1, 2, 3].map(|k| 0.5 * (x[v][k] + avg[k]))
            })
            .collect();
    }
    x.into_iter()
        .map(|y| {
            let n = linalg::norm(&y);
            if n > 0.0 {
                y.map(|c| c / n)
            } else {
                y
            }
        })
        .collect()
}

/// Oscillation and vanishing indicators at vertex `x` along a sequence of
/// `(σ, Φ)` with decreasing σ on one mesh. Parameter balls are hop balls
/// scaled by the mean edge length of the last map. The weak limit in the
/// oscillation ratio is stood in for by the last map smoothed at scale `r`.
pub fn oscillation_vanishing_estimate(
    seq: &[(f64, DiscreteImmersion)],
    x: usize,
    r: f64,
    p: f64,
) -> Result<OscillationReport> {
    if seq.len() < 2 {
        return Err(Error::BadParam("need at least two immersions".into()));
    }
    for w in seq.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(Error::BadParam("sigma must decrease along the sequence".into()));
        }
        if !w[0].1.shares_mesh(&w[1].1) {
            return Err(Error::MeshMismatch);
        }
    }
    let last = &seq[seq.len() - 1].1;
    let h = last.mean_edge_length();
    if !(r >= MIN_RADIUS_EDGES * h) {
        return Err(Error::BadParam(format!(
            "radius {r} below {MIN_RADIUS_EDGES} edge lengths ({h})"
        )));
    }
    let (hops, _) = face_hops(last, x)?;
    let rh = r / h;
    let in_ball = |k: usize, s: f64| hops[k] <= s * rh;
    let faces = last.mesh().faces();

    let iterations = (0.5 * rh * rh).ceil() as usize;
    let smooth = smoothed_coords(last, iterations);
    let numer = canonical_sum(
        faces
            .iter()
            .enumerate()
            .filter(|(k, _)| in_ball(*k, 2.0))
            .map(|(_, f)| 2.0 * dirichlet_face([&smooth[f[0]], &smooth[f[1]], &smooth[f[2]]]))
            .collect(),
    );

    let mut entries = Vec::with_capacity(seq.len());
    for (sigma, imm) in seq {
        check_params(p, *sigma)?;
        let nu = geometry::dirichlet_per_face(imm);
        let nu_ball = canonical_sum(
            (0..faces.len())
                .filter(|&k| in_ball(k, 1.0))
                .map(|k| 2.0 * nu[k])
                .collect(),
        );
        let gauss = geometry::gauss_map(imm)?;
        let (terms, _) = geometry::fp_terms(imm, &gauss, p);
        let area = imm.total_area();
        let f_sigma = sigma * sigma * canonical_sum(terms.clone()) / area;
        let metrics = imm.face_metrics();
        let area_ball = canonical_sum(
            (0..faces.len())
                .filter(|&k| in_ball(k, 1.0))
                .map(|k| metrics[k].dvol)
                .collect(),
        );
        let fp_ball = canonical_sum(
            (0..faces.len())
                .filter(|&k| in_ball(k, 1.0))
                .map(|k| terms[k])
                .collect(),
        );
        entries.push(OscillationEntry {
            sigma: *sigma,
            oscillation: numer / (nu_ball + 1e-14),
            vanishing: f_sigma * area_ball / (sigma * sigma * fp_ball + 1e-14),
        });
    }
    let (a, b) = (entries[0], entries[entries.len() - 1]);
    Ok(OscillationReport {
        center: x,
        radius: r,
        oscillation_trend: b.oscillation - a.oscillation,
        vanishing_trend: b.vanishing - a.vanishing,
        entries,
    })
}

// ---------------------------------------------------------------- density

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegerDensity {
    pub n_hat: f64,
    pub n_rounded: i64,
    pub confidence: f64,
}

/// Median of `mass/(π r²)` over a window of radii in `[4h, 0.3]`.
pub fn integer_density(imm: &DiscreteImmersion, q: &Vec4, radii: &[f64]) -> Result<IntegerDensity> {
    check_radii(radii)?;
    let h = imm.mean_edge_length();
    for &r in radii {
        if r < MIN_RADIUS_EDGES * h || r > DENSITY_MAX_RADIUS {
            return Err(Error::BadParam(format!(
                "radius {r} outside [{}, {DENSITY_MAX_RADIUS}]",
                MIN_RADIUS_EDGES * h
            )));
        }
    }
    let mut ratios = profile_with(&MassIndex::new(imm), q, radii).ratios;
    ratios.sort_by(f64::total_cmp);
    let k = ratios.len();
    let n_hat = if k % 2 == 1 {
        ratios[k / 2]
    } else {
        0.5 * (ratios[k / 2 - 1] + ratios[k / 2])
    };
    let n_rounded = n_hat.round();
    Ok(IntegerDensity {
        n_hat,
        n_rounded: n_rounded as i64,
        confidence: (1.0 - 2.0 * (n_hat - n_rounded).abs()).clamp(0.0, 1.0),
    })
}

/// Share of the Dirichlet energy carried by faces whose rank ratio is below
/// `tol`.
pub fn degenerate_rank_measure(imm: &DiscreteImmersion, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::BadParam(format!("rank tolerance {tol} outside (0, 1)")));
    }
    let energy = geometry::dirichlet_per_face(imm);
    let bad = canonical_sum(
        imm.face_metrics()
            .iter()
            .zip(&energy)
            .filter(|(m, _)| rank_ratio(&m.g) < tol)
            .map(|(_, &e)| e)
            .collect(),
    );
    Ok(bad / canonical_sum(energy))
}
