//! Exact gradients of the discrete energies, the Sobolev metric used for
//! preconditioning and residuals, and finite-difference checks.

use rayon::prelude::*;
use sprs::{CsMat, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::ambient::S3;
use crate::dual::{Dual, Scalar};
use crate::error::{Error, Result};
use crate::geometry::{self, check_params};
use crate::linalg::{self, Vec4};
use crate::mesh::{DiscreteImmersion, TangentField};

/// Per-vertex Euclidean gradient, tangent to S³ at each vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    vectors: Vec<Vec4>,
}

impl Gradient {
    pub fn vectors(&self) -> &[Vec4] {
        &self.vectors
    }

    /// Pairing with a variation field: `Σ_v g_v · w_v`.
    pub fn pair(&self, w: &TangentField) -> f64 {
        w.pairing(&self.vectors)
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().map(linalg::norm).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vectors: self.vectors.iter().map(|v| linalg::scale(s, v)).collect(),
        }
    }

    /// `self + s · other`.
    pub fn add_scaled(&self, s: f64, other: &Gradient) -> Self {
        Self {
            vectors: self
                .vectors
                .iter()
                .zip(&other.vectors)
                .map(|(a, b)| {
                    let mut out = *a;
                    linalg::axpy(s, b, &mut out);
                    out
                })
                .collect(),
        }
    }

    /// Wraps raw per-vertex vectors, projecting them onto `T S³`.
    pub fn from_raw(imm: &DiscreteImmersion, raw: Vec<Vec4>) -> Self {
        let s3 = S3::default();
        Self {
            vectors: imm
                .coords()
                .iter()
                .zip(raw)
                .map(|(y, v)| s3.tangent_project(y, &v))
                .collect(),
        }
    }
}

/// The energies with analytic gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyId {
    Area,
    Fp { p: f64 },
    Relaxed { p: f64, sigma: f64 },
}

impl EnergyId {
    pub fn value(&self, imm: &DiscreteImmersion) -> Result<f64> {
        match *self {
            EnergyId::Area => Ok(imm.total_area()),
            EnergyId::Fp { p } => geometry::energies(imm, p, 0.0).map(|e| e.f_p),
            EnergyId::Relaxed { p, sigma } => geometry::relaxed_energy(imm, p, sigma),
        }
    }

    pub fn gradient(&self, imm: &DiscreteImmersion) -> Result<Gradient> {
        match *self {
            EnergyId::Area => grad_area(imm),
            EnergyId::Fp { p } => grad_fp(imm, p),
            EnergyId::Relaxed { p, sigma } => grad_relaxed(imm, p, sigma),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            EnergyId::Area => "area".into(),
            EnergyId::Fp { p } => format!("f_p(p={p})"),
            EnergyId::Relaxed { p, sigma } => format!("relaxed(p={p},sigma={sigma})"),
        }
    }
}

type D12 = Dual<12>;
type D24 = Dual<24>;

fn lift<const N: usize>(x: &Vec4, offset: usize) -> [Dual<N>; 4] {
    std::array::from_fn(|k| Dual::variable(x[k], offset + k))
}

fn face_xs<'a>(imm: &'a DiscreteImmersion, f: &[usize; 3]) -> [&'a Vec4; 3] {
    let c = imm.coords();
    [&c[f[0]], &c[f[1]], &c[f[2]]]
}

/// Scatters per-face 12-vectors (three corner 4-vectors) onto vertices in
/// face order.
fn scatter(imm: &DiscreteImmersion, per_face: &[[f64; 12]]) -> Vec<Vec4> {
    let mut out = vec![[0.0; 4]; imm.n_vertices()];
    for (f, g) in imm.mesh().faces().iter().zip(per_face) {
        for (i, &v) in f.iter().enumerate() {
            for k in 0..4 {
                out[v][k] += g[4 * i + k];
            }
        }
    }
    out
}

fn area_face_grads(imm: &DiscreteImmersion) -> Vec<[f64; 12]> {
    imm.mesh()
        .faces()
        .par_iter()
        .map(|f| {
            let [a, b, c] = face_xs(imm, f);
            let (a, b, c): ([D12; 4], [D12; 4], [D12; 4]) = (lift(a, 0), lift(b, 4), lift(c, 8));
            let g = linalg::gram(&linalg::sub(&b, &a), &linalg::sub(&c, &a));
            (D12::cst(0.5) * linalg::sym2_det(&g).sqrt()).du
        })
        .collect()
}

pub fn grad_area(imm: &DiscreteImmersion) -> Result<Gradient> {
    Ok(Gradient::from_raw(imm, scatter(imm, &area_face_grads(imm))))
}

/// Gradient of `Σ_f (1 + |II|²)^p dvol`, differentiating through the
/// vertex normals.
pub fn grad_fp(imm: &DiscreteImmersion, p: f64) -> Result<Gradient> {
    check_params(p, 0.0)?;
    let gauss = geometry::gauss_map(imm)?;
    let nu = &gauss.vertex_normals;
    let faces = imm.mesh().faces();

    // Direct dependence on positions and on the three vertex normals.
    let local: Vec<([f64; 12], [f64; 12])> = faces
        .par_iter()
        .map(|f| {
            let [a, b, c] = face_xs(imm, f);
            let x: [[D24; 4]; 3] = [lift(a, 0), lift(b, 4), lift(c, 8)];
            let n: [[D24; 4]; 3] = [lift(&nu[f[0]], 12), lift(&nu[f[1]], 16), lift(&nu[f[2]], 20)];
            let e = geometry::fp_kernel([&x[0], &x[1], &x[2]], [&n[0], &n[1], &n[2]], p);
            let mut gx = [0.0; 12];
            let mut gn = [0.0; 12];
            gx.copy_from_slice(&e.du[..12]);
            gn.copy_from_slice(&e.du[12..]);
            (gx, gn)
        })
        .collect();
    let (gx_face, gn_face): (Vec<[f64; 12]>, Vec<[f64; 12]>) = local.into_iter().unzip();
    let mut gx = scatter(imm, &gx_face);
    let g_nu = scatter(imm, &gn_face);

    // ν = N/|N|  ⇒  ∂/∂N = (I − ννᵀ)/|N|
    let g_n: Vec<Vec4> = g_nu
        .iter()
        .zip(nu)
        .zip(&gauss.vertex_weights)
        .map(|((g, n), &len)| {
            let mut out = *g;
            linalg::axpy(-linalg::dot(g, n), n, &mut out);
            linalg::scale(1.0 / len, &out)
        })
        .collect();

    // N_v = Σ_{f∋v} dvol_f n_f
    let through_normals: Vec<[f64; 12]> = faces
        .par_iter()
        .map(|f| {
            let [a, b, c] = face_xs(imm, f);
            let (a, b, c): ([D12; 4], [D12; 4], [D12; 4]) = (lift(a, 0), lift(b, 4), lift(c, 8));
            let w = geometry::weighted_normal(&a, &b, &c);
            let mut gw = [0.0; 4];
            for &v in f {
                for k in 0..4 {
                    gw[k] += g_n[v][k];
                }
            }
            let mut out = [0.0; 12];
            for k in 0..4 {
                for (s, o) in out.iter_mut().enumerate() {
                    *o += gw[k] * w[k].du[s];
                }
            }
            out
        })
        .collect();
    for (v, g) in scatter(imm, &through_normals).into_iter().enumerate() {
        for k in 0..4 {
            gx[v][k] += g[k];
        }
    }
    Ok(Gradient::from_raw(imm, gx))
}

pub fn grad_relaxed(imm: &DiscreteImmersion, p: f64, sigma: f64) -> Result<Gradient> {
    check_params(p, sigma)?;
    let ga = grad_area(imm)?;
    if sigma == 0.0 {
        return Ok(ga);
    }
    Ok(ga.add_scaled(sigma * sigma, &grad_fp(imm, p)?))
}

/// Central-difference check of the analytic gradient of `energy` along `w`.
pub fn fd_check(imm: &DiscreteImmersion, energy: EnergyId, w: &TangentField, h: f64) -> Result<f64> {
    let g = energy.gradient(imm)?;
    fd_check_gradient(imm, energy, &g, w, h)
}

/// As [`fd_check`], for a caller-supplied gradient.
pub fn fd_check_gradient(
    imm: &DiscreteImmersion,
    energy: EnergyId,
    grad: &Gradient,
    w: &TangentField,
    h: f64,
) -> Result<f64> {
    if !(1e-8..=1e-3).contains(&h) {
        return Err(Error::BadParam(format!("fd step {h} outside [1e-8, 1e-3]")));
    }
    if w.len() != imm.n_vertices() {
        return Err(Error::MeshMismatch);
    }
    let analytic = grad.pair(w);
    let plus = energy.value(&imm.retract(w, h)?)?;
    let minus = energy.value(&imm.retract(w, -h)?)?;
    let fd = (plus - minus) / (2.0 * h);
    Ok((analytic - fd).abs() / (analytic.abs() + 1e-14))
}

/// `M₀ + S + S M₀⁻¹ S`, assembled on one immersion, with its LDLᵀ factor.
pub struct FinslerMetric {
    mass: Vec<f64>,
    stiffness: CsMat<f64>,
    k: CsMat<f64>,
    factor: LdlNumeric<f64, usize>,
}

impl std::fmt::Debug for FinslerMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FinslerMetric")
            .field("n", &self.mass.len())
            .field("nnz", &self.k.nnz())
            .finish()
    }
}

/// Relative residual for the preconditioned CG solve.
pub const SOLVE_TOL: f64 = 1e-10;

impl FinslerMetric {
    pub fn assemble(imm: &DiscreteImmersion) -> Result<Self> {
        let n = imm.n_vertices();
        let mass = imm.dual_areas();
        let cot = geometry::face_cotans(imm);
        let mut tri = TriMat::with_capacity((n, n), imm.n_faces() * 12);
        for (f, c) in imm.mesh().faces().iter().zip(&cot) {
            for k in 0..3 {
                let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
                let w = 0.5 * c[k];
                tri.add_triplet(i, i, w);
                tri.add_triplet(j, j, w);
                tri.add_triplet(i, j, -w);
                tri.add_triplet(j, i, -w);
            }
        }
        let stiffness: CsMat<f64> = tri.to_csr();
        let mut scaled = stiffness.clone();
        for (row, mut vec) in scaled.outer_iterator_mut().enumerate() {
            let inv = 1.0 / mass[row];
            for (_, v) in vec.iter_mut() {
                *v *= inv;
            }
        }
        let bilap: CsMat<f64> = &stiffness * &scaled;
        let mut mtri = TriMat::with_capacity((n, n), n);
        for (i, &m) in mass.iter().enumerate() {
            mtri.add_triplet(i, i, m);
        }
        let mdiag: CsMat<f64> = mtri.to_csr();
        let k: CsMat<f64> = &(&mdiag + &stiffness) + &bilap;
        let factor = Ldl::new()
            .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
            .numeric(k.view())
            .map_err(|e| Error::SolveFailure(format!("LDL factorisation: {e}")))?;
        if factor.d().iter().any(|&d| !(d > 0.0)) {
            return Err(Error::SolveFailure("operator is not positive definite".into()));
        }
        Ok(Self {
            mass,
            stiffness,
            k,
            factor,
        })
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsMat<f64> {
        &self.stiffness
    }

    pub fn operator(&self) -> &CsMat<f64> {
        &self.k
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        sprs::prod::mul_acc_mat_vec_csr(self.k.view(), x, &mut y[..]);
        y
    }

    /// Solves `K x = b` by conjugate gradients preconditioned with the
    /// factorisation.
    pub fn solve_scalar(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        let bnorm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let precond = |r: &[f64]| -> Vec<f64> { self.factor.solve(r.to_vec()) };
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z = precond(&r);
        let mut d = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        for _ in 0..(10 * n).max(1) {
            let kd = self.apply(&d);
            let dkd: f64 = d.iter().zip(&kd).map(|(a, b)| a * b).sum();
            if !(dkd > 0.0) {
                return Err(Error::SolveFailure("lost positive definiteness".into()));
            }
            let alpha = rz / dkd;
            for i in 0..n {
                x[i] += alpha * d[i];
                r[i] -= alpha * kd[i];
            }
            let rnorm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if rnorm <= SOLVE_TOL * bnorm {
                return Ok(x);
            }
            z = precond(&r);
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                d[i] = z[i] + beta * d[i];
            }
        }
        Err(Error::SolveFailure(format!(
            "no convergence to {SOLVE_TOL:e} in {} iterations",
            10 * n
        )))
    }

    /// Coordinate-wise `K⁻¹ g`.
    pub fn solve(&self, g: &[Vec4]) -> Result<Vec<Vec4>> {
        if g.len() != self.n() {
            return Err(Error::MeshMismatch);
        }
        let cols = (0..4)
            .map(|k| self.solve_scalar(&g.iter().map(|v| v[k]).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.n())
            .map(|i| [cols[0][i], cols[1][i], cols[2][i], cols[3][i]])
            .collect())
    }
}

/// `√(gᵀ K⁻¹ g)`.
pub fn dual_residual(metric: &FinslerMetric, g: &Gradient) -> Result<f64> {
    let x = metric.solve(g.vectors())?;
    let q: f64 = g.vectors().iter().zip(&x).map(|(a, b)| linalg::dot(a, b)).sum();
    Ok(q.max(0.0).sqrt())
}

/// Preconditioned descent data: the tangent field `P_T K⁻¹ g` and the
/// residual `√(gᵀ K⁻¹ g)`.
pub fn sobolev_gradient(
    imm: &DiscreteImmersion,
    metric: &FinslerMetric,
    g: &Gradient,
) -> Result<(TangentField, f64)> {
    let x = metric.solve(g.vectors())?;
    let q: f64 = g.vectors().iter().zip(&x).map(|(a, b)| linalg::dot(a, b)).sum();
    Ok((TangentField::project(imm, &x), q.max(0.0).sqrt()))
}

/// Discrete Finsler norm
/// `[Σ_v (|Lw|² + |∇w|²_avg + |w|²)^p A_v]^{1/2p} + max_f |∇w|_g`,
/// with `L = M₀⁻¹ S` and `A_v` the barycentric dual areas.
pub fn finsler_norm(imm: &DiscreteImmersion, w: &TangentField, p: f64) -> f64 {
    let areas = imm.dual_areas();
    let cot = geometry::face_cotans(imm);
    let sw = geometry::apply_stiffness(imm, &cot, w.vectors());
    let wv = w.vectors();
    let grad_sq: Vec<f64> = imm
        .mesh()
        .faces()
        .par_iter()
        .map(|f| geometry::ii_sq_kernel(face_xs(imm, f), [&wv[f[0]], &wv[f[1]], &wv[f[2]]]).max(0.0))
        .collect();
    let mut avg = vec![0.0; imm.n_vertices()];
    for ((f, g), m) in imm.mesh().faces().iter().zip(&grad_sq).zip(imm.face_metrics()) {
        for &v in f {
            avg[v] += g * m.dvol / 3.0;
        }
    }
    let terms: Vec<f64> = (0..imm.n_vertices())
        .map(|v| {
            let a = areas[v];
            let lw = linalg::scale(1.0 / a, &sw[v]);
            let local = linalg::dot(&lw, &lw) + avg[v] / a + linalg::dot(&wv[v], &wv[v]);
            local.powf(p) * a
        })
        .collect();
    let integral = crate::reduce::pairwise(&terms);
    let sup = grad_sq.iter().copied().fold(0.0, f64::max).sqrt();
    integral.powf(1.0 / (2.0 * p)) + sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Shape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn perturbed_equator(level: u32, eps: f64, seed: u64) -> DiscreteImmersion {
        let e = generate(Shape::Equator { level }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = TangentField::smooth_random(&e, &mut rng);
        e.retract(&w, eps).unwrap()
    }

    fn clifford(n: usize) -> DiscreteImmersion {
        generate(Shape::Clifford { nu: n, nv: n }).unwrap()
    }

    fn perturbed_clifford(n: usize, eps: f64, seed: u64) -> DiscreteImmersion {
        let c = clifford(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = TangentField::smooth_random(&c, &mut rng);
        c.retract(&w, eps).unwrap()
    }

    #[test]
    fn area_gradient_matches_finite_differences() {
        let imm = perturbed_equator(3, 0.05, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let w = TangentField::smooth_random(&imm, &mut rng);
            let err = fd_check(&imm, EnergyId::Area, &w, 1e-5).unwrap();
            assert!(err < 1e-6, "{err}");
        }
    }

    #[test]
    fn fp_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for imm in [perturbed_clifford(16, 0.05, 13), perturbed_equator(2, 0.05, 4)] {
            for _ in 0..5 {
                let w = TangentField::smooth_random(&imm, &mut rng);
                let err = fd_check(&imm, EnergyId::Fp { p: 2.0 }, &w, 1e-5).unwrap();
                assert!(err < 1e-6, "{err}");
            }
        }
    }

    #[test]
    fn relaxed_gradient_matches_finite_differences() {
        let imm = perturbed_equator(3, 0.05, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w = TangentField::smooth_random(&imm, &mut rng);
        let err = fd_check(&imm, EnergyId::Relaxed { p: 2.0, sigma: 0.1 }, &w, 1e-5).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn unsmooth_directions_also_match() {
        let imm = perturbed_equator(2, 0.05, 14);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let w = TangentField::random(&imm, &mut rng);
        for id in [EnergyId::Area, EnergyId::Fp { p: 2.0 }, EnergyId::Fp { p: 1.5 }] {
            let err = fd_check(&imm, id, &w, 1e-5).unwrap();
            assert!(err < 1e-5, "{err}");
        }
    }

    #[test]
    fn gradients_are_tangent() {
        let imm = perturbed_equator(2, 0.1, 7);
        for g in [grad_area(&imm).unwrap(), grad_fp(&imm, 2.0).unwrap()] {
            for (v, y) in g.vectors().iter().zip(imm.coords()) {
                assert!(linalg::dot(v, y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn area_gradient_vanishes_on_minimal_fixtures() {
        let g4 = grad_area(&generate(Shape::Equator { level: 4 }).unwrap()).unwrap();
        let g5 = grad_area(&generate(Shape::Equator { level: 5 }).unwrap()).unwrap();
        assert!(g5.max_norm() < g4.max_norm());
        let c = clifford(64);
        let mean_area = c.total_area() / c.n_vertices() as f64;
        assert!(grad_area(&c).unwrap().max_norm() <= 0.05 * mean_area);
    }

    #[test]
    fn fp_variation_reduces_to_area_variation_at_the_equator() {
        let e = generate(Shape::Equator { level: 5 }).unwrap();
        let ga = grad_area(&e).unwrap();
        let gf = grad_fp(&e, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3 {
            let w = TangentField::smooth_random(&e, &mut rng);
            let (a, f) = (ga.pair(&w), gf.pair(&w));
            assert!((a - f).abs() <= 0.05 * a.abs().max(1e-12), "{a} {f}");
        }
    }

    #[test]
    fn relaxed_gradient_identities() {
        let c = clifford(16);
        let g0 = grad_relaxed(&c, 2.0, 0.0).unwrap();
        assert_eq!(g0, grad_area(&c).unwrap());
        let g1 = grad_relaxed(&c, 2.0, 0.1).unwrap();
        let g2 = grad_relaxed(&c, 2.0, 0.2).unwrap();
        for ((a, b), z) in g1.vectors().iter().zip(g2.vectors()).zip(g0.vectors()) {
            for k in 0..4 {
                assert!(((b[k] - z[k]) - 4.0 * (a[k] - z[k])).abs() < 1e-12);
            }
        }
        assert_ne!(grad_fp(&c, 2.0).unwrap(), grad_fp(&c, 1.5).unwrap());
    }

    #[test]
    fn fd_step_outside_range_is_rejected() {
        let c = clifford(8);
        let w = TangentField::zeros(c.n_vertices());
        assert!(matches!(
            fd_check(&c, EnergyId::Area, &w, 0.1),
            Err(Error::BadParam(_))
        ));
    }

    #[test]
    fn finsler_norm_is_a_norm() {
        let imm = perturbed_equator(2, 0.05, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        assert_eq!(
            finsler_norm(&imm, &TangentField::zeros(imm.n_vertices()), 2.0),
            0.0
        );
        for _ in 0..100 {
            let a = TangentField::random(&imm, &mut rng);
            let b = TangentField::smooth_random(&imm, &mut rng);
            let na = finsler_norm(&imm, &a, 2.0);
            assert!((finsler_norm(&imm, &a.scaled(2.0), 2.0) - 2.0 * na).abs() <= 1e-12 * na);
            let nb = finsler_norm(&imm, &b, 2.0);
            assert!(finsler_norm(&imm, &a.add(&b), 2.0) <= na + nb + 1e-12);
        }
    }

    #[test]
    fn dual_residual_is_a_norm() {
        let imm = perturbed_equator(3, 0.05, 11);
        let metric = FinslerMetric::assemble(&imm).unwrap();
        let zero = Gradient::from_raw(&imm, vec![[0.0; 4]; imm.n_vertices()]);
        assert_eq!(dual_residual(&metric, &zero).unwrap(), 0.0);
        let g = grad_relaxed(&imm, 2.0, 0.1).unwrap();
        let r = dual_residual(&metric, &g).unwrap();
        assert!(r > 0.0);
        assert!((dual_residual(&metric, &g.scaled(2.0)).unwrap() - 2.0 * r).abs() <= 1e-10 * r);
        let h = grad_area(&imm).unwrap();
        let rh = dual_residual(&metric, &h).unwrap();
        let sum = dual_residual(&metric, &g.add_scaled(1.0, &h)).unwrap();
        assert!(sum <= r + rh + 1e-12);
    }

    #[test]
    fn solve_inverts_the_operator() {
        let imm = clifford(12);
        let metric = FinslerMetric::assemble(&imm).unwrap();
        let b: Vec<f64> = (0..metric.n()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let x = metric.solve_scalar(&b).unwrap();
        let kx = metric.apply(&x);
        let err: f64 = kx
            .iter()
            .zip(&b)
            .map(|(a, c)| (a - c).powi(2))
            .sum::<f64>()
            .sqrt();
        let bn: f64 = b.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * bn);
    }

    #[test]
    fn equator_residual_is_small_against_perturbation() {
        let e = generate(Shape::Equator { level: 5 }).unwrap();
        let r0 = dual_residual(
            &FinslerMetric::assemble(&e).unwrap(),
            &grad_relaxed(&e, 2.0, 0.1).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = TangentField::smooth_random(&e, &mut rng);
        let pe = e.retract(&w, 0.05).unwrap();
        let r1 = dual_residual(
            &FinslerMetric::assemble(&pe).unwrap(),
            &grad_relaxed(&pe, 2.0, 0.1).unwrap(),
        )
        .unwrap();
        assert!(r0 <= 0.1 * r1, "{r0} {r1}");
    }
}
