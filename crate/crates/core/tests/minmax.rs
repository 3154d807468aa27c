use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vminmax::flow::FlowOptions;
use vminmax::geometry;
use vminmax::mesh::{icosphere, latitude_from, ParamMesh, TangentField};
use vminmax::minmax::{self, latitude_sweepout, MinmaxOptions, SweepOut};
use vminmax::varifold;

const FOUR_PI: f64 = 4.0 * PI;

fn pull_flow() -> FlowOptions {
    MinmaxOptions::default().flow
}

fn frames_at(level: u32, ts: &[f64]) -> SweepOut {
    let (mesh, pts) = icosphere(level).unwrap();
    let mesh: Arc<ParamMesh> = Arc::new(mesh);
    let frames = ts
        .iter()
        .map(|&t| latitude_from(mesh.clone(), &pts, t).unwrap())
        .collect();
    SweepOut::new(frames).unwrap()
}

#[test]
fn perturbed_frames_pull_back_down() {
    let (level, n, sigma) = (3, 9, 0.1);
    let clean = latitude_sweepout(level, n).unwrap();
    let (w_clean, _) = minmax::width(&clean, 2.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let frames: Vec<_> = clean
        .frames()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if i == 0 || i + 1 == n {
                f.clone()
            } else {
                let w = TangentField::smooth_random(f, &mut rng);
                f.retract(&w, 0.05).unwrap()
            }
        })
        .collect();
    let noisy = SweepOut::new(frames).unwrap();
    let (w_noisy, _) = minmax::width(&noisy, 2.0, sigma).unwrap();
    let pd = minmax::pull_down(&noisy, 2.0, sigma, 10, 2, &pull_flow()).unwrap();
    let w_after = *pd.widths.last().unwrap();
    assert_eq!(pd.widths.len(), 11);
    assert_eq!(pd.widths[0], w_noisy);
    assert!(
        w_after <= 1.02 * w_clean,
        "{w_after} vs {w_clean} (noisy {w_noisy})"
    );
    for k in [0, n - 1] {
        assert_eq!(pd.sweepout.frames()[k].coords(), noisy.frames()[k].coords());
    }
}

#[test]
fn width_never_increases_and_endpoints_stay_put() {
    let sw = latitude_sweepout(3, 9).unwrap();
    for sigma in [0.0, 0.05, 0.2] {
        let pd = minmax::pull_down(&sw, 2.0, sigma, 4, 3, &pull_flow()).unwrap();
        for w in pd.widths.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{sigma}: {w:?}");
        }
        let (first, last) = (&pd.sweepout.frames()[0], &pd.sweepout.frames()[8]);
        assert_eq!(first.coords(), sw.frames()[0].coords());
        assert_eq!(last.coords(), sw.frames()[8].coords());
    }
}

#[test]
fn pure_area_min_max_finds_the_equator() {
    let sw = latitude_sweepout(3, 9).unwrap();
    let res = minmax::minmax_critical(&sw, 2.0, 0.0, &MinmaxOptions::default()).unwrap();
    assert!(!res.saddle_escape);
    assert!(res.critical.converged);
    assert_eq!(res.argmax, 4);
    let area = res.critical.final_energy().area;
    assert!((area / FOUR_PI - 1.0).abs() < 0.03, "{area}");
    assert!((res.width / FOUR_PI - 1.0).abs() < 0.01, "{}", res.width);
}

#[test]
fn min_max_surface_is_the_equator_at_small_sigma() {
    let sw = latitude_sweepout(3, 9).unwrap();
    let opts = MinmaxOptions::default();
    let res = minmax::minmax_critical(&sw, 2.0, 0.05, &opts).unwrap();
    let area = res.critical.final_energy().area;
    assert!((area / FOUR_PI - 1.0).abs() < 0.03, "{area}");
    assert!(res.critical.final_residual() <= 10.0 * opts.flow.tol);
    assert!(res.start_state().shares_mesh(&res.critical.imm_final));
}

#[test]
fn tiny_sphere_family_collapses() {
    let sigma = 0.0;
    let ts = [0.9985, 0.998, 0.997, 0.996, 0.997, 0.998, 0.9985];
    let sw = frames_at(3, &ts);
    let max_area = sw.frames().iter().map(|f| f.total_area()).fold(0.0, f64::max);
    assert!(max_area <= 0.1);
    let res = minmax::minmax_critical(&sw, 2.0, sigma, &MinmaxOptions::default()).unwrap();
    let fin = &res.critical.imm_final;
    let start = varifold::extrinsic_diameter(res.start_state());
    let report = varifold::collapse_check(fin, 2.0, sigma, 0.1, start).unwrap();
    assert!(report.collapsed);
    assert!(report.diameter < start);
    assert!(res.critical.final_energy().area < max_area);
}

#[test]
fn regularized_tiny_family_stops_where_curvature_balances_area() {
    let sigma = 1e-4;
    let sw = frames_at(3, &[0.9985, 0.998, 0.997, 0.996, 0.997, 0.998, 0.9985]);
    let res = minmax::minmax_critical(&sw, 2.0, sigma, &MinmaxOptions::default()).unwrap();
    assert!(res.critical.converged);
    let report = varifold::collapse_check(&res.critical.imm_final, 2.0, sigma, 0.1, 0.1).unwrap();
    assert!(report.diameter < 0.05);
    assert!(report.sigma2_fp > 0.5 * report.area);
    assert!(!report.premise && !report.collapsed);
}

#[test]
fn beta_decreases_with_sigma_and_slopes_agree() {
    let sw = latitude_sweepout(3, 9).unwrap();
    let opts = MinmaxOptions::default();
    let recs = minmax::struwe_continuation(&sw, 2.0, &[0.12, 0.1, 0.085], 1.0, &opts).unwrap();
    assert!(
        recs.iter().all(|r| r.accepted),
        "{:?}",
        recs.iter().map(|r| &r.failure).collect::<Vec<_>>()
    );
    assert!(recs[0].slope_fd.is_nan());
    for r in &recs[1..] {
        let rel = (r.slope_fd / r.slope_analytic - 1.0).abs();
        assert!(
            rel < 0.25,
            "sigma {}: fd {} analytic {}",
            r.sigma,
            r.slope_fd,
            r.slope_analytic
        );
    }
    let recs = minmax::struwe_continuation(&sw, 2.0, &[0.2, 0.1, 0.05, 0.025], 1.0, &opts).unwrap();
    for w in recs.windows(2) {
        assert!(w[1].beta <= w[0].beta * 1.01, "{} -> {}", w[0].beta, w[1].beta);
        assert!(w[1].entropy_value < w[0].entropy_value);
    }
    for r in &recs {
        let e = geometry::energies(r.critical_imm.as_ref().unwrap(), 2.0, r.sigma).unwrap();
        assert_eq!(e.f_p, r.f_p);
        assert!((r.entropy_value - r.sigma * r.sigma * r.f_p * (1.0 / r.sigma).ln()).abs() < 1e-12);
        assert_eq!(r.slope_analytic, 2.0 * r.sigma * r.f_p);
    }
}

#[test]
fn empty_schedule_gives_no_records() {
    let sw = latitude_sweepout(2, 5).unwrap();
    let recs = minmax::struwe_continuation(&sw, 2.0, &[], 1.0, &MinmaxOptions::default()).unwrap();
    assert!(recs.is_empty());
}

#[test]
fn zero_lambda_rejects_every_sigma() {
    let sw = latitude_sweepout(3, 9).unwrap();
    let recs = minmax::struwe_continuation(&sw, 2.0, &[0.1, 0.05], 0.0, &MinmaxOptions::default()).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| !r.accepted && r.failure.is_none()));
}

#[test]
fn runs_are_bit_reproducible() {
    let sw = latitude_sweepout(3, 9).unwrap();
    let opts = MinmaxOptions::default();
    let a = minmax::minmax_critical(&sw, 2.0, 0.1, &opts).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| minmax::minmax_critical(&sw, 2.0, 0.1, &opts).unwrap());
    assert_eq!(a.widths, b.widths);
    assert_eq!(a.critical.residual_history, b.critical.residual_history);
    assert_eq!(a.critical.imm_final.coords(), b.critical.imm_final.coords());
}

#[test]
fn frame_count_barely_moves_the_width() {
    let widths: Vec<f64> = [5, 9, 17, 33]
        .iter()
        .map(|&n| {
            let sw = latitude_sweepout(3, n).unwrap();
            minmax::minmax_critical(&sw, 2.0, 0.1, &MinmaxOptions::default())
                .unwrap()
                .width
        })
        .collect();
    let lo = widths.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = widths.iter().copied().fold(0.0, f64::max);
    assert!(hi / lo - 1.0 < 0.01, "{widths:?}");
}
