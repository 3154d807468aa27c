//! Acceptance suite. Prints one line per criterion and exits nonzero if
//! any criterion fails.

mod common;

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use common::{degenerate_imm4, run_in, without_threads_line};
use vminmax::cli::{self, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_NO_ACCEPTED};
use vminmax::flow::{self, FlowOptions};
use vminmax::geometry;
use vminmax::mesh::{self, fixtures, DiscreteImmersion, Shape, TangentField};
use vminmax::minmax::{self, MinmaxOptions};
use vminmax::variation::{self, EnergyId};
use vminmax::varifold::{self, TestVectorField, DENSITY_MAX_RADIUS, MIN_RADIUS_EDGES};

const FOUR_PI: f64 = 4.0 * PI;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn shape(spec: &str) -> DiscreteImmersion {
    mesh::generate(Shape::parse(spec).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

/// The equator at level 5 after relaxation at σ = 0.1.
fn converged_equator() -> DiscreteImmersion {
    let opts = FlowOptions {
        tol: 1e-3,
        ..FlowOptions::default()
    };
    let res = flow::descend(&shape("equator:5"), 2.0, 0.1, &opts).unwrap();
    assert!(res.converged);
    res.imm_final
}

fn diagnostic_radii(imm: &DiscreteImmersion) -> Vec<f64> {
    varifold::geometric_radii(MIN_RADIUS_EDGES * imm.mean_edge_length(), DENSITY_MAX_RADIUS, 8)
}

fn a1() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (k, spec) in ["equator:4", "clifford:32,32"].iter().enumerate() {
        let base = shape(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let w = TangentField::smooth_random(&base, &mut rng);
        let imm = base.retract(&w, cli::GRADCHECK_PERTURB).unwrap();
        let dirs: Vec<_> = (0..5)
            .map(|_| TangentField::smooth_random(&imm, &mut rng))
            .collect();
        for id in [
            EnergyId::Area,
            EnergyId::Fp { p: 2.0 },
            EnergyId::Relaxed { p: 2.0, sigma: 0.1 },
        ] {
            let g = id.gradient(&imm).unwrap();
            for d in &dirs {
                worst =
                    worst.max(variation::fd_check_gradient(&imm, id, &g, d, cli::GRADCHECK_STEP).unwrap());
                count += 1;
            }
        }
    }
    outcome(
        worst < 1e-5 && count == 30,
        format!("max relative error {worst:.2e} over {count} checks"),
    )
}

fn a2() -> Outcome {
    let sphere = shape("equator:5").total_area();
    let torus = shape("clifford:64,64");
    let e = geometry::energies(&torus, 2.0, 0.0).unwrap();
    let two_pi2 = 2.0 * PI * PI;
    let pass =
        rel(sphere, FOUR_PI) <= 0.005 && rel(e.area, two_pi2) <= 0.005 && rel(e.f_p, 9.0 * two_pi2) <= 0.02;
    outcome(
        pass,
        format!(
            "sphere area off {:.3}%, torus area off {:.3}%, torus f_2 off {:.3}%",
            100.0 * rel(sphere, FOUR_PI),
            100.0 * rel(e.area, two_pi2),
            100.0 * rel(e.f_p, 9.0 * two_pi2)
        ),
    )
}

fn a3() -> Outcome {
    let probes: Vec<f64> = (3..=5)
        .map(|l| flow::ps_probe(&shape(&format!("equator:{l}")), 2.0, 0.1).unwrap())
        .collect();
    let monotone = probes.windows(2).all(|w| w[1] < w[0]);
    let pass = monotone && probes[2] <= 1e-2 * FOUR_PI;
    let shown: Vec<String> = probes.iter().map(|r| format!("{r:.3e}")).collect();
    outcome(pass, format!("residual by level 3,4,5: {}", shown.join(", ")))
}

fn a4() -> Outcome {
    let sigma = 0.05;
    let sw = minmax::latitude_sweepout(4, 33).unwrap();
    let res = minmax::minmax_critical(&sw, 2.0, sigma, &MinmaxOptions::default()).unwrap();
    let lo = FOUR_PI * 0.97;
    let hi = FOUR_PI * (1.0 + sigma * sigma) * 1.03;
    let area = res.critical.final_energy().area;
    let pass = res.width_stalled
        && (lo..=hi).contains(&res.width)
        && res.argmax.abs_diff(16) <= 2
        && rel(area, FOUR_PI) <= 0.03;
    outcome(
        pass,
        format!(
            "width {:.6} in [{lo:.4}, {hi:.4}], stalled {}, argmax {}, area {area:.6}, residual {:.2e}",
            res.width,
            res.width_stalled,
            res.argmax,
            res.critical.final_residual()
        ),
    )
}

fn a5() -> Outcome {
    let sw = minmax::latitude_sweepout(4, 33).unwrap();
    let schedule = [0.2, 0.1, 0.05, 0.025];
    let recs = minmax::struwe_continuation(&sw, 2.0, &schedule, 1.0, &MinmaxOptions::default()).unwrap();
    let accepted = recs.iter().all(|r| r.accepted);
    let decreasing = recs.windows(2).all(|w| w[1].entropy_value < w[0].entropy_value);
    let entropy: Vec<f64> = recs.iter().map(|r| r.entropy_value).collect();
    let failures: Vec<&str> = recs.iter().filter_map(|r| r.failure.as_deref()).collect();
    outcome(
        recs.len() == schedule.len() && accepted && decreasing,
        format!("entropy {entropy:.4?}, all accepted {accepted}, failures {failures:?}"),
    )
}

fn a6() -> Outcome {
    let imm = converged_equator();
    let radii = diagnostic_radii(&imm);
    let centers = varifold::farthest_point_sample(&imm, 8);
    let points: Vec<_> = centers.iter().map(|&v| imm.coords()[v]).collect();
    let profiles = varifold::density_profiles(&imm, &points, &radii).unwrap();
    let max_c = profiles.iter().map(|p| p.fitted_c).fold(0.0, f64::max);
    let small = radii.len() / 2;
    let ratios: Vec<f64> = profiles.iter().flat_map(|p| p.ratios[..small].to_vec()).collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let pass = centers.len() == 8 && max_c <= 2.0 && lo >= 0.9 && hi <= 1.1;
    outcome(
        pass,
        format!(
            "radii [{:.4}, {:.4}], max fitted C {max_c:.4}, small-r ratios in [{lo:.4}, {hi:.4}]",
            radii[0],
            radii[radii.len() - 1]
        ),
    )
}

fn mean_stationarity(imm: &DiscreteImmersion) -> f64 {
    let basis = TestVectorField::standard_basis();
    basis
        .iter()
        .map(|f| varifold::stationarity_residual(imm, f).abs())
        .sum::<f64>()
        / basis.len() as f64
}

fn a7() -> Outcome {
    let eq = mean_stationarity(&converged_equator());
    let lat = mean_stationarity(&shape("latitude:0.3,5"));
    outcome(
        eq <= 0.1 * lat,
        format!("equator {eq:.3e}, latitude {lat:.3e}, ratio {:.2e}", eq / lat),
    )
}

fn a8() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, imm, want) in [
        ("equator", shape("equator:5"), 1),
        ("doubled equator", fixtures::doubled_equator(5).unwrap(), 2),
    ] {
        let radii = diagnostic_radii(&imm);
        let mut worst: f64 = 1.0;
        for v in varifold::farthest_point_sample(&imm, 8) {
            let d = varifold::integer_density(&imm, &imm.coords()[v], &radii).unwrap();
            pass &= d.n_rounded == want && d.confidence >= 0.8;
            worst = worst.min(d.confidence);
        }
        parts.push(format!("{name} -> {want} (min confidence {worst:.3})"));
    }
    outcome(pass, parts.join(", "))
}

fn a9() -> Outcome {
    let dirs = [TempDir::new().unwrap(), TempDir::new().unwrap()];
    let mut codes = Vec::new();
    for (dir, threads) in dirs.iter().zip(["1", "4"]) {
        let args = [
            "minmax",
            "--level",
            "4",
            "--frames",
            "33",
            "--sigma",
            "0.05",
            "--seed",
            "3",
            "--threads",
            threads,
        ];
        codes.push(run_in(dir.path(), &args));
    }
    let csv = |d: &TempDir| without_threads_line(&d.path().join("continuation.csv"));
    let imm = |d: &TempDir| std::fs::read(d.path().join("critical_0.imm4")).unwrap();
    let same_csv = csv(&dirs[0]) == csv(&dirs[1]);
    let same_imm = imm(&dirs[0]) == imm(&dirs[1]);
    outcome(
        codes == [0, 0] && same_csv && same_imm,
        format!(
            "exit codes {codes:?}, continuation identical {same_csv}, critical surface identical {same_imm}"
        ),
    )
}

fn a10() -> Outcome {
    let dir = TempDir::new().unwrap();
    let corrupted = run_in(
        dir.path(),
        &["gradcheck", "--shape", "equator:4", "--debug-corrupt-gradient"],
    );
    let no_lambda = run_in(
        dir.path(),
        &[
            "continue",
            "--level",
            "4",
            "--frames",
            "33",
            "--schedule",
            "0.05",
            "--lambda",
            "0",
        ],
    );
    let path = dir.path().join("degenerate.imm4");
    std::fs::write(&path, degenerate_imm4()).unwrap();
    let degenerate = run_in(dir.path(), &["relax", "--mesh", path.to_str().unwrap()]);
    outcome(
        corrupted == EXIT_CHECK_FAILED && no_lambda == EXIT_NO_ACCEPTED && degenerate == EXIT_INPUT,
        format!("corrupted gradient {corrupted}, lambda 0 {no_lambda}, degenerate mesh {degenerate}"),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria: [Criterion; 10] = [
        ("A1", "gradient oracle", a1, Some(Duration::from_secs(30))),
        ("A2", "closed-form values", a2, Some(Duration::from_secs(10))),
        ("A3", "criticality of the equator", a3, minutes(1)),
        ("A4", "min-max width", a4, minutes(15)),
        ("A5", "entropy continuation", a5, minutes(45)),
        ("A6", "monotonicity", a6, minutes(5)),
        ("A7", "stationarity contrast", a7, minutes(2)),
        ("A8", "integer density", a8, minutes(2)),
        ("A9", "determinism across threads", a9, None),
        ("A10", "negative controls", a10, None),
    ];
    let mut failed = 0;
    for (id, name, check, budget) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let Outcome { pass, detail } = result.unwrap_or_else(|_| outcome(false, "panicked".into()));
        let in_budget = budget.is_none_or(|b| elapsed <= b);
        let ok = pass && in_budget;
        failed += !ok as usize;
        let budget_note = match budget {
            Some(b) if !in_budget => format!(", over budget of {} s", b.as_secs()),
            _ => String::new(),
        };
        println!(
            "{id:<4} {} {name}: {detail} ({:.1} s{budget_note})",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
