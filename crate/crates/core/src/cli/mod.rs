//! Command-line entry point. Exit codes: 0 ok, 1 check failed, 2 input
//! error, 3 flow stall, 4 no accepted σ.

pub mod config;
pub mod output;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::ffi::OsString;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::flow::{self, StopReason};
use crate::mesh::{self, DiscreteImmersion, Shape, TangentField};
use crate::minmax;
use crate::variation::{self, EnergyId};
use crate::varifold::{self, TestVectorField, MIN_RADIUS_EDGES};
pub use config::{RunConfig, DEFAULT_SCHEDULE};
use output::{float, Csv, RunHeader};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_STALL: i32 = 3;
pub const EXIT_NO_ACCEPTED: i32 = 4;

/// Relative error bound of `gradcheck`.
pub const GRADCHECK_TOL: f64 = 1e-5;
pub const GRADCHECK_STEP: f64 = 1e-5;
pub const GRADCHECK_DIRECTIONS: usize = 5;
/// Perturbation used by `gradcheck` when none is configured.
pub const GRADCHECK_PERTURB: f64 = 0.05;

#[derive(Parser, Debug)]
#[command(name = "vminmax", version, about = "Relaxed min-max surfaces in S³")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare analytic gradients with central differences.
    Gradcheck(RunArgs),
    /// Descend the relaxed energy from one immersion.
    Relax(RunArgs),
    /// Min-max over the latitude sweep-out at one σ.
    Minmax(RunArgs),
    /// Min-max along a decreasing σ schedule with the entropy test.
    Continue(RunArgs),
    /// Varifold diagnostics of one immersion.
    Diagnose(RunArgs),
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
}

#[derive(Subcommand, Debug)]
enum MeshCommand {
    /// Write a generated immersion as IMM4.
    Gen {
        #[arg(long)]
        shape: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// IMM4 input; takes precedence over --shape.
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Generator spec such as `equator:4`, `clifford:32,32`, `latitude:0.3,4`.
    #[arg(long)]
    shape: Option<String>,
    #[arg(long)]
    perturb: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Sweep-out refinement level.
    #[arg(long)]
    level: Option<u32>,
    /// Sweep-out frame count.
    #[arg(long)]
    frames: Option<usize>,
    /// Scale analytic gradients by 1.01 (negative control for gradcheck).
    #[arg(long, hide = true)]
    debug_corrupt_gradient: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = &self.$f { c.$f = v.clone(); })* };
        }
        set!(p, sigma, lambda, tol, max_iters, seed, threads, out);
        if let Some(s) = &self.schedule {
            c.schedule = parse_schedule(s)?;
        }
        if let Some(m) = &self.mesh {
            c.mesh = Some(m.clone());
        }
        if let Some(s) = &self.shape {
            c.shape = s.clone();
        }
        if let Some(a) = self.perturb {
            c.perturb = Some(a);
        }
        if let Some(l) = self.level {
            c.minmax.level = l;
        }
        if let Some(f) = self.frames {
            c.minmax.frames = f;
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_schedule(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::BadParam(format!("bad schedule entry '{t}'")))
        })
        .collect()
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::LineSearchStall { .. } => EXIT_STALL,
        Error::SolveFailure(_) | Error::NearZero(_) => EXIT_CHECK_FAILED,
        _ => EXIT_INPUT,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    let (name, args): (&str, RunArgs) = match cmd {
        Command::Mesh {
            command: MeshCommand::Gen { shape, out },
        } => {
            let imm = mesh::generate(Shape::parse(&shape)?)?;
            mesh::save(&imm, &out)?;
            println!(
                "wrote {} ({} vertices, {} faces)",
                out.display(),
                imm.n_vertices(),
                imm.n_faces()
            );
            return Ok(EXIT_OK);
        }
        Command::Gradcheck(a) => ("gradcheck", a),
        Command::Relax(a) => ("relax", a),
        Command::Minmax(a) => ("minmax", a),
        Command::Continue(a) => ("continue", a),
        Command::Diagnose(a) => ("diagnose", a),
    };
    let cfg = args.resolve()?;
    std::fs::create_dir_all(&cfg.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::BadParam(e.to_string()))?;
    let header = RunHeader {
        command: name.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        threads: pool.current_num_threads(),
    };
    pool.install(|| match name {
        "gradcheck" => cmd_gradcheck(&cfg, &header, args.debug_corrupt_gradient),
        "relax" => cmd_relax(&cfg, &header),
        "minmax" => cmd_sweep(&cfg, &header, &[cfg.sigma]),
        "continue" => {
            let schedule = if cfg.schedule.is_empty() {
                DEFAULT_SCHEDULE.to_vec()
            } else {
                cfg.schedule.clone()
            };
            cmd_sweep(&cfg, &header, &schedule)
        }
        _ => cmd_diagnose(&cfg, &header),
    })
}

/// The configured immersion, perturbed along a seeded smooth field.
pub fn load_input(cfg: &RunConfig, default_perturb: f64) -> Result<DiscreteImmersion> {
    let imm = match &cfg.mesh {
        Some(p) => mesh::load(p)?,
        None => mesh::generate(Shape::parse(&cfg.shape)?)?,
    };
    let amp = cfg.perturb.unwrap_or(default_perturb);
    if amp == 0.0 {
        return Ok(imm);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w = TangentField::smooth_random(&imm, &mut rng);
    imm.retract(&w, amp)
}

fn cmd_gradcheck(cfg: &RunConfig, header: &RunHeader, corrupt: bool) -> Result<i32> {
    let imm = load_input(cfg, GRADCHECK_PERTURB)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let dirs: Vec<TangentField> = (0..GRADCHECK_DIRECTIONS)
        .map(|_| TangentField::smooth_random(&imm, &mut rng))
        .collect();
    let energies = [
        EnergyId::Area,
        EnergyId::Fp { p: cfg.p },
        EnergyId::Relaxed {
            p: cfg.p,
            sigma: cfg.sigma,
        },
    ];
    let mut csv = Csv::new(header, &["energy", "direction", "rel_error", "pass"]);
    let mut ok = true;
    println!("{:<28} {:>4} {:>12}  result", "energy", "dir", "rel_error");
    for id in energies {
        let mut g = id.gradient(&imm)?;
        if corrupt {
            g = g.scaled(1.01);
        }
        for (k, w) in dirs.iter().enumerate() {
            let err = variation::fd_check_gradient(&imm, id, &g, w, GRADCHECK_STEP)?;
            let pass = err < GRADCHECK_TOL;
            ok &= pass;
            println!(
                "{:<28} {:>4} {:>12.3e}  {}",
                id.label(),
                k,
                err,
                if pass { "ok" } else { "FAIL" }
            );
            csv.row(&[
                id.label().replace(',', ";"),
                k.to_string(),
                float(err),
                pass.to_string(),
            ]);
        }
    }
    csv.write(&cfg.out, "gradcheck.csv")?;
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_relax(cfg: &RunConfig, header: &RunHeader) -> Result<i32> {
    let imm = load_input(cfg, 0.0)?;
    let res = flow::descend(&imm, cfg.p, cfg.sigma, &cfg.flow_options())?;
    let mut csv = Csv::new(
        header,
        &["iteration", "area", "f_p", "relaxed", "residual", "step"],
    );
    for (i, (e, r)) in res.energy_history.iter().zip(&res.residual_history).enumerate() {
        let step = if i == 0 { 0.0 } else { res.step_history[i - 1] };
        csv.row(&[
            i.to_string(),
            float(e.area),
            float(e.f_p),
            float(e.relaxed),
            float(*r),
            float(step),
        ]);
    }
    csv.write(&cfg.out, "relax.csv")?;
    let e = res.final_energy();
    println!(
        "stop {:?} after {} iterations: area {:.6} relaxed {:.6} residual {:.3e}",
        res.stop,
        res.iterations,
        e.area,
        e.relaxed,
        res.final_residual()
    );
    if res.stop == StopReason::LineSearchStall {
        mesh::save(&res.imm_final, cfg.out.join("stall.imm4"))?;
        eprintln!("{}", res.check_stall().unwrap_err());
        return Ok(EXIT_STALL);
    }
    mesh::save(&res.imm_final, cfg.out.join("final.imm4"))?;
    Ok(if res.converged { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_sweep(cfg: &RunConfig, header: &RunHeader, schedule: &[f64]) -> Result<i32> {
    let sw = minmax::latitude_sweepout(cfg.minmax.level, cfg.minmax.frames)?;
    let records = minmax::struwe_continuation(&sw, cfg.p, schedule, cfg.lambda, &cfg.minmax_options())?;
    let mut csv = Csv::new(
        header,
        &[
            "sigma",
            "beta",
            "area",
            "f_p",
            "entropy_value",
            "slope_fd",
            "slope_analytic",
            "accepted",
            "residual",
        ],
    );
    let mut accepted = 0;
    for (i, r) in records.iter().enumerate() {
        csv.row(&[
            float(r.sigma),
            float(r.beta),
            float(r.area),
            float(r.f_p),
            float(r.entropy_value),
            float(r.slope_fd),
            float(r.slope_analytic),
            r.accepted.to_string(),
            float(r.residual),
        ]);
        if let Some(imm) = &r.critical_imm {
            mesh::save(imm, cfg.out.join(format!("critical_{i}.imm4")))?;
        }
        accepted += r.accepted as usize;
        println!(
            "sigma {:.4}: beta {:.6} area {:.6} entropy {:.4} residual {:.3e} {}{}",
            r.sigma,
            r.beta,
            r.area,
            r.entropy_value,
            r.residual,
            if r.accepted { "accepted" } else { "rejected" },
            r.failure
                .as_deref()
                .map(|f| format!(" ({f})"))
                .unwrap_or_default()
        );
    }
    csv.write(&cfg.out, "continuation.csv")?;
    Ok(if accepted > 0 { EXIT_OK } else { EXIT_NO_ACCEPTED })
}

fn cmd_diagnose(cfg: &RunConfig, header: &RunHeader) -> Result<i32> {
    let imm = load_input(cfg, 0.0)?;
    let d = &cfg.diagnose;
    let h = imm.mean_edge_length();
    let r0 = MIN_RADIUS_EDGES * h;
    if !(r0 < d.r_max) || d.radii == 0 {
        return Err(Error::BadParam(format!(
            "radius window [{r0}, {}] is empty",
            d.r_max
        )));
    }
    let radii = varifold::geometric_radii(r0, d.r_max, d.radii);
    let centers = varifold::farthest_point_sample(&imm, d.centers);
    let points: Vec<_> = centers.iter().map(|&v| imm.coords()[v]).collect();
    let profiles = varifold::density_profiles(&imm, &points, &radii)?;

    let mut density = Csv::new(header, &["q_index", "r", "mass", "ratio"]);
    let mut summary = Csv::new(
        header,
        &[
            "q_index",
            "vertex",
            "fitted_c",
            "n_hat",
            "n_rounded",
            "confidence",
        ],
    );
    let mut max_c: f64 = 0.0;
    for (k, prof) in profiles.iter().enumerate() {
        for i in 0..radii.len() {
            density.row(&[
                k.to_string(),
                float(prof.radii[i]),
                float(prof.masses[i]),
                float(prof.ratios[i]),
            ]);
        }
        let window: Vec<f64> = radii
            .iter()
            .copied()
            .filter(|&r| r <= varifold::DENSITY_MAX_RADIUS)
            .collect();
        let n = varifold::integer_density(&imm, &points[k], &window)?;
        summary.row(&[
            k.to_string(),
            centers[k].to_string(),
            float(prof.fitted_c),
            float(n.n_hat),
            n.n_rounded.to_string(),
            float(n.confidence),
        ]);
        max_c = max_c.max(prof.fitted_c);
    }

    let mut stat = Csv::new(header, &["field_id", "residual"]);
    let mut abs = Vec::new();
    for f in TestVectorField::standard_basis() {
        let r = varifold::stationarity_residual(&imm, &f);
        abs.push(r.abs());
        stat.row(&[f.label(), float(r)]);
    }

    let mut neck = Csv::new(header, &["x", "j", "annulus_energy"]);
    let mut flagged = 0;
    for &x in &centers {
        let mut j = d.annuli;
        let scan = loop {
            if j == 0 {
                break None;
            }
            match varifold::neck_scan(&imm, x, d.delta, j, d.eps0) {
                Ok(s) => break Some(s),
                Err(Error::BadParam(_)) => j -= 1,
                Err(e) => return Err(e),
            }
        };
        if let Some(s) = scan {
            flagged += s.flagged as usize;
            for (k, e) in s.annuli.iter().enumerate() {
                neck.row(&[x.to_string(), (k + 1).to_string(), float(*e)]);
            }
        }
    }

    density.write(&cfg.out, "density.csv")?;
    summary.write(&cfg.out, "density_summary.csv")?;
    stat.write(&cfg.out, "stationarity.csv")?;
    neck.write(&cfg.out, "neck.csv")?;
    let mean_stat = abs.iter().sum::<f64>() / abs.len() as f64;
    println!(
        "centers {} radii [{:.4}, {:.4}]: max fitted C {:.4}, mean |stationarity| {:.3e} (area {:.6}), necks flagged {}",
        centers.len(),
        r0,
        d.r_max,
        max_c,
        mean_stat,
        imm.total_area(),
        flagged
    );
    Ok(EXIT_OK)
}
