//! Sweep-outs, their width, frame-wise pull-down, and σ-continuation with
//! the entropy test.

use rayon::prelude::*;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::{self, CriticalPointResult, FlowOptions, Iterate, StopReason};
use crate::geometry::{self, check_params};
use crate::mesh::{self, DiscreteImmersion};

/// Distance of the endpoint caps from the poles in the height parameter.
pub const EPS_CAP: f64 = 0.0015;

/// An ordered family of immersions on one mesh. The first and last frames
/// are pinned.
#[derive(Debug, Clone)]
pub struct SweepOut {
    frames: Vec<DiscreteImmersion>,
}

impl SweepOut {
    pub fn new(frames: Vec<DiscreteImmersion>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::BadParam("sweep-out needs at least one frame".into()));
        };
        if frames.iter().any(|f| !f.shares_mesh(first)) {
            return Err(Error::MeshMismatch);
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[DiscreteImmersion] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Frames that take part in the width and in deformations. With three or
    /// more frames the pinned endpoints stand for degenerate (point)
    /// immersions and are left out.
    pub fn interior(&self) -> std::ops::Range<usize> {
        if self.frames.len() >= 3 {
            1..self.frames.len() - 1
        } else {
            0..self.frames.len()
        }
    }

    fn movable(&self) -> std::ops::Range<usize> {
        if self.frames.len() >= 3 {
            1..self.frames.len() - 1
        } else {
            0..0
        }
    }
}

/// Latitude spheres `{x₄ = t_i}` for `t_i` uniform in `[−1 + ε, 1 − ε]`.
pub fn latitude_sweepout(level: u32, n_frames: usize) -> Result<SweepOut> {
    if n_frames < 5 {
        return Err(Error::BadParam(format!("need at least 5 frames, got {n_frames}")));
    }
    let (m, pts) = mesh::icosphere(level)?;
    let m = Arc::new(m);
    let frames = (0..n_frames)
        .map(|i| {
            let t = if 2 * i + 1 == n_frames {
                0.0
            } else {
                (1.0 - EPS_CAP) * (2.0 * i as f64 / (n_frames - 1) as f64 - 1.0)
            };
            mesh::latitude_from(m.clone(), &pts, t)
        })
        .collect::<Result<Vec<_>>>()?;
    SweepOut::new(frames)
}

/// `β = max` relaxed energy over the interior frames; ties go to the lowest
/// index.
pub fn width(sw: &SweepOut, p: f64, sigma: f64) -> Result<(f64, usize)> {
    let energies = frame_energies(sw, p, sigma)?;
    Ok(argmax(&energies, sw.interior()))
}

fn frame_energies(sw: &SweepOut, p: f64, sigma: f64) -> Result<Vec<f64>> {
    sw.frames
        .par_iter()
        .map(|f| geometry::relaxed_energy(f, p, sigma))
        .collect()
}

fn argmax(values: &[f64], range: std::ops::Range<usize>) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, range.start);
    for i in range {
        if values[i] > best.0 {
            best = (values[i], i);
        }
    }
    best
}

/// `steps` Armijo descent steps from `imm`; stops early on convergence or a
/// stalled line search.
fn descent_steps(
    imm: &DiscreteImmersion,
    p: f64,
    sigma: f64,
    steps: usize,
    opts: &FlowOptions,
) -> Result<DiscreteImmersion> {
    let mut it = Iterate::new(imm.clone(), p, sigma, opts.precondition)?;
    for _ in 0..steps {
        if it.residual <= opts.tol {
            break;
        }
        match flow::line_search(&it, p, sigma, opts) {
            Some((next, _)) => it = Iterate::new(next, p, sigma, opts.precondition)?,
            None => break,
        }
    }
    Ok(it.imm)
}

/// Result of repeated pull-down rounds.
#[derive(Debug, Clone)]
pub struct PullDown {
    pub sweepout: SweepOut,
    /// Width before the first round and after every round.
    pub widths: Vec<f64>,
}

/// Applies `rounds` rounds of `inner_steps` descent steps to every interior
/// frame, independently and in parallel.
pub fn pull_down(
    sw: &SweepOut,
    p: f64,
    sigma: f64,
    rounds: usize,
    inner_steps: usize,
    opts: &FlowOptions,
) -> Result<PullDown> {
    if rounds == 0 {
        return Err(Error::BadParam("rounds must be at least 1".into()));
    }
    let mut state = PullState::new(sw.clone(), p, sigma)?;
    for _ in 0..rounds {
        state.round(inner_steps, opts)?;
    }
    Ok(PullDown {
        sweepout: state.sw,
        widths: state.widths,
    })
}

struct PullState {
    sw: SweepOut,
    energies: Vec<f64>,
    widths: Vec<f64>,
    p: f64,
    sigma: f64,
}

impl PullState {
    fn new(sw: SweepOut, p: f64, sigma: f64) -> Result<Self> {
        check_params(p, sigma)?;
        let energies = frame_energies(&sw, p, sigma)?;
        let w = argmax(&energies, sw.interior()).0;
        Ok(Self {
            sw,
            energies,
            widths: vec![w],
            p,
            sigma,
        })
    }

    fn round(&mut self, inner_steps: usize, opts: &FlowOptions) -> Result<()> {
        let (p, sigma) = (self.p, self.sigma);
        let moved: Vec<DiscreteImmersion> = self.sw.frames[self.sw.movable()]
            .par_iter()
            .map(|f| descent_steps(f, p, sigma, inner_steps, opts))
            .collect::<Result<_>>()?;
        let start = self.sw.movable().start;
        for (k, f) in moved.into_iter().enumerate() {
            self.sw.frames[start + k] = f;
        }
        self.energies = frame_energies(&self.sw, p, sigma)?;
        let w = argmax(&self.energies, self.sw.interior()).0;
        let prev = *self.widths.last().expect("nonempty");
        assert!(
            w <= prev + 1e-12 * prev.abs().max(1.0),
            "width increased: {prev} -> {w}"
        );
        self.widths.push(w);
        Ok(())
    }

    /// Relative width change over the last `window` rounds.
    fn stalled(&self, window: usize, rel: f64) -> bool {
        let n = self.widths.len();
        if n <= window {
            return false;
        }
        let (old, new) = (self.widths[n - 1 - window], self.widths[n - 1]);
        (old - new).abs() <= rel * old.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinmaxOptions {
    pub flow: FlowOptions,
    /// Descent steps per frame per round.
    pub inner_steps: usize,
    pub max_rounds: usize,
    /// Width is stalled once it changed by less than `stall_rel` (relative)
    /// over `stall_window` rounds.
    pub stall_rel: f64,
    pub stall_window: usize,
    /// Stop the final descent once the energy drops below this fraction of
    /// the stalled width.
    pub escape_fraction: f64,
}

impl Default for MinmaxOptions {
    fn default() -> Self {
        Self {
            flow: FlowOptions {
                tol: 1e-3,
                max_iters: 200,
                ..FlowOptions::default()
            },
            inner_steps: 2,
            max_rounds: 60,
            stall_rel: 1e-6,
            stall_window: 5,
            escape_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinmaxResult {
    /// The pulled-down family.
    pub sweepout: SweepOut,
    pub widths: Vec<f64>,
    /// Width and argmax frame after the pull-down stalled.
    pub width: f64,
    pub argmax: usize,
    pub width_stalled: bool,
    /// The final descent started from the argmax frame.
    pub critical: CriticalPointResult,
    /// The descent fell below `escape_fraction × width`.
    pub saddle_escape: bool,
}

impl MinmaxResult {
    pub fn start_state(&self) -> &DiscreteImmersion {
        &self.sweepout.frames()[self.argmax]
    }
}

/// Pulls the sweep-out down until its width stalls, then descends from the
/// highest frame, stopping at the tolerance or when the energy leaves the
/// saddle level.
pub fn minmax_critical(sw: &SweepOut, p: f64, sigma: f64, opts: &MinmaxOptions) -> Result<MinmaxResult> {
    opts.flow.validate()?;
    let mut state = PullState::new(sw.clone(), p, sigma)?;
    let mut stalled = false;
    for _ in 0..opts.max_rounds {
        state.round(opts.inner_steps, &opts.flow)?;
        if state.stalled(opts.stall_window, opts.stall_rel) {
            stalled = true;
            break;
        }
    }
    let (width, argmax) = argmax(&state.energies, state.sw.interior());
    let floor = opts.escape_fraction * width;

    let f = &opts.flow;
    let mut it = Iterate::new(state.sw.frames[argmax].clone(), p, sigma, f.precondition)?;
    let mut residual_history = vec![it.residual];
    let mut energy_history = vec![it.energy];
    let mut step_history = Vec::new();
    let mut saddle_escape = false;
    let stop = loop {
        if it.residual <= f.tol {
            break StopReason::Converged;
        }
        if it.energy.relaxed < floor {
            saddle_escape = true;
            break StopReason::MaxIters;
        }
        if step_history.len() >= f.max_iters {
            break StopReason::MaxIters;
        }
        let Some((next, t)) = flow::line_search(&it, p, sigma, f) else {
            break StopReason::LineSearchStall;
        };
        it = Iterate::new(next, p, sigma, f.precondition)?;
        residual_history.push(it.residual);
        energy_history.push(it.energy);
        step_history.push(t);
    };
    let critical = CriticalPointResult {
        imm_final: it.imm,
        iterations: step_history.len(),
        residual_history,
        energy_history,
        step_history,
        converged: stop == StopReason::Converged,
        stop,
    };
    Ok(MinmaxResult {
        widths: state.widths,
        sweepout: state.sw,
        width,
        argmax,
        width_stalled: stalled,
        critical,
        saddle_escape,
    })
}

#[derive(Debug, Clone)]
pub struct ContinuationRecord {
    pub sigma: f64,
    /// Width `β(σ)` after pull-down.
    pub beta: f64,
    pub critical_imm: Option<DiscreteImmersion>,
    pub area: f64,
    pub f_p: f64,
    /// `σ² f_p log(1/σ)` at the critical point.
    pub entropy_value: f64,
    /// Backward secant `Δβ/Δσ` against the previous schedule point (NaN for
    /// the first).
    pub slope_fd: f64,
    /// `2σ f_p`.
    pub slope_analytic: f64,
    /// `slope_fd · σ log(1/σ)`.
    pub slope_check: f64,
    pub residual: f64,
    pub accepted: bool,
    pub failure: Option<String>,
}

/// Runs [`minmax_critical`] along a decreasing σ schedule, warm-starting each
/// σ from the previous pulled-down sweep-out, and applies the entropy test.
pub fn struwe_continuation(
    sw: &SweepOut,
    p: f64,
    schedule: &[f64],
    lambda: f64,
    opts: &MinmaxOptions,
) -> Result<Vec<ContinuationRecord>> {
    check_schedule(schedule)?;
    if !(lambda >= 0.0) {
        return Err(Error::BadParam("lambda must be nonnegative".into()));
    }
    check_params(p, 0.0)?;
    let mut records: Vec<ContinuationRecord> = Vec::with_capacity(schedule.len());
    let mut current = sw.clone();
    let mut prev: Option<(f64, f64)> = None;
    for &sigma in schedule {
        let log_inv = (1.0 / sigma).ln();
        let rec = match minmax_critical(&current, p, sigma, opts) {
            Ok(res) => {
                let e = *res.critical.final_energy();
                let entropy_value = sigma * sigma * e.f_p * log_inv;
                let slope_fd = match prev {
                    Some((s0, b0)) => (b0 - res.width) / (s0 - sigma),
                    None => f64::NAN,
                };
                let slope_check = slope_fd * sigma * log_inv;
                let failure = if res.saddle_escape {
                    Some("saddle escape".to_string())
                } else if !res.critical.converged {
                    Some(format!("not converged ({:?})", res.critical.stop))
                } else {
                    None
                };
                let slope_ok = slope_fd.is_nan() || slope_check <= lambda;
                let accepted = failure.is_none() && entropy_value <= lambda && slope_ok;
                prev = Some((sigma, res.width));
                let rec = ContinuationRecord {
                    sigma,
                    beta: res.width,
                    area: e.area,
                    f_p: e.f_p,
                    entropy_value,
                    slope_fd,
                    slope_analytic: 2.0 * sigma * e.f_p,
                    slope_check,
                    residual: res.critical.final_residual(),
                    accepted,
                    failure,
                    critical_imm: Some(res.critical.imm_final.clone()),
                };
                current = res.sweepout;
                rec
            }
            Err(err) => ContinuationRecord {
                sigma,
                beta: f64::NAN,
                critical_imm: None,
                area: f64::NAN,
                f_p: f64::NAN,
                entropy_value: f64::NAN,
                slope_fd: f64::NAN,
                slope_analytic: f64::NAN,
                slope_check: f64::NAN,
                residual: f64::NAN,
                accepted: false,
                failure: Some(err.to_string()),
            },
        };
        records.push(rec);
    }
    Ok(records)
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    for (i, &s) in schedule.iter().enumerate() {
        if !(s > 0.0 && s <= 0.5) {
            return Err(Error::BadParam(format!("sigma {s} outside (0, 0.5]")));
        }
        if i > 0 && !(s < schedule[i - 1]) {
            return Err(Error::BadParam(
                "sigma schedule must be strictly decreasing".into(),
            ));
        }
    }
    Ok(())
}
