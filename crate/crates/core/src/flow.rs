//! Projected, Sobolev-preconditioned descent of the relaxed energy with an
//! Armijo line search.

use crate::error::{Error, Result};
use crate::geometry::{self, check_params, EnergyBreakdown};
use crate::mesh::{DiscreteImmersion, TangentField};
use crate::variation::{self, FinslerMetric, Gradient};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Stop once the dual residual is at or below this.
    pub tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub step_init: f64,
    pub step_min: f64,
    /// Use the Sobolev metric `M₀ + S + S M₀⁻¹ S`; plain projected gradient otherwise.
    pub precondition: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 500,
            armijo_c: 1e-4,
            backtrack: 0.5,
            step_init: 1.0,
            step_min: 1e-10,
            precondition: true,
        }
    }
}

impl FlowOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::BadParam("tol must be positive".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::BadParam("armijo_c must lie in (0, 1)".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::BadParam("backtrack must lie in (0, 1)".into()));
        }
        if !(self.step_min > 0.0 && self.step_min < self.step_init && self.step_init.is_finite()) {
            return Err(Error::BadParam("need 0 < step_min < step_init".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIters,
    LineSearchStall,
}

#[derive(Debug, Clone)]
pub struct CriticalPointResult {
    pub imm_final: DiscreteImmersion,
    /// Accepted steps.
    pub iterations: usize,
    /// Dual residual at every visited iterate (length `iterations + 1`).
    pub residual_history: Vec<f64>,
    pub energy_history: Vec<EnergyBreakdown>,
    /// Accepted step lengths (length `iterations`).
    pub step_history: Vec<f64>,
    pub converged: bool,
    pub stop: StopReason,
}

impl CriticalPointResult {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().expect("history is never empty")
    }

    pub fn final_energy(&self) -> &EnergyBreakdown {
        self.energy_history.last().expect("history is never empty")
    }

    /// Turns a stalled line search into an error.
    pub fn check_stall(&self) -> Result<()> {
        if self.stop == StopReason::LineSearchStall {
            return Err(Error::LineSearchStall {
                iteration: self.iterations,
                residual: self.final_residual(),
            });
        }
        Ok(())
    }
}

/// Everything the line search needs at one iterate.
pub(crate) struct Iterate {
    pub imm: DiscreteImmersion,
    pub energy: EnergyBreakdown,
    pub residual: f64,
    /// Descent direction (already negated).
    pub direction: TangentField,
    /// `⟨grad, direction⟩ < 0`.
    pub slope: f64,
}

impl Iterate {
    pub fn new(imm: DiscreteImmersion, p: f64, sigma: f64, precondition: bool) -> Result<Self> {
        let energy = geometry::energies(&imm, p, sigma)?;
        let g = variation::grad_relaxed(&imm, p, sigma)?;
        let metric = FinslerMetric::assemble(&imm)?;
        let (sob, residual) = variation::sobolev_gradient(&imm, &metric, &g)?;
        let (direction, slope) = if precondition {
            (sob.scaled(-1.0), -residual * residual)
        } else {
            let w = TangentField::project(&imm, g.vectors()).scaled(-1.0);
            let slope = g.pair(&w);
            (w, slope)
        };
        Ok(Self {
            imm,
            energy,
            residual,
            direction,
            slope,
        })
    }
}

/// Backtracking Armijo search along `it.direction`. Trial states that fail
/// validation (degenerate faces, flipped normals) count as rejected.
pub(crate) fn line_search(
    it: &Iterate,
    p: f64,
    sigma: f64,
    opts: &FlowOptions,
) -> Option<(DiscreteImmersion, f64)> {
    let mut t = opts.step_init;
    while t >= opts.step_min {
        if let Ok(trial) = it.imm.retract(&it.direction, t) {
            if let Ok(e) = geometry::relaxed_energy(&trial, p, sigma) {
                if e <= it.energy.relaxed + opts.armijo_c * t * it.slope && e <= it.energy.relaxed {
                    return Some((trial, t));
                }
            }
        }
        t *= opts.backtrack;
    }
    None
}

/// Descends `A^σ_p` from `imm` until the dual residual reaches `opts.tol`,
/// `opts.max_iters` steps were taken, or the line search stalls.
pub fn descend(
    imm: &DiscreteImmersion,
    p: f64,
    sigma: f64,
    opts: &FlowOptions,
) -> Result<CriticalPointResult> {
    check_params(p, sigma)?;
    opts.validate()?;
    let mut it = Iterate::new(imm.clone(), p, sigma, opts.precondition)?;
    let mut residual_history = vec![it.residual];
    let mut energy_history = vec![it.energy];
    let mut step_history = Vec::new();
    let stop = loop {
        if it.residual <= opts.tol {
            break StopReason::Converged;
        }
        if step_history.len() >= opts.max_iters {
            break StopReason::MaxIters;
        }
        let Some((next, t)) = line_search(&it, p, sigma, opts) else {
            break StopReason::LineSearchStall;
        };
        let prev = it.energy.relaxed;
        it = Iterate::new(next, p, sigma, opts.precondition)?;
        debug_assert!(it.energy.relaxed <= prev);
        residual_history.push(it.residual);
        energy_history.push(it.energy);
        step_history.push(t);
    };
    Ok(CriticalPointResult {
        imm_final: it.imm,
        iterations: step_history.len(),
        residual_history,
        energy_history,
        step_history,
        converged: stop == StopReason::Converged,
        stop,
    })
}

/// One-shot Palais–Smale residual `‖D A^σ_p‖` in the Sobolev dual norm.
pub fn ps_probe(imm: &DiscreteImmersion, p: f64, sigma: f64) -> Result<f64> {
    let g: Gradient = variation::grad_relaxed(imm, p, sigma)?;
    variation::dual_residual(&FinslerMetric::assemble(imm)?, &g)
}
