//! Run configuration: a TOML file overlaid by command-line flags.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flow::FlowOptions;
use crate::minmax::MinmaxOptions;
use crate::varifold::EPS0_DEFAULT;

/// Schedule used by `continue` when none is configured.
pub const DEFAULT_SCHEDULE: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub p: f64,
    pub sigma: f64,
    pub schedule: Vec<f64>,
    pub lambda: f64,
    pub tol: f64,
    pub max_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    pub shape: String,
    /// Amplitude of the seeded smooth perturbation applied to the input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturb: Option<f64>,
    pub seed: u64,
    /// Worker threads; 0 picks the number of available cores.
    pub threads: usize,
    pub out: PathBuf,
    pub flow: FlowSection,
    pub minmax: MinmaxSection,
    pub diagnose: DiagnoseSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            sigma: 0.1,
            schedule: Vec::new(),
            lambda: 1.0,
            tol: 1e-3,
            max_iters: 200,
            mesh: None,
            shape: "equator:4".into(),
            perturb: None,
            seed: 0,
            threads: 0,
            out: PathBuf::from("."),
            flow: FlowSection::default(),
            minmax: MinmaxSection::default(),
            diagnose: DiagnoseSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub armijo_c: f64,
    pub backtrack: f64,
    pub step_init: f64,
    pub step_min: f64,
    pub precondition: bool,
}

impl Default for FlowSection {
    fn default() -> Self {
        let f = FlowOptions::default();
        Self {
            armijo_c: f.armijo_c,
            backtrack: f.backtrack,
            step_init: f.step_init,
            step_min: f.step_min,
            precondition: f.precondition,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinmaxSection {
    pub level: u32,
    pub frames: usize,
    pub inner_steps: usize,
    pub max_rounds: usize,
    pub stall_rel: f64,
    pub stall_window: usize,
    pub escape_fraction: f64,
}

impl Default for MinmaxSection {
    fn default() -> Self {
        let m = MinmaxOptions::default();
        Self {
            level: 4,
            frames: 33,
            inner_steps: m.inner_steps,
            max_rounds: m.max_rounds,
            stall_rel: m.stall_rel,
            stall_window: m.stall_window,
            escape_fraction: m.escape_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseSection {
    /// Number of farthest-point-sampled centers.
    pub centers: usize,
    pub radii: usize,
    pub r_max: f64,
    /// Inner neck radius in hops.
    pub delta: f64,
    pub annuli: u32,
    pub eps0: f64,
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        Self {
            centers: 8,
            radii: 8,
            r_max: 0.3,
            delta: 1.0,
            annuli: 4,
            eps0: EPS0_DEFAULT,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                line,
                msg: e.message().to_string(),
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        crate::geometry::check_params(self.p, self.sigma)?;
        for w in self.schedule.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::BadParam("schedule must be strictly decreasing".into()));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::BadParam("tol must be positive".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::BadParam("lambda must be nonnegative".into()));
        }
        if let Some(a) = self.perturb {
            if !(a >= 0.0) {
                return Err(Error::BadParam("perturb must be nonnegative".into()));
            }
        }
        self.flow_options().validate()
    }

    pub fn flow_options(&self) -> FlowOptions {
        FlowOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            armijo_c: self.flow.armijo_c,
            backtrack: self.flow.backtrack,
            step_init: self.flow.step_init,
            step_min: self.flow.step_min,
            precondition: self.flow.precondition,
        }
    }

    pub fn minmax_options(&self) -> MinmaxOptions {
        let m = &self.minmax;
        MinmaxOptions {
            flow: self.flow_options(),
            inner_steps: m.inner_steps,
            max_rounds: m.max_rounds,
            stall_rel: m.stall_rel,
            stall_window: m.stall_window,
            escape_fraction: m.escape_fraction,
        }
    }

    /// SHA-256 of the configuration with `threads` and `out` cleared.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = 0;
        c.out = PathBuf::new();
        let text = toml::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_defaults() {
        let c = RunConfig::parse("p = 3.0\nschedule = [0.2, 0.1]\n[minmax]\nframes = 9\n").unwrap();
        assert_eq!(c.p, 3.0);
        assert_eq!(c.schedule, vec![0.2, 0.1]);
        assert_eq!(c.minmax.frames, 9);
        assert_eq!(c.minmax.level, 4);
        assert_eq!(c.diagnose, DiagnoseSection::default());
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        match RunConfig::parse("p = 2.0\n\nbogus = 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_ignores_threads_and_out() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.threads = 4;
        b.out = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.schedule = vec![0.1, 0.2];
        assert!(c.validate().is_err());
        c.schedule.clear();
        c.p = 1.0;
        assert!(c.validate().is_err());
    }
}
