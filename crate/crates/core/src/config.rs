//! Run configuration: a flat TOML table.
//!
//! ```toml
//! scenario = "dipole"    # dipole | cylinder | cavity | taylor-green
//! n = 256                # grid points per direction
//! dt = 1e-4
//! t_end = 0.6            # or: steps = 6000
//! n_p = 1                # extrapolation order, 0..=2
//! n_r = 1                # conditioning repetitions per stage, 1..=3
//! window_rise = 12       # rise of the wall window, cells
//! margin = 10            # zero margin of the wall window, cells
//! snapshot_every = 0.1   # time between snapshots, a multiple of dt
//! c_alpha = 0.46         # also write Helmholtz-filtered vorticity
//! ```
//!
//! Optional physical overrides: `nu`, `domain_length`, `reynolds`,
//! `lid_speed`, `amplitude`, `frequency`, `diameter`, `omega_e`,
//! `body_rise` (cells, smooths the body mask for `n_p = 0`). Run control:
//! `restart` (path to a vorticity snapshot), `steady_tolerance` (stop once
//! `max |w(n+1) - w(n)| / dt` falls below it), `walls = false` (dipole
//! without the wall window).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Dipole,
    Cylinder,
    Cavity,
    TaylorGreen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub dt: f64,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub steps: Option<u64>,
    #[serde(default)]
    pub n_p: Option<usize>,
    #[serde(default)]
    pub n_r: Option<usize>,
    #[serde(default)]
    pub window_rise: Option<usize>,
    #[serde(default)]
    pub margin: Option<usize>,
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    #[serde(default)]
    pub c_alpha: Option<f64>,
    #[serde(default)]
    pub restart: Option<PathBuf>,
    #[serde(default)]
    pub steady_tolerance: Option<f64>,
    #[serde(default)]
    pub walls: Option<bool>,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub domain_length: Option<f64>,
    #[serde(default)]
    pub reynolds: Option<f64>,
    #[serde(default)]
    pub lid_speed: Option<f64>,
    #[serde(default)]
    pub amplitude: Option<f64>,
    #[serde(default)]
    pub frequency: Option<f64>,
    #[serde(default)]
    pub diameter: Option<f64>,
    #[serde(default)]
    pub omega_e: Option<f64>,
    #[serde(default)]
    pub body_rise: Option<f64>,
}

/// Whether `x` is within roundoff of an integer multiple of `dt`.
fn steps_in(x: f64, dt: f64) -> Option<u64> {
    let k = (x / dt).round();
    ((k - x / dt).abs() <= 1e-9 * k.max(1.0)).then_some(k as u64)
}

impl RunConfig {
    /// Minimal configuration for `scenario`; everything else defaults.
    pub fn new(scenario: Scenario, n: usize, dt: f64) -> Self {
        RunConfig {
            scenario,
            n,
            dt,
            t_end: None,
            steps: None,
            n_p: None,
            n_r: None,
            window_rise: None,
            margin: None,
            snapshot_every: None,
            c_alpha: None,
            restart: None,
            steady_tolerance: None,
            walls: None,
            nu: None,
            domain_length: None,
            reynolds: None,
            lid_speed: None,
            amplitude: None,
            frequency: None,
            diameter: None,
            omega_e: None,
            body_rise: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat table serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n < 8 || self.n % 2 != 0 {
            return fail(format!("n = {} must be even and at least 8", self.n));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return fail(format!("dt = {} must be positive", self.dt));
        }
        match (self.t_end, self.steps) {
            (Some(_), Some(_)) => return fail("give t_end or steps, not both".into()),
            (None, None) => return fail("one of t_end or steps is required".into()),
            (Some(t), None) => {
                if !(t.is_finite() && t >= 0.0) {
                    return fail(format!("t_end = {t} must be non-negative"));
                }
                if steps_in(t, self.dt).is_none() {
                    return fail(format!("t_end = {t} is not a multiple of dt = {}", self.dt));
                }
            }
            (None, Some(_)) => {}
        }
        if let Some(p) = self.n_p {
            if p > 2 {
                return fail(format!("n_p = {p} must be 0, 1 or 2"));
            }
        }
        if let Some(r) = self.n_r {
            if !(1..=3).contains(&r) {
                return fail(format!("n_r = {r} must be 1, 2 or 3"));
            }
        }
        if let Some(r) = self.window_rise {
            if r < 2 {
                return fail(format!("window_rise = {r} cells; at least 2 are needed"));
            }
        }
        if let Some(s) = self.snapshot_every {
            if !(s > 0.0) || steps_in(s, self.dt).is_none_or(|k| k == 0) {
                return fail(format!("snapshot_every = {s} must be a positive multiple of dt = {}", self.dt));
            }
        }
        let positive = [
            ("c_alpha", self.c_alpha),
            ("steady_tolerance", self.steady_tolerance),
            ("nu", self.nu),
            ("domain_length", self.domain_length),
            ("reynolds", self.reynolds),
            ("lid_speed", self.lid_speed),
            ("amplitude", self.amplitude),
            ("frequency", self.frequency),
            ("diameter", self.diameter),
            ("omega_e", self.omega_e),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return fail(format!("{name} = {v} must be positive"));
                }
            }
        }
        if let Some(b) = self.body_rise {
            if !(b.is_finite() && b >= 0.0) {
                return fail(format!("body_rise = {b} must be non-negative"));
            }
        }
        Ok(())
    }

    /// Number of steps to take from `t0`.
    pub fn step_count(&self, t0: f64) -> Result<u64> {
        match (self.steps, self.t_end) {
            (Some(s), _) => Ok(s),
            (None, Some(t)) => {
                if t < t0 {
                    return Err(Error::Config(format!("t_end = {t} is before the start time {t0}")));
                }
                steps_in(t - t0, self.dt)
                    .ok_or_else(|| Error::Config(format!("t_end - t0 = {} is not a multiple of dt", t - t0)))
            }
            (None, None) => Err(Error::Config("one of t_end or steps is required".into())),
        }
    }

    /// Steps between snapshots, if any.
    pub fn snapshot_stride(&self) -> Option<u64> {
        self.snapshot_every.and_then(|s| steps_in(s, self.dt))
    }
}
