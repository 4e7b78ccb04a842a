//! Vorticity transport right-hand side and Runge-Kutta time stepping.

use crate::error::{Error, Result};
use crate::spectral::{
    padded_forward_pair, padded_inverse_pair, velocity_from_vorticity, Grid, PaddedField,
    PhysicalField, SpectralField,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams {
    pub nu: f64,
    pub dt: f64,
    /// Repetitions of the conditioning loop per stage.
    pub n_r: usize,
}

impl FluidParams {
    pub fn new(nu: f64, dt: f64, n_r: usize) -> Result<Self> {
        let p = FluidParams { nu, dt, n_r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::InvalidParameter(format!("nu = {} must be positive", self.nu)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !(1..=3).contains(&self.n_r) {
            return Err(Error::InvalidParameter(format!("n_r = {} must be in 1..=3", self.n_r)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SimulationState {
    pub omega_hat: SpectralField,
    pub time: f64,
    pub step_index: u64,
}

impl SimulationState {
    pub fn new(omega_hat: SpectralField, time: f64) -> Self {
        SimulationState {
            omega_hat,
            time,
            step_index: 0,
        }
    }
}

/// Output of a conditioning pass: the conditioned vorticity and the
/// solenoidal velocity recovered from it, both spectral.
#[derive(Clone, Debug)]
pub struct Conditioned {
    pub omega: SpectralField,
    pub u1: SpectralField,
    pub u2: SpectralField,
}

/// Maps a vorticity to its boundary-conditioned counterpart.
pub trait Conditioner {
    fn condition(&mut self, omega: &SpectralField, t: f64, n_r: usize) -> Result<Conditioned>;
}

/// Leaves the vorticity untouched: a plain periodic solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Conditioner for Identity {
    fn condition(&mut self, omega: &SpectralField, _t: f64, _n_r: usize) -> Result<Conditioned> {
        let (u1, u2) = velocity_from_vorticity(omega);
        Ok(Conditioned {
            omega: omega.clone(),
            u1,
            u2,
        })
    }
}

impl<F> Conditioner for F
where
    F: FnMut(&SpectralField, f64, usize) -> Result<Conditioned>,
{
    fn condition(&mut self, omega: &SpectralField, t: f64, n_r: usize) -> Result<Conditioned> {
        self(omega, t, n_r)
    }
}

/// Time derivative of the vorticity.
///
/// The advection term uses the form `-k1 k2 F[u1^2 - u2^2] + (k1^2 - k2^2) F[u1 u2]`,
/// which needs two padded inverse and two padded forward transforms. It
/// vanishes on the Nyquist row and column, which only diffuse.
pub fn rhs(omega_bc: &SpectralField, u1: &SpectralField, u2: &SpectralField, nu: f64) -> Result<SpectralField> {
    let grid = omega_bc.grid();
    let (p1, p2) = padded_inverse_pair(u1, u2)?;
    let mut diff = Vec::with_capacity(p1.values.len());
    let mut prod = Vec::with_capacity(p1.values.len());
    for (&a, &b) in p1.values.iter().zip(&p2.values) {
        diff.push(a * a - b * b);
        prod.push(a * b);
    }
    let (d, p) = padded_forward_pair(grid, &PaddedField { values: diff }, &PaddedField { values: prod });

    let k2o = grid.k2_odd();
    let k1o = grid.k1_odd();
    let resolved = grid.resolved();
    let out = grid.build_rows(false, |a, k2, s, out| {
        let e = s + k2.len();
        let ao = k1o[s / k2.len()];
        let terms = omega_bc.raw()[s..e].iter().zip(&d.raw()[s..e]).zip(&p.raw()[s..e]);
        out.extend(terms.zip(k2.iter().zip(k2o)).zip(&resolved[s..e]).map(|((((&w, &dd), &pp), (&b, &bo)), &r)| {
            w * (-nu * (a * a + b * b)) + (pp * (a * a - b * b) - dd * (ao * bo)) * r
        }));
    });
    let out = SpectralField::from_raw(grid, out);
    Ok(out)
}

/// Vector-space operations needed by the Runge-Kutta update.
pub trait RkVector: Sized {
    /// `self + s * x`
    fn axpy(&self, s: f64, x: &Self) -> Result<Self>;
}

impl RkVector for f64 {
    fn axpy(&self, s: f64, x: &Self) -> Result<Self> {
        Ok(self + s * x)
    }
}

impl RkVector for SpectralField {
    fn axpy(&self, s: f64, x: &Self) -> Result<Self> {
        SpectralField::axpy(self, s, x)
    }
}

/// Classical four-stage Runge-Kutta step with a conditioned base state.
///
/// `stage(y, t)` returns the conditioned state and its derivative. The update
/// is taken from the conditioned first-stage state:
/// `y_new = C(y) + dt/6 (k1 + 2 k2 + 2 k3 + k4)`.
/// Returns the new state and the conditioned first stage.
pub fn rk4_generic<S: RkVector>(
    y: &S,
    t: f64,
    dt: f64,
    mut stage: impl FnMut(&S, f64) -> Result<(S, S)>,
) -> Result<(S, S)> {
    let (base, k1) = stage(y, t)?;
    let (_, k2) = stage(&base.axpy(0.5 * dt, &k1)?, t + 0.5 * dt)?;
    let (_, k3) = stage(&base.axpy(0.5 * dt, &k2)?, t + 0.5 * dt)?;
    let (_, k4) = stage(&base.axpy(dt, &k3)?, t + dt)?;
    let next = base
        .axpy(dt / 6.0, &k1)?
        .axpy(dt / 3.0, &k2)?
        .axpy(dt / 3.0, &k3)?
        .axpy(dt / 6.0, &k4)?;
    Ok((next, base))
}

/// Result of one time step: the advanced state and the conditioned fields
/// at the start of the step.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: SimulationState,
    pub start: Conditioned,
}

/// Advances the vorticity by one step, conditioning at every stage.
pub fn rk4_step(state: &SimulationState, params: &FluidParams, conditioner: &mut dyn Conditioner) -> Result<StepOutput> {
    let mut start = None;
    let (next, _) = rk4_generic(&state.omega_hat, state.time, params.dt, |w, t| {
        let c = conditioner.condition(w, t, params.n_r)?;
        let dw = rhs(&c.omega, &c.u1, &c.u2, params.nu)?;
        let cw = c.omega.clone();
        if start.is_none() {
            start = Some(c);
        }
        Ok((cw, dw))
    })?;
    let step_index = state.step_index + 1;
    let time = state.time + params.dt;
    if !next.is_finite() {
        return Err(Error::NonFinite {
            what: "vorticity",
            step: step_index,
            time,
        });
    }
    Ok(StepOutput {
        state: SimulationState {
            omega_hat: next,
            time,
            step_index,
        },
        start: start.expect("first stage always runs"),
    })
}

/// Explicit-diffusion stability number `nu |k|^2_max dt`; RK4 is stable on
/// the negative real axis up to about 2.78.
pub fn diffusion_number(grid: &Grid, nu: f64, dt: f64) -> f64 {
    let k1 = grid.k1().iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let k2 = grid.k2().iter().fold(0.0f64, |m, k| m.max(k.abs()));
    nu * (k1 * k1 + k2 * k2) * dt
}

/// Logs a warning when the explicit diffusion term is outside the stable
/// range; returns the stability number.
pub fn check_stability(grid: &Grid, nu: f64, dt: f64) -> f64 {
    let d = diffusion_number(grid, nu, dt);
    if d > 2.8 {
        log::warn!("nu |k|^2_max dt = {d:.3} exceeds 2.8: explicit diffusion is unstable at this dt");
    }
    d
}

/// `max |u| dt / dx` with the pointwise speed.
pub fn cfl_number(u1: &PhysicalField, u2: &PhysicalField, dt: f64, dx: f64) -> f64 {
    let max_speed = u1
        .values()
        .iter()
        .zip(u2.values())
        .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)));
    max_speed * dt / dx
}
