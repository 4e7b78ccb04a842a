//! Batch driver: builds a case from a [`RunConfig`], steps it, and writes
//! the diagnostics stream, snapshots and a run summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::boundary::{surface_residual, BoundaryConditioner, ConditioningConfig, WindowField};
use crate::config::{RunConfig, Scenario};
use crate::diagnostics::{self, fitted_slope, DiagnosticsRecord};
use crate::dynamics::{cfl_number, check_stability, rk4_step, Conditioned, Conditioner, FluidParams, Identity, SimulationState, StepOutput};
use crate::error::{Error, Result};
use crate::filtering::{alpha_from_c_alpha, helmholtz_filter};
use crate::geometry::{ImmersedBody, NumericalBoundary};
use crate::scenarios::{
    build_cavity, dipole_initial_vorticity, taylor_green_vorticity, CavityParams, CylinderParams, DipoleParams,
};
use crate::snapshot::FieldSnapshot;
use crate::spectral::{forward, inverse, inverse_pair, Grid, PhysicalField, SpectralField, TransformCount};

/// Everything a scenario contributes to a run.
struct Case {
    grid: Grid,
    omega0: PhysicalField,
    nu: f64,
    n_p: usize,
    n_r: usize,
    window: WindowField,
    bodies: Vec<ImmersedBody>,
    body_rise: f64,
    conditioned: bool,
}

fn build_case(cfg: &RunConfig) -> Result<Case> {
    let n = cfg.n;
    let h_rise = |grid: &Grid| cfg.body_rise.unwrap_or(0.0) * grid.min_spacing();
    match cfg.scenario {
        Scenario::TaylorGreen => {
            let grid = Grid::square(n, cfg.domain_length.unwrap_or(2.0 * std::f64::consts::PI))?;
            let nu = cfg.nu.unwrap_or(0.01);
            Ok(Case {
                omega0: taylor_green_vorticity(&grid, nu, 0.0),
                window: WindowField::unit(&grid),
                grid,
                nu,
                n_p: cfg.n_p.unwrap_or(0),
                n_r: cfg.n_r.unwrap_or(1),
                bodies: Vec::new(),
                body_rise: 0.0,
                conditioned: false,
            })
        }
        Scenario::Dipole => {
            let d = DipoleParams::default();
            let p = DipoleParams {
                omega_e: cfg.omega_e.unwrap_or(d.omega_e),
                nu: cfg.nu.unwrap_or(d.nu),
                margin_cells: cfg.margin.unwrap_or(d.margin_cells),
                rise_cells: cfg.window_rise.unwrap_or(d.rise_cells),
                domain_length: cfg.domain_length,
                ..d
            };
            let grid = p.grid(n)?;
            let walls = cfg.walls.unwrap_or(true);
            let window = if walls { p.window(&grid)? } else { WindowField::unit(&grid) };
            Ok(Case {
                omega0: dipole_initial_vorticity(&p, &grid)?,
                window,
                grid,
                nu: p.nu,
                n_p: cfg.n_p.unwrap_or(1),
                n_r: cfg.n_r.unwrap_or(1),
                bodies: Vec::new(),
                body_rise: 0.0,
                conditioned: walls,
            })
        }
        Scenario::Cylinder => {
            let d = CylinderParams::default();
            let p = CylinderParams {
                diameter: cfg.diameter.unwrap_or(d.diameter),
                frequency: cfg.frequency.unwrap_or(d.frequency),
                amplitude: cfg.amplitude.unwrap_or(d.amplitude),
                nu: cfg.nu.unwrap_or(d.nu),
                domain_length: cfg.domain_length.unwrap_or(d.domain_length),
                margin_cells: cfg.margin.unwrap_or(d.margin_cells),
                rise_cells: cfg.window_rise.unwrap_or(d.rise_cells),
                ..d
            };
            let grid = p.grid(n)?;
            Ok(Case {
                omega0: PhysicalField::zeros(&grid),
                window: p.window(&grid)?,
                body_rise: h_rise(&grid),
                grid,
                nu: p.nu,
                n_p: cfg.n_p.unwrap_or(2),
                n_r: cfg.n_r.unwrap_or(1),
                bodies: vec![p.body()],
                conditioned: true,
            })
        }
        Scenario::Cavity => {
            let d = CavityParams::scaled(n);
            let mut p = CavityParams {
                lid_speed: cfg.lid_speed.unwrap_or(d.lid_speed),
                reynolds: cfg.reynolds.unwrap_or(d.reynolds),
                domain_length: cfg.domain_length.unwrap_or(d.domain_length),
                margin_cells: cfg.margin.unwrap_or(d.margin_cells),
                rise_cells: cfg.window_rise.unwrap_or(d.rise_cells),
                ..d
            };
            // The outer gaps absorb changes to the window width.
            let shift = (p.margin_cells + p.rise_cells) as isize - (d.margin_cells + d.rise_cells) as isize;
            p.gap_cells = usize::try_from(p.gap_cells as isize - shift)
                .map_err(|_| Error::Config("window too wide for the cavity layout".into()))?;
            p.channel_cells = usize::try_from(p.channel_cells as isize - shift)
                .map_err(|_| Error::Config("window too wide for the cavity layout".into()))?;
            let grid = p.grid(n)?;
            let layout = build_cavity(&p, &grid)?;
            Ok(Case {
                omega0: PhysicalField::zeros(&grid),
                nu: cfg.nu.unwrap_or(p.nu(&grid)),
                window: layout.window,
                body_rise: h_rise(&grid),
                grid,
                n_p: cfg.n_p.unwrap_or(0),
                n_r: cfg.n_r.unwrap_or(3),
                bodies: layout.bodies,
                conditioned: true,
            })
        }
    }
}

/// A case in flight.
pub struct Simulation {
    config: RunConfig,
    grid: Grid,
    params: FluidParams,
    n_p: usize,
    state: SimulationState,
    window: WindowField,
    conditioner: Option<BoundaryConditioner>,
    identity: Identity,
    fixed_mask: Option<PhysicalField>,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let case = build_case(config)?;
        let params = FluidParams::new(case.nu, config.dt, config.n_r.unwrap_or(case.n_r))?;
        check_stability(&case.grid, params.nu, params.dt);
        let state = match &config.restart {
            Some(path) => {
                let snap = FieldSnapshot::load(path)?;
                let omega = snap.to_field(&case.grid)?;
                let step_index = (snap.time / config.dt).round() as u64;
                SimulationState {
                    omega_hat: forward(&omega),
                    time: snap.time,
                    step_index,
                }
            }
            None => SimulationState::new(forward(&case.omega0), 0.0),
        };
        let conditioner = if case.conditioned {
            let mut cc = ConditioningConfig::new(case.n_p, case.window.clone(), case.bodies)?;
            cc.body_rise = case.body_rise;
            Some(BoundaryConditioner::new(cc)?)
        } else {
            None
        };
        Ok(Simulation {
            config: config.clone(),
            grid: case.grid,
            params,
            n_p: case.n_p,
            state,
            window: case.window,
            conditioner,
            identity: Identity,
            fixed_mask: None,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &FluidParams {
        &self.params
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn state(&self) -> &SimulationState {
        &self.state
    }

    pub fn window(&self) -> &WindowField {
        &self.window
    }

    pub fn bodies(&self) -> &[ImmersedBody] {
        self.conditioner.as_ref().map_or(&[], |c| &c.config().bodies)
    }

    fn conditioner(&mut self) -> &mut dyn Conditioner {
        match &mut self.conditioner {
            Some(c) => c,
            None => &mut self.identity,
        }
    }

    /// Conditioned fields of the current state.
    pub fn condition_current(&mut self) -> Result<Conditioned> {
        let (w, t, n_r) = (self.state.omega_hat.clone(), self.state.time, self.params.n_r);
        self.conditioner().condition(&w, t, n_r)
    }

    /// Advances one step; returns the fields conditioned at its start.
    pub fn step(&mut self) -> Result<Conditioned> {
        let params = self.params;
        let state = std::mem::replace(&mut self.state, SimulationState::new(SpectralField::zeros(&self.grid), 0.0));
        let res = rk4_step(&state, &params, self.conditioner());
        match res {
            Ok(StepOutput { state: next, start }) => {
                self.state = next;
                Ok(start)
            }
            Err(e) => {
                self.state = state;
                Err(e)
            }
        }
    }

    pub fn advance(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    /// Indicator of the region where diagnostics are integrated.
    pub fn flow_mask(&mut self, t: f64) -> PhysicalField {
        if let Some(m) = &self.fixed_mask {
            return m.clone();
        }
        let bodies = self.bodies().to_vec();
        let m = diagnostics::flow_mask(&self.window, &bodies, t);
        if !bodies.iter().any(ImmersedBody::is_moving) {
            self.fixed_mask = Some(m.clone());
        }
        m
    }

    /// Numerical boundaries of the bodies at time `t`, in body order.
    pub fn numerical_boundaries(&mut self, t: f64) -> Result<Arc<Vec<NumericalBoundary>>> {
        match &mut self.conditioner {
            Some(c) if !c.config().bodies.is_empty() => c.boundaries(t),
            _ => Ok(Arc::default()),
        }
    }

    /// Largest surface-velocity mismatch on the bodies at time `t`.
    pub fn body_residual(&mut self, u1: &PhysicalField, u2: &PhysicalField, t: f64) -> Result<f64> {
        match &mut self.conditioner {
            Some(c) if !c.config().bodies.is_empty() => {
                let nbs = c.boundaries(t)?;
                Ok(surface_residual(u1, u2, &c.config().bodies, &nbs, t))
            }
            _ => Ok(0.0),
        }
    }

    /// Largest speed where the window vanishes.
    pub fn wall_residual(&self, u1: &PhysicalField, u2: &PhysicalField) -> f64 {
        self.window
            .rho
            .values()
            .iter()
            .zip(u1.values().iter().zip(u2.values()))
            .filter(|(r, _)| **r < 1e-12)
            .fold(0.0f64, |m, (_, (a, b))| m.max(a.hypot(*b)))
    }

    /// Diagnostics of conditioned fields at time `t`.
    pub fn record(&mut self, c: &Conditioned, step: u64, t: f64) -> Result<DiagnosticsRecord> {
        let (u1, u2) = inverse_pair(&c.u1, &c.u2)?;
        let omega = inverse(&c.omega);
        let mask = self.flow_mask(t);
        let bc = self.body_residual(&u1, &u2, t)?.max(self.wall_residual(&u1, &u2));
        Ok(DiagnosticsRecord {
            step,
            time: t,
            energy: diagnostics::energy(&u1, &u2, &mask),
            enstrophy: diagnostics::enstrophy(&omega, &mask),
            cfl: cfl_number(&u1, &u2, self.params.dt, self.grid.min_spacing()),
            max_divergence: diagnostics::max_divergence(&c.u1, &c.u2)?,
            mean_vorticity: diagnostics::mean_vorticity(&c.omega),
            bc_residual: bc,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub scenario: Scenario,
    pub n: usize,
    pub dt: f64,
    pub nu: f64,
    pub n_p: usize,
    pub n_r: usize,
    pub status: String,
    pub start_time: f64,
    pub final_time: f64,
    pub steps: u64,
    pub wall_time_s: f64,
    pub wall_time_per_step_s: f64,
    pub transforms: TransformCount,
    pub max_cfl: f64,
    pub final_energy: f64,
    pub final_enstrophy: f64,
    pub steady_residual: Option<f64>,
    pub filter_alpha: Option<f64>,
}

struct Outputs {
    dir: PathBuf,
    csv: BufWriter<File>,
}

impl Outputs {
    fn create(dir: &Path, append: bool) -> Result<Self> {
        fs::create_dir_all(dir.join("snapshots"))?;
        let path = dir.join("diagnostics.csv");
        let fresh = !append || !path.exists();
        let file = fs::OpenOptions::new()
            .create(true)
            .write(true)
            .append(!fresh)
            .truncate(fresh)
            .open(path)?;
        let mut csv = BufWriter::new(file);
        if fresh {
            writeln!(csv, "{}", DiagnosticsRecord::CSV_HEADER)?;
        }
        Ok(Outputs { dir: dir.to_path_buf(), csv })
    }

    fn row(&mut self, r: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.csv, "{}", r.csv_row())?;
        Ok(())
    }

    fn snapshot(&mut self, field: &PhysicalField, t: f64, step: u64, name: &str, comment: Option<String>) -> Result<()> {
        let mut s = FieldSnapshot::from_field(field, t, name);
        s.comment = comment;
        s.save(self.dir.join("snapshots").join(format!("{name}_{step:08}.fps")))?;
        self.csv.flush()?;
        Ok(())
    }
}

fn write_snapshots(
    out: &mut Outputs,
    state: &SimulationState,
    c: &Conditioned,
    alpha: Option<f64>,
) -> Result<()> {
    let (t, k) = (state.time, state.step_index);
    out.snapshot(&inverse(&state.omega_hat), t, k, "omega", None)?;
    let (u1, u2) = inverse_pair(&c.u1, &c.u2)?;
    out.snapshot(&u1, t, k, "u1", None)?;
    out.snapshot(&u2, t, k, "u2", None)?;
    if let Some(a) = alpha {
        let f = inverse(&helmholtz_filter(&c.omega, a));
        out.snapshot(&f, t, k, "omega_filtered", Some(format!("helmholtz alpha={a}")))?;
    }
    Ok(())
}

/// Runs `config`, writing `diagnostics.csv`, `snapshots/` and
/// `summary.json` under `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    let mut sim = Simulation::new(config)?;
    let steps = config.step_count(sim.state().time)?;
    let stride = config.snapshot_stride();
    let alpha = match config.c_alpha {
        Some(c) => Some(alpha_from_c_alpha(c, sim.grid().l1(), sim.grid())?),
        None => None,
    };
    let mut out = Outputs::create(out_dir, config.restart.is_some())?;
    let counts0 = sim.grid().transform_count();
    let start_time = sim.state().time;
    let clock = Instant::now();
    let mut max_cfl: f64 = 0.0;
    let mut steady = None;
    let mut status = "completed";
    let mut taken = 0;

    let c0 = sim.condition_current()?;
    write_snapshots(&mut out, sim.state(), &c0, alpha)?;

    let mut last_good = sim.state().clone();
    let mut abort = None;
    while taken < steps {
        let (t, k) = (sim.state().time, sim.state().step_index);
        let prev = sim.state().omega_hat.clone();
        let start = match sim.step() {
            Ok(s) => s,
            Err(e @ Error::NonFinite { .. }) => {
                abort = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        let rec = sim.record(&start, k, t)?;
        if !rec.is_finite() {
            abort = Some(Error::NonFinite { what: "diagnostics", step: k, time: t });
            break;
        }
        max_cfl = max_cfl.max(rec.cfl);
        out.row(&rec)?;
        taken += 1;
        last_good = sim.state().clone();
        if let Some(tol) = config.steady_tolerance {
            let d = sim.state().omega_hat.axpy(-1.0, &prev)?;
            let r = inverse(&d).max_abs() / config.dt;
            steady = Some(r);
            if r < tol {
                status = "steady";
                break;
            }
        }
        if let Some(s) = stride {
            if sim.state().step_index % s == 0 && taken < steps {
                let c = sim.condition_current()?;
                write_snapshots(&mut out, sim.state(), &c, alpha)?;
            }
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();

    let (final_rec, final_state) = if let Some(e) = &abort {
        log::error!("{e}; writing the last finite state");
        status = "aborted";
        let w = inverse(&last_good.omega_hat);
        out.snapshot(&w, last_good.time, last_good.step_index, "omega", None)?;
        (DiagnosticsRecord::default(), last_good)
    } else {
        let c = sim.condition_current()?;
        let s = sim.state().clone();
        let rec = sim.record(&c, s.step_index, s.time)?;
        out.row(&rec)?;
        write_snapshots(&mut out, &s, &c, alpha)?;
        (rec, s)
    };
    out.csv.flush()?;

    let summary = RunSummary {
        scenario: config.scenario,
        n: config.n,
        dt: config.dt,
        nu: sim.params().nu,
        n_p: sim.n_p(),
        n_r: sim.params().n_r,
        status: status.into(),
        start_time,
        final_time: final_state.time,
        steps: taken,
        wall_time_s: elapsed,
        wall_time_per_step_s: if taken > 0 { elapsed / taken as f64 } else { 0.0 },
        transforms: sim.grid().transform_count() - counts0,
        max_cfl: max_cfl.max(final_rec.cfl),
        final_energy: final_rec.energy,
        final_enstrophy: final_rec.enstrophy,
        steady_residual: steady,
        filter_alpha: alpha,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serialises");
    fs::write(out_dir.join("summary.json"), json + "\n")?;
    match abort {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

/// Conditioned vorticity at the end of a run, with the interior mask on
/// which runs of a convergence study are compared.
pub fn final_vorticity(config: &RunConfig) -> Result<(PhysicalField, PhysicalField)> {
    let mut sim = Simulation::new(config)?;
    let steps = config.step_count(sim.state().time)?;
    sim.advance(steps)?;
    let c = sim.condition_current()?;
    let t = sim.state().time;
    let bodies = sim.bodies().to_vec();
    Ok((inverse(&c.omega), diagnostics::interior_mask(sim.window(), &bodies, t)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    /// Grid size or time step.
    pub x: f64,
    pub error: f64,
    pub local_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    /// `"N"` or `"dt"`.
    pub variable: String,
    pub reference: f64,
    pub rows: Vec<ConvergenceRow>,
    pub slope: f64,
}

impl ConvergenceTable {
    fn from_errors(variable: &str, reference: f64, xs: &[f64], errors: &[f64]) -> Self {
        let rows = xs
            .iter()
            .zip(errors)
            .enumerate()
            .map(|(i, (&x, &error))| ConvergenceRow {
                x,
                error,
                local_slope: (i > 0).then(|| (error / errors[i - 1]).ln() / (x / xs[i - 1]).ln()),
            })
            .collect();
        ConvergenceTable {
            variable: variable.into(),
            reference,
            rows,
            slope: fitted_slope(xs, errors),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},error,local_slope\n", self.variable);
        for r in &self.rows {
            let local = r.local_slope.map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{},{}\n", r.x, r.error, local));
        }
        s.push_str(&format!("# fitted slope {}\n", self.slope));
        s
    }
}

/// Grid study: every grid against the finest one, all at the same `dt`.
/// A dipole without an explicit domain length gets the one implied by the
/// coarsest grid, so the grids nest.
pub fn convergence_grids(config: &RunConfig, grids: &[usize]) -> Result<ConvergenceTable> {
    let mut grids = grids.to_vec();
    grids.sort_unstable();
    grids.dedup();
    if grids.len() < 2 {
        return Err(Error::Config("a grid study needs at least two grid sizes".into()));
    }
    let mut base = config.clone();
    if base.scenario == Scenario::Dipole && base.domain_length.is_none() {
        let p = DipoleParams {
            margin_cells: base.margin.unwrap_or(DipoleParams::default().margin_cells),
            rise_cells: base.window_rise.unwrap_or(DipoleParams::default().rise_cells),
            ..DipoleParams::default()
        };
        base.domain_length = Some(p.domain_length(grids[0])?);
    }
    let fine = *grids.last().expect("two or more");
    let (reference, _) = final_vorticity(&RunConfig { n: fine, ..base.clone() })?;
    let mut errors = Vec::new();
    for &n in &grids[..grids.len() - 1] {
        let cfg = RunConfig { n, ..base.clone() };
        let (omega, mask) = final_vorticity(&cfg)?;
        errors.push(diagnostics::error_norm(&reference, &omega, &mask)?);
        log::info!("N = {n}: error {:.4e}", errors.last().expect("pushed"));
    }
    let xs: Vec<f64> = grids[..grids.len() - 1].iter().map(|&n| n as f64).collect();
    Ok(ConvergenceTable::from_errors("N", fine as f64, &xs, &errors))
}

/// Time-step study: every step size against the smallest one.
pub fn convergence_dts(config: &RunConfig, dts: &[f64]) -> Result<ConvergenceTable> {
    let mut dts = dts.to_vec();
    dts.sort_by(|a, b| b.total_cmp(a));
    dts.dedup();
    if dts.len() < 2 {
        return Err(Error::Config("a time-step study needs at least two step sizes".into()));
    }
    if config.t_end.is_none() {
        return Err(Error::Config("a time-step study needs t_end".into()));
    }
    let finest = *dts.last().expect("two or more");
    let with_dt = |dt: f64| -> Result<RunConfig> {
        let c = RunConfig { dt, ..config.clone() };
        c.validate()?;
        Ok(c)
    };
    let (reference, _) = final_vorticity(&with_dt(finest)?)?;
    let mut errors = Vec::new();
    for &dt in &dts[..dts.len() - 1] {
        let (omega, mask) = final_vorticity(&with_dt(dt)?)?;
        errors.push(diagnostics::error_norm(&reference, &omega, &mask)?);
        log::info!("dt = {dt}: error {:.4e}", errors.last().expect("pushed"));
    }
    Ok(ConvergenceTable::from_errors("dt", finest, &dts[..dts.len() - 1], &errors))
}

/// Writes a Helmholtz-filtered copy of a snapshot; returns `alpha`.
pub fn filter_snapshot(input: &Path, c_alpha: f64, output: &Path) -> Result<f64> {
    let snap = FieldSnapshot::load(input)?;
    let grid = Grid::new(snap.n1, snap.n2, snap.l1, snap.l2).map_err(|e| Error::Snapshot(e.to_string()))?;
    let field = snap.to_field(&grid)?;
    let alpha = alpha_from_c_alpha(c_alpha, snap.l1, &grid)?;
    let filtered = inverse(&helmholtz_filter(&forward(&field), alpha));
    FieldSnapshot::from_field(&filtered, snap.time, &snap.name)
        .with_comment(format!("helmholtz c_alpha={c_alpha} alpha={alpha}"))
        .save(output)?;
    Ok(alpha)
}
