//! Built-in flow cases: dipole-wall collision, oscillating cylinder,
//! lid-driven cavity with a side channel, and the Taylor-Green vortex.

use std::f64::consts::PI;

use crate::boundary::{build_window, WindowField};
use crate::error::{Error, Result};
use crate::geometry::{ImmersedBody, Motion, Shape};
use crate::spectral::{Grid, PhysicalField};

/// `omega_e (1 - (r/r0)^2) exp(-(r/r0)^2)`.
pub fn monopole(omega_e: f64, r0: f64, r: f64) -> f64 {
    let s = (r / r0).powi(2);
    omega_e * (1.0 - s) * (-s).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DipoleParams {
    /// Peak vorticity of each monopole.
    pub omega_e: f64,
    pub r0: f64,
    /// Centres of the positive and negative monopoles.
    pub centers: [[f64; 2]; 2],
    pub nu: f64,
    /// Half-width of the square flow box centred at the origin.
    pub half_width: f64,
    pub margin_cells: usize,
    pub rise_cells: usize,
    /// Fixes the domain length instead of deriving it from the grid size;
    /// the margin then absorbs the difference.
    pub domain_length: Option<f64>,
}

impl Default for DipoleParams {
    fn default() -> Self {
        DipoleParams {
            omega_e: 299.528385375226,
            r0: 0.1,
            centers: [[0.0, 0.1], [0.0, -0.1]],
            nu: 1e-3,
            half_width: 1.0,
            margin_cells: 10,
            rise_cells: 12,
            domain_length: None,
        }
    }
}

impl DipoleParams {
    /// `U W / nu` for a velocity scale `u`.
    pub fn reynolds(&self, u: f64) -> f64 {
        u * self.half_width / self.nu
    }

    /// Side of the square periodic domain on an `n`-point grid.
    pub fn domain_length(&self, n: usize) -> Result<f64> {
        if let Some(l) = self.domain_length {
            return Ok(l);
        }
        let walls = 2.0 * (self.margin_cells + self.rise_cells) as f64 / n as f64;
        if walls >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "margin and rise of {} cells leave no flow box on {n} points",
                self.margin_cells + self.rise_cells
            )));
        }
        Ok(2.0 * self.half_width / (1.0 - walls))
    }

    /// Grid centred on the flow box.
    pub fn grid(&self, n: usize) -> Result<Grid> {
        let l = self.domain_length(n)?;
        Grid::with_origin(n, n, l, l, [-0.5 * l, -0.5 * l])
    }

    /// Margin in cells on `grid`: the configured value, or whatever remains
    /// between the rise band and the flow box when the domain length is
    /// fixed.
    pub fn margin_on(&self, grid: &Grid) -> Result<f64> {
        if self.domain_length.is_none() {
            return Ok(self.margin_cells as f64);
        }
        let cells = (0.5 * grid.l1() - self.half_width) / grid.dx1() - self.rise_cells as f64;
        if cells < 0.0 || (cells - cells.round()).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "fixed domain length {} puts the flow box {cells:.3} cells from the rise band on {} points",
                grid.l1(),
                grid.n1()
            )));
        }
        Ok(cells.round())
    }

    pub fn window(&self, grid: &Grid) -> Result<WindowField> {
        let h = grid.dx1();
        build_window(grid, self.margin_on(grid)? * h, self.rise_cells as f64 * h)
    }
}

/// The two monopoles of opposite sign, multiplied by the window and shifted
/// to zero mean.
pub fn dipole_initial_vorticity(p: &DipoleParams, grid: &Grid) -> Result<PhysicalField> {
    let w = p.half_width;
    for c in &p.centers {
        let room = w - c[0].abs().max(c[1].abs());
        if room < 3.0 * p.r0 {
            return Err(Error::Geometry(format!(
                "monopole at ({}, {}) reaches within 3 r0 of the wall",
                c[0], c[1]
            )));
        }
    }
    let window = p.window(grid)?;
    let [a, b] = p.centers;
    let omega = PhysicalField::from_fn(grid, |x, y| {
        monopole(p.omega_e, p.r0, (x - a[0]).hypot(y - a[1])) - monopole(p.omega_e, p.r0, (x - b[0]).hypot(y - b[1]))
    });
    let omega = omega.zip_with(&window.rho, |v, r| v * r)?;
    let mean = omega.mean();
    Ok(omega.map(|v| v - mean))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CylinderParams {
    pub diameter: f64,
    pub frequency: f64,
    pub amplitude: f64,
    pub nu: f64,
    /// Phase of the displacement at `t = 0`.
    pub phase: f64,
    pub domain_length: f64,
    pub margin_cells: usize,
    pub rise_cells: usize,
}

impl Default for CylinderParams {
    fn default() -> Self {
        CylinderParams {
            diameter: 0.35,
            frequency: 1.0,
            amplitude: 0.27852,
            nu: 6.1249747e-3,
            phase: -0.5 * PI,
            domain_length: 2.0 * PI,
            margin_cells: 8,
            rise_cells: 6,
        }
    }
}

impl CylinderParams {
    /// Peak velocity `2 pi f A`.
    pub fn velocity_scale(&self) -> f64 {
        2.0 * PI * self.frequency * self.amplitude
    }

    pub fn keulegan_carpenter(&self) -> f64 {
        self.velocity_scale() / (self.frequency * self.diameter)
    }

    pub fn reynolds(&self) -> f64 {
        self.velocity_scale() * self.diameter / self.nu
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency
    }

    /// Grid centred on the mean cylinder position, so that grid rows mirror
    /// about the motion axis.
    pub fn grid(&self, n: usize) -> Result<Grid> {
        let l = self.domain_length;
        Grid::with_origin(n, n, l, l, [-0.5 * l, -0.5 * l])
    }

    pub fn window(&self, grid: &Grid) -> Result<WindowField> {
        let h = grid.dx1();
        build_window(grid, self.margin_cells as f64 * h, self.rise_cells as f64 * h)
    }

    pub fn body(&self) -> ImmersedBody {
        ImmersedBody::moving(
            Shape::circle([0.0, 0.0], 0.5 * self.diameter),
            Motion::Harmonic {
                axis: 0,
                amplitude: self.amplitude,
                frequency: self.frequency,
                phase: self.phase,
            },
        )
    }
}

/// Centre position and velocity of the cylinder at time `t`.
pub fn cylinder_state(p: &CylinderParams, t: f64) -> ([f64; 2], [f64; 2]) {
    let m = p.body().motion;
    (m.displacement(t), m.velocity(t))
}

/// Cavity layout in grid cells. Across: window, gap, wall, cavity, wall,
/// gap, window. Upward: window, gap, wall, cavity, lid strip, channel,
/// window. The gaps and the top channel form the side channel that carries
/// the return flow of the lid.
#[derive(Clone, Debug, PartialEq)]
pub struct CavityParams {
    pub lid_speed: f64,
    pub reynolds: f64,
    pub domain_length: f64,
    pub cavity_cells: usize,
    pub wall_cells: usize,
    pub gap_cells: usize,
    pub lid_cells: usize,
    pub channel_cells: usize,
    pub margin_cells: usize,
    pub rise_cells: usize,
}

impl Default for CavityParams {
    fn default() -> Self {
        CavityParams {
            lid_speed: 1.0,
            reynolds: 100.0,
            domain_length: 1.0,
            cavity_cells: 186,
            wall_cells: 8,
            gap_cells: 15,
            lid_cells: 4,
            channel_cells: 19,
            margin_cells: 6,
            rise_cells: 6,
        }
    }
}

impl CavityParams {
    /// The default layout rescaled to `n` points; the cavity and the top
    /// channel take up the rounding.
    pub fn scaled(n: usize) -> Self {
        let d = CavityParams::default();
        let f = n as f64 / 256.0;
        let s = |c: usize| ((c as f64 * f).round() as usize).max(2);
        let mut p = CavityParams {
            wall_cells: s(d.wall_cells),
            gap_cells: s(d.gap_cells),
            lid_cells: s(d.lid_cells),
            margin_cells: s(d.margin_cells),
            rise_cells: s(d.rise_cells),
            ..d
        };
        let edge = p.margin_cells + p.rise_cells;
        p.cavity_cells = n.saturating_sub(2 * (edge + p.gap_cells + p.wall_cells));
        p.channel_cells = n.saturating_sub(2 * edge + p.gap_cells + p.wall_cells + p.cavity_cells + p.lid_cells);
        p
    }

    fn edge_cells(&self) -> usize {
        self.margin_cells + self.rise_cells
    }

    /// Points the layout spans along each axis.
    pub fn extent(&self) -> (usize, usize) {
        let e = self.edge_cells();
        (
            2 * (e + self.gap_cells + self.wall_cells) + self.cavity_cells,
            2 * e + self.gap_cells + self.wall_cells + self.cavity_cells + self.lid_cells + self.channel_cells,
        )
    }

    /// Cavity side length on `grid`.
    pub fn cavity_side(&self, grid: &Grid) -> f64 {
        self.cavity_cells as f64 * grid.dx1()
    }

    /// `U L / Re`.
    pub fn nu(&self, grid: &Grid) -> f64 {
        self.lid_speed * self.cavity_side(grid) / self.reynolds
    }

    pub fn grid(&self, n: usize) -> Result<Grid> {
        Grid::square(n, self.domain_length)
    }
}

#[derive(Clone, Debug)]
pub struct CavityLayout {
    /// The lid strip first, then the U-shaped walls, so the walls win at the
    /// grid points the two share.
    pub bodies: Vec<ImmersedBody>,
    /// Lower-left and upper-right corners of the lid strip.
    pub lid: ([f64; 2], [f64; 2]),
    /// Lower-left and upper-right corners of the open cavity.
    pub cavity: ([f64; 2], [f64; 2]),
    pub window: WindowField,
}

pub fn build_cavity(p: &CavityParams, grid: &Grid) -> Result<CavityLayout> {
    if grid.n1() != grid.n2() || (grid.l1() - grid.l2()).abs() > 1e-12 * grid.l1() {
        return Err(Error::InvalidGrid("the cavity case needs a square grid".into()));
    }
    let n = grid.n1();
    if p.extent() != (n, n) {
        return Err(Error::Geometry(format!(
            "cavity layout spans {:?} cells but the grid has {n}",
            p.extent()
        )));
    }
    if p.gap_cells < 2 || p.channel_cells < 2 {
        return Err(Error::Geometry(format!(
            "side channel of {} / {} cells is narrower than 2",
            p.gap_cells, p.channel_cells
        )));
    }
    if p.wall_cells < 2 || p.lid_cells < 2 || p.cavity_cells < 4 {
        return Err(Error::Geometry("walls, lid and cavity need at least 2 cells each".into()));
    }
    let h = grid.dx1();
    let at = |c: usize| c as f64 * h;
    let x_wall = p.edge_cells() + p.gap_cells;
    let x_cav = x_wall + p.wall_cells;
    let x_cav_end = x_cav + p.cavity_cells;
    let x_end = x_cav_end + p.wall_cells;
    let y_wall = x_wall;
    let y_cav = y_wall + p.wall_cells;
    let y_lid = y_cav + p.cavity_cells;
    let y_lid_end = y_lid + p.lid_cells;

    let lid = ([at(x_wall), at(y_lid)], [at(x_end), at(y_lid_end)]);
    let walls = Shape::Union(vec![
        Shape::rect([at(x_wall), at(y_wall)], [at(x_cav), at(y_lid)]),
        Shape::rect([at(x_cav_end), at(y_wall)], [at(x_end), at(y_lid)]),
        Shape::rect([at(x_wall), at(y_wall)], [at(x_end), at(y_cav)]),
    ]);
    let bodies = vec![
        ImmersedBody::fixed(Shape::rect(lid.0, lid.1)).with_surface_velocity([p.lid_speed, 0.0]),
        ImmersedBody::fixed(walls),
    ];
    let window = build_window(grid, at(p.margin_cells), at(p.rise_cells))?;
    Ok(CavityLayout {
        bodies,
        lid,
        cavity: ([at(x_cav), at(y_cav)], [at(x_cav_end), at(y_lid)]),
        window,
    })
}

/// `2 exp(-2 nu t) sin x sin y` on the `2 pi` periodic square.
pub fn taylor_green_vorticity(grid: &Grid, nu: f64, t: f64) -> PhysicalField {
    let a = 2.0 * (-2.0 * nu * t).exp();
    PhysicalField::from_fn(grid, |x, y| a * x.sin() * y.sin())
}
