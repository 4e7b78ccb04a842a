//! Integral monitors and error norms.

use num_complex::Complex64;
use serde::Serialize;

use crate::boundary::WindowField;
use crate::error::{Error, Result};
use crate::geometry::{fluid_mask, ImmersedBody};
use crate::spectral::{divergence_spectral, forward, inverse, mode_index, mode_number, Grid, PhysicalField, SpectralField};

/// One row of the diagnostics stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub step: u64,
    pub time: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub cfl: f64,
    pub max_divergence: f64,
    pub mean_vorticity: f64,
    pub bc_residual: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str = "step,time,E,Z,CFL,max_div,mean_vorticity,bc_residual";

    pub fn csv_row(&self) -> String {
        let cols = [
            self.time,
            self.energy,
            self.enstrophy,
            self.cfl,
            self.max_divergence,
            self.mean_vorticity,
            self.bc_residual,
        ];
        let mut row = self.step.to_string();
        for v in cols {
            row.push(',');
            row.push_str(&csv_number(v));
        }
        row
    }

    pub fn is_finite(&self) -> bool {
        [
            self.time,
            self.energy,
            self.enstrophy,
            self.cfl,
            self.max_divergence,
            self.mean_vorticity,
            self.bc_residual,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Shortest round-trip text of `v`, in exponent form when plain decimals
/// would be long.
fn csv_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e7).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn masked_sum(mask: &PhysicalField, f: impl Fn(usize) -> f64) -> f64 {
    mask.values()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m != 0.0)
        .map(|(k, &m)| m * f(k))
        .sum()
}

/// `1/2 * integral over the mask of |u|^2`, rectangle rule.
pub fn energy(u1: &PhysicalField, u2: &PhysicalField, mask: &PhysicalField) -> f64 {
    let (a, b) = (u1.values(), u2.values());
    0.5 * mask.grid().cell_area() * masked_sum(mask, |k| a[k] * a[k] + b[k] * b[k])
}

/// `1/2 * integral over the mask of omega^2`, rectangle rule.
pub fn enstrophy(omega: &PhysicalField, mask: &PhysicalField) -> f64 {
    let w = omega.values();
    0.5 * mask.grid().cell_area() * masked_sum(mask, |k| w[k] * w[k])
}

pub fn mean_vorticity(omega_hat: &SpectralField) -> f64 {
    omega_hat.mean_mode().re
}

/// Largest pointwise divergence of a spectral velocity.
pub fn max_divergence(u1: &SpectralField, u2: &SpectralField) -> Result<f64> {
    Ok(inverse(&divergence_spectral(u1, u2)?).max_abs())
}

/// Indicator of the flow region: outside every body and outside the wall
/// margin. The rise band of the window counts as flow.
pub fn flow_mask(window: &WindowField, bodies: &[ImmersedBody], t: f64) -> PhysicalField {
    let fluid = fluid_mask(window.grid(), bodies, t);
    fluid
        .zip_with(&window.rho, |f, r| if f > 0.0 && r >= 1e-12 { 1.0 } else { 0.0 })
        .expect("same grid")
}

/// Indicator of the interior flow region: outside every body where the
/// window is fully on. Grids that share a flow box share this region.
pub fn interior_mask(window: &WindowField, bodies: &[ImmersedBody], t: f64) -> PhysicalField {
    let fluid = fluid_mask(window.grid(), bodies, t);
    fluid
        .zip_with(&window.rho, |f, r| if f > 0.0 && r >= 1.0 - 1e-12 { 1.0 } else { 0.0 })
        .expect("same grid")
}

/// Checks that `coarse` samples a subset of the points of `fine`.
fn check_nested(fine: &Grid, coarse: &Grid) -> Result<()> {
    let same_box = fine.l1() == coarse.l1() && fine.l2() == coarse.l2() && fine.origin() == coarse.origin();
    if !same_box {
        return Err(Error::NonNested("grids cover different domains".into()));
    }
    if fine.n1() % coarse.n1() != 0 || fine.n2() % coarse.n2() != 0 {
        return Err(Error::NonNested(format!(
            "{}x{} is not a refinement of {}x{}",
            fine.n1(),
            fine.n2(),
            coarse.n1(),
            coarse.n2()
        )));
    }
    Ok(())
}

/// Spectral truncation of `fine` onto `coarse`; the two images of each
/// coarse Nyquist mode are summed.
pub fn restrict(fine: &PhysicalField, coarse: &Grid) -> Result<PhysicalField> {
    let fg = fine.grid();
    check_nested(fg, coarse)?;
    if fg.same_as(coarse) {
        return Ok(fine.clone());
    }
    let spec = forward(fine);
    let mut out = SpectralField::zeros(coarse);
    let (n1, n2) = (coarse.n1(), coarse.n2());
    for i1 in 0..n1 {
        let m1 = mode_number(i1, n1);
        let m1s: &[i64] = if m1 == -(n1 as i64) / 2 { &[m1, -m1] } else { &[m1] };
        for i2 in 0..n2 {
            let m2 = mode_number(i2, n2);
            let m2s: &[i64] = if m2 == -(n2 as i64) / 2 { &[m2, -m2] } else { &[m2] };
            let mut c = Complex64::new(0.0, 0.0);
            for &a in m1s {
                for &b in m2s {
                    c += spec.raw()[mode_index(a, fg.n1()) * fg.n2() + mode_index(b, fg.n2())];
                }
            }
            out.raw_mut()[i1 * n2 + i2] = c;
        }
    }
    Ok(inverse(&out))
}

/// Normalised L2 error `||ref - omega||_2 / ||ref||_inf` over the mask,
/// evaluated on the grid of `omega` after truncating `omega_ref` onto it.
pub fn error_norm(omega_ref: &PhysicalField, omega: &PhysicalField, mask: &PhysicalField) -> Result<f64> {
    let r = restrict(omega_ref, omega.grid())?;
    if !mask.grid().same_as(omega.grid()) {
        return Err(Error::GridMismatch);
    }
    let (a, b) = (r.values(), omega.values());
    let l2 = (mask.grid().cell_area() * masked_sum(mask, |k| (a[k] - b[k]).powi(2))).sqrt();
    let scale = omega_ref.max_abs();
    if scale == 0.0 {
        return Ok(l2);
    }
    Ok(l2 / scale)
}

/// Least-squares slope of `log(error)` against `log(x)`.
pub fn fitted_slope(xs: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(errors).map(|(x, e)| (x.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    num / den
}
