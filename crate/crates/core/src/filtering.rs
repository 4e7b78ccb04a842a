//! Helmholtz low-pass filter, applied to results after a run.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Filter strength given through the dimensionless factor `c_alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterSpec {
    pub c_alpha: f64,
    pub alpha: f64,
}

impl FilterSpec {
    /// Uses `l1` as the domain length.
    pub fn for_grid(c_alpha: f64, grid: &Grid) -> Result<Self> {
        let alpha = alpha_from_c_alpha(c_alpha, grid.l1(), grid)?;
        Ok(FilterSpec { c_alpha, alpha })
    }
}

/// `phi / (1 + alpha^2 |k|^2)` mode by mode.
pub fn helmholtz_filter(phi: &SpectralField, alpha: f64) -> SpectralField {
    let a2 = alpha * alpha;
    phi.map_k(|k1, k2, c| c / (1.0 + a2 * (k1 * k1 + k2 * k2)))
}

/// `alpha = (2 pi / L) / (c_alpha k_max)`, with `k_max` the length of the
/// largest retained integer mode vector `(n1/2, n2/2)`.
pub fn alpha_from_c_alpha(c_alpha: f64, l: f64, grid: &Grid) -> Result<f64> {
    if !(c_alpha.is_finite() && c_alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("c_alpha = {c_alpha} must be positive")));
    }
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::InvalidParameter(format!("domain length {l} must be positive")));
    }
    let (m1, m2) = grid.max_modes();
    let k_max = (m1 as f64).hypot(m2 as f64);
    Ok(2.0 * PI / l / (c_alpha * k_max))
}
