use num_complex::Complex64;

use super::fft::{padded_forward, padded_inverse_pair, PaddedField};
use super::field::{check_same, SpectralField};
use crate::error::Result;

/// Multiplies by `i`.
#[inline]
fn times_i(c: Complex64) -> Complex64 {
    Complex64::new(-c.im, c.re)
}

/// Solenoidal, zero-mean velocity whose curl is `omega`.
///
/// Solves the Poisson problem in Fourier space: `u = -i k_perp omega / |k|^2`
/// with `k_perp = (-k2, k1)`. The mean mode and every mode on the Nyquist
/// row or column map to zero.
pub fn velocity_from_vorticity(omega: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = omega.grid();
    let w = omega.raw();
    let inv = grid.inv_laplacian();
    let u1 = grid.build_rows(true, |_, k2, s, out| {
        let e = s + k2.len();
        out.extend(w[s..e].iter().zip(&inv[s..e]).zip(k2).map(|((&c, &q), &b)| times_i(c) * (q * b)));
    });
    let u2 = grid.build_rows(true, |a, k2, s, out| {
        let e = s + k2.len();
        out.extend(w[s..e].iter().zip(&inv[s..e]).map(|(&c, &q)| times_i(c) * (-q * a)));
    });
    (SpectralField::from_raw(grid, u1), SpectralField::from_raw(grid, u2))
}

/// Vorticity `i (k1 u2 - k2 u1)` of a spectral velocity.
pub fn curl_spectral(u1: &SpectralField, u2: &SpectralField) -> Result<SpectralField> {
    check_same(u1.grid(), u2.grid())?;
    let grid = u1.grid();
    let out = grid.build_rows(true, |k1, k2, s, out| {
        let n = k2.len();
        let rows = u1.raw()[s..s + n].iter().zip(&u2.raw()[s..s + n]);
        out.extend(rows.zip(k2).map(|((a, b), &k2)| times_i(b * k1 - a * k2)));
    });
    Ok(SpectralField::from_raw(grid, out))
}

/// Divergence `i (k1 u1 + k2 u2)` of a spectral velocity.
pub fn divergence_spectral(u1: &SpectralField, u2: &SpectralField) -> Result<SpectralField> {
    check_same(u1.grid(), u2.grid())?;
    let grid = u1.grid();
    let out = grid.build_rows(true, |k1, k2, s, out| {
        let n = k2.len();
        let rows = u1.raw()[s..s + n].iter().zip(&u2.raw()[s..s + n]);
        out.extend(rows.zip(k2).map(|((a, b), &k2)| times_i(a * k1 + b * k2)));
    });
    Ok(SpectralField::from_raw(grid, out))
}

/// Spectral derivative along `x1` (`axis = 0`) or `x2` (`axis = 1`).
pub fn derivative(f: &SpectralField, axis: usize) -> SpectralField {
    let grid = f.grid();
    let out = grid.build_rows(true, |k1, k2, s, out| {
        let row = f.raw()[s..s + k2.len()].iter().zip(k2);
        out.extend(row.map(|(&c, &k2)| times_i(c) * if axis == 0 { k1 } else { k2 }));
    });
    SpectralField::from_raw(grid, out)
}

/// Coefficients of the pointwise product `f g` with 3/2-rule dealiasing.
pub fn dealiased_product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    check_same(f.grid(), g.grid())?;
    let (pf, pg) = padded_inverse_pair(f, g)?;
    let values = pf.values.iter().zip(&pg.values).map(|(a, b)| a * b).collect();
    Ok(padded_forward(f.grid(), &PaddedField { values }))
}
