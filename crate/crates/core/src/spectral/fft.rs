//! 2D transforms built from rustfft 1D plans.
//!
//! Real fields are transformed through complex FFTs; two real fields are
//! packed into one complex transform whenever both are needed.

use num_complex::Complex64;

use super::field::{check_same, PhysicalField, SpectralField};
use super::grid::{mode_index, mode_number, Grid, Plans};
use crate::error::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Reusable buffers of one grid. The padded spectrum buffer keeps every row
/// that the coarse modes do not reach at zero between calls.
pub(crate) struct Workspace {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    pad_spec: Vec<Complex64>,
    pad_a: Vec<Complex64>,
    pad_b: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Workspace {
    pub(crate) fn new(plans: &Plans, padded: &Plans) -> Self {
        let len = [plans, padded]
            .iter()
            .flat_map(|p| [&p.fwd1, &p.inv1, &p.fwd2, &p.inv2])
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Workspace {
            a: Vec::new(),
            b: Vec::new(),
            pad_spec: vec![ZERO; padded.n1 * padded.n2],
            pad_a: Vec::new(),
            pad_b: Vec::new(),
            scratch: vec![ZERO; len],
        }
    }
}

/// Resizes without touching existing contents; callers overwrite fully.
fn sized(v: &mut Vec<Complex64>, len: usize) -> &mut [Complex64] {
    v.resize(len, ZERO);
    &mut v[..]
}

#[inline]
fn mirror_index(i: usize, n: usize) -> usize {
    if i == 0 {
        0
    } else {
        n - i
    }
}

/// Forward pass: `data` holds `p.n2` rows of length `p.n1`; `out` receives
/// `p.n1` rows of length `p.n2`. Only rows flagged in `rows` get the second
/// pass.
fn fft2_forward(p: &Plans, data: &mut [Complex64], out: &mut [Complex64], scratch: &mut [Complex64], rows: Option<&[bool]>) {
    p.fwd1.process_with_scratch(data, scratch);
    transpose::transpose(data, out, p.n1, p.n2);
    match rows {
        None => p.fwd2.process_with_scratch(out, scratch),
        Some(r) => {
            for (row, _) in out.chunks_exact_mut(p.n2).zip(r).filter(|(_, &f)| f) {
                p.fwd2.process_with_scratch(row, scratch);
            }
        }
    }
}

/// Inverse of [`fft2_forward`]. Rows of `spec` not flagged in `rows` must be
/// zero and are skipped.
fn fft2_inverse(p: &Plans, spec: &mut [Complex64], out: &mut [Complex64], scratch: &mut [Complex64], rows: Option<&[bool]>) {
    match rows {
        None => p.inv2.process_with_scratch(spec, scratch),
        Some(r) => {
            for (row, _) in spec.chunks_exact_mut(p.n2).zip(r).filter(|(_, &f)| f) {
                p.inv2.process_with_scratch(row, scratch);
            }
        }
    }
    transpose::transpose(spec, out, p.n2, p.n1);
    p.inv1.process_with_scratch(out, scratch);
}

/// Splits the transform `z` of `f + i g` into the transforms of `f` and `g`,
/// each scaled by `s`. With `want_g = false` this projects onto the
/// conjugate-symmetric part.
fn separate(z: &[Complex64], n1: usize, n2: usize, s: f64, want_g: bool) -> (Vec<Complex64>, Vec<Complex64>) {
    let h = 0.5 * s;
    // Pairs each coefficient with the conjugate of its mirror image.
    let pairs = |i1: usize| {
        let row = &z[i1 * n2..(i1 + 1) * n2];
        let m = mirror_index(i1, n1) * n2;
        let mrow = &z[m..m + n2];
        let first = std::iter::once((row[0], mrow[0].conj()));
        first.chain(row[1..].iter().zip(mrow[1..].iter().rev()).map(|(&a, b)| (a, b.conj())))
    };
    let mut f = Vec::with_capacity(z.len());
    for i1 in 0..n1 {
        f.extend(pairs(i1).map(|(a, b)| (a + b) * h));
    }
    let mut g = Vec::new();
    if want_g {
        g.reserve_exact(z.len());
        for i1 in 0..n1 {
            g.extend(pairs(i1).map(|(a, b)| {
                let d = (a - b) * h;
                Complex64::new(d.im, -d.re)
            }));
        }
    }
    (f, g)
}

fn with_workspace<T>(grid: &Grid, f: impl FnOnce(&mut Workspace) -> T) -> T {
    let mut ws = grid.workspace().lock().unwrap_or_else(|e| e.into_inner());
    f(&mut ws)
}

fn forward_impl(f: &PhysicalField, g: Option<&PhysicalField>) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = f.grid();
    let p = grid.plans();
    with_workspace(grid, |ws| {
        let n = grid.len();
        let data = sized(&mut ws.a, n);
        match g {
            Some(g) => {
                for ((d, &x), &y) in data.iter_mut().zip(f.values()).zip(g.values()) {
                    *d = Complex64::new(x, y);
                }
            }
            None => {
                for (d, &x) in data.iter_mut().zip(f.values()) {
                    *d = Complex64::new(x, 0.0);
                }
            }
        }
        let out = sized(&mut ws.b, n);
        fft2_forward(p, data, out, &mut ws.scratch, None);
        separate(out, grid.n1(), grid.n2(), 1.0 / n as f64, g.is_some())
    })
}

/// Forward transform of a real field. The `(0, 0)` coefficient is the mean.
pub fn forward(f: &PhysicalField) -> SpectralField {
    let (spec, _) = forward_impl(f, None);
    f.grid().count_forward(1, false);
    SpectralField::from_raw(f.grid(), spec)
}

/// Forward transforms of two real fields through one complex FFT.
pub fn forward_pair(f: &PhysicalField, g: &PhysicalField) -> Result<(SpectralField, SpectralField)> {
    let grid = f.grid();
    check_same(grid, g.grid())?;
    let (a, b) = forward_impl(f, Some(g));
    grid.count_forward(2, false);
    Ok((SpectralField::from_raw(grid, a), SpectralField::from_raw(grid, b)))
}

fn inverse_impl(f: &SpectralField, g: Option<&SpectralField>) -> (Vec<f64>, Vec<f64>) {
    let grid = f.grid();
    let p = grid.plans();
    with_workspace(grid, |ws| {
        let n = grid.len();
        let spec = sized(&mut ws.a, n);
        match g {
            Some(g) => {
                for ((d, &a), &b) in spec.iter_mut().zip(f.raw()).zip(g.raw()) {
                    *d = a + Complex64::new(-b.im, b.re);
                }
            }
            None => spec.copy_from_slice(f.raw()),
        }
        let out = sized(&mut ws.b, n);
        fft2_inverse(p, spec, out, &mut ws.scratch, None);
        let re = out.iter().map(|c| c.re).collect();
        let im = if g.is_some() { out.iter().map(|c| c.im).collect() } else { Vec::new() };
        (re, im)
    })
}

/// Inverse transform; returns the real part.
pub fn inverse(f: &SpectralField) -> PhysicalField {
    let (re, _) = inverse_impl(f, None);
    f.grid().count_inverse(1, false);
    PhysicalField::from_values(f.grid(), re).expect("inverse transform preserves size")
}

/// Inverse transforms of two conjugate-symmetric spectra through one
/// complex FFT.
pub fn inverse_pair(f: &SpectralField, g: &SpectralField) -> Result<(PhysicalField, PhysicalField)> {
    let grid = f.grid();
    check_same(grid, g.grid())?;
    let (re, im) = inverse_impl(f, Some(g));
    grid.count_inverse(2, false);
    Ok((PhysicalField::from_values(grid, re)?, PhysicalField::from_values(grid, im)?))
}

/// Where each coarse storage index of one axis lands on the padded axis.
/// The Nyquist mode has two images, `-n/2` and `+n/2`.
fn axis_map(n: usize, m: usize) -> Vec<(usize, Option<usize>)> {
    (0..n)
        .map(|i| {
            let k = mode_number(i, n);
            if k == -(n as i64) / 2 {
                (mode_index(k, m), Some(mode_index(-k, m)))
            } else {
                (mode_index(k, m), None)
            }
        })
        .collect()
}

/// Samples of real fields on the padded grid used by dealiased products.
/// Layout matches [`PhysicalField`] with dimensions `grid.padded_dims()`.
#[derive(Clone, Debug)]
pub struct PaddedField {
    pub values: Vec<f64>,
}

pub(crate) struct PadMaps {
    a1: Vec<(usize, Option<usize>)>,
    a2: Vec<(usize, Option<usize>)>,
    rows: Vec<bool>,
}

impl PadMaps {
    pub(crate) fn new(n1: usize, n2: usize, m1: usize, m2: usize) -> Self {
        let a1 = axis_map(n1, m1);
        let a2 = axis_map(n2, m2);
        let mut rows = vec![false; m1];
        for &(p, q) in &a1 {
            rows[p] = true;
            if let Some(q) = q {
                rows[q] = true;
            }
        }
        PadMaps { a1, a2, rows }
    }
}

/// Writes the padded spectrum of `f + i g` into the flagged rows of `out`,
/// splitting Nyquist coefficients evenly between their two padded images so
/// the padded spectrum stays conjugate-symmetric.
fn pad(grid: &Grid, maps: &PadMaps, f: &SpectralField, g: Option<&SpectralField>, out: &mut [Complex64]) {
    let (_, m2) = grid.padded_dims();
    let n2 = grid.n2();
    for (row, _) in out.chunks_exact_mut(m2).zip(&maps.rows).filter(|(_, &f)| f) {
        row.fill(ZERO);
    }
    for (i1, &(p1, q1)) in maps.a1.iter().enumerate() {
        let fr = &f.raw()[i1 * n2..(i1 + 1) * n2];
        let w1 = if q1.is_some() { 0.5 } else { 1.0 };
        for (i2, &(p2, q2)) in maps.a2.iter().enumerate() {
            let mut c = fr[i2];
            if let Some(g) = g {
                let b = g.raw()[i1 * n2 + i2];
                c += Complex64::new(-b.im, b.re);
            }
            let w = w1 * if q2.is_some() { 0.5 } else { 1.0 };
            let c = c * w;
            for r in std::iter::once(p1).chain(q1) {
                let row = &mut out[r * m2..(r + 1) * m2];
                row[p2] += c;
                if let Some(q2) = q2 {
                    row[q2] += c;
                }
            }
        }
    }
}

/// Inverse of [`pad`] for the retained modes: Nyquist images are summed.
fn truncate(grid: &Grid, maps: &PadMaps, z: &[Complex64], out: &mut [Complex64]) {
    let (_, m2) = grid.padded_dims();
    let n2 = grid.n2();
    for (i1, &(p1, q1)) in maps.a1.iter().enumerate() {
        let orow = &mut out[i1 * n2..(i1 + 1) * n2];
        let prow = &z[p1 * m2..(p1 + 1) * m2];
        let qrow = q1.map(|q| &z[q * m2..(q + 1) * m2]);
        for (o, &(p2, q2)) in orow.iter_mut().zip(&maps.a2) {
            let mut c = prow[p2];
            if let Some(q2) = q2 {
                c += prow[q2];
            }
            if let Some(qr) = qrow {
                c += qr[p2];
                if let Some(q2) = q2 {
                    c += qr[q2];
                }
            }
            *o = c;
        }
    }
}

fn padded_inverse_impl(f: &SpectralField, g: Option<&SpectralField>) -> (PaddedField, PaddedField) {
    let grid = f.grid();
    let p = grid.padded_plans();
    let maps = grid.pad_maps();
    with_workspace(grid, |ws| {
        let (m1, m2) = grid.padded_dims();
        pad(grid, maps, f, g, &mut ws.pad_spec);
        let out = sized(&mut ws.pad_a, m1 * m2);
        fft2_inverse(p, &mut ws.pad_spec, out, &mut ws.scratch, Some(&maps.rows));
        let re = out.iter().map(|c| c.re).collect();
        let im = if g.is_some() { out.iter().map(|c| c.im).collect() } else { Vec::new() };
        (PaddedField { values: re }, PaddedField { values: im })
    })
}

/// Inverse transforms of two spectra onto the padded grid.
pub fn padded_inverse_pair(f: &SpectralField, g: &SpectralField) -> Result<(PaddedField, PaddedField)> {
    check_same(f.grid(), g.grid())?;
    let out = padded_inverse_impl(f, Some(g));
    f.grid().count_inverse(2, true);
    Ok(out)
}

pub fn padded_inverse(f: &SpectralField) -> PaddedField {
    let (re, _) = padded_inverse_impl(f, None);
    f.grid().count_inverse(1, true);
    re
}

fn padded_forward_impl(grid: &Grid, a: &PaddedField, b: Option<&PaddedField>) -> (Vec<Complex64>, Vec<Complex64>) {
    let p = grid.padded_plans();
    let maps = grid.pad_maps();
    with_workspace(grid, |ws| {
        let (m1, m2) = grid.padded_dims();
        let data = sized(&mut ws.pad_a, m1 * m2);
        match b {
            Some(b) => {
                for ((d, &x), &y) in data.iter_mut().zip(&a.values).zip(&b.values) {
                    *d = Complex64::new(x, y);
                }
            }
            None => {
                for (d, &x) in data.iter_mut().zip(&a.values) {
                    *d = Complex64::new(x, 0.0);
                }
            }
        }
        let z = sized(&mut ws.pad_b, m1 * m2);
        fft2_forward(p, data, z, &mut ws.scratch, Some(&maps.rows));
        let t = sized(&mut ws.a, grid.len());
        truncate(grid, maps, z, t);
        separate(t, grid.n1(), grid.n2(), 1.0 / (m1 * m2) as f64, b.is_some())
    })
}

/// Forward transform of padded samples, truncated to the grid's modes.
pub fn padded_forward(grid: &Grid, a: &PaddedField) -> SpectralField {
    let (f, _) = padded_forward_impl(grid, a, None);
    grid.count_forward(1, true);
    SpectralField::from_raw(grid, f)
}

pub fn padded_forward_pair(grid: &Grid, a: &PaddedField, b: &PaddedField) -> (SpectralField, SpectralField) {
    let (f, g) = padded_forward_impl(grid, a, Some(b));
    grid.count_forward(2, true);
    (SpectralField::from_raw(grid, f), SpectralField::from_raw(grid, g))
}
