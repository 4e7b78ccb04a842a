use std::f64::consts::PI;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rustfft::{Fft, FftPlanner};

use super::fft::{PadMaps, Workspace};
use crate::error::{Error, Result};

/// Uniform periodic grid over a rectangle of size `l1 x l2`.
///
/// Cloning is cheap: the wavenumber tables, FFT plans and transform counters
/// are shared between clones.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    n1: usize,
    n2: usize,
    l1: f64,
    l2: f64,
    origin: [f64; 2],
    k1: Vec<f64>,
    k2: Vec<f64>,
    k1_odd: Vec<f64>,
    k2_odd: Vec<f64>,
    inv_laplacian: Vec<f64>,
    resolved: Vec<f64>,
    pub(crate) plans: Plans,
    pub(crate) padded: Plans,
    pad_maps: PadMaps,
    workspace: Mutex<Workspace>,
    counters: Counters,
}

pub(crate) struct Plans {
    pub(crate) n1: usize,
    pub(crate) n2: usize,
    pub(crate) fwd1: Arc<dyn Fft<f64>>,
    pub(crate) inv1: Arc<dyn Fft<f64>>,
    pub(crate) fwd2: Arc<dyn Fft<f64>>,
    pub(crate) inv2: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(planner: &mut FftPlanner<f64>, n1: usize, n2: usize) -> Self {
        Plans {
            n1,
            n2,
            fwd1: planner.plan_fft_forward(n1),
            inv1: planner.plan_fft_inverse(n1),
            fwd2: planner.plan_fft_forward(n2),
            inv2: planner.plan_fft_inverse(n2),
        }
    }
}

#[derive(Default)]
struct Counters {
    forward: AtomicU64,
    inverse: AtomicU64,
    padded_forward: AtomicU64,
    padded_inverse: AtomicU64,
}

/// Number of 2D transforms of real fields performed on a grid.
///
/// A pair-packed transform of two real fields counts as two.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct TransformCount {
    pub forward: u64,
    pub inverse: u64,
    pub padded_forward: u64,
    pub padded_inverse: u64,
}

impl TransformCount {
    pub fn unpadded(&self) -> u64 {
        self.forward + self.inverse
    }

    pub fn padded(&self) -> u64 {
        self.padded_forward + self.padded_inverse
    }

    pub fn total(&self) -> u64 {
        self.unpadded() + self.padded()
    }
}

impl std::ops::Sub for TransformCount {
    type Output = TransformCount;

    fn sub(self, rhs: Self) -> Self {
        TransformCount {
            forward: self.forward - rhs.forward,
            inverse: self.inverse - rhs.inverse,
            padded_forward: self.padded_forward - rhs.padded_forward,
            padded_inverse: self.padded_inverse - rhs.padded_inverse,
        }
    }
}

/// Signed integer mode number of storage index `i` on an axis of `n` points.
/// The Nyquist index `n/2` maps to `-n/2`.
#[inline]
pub fn mode_number(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Storage index of mode `m` on an axis of `n` points.
#[inline]
pub fn mode_index(m: i64, n: usize) -> usize {
    m.rem_euclid(n as i64) as usize
}

/// Smallest size `>= n` whose only prime factors are 2, 3, 5 and 7.
pub fn fast_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Padded size used by the 3/2 rule. One point beyond `3n/2` keeps the
/// product of two Nyquist modes from aliasing onto the retained Nyquist mode.
pub fn padded_size(n: usize) -> usize {
    fast_size((3 * n).div_ceil(2) + 1)
}

impl Grid {
    /// Grid with its first point at the origin.
    pub fn new(n1: usize, n2: usize, l1: f64, l2: f64) -> Result<Self> {
        Self::with_origin(n1, n2, l1, l2, [0.0, 0.0])
    }

    pub fn square(n: usize, l: f64) -> Result<Self> {
        Self::new(n, n, l, l)
    }

    /// Grid whose point `(0, 0)` sits at `origin`.
    pub fn with_origin(n1: usize, n2: usize, l1: f64, l2: f64, origin: [f64; 2]) -> Result<Self> {
        for (name, n) in [("n1", n1), ("n2", n2)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be even and at least 8"
                )));
            }
        }
        for (name, l) in [("l1", l1), ("l2", l2)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} = {l} must be positive")));
            }
        }
        if !origin.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }

        let wavenumbers = |n: usize, l: f64, drop_nyquist: bool| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    if drop_nyquist && i == n / 2 {
                        0.0
                    } else {
                        2.0 * PI / l * mode_number(i, n) as f64
                    }
                })
                .collect()
        };

        let (k1_odd, k2_odd) = (wavenumbers(n1, l1, true), wavenumbers(n2, l2, true));
        let k1_full = wavenumbers(n1, l1, false);
        let k2_full = wavenumbers(n2, l2, false);
        let nyquist = |k: &[f64], ko: &[f64], i: usize| k[i] != 0.0 && ko[i] == 0.0;
        let resolved: Vec<f64> = (0..n1)
            .flat_map(|i1| (0..n2).map(move |i2| (i1, i2)))
            .map(|(i1, i2)| {
                let edge = nyquist(&k1_full, &k1_odd, i1) || nyquist(&k2_full, &k2_odd, i2);
                if edge { 0.0 } else { 1.0 }
            })
            .collect();
        let inv_laplacian = k1_odd
            .iter()
            .flat_map(|a| k2_odd.iter().map(move |b| a * a + b * b))
            .zip(&resolved)
            .map(|(kk, &r)| if kk == 0.0 { 0.0 } else { r / kk })
            .collect();

        let mut planner = FftPlanner::new();
        let plans = Plans::new(&mut planner, n1, n2);
        let padded = Plans::new(&mut planner, padded_size(n1), padded_size(n2));

        Ok(Grid {
            inner: Arc::new(GridInner {
                n1,
                n2,
                l1,
                l2,
                origin,
                k1: wavenumbers(n1, l1, false),
                k2: wavenumbers(n2, l2, false),
                k1_odd,
                k2_odd,
                inv_laplacian,
                resolved,
                pad_maps: PadMaps::new(n1, n2, padded.n1, padded.n2),
                workspace: Mutex::new(Workspace::new(&plans, &padded)),
                plans,
                padded,
                counters: Counters::default(),
            }),
        })
    }

    pub fn n1(&self) -> usize {
        self.inner.n1
    }

    pub fn n2(&self) -> usize {
        self.inner.n2
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.inner.n1 * self.inner.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn l1(&self) -> f64 {
        self.inner.l1
    }

    pub fn l2(&self) -> f64 {
        self.inner.l2
    }

    pub fn dx1(&self) -> f64 {
        self.inner.l1 / self.inner.n1 as f64
    }

    pub fn dx2(&self) -> f64 {
        self.inner.l2 / self.inner.n2 as f64
    }

    pub fn min_spacing(&self) -> f64 {
        self.dx1().min(self.dx2())
    }

    pub fn cell_area(&self) -> f64 {
        self.dx1() * self.dx2()
    }

    pub fn origin(&self) -> [f64; 2] {
        self.inner.origin
    }

    /// Physical-layout index of grid point `(i, j)`; `x1` varies fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.inner.n1 + i
    }

    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        self.inner.origin[0] + i as f64 * self.dx1()
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        self.inner.origin[1] + j as f64 * self.dx2()
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x1(i), self.x2(j)]
    }

    /// Wavenumbers along `x1`, indexed by storage index, Nyquist negative.
    pub fn k1(&self) -> &[f64] {
        &self.inner.k1
    }

    pub fn k2(&self) -> &[f64] {
        &self.inner.k2
    }

    /// Wavenumbers used for odd (first-derivative) operators: the Nyquist
    /// entry is zero so derivatives of real fields stay real.
    pub fn k1_odd(&self) -> &[f64] {
        &self.inner.k1_odd
    }

    pub fn k2_odd(&self) -> &[f64] {
        &self.inner.k2_odd
    }

    /// `1 / |k|^2` over the odd-derivative wavenumbers, zero where `|k| = 0`
    /// and on the Nyquist row and column.
    pub(crate) fn inv_laplacian(&self) -> &[f64] {
        &self.inner.inv_laplacian
    }

    /// 1 for modes with neither wavenumber at the Nyquist frequency, else 0.
    pub(crate) fn resolved(&self) -> &[f64] {
        &self.inner.resolved
    }

    /// Builds a spectral array row by row: `f(k1, k2_row, start, out)` must
    /// push one value per entry of `k2_row`; `start` is the storage index of
    /// the row's first mode.
    pub(crate) fn build_rows<T>(&self, odd: bool, mut f: impl FnMut(f64, &[f64], usize, &mut Vec<T>)) -> Vec<T> {
        let (k1, k2) = if odd { (self.k1_odd(), self.k2_odd()) } else { (self.k1(), self.k2()) };
        let mut out = Vec::with_capacity(self.len());
        for (i1, &a) in k1.iter().enumerate() {
            f(a, k2, i1 * k2.len(), &mut out);
        }
        out
    }

    /// Largest retained integer mode number on each axis.
    pub fn max_modes(&self) -> (usize, usize) {
        (self.inner.n1 / 2, self.inner.n2 / 2)
    }

    pub fn padded_dims(&self) -> (usize, usize) {
        (self.inner.padded.n1, self.inner.padded.n2)
    }

    pub(crate) fn plans(&self) -> &Plans {
        &self.inner.plans
    }

    pub(crate) fn padded_plans(&self) -> &Plans {
        &self.inner.padded
    }

    pub(crate) fn pad_maps(&self) -> &PadMaps {
        &self.inner.pad_maps
    }

    pub(crate) fn workspace(&self) -> &Mutex<Workspace> {
        &self.inner.workspace
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self == other
    }

    pub fn transform_count(&self) -> TransformCount {
        let c = &self.inner.counters;
        TransformCount {
            forward: c.forward.load(Ordering::Relaxed),
            inverse: c.inverse.load(Ordering::Relaxed),
            padded_forward: c.padded_forward.load(Ordering::Relaxed),
            padded_inverse: c.padded_inverse.load(Ordering::Relaxed),
        }
    }

    pub(crate) fn count_forward(&self, fields: u64, padded: bool) {
        let c = &self.inner.counters;
        let counter = if padded { &c.padded_forward } else { &c.forward };
        counter.fetch_add(fields, Ordering::Relaxed);
    }

    pub(crate) fn count_inverse(&self, fields: u64, padded: bool) {
        let c = &self.inner.counters;
        let counter = if padded { &c.padded_inverse } else { &c.inverse };
        counter.fetch_add(fields, Ordering::Relaxed);
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (&self.inner, &other.inner);
        a.n1 == b.n1 && a.n2 == b.n2 && a.l1 == b.l1 && a.l2 == b.l2 && a.origin == b.origin
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n1", &self.inner.n1)
            .field("n2", &self.inner.n2)
            .field("l1", &self.inner.l1)
            .field("l2", &self.inner.l2)
            .field("origin", &self.inner.origin)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_tiny_grids() {
        assert!(Grid::new(7, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(6, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(8, 8, 0.0, 1.0).is_err());
        assert!(Grid::new(8, 8, 1.0, 1.0).is_ok());
    }

    #[test]
    fn spacing_is_exact_ratio() {
        let g = Grid::new(64, 32, 3.0, 2.0).unwrap();
        assert_eq!(g.dx1(), 3.0 / 64.0);
        assert_eq!(g.dx2(), 2.0 / 32.0);
    }

    #[test]
    fn wavenumber_tables() {
        let g = Grid::square(8, 2.0 * PI).unwrap();
        let m: Vec<i64> = (0..8).map(|i| mode_number(i, 8)).collect();
        assert_eq!(m, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.k1()[4] + 4.0).abs() < 1e-14);
        assert_eq!(g.k1_odd()[4], 0.0);
        for i in 0..8 {
            assert_eq!(mode_index(mode_number(i, 8), 8), i);
        }
    }

    #[test]
    fn padded_sizes() {
        for (n, p) in [(16, 25), (64, 98), (128, 196), (256, 392), (512, 784)] {
            assert_eq!(padded_size(n), p);
        }
        assert_eq!(fast_size(97), 98);
        assert_eq!(fast_size(11), 12);
    }
}
