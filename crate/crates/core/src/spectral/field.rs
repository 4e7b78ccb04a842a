use num_complex::Complex64;

use super::grid::{mode_index, Grid};
use crate::error::{Error, Result};

/// Real samples on the grid, `x1` varying fastest.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    grid: Grid,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        PhysicalField {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(PhysicalField {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.n2() {
            let y = grid.x2(j);
            for i in 0..grid.n1() {
                values.push(f(grid.x1(i), y));
            }
        }
        PhysicalField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PhysicalField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        Ok(PhysicalField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// Fourier coefficients of a real field on the full `n1 x n2` mode grid.
///
/// Coefficients are normalised so the `(0, 0)` entry is the field mean.
/// Storage is transposed relative to [`PhysicalField`] (the `m2` index
/// varies fastest); use [`SpectralField::get`] and friends for access.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid) -> Self {
        SpectralField {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub(crate) fn from_raw(grid: &Grid, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        SpectralField {
            grid: grid.clone(),
            coeffs,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Raw coefficient storage, index `i1 * n2 + i2` for storage indices
    /// `i1`, `i2` of the two axes.
    pub fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn raw_index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.grid.n2() + i2
    }

    /// Coefficient of integer modes `(m1, m2)`; negative modes wrap.
    pub fn get(&self, m1: i64, m2: i64) -> Complex64 {
        let i1 = mode_index(m1, self.grid.n1());
        let i2 = mode_index(m2, self.grid.n2());
        self.coeffs[self.raw_index(i1, i2)]
    }

    pub fn set(&mut self, m1: i64, m2: i64, c: Complex64) {
        let i1 = mode_index(m1, self.grid.n1());
        let i2 = mode_index(m2, self.grid.n2());
        let k = self.raw_index(i1, i2);
        self.coeffs[k] = c;
    }

    /// Sets mode `(m1, m2)` and its mirror `(-m1, -m2)` to `c` and `conj(c)`.
    pub fn set_symmetric(&mut self, m1: i64, m2: i64, c: Complex64) {
        self.set(-m1, -m2, c.conj());
        self.set(m1, m2, c);
    }

    pub fn mean_mode(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Applies `f(k1, k2, c)` to every coefficient, with full wavenumbers.
    pub fn map_k(&self, f: impl Fn(f64, f64, Complex64) -> Complex64) -> Self {
        let coeffs = self.grid.build_rows(false, |k1, k2, s, out| {
            out.extend(self.coeffs[s..s + k2.len()].iter().zip(k2).map(|(&c, &k2)| f(k1, k2, c)));
        });
        SpectralField::from_raw(&self.grid, coeffs)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b * s)
            .collect();
        Ok(SpectralField::from_raw(&self.grid, coeffs))
    }

    pub fn scale(&self, s: f64) -> Self {
        SpectralField::from_raw(&self.grid, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Largest deviation from conjugate symmetry, `max |c(k) - conj c(-k)|`.
    pub fn symmetry_defect(&self) -> f64 {
        let (n1, n2) = (self.grid.n1(), self.grid.n2());
        let mut worst: f64 = 0.0;
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                let a = self.coeffs[i1 * n2 + i2];
                let b = self.coeffs[((n1 - i1) % n1) * n2 + (n2 - i2) % n2];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }
}

pub(crate) fn check_same(a: &Grid, b: &Grid) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}
