//! Immersed-boundary Fourier pseudo-spectral solver for confined
//! two-dimensional incompressible flow in vorticity-velocity form.
//!
//! The flow lives on a doubly periodic grid. Solid bodies and the outer
//! walls are imposed by rewriting the velocity field before every Runge-Kutta
//! stage: values are extrapolated to grid points just inside each body,
//! extended through it, multiplied by a window that vanishes in a margin at
//! the domain edge, and the vorticity is recomputed as the curl of the result.
//!
//! ```
//! use fibm::spectral::{forward, inverse, velocity_from_vorticity, Grid, PhysicalField};
//! use std::f64::consts::PI;
//!
//! let grid = Grid::square(32, 2.0 * PI).unwrap();
//! let omega = PhysicalField::from_fn(&grid, |x, y| 2.0 * x.sin() * y.sin());
//! let (u1, _u2) = velocity_from_vorticity(&forward(&omega));
//! let u1 = inverse(&u1);
//! assert!((u1.get(8, 0) - 1.0).abs() < 1e-12); // sin(pi/2) cos(0)
//! ```

pub mod boundary;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod filtering;
pub mod geometry;
pub mod run;
pub mod scenarios;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    pub mod spectral {}
    #[doc = include_str!("../../../book/src/conditioning.md")]
    pub mod conditioning {}
    #[doc = include_str!("../../../book/src/time-stepping.md")]
    pub mod time_stepping {}
    #[doc = include_str!("../../../book/src/cases.md")]
    pub mod cases {}
    #[doc = include_str!("../../../book/src/running.md")]
    pub mod running {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    pub mod diagnostics {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    pub mod acceptance {}
}
