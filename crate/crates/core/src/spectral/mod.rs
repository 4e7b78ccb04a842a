//! Periodic grid, Fourier transforms and spectral operators.

mod fft;
mod field;
mod grid;
mod ops;

pub use fft::{
    forward, forward_pair, inverse, inverse_pair, padded_forward, padded_forward_pair,
    padded_inverse, padded_inverse_pair, PaddedField,
};
pub use field::{PhysicalField, SpectralField};
pub use grid::{fast_size, mode_index, mode_number, padded_size, Grid, TransformCount};
pub use ops::{curl_spectral, dealiased_product, derivative, divergence_spectral, velocity_from_vorticity};
