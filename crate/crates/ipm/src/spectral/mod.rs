//! Grid, field containers, transforms, multipliers, norms and point
//! evaluation: the sampled-torus toolkit everything else is built on.

pub mod fft;
pub mod field;
pub mod grid;
pub mod multiplier;
pub mod norms;
pub mod sample;

pub use fft::{forward_transform, inverse_transform, HERMITIAN_TOL};
pub use field::{RealField, SpectralField, VectorField};
pub use grid::{Grid, Point};
pub use multiplier::{
    apply_multiplier, dealias, derivative, derivative_spec, inverse_laplacian_spec, riesz,
    riesz_spec, zero_nyquist, Axis, DEALIAS_FRACTION,
};
pub use norms::{c1_norm, l2_norm, sobolev_norm, sobolev_norm_spec};
pub use sample::{eval_bicubic, eval_bicubic_vec, eval_fourier, refine};
