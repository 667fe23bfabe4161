//! Fourier multipliers: generic application plus the handful of named
//! operators the solver is built from.
//!
//! Odd symbols (derivatives, Riesz transforms) have no consistent sign on
//! the unpaired Nyquist line of an even grid, so the named operators zero
//! that line; well-resolved data has nothing there anyway.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::fft::{forward_transform, inverse_transform};
use crate::spectral::field::{RealField, SpectralField};
use crate::spectral::grid::Grid;

/// Axis selector for derivatives and Riesz transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Multiply coefficient-wise by `symbol(xi)`, with the value at xi = 0
/// supplied explicitly (homogeneous symbols are undefined there).
/// Rejects symbols that evaluate to something non-finite.
pub fn apply_multiplier(
    spec: &SpectralField,
    symbol: impl Fn(f64, f64) -> Complex64,
    zero_mode: Complex64,
) -> Result<SpectralField> {
    let grid = spec.grid();
    let mut out = spec.clone();
    for i2 in 0..grid.n2() {
        for i1 in 0..grid.n1() {
            let idx = grid.index(i1, i2);
            let sigma = if i1 == 0 && i2 == 0 {
                zero_mode
            } else {
                let (x1, x2) = grid.xi(i1, i2);
                let s = symbol(x1, x2);
                if !s.re.is_finite() || !s.im.is_finite() {
                    return Err(Error::SymbolNonFinite { xi1: x1, xi2: x2 });
                }
                s
            };
            out.coeffs[idx] *= sigma;
        }
    }
    Ok(out)
}

/// Like [`apply_multiplier`] but zeroing the Nyquist lines of the masked
/// axes; used by the odd operators below.
pub(crate) fn apply_masked(
    spec: &SpectralField,
    symbol: impl Fn(f64, f64) -> Complex64,
    zero_mode: Complex64,
    mask_x1: bool,
    mask_x2: bool,
) -> Result<SpectralField> {
    let grid = spec.grid();
    let mut out = apply_multiplier(spec, symbol, zero_mode)?;
    if mask_x1 {
        let i1 = grid.n1() / 2;
        for i2 in 0..grid.n2() {
            out.coeffs[grid.index(i1, i2)] = Complex64::new(0.0, 0.0);
        }
    }
    if mask_x2 {
        let i2 = grid.n2() / 2;
        for i1 in 0..grid.n1() {
            out.coeffs[grid.index(i1, i2)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(out)
}

fn axis_xi(axis: Axis, x1: f64, x2: f64) -> f64 {
    match axis {
        Axis::X1 => x1,
        Axis::X2 => x2,
    }
}

/// Spectral partial derivative along an axis.
pub fn derivative_spec(spec: &SpectralField, axis: Axis) -> Result<SpectralField> {
    apply_masked(
        spec,
        |x1, x2| Complex64::new(0.0, axis_xi(axis, x1, x2)),
        Complex64::new(0.0, 0.0),
        axis == Axis::X1,
        axis == Axis::X2,
    )
}

/// Spectral partial derivative of a sampled field.
pub fn derivative(f: &RealField, axis: Axis) -> Result<RealField> {
    inverse_transform(&derivative_spec(&forward_transform(f)?, axis)?)
}

/// Riesz transform along an axis: symbol `i*xi_a/|xi|`, zero at xi = 0.
pub fn riesz_spec(spec: &SpectralField, axis: Axis) -> Result<SpectralField> {
    apply_masked(
        spec,
        |x1, x2| {
            let mag = x1.hypot(x2);
            Complex64::new(0.0, axis_xi(axis, x1, x2) / mag)
        },
        Complex64::new(0.0, 0.0),
        axis == Axis::X1,
        axis == Axis::X2,
    )
}

/// Riesz transform of a sampled field.
pub fn riesz(f: &RealField, axis: Axis) -> Result<RealField> {
    inverse_transform(&riesz_spec(&forward_transform(f)?, axis)?)
}

/// Inverse of -Laplace on mean-zero data: symbol `1/|xi|^2`, zero at xi = 0.
pub fn inverse_laplacian_spec(spec: &SpectralField) -> Result<SpectralField> {
    apply_multiplier(
        spec,
        |x1, x2| Complex64::new(1.0 / (x1 * x1 + x2 * x2), 0.0),
        Complex64::new(0.0, 0.0),
    )
}

/// Projection onto the subspace where the odd operators are well defined:
/// zeroes both Nyquist lines and keeps everything else.
pub fn zero_nyquist(spec: &SpectralField) -> SpectralField {
    apply_masked(
        spec,
        |_, _| Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        true,
        true,
    )
    .expect("constant symbol is finite")
}

/// Fraction of each axis kept by [`dealias`]: the classical 2/3 rule.
pub const DEALIAS_FRACTION: f64 = 1.0 / 3.0;

/// Zero every coefficient with |k1| > n1/3 or |k2| > n2/3. Applied to the
/// advection product so quadratic aliasing cannot reach surviving modes.
pub fn dealias(spec: &SpectralField) -> SpectralField {
    let grid = spec.grid();
    let cut1 = grid.n1() as f64 * DEALIAS_FRACTION;
    let cut2 = grid.n2() as f64 * DEALIAS_FRACTION;
    let mut out = spec.clone();
    for i2 in 0..grid.n2() {
        for i1 in 0..grid.n1() {
            let k1 = Grid::wavenumber(i1, grid.n1()).unsigned_abs() as f64;
            let k2 = Grid::wavenumber(i2, grid.n2()).unsigned_abs() as f64;
            if k1 > cut1 || k2 > cut2 {
                out.coeffs[grid.index(i1, i2)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> Grid {
        Grid::new(n, n, l, 2.5).unwrap()
    }

    fn max_diff(a: &RealField, b: &RealField) -> f64 {
        a.samples()
            .iter()
            .zip(b.samples())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Oracle: evaluate the Riesz symbol directly on the two active modes of
    /// sin(2*pi*x1/L). The coefficient at k = (1,0) is -i*N/2 and the symbol
    /// there is i*xi1/|xi| = i, so the output coefficients are N/2 on both
    /// conjugate modes: the transform of +cos(2*pi*x1/L).
    #[test]
    fn riesz_of_single_mode_matches_symbol_oracle() {
        let l = 32.0;
        let g = grid(64, l);
        let f = RealField::from_fn(g, |x, _| (2.0 * PI * x / l).sin());
        let expected = RealField::from_fn(g, |x, _| (2.0 * PI * x / l).cos());
        let r1 = riesz(&f, Axis::X1).unwrap();
        assert!(max_diff(&r1, &expected) < 1e-12, "R1 sin should be +cos");
        // and the orthogonal direction sees nothing: xi2 = 0 on these modes
        let r2 = riesz(&f, Axis::X2).unwrap();
        assert!(r2.max_abs() < 1e-12);
    }

    #[test]
    fn riesz_squares_sum_to_minus_identity_on_mean_zero_fields() {
        let g = grid(64, 32.0);
        for seed in 0..5u64 {
            let f = RealField::random_band_limited(g, seed, 5.0, 16);
            let r11 = riesz(&riesz(&f, Axis::X1).unwrap(), Axis::X1).unwrap();
            let r22 = riesz(&riesz(&f, Axis::X2).unwrap(), Axis::X2).unwrap();
            let sum = r11.add(&r22);
            let err = max_diff(&sum, &{
                let mut neg = f.clone();
                neg.scale(-1.0);
                neg
            });
            assert!(err <= 1e-12 * f.max_abs(), "seed {seed}: defect {err:e}");
        }
    }

    #[test]
    fn derivative_matches_closed_form() {
        let l = 2.0 * PI;
        let g = grid(32, l);
        let f = RealField::from_fn(g, |x, y| (3.0 * x).sin() * (2.0 * y).cos());
        let dx = derivative(&f, Axis::X1).unwrap();
        let expected = RealField::from_fn(g, |x, y| 3.0 * (3.0 * x).cos() * (2.0 * y).cos());
        assert!(max_diff(&dx, &expected) < 1e-10);
    }

    #[test]
    fn inverse_laplacian_inverts_single_mode() {
        let l = 2.0 * PI;
        let g = grid(32, l);
        // -Laplace sin(2 x2) = 4 sin(2 x2)
        let f = RealField::from_fn(g, |_, y| (2.0 * y).sin());
        let spec = forward_transform(&f).unwrap();
        let inv = inverse_transform(&inverse_laplacian_spec(&spec).unwrap()).unwrap();
        let expected = RealField::from_fn(g, |_, y| 0.25 * (2.0 * y).sin());
        assert!(max_diff(&inv, &expected) < 1e-12);
    }

    #[test]
    fn multiplier_rejects_non_finite_symbol() {
        let g = grid(8, 1.0);
        let spec = SpectralField::zeros(g);
        let bad = apply_multiplier(
            &spec,
            |x1, _| Complex64::new(1.0 / (x1 - x1), 0.0), // NaN everywhere
            Complex64::new(0.0, 0.0),
        );
        assert!(matches!(bad, Err(Error::SymbolNonFinite { .. })));
    }

    #[test]
    fn zero_mode_value_is_used_verbatim() {
        let g = grid(8, 1.0);
        let f = RealField::from_fn(g, |_, _| 3.0);
        let spec = forward_transform(&f).unwrap();
        let out = apply_multiplier(&spec, |_, _| Complex64::new(7.0, 0.0), Complex64::new(0.5, 0.0))
            .unwrap();
        let back = inverse_transform(&out).unwrap();
        // constant field: only the zero mode, scaled by 0.5
        assert!(max_diff(&back, &RealField::from_fn(g, |_, _| 1.5)) < 1e-12);
    }

    /// Oracle for the 2/3 rule: on n = 16 the cutoff keeps |k| <= 5. Two
    /// fields band-limited below the cutoff multiply exactly like their
    /// coefficient convolution on the surviving modes, because every aliased
    /// image of the true product (degree <= 10) lands on |k| >= 6.
    #[test]
    fn dealiased_product_matches_exact_convolution_oracle() {
        let n = 16usize;
        let g = grid(n, 32.0);
        let a = RealField::random_band_limited(g, 21, 3.0, 5);
        let b = RealField::random_band_limited(g, 22, 3.0, 5);
        let fa = forward_transform(&a).unwrap();
        let fb = forward_transform(&b).unwrap();

        // exact convolution over integer frequencies, normalized like an
        // unscaled DFT of the product: c[k] = (1/N) sum_q a[q] b[k-q]
        let norm = 1.0 / g.len() as f64;
        let mut conv = SpectralField::zeros(g);
        let wrap = |k: i64, n: usize| -> usize { k.rem_euclid(n as i64) as usize };
        for k2 in -8i64..8 {
            for k1 in -8i64..8 {
                let mut acc = Complex64::new(0.0, 0.0);
                for q2 in -8i64..8 {
                    for q1 in -8i64..8 {
                        let r1 = k1 - q1;
                        let r2 = k2 - q2;
                        if !(-8..8).contains(&r1) || !(-8..8).contains(&r2) {
                            continue; // outside the representable band: true product content, dropped
                        }
                        acc += fa.at(wrap(q1, n), wrap(q2, n)) * fb.at(wrap(r1, n), wrap(r2, n));
                    }
                }
                conv.coeffs_mut()[g.index(wrap(k1, n), wrap(k2, n))] = acc * norm;
            }
        }
        let conv_cut = dealias(&conv);

        let product = a.mul(&b);
        let pseudo = dealias(&forward_transform(&product).unwrap());

        let scale = conv_cut.max_abs();
        for i2 in 0..n {
            for i1 in 0..n {
                let d = (pseudo.at(i1, i2) - conv_cut.at(i1, i2)).norm();
                assert!(d <= 1e-12 * scale, "mode ({i1},{i2}) differs by {d:e}");
            }
        }
    }

    #[test]
    fn dealias_is_idempotent_and_zeroes_high_modes() {
        let g = grid(16, 32.0);
        let f = RealField::random_band_limited(g, 4, 8.0, 8);
        let spec = forward_transform(&f).unwrap();
        let cut = dealias(&spec);
        let cut2 = dealias(&cut);
        for (a, b) in cut.coeffs().iter().zip(cut2.coeffs()) {
            assert_eq!(a, b);
        }
        // |k| = 6 > 16/3 must be gone
        assert_eq!(cut.at(6, 0).norm(), 0.0);
        assert_eq!(cut.at(0, 10).norm(), 0.0); // k2 = -6
    }
}
