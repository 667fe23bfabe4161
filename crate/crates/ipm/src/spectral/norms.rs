//! Sobolev, L^2 and C^1 norms.

use crate::error::Result;
use crate::spectral::fft::forward_transform;
use crate::spectral::field::{RealField, SpectralField};
use crate::spectral::multiplier::{derivative_spec, Axis};
use crate::spectral::fft::inverse_transform;

/// H^s norm from coefficients: sqrt(sum_k w (1+|xi_k|^2)^s |F_k|^2) with the
/// quadrature weight w = cell_area/(n1*n2), so s = 0 reproduces the sample
/// L^2 norm via Parseval.
pub fn sobolev_norm_spec(spec: &SpectralField, s: f64) -> f64 {
    assert!(s >= 0.0, "Sobolev index must be non-negative, got {s}");
    let grid = spec.grid();
    let w = grid.spectral_weight();
    let mut acc = 0.0;
    for i2 in 0..grid.n2() {
        for i1 in 0..grid.n1() {
            let (x1, x2) = grid.xi(i1, i2);
            let weight = (1.0 + x1 * x1 + x2 * x2).powf(s);
            acc += w * weight * spec.at(i1, i2).norm_sqr();
        }
    }
    acc.sqrt()
}

/// H^s norm of a sampled field.
pub fn sobolev_norm(f: &RealField, s: f64) -> Result<f64> {
    Ok(sobolev_norm_spec(&forward_transform(f)?, s))
}

/// Sample L^2 norm, computed directly in sample space (independent of the
/// transform; the agreement with `sobolev_norm(f, 0)` is Parseval).
pub fn l2_norm(f: &RealField) -> f64 {
    let quad = f.grid().cell_area();
    (quad * f.samples().iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Discrete C^1 norm: max over samples of |f| + |grad f|, with the gradient
/// computed spectrally. Note this is the max of the pointwise sum, not the
/// sum of the two maxima.
pub fn c1_norm(f: &RealField) -> Result<f64> {
    let spec = forward_transform(f)?;
    let fx = inverse_transform(&derivative_spec(&spec, Axis::X1)?)?;
    let fy = inverse_transform(&derivative_spec(&spec, Axis::X2)?)?;
    let mut best = 0.0f64;
    for ((v, gx), gy) in f.samples().iter().zip(fx.samples()).zip(fy.samples()) {
        best = best.max(v.abs() + gx.hypot(*gy));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn l2_norm_of_unit_sine_is_sqrt2_pi() {
        // ||sin(x1)||_{L^2} over [0, 2*pi)^2 = sqrt(2*pi^2) = sqrt(2)*pi
        let g = Grid::new(64, 64, 2.0 * PI, 2.5).unwrap();
        let f = RealField::from_fn(g, |x, _| x.sin());
        let expected = std::f64::consts::SQRT_2 * PI;
        assert!((l2_norm(&f) - expected).abs() < 1e-12);
        assert!((sobolev_norm(&f, 0.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn sobolev_weights_single_mode_by_closed_form() {
        // For f = sin(x1) on the 2*pi box the only frequency is |xi| = 1, so
        // ||f||_s = (1+1)^(s/2) * ||f||_0 exactly.
        let g = Grid::new(32, 32, 2.0 * PI, 2.5).unwrap();
        let f = RealField::from_fn(g, |x, _| x.sin());
        let base = std::f64::consts::SQRT_2 * PI;
        for s in [0.0, 1.0, 2.5, 4.0] {
            let expected = 2.0f64.powf(s / 2.0) * base;
            let got = sobolev_norm(&f, s).unwrap();
            assert!(
                (got - expected).abs() < 1e-10,
                "s = {s}: got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn sobolev_norm_is_monotone_in_s() {
        let g = Grid::new(64, 64, 32.0, 2.5).unwrap();
        let f = RealField::random_band_limited(g, 11, 6.0, 20);
        let mut prev = sobolev_norm(&f, 0.0).unwrap();
        for s in [0.5, 1.0, 1.5, 2.5, 3.5] {
            let cur = sobolev_norm(&f, s).unwrap();
            assert!(cur >= prev, "norm not monotone at s = {s}");
            prev = cur;
        }
    }

    #[test]
    fn parseval_ties_l2_routes_together() {
        let g = Grid::new(48, 64, 17.0, 2.5).unwrap();
        for seed in 0..4u64 {
            let f = RealField::random_band_limited(g, seed, 4.0, 12);
            let direct = l2_norm(&f);
            let spectral = sobolev_norm(&f, 0.0).unwrap();
            assert!(
                (direct - spectral).abs() <= 1e-12 * direct.max(1.0),
                "seed {seed}: {direct} vs {spectral}"
            );
        }
    }

    /// Dense-sampling oracle for the C^1 norm of sin(x1) on the 2*pi box:
    /// the pointwise sum |sin| + |cos| peaks at sqrt(2), not at 2, because
    /// the extrema of the two terms do not coincide.
    #[test]
    fn c1_norm_of_sine_matches_dense_sampling_oracle() {
        let oracle = {
            let m = 2_000_000usize;
            let mut best = 0.0f64;
            for j in 0..m {
                let x = 2.0 * PI * j as f64 / m as f64;
                best = best.max(x.sin().abs() + x.cos().abs());
            }
            best
        };
        assert!((oracle - std::f64::consts::SQRT_2).abs() < 1e-10);

        let g = Grid::new(64, 64, 2.0 * PI, 2.5).unwrap();
        let f = RealField::from_fn(g, |x, _| x.sin());
        let got = c1_norm(&f).unwrap();
        // the 64-point grid contains x = pi/4 where the oracle max is attained
        assert!((got - oracle).abs() < 1e-9, "got {got}, oracle {oracle}");
    }

    #[test]
    fn c1_norm_of_constant_is_its_magnitude() {
        let g = Grid::new(32, 32, 5.0, 2.5).unwrap();
        let f = RealField::from_fn(g, |_, _| -1.75);
        assert!((c1_norm(&f).unwrap() - 1.75).abs() < 1e-12);
    }
}
