//! Forward and inverse 2D transforms on top of rustfft.
//!
//! Convention: the forward transform is the plain unscaled DFT
//! `F[k] = sum_j f[j] exp(-2*pi*i*k.j/n)`; the inverse carries the
//! `1/(n1*n2)` normalization, so `inverse(forward(f)) = f` up to rounding.
//! Plans are cached per grid size behind a mutex so transforms can be used
//! from multiple threads.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::spectral::field::{RealField, SpectralField};

/// Relative Hermitian-symmetry tolerance accepted by [`inverse_transform`].
pub const HERMITIAN_TOL: f64 = 1e-10;

struct Plans {
    fwd_rows: Arc<dyn Fft<f64>>,
    inv_rows: Arc<dyn Fft<f64>>,
    fwd_cols: Arc<dyn Fft<f64>>,
    inv_cols: Arc<dyn Fft<f64>>,
}

fn plans_for(n1: usize, n2: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry((n1, n2))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                fwd_rows: planner.plan_fft_forward(n1),
                inv_rows: planner.plan_fft_inverse(n1),
                fwd_cols: planner.plan_fft_forward(n2),
                inv_cols: planner.plan_fft_inverse(n2),
            })
        })
        .clone()
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n1: usize, n2: usize) {
    for i2 in 0..n2 {
        for i1 in 0..n1 {
            dst[i1 * n2 + i2] = src[i2 * n1 + i1];
        }
    }
}

fn fft2(buffer: &mut Vec<Complex64>, n1: usize, n2: usize, forward: bool) {
    let plans = plans_for(n1, n2);
    let rows = if forward { &plans.fwd_rows } else { &plans.inv_rows };
    let cols = if forward { &plans.fwd_cols } else { &plans.inv_cols };
    rows.process(buffer);
    let mut scratch = vec![Complex64::new(0.0, 0.0); buffer.len()];
    transpose(buffer, &mut scratch, n1, n2);
    cols.process(&mut scratch);
    transpose(&scratch, buffer, n2, n1);
}

/// Unscaled DFT of a real field. Rejects non-finite samples.
pub fn forward_transform(f: &RealField) -> Result<SpectralField> {
    f.check_finite("forward transform input")?;
    let grid = f.grid();
    let mut buffer: Vec<Complex64> = f
        .samples()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft2(&mut buffer, grid.n1(), grid.n2(), true);
    Ok(SpectralField { grid, coeffs: buffer })
}

/// Normalized inverse DFT back to a real field. Coefficients must be
/// Hermitian-symmetric to within [`HERMITIAN_TOL`] relative to their
/// largest magnitude; this catches multipliers that forgot symmetry.
pub fn inverse_transform(spec: &SpectralField) -> Result<RealField> {
    let scale = spec.max_abs();
    let defect = spec.hermitian_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::HermitianDefect { defect, scale });
    }
    let grid = spec.grid();
    let mut buffer = spec.coeffs().to_vec();
    fft2(&mut buffer, grid.n1(), grid.n2(), false);
    let norm = 1.0 / grid.len() as f64;
    let samples = buffer.iter().map(|c| c.re * norm).collect();
    Ok(RealField { grid, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Grid;
    use std::f64::consts::PI;

    /// Brute-force DFT used as an independent oracle for the backend.
    fn naive_dft(f: &RealField) -> Vec<Complex64> {
        let g = f.grid();
        let (n1, n2) = (g.n1(), g.n2());
        let mut out = vec![Complex64::new(0.0, 0.0); n1 * n2];
        for k2 in 0..n2 {
            for k1 in 0..n1 {
                let mut acc = Complex64::new(0.0, 0.0);
                for j2 in 0..n2 {
                    for j1 in 0..n1 {
                        let phase = -2.0 * PI
                            * (k1 as f64 * j1 as f64 / n1 as f64
                                + k2 as f64 * j2 as f64 / n2 as f64);
                        acc += f.samples()[j2 * n1 + j1]
                            * Complex64::new(phase.cos(), phase.sin());
                    }
                }
                out[k2 * n1 + k1] = acc;
            }
        }
        out
    }

    #[test]
    fn forward_matches_naive_dft_oracle() {
        let g = Grid::new(8, 12, 5.0, 2.5).unwrap();
        let f = RealField::from_fn(g, |x, y| {
            (2.0 * PI * x / 5.0).sin() + 0.3 * (4.0 * PI * y / 5.0).cos() + 0.1 * x * 0.0
        });
        let fast = forward_transform(&f).unwrap();
        let slow = naive_dft(&f);
        let scale = fast.max_abs();
        for (a, b) in fast.coeffs().iter().zip(&slow) {
            assert!((a - b).norm() <= 1e-12 * scale, "fast {a} vs naive {b}");
        }
    }

    #[test]
    fn round_trip_is_identity_to_1e12_relative() {
        let g = Grid::new(64, 64, 32.0, 2.5).unwrap();
        let f = RealField::random_band_limited(g, 3, 6.0, 20);
        let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
        let scale = f.max_abs();
        let err = f
            .samples()
            .iter()
            .zip(back.samples())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1e-12 * scale, "round trip error {err:e}");
    }

    #[test]
    fn constant_field_transforms_to_pure_zero_mode() {
        let g = Grid::new(16, 16, 32.0, 2.5).unwrap();
        let f = RealField::from_fn(g, |_, _| 2.5);
        let spec = forward_transform(&f).unwrap();
        // zero mode holds n1*n2*c, everything else vanishes
        assert!((spec.at(0, 0) - Complex64::new(2.5 * 256.0, 0.0)).norm() < 1e-9);
        for i2 in 0..16 {
            for i1 in 0..16 {
                if i1 == 0 && i2 == 0 {
                    continue;
                }
                assert!(spec.at(i1, i2).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn cosine_lands_on_conjugate_mode_pair() {
        let g = Grid::new(32, 32, 32.0, 2.5).unwrap();
        let f = RealField::from_fn(g, |x, _| (2.0 * PI * x / 32.0).cos());
        let spec = forward_transform(&f).unwrap();
        let half = 32.0 * 32.0 / 2.0;
        assert!((spec.at(1, 0) - Complex64::new(half, 0.0)).norm() < 1e-8);
        assert!((spec.at(31, 0) - Complex64::new(half, 0.0)).norm() < 1e-8);
        assert!(spec.at(2, 0).norm() < 1e-8);
    }

    #[test]
    fn rejects_nan_input_and_broken_symmetry() {
        let g = Grid::new(8, 8, 1.0, 2.5).unwrap();
        let mut f = RealField::zeros(g);
        f.samples_mut()[5] = f64::INFINITY;
        assert!(matches!(
            forward_transform(&f),
            Err(Error::NonFinite { index: 5, .. })
        ));

        let mut spec = SpectralField::zeros(g);
        spec.coeffs_mut()[g.index(1, 0)] = Complex64::new(1.0, 1.0);
        // mirror coefficient left at zero: symmetry broken
        assert!(matches!(
            inverse_transform(&spec),
            Err(Error::HermitianDefect { .. })
        ));
    }
}
