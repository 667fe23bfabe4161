//! Sample-space and coefficient-space field containers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::grid::{Grid, Point};

/// Real scalar field sampled on a [`Grid`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    pub(crate) grid: Grid,
    pub(crate) samples: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: Grid) -> Self {
        RealField { grid, samples: vec![0.0; grid.len()] }
    }

    /// Sample a closure of position.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut samples = Vec::with_capacity(grid.len());
        for i2 in 0..grid.n2() {
            for i1 in 0..grid.n1() {
                let p = grid.point(i1, i2);
                samples.push(f(p.x, p.y));
            }
        }
        RealField { grid, samples }
    }

    /// Wrap an existing sample vector; the length must match the grid.
    pub fn from_samples(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::BadArgument {
                what: format!(
                    "sample vector length {} does not match grid {}x{}",
                    samples.len(),
                    grid.n1(),
                    grid.n2()
                ),
            });
        }
        Ok(RealField { grid, samples })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.samples[self.grid.index(i1, i2)]
    }

    /// First non-finite sample, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.samples.iter().position(|v| !v.is_finite())
    }

    pub(crate) fn check_finite(&self, context: &'static str) -> Result<()> {
        match self.first_non_finite() {
            Some(index) => Err(Error::NonFinite { context, index }),
            None => Ok(()),
        }
    }

    /// Arithmetic mean of the samples.
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Root mean square of the samples.
    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Reject fields whose mean is not zero relative to their RMS size.
    /// The tolerance follows the project convention 1e-12 * rms.
    pub(crate) fn check_mean_zero(&self) -> Result<()> {
        let mean = self.mean();
        let tol = 1e-12 * self.rms() + f64::MIN_POSITIVE;
        if mean.abs() > tol {
            Err(Error::NotMeanZero { mean, tol })
        } else {
            Ok(())
        }
    }

    /// Subtract the sample mean in place.
    pub fn remove_mean(&mut self) {
        let m = self.mean();
        for v in &mut self.samples {
            *v -= m;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.samples {
            *v *= a;
        }
    }

    /// self += a * other
    pub fn axpy(&mut self, a: f64, other: &RealField) {
        assert!(
            self.grid.same_layout(&other.grid),
            "axpy requires matching grids"
        );
        for (v, w) in self.samples.iter_mut().zip(&other.samples) {
            *v += a * w;
        }
    }

    pub fn add(&self, other: &RealField) -> RealField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Pointwise product.
    pub fn mul(&self, other: &RealField) -> RealField {
        assert!(
            self.grid.same_layout(&other.grid),
            "pointwise product requires matching grids"
        );
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .collect();
        RealField { grid: self.grid, samples }
    }

    /// Smooth random mean-zero field: Gaussian coefficients damped by
    /// exp(-(|k|/k0)^2), band-limited to |k| <= k_cut, fixed seed.
    pub fn random_band_limited(grid: Grid, seed: u64, k0: f64, k_cut: usize) -> RealField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        for i2 in 0..grid.n2() {
            for i1 in 0..grid.n1() {
                let k1 = Grid::wavenumber(i1, grid.n1());
                let k2 = Grid::wavenumber(i2, grid.n2());
                let kk = ((k1 * k1 + k2 * k2) as f64).sqrt();
                if k1 == 0 && k2 == 0 {
                    continue;
                }
                if kk as usize > k_cut
                    || k1.unsigned_abs() as usize >= grid.n1() / 2
                    || k2.unsigned_abs() as usize >= grid.n2() / 2
                {
                    continue;
                }
                let damp = (-(kk / k0) * (kk / k0)).exp();
                let re: f64 = rng.gen_range(-1.0..1.0);
                let im: f64 = rng.gen_range(-1.0..1.0);
                coeffs[grid.index(i1, i2)] = Complex64::new(re, im) * damp;
            }
        }
        // Enforce Hermitian symmetry so the inverse transform is real.
        let mut sym = coeffs.clone();
        for i2 in 0..grid.n2() {
            for i1 in 0..grid.n1() {
                let j1 = (grid.n1() - i1) % grid.n1();
                let j2 = (grid.n2() - i2) % grid.n2();
                let a = coeffs[grid.index(i1, i2)];
                let b = coeffs[grid.index(j1, j2)].conj();
                sym[grid.index(i1, i2)] = 0.5 * (a + b);
            }
        }
        let spec = SpectralField { grid, coeffs: sym };
        let mut f = crate::spectral::fft::inverse_transform(&spec)
            .expect("synthesized spectrum is Hermitian by construction");
        f.remove_mean();
        let rms = f.rms();
        if rms > 0.0 {
            f.scale(1.0 / rms);
        }
        f
    }
}

/// Fourier coefficients of a real field. The forward transform is unscaled;
/// the inverse carries the 1/(n1*n2) normalization.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub(crate) grid: Grid,
    pub(crate) coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn at(&self, i1: usize, i2: usize) -> Complex64 {
        self.coeffs[self.grid.index(i1, i2)]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    /// Largest deviation from F(-k) = conj(F(k)).
    pub fn hermitian_defect(&self) -> f64 {
        let n1 = self.grid.n1();
        let n2 = self.grid.n2();
        let mut defect = 0.0f64;
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                let j1 = (n1 - i1) % n1;
                let j2 = (n2 - i2) % n2;
                let d = (self.coeffs[self.grid.index(i1, i2)]
                    - self.coeffs[self.grid.index(j1, j2)].conj())
                .norm();
                defect = defect.max(d);
            }
        }
        defect
    }
}

/// Two-component field, e.g. a velocity or a displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: RealField,
    pub y: RealField,
}

impl VectorField {
    pub fn new(x: RealField, y: RealField) -> Self {
        assert!(
            x.grid().same_layout(&y.grid()),
            "vector components must share a grid"
        );
        VectorField { x, y }
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField { x: RealField::zeros(grid), y: RealField::zeros(grid) }
    }

    pub fn grid(&self) -> Grid {
        self.x.grid()
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_norm(&self) -> f64 {
        self.x
            .samples()
            .iter()
            .zip(self.y.samples())
            .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    pub fn at(&self, i1: usize, i2: usize) -> Point {
        Point::new(self.x.at(i1, i2), self.y.at(i1, i2))
    }

    pub fn scale(&mut self, a: f64) {
        self.x.scale(a);
        self.y.scale(a);
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        self.x.axpy(a, &other.x);
        self.y.axpy(a, &other.y);
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField { x: self.x.sub(&other.x), y: self.y.sub(&other.y) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(32, 32, 32.0, 2.5).unwrap()
    }

    #[test]
    fn from_fn_layout_is_row_major() {
        let g = grid();
        let f = RealField::from_fn(g, |x, y| x + 100.0 * y);
        // sample (i1=3, i2=2) sits at x=3, y=2
        assert_eq!(f.at(3, 2), 3.0 + 200.0);
        assert_eq!(f.samples()[2 * 32 + 3], f.at(3, 2));
    }

    #[test]
    fn mean_removal_and_checks() {
        let g = grid();
        let mut f = RealField::from_fn(g, |x, _| (2.0 * std::f64::consts::PI * x / 32.0).sin() + 0.5);
        assert!(f.check_mean_zero().is_err());
        f.remove_mean();
        assert!(f.check_mean_zero().is_ok());
    }

    #[test]
    fn non_finite_detection_names_index() {
        let g = grid();
        let mut f = RealField::zeros(g);
        f.samples_mut()[17] = f64::NAN;
        match f.check_finite("test field") {
            Err(Error::NonFinite { index, .. }) => assert_eq!(index, 17),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn random_fields_are_deterministic_and_mean_zero() {
        let g = grid();
        let a = RealField::random_band_limited(g, 9, 3.0, 8);
        let b = RealField::random_band_limited(g, 9, 3.0, 8);
        let c = RealField::random_band_limited(g, 10, 3.0, 8);
        assert_eq!(a.samples(), b.samples());
        assert!(a.samples() != c.samples());
        assert!(a.mean().abs() < 1e-13);
        assert!(a.check_finite("synth").is_ok());
    }
}
