//! Periodic grid geometry and the Fourier lattice.
//!
//! Fields live on the torus `[0, L)^2` sampled at `n1 x n2` equispaced
//! points, row-major with the second coordinate as the row index:
//! `samples[i2 * n1 + i1]` holds the value at `(i1 * L/n1, i2 * L/n2)`.
//! The discrete frequency attached to storage index `i` along an axis of
//! `n` points is the integer `k` in `[-n/2, n/2)` congruent to `i` mod `n`,
//! scaled by `2*pi/L`.

use crate::error::{Error, Result};

/// A point of the plane (positions are not wrapped; use [`Grid::wrap`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Sampling geometry: grid size, box length and the default Sobolev index
/// carried around by solver records and reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n1: usize,
    n2: usize,
    box_length: f64,
    s: f64,
}

impl Grid {
    /// Both sizes must be even and at least 8, the box positive, and the
    /// Sobolev index above 2 so that the C^1 embedding makes sense.
    pub fn new(n1: usize, n2: usize, box_length: f64, s: f64) -> Result<Self> {
        if n1 < 8 || n2 < 8 || n1 % 2 != 0 || n2 % 2 != 0 {
            return Err(Error::Grid {
                reason: format!("sizes must be even and >= 8, got {n1} x {n2}"),
            });
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::Grid {
                reason: format!("box length must be positive and finite, got {box_length}"),
            });
        }
        if !(s > 2.0) || !s.is_finite() {
            return Err(Error::Grid {
                reason: format!("Sobolev index must satisfy s > 2, got {s}"),
            });
        }
        Ok(Grid { n1, n2, box_length, s })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Default Sobolev index for diagnostics and reports.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing along each axis.
    pub fn spacing(&self) -> (f64, f64) {
        (self.box_length / self.n1 as f64, self.box_length / self.n2 as f64)
    }

    /// Area element of one cell.
    pub fn cell_area(&self) -> f64 {
        let (h1, h2) = self.spacing();
        h1 * h2
    }

    pub fn index(&self, i1: usize, i2: usize) -> usize {
        debug_assert!(i1 < self.n1 && i2 < self.n2);
        i2 * self.n1 + i1
    }

    /// Position of a sample.
    pub fn point(&self, i1: usize, i2: usize) -> Point {
        let (h1, h2) = self.spacing();
        Point::new(i1 as f64 * h1, i2 as f64 * h2)
    }

    /// Signed integer frequency for a storage index along an axis of n points.
    pub fn wavenumber(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Continuous frequency pair `xi = (2*pi/L) * k` for storage indices.
    pub fn xi(&self, i1: usize, i2: usize) -> (f64, f64) {
        let scale = 2.0 * std::f64::consts::PI / self.box_length;
        (
            scale * Self::wavenumber(i1, self.n1) as f64,
            scale * Self::wavenumber(i2, self.n2) as f64,
        )
    }

    /// Quadrature weight making the s = 0 Sobolev norm match the sample
    /// L^2 norm: cell area divided by the transform normalization n1*n2.
    pub fn spectral_weight(&self) -> f64 {
        self.cell_area() / self.len() as f64
    }

    /// Wrap a point into `[0, L)^2`.
    pub fn wrap(&self, p: Point) -> Point {
        Point::new(
            p.x.rem_euclid(self.box_length),
            p.y.rem_euclid(self.box_length),
        )
    }

    /// Shortest distance between two points on the torus.
    pub fn torus_distance(&self, a: Point, b: Point) -> f64 {
        let l = self.box_length;
        let dx = (a.x - b.x).rem_euclid(l);
        let dy = (a.y - b.y).rem_euclid(l);
        let dx = dx.min(l - dx);
        let dy = dy.min(l - dy);
        dx.hypot(dy)
    }

    /// True when the two grids can hold the same data.
    pub fn same_layout(&self, other: &Grid) -> bool {
        self.n1 == other.n1 && self.n2 == other.n2 && self.box_length == other.box_length
    }

    pub(crate) fn check_same_layout(&self, other: &Grid, context: &str) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: format!(
                    "{}x{} L={} ({context})",
                    self.n1, self.n2, self.box_length
                ),
                found: format!("{}x{} L={}", other.n1, other.n2, other.box_length),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(7, 8, 1.0, 2.5).is_err());
        assert!(Grid::new(8, 10, 1.0, 2.5).is_ok());
        assert!(Grid::new(12, 9, 1.0, 2.5).is_err());
        assert!(Grid::new(0, 0, 1.0, 2.5).is_err());
    }

    #[test]
    fn rejects_bad_box_and_index() {
        assert!(Grid::new(8, 8, 0.0, 2.5).is_err());
        assert!(Grid::new(8, 8, -3.0, 2.5).is_err());
        assert!(Grid::new(8, 8, f64::NAN, 2.5).is_err());
        assert!(Grid::new(8, 8, 1.0, 2.0).is_err());
        assert!(Grid::new(8, 8, 1.0, 2.5).is_ok());
    }

    #[test]
    fn wavenumbers_cover_symmetric_range() {
        let ks: Vec<i64> = (0..8).map(|i| Grid::wavenumber(i, 8)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn xi_scales_with_box_length() {
        let g = Grid::new(16, 16, 2.0 * std::f64::consts::PI, 2.5).unwrap();
        let (x1, x2) = g.xi(1, 0);
        assert!((x1 - 1.0).abs() < 1e-15);
        assert_eq!(x2, 0.0);
        let g = Grid::new(16, 16, 32.0, 2.5).unwrap();
        let (x1, _) = g.xi(1, 0);
        assert!((x1 - 2.0 * std::f64::consts::PI / 32.0).abs() < 1e-15);
    }

    #[test]
    fn torus_distance_wraps() {
        let g = Grid::new(8, 8, 32.0, 2.5).unwrap();
        let a = Point::new(1.0, 1.0);
        let b = Point::new(31.0, 1.0);
        assert!((g.torus_distance(a, b) - 2.0).abs() < 1e-12);
        assert!((g.torus_distance(a, a)).abs() == 0.0);
    }

    #[test]
    fn spectral_weight_matches_formula() {
        let g = Grid::new(16, 32, 32.0, 2.5).unwrap();
        let w = (32.0 / 16.0) * (32.0 / 32.0) / (16.0 * 32.0) as f64;
        assert!((g.spectral_weight() - w).abs() < 1e-18);
    }
}
