//! Chebyshev diagnostics for particle paths.
//!
//! A trajectory sampled uniformly in time is resampled onto
//! Chebyshev-Lobatto nodes with local 8-point Lagrange interpolation, then
//! expanded in Chebyshev polynomials. For a path that is analytic in time
//! the coefficients decay geometrically, so the log-magnitudes fall on a
//! line; the probe fits that line above an empirical noise floor and
//! reports the decay rate together with the quality of the fit.

use crate::error::{Error, Result};
use crate::lagrangian::Trajectory;
use std::f64::consts::PI;

/// Minimum number of uniform samples the probe accepts.
pub const MIN_SAMPLES: usize = 64;
/// Cap on the Chebyshev expansion order.
pub const MAX_MODES: usize = 128;
/// A coefficient participates in the fit only above this multiple of the
/// noise floor.
pub const FLOOR_MARGIN: f64 = 100.0;
/// Fewest fit points for a meaningful decay estimate.
pub const MIN_FIT_POINTS: usize = 5;
/// A consecutive-coefficient jump by more than this factor ends the fit
/// window; genuine geometric decay never rises, contamination does.
pub const RISE_GUARD: f64 = 10.0;

/// Least-squares line through `(k, ln |c_k|)`.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    /// Geometric decay rate; `|c_k| ~ exp(-rate * k)`, positive for decay.
    pub rate: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r2: f64,
    /// Number of coefficients above the floor that entered the fit.
    pub count: usize,
}

/// Chebyshev expansion of a trajectory and the fitted decay.
#[derive(Debug, Clone)]
pub struct AnalyticityProbe {
    /// Expansion order; coefficients run `0..=order`.
    pub order: usize,
    /// Time horizon covered by the trajectory.
    pub horizon: f64,
    /// Per-coordinate Chebyshev coefficients of `x(t)` and `y(t)`.
    pub coeff_x: Vec<f64>,
    /// See `coeff_x`.
    pub coeff_y: Vec<f64>,
    /// Combined magnitudes `hypot(coeff_x[k], coeff_y[k])`.
    pub magnitude: Vec<f64>,
    /// Median magnitude over the last quarter of the spectrum.
    pub noise_floor: f64,
    /// The log-linear fit, absent when too few coefficients clear the floor.
    pub fit: Option<DecayFit>,
}

impl AnalyticityProbe {
    /// Largest combined magnitude over the last quarter of the spectrum.
    pub fn tail_max(&self) -> f64 {
        let start = self.magnitude.len() - self.magnitude.len() / 4;
        self.magnitude[start..].iter().cloned().fold(0.0, f64::max)
    }
}

/// Evaluate the 12-point Lagrange interpolant of uniform samples at `t`.
/// `dt` is the sample spacing; the stencil is clamped to the data range.
/// The wide stencil matters: fast trajectories put the 8-point error well
/// above the Chebyshev tail this module is trying to read.
fn lagrange_resample(values: &[f64], dt: f64, t: f64) -> f64 {
    const W: usize = 12;
    let n = values.len();
    debug_assert!(n >= W);
    let s = t / dt;
    let mut base = (s.floor() as isize) - (W as isize / 2 - 1);

    base = base.clamp(0, (n - W) as isize);
    let base = base as usize;
    let local = s - base as f64;
    let mut acc = 0.0;
    for m in 0..W {
        let mut w = 1.0;
        for l in 0..W {
            if l != m {
                w *= (local - l as f64) / (m as f64 - l as f64);
            }
        }
        acc += w * values[base + m];
    }
    acc
}

/// Chebyshev coefficients of the Lobatto-node values `y_j = f(cos(pi j / m))`,
/// normalised so that `f(x) = sum_k c_k T_k(x)`.
fn chebyshev_coefficients(values: &[f64]) -> Vec<f64> {
    let m = values.len() - 1;
    let mut coeffs = vec![0.0; m + 1];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &y) in values.iter().enumerate() {
            let weight = if j == 0 || j == m { 0.5 } else { 1.0 };
            acc += weight * y * (PI * (k * j) as f64 / m as f64).cos();
        }
        let edge = if k == 0 || k == m { 0.5 } else { 1.0 };
        *c = edge * 2.0 / m as f64 * acc;
    }
    coeffs
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn fit_decay(magnitude: &[f64], floor: f64) -> Option<DecayFit> {
    // Walk out from k = 1 and stop at the first sign of trouble: either
    // the magnitude falls under the noise cut, or it jumps back up, which
    // is how endpoint resampling error announces itself. Everything past
    // that point is contamination, not decay.
    let cut = FLOOR_MARGIN * floor;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for (k, &m) in magnitude.iter().enumerate().skip(1) {
        if m <= cut {
            break;
        }
        if k >= 2 && m > RISE_GUARD * magnitude[k - 1] {
            break;
        }
        pts.push((k as f64, m.ln()));
    }
    if pts.len() < MIN_FIT_POINTS {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(DecayFit { rate: -slope, r2, count: pts.len() })
}

/// Expand a uniformly sampled trajectory in Chebyshev polynomials of time
/// and fit the coefficient decay.
pub fn analyticity_probe(traj: &Trajectory) -> Result<AnalyticityProbe> {
    let n = traj.times.len();
    if n < MIN_SAMPLES {
        return Err(Error::BadArgument {
            what: format!("trajectory has {n} samples, probe needs {MIN_SAMPLES}"),
        });
    }
    if traj.points.len() != n {
        return Err(Error::BadArgument {
            what: format!("trajectory has {} points for {n} times", traj.points.len()),
        });
    }
    let horizon = traj.times[n - 1] - traj.times[0];
    if !(horizon > 0.0) {
        return Err(Error::BadArgument { what: "trajectory horizon is not positive".into() });
    }
    let dt = horizon / (n - 1) as f64;
    for i in 1..n {
        let gap = traj.times[i] - traj.times[i - 1];
        if (gap - dt).abs() > 1e-9 * dt {
            return Err(Error::BadArgument {
                what: format!(
                    "trajectory sampling is not uniform (interval {i} is {gap}, expected {dt})"
                ),
            });
        }
    }

    let xs: Vec<f64> = traj.points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = traj.points.iter().map(|p| p.y).collect();

    let order = MAX_MODES.min(n - 1);
    // Lobatto nodes of the Chebyshev variable, mapped onto [t0, t0 + horizon];
    // node j sits at cos(pi j / order), i.e. runs from the end of the
    // trajectory back to its start.
    let mut vx = Vec::with_capacity(order + 1);
    let mut vy = Vec::with_capacity(order + 1);
    for j in 0..=order {
        let x_cheb = (PI * j as f64 / order as f64).cos();
        let t = (1.0 - x_cheb) / 2.0 * horizon;
        vx.push(lagrange_resample(&xs, dt, t));
        vy.push(lagrange_resample(&ys, dt, t));
    }

    let coeff_x = chebyshev_coefficients(&vx);
    let coeff_y = chebyshev_coefficients(&vy);
    let magnitude: Vec<f64> = coeff_x
        .iter()
        .zip(&coeff_y)
        .map(|(&a, &b)| a.hypot(b))
        .collect();

    let tail_start = magnitude.len() - magnitude.len() / 4;
    let noise_floor = median(magnitude[tail_start..].to_vec()).max(1e-300);
    let fit = fit_decay(&magnitude, noise_floor);

    Ok(AnalyticityProbe {
        order,
        horizon,
        coeff_x,
        coeff_y,
        magnitude,
        noise_floor,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Point;

    fn uniform_trajectory(horizon: f64, n: usize, f: impl Fn(f64) -> (f64, f64)) -> Trajectory {
        let times: Vec<f64> = (0..n).map(|i| horizon * i as f64 / (n - 1) as f64).collect();
        let points: Vec<Point> = times.iter().map(|&t| {
            let (x, y) = f(t);
            Point::new(x, y)
        }).collect();
        Trajectory { x0: points[0], times, points }
    }

    #[test]
    fn constant_path_concentrates_in_the_zeroth_coefficient() {
        let traj = uniform_trajectory(1.0, 201, |_| (3.25, -1.5));
        let probe = analyticity_probe(&traj).unwrap();
        assert!((probe.coeff_x[0] - 3.25).abs() <= 1e-13);
        assert!((probe.coeff_y[0] + 1.5).abs() <= 1e-13);
        let scale = probe.magnitude[0];
        for &m in &probe.magnitude[1..] {
            assert!(m <= 1e-14 * scale, "spurious coefficient {m:e}");
        }
        assert!(probe.fit.is_none());
    }

    #[test]
    fn linear_path_reproduces_the_closed_form_coefficients() {
        // x(t) = a + b t with t = T (1 - x_cheb) / 2 gives
        // c_0 = a + b T / 2 and c_1 = -b T / 2, all higher ones zero.
        let (a, b, horizon) = (0.7, -2.3, 1.0);
        let traj = uniform_trajectory(horizon, 201, |t| (a + b * t, 0.0));
        let probe = analyticity_probe(&traj).unwrap();
        assert!((probe.coeff_x[0] - (a + b * horizon / 2.0)).abs() <= 1e-12);
        assert!((probe.coeff_x[1] + b * horizon / 2.0).abs() <= 1e-12);
        let scale = probe.magnitude[0].max(probe.magnitude[1]);
        for &m in &probe.magnitude[2..] {
            assert!(m <= 1e-12 * scale, "spurious coefficient {m:e}");
        }
    }

    #[test]
    fn analytic_path_fits_a_geometric_decay() {
        let traj = uniform_trajectory(1.0, 201, |t| ((2.0 * t).sin().exp(), (1.5 * t).cos()));
        let probe = analyticity_probe(&traj).unwrap();
        let fit = probe.fit.expect("an analytic path must clear the floor");
        assert!(fit.rate > 0.5, "decay rate {}", fit.rate);
        assert!(fit.r2 > 0.95, "fit quality {}", fit.r2);
        assert!(fit.count >= MIN_FIT_POINTS);
    }

    #[test]
    fn short_or_non_uniform_trajectories_are_rejected() {
        let traj = uniform_trajectory(1.0, 32, |t| (t, t));
        assert!(analyticity_probe(&traj).is_err());
        let mut traj = uniform_trajectory(1.0, 100, |t| (t, t));
        traj.times[50] += 1e-3;
        assert!(analyticity_probe(&traj).is_err());
    }
}
