//! The velocity law and the nonlinear operators built from it.
//!
//! On mean-zero densities the porous-media velocity closes as a pair of
//! Riesz multipliers,
//!
//! ```text
//! u = (-R1 R2 rho, R1 R1 rho),    R_a = d_a (-Laplace)^{-1/2},
//! ```
//!
//! equivalently `u = -grad p - (0, rho)` with `-Laplace p = d2 rho`. Both
//! routes are implemented; the second exists to cross-check the first.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lagrangian::{compose, invert_flow_map, psi_map, FlowMap};
use crate::spectral::fft::{forward_transform, inverse_transform};
use crate::spectral::field::{RealField, SpectralField, VectorField};
use crate::spectral::multiplier::{
    apply_masked, dealias, derivative_spec, inverse_laplacian_spec, riesz_spec, zero_nyquist,
    Axis,
};
use crate::spectral::norms::{l2_norm, sobolev_norm};
use crate::transport::SolverConfig;

fn u1_spec(spec: &SpectralField) -> Result<SpectralField> {
    // -R1 R2: symbol xi1*xi2/|xi|^2. The product of two odd factors is
    // alias-ambiguous on the Nyquist lines, so both are zeroed.
    apply_masked(
        spec,
        |x1, x2| Complex64::new(x1 * x2 / (x1 * x1 + x2 * x2), 0.0),
        Complex64::new(0.0, 0.0),
        true,
        true,
    )
}

fn u2_spec(spec: &SpectralField) -> Result<SpectralField> {
    // R1 R1: symbol -xi1^2/|xi|^2, alias-even on both lines; masked anyway
    // so that the velocity is supported exactly where u1 is.
    apply_masked(
        spec,
        |x1, x2| Complex64::new(-x1 * x1 / (x1 * x1 + x2 * x2), 0.0),
        Complex64::new(0.0, 0.0),
        true,
        true,
    )
}

pub(crate) fn darcy_velocity_spec(spec: &SpectralField) -> Result<VectorField> {
    Ok(VectorField::new(
        inverse_transform(&u1_spec(spec)?)?,
        inverse_transform(&u2_spec(spec)?)?,
    ))
}

/// Velocity induced by a mean-zero density via Darcy's law.
pub fn darcy_velocity(rho: &RealField) -> Result<VectorField> {
    rho.check_finite("darcy input")?;
    rho.check_mean_zero()?;
    darcy_velocity_spec(&forward_transform(rho)?)
}

/// Pressure solving `-Laplace p = d2 rho` with zero mean.
pub fn pressure(rho: &RealField) -> Result<RealField> {
    rho.check_finite("pressure input")?;
    rho.check_mean_zero()?;
    let spec = forward_transform(rho)?;
    inverse_transform(&inverse_laplacian_spec(&derivative_spec(&spec, Axis::X2)?)?)
}

/// Darcy velocity together with its structural diagnostics: the divergence
/// maximum and the gap to the pressure-gradient route.
#[derive(Debug, Clone)]
pub struct DarcyVelocity {
    pub u: VectorField,
    /// max over samples of |div u|, divergence taken spectrally.
    pub max_divergence: f64,
    /// Relative L^2 distance between the Riesz form and `-grad p - (0, rho)`.
    pub route_residual: f64,
}

impl DarcyVelocity {
    pub fn compute(rho: &RealField) -> Result<DarcyVelocity> {
        let u = darcy_velocity(rho)?;

        // The two derivative terms cancel to rounding noise; transforming
        // their sum would hand the inverse FFT a field whose coefficients
        // are pure cancellation residue, so each term comes back to sample
        // space on its own healthy scale first.
        let sx = forward_transform(&u.x)?;
        let sy = forward_transform(&u.y)?;
        let dx = inverse_transform(&derivative_spec(&sx, Axis::X1)?)?;
        let dy = inverse_transform(&derivative_spec(&sy, Axis::X2)?)?;
        let div = dx.add(&dy);

        // The pressure route runs on the Nyquist-projected density: the
        // sawtooth lines have no consistent derivative and the Riesz route
        // drops them by construction, so the comparison lives on the
        // subspace both routes can represent. Resolved data is unaffected.
        let spec_m = zero_nyquist(&forward_transform(rho)?);
        let rho_m = inverse_transform(&spec_m)?;
        let ps = inverse_laplacian_spec(&derivative_spec(&spec_m, Axis::X2)?)?;
        let alt_x = {
            let mut f = inverse_transform(&derivative_spec(&ps, Axis::X1)?)?;
            f.scale(-1.0);
            f
        };
        let alt_y = {
            let mut f = inverse_transform(&derivative_spec(&ps, Axis::X2)?)?;
            f.scale(-1.0);
            f.axpy(-1.0, &rho_m);
            f
        };
        let gap = (l2_norm(&u.x.sub(&alt_x)).powi(2) + l2_norm(&u.y.sub(&alt_y)).powi(2)).sqrt();
        let scale = (l2_norm(&u.x).powi(2) + l2_norm(&u.y).powi(2)).sqrt();

        Ok(DarcyVelocity {
            u,
            max_divergence: div.max_abs(),
            route_residual: if scale > 0.0 { gap / scale } else { gap },
        })
    }
}

/// Dealiased advection `w . grad f`: derivatives spectrally, the product in
/// sample space, then the 2/3-rule projection of the product.
pub fn advect(w: &VectorField, f: &RealField) -> Result<RealField> {
    w.grid().check_same_layout(&f.grid(), "advect")?;
    let spec = forward_transform(f)?;
    let fx = inverse_transform(&derivative_spec(&spec, Axis::X1)?)?;
    let fy = inverse_transform(&derivative_spec(&spec, Axis::X2)?)?;
    let product = w.x.mul(&fx).add(&w.y.mul(&fy));
    inverse_transform(&dealias(&forward_transform(&product)?))
}

/// Commutator `[w . grad, R_a R_b] f`, the building block of the Lagrangian
/// right-hand side. The Riesz pair is applied as one combined multiplier.
pub fn commutator(w: &VectorField, a: Axis, b: Axis, f: &RealField) -> Result<RealField> {
    let spec = forward_transform(f)?;
    let riesz_pair = inverse_transform(&riesz_spec(&riesz_spec(&spec, a)?, b)?)?;
    let first = advect(w, &riesz_pair)?;
    let second = {
        let adv = advect(w, f)?;
        inverse_transform(&riesz_spec(&riesz_spec(&forward_transform(&adv)?, a)?, b)?)?
    };
    Ok(first.sub(&second))
}

/// Right-hand side of the first-order particle formulation: with
/// `w = v o phi^{-1}` and `rho = rho0 o phi^{-1}`,
///
/// ```text
/// F = ( [w.grad, -R1 R2] rho , [w.grad, R1 R1] rho ) o phi.
/// ```
pub fn rhs_f(flow: &FlowMap, v: &VectorField, rho0: &RealField) -> Result<VectorField> {
    flow.grid().check_same_layout(&rho0.grid(), "rhs_f")?;
    let inverse = invert_flow_map(flow)?;
    let w = VectorField::new(compose(&v.x, &inverse), compose(&v.y, &inverse));
    let rho = compose(rho0, &inverse);

    let mut f1 = commutator(&w, Axis::X1, Axis::X2, &rho)?;
    f1.scale(-1.0);
    let f2 = commutator(&w, Axis::X1, Axis::X1, &rho)?;
    Ok(VectorField::new(compose(&f1, flow), compose(&f2, flow)))
}

/// Central finite difference of the time-1 flow map in the direction
/// `rho_dir`: `(Psi(rho + eps dir) - Psi(rho - eps dir)) / (2 eps)`,
/// returned as a displacement field.
pub fn linearized_psi(
    rho: &RealField,
    rho_dir: &RealField,
    eps: f64,
    cfg: &SolverConfig,
) -> Result<VectorField> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::BadArgument { what: format!("finite difference step {eps}") });
    }
    rho.grid().check_same_layout(&rho_dir.grid(), "linearized_psi")?;
    let mut plus = rho.clone();
    plus.axpy(eps, rho_dir);
    let mut minus = rho.clone();
    minus.axpy(-eps, rho_dir);
    let fwd = psi_map(&plus, cfg)?;
    let bwd = psi_map(&minus, cfg)?;
    let mut diff = fwd.displacement().sub(bwd.displacement());
    diff.scale(1.0 / (2.0 * eps));
    Ok(diff)
}

/// Default finite-difference step for [`linearized_psi`]: 1e-3 measured in
/// units of the direction field's H^s size.
pub fn default_fd_eps(rho_dir: &RealField, s: f64) -> Result<f64> {
    let norm = sobolev_norm(rho_dir, s)?;
    if norm == 0.0 {
        return Err(Error::BadArgument {
            what: "direction field is identically zero".into(),
        });
    }
    Ok(1e-3 / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Grid;
    use crate::spectral::multiplier::riesz;
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

    /// Single-mode oracle: rho = sin(2 pi x1 / L) activates only xi = (±1, 0)
    /// where the u2 symbol is -xi1^2/|xi|^2 = -1 and the u1 symbol vanishes.
    #[test]
    fn darcy_of_horizontal_mode_sinks_in_place() {
        let l = 32.0;
        let g = grid(64, l);
        let rho = RealField::from_fn(g, |x, _| (2.0 * PI * x / l).sin());
        let u = darcy_velocity(&rho).unwrap();
        assert!(u.x.max_abs() < 1e-12, "u1 should vanish");
        let mut expected = rho.clone();
        expected.scale(-1.0);
        assert!(max_diff(&u.y, &expected) < 1e-12, "u2 should be -rho");
    }

    /// Stratified density rho = f(x2): all active modes have xi1 = 0, so the
    /// velocity vanishes identically and the profile is an equilibrium.
    #[test]
    fn darcy_of_stratified_profile_vanishes() {
        let l = 32.0;
        let g = grid(64, l);
        let rho = RealField::from_fn(g, |_, y| {
            (2.0 * PI * y / l).sin() + 0.3 * (6.0 * PI * y / l).cos()
        });
        let mut rho = rho;
        rho.remove_mean();
        let u = darcy_velocity(&rho).unwrap();
        assert!(u.x.max_abs() < 1e-13);
        assert!(u.y.max_abs() < 1e-13);
    }

    #[test]
    fn darcy_rejects_nonzero_mean() {
        let g = grid(32, 32.0);
        let rho = RealField::from_fn(g, |_, _| 1.0);
        assert!(matches!(
            darcy_velocity(&rho),
            Err(Error::NotMeanZero { .. })
        ));
    }

    #[test]
    fn darcy_diagnostics_on_random_fields() {
        let g = grid(64, 32.0);
        for seed in 0..5u64 {
            let rho = RealField::random_band_limited(g, seed, 5.0, 16);
            let d = DarcyVelocity::compute(&rho).unwrap();
            let floor = l2_norm(&d.u.x).hypot(l2_norm(&d.u.y)) / 32.0 + f64::EPSILON;
            assert!(
                d.max_divergence <= 1e-11 * floor.max(f64::EPSILON),
                "seed {seed}: divergence {:e}",
                d.max_divergence
            );
            assert!(d.route_residual <= 1e-11, "seed {seed}: routes differ");
        }
    }

    /// Pressure oracle: rho = sin(x2) on the 2 pi box gives
    /// -Laplace p = cos(x2), i.e. p = cos(x2).
    #[test]
    fn pressure_of_vertical_mode_matches_closed_form() {
        let g = grid(32, 2.0 * PI);
        let rho = RealField::from_fn(g, |_, y| y.sin());
        let p = pressure(&rho).unwrap();
        let expected = RealField::from_fn(g, |_, y| y.cos());
        assert!(max_diff(&p, &expected) < 1e-12);
    }

    /// Constant velocity oracle: w . grad f with w = (1, 0) is d1 f.
    #[test]
    fn advect_with_unit_velocity_is_a_derivative() {
        let l = 2.0 * PI;
        let g = grid(32, l);
        let w = VectorField::new(
            RealField::from_fn(g, |_, _| 1.0),
            RealField::zeros(g),
        );
        let f = RealField::from_fn(g, |x, y| (2.0 * x).sin() * y.cos());
        let adv = advect(&w, &f).unwrap();
        let expected = RealField::from_fn(g, |x, y| 2.0 * (2.0 * x).cos() * y.cos());
        assert!(max_diff(&adv, &expected) < 1e-10);
    }

    /// Translation invariance: a constant w commutes with any Fourier
    /// multiplier, so the commutator must vanish identically.
    #[test]
    fn commutator_with_constant_velocity_vanishes() {
        let g = grid(64, 32.0);
        let w = VectorField::new(
            RealField::from_fn(g, |_, _| 0.7),
            RealField::from_fn(g, |_, _| -0.4),
        );
        let f = RealField::random_band_limited(g, 3, 4.0, 12);
        let c = commutator(&w, Axis::X1, Axis::X2, &f).unwrap();
        assert!(c.max_abs() <= 1e-12 * f.max_abs(), "got {:e}", c.max_abs());
    }

    /// Two independent code paths: the commutator op against an assembly
    /// from the public riesz/advect building blocks.
    #[test]
    fn commutator_matches_two_path_reconstruction() {
        let g = grid(64, 32.0);
        let w = VectorField::new(
            RealField::random_band_limited(g, 41, 3.0, 8),
            RealField::random_band_limited(g, 42, 3.0, 8),
        );
        let f = RealField::random_band_limited(g, 43, 3.0, 8);
        for (a, b) in [(Axis::X1, Axis::X2), (Axis::X1, Axis::X1), (Axis::X2, Axis::X2)] {
            let direct = commutator(&w, a, b, &f).unwrap();
            let pair = riesz(&riesz(&f, a).unwrap(), b).unwrap();
            let path1 = advect(&w, &pair).unwrap();
            let path2 = riesz(
                &riesz(&advect(&w, &f).unwrap(), a).unwrap(),
                b,
            )
            .unwrap();
            let rebuilt = path1.sub(&path2);
            assert!(
                max_diff(&direct, &rebuilt) <= 1e-12 * direct.max_abs().max(1e-9),
                "axes {a:?}{b:?}"
            );
        }
    }

    /// At rest the derivative of the time-1 flow map is the Darcy field of
    /// the direction: the centered difference converges to it at second
    /// order in eps, and its magnitude at an off-grid probe matches the
    /// Darcy magnitude there.
    #[test]
    fn linearized_flow_at_rest_recovers_the_darcy_field() {
        use crate::spectral::grid::Point;
        use crate::spectral::sample::eval_bicubic_vec;

        let g = grid(64, 32.0);
        let dir = RealField::random_band_limited(g, 17, 2.0, 8);
        let reference = darcy_velocity(&dir).unwrap();
        let zero = RealField::zeros(g);
        let cfg = SolverConfig { dt: 0.02, ..SolverConfig::default() };
        let scale = l2_norm(&reference.x).hypot(l2_norm(&reference.y));
        let rel = |eps: f64| {
            let d = linearized_psi(&zero, &dir, eps, &cfg).unwrap();
            let gap = d.sub(&reference);
            l2_norm(&gap.x).hypot(l2_norm(&gap.y)) / scale
        };
        let coarse = rel(0.6);
        let fine = rel(0.3);
        let order = (coarse / fine).log2();
        assert!(fine < coarse, "halving eps must help: {fine:e} vs {coarse:e}");
        assert!(order >= 1.9, "observed eps order {order:.2}");

        let probe = Point::new(16.25, 10.75);
        let d = linearized_psi(&zero, &dir, 0.3, &cfg).unwrap();
        let got = eval_bicubic_vec(&d, probe);
        let want = eval_bicubic_vec(&reference, probe);
        let mag = want.x.hypot(want.y);
        let gap = (got.x - want.x).hypot(got.y - want.y);
        assert!(gap <= 0.05 * mag, "probe gap {gap:e} against magnitude {mag:e}");
    }
}
