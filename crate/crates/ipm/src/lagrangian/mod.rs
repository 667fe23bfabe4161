//! Lagrangian flow maps for the transport dynamics.
//!
//! The flow `phi(t)` of the velocity field is stored as a displacement
//! `g = phi - id`, which is a genuine periodic field even though `phi`
//! itself is not. The solver co-evolves `(rho, g)` on one RK4 clock:
//! the density sees the usual Eulerian right-hand side, the displacement
//! at a node `x` moves with the interpolated velocity at `x + g(x)`.
//!
//! Inversion runs the fixed-point iteration
//! `h_{m+1}(x) = -g(x + h_m(x))`, which converges whenever the
//! displacement gradient is a contraction; stalls are reported rather
//! than papered over.

pub mod analyticity;

use crate::error::{Error, Result};
use crate::spectral::fft::{forward_transform, inverse_transform};
use crate::spectral::field::{RealField, SpectralField, VectorField};
use crate::spectral::grid::{Grid, Point};
use crate::spectral::multiplier::{derivative_spec, Axis};
use crate::spectral::sample::{eval_bicubic, eval_bicubic_vec, eval_fourier, refine};
use crate::transport::{
    rhs_with_velocity, SolutionRecord, SolverConfig, StepGuards, SURVEILLANCE_FACTOR,
};

/// Sup-norm residual below which the inverse map is accepted.
pub const INVERSION_TOL: f64 = 1e-10;
/// Iteration cap for the fixed-point inversion.
pub const MAX_INVERSION_ITERS: usize = 100;
/// Lattice oversampling factor for every interpolated field lookup in this
/// module. Bicubic interpolation is only C^1 across cell boundaries, and the
/// Sobolev weights at the top of the band magnify the resulting kinks by a
/// factor of order `(n/2)^s`; sampling from a spectrally refined copy drops
/// the kink amplitude by `SAMPLE_REFINE^4` and keeps the composed fields
/// usable in the strong norms.
const SAMPLE_REFINE: usize = 4;

fn refine_vec(u: &VectorField) -> Result<VectorField> {
    Ok(VectorField::new(refine(&u.x, SAMPLE_REFINE)?, refine(&u.y, SAMPLE_REFINE)?))
}

/// A volume-preserving-in-the-limit diffeomorphism of the torus, stored as
/// the displacement from the identity.
#[derive(Debug, Clone)]
pub struct FlowMap {
    displacement: VectorField,
    /// Refined copy of the displacement, built on first off-grid use so
    /// that `apply` and the inversion agree with the module's sampling
    /// discipline.
    fine: std::sync::OnceLock<VectorField>,
}

impl FlowMap {
    pub fn identity(grid: Grid) -> FlowMap {
        FlowMap::from_displacement(VectorField::zeros(grid))
    }

    pub fn from_displacement(displacement: VectorField) -> FlowMap {
        FlowMap { displacement, fine: std::sync::OnceLock::new() }
    }

    pub fn displacement(&self) -> &VectorField {
        &self.displacement
    }

    fn fine(&self) -> &VectorField {
        self.fine
            .get_or_init(|| refine_vec(&self.displacement).expect("displacement transforms"))
    }

    pub fn grid(&self) -> Grid {
        self.displacement.grid()
    }

    /// Image of an arbitrary point, displacement interpolated bicubically.
    pub fn apply(&self, p: Point) -> Point {
        let d = eval_bicubic_vec(self.fine(), p);
        Point::new(p.x + d.x, p.y + d.y)
    }

    /// Image of a grid node; exact, no interpolation.
    pub fn apply_node(&self, i1: usize, i2: usize) -> Point {
        let p = self.grid().point(i1, i2);
        let d = self.displacement.at(i1, i2);
        Point::new(p.x + d.x, p.y + d.y)
    }

    /// The four entries of the displacement gradient, row-major
    /// `(d g1/dx1, d g1/dx2, d g2/dx1, d g2/dx2)`, by spectral
    /// differentiation.
    fn displacement_gradients(&self) -> Result<[RealField; 4]> {
        let sx = forward_transform(&self.displacement.x)?;
        let sy = forward_transform(&self.displacement.y)?;
        Ok([
            inverse_transform(&derivative_spec(&sx, Axis::X1)?)?,
            inverse_transform(&derivative_spec(&sx, Axis::X2)?)?,
            inverse_transform(&derivative_spec(&sy, Axis::X1)?)?,
            inverse_transform(&derivative_spec(&sy, Axis::X2)?)?,
        ])
    }

    /// Jacobian determinant of `phi = id + g` at every node.
    pub fn det_jacobian(&self) -> Result<RealField> {
        let [g1x, g1y, g2x, g2y] = self.displacement_gradients()?;
        let n = self.grid().len();
        let mut det = RealField::zeros(self.grid());
        for i in 0..n {
            let a = 1.0 + g1x.samples()[i];
            let b = g1y.samples()[i];
            let c = g2x.samples()[i];
            let d = 1.0 + g2y.samples()[i];
            det.samples_mut()[i] = a * d - b * c;
        }
        Ok(det)
    }

    /// Largest spectral norm of the Jacobian `d phi` over the grid nodes.
    pub fn max_dphi_norm(&self) -> Result<f64> {
        let [g1x, g1y, g2x, g2y] = self.displacement_gradients()?;
        let mut worst: f64 = 0.0;
        for i in 0..self.grid().len() {
            let a = 1.0 + g1x.samples()[i];
            let b = g1y.samples()[i];
            let c = g2x.samples()[i];
            let d = 1.0 + g2y.samples()[i];
            let f2 = a * a + b * b + c * c + d * d;
            let det = a * d - b * c;
            let disc = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
            let sigma_max = ((f2 + disc) / 2.0).sqrt();
            worst = worst.max(sigma_max);
        }
        Ok(worst)
    }
}

/// Pull a scalar field back along a flow map: `(f o phi)(x) = f(phi(x))`,
/// sampled at the grid nodes. The source is read through a spectrally
/// refined copy, so the result is accurate in Sobolev norms well past the
/// nominal bicubic budget; unpaired Nyquist content of `f` is dropped.
pub fn compose(f: &RealField, map: &FlowMap) -> RealField {
    let grid = f.grid();
    grid.check_same_layout(&map.grid(), "compose").expect("grids agree");
    let fine = refine(f, SAMPLE_REFINE).expect("source field transforms");
    let mut out = RealField::zeros(grid);
    for i2 in 0..grid.n2() {
        for i1 in 0..grid.n1() {
            let p = map.apply_node(i1, i2);
            out.samples_mut()[grid.index(i1, i2)] = eval_bicubic(&fine, p);
        }
    }
    out
}

/// Invert a flow map by fixed-point iteration on the inverse displacement.
pub fn invert_flow_map(map: &FlowMap) -> Result<FlowMap> {
    let grid = map.grid();
    let g = map.fine();
    let mut h = VectorField::zeros(grid);
    for _iter in 0..MAX_INVERSION_ITERS {
        let mut residual: f64 = 0.0;
        let mut next = VectorField::zeros(grid);
        for i2 in 0..grid.n2() {
            for i1 in 0..grid.n1() {
                let idx = grid.index(i1, i2);
                let p = grid.point(i1, i2);
                let hv = h.at(i1, i2);
                let gv = eval_bicubic_vec(g, Point::new(p.x + hv.x, p.y + hv.y));
                let ex = hv.x + gv.x;
                let ey = hv.y + gv.y;
                residual = residual.max(ex.hypot(ey));
                next.x.samples_mut()[idx] = -gv.x;
                next.y.samples_mut()[idx] = -gv.y;
            }
        }
        if residual <= INVERSION_TOL {
            return Ok(FlowMap::from_displacement(h));
        }
        h = next;
    }
    // one last residual measurement for the error report
    let mut residual: f64 = 0.0;
    for i2 in 0..grid.n2() {
        for i1 in 0..grid.n1() {
            let p = grid.point(i1, i2);
            let hv = h.at(i1, i2);
            let gv = eval_bicubic_vec(g, Point::new(p.x + hv.x, p.y + hv.y));
            residual = residual.max((hv.x + gv.x).hypot(hv.y + gv.y));
        }
    }
    Err(Error::InversionStalled {
        residual,
        tol: INVERSION_TOL,
        iterations: MAX_INVERSION_ITERS,
    })
}

/// Transport a density by a flow map: `rho0 o phi^{-1}`.
pub fn reconstruct_density(rho0: &RealField, flow: &FlowMap) -> Result<RealField> {
    let inverse = invert_flow_map(flow)?;
    Ok(compose(rho0, &inverse))
}

/// Result of a coupled density/flow solve.
#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub flow: FlowMap,
    /// Lagrangian velocity at the final time, `u(T) o phi(T)`.
    pub velocity: VectorField,
    pub record: SolutionRecord,
}

/// A stored intermediate state of the coupled solve.
#[derive(Debug, Clone)]
pub struct FlowSnapshot {
    pub time: f64,
    pub flow: FlowMap,
    /// Lagrangian velocity `u(t) o phi(t)`.
    pub velocity: VectorField,
}

fn compose_velocity(u: &VectorField, flow: &FlowMap) -> VectorField {
    VectorField::new(compose(&u.x, flow), compose(&u.y, flow))
}

/// Velocity of the displacement at every node: `u` interpolated at
/// `x + g(x)`. Interpolation reads a refined copy of `u`; the stage
/// velocities are the one place where sampling error is injected into the
/// displacement at every step, so this is where the oversampling pays.
fn displacement_rhs(u: &VectorField, g: &VectorField) -> Result<VectorField> {
    let u = refine_vec(u)?;
    let grid = g.grid();
    let mut out = VectorField::zeros(grid);
    for i2 in 0..grid.n2() {
        for i1 in 0..grid.n1() {
            let idx = grid.index(i1, i2);
            let p = grid.point(i1, i2);
            let gv = g.at(i1, i2);
            let v = eval_bicubic_vec(&u, Point::new(p.x + gv.x, p.y + gv.y));
            out.x.samples_mut()[idx] = v.x;
            out.y.samples_mut()[idx] = v.y;
        }
    }
    Ok(out)
}

struct CoupledState {
    rho: RealField,
    g: VectorField,
}

/// One RK4 step of the coupled system. The CFL guard runs on the stage-1
/// velocity, before any state is touched.
fn coupled_step(
    state: &mut CoupledState,
    dt: f64,
    dealias_on: bool,
    guards: &StepGuards,
    step: usize,
) -> Result<()> {
    let (k1r, u1) = rhs_with_velocity(&state.rho, dealias_on)?;
    guards.check_cfl(&u1, step)?;
    let k1g = displacement_rhs(&u1, &state.g)?;

    let mut rho_s = state.rho.clone();
    rho_s.axpy(dt / 2.0, &k1r);
    let mut g_s = state.g.clone();
    g_s.axpy(dt / 2.0, &k1g);
    let (k2r, u2) = rhs_with_velocity(&rho_s, dealias_on)?;
    let k2g = displacement_rhs(&u2, &g_s)?;

    let mut rho_s = state.rho.clone();
    rho_s.axpy(dt / 2.0, &k2r);
    let mut g_s = state.g.clone();
    g_s.axpy(dt / 2.0, &k2g);
    let (k3r, u3) = rhs_with_velocity(&rho_s, dealias_on)?;
    let k3g = displacement_rhs(&u3, &g_s)?;

    let mut rho_s = state.rho.clone();
    rho_s.axpy(dt, &k3r);
    let mut g_s = state.g.clone();
    g_s.axpy(dt, &k3g);
    let (k4r, u4) = rhs_with_velocity(&rho_s, dealias_on)?;
    let k4g = displacement_rhs(&u4, &g_s)?;

    state.rho.axpy(dt / 6.0, &k1r);
    state.rho.axpy(dt / 3.0, &k2r);
    state.rho.axpy(dt / 3.0, &k3r);
    state.rho.axpy(dt / 6.0, &k4r);
    state.g.axpy(dt / 6.0, &k1g);
    state.g.axpy(dt / 3.0, &k2g);
    state.g.axpy(dt / 3.0, &k3g);
    state.g.axpy(dt / 6.0, &k4g);
    Ok(())
}

fn diagnostics_for(rho: &RealField, time: f64, s: f64) -> Result<crate::transport::StepDiagnostics> {
    let spec = forward_transform(rho)?;
    Ok(crate::transport::StepDiagnostics {
        time,
        mean: rho.mean(),
        l2: crate::spectral::norms::l2_norm(rho),
        min: rho.min(),
        max: rho.max(),
        hs: crate::spectral::norms::sobolev_norm_spec(&spec, s),
    })
}

/// Solve the coupled density/flow system over `cfg.t_final`.
pub fn solve_flow(rho0: &RealField, cfg: &SolverConfig) -> Result<FlowSolution> {
    Ok(solve_flow_with_snapshots(rho0, cfg, usize::MAX)?.0)
}

/// As [`solve_flow`], additionally storing `(t, phi, u o phi)` every
/// `stride` steps (the initial and final states are always stored; pass
/// `usize::MAX` to store only those).
pub fn solve_flow_with_snapshots(
    rho0: &RealField,
    cfg: &SolverConfig,
    stride: usize,
) -> Result<(FlowSolution, Vec<FlowSnapshot>)> {
    cfg.validate()?;
    if stride == 0 {
        return Err(Error::BadArgument { what: "snapshot stride = 0".into() });
    }
    rho0.check_finite("initial density")?;
    rho0.check_mean_zero()?;

    let grid = rho0.grid();
    let s = grid.s();
    let initial_hs = crate::spectral::norms::sobolev_norm(rho0, s)?;
    let guards = StepGuards {
        cfg,
        hs_limit: SURVEILLANCE_FACTOR * initial_hs.max(f64::MIN_POSITIVE),
        s,
    };

    let steps = cfg.steps();
    let dt = cfg.dt;
    let mut state = CoupledState { rho: rho0.clone(), g: VectorField::zeros(grid) };
    let mut diagnostics = Vec::with_capacity(steps + 1);
    diagnostics.push(diagnostics_for(&state.rho, 0.0, s)?);

    let mut snapshots = Vec::new();
    let (_, u0) = rhs_with_velocity(&state.rho, cfg.dealias)?;
    snapshots.push(FlowSnapshot {
        time: 0.0,
        flow: FlowMap::identity(grid),
        velocity: u0,
    });

    let mut last_velocity = None;
    for step in 0..steps {
        coupled_step(&mut state, dt, cfg.dealias, &guards, step)?;
        guards.check_state(&state.rho, step)?;
        let flow = FlowMap::from_displacement(state.g.clone());
        let det = flow.det_jacobian()?;
        let min_det = det.min();
        if !(min_det > 0.0) {
            return Err(Error::NonPositiveJacobian { step, min_det });
        }

        let time = (step + 1) as f64 * dt;
        diagnostics.push(diagnostics_for(&state.rho, time, s)?);

        let is_last = step + 1 == steps;
        if (step + 1) % stride == 0 || is_last {
            let (_, u) = rhs_with_velocity(&state.rho, cfg.dealias)?;
            let velocity = compose_velocity(&u, &flow);
            if is_last {
                last_velocity = Some(velocity.clone());
            }
            snapshots.push(FlowSnapshot { time, flow, velocity });
        }
    }

    let flow = FlowMap::from_displacement(state.g);
    let velocity = match last_velocity {
        Some(v) => v,
        None => {
            let (_, u) = rhs_with_velocity(&state.rho, cfg.dealias)?;
            compose_velocity(&u, &flow)
        }
    };
    let record = SolutionRecord { rho: state.rho, diagnostics, steps };
    Ok((FlowSolution { flow, velocity, record }, snapshots))
}

/// The time-1 flow map `Psi(rho0) = phi(1; rho0)`, the object whose
/// input-to-flow regularity the experiments interrogate.
pub fn psi_map(rho0: &RealField, cfg: &SolverConfig) -> Result<FlowMap> {
    let cfg = cfg.with_horizon(1.0);
    Ok(solve_flow(rho0, &cfg)?.flow)
}

/// A particle path, recorded without wrapping: coordinates accumulate
/// continuously even when the particle crosses the fundamental domain.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub x0: Point,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
}

/// Trace one particle; see [`trace_trajectories`].
pub fn trace_trajectory(x0: Point, rho0: &RealField, cfg: &SolverConfig) -> Result<Trajectory> {
    let mut all = trace_trajectories(&[x0], rho0, cfg, 1)?;
    Ok(all.remove(0))
}

/// Spectral point evaluation of a stage velocity. Bicubic sampling is not
/// smooth across cell boundaries, and the curvature kinks it plants at
/// every crossing leave an algebraic tail in the Chebyshev spectrum of
/// the path, right where the analyticity probe reads. The exact Fourier
/// sum costs O(n^2) per point but keeps the sampled field analytic.
struct SpectralVelocity {
    x: SpectralField,
    y: SpectralField,
}

impl SpectralVelocity {
    fn of(u: &VectorField) -> Result<SpectralVelocity> {
        Ok(SpectralVelocity { x: forward_transform(&u.x)?, y: forward_transform(&u.y)? })
    }

    fn at(&self, p: Point) -> Point {
        Point::new(eval_fourier(&self.x, p), eval_fourier(&self.y, p))
    }
}

/// Integrate particle paths through the evolving velocity field. The
/// density runs on the grid, the particles ride along on the same RK4
/// stages, sampling each stage velocity spectrally at their staged
/// positions. Positions are recorded every `stride` steps, plus the
/// initial and final times.
pub fn trace_trajectories(
    seeds: &[Point],
    rho0: &RealField,
    cfg: &SolverConfig,
    stride: usize,
) -> Result<Vec<Trajectory>> {
    cfg.validate()?;
    if stride == 0 {
        return Err(Error::BadArgument { what: "trajectory stride = 0".into() });
    }
    if seeds.is_empty() {
        return Err(Error::BadArgument { what: "no trajectory seeds".into() });
    }
    for (i, p) in seeds.iter().enumerate() {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return Err(Error::BadArgument { what: format!("trajectory seed {i} is not finite") });
        }
    }
    rho0.check_finite("initial density")?;
    rho0.check_mean_zero()?;

    let s = rho0.grid().s();
    let initial_hs = crate::spectral::norms::sobolev_norm(rho0, s)?;
    let guards = StepGuards {
        cfg,
        hs_limit: SURVEILLANCE_FACTOR * initial_hs.max(f64::MIN_POSITIVE),
        s,
    };

    let steps = cfg.steps();
    let dt = cfg.dt;
    let mut rho = rho0.clone();
    let mut pos: Vec<Point> = seeds.to_vec();
    let mut times = vec![0.0];
    let mut tracks: Vec<Vec<Point>> = seeds.iter().map(|&p| vec![p]).collect();

    for step in 0..steps {
        let (k1r, u1) = rhs_with_velocity(&rho, cfg.dealias)?;
        guards.check_cfl(&u1, step)?;
        let s1 = SpectralVelocity::of(&u1)?;
        let k1p: Vec<Point> = pos.iter().map(|&p| s1.at(p)).collect();

        let mut rho_s = rho.clone();
        rho_s.axpy(dt / 2.0, &k1r);
        let (k2r, u2) = rhs_with_velocity(&rho_s, cfg.dealias)?;
        let s2 = SpectralVelocity::of(&u2)?;
        let k2p: Vec<Point> = pos
            .iter()
            .zip(&k1p)
            .map(|(&p, k)| s2.at(Point::new(p.x + dt / 2.0 * k.x, p.y + dt / 2.0 * k.y)))
            .collect();

        let mut rho_s = rho.clone();
        rho_s.axpy(dt / 2.0, &k2r);
        let (k3r, u3) = rhs_with_velocity(&rho_s, cfg.dealias)?;
        let s3 = SpectralVelocity::of(&u3)?;
        let k3p: Vec<Point> = pos
            .iter()
            .zip(&k2p)
            .map(|(&p, k)| s3.at(Point::new(p.x + dt / 2.0 * k.x, p.y + dt / 2.0 * k.y)))
            .collect();

        let mut rho_s = rho.clone();
        rho_s.axpy(dt, &k3r);
        let (k4r, u4) = rhs_with_velocity(&rho_s, cfg.dealias)?;
        let s4 = SpectralVelocity::of(&u4)?;
        let k4p: Vec<Point> = pos
            .iter()
            .zip(&k3p)
            .map(|(&p, k)| s4.at(Point::new(p.x + dt * k.x, p.y + dt * k.y)))
            .collect();

        rho.axpy(dt / 6.0, &k1r);
        rho.axpy(dt / 3.0, &k2r);
        rho.axpy(dt / 3.0, &k3r);
        rho.axpy(dt / 6.0, &k4r);
        for (j, p) in pos.iter_mut().enumerate() {
            p.x += dt / 6.0 * (k1p[j].x + 2.0 * k2p[j].x + 2.0 * k3p[j].x + k4p[j].x);
            p.y += dt / 6.0 * (k1p[j].y + 2.0 * k2p[j].y + 2.0 * k3p[j].y + k4p[j].y);
        }

        guards.check_state(&rho, step)?;
        if (step + 1) % stride == 0 || step + 1 == steps {
            times.push((step + 1) as f64 * dt);
            for (j, track) in tracks.iter_mut().enumerate() {
                track.push(pos[j]);
            }
        }
    }

    Ok(seeds
        .iter()
        .zip(tracks)
        .map(|(&x0, points)| Trajectory { x0, times: times.clone(), points })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::norms::{l2_norm, sobolev_norm};
    use crate::transport::solve_density;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, n, 32.0, 2.5).unwrap()
    }

    fn single_mode_displacement(g: Grid, amp: f64) -> VectorField {
        let l = g.box_length();
        let gx = RealField::from_fn(g, move |x, y| {
            amp * (2.0 * PI * x / l).sin() * (2.0 * PI * y / l).cos()
        });
        let gy = RealField::from_fn(g, move |x, y| {
            amp * (2.0 * PI * 2.0 * x / l).cos() * (2.0 * PI * y / l).sin()
        });
        VectorField::new(gx, gy)
    }

    #[test]
    fn identity_map_fixes_points_and_has_unit_jacobian() {
        let map = FlowMap::identity(grid(32));
        let p = Point::new(3.7, 11.2);
        let q = map.apply(p);
        assert!((q.x - p.x).abs() < 1e-14 && (q.y - p.y).abs() < 1e-14);
        let det = map.det_jacobian().unwrap();
        assert!((det.min() - 1.0).abs() < 1e-13 && (det.max() - 1.0).abs() < 1e-13);
        assert!((map.max_dphi_norm().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inversion_round_trip_meets_the_fixed_point_tolerance() {
        let g = grid(64);
        let map = FlowMap::from_displacement(single_mode_displacement(g, 0.2));
        let inv = invert_flow_map(&map).unwrap();
        let mut worst: f64 = 0.0;
        for i2 in 0..g.n2() {
            for i1 in 0..g.n1() {
                let x = g.point(i1, i2);
                let y = inv.apply(x);
                let z = map.apply(y);
                worst = worst.max((z.x - x.x).hypot(z.y - x.y));
            }
        }
        assert!(worst <= 2.0 * INVERSION_TOL, "round-trip error {worst:e}");
    }

    #[test]
    fn inversion_reports_a_stall_on_a_non_contractive_map() {
        let g = grid(32);
        let map = FlowMap::from_displacement(single_mode_displacement(g, 8.0));
        match invert_flow_map(&map) {
            Err(Error::InversionStalled { iterations, .. }) => {
                assert_eq!(iterations, MAX_INVERSION_ITERS);
            }
            other => panic!("expected a stall, got {other:?}"),
        }
    }

    #[test]
    fn jacobian_matches_the_closed_form_for_a_shear() {
        let g = grid(64);
        let l = g.box_length();
        let eps = 0.3;
        let gx = RealField::from_fn(g, move |_, y| eps * (2.0 * PI * y / l).sin());
        let gy = RealField::zeros(g);
        let map = FlowMap::from_displacement(VectorField::new(gx, gy));
        let det = map.det_jacobian().unwrap();
        assert!((det.min() - 1.0).abs() < 1e-12 && (det.max() - 1.0).abs() < 1e-12);
        // largest |d g1/d x2| is eps * 2 pi / L; sigma_max of [[1, b], [0, 1]]
        let b = eps * 2.0 * PI / l;
        let f2 = 2.0 + b * b;
        let expect = ((f2 + (f2 * f2 - 4.0f64).sqrt()) / 2.0).sqrt();
        let got = map.max_dphi_norm().unwrap();
        assert!(
            (got - expect).abs() <= 1e-10 * expect,
            "sigma_max {got} vs closed form {expect}"
        );
    }

    #[test]
    fn compose_with_identity_is_exact_at_nodes() {
        let g = grid(32);
        let f = RealField::from_fn(g, |x, y| (2.0 * PI * x / 32.0).sin() + 0.3 * (2.0 * PI * y / 32.0).cos());
        let out = compose(&f, &FlowMap::identity(g));
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            worst = worst.max((out.samples()[i] - f.samples()[i]).abs());
        }
        assert!(worst < 1e-13);
    }

    #[test]
    fn coupled_density_agrees_with_the_plain_solver() {
        let g = grid(64);
        let l = g.box_length();
        let mut rho = RealField::from_fn(g, |x, y| {
            0.4 * (2.0 * PI * x / l).sin() * (2.0 * PI * 2.0 * y / l).sin()
        });
        rho.remove_mean();
        let cfg = SolverConfig { dt: 0.01, t_final: 0.1, ..Default::default() };
        let plain = solve_density(&rho, &cfg).unwrap();
        let coupled = solve_flow(&rho, &cfg).unwrap();
        let gap = l2_norm(&plain.rho.sub(&coupled.record.rho));
        assert!(gap <= 1e-13 * l2_norm(&plain.rho).max(1.0), "gap {gap:e}");
    }

    #[test]
    fn flow_transports_the_density() {
        let g = grid(64);
        let l = g.box_length();
        let mut rho = RealField::from_fn(g, |x, y| {
            0.4 * (2.0 * PI * x / l).sin() * (2.0 * PI * 2.0 * y / l).sin()
        });
        rho.remove_mean();
        let cfg = SolverConfig { dt: 0.01, t_final: 0.25, ..Default::default() };
        let sol = solve_flow(&rho, &cfg).unwrap();
        let rebuilt = reconstruct_density(&rho, &sol.flow).unwrap();
        let gap = sobolev_norm(&rebuilt.sub(&sol.record.rho), 0.0).unwrap();
        let scale = sobolev_norm(&rho, 0.0).unwrap();
        assert!(gap <= 1e-3 * scale, "transport defect {gap:e} vs scale {scale:e}");
    }

    #[test]
    fn psi_of_rest_is_the_identity() {
        let g = grid(32);
        let cfg = SolverConfig { dt: 0.05, ..Default::default() };
        let psi = psi_map(&RealField::zeros(g), &cfg).unwrap();
        // The velocity of the zero density is exactly zero, so no stage ever
        // moves a node and the displacement stays bitwise null.
        assert_eq!(psi.displacement().x.max_abs(), 0.0);
        assert_eq!(psi.displacement().y.max_abs(), 0.0);
    }

    /// Amplitude trades against horizon: the time-1 flow of `rho / 2` is the
    /// time-1/2 flow of `rho`. Both runs use the same step size, so the
    /// defect is pure time-discretization error, well under the strong-norm
    /// budget of 1e-5.
    #[test]
    fn psi_collapses_amplitude_into_the_horizon() {
        let g = grid(64);
        let l = g.box_length();
        let mut rho = RealField::from_fn(g, |x, y| {
            0.8 * (2.0 * PI * x / l).sin() * (2.0 * PI * 2.0 * y / l).cos()
        });
        rho.remove_mean();
        let mut half = rho.clone();
        half.scale(0.5);
        let psi = psi_map(&half, &SolverConfig { dt: 0.01, ..Default::default() }).unwrap();
        let cfg = SolverConfig { dt: 0.01, t_final: 0.5, ..Default::default() };
        let sol = solve_flow(&rho, &cfg).unwrap();
        let d = psi.displacement().sub(sol.flow.displacement());
        let gap = sobolev_norm(&d.x, g.s())
            .unwrap()
            .hypot(sobolev_norm(&d.y, g.s()).unwrap());
        assert!(gap <= 1e-5, "rescaling defect {gap:e}");
    }

    #[test]
    fn stratified_column_rides_a_straight_line() {
        // rho depending on x1 alone is steady and pushes particles straight
        // down the column at speed -rho.
        let g = grid(64);
        let l = g.box_length();
        let amp = 0.5;
        let mut rho = RealField::from_fn(g, move |x, _| amp * (2.0 * PI * x / l).sin());
        rho.remove_mean();
        let cfg = SolverConfig { dt: 0.01, t_final: 0.5, ..Default::default() };
        let x0 = Point::new(l / 4.0, 10.0); // sin peaks here, speed is -amp
        let traj = trace_trajectory(x0, &rho, &cfg).unwrap();
        for (t, p) in traj.times.iter().zip(&traj.points) {
            let expect_y = 10.0 - amp * t;
            assert!((p.x - x0.x).abs() <= 1e-8, "x drift {:e}", (p.x - x0.x).abs());
            assert!((p.y - expect_y).abs() <= 1e-8, "y error {:e}", (p.y - expect_y).abs());
        }
        assert_eq!(traj.points.len(), traj.times.len());
    }

    #[test]
    fn node_seeded_trajectory_matches_the_flow_map() {
        let g = grid(64);
        let l = g.box_length();
        let mut rho = RealField::from_fn(g, |x, y| {
            0.4 * (2.0 * PI * x / l).sin() * (2.0 * PI * y / l).sin()
                + 0.2 * (2.0 * PI * 2.0 * x / l).cos() * (2.0 * PI * y / l).sin()
        });
        rho.remove_mean();
        let cfg = SolverConfig { dt: 0.01, t_final: 0.2, ..Default::default() };
        let (i1, i2) = (16, 40);
        let x0 = g.point(i1, i2);
        let traj = trace_trajectory(x0, &rho, &cfg).unwrap();
        let sol = solve_flow(&rho, &cfg).unwrap();
        let via_map = sol.flow.apply_node(i1, i2);
        let end = *traj.points.last().unwrap();
        let gap = (via_map.x - end.x).hypot(via_map.y - end.y);
        // The tracer samples stage velocities spectrally while the flow map
        // co-evolves node displacements on bicubic samples, so the two paths
        // agree only to the interpolation budget (measured 2.9e-10 here).
        assert!(gap <= 1e-8, "flow/trajectory gap {gap:e}");
    }

    #[test]
    fn snapshot_stride_records_endpoints() {
        let g = grid(32);
        let l = g.box_length();
        let mut rho = RealField::from_fn(g, |x, y| {
            0.1 * (2.0 * PI * x / l).sin() * (2.0 * PI * y / l).sin()
        });
        rho.remove_mean();
        let cfg = SolverConfig { dt: 0.01, t_final: 0.05, ..Default::default() };
        let (_, snaps) = solve_flow_with_snapshots(&rho, &cfg, 2).unwrap();
        let times: Vec<f64> = snaps.iter().map(|s| s.time).collect();
        assert_eq!(times.len(), 4); // t = 0, 0.02, 0.04, 0.05
        assert_eq!(times[0], 0.0);
        assert!((times[3] - 0.05).abs() < 1e-12);
    }
}
