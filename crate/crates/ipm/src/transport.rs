//! Fixed-step RK4 integration of the density transport equation
//! `rho_t = -u(rho) . grad rho` with the Darcy velocity closure.
//!
//! Two runtime guards keep runs honest rather than silently garbage: a CFL
//! check on the advective Courant number before every step, and a blow-up
//! surveillance on the H^s norm after every step.

use crate::error::{Error, Result};
use crate::operators::darcy_velocity_spec;
use crate::spectral::fft::{forward_transform, inverse_transform};
use crate::spectral::field::{RealField, VectorField};
use crate::spectral::multiplier::{dealias, derivative_spec, Axis};
use crate::spectral::norms::{l2_norm, sobolev_norm_spec};

/// Factor by which the H^s norm may grow before the run aborts.
pub const SURVEILLANCE_FACTOR: f64 = 1e3;

/// The only integrator on offer; the tag exists so configs and manifests
/// can state it explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    #[default]
    Rk4,
}

/// Time-stepping parameters shared by the density and flow solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Step size; the horizon must be an integer number of steps.
    pub dt: f64,
    /// Final time.
    pub t_final: f64,
    pub integrator: Integrator,
    /// Apply the 2/3 rule to the advection product (on in production; the
    /// switch exists for aliasing experiments).
    pub dealias: bool,
    /// Largest admissible Courant number `max|u| dt n / L`.
    pub cfl_guard: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 5e-3,
            t_final: 1.0,
            integrator: Integrator::Rk4,
            dealias: true,
            cfl_guard: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::BadArgument { what: format!("dt = {}", self.dt) });
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(Error::BadArgument { what: format!("t_final = {}", self.t_final) });
        }
        if self.dt > self.t_final {
            return Err(Error::BadArgument {
                what: format!("dt = {} exceeds t_final = {}", self.dt, self.t_final),
            });
        }
        if !(self.cfl_guard > 0.0) {
            return Err(Error::BadArgument {
                what: format!("cfl_guard = {}", self.cfl_guard),
            });
        }
        let steps = self.t_final / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::BadArgument {
                what: format!(
                    "t_final = {} is not an integer multiple of dt = {}",
                    self.t_final, self.dt
                ),
            });
        }
        Ok(())
    }

    /// Number of RK4 steps covering the horizon.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    /// Same parameters, different horizon.
    pub fn with_horizon(&self, t_final: f64) -> SolverConfig {
        SolverConfig { t_final, ..*self }
    }
}

/// Direction of integration. `Backward` integrates `rho_t = +u . grad rho`,
/// which undoes a forward run up to the scheme's own truncation error; it
/// exists for reversibility diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDirection {
    Forward,
    Backward,
}

/// Per-step scalar diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepDiagnostics {
    pub time: f64,
    pub mean: f64,
    pub l2: f64,
    pub min: f64,
    pub max: f64,
    pub hs: f64,
}

/// Outcome of a density solve: the final state plus the diagnostics series
/// (one entry per step, including t = 0).
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub rho: RealField,
    pub diagnostics: Vec<StepDiagnostics>,
    pub steps: usize,
}

fn diagnostics_at(rho: &RealField, time: f64, s: f64) -> Result<StepDiagnostics> {
    let spec = forward_transform(rho)?;
    Ok(StepDiagnostics {
        time,
        mean: rho.mean(),
        l2: l2_norm(rho),
        min: rho.min(),
        max: rho.max(),
        hs: sobolev_norm_spec(&spec, s),
    })
}

/// Right-hand side `-u . grad rho` (dealiased) together with the velocity,
/// sharing one forward transform across all terms.
pub(crate) fn rhs_with_velocity(
    rho: &RealField,
    dealias_on: bool,
) -> Result<(RealField, VectorField)> {
    let spec = forward_transform(rho)?;
    let u = darcy_velocity_spec(&spec)?;
    let fx = inverse_transform(&derivative_spec(&spec, Axis::X1)?)?;
    let fy = inverse_transform(&derivative_spec(&spec, Axis::X2)?)?;
    let product = u.x.mul(&fx).add(&u.y.mul(&fy));
    let mut prod_spec = forward_transform(&product)?;
    if dealias_on {
        prod_spec = dealias(&prod_spec);
    }
    let mut rhs = inverse_transform(&prod_spec)?;
    rhs.scale(-1.0);
    Ok((rhs, u))
}

/// Eulerian right-hand side `-advect(darcy_velocity(rho), rho)`.
pub fn rhs_eulerian(rho: &RealField) -> Result<RealField> {
    rho.check_finite("rhs input")?;
    rho.check_mean_zero()?;
    Ok(rhs_with_velocity(rho, true)?.0)
}

pub(crate) struct StepGuards<'a> {
    pub cfg: &'a SolverConfig,
    pub hs_limit: f64,
    pub s: f64,
}

impl StepGuards<'_> {
    pub fn check_cfl(&self, u: &VectorField, step: usize) -> Result<()> {
        let grid = u.grid();
        let n = grid.n1().max(grid.n2()) as f64;
        let courant = u.max_norm() * self.cfg.dt * n / grid.box_length();
        if courant > self.cfg.cfl_guard {
            return Err(Error::Cfl { step, courant, limit: self.cfg.cfl_guard });
        }
        Ok(())
    }

    pub fn check_state(&self, rho: &RealField, step: usize) -> Result<f64> {
        if rho.first_non_finite().is_some() {
            return Err(Error::Surveillance { step, norm: f64::NAN, limit: self.hs_limit });
        }
        let hs = crate::spectral::norms::sobolev_norm(rho, self.s)?;
        if hs > self.hs_limit {
            return Err(Error::Surveillance { step, norm: hs, limit: self.hs_limit });
        }
        Ok(hs)
    }
}

/// Integrate the transport equation over `cfg.t_final`.
pub fn solve_density(rho0: &RealField, cfg: &SolverConfig) -> Result<SolutionRecord> {
    solve_density_directed(rho0, cfg, TimeDirection::Forward)
}

/// Integrate forward or backward in time; see [`TimeDirection`].
pub fn solve_density_directed(
    rho0: &RealField,
    cfg: &SolverConfig,
    direction: TimeDirection,
) -> Result<SolutionRecord> {
    cfg.validate()?;
    rho0.check_finite("initial density")?;
    rho0.check_mean_zero()?;

    let s = rho0.grid().s();
    let sign = match direction {
        TimeDirection::Forward => 1.0,
        TimeDirection::Backward => -1.0,
    };
    let initial_hs = crate::spectral::norms::sobolev_norm(rho0, s)?;
    let guards = StepGuards {
        cfg,
        hs_limit: SURVEILLANCE_FACTOR * initial_hs.max(f64::MIN_POSITIVE),
        s,
    };

    let steps = cfg.steps();
    let dt = cfg.dt;
    let mut rho = rho0.clone();
    let mut diagnostics = Vec::with_capacity(steps + 1);
    diagnostics.push(diagnostics_at(&rho, 0.0, s)?);

    for step in 0..steps {
        let (k1, u) = rhs_with_velocity(&rho, cfg.dealias)?;
        guards.check_cfl(&u, step)?;

        let mut stage = rho.clone();
        stage.axpy(sign * dt / 2.0, &k1);
        let (k2, _) = rhs_with_velocity(&stage, cfg.dealias)?;

        let mut stage = rho.clone();
        stage.axpy(sign * dt / 2.0, &k2);
        let (k3, _) = rhs_with_velocity(&stage, cfg.dealias)?;

        let mut stage = rho.clone();
        stage.axpy(sign * dt, &k3);
        let (k4, _) = rhs_with_velocity(&stage, cfg.dealias)?;

        rho.axpy(sign * dt / 6.0, &k1);
        rho.axpy(sign * dt / 3.0, &k2);
        rho.axpy(sign * dt / 3.0, &k3);
        rho.axpy(sign * dt / 6.0, &k4);

        guards.check_state(&rho, step)?;
        diagnostics.push(diagnostics_at(&rho, (step + 1) as f64 * dt, s)?);
    }

    Ok(SolutionRecord { rho, diagnostics, steps })
}

/// The time-T solution map `Phi_T`.
pub fn solution_map(rho0: &RealField, t_final: f64, cfg: &SolverConfig) -> Result<RealField> {
    Ok(solve_density(rho0, &cfg.with_horizon(t_final))?.rho)
}
