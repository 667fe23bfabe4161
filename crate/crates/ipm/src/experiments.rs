//! Structured experiments built on the solvers: compactly supported bump
//! data, the parabolic scaling identity, and the two-family construction
//! probing uniform continuity of the time-1 solution map.
//!
//! The torus has no mean-zero compactly supported bump, so every bump
//! carries a ballast copy of itself, negated and shifted by half the box
//! in both coordinates. The primary ball is kept away from the domain
//! seam so that plots and support bookkeeping stay readable; the ballast
//! is allowed to wrap.

use crate::error::{Error, Result};
use crate::lagrangian::{solve_flow, solve_flow_with_snapshots, FlowMap};
use crate::operators::{darcy_velocity, default_fd_eps, linearized_psi, rhs_f};
use crate::spectral::field::{RealField, VectorField};
use crate::spectral::grid::{Grid, Point};
use crate::spectral::norms::{c1_norm, l2_norm, sobolev_norm};
use crate::spectral::sample::eval_bicubic_vec;
use crate::transport::{solution_map, SolverConfig};
use rayon::prelude::*;

/// Radius of the stand-in ball used when estimating the flow constants.
pub const PROBE_BALL_RADIUS: f64 = 1.0;
/// Samples count as support above this multiple of the field's sup norm.
pub const SUPPORT_THRESHOLD_REL: f64 = 1e-12;
/// Transported supports must clear each other by this many grid cells.
pub const DISJOINT_MARGIN_CELLS: f64 = 2.0;
/// Smallest derivative magnitude the probe point is allowed to report.
pub const DEGENERATE_PROBE_FLOOR: f64 = 1e-8;

/// A radial bump: center, radius and the H^s norm it is scaled to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpSpec {
    pub center: Point,
    pub radius: f64,
    pub target_norm: f64,
}

fn max_spacing(grid: Grid) -> f64 {
    let (hx, hy) = grid.spacing();
    hx.max(hy)
}

fn bump_profile(t2: f64) -> f64 {
    // t2 = (d / r)^2; classic C-infinity cutoff, 1 at the center
    if t2 < 1.0 {
        (1.0 - 1.0 / (1.0 - t2)).exp()
    } else {
        0.0
    }
}

/// Build a mean-zero bump field scaled to `spec.target_norm` in H^s.
///
/// The primary ball must sit at least a quarter box away from the seam in
/// each coordinate. Radii below the grid spacing are admitted only when
/// the center lands on a node (the profile then degenerates to a single
/// sample); otherwise the support is empty and an error says so.
pub fn make_bump(grid: Grid, spec: &BumpSpec) -> Result<RealField> {
    if !(spec.center.x.is_finite() && spec.center.y.is_finite()) {
        return Err(Error::BadArgument { what: "bump center is not finite".into() });
    }
    if !(spec.radius > 0.0) || !spec.radius.is_finite() {
        return Err(Error::BadArgument { what: format!("bump radius = {}", spec.radius) });
    }
    if !(spec.target_norm > 0.0) || !spec.target_norm.is_finite() {
        return Err(Error::BadArgument { what: format!("bump norm = {}", spec.target_norm) });
    }

    let l = grid.box_length();
    let required = l / 4.0;
    let mut seam = f64::INFINITY;
    for c in [spec.center.x.rem_euclid(l), spec.center.y.rem_euclid(l)] {
        seam = seam.min(c - spec.radius).min(l - c - spec.radius);
    }
    if seam < required {
        return Err(Error::SeamMargin { required, actual: seam });
    }

    let center = spec.center;
    let radius = spec.radius;
    let ballast = Point::new(center.x + l / 2.0, center.y + l / 2.0);
    let primary = RealField::from_fn(grid, move |x, y| {
        let d = grid.torus_distance(Point::new(x, y), center);
        bump_profile((d / radius) * (d / radius))
    });
    let support = primary.samples().iter().filter(|v| **v > 0.0).count();
    if support == 0 {
        return Err(Error::EmptySupport { radius, spacing: max_spacing(grid) });
    }
    let shadow = RealField::from_fn(grid, move |x, y| {
        let d = grid.torus_distance(Point::new(x, y), ballast);
        bump_profile((d / radius) * (d / radius))
    });

    let mut f = primary.sub(&shadow);
    f.remove_mean();
    let norm = sobolev_norm(&f, grid.s())?;
    f.scale(spec.target_norm / norm);
    Ok(f)
}

/// Defect of the parabolic scaling identity: solutions scaled by `lambda`
/// run `lambda` times faster, so `Phi_{lambda T}(rho0)` should equal
/// `(1/lambda) Phi_T(lambda rho0)`. Both runs use the step size of `cfg`,
/// so the defect is a pure time-discretisation artifact.
#[derive(Debug, Clone, Copy)]
pub struct ScalingCheck {
    pub lambda: f64,
    pub horizon: f64,
    /// H^s defect relative to the H^s norm of the initial datum.
    pub defect: f64,
}

pub fn scaling_check(
    rho0: &RealField,
    horizon: f64,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<ScalingCheck> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::BadArgument { what: format!("lambda = {lambda}") });
    }
    let s = rho0.grid().s();
    let slow = solution_map(rho0, lambda * horizon, cfg)?;
    let mut scaled = rho0.clone();
    scaled.scale(lambda);
    let mut fast = solution_map(&scaled, horizon, cfg)?;
    fast.scale(1.0 / lambda);
    let defect = sobolev_norm(&slow.sub(&fast), s)? / sobolev_norm(rho0, s)?;
    Ok(ScalingCheck { lambda, horizon, defect })
}

/// Constants entering the two-family construction, measured on the actual
/// discrete dynamics rather than assumed.
#[derive(Debug, Clone, Copy)]
pub struct EstimatedConstants {
    /// Magnitude of the linearised time-1 flow response at the probe point.
    pub m: f64,
    /// Lipschitz bound for the flow maps near the base datum.
    pub l: f64,
    /// Distance between the transported base support and the transported
    /// probe ball under the base flow.
    pub d: f64,
    /// Bound on C^1-norm growth relative to H^s over the working corpus.
    pub c_tilde: f64,
}

fn vector_l2(v: &VectorField) -> f64 {
    l2_norm(&v.x).hypot(l2_norm(&v.y))
}

fn node_cloud(nodes: &[(usize, usize)], flow: &FlowMap) -> Vec<Point> {
    nodes.iter().map(|&(i1, i2)| flow.apply_node(i1, i2)).collect()
}

fn support_nodes(f: &RealField) -> Vec<(usize, usize)> {
    let grid = f.grid();
    let threshold = SUPPORT_THRESHOLD_REL * f.max_abs();
    let mut nodes = Vec::new();
    for i2 in 0..grid.n2() {
        for i1 in 0..grid.n1() {
            if f.at(i1, i2).abs() > threshold {
                nodes.push((i1, i2));
            }
        }
    }
    nodes
}

fn ball_nodes(grid: Grid, center: Point, radius: f64) -> Vec<(usize, usize)> {
    let mut nodes = Vec::new();
    for i2 in 0..grid.n2() {
        for i1 in 0..grid.n1() {
            if grid.torus_distance(grid.point(i1, i2), center) <= radius {
                nodes.push((i1, i2));
            }
        }
    }
    nodes
}

fn min_cloud_distance(grid: Grid, a: &[Point], b: &[Point]) -> f64 {
    let mut best = f64::INFINITY;
    for pa in a {
        for pb in b {
            best = best.min(grid.torus_distance(*pa, *pb));
        }
    }
    best
}

/// Sharpness ratios `|f|_{C^1} / |f|_{H^s}` for a state and everything the
/// dynamics derives from it.
fn corpus_ratios(rho: &RealField, evolved: &RealField, s: f64, out: &mut Vec<f64>) -> Result<()> {
    for f in [rho, evolved] {
        let u = darcy_velocity(f)?;
        for g in [f, &u.x, &u.y] {
            let hs = sobolev_norm(g, s)?;
            if hs > 1e-300 {
                out.push(c1_norm(g)? / hs);
            }
        }
    }
    Ok(())
}

/// Measure `(m, L, d, C~)` for a base datum, a perturbation direction and
/// a probe point. The corpus behind `L` and `C~` holds the base datum and
/// its two natural perturbations: a resolved stand-in for the probe-ball
/// family and the direction field scaled into the working ball of radius
/// `r_ball`.
pub fn estimate_constants(
    rho_base: &RealField,
    rho_dir: &RealField,
    probe: Point,
    r_ball: f64,
    fd_eps: Option<f64>,
    cfg: &SolverConfig,
) -> Result<EstimatedConstants> {
    let grid = rho_base.grid();
    grid.check_same_layout(&rho_dir.grid(), "estimate_constants")?;
    if !(r_ball > 0.0) || !r_ball.is_finite() {
        return Err(Error::BadArgument { what: format!("r_ball = {r_ball}") });
    }
    let s = grid.s();
    let cfg1 = cfg.with_horizon(1.0);

    let probe_bump = make_bump(
        grid,
        &BumpSpec { center: probe, radius: PROBE_BALL_RADIUS, target_norm: r_ball / 2.0 },
    )?;
    let dir_norm = sobolev_norm(rho_dir, s)?;
    let mut dir_scaled = rho_dir.clone();
    dir_scaled.scale(r_ball / (2.0 * dir_norm));

    let corpus = [
        rho_base.clone(),
        rho_base.add(&probe_bump),
        rho_base.add(&dir_scaled),
    ];

    let mut max_dphi: f64 = 0.0;
    let mut ratios = Vec::new();
    let mut base_flow = None;
    for (i, field) in corpus.iter().enumerate() {
        let sol = solve_flow(field, &cfg1)?;
        max_dphi = max_dphi.max(sol.flow.max_dphi_norm()?);
        corpus_ratios(field, &sol.record.rho, s, &mut ratios)?;
        if i == 0 {
            base_flow = Some(sol.flow);
        }
    }
    let l = 1.0 + 1.1 * max_dphi;
    let c_tilde = 1.1 * ratios.iter().cloned().fold(0.0, f64::max);

    let eps = match fd_eps {
        Some(e) => e,
        None => default_fd_eps(rho_dir, s)?,
    };
    let dpsi = linearized_psi(rho_base, rho_dir, eps, &cfg1)?;
    let response = eval_bicubic_vec(&dpsi, probe);
    let m = response.x.hypot(response.y);
    if m < DEGENERATE_PROBE_FLOOR {
        return Err(Error::DegenerateProbe { magnitude: m, threshold: DEGENERATE_PROBE_FLOOR });
    }

    let flow = base_flow.expect("corpus is non-empty");
    let base_nodes = support_nodes(rho_base);
    let probe_nodes = ball_nodes(grid, probe, PROBE_BALL_RADIUS);
    if base_nodes.is_empty() || probe_nodes.is_empty() {
        return Err(Error::EmptySupport {
            radius: PROBE_BALL_RADIUS,
            spacing: max_spacing(grid),
        });
    }
    let d = min_cloud_distance(
        grid,
        &node_cloud(&base_nodes, &flow),
        &node_cloud(&probe_nodes, &flow),
    );

    Ok(EstimatedConstants { m, l, d, c_tilde })
}

/// Parameters of the two-family experiment.
#[derive(Debug, Clone)]
pub struct Prop3Config {
    pub grid: Grid,
    pub solver: SolverConfig,
    /// The base datum around which uniform continuity is interrogated.
    pub rho_base: BumpSpec,
    /// The perturbation direction, added with weight 1/n.
    pub rho_dir: BumpSpec,
    /// Probe point where the flows are compared.
    pub probe: Point,
    /// Radius of the working ball in H^s around the base datum.
    pub r_ball: f64,
    /// Number of family members; member `n` gets bump radius `m/(8 n L)`.
    pub n_terms: usize,
    /// Finite-difference step for the derivative probe; the default is
    /// resolved from the direction field's norm.
    pub fd_eps: Option<f64>,
}

impl Prop3Config {
    /// The desk-scale configuration: 256^2 grid on a box of 32, unit
    /// horizon, eight family members.
    pub fn desk_default() -> Prop3Config {
        Prop3Config {
            grid: Grid::new(256, 256, 32.0, 2.5).expect("desk grid is valid"),
            solver: SolverConfig::default(),
            rho_base: BumpSpec {
                center: Point::new(10.0, 16.0),
                radius: 1.0,
                target_norm: 1.0,
            },
            rho_dir: BumpSpec {
                center: Point::new(14.0, 12.0),
                radius: 2.0,
                target_norm: 1.0,
            },
            probe: Point::new(16.0, 10.0),
            r_ball: 0.1,
            n_terms: 8,
            fd_eps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.n_terms < 4 {
            return Err(Error::BadArgument {
                what: format!("n_terms = {} (need at least 4 family members)", self.n_terms),
            });
        }
        if !(self.r_ball > 0.0) || !self.r_ball.is_finite() {
            return Err(Error::BadArgument { what: format!("r_ball = {}", self.r_ball) });
        }
        if let Some(e) = self.fd_eps {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::BadArgument { what: format!("fd_eps = {e}") });
            }
        }
        // the probe must sit well clear of the base support, ballast included
        let l = self.grid.box_length();
        let ballast = Point::new(
            self.rho_base.center.x + l / 2.0,
            self.rho_base.center.y + l / 2.0,
        );
        for c in [self.rho_base.center, ballast] {
            let gap = self.grid.torus_distance(self.probe, c) - self.rho_base.radius;
            if gap < 2.0 {
                return Err(Error::BadArgument {
                    what: format!(
                        "probe is {gap:.3} from the base support (need at least 2)"
                    ),
                });
            }
        }
        Ok(())
    }
}

/// One family member of the experiment.
#[derive(Debug, Clone)]
pub struct Prop3Row {
    pub n: usize,
    /// Bump radius `m / (8 n L)`.
    pub r_n: f64,
    /// H^s distance between the two inputs (`|rho_dir|_s / n` by design).
    pub input_dist: f64,
    /// H^s distance between the two time-1 states.
    pub output_dist: f64,
    /// Separation of the two flows at the probe point.
    pub flow_sep: f64,
    /// The separation the construction predicts, `m / (2 n)`.
    pub sep_bound: f64,
    /// Transported base and bump supports stay two cells apart under both
    /// flows.
    pub disjoint: bool,
    /// Transported bump support stays within `L r_n` (plus margin) of the
    /// transported probe point.
    pub contained: bool,
    pub solve_ok: bool,
    /// Abort reason when a solve failed.
    pub note: String,
}

/// Aggregate pass/fail signals over the family.
#[derive(Debug, Clone, Copy)]
pub struct Prop3Verdicts {
    /// Input distances match `|rho_dir|_s / n` to rounding.
    pub input_exact: bool,
    /// Output distances never fall below half the n = 1 value.
    pub output_floor: bool,
    /// Flow separation reaches half of `m / (2n)` for every member.
    pub separation: bool,
    /// Support disjointness holds for every member.
    pub disjoint: bool,
    /// Every member's solves completed.
    pub solves_ok: bool,
}

/// One line of bookkeeping per completed solve, for the diagnostics report.
#[derive(Debug, Clone)]
pub struct SolveSummary {
    pub label: String,
    pub steps: usize,
    pub initial_hs: f64,
    pub final_hs: f64,
    pub mean_drift: f64,
    pub l2_drift: f64,
}

impl SolveSummary {
    fn from_record(label: String, record: &crate::transport::SolutionRecord) -> SolveSummary {
        let first = &record.diagnostics[0];
        let last = record.diagnostics.last().expect("diagnostics are non-empty");
        SolveSummary {
            label,
            steps: record.steps,
            initial_hs: first.hs,
            final_hs: last.hs,
            mean_drift: (last.mean - first.mean).abs(),
            l2_drift: (last.l2 - first.l2).abs(),
        }
    }
}

/// Full record of a two-family run.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub constants: EstimatedConstants,
    pub rows: Vec<Prop3Row>,
    pub verdicts: Prop3Verdicts,
    /// H^s norm of the direction field, the scale behind `input_dist`.
    pub dir_norm: f64,
    /// Least-squares slope of `log flow_sep` against `log n` over the
    /// completed rows; NaN when fewer than three rows completed.
    pub separation_slope: f64,
    /// One summary per completed solve, in row order.
    pub solves: Vec<SolveSummary>,
}

fn failed_row(n: usize, r_n: f64, input_dist: f64, sep_bound: f64, note: String) -> Prop3Row {
    Prop3Row {
        n,
        r_n,
        input_dist,
        output_dist: f64::NAN,
        flow_sep: f64::NAN,
        sep_bound,
        disjoint: false,
        contained: false,
        solve_ok: false,
        note,
    }
}

fn prop3_row(
    n: usize,
    config: &Prop3Config,
    constants: &EstimatedConstants,
    rho_base: &RealField,
    rho_dir: &RealField,
    base_nodes: &[(usize, usize)],
) -> (Prop3Row, Vec<SolveSummary>) {
    let grid = config.grid;
    let s = grid.s();
    let cfg1 = config.solver.with_horizon(1.0);
    let r_n = constants.m / (8.0 * n as f64 * constants.l);
    let sep_bound = constants.m / (2.0 * n as f64);

    let bump = match make_bump(
        grid,
        &BumpSpec { center: config.probe, radius: r_n, target_norm: config.r_ball / 2.0 },
    ) {
        Ok(b) => b,
        Err(e) => return (failed_row(n, r_n, f64::NAN, sep_bound, e.to_string()), Vec::new()),
    };
    let first = rho_base.add(&bump);
    let mut dir_n = rho_dir.clone();
    dir_n.scale(1.0 / n as f64);
    let second = first.add(&dir_n);
    // the two inputs differ by dir_n exactly, so measure that field itself
    // rather than re-subtracting the states and picking up rounding noise
    let input_dist = match sobolev_norm(&dir_n, s) {
        Ok(v) => v,
        Err(e) => return (failed_row(n, r_n, f64::NAN, sep_bound, e.to_string()), Vec::new()),
    };

    let mut summaries = Vec::new();
    let sol_a = match solve_flow(&first, &cfg1) {
        Ok(v) => v,
        Err(e) => {
            return (failed_row(n, r_n, input_dist, sep_bound, e.to_string()), summaries)
        }
    };
    summaries.push(SolveSummary::from_record(format!("n={n}/base"), &sol_a.record));
    let sol_b = match solve_flow(&second, &cfg1) {
        Ok(v) => v,
        Err(e) => {
            return (failed_row(n, r_n, input_dist, sep_bound, e.to_string()), summaries)
        }
    };
    summaries.push(SolveSummary::from_record(format!("n={n}/perturbed"), &sol_b.record));

    let output_dist = match sobolev_norm(&sol_b.record.rho.sub(&sol_a.record.rho), s) {
        Ok(v) => v,
        Err(e) => {
            return (failed_row(n, r_n, input_dist, sep_bound, e.to_string()), summaries)
        }
    };
    let pa = sol_a.flow.apply(config.probe);
    let pb = sol_b.flow.apply(config.probe);
    let flow_sep = (pa.x - pb.x).hypot(pa.y - pb.y);

    let margin = DISJOINT_MARGIN_CELLS * max_spacing(grid);
    let bump_nodes = ball_nodes(grid, config.probe, r_n.max(max_spacing(grid) * 0.5));
    let mut disjoint = true;
    for flow in [&sol_a.flow, &sol_b.flow] {
        let base_cloud = node_cloud(base_nodes, flow);
        let bump_cloud = node_cloud(&bump_nodes, flow);
        if min_cloud_distance(grid, &base_cloud, &bump_cloud) < margin {
            disjoint = false;
        }
    }

    let mut contained = true;
    for p in node_cloud(&bump_nodes, &sol_a.flow) {
        if grid.torus_distance(p, pa) > constants.l * r_n + margin {
            contained = false;
        }
    }

    let row = Prop3Row {
        n,
        r_n,
        input_dist,
        output_dist,
        flow_sep,
        sep_bound,
        disjoint,
        contained,
        solve_ok: true,
        note: String::new(),
    };
    (row, summaries)
}

/// Least-squares slope of `log y` against `log x`.
fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 3 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Run the two-family experiment: estimate the constants, then for each
/// `n` compare the time-1 states and flows of `rho_base + w_n` and
/// `rho_base + w_n + rho_dir / n`.
pub fn run_prop3(config: &Prop3Config) -> Result<ExperimentReport> {
    config.validate()?;
    let grid = config.grid;
    let s = grid.s();
    let rho_base = make_bump(grid, &config.rho_base)?;
    let rho_dir = make_bump(grid, &config.rho_dir)?;
    let dir_norm = sobolev_norm(&rho_dir, s)?;

    let constants = estimate_constants(
        &rho_base,
        &rho_dir,
        config.probe,
        config.r_ball,
        config.fd_eps,
        &config.solver,
    )?;

    let base_nodes = support_nodes(&rho_base);
    let outcomes: Vec<(Prop3Row, Vec<SolveSummary>)> = (1..=config.n_terms)
        .into_par_iter()
        .map(|n| prop3_row(n, config, &constants, &rho_base, &rho_dir, &base_nodes))
        .collect();
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut solves = Vec::new();
    for (row, summaries) in outcomes {
        rows.push(row);
        solves.extend(summaries);
    }

    let solves_ok = rows.iter().all(|r| r.solve_ok);
    let input_exact = rows.iter().all(|r| {
        r.input_dist.is_finite()
            && (r.n as f64 * r.input_dist - dir_norm).abs() <= 1e-13 * dir_norm
    });
    let first_output = rows.first().map(|r| r.output_dist).unwrap_or(f64::NAN);
    let output_floor = solves_ok
        && first_output.is_finite()
        && rows.iter().all(|r| r.output_dist >= 0.5 * first_output);
    let separation = solves_ok && rows.iter().all(|r| r.flow_sep >= 0.5 * r.sep_bound);
    let disjoint = solves_ok && rows.iter().all(|r| r.disjoint);
    let sep_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.solve_ok && r.flow_sep > 0.0)
        .map(|r| (r.n as f64, r.flow_sep))
        .collect();
    let separation_slope = log_log_slope(&sep_points);

    Ok(ExperimentReport {
        constants,
        rows,
        verdicts: Prop3Verdicts { input_exact, output_floor, separation, disjoint, solves_ok },
        dir_norm,
        separation_slope,
        solves,
    })
}

/// Residual of the Lagrangian acceleration law at one differencing stride.
#[derive(Debug, Clone, Copy)]
pub struct CommutatorResidual {
    /// Differencing step in time units.
    pub h: f64,
    /// Worst relative L^2 residual over all admissible interior times.
    pub residual: f64,
    /// Worst absolute L^2 residual, before dividing by the force scale.
    pub worst_defect: f64,
}

/// Outcome of the acceleration-law check.
#[derive(Debug, Clone)]
pub struct CommutatorCheck {
    /// Largest L^2 size of the commutator force over the interior times;
    /// the normalisation behind `residual`.
    pub force_scale: f64,
    pub residuals: Vec<CommutatorResidual>,
}

/// Force scales below this are treated as identically zero dynamics, making
/// the relative residual zero by definition.
const FORCE_SCALE_FLOOR: f64 = 1e-13;

/// Compare the centered difference of the Lagrangian velocity against the
/// commutator right-hand side at every interior snapshot time, for each
/// requested differencing stride (in solver steps). One coupled solve with
/// per-step snapshots serves all strides.
pub fn commutator_consistency(
    rho0: &RealField,
    cfg: &SolverConfig,
    strides: &[usize],
) -> Result<CommutatorCheck> {
    cfg.validate()?;
    if strides.is_empty() || strides.contains(&0) {
        return Err(Error::BadArgument { what: "differencing strides must be positive".into() });
    }
    let steps = cfg.steps();
    let max_stride = *strides.iter().max().expect("non-empty");
    if steps < 2 * max_stride + 1 {
        return Err(Error::BadArgument {
            what: format!("{steps} steps cannot center a difference of stride {max_stride}"),
        });
    }

    let (_, snaps) = solve_flow_with_snapshots(rho0, cfg, 1)?;
    debug_assert_eq!(snaps.len(), steps + 1);

    let mut scale: f64 = 0.0;
    let mut defects = vec![0.0f64; strides.len()];
    for c in 1..steps {
        let force = rhs_f(&snaps[c].flow, &snaps[c].velocity, rho0)?;
        scale = scale.max(vector_l2(&force));
        for (slot, &k) in defects.iter_mut().zip(strides) {
            if c < k || c + k > steps {
                continue;
            }
            let h = k as f64 * cfg.dt;
            let mut accel = snaps[c + k].velocity.clone();
            accel.axpy(-1.0, &snaps[c - k].velocity);
            accel.scale(1.0 / (2.0 * h));
            accel.axpy(-1.0, &force);
            *slot = slot.max(vector_l2(&accel));
        }
    }

    let residuals = strides
        .iter()
        .zip(&defects)
        .map(|(&k, &worst)| CommutatorResidual {
            h: k as f64 * cfg.dt,
            residual: if scale > FORCE_SCALE_FLOOR { worst / scale } else { 0.0 },
            worst_defect: worst,
        })
        .collect();
    Ok(CommutatorCheck { force_scale: scale, residuals })
}
