//! Plain-text run configuration.
//!
//! The format is a flat INI-style document: `[section]` headers, `key =
//! value` lines, `#` or `;` comments. Parsing is strict (an unknown key or
//! section is an error naming it) and every run echoes its configuration
//! back in canonical form, so `parse(echo(cfg))` reproduces `cfg` exactly;
//! floats are printed in shortest round-trip form.

use crate::error::{Error, Result};
use crate::experiments::{make_bump, BumpSpec, Prop3Config};
use crate::spectral::field::RealField;
use crate::spectral::grid::{Grid, Point};
use crate::spectral::norms::sobolev_norm;
use crate::transport::SolverConfig;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

/// How the working field is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    /// A mean-zero bump pair (see [`make_bump`]).
    Bump(BumpSpec),
    /// Band-limited random data with a fixed seed, scaled to an H^s norm.
    Random { seed: u64, k_cut: usize, target_norm: f64 },
    /// A single horizontal mode `amplitude * sin(2 pi mode x2 / L)`; a
    /// discrete equilibrium of the dynamics.
    Stratified { mode: usize, amplitude: f64 },
}

impl FieldSpec {
    pub fn realize(&self, grid: Grid) -> Result<RealField> {
        match *self {
            FieldSpec::Bump(ref spec) => make_bump(grid, spec),
            FieldSpec::Random { seed, k_cut, target_norm } => {
                let mut f = RealField::random_band_limited(grid, seed, 2.0, k_cut);
                let norm = sobolev_norm(&f, grid.s())?;
                if norm == 0.0 {
                    return Err(Error::BadArgument {
                        what: "random field came out empty; raise k_cut".into(),
                    });
                }
                f.scale(target_norm / norm);
                Ok(f)
            }
            FieldSpec::Stratified { mode, amplitude } => {
                let l = grid.box_length();
                let k = mode as f64;
                let mut f =
                    RealField::from_fn(grid, move |_, y| amplitude * (2.0 * PI * k * y / l).sin());
                f.remove_mean();
                Ok(f)
            }
        }
    }
}

/// Scaling-identity experiment parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingSpec {
    pub lambda: f64,
    pub horizon: f64,
}

/// Trajectory-tracing parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub seeds: Vec<Point>,
    pub stride: usize,
}

/// Two-family experiment parameters (grid and solver come from the shared
/// sections).
#[derive(Debug, Clone, PartialEq)]
pub struct Prop3Settings {
    pub rho_base: BumpSpec,
    pub rho_dir: BumpSpec,
    pub probe: Point,
    pub r_ball: f64,
    pub n_terms: usize,
    pub fd_eps: Option<f64>,
}

/// A fully resolved run configuration; every field has a default, so the
/// empty document is valid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub solver: SolverConfig,
    pub field: FieldSpec,
    pub scaling: ScalingSpec,
    pub trajectory: TrajectorySpec,
    pub prop3: Prop3Settings,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let deck = Prop3Config::desk_default();
        let center = Point::new(16.0, 16.0);
        let seeds = (0..10)
            .map(|j| {
                let angle = 2.0 * PI * j as f64 / 10.0;
                Point::new(center.x + 3.0 * angle.cos(), center.y + 3.0 * angle.sin())
            })
            .collect();
        RunConfig {
            grid: deck.grid,
            solver: deck.solver,
            field: FieldSpec::Bump(BumpSpec { center, radius: 4.0, target_norm: 0.5 }),
            scaling: ScalingSpec { lambda: 2.0, horizon: 0.5 },
            trajectory: TrajectorySpec { seeds, stride: 1 },
            prop3: Prop3Settings {
                rho_base: deck.rho_base,
                rho_dir: deck.rho_dir,
                probe: deck.probe,
                r_ball: deck.r_ball,
                n_terms: deck.n_terms,
                fd_eps: deck.fd_eps,
            },
            output_dir: None,
        }
    }
}

impl RunConfig {
    /// Assemble the two-family experiment configuration from the shared
    /// grid/solver sections and the `[prop3]` settings.
    pub fn prop3_config(&self) -> Prop3Config {
        Prop3Config {
            grid: self.grid,
            solver: self.solver,
            rho_base: self.prop3.rho_base,
            rho_dir: self.prop3.rho_dir,
            probe: self.prop3.probe,
            r_ball: self.prop3.r_ball,
            n_terms: self.prop3.n_terms,
            fd_eps: self.prop3.fd_eps,
        }
    }
}

fn bad(line: usize, message: String) -> Error {
    Error::Config { line, message }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse::<T>().map_err(|_| {
        bad(line, format!("value for `{key}` is not a valid {}: `{value}`", std::any::type_name::<T>()))
    })
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(line, format!("value for `{key}` must be true or false, got `{value}`"))),
    }
}

fn parse_point(key: &str, value: &str, line: usize) -> Result<Point> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(bad(line, format!("value for `{key}` must be `x, y`, got `{value}`")));
    }
    Ok(Point::new(
        parse_num::<f64>(key, parts[0], line)?,
        parse_num::<f64>(key, parts[1], line)?,
    ))
}

fn parse_points(key: &str, value: &str, line: usize) -> Result<Vec<Point>> {
    let mut seeds = Vec::new();
    for chunk in value.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        seeds.push(parse_point(key, chunk, line)?);
    }
    if seeds.is_empty() {
        return Err(bad(line, format!("`{key}` lists no points")));
    }
    Ok(seeds)
}

/// Per-kind keys of the `[field]` section, staged with their source lines
/// so misuse can point at the offending assignment.
#[derive(Default)]
struct FieldStage {
    kind: Option<(String, usize)>,
    center: Option<(Point, usize)>,
    radius: Option<(f64, usize)>,
    norm: Option<(f64, usize)>,
    seed: Option<(u64, usize)>,
    k_cut: Option<(usize, usize)>,
    mode: Option<(usize, usize)>,
    amplitude: Option<(f64, usize)>,
}

impl FieldStage {
    fn build(self, fallback: FieldSpec) -> Result<FieldSpec> {
        let untouched = self.kind.is_none()
            && self.center.is_none()
            && self.radius.is_none()
            && self.norm.is_none()
            && self.seed.is_none()
            && self.k_cut.is_none()
            && self.mode.is_none()
            && self.amplitude.is_none();
        if untouched {
            return Ok(fallback);
        }
        let (kind, kind_line) = match &self.kind {
            Some((k, l)) => (k.as_str(), *l),
            None => ("bump", 0),
        };
        let reject = |slot: Option<(&str, usize)>| -> Result<()> {
            if let Some((key, line)) = slot {
                return Err(bad(
                    line,
                    format!("key `{key}` does not apply to field kind `{kind}`"),
                ));
            }
            Ok(())
        };
        match kind {
            "bump" => {
                reject(self.seed.map(|(_, l)| ("seed", l)))?;
                reject(self.k_cut.map(|(_, l)| ("k_cut", l)))?;
                reject(self.mode.map(|(_, l)| ("mode", l)))?;
                reject(self.amplitude.map(|(_, l)| ("amplitude", l)))?;
                Ok(FieldSpec::Bump(BumpSpec {
                    center: self.center.map(|v| v.0).unwrap_or(Point::new(16.0, 16.0)),
                    radius: self.radius.map(|v| v.0).unwrap_or(4.0),
                    target_norm: self.norm.map(|v| v.0).unwrap_or(0.5),
                }))
            }
            "random" => {
                reject(self.center.map(|(_, l)| ("center", l)))?;
                reject(self.radius.map(|(_, l)| ("radius", l)))?;
                reject(self.mode.map(|(_, l)| ("mode", l)))?;
                reject(self.amplitude.map(|(_, l)| ("amplitude", l)))?;
                Ok(FieldSpec::Random {
                    seed: self.seed.map(|v| v.0).unwrap_or(1),
                    k_cut: self.k_cut.map(|v| v.0).unwrap_or(6),
                    target_norm: self.norm.map(|v| v.0).unwrap_or(0.5),
                })
            }
            "stratified" => {
                reject(self.center.map(|(_, l)| ("center", l)))?;
                reject(self.radius.map(|(_, l)| ("radius", l)))?;
                reject(self.norm.map(|(_, l)| ("norm", l)))?;
                reject(self.seed.map(|(_, l)| ("seed", l)))?;
                reject(self.k_cut.map(|(_, l)| ("k_cut", l)))?;
                Ok(FieldSpec::Stratified {
                    mode: self.mode.map(|v| v.0).unwrap_or(1),
                    amplitude: self.amplitude.map(|v| v.0).unwrap_or(0.5),
                })
            }
            other => Err(bad(
                kind_line,
                format!("unknown field kind `{other}` (expected bump, random or stratified)"),
            )),
        }
    }
}

/// Parse a configuration document. Unset keys keep their defaults; unknown
/// sections or keys are rejected with their line number.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let defaults = RunConfig::default();
    let mut cfg = defaults.clone();
    let (mut n1, mut n2) = (cfg.grid.n1(), cfg.grid.n2());
    let mut box_length = cfg.grid.box_length();
    let mut s = cfg.grid.s();
    let mut grid_line = 0usize;
    let mut solver_line = 0usize;
    let mut field = FieldStage::default();
    let mut section = String::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| bad(line, format!("unterminated section header `{trimmed}`")))?
                .trim();
            match name {
                "grid" => grid_line = line,
                "solver" => solver_line = line,
                "field" | "scaling" | "trajectory" | "prop3" | "output" => {}
                other => return Err(bad(line, format!("unknown section `[{other}]`"))),
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| bad(line, format!("expected `key = value`, got `{trimmed}`")))?;
        if key.is_empty() || value.is_empty() {
            return Err(bad(line, format!("expected `key = value`, got `{trimmed}`")));
        }

        match (section.as_str(), key) {
            ("grid", "n1") => n1 = parse_num(key, value, line)?,
            ("grid", "n2") => n2 = parse_num(key, value, line)?,
            ("grid", "box_length") => box_length = parse_num(key, value, line)?,
            ("grid", "s") => s = parse_num(key, value, line)?,
            ("solver", "dt") => cfg.solver.dt = parse_num(key, value, line)?,
            ("solver", "t_final") => cfg.solver.t_final = parse_num(key, value, line)?,
            ("solver", "dealias") => cfg.solver.dealias = parse_bool(key, value, line)?,
            ("solver", "cfl_guard") => cfg.solver.cfl_guard = parse_num(key, value, line)?,
            ("field", "kind") => field.kind = Some((value.to_string(), line)),
            ("field", "center") => field.center = Some((parse_point(key, value, line)?, line)),
            ("field", "radius") => field.radius = Some((parse_num(key, value, line)?, line)),
            ("field", "norm") => field.norm = Some((parse_num(key, value, line)?, line)),
            ("field", "seed") => field.seed = Some((parse_num(key, value, line)?, line)),
            ("field", "k_cut") => field.k_cut = Some((parse_num(key, value, line)?, line)),
            ("field", "mode") => field.mode = Some((parse_num(key, value, line)?, line)),
            ("field", "amplitude") => {
                field.amplitude = Some((parse_num(key, value, line)?, line))
            }
            ("scaling", "lambda") => cfg.scaling.lambda = parse_num(key, value, line)?,
            ("scaling", "horizon") => cfg.scaling.horizon = parse_num(key, value, line)?,
            ("trajectory", "points") => cfg.trajectory.seeds = parse_points(key, value, line)?,
            ("trajectory", "stride") => cfg.trajectory.stride = parse_num(key, value, line)?,
            ("prop3", "base_center") => {
                cfg.prop3.rho_base.center = parse_point(key, value, line)?
            }
            ("prop3", "base_radius") => cfg.prop3.rho_base.radius = parse_num(key, value, line)?,
            ("prop3", "base_norm") => {
                cfg.prop3.rho_base.target_norm = parse_num(key, value, line)?
            }
            ("prop3", "dir_center") => cfg.prop3.rho_dir.center = parse_point(key, value, line)?,
            ("prop3", "dir_radius") => cfg.prop3.rho_dir.radius = parse_num(key, value, line)?,
            ("prop3", "dir_norm") => {
                cfg.prop3.rho_dir.target_norm = parse_num(key, value, line)?
            }
            ("prop3", "probe") => cfg.prop3.probe = parse_point(key, value, line)?,
            ("prop3", "r_ball") => cfg.prop3.r_ball = parse_num(key, value, line)?,
            ("prop3", "n_terms") => cfg.prop3.n_terms = parse_num(key, value, line)?,
            ("prop3", "fd_eps") => cfg.prop3.fd_eps = Some(parse_num(key, value, line)?),
            ("output", "dir") => cfg.output_dir = Some(PathBuf::from(value)),
            ("", _) => {
                return Err(bad(line, format!("key `{key}` appears before any section")))
            }
            (sec, _) => {
                return Err(bad(line, format!("unknown key `{key}` in section `[{sec}]`")))
            }
        }
    }

    cfg.grid = Grid::new(n1, n2, box_length, s)
        .map_err(|e| bad(grid_line, e.to_string()))?;
    cfg.field = field.build(defaults.field)?;
    cfg.solver
        .validate()
        .map_err(|e| bad(solver_line, e.to_string()))?;
    if cfg.trajectory.stride == 0 {
        return Err(bad(0, "trajectory stride must be positive".into()));
    }
    if !(cfg.scaling.lambda > 0.0) || !cfg.scaling.lambda.is_finite() {
        return Err(bad(0, format!("scaling lambda = {} is not positive", cfg.scaling.lambda)));
    }
    if !(cfg.scaling.horizon > 0.0) || !cfg.scaling.horizon.is_finite() {
        return Err(bad(0, format!("scaling horizon = {} is not positive", cfg.scaling.horizon)));
    }
    Ok(cfg)
}

fn push_point(out: &mut String, key: &str, p: Point) {
    let _ = writeln!(out, "{key} = {}, {}", p.x, p.y);
}

/// Canonical serialization; `parse_config(echo_config(c))` reproduces `c`.
pub fn echo_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[grid]");
    let _ = writeln!(out, "n1 = {}", cfg.grid.n1());
    let _ = writeln!(out, "n2 = {}", cfg.grid.n2());
    let _ = writeln!(out, "box_length = {}", cfg.grid.box_length());
    let _ = writeln!(out, "s = {}", cfg.grid.s());
    let _ = writeln!(out, "\n[solver]");
    let _ = writeln!(out, "dt = {}", cfg.solver.dt);
    let _ = writeln!(out, "t_final = {}", cfg.solver.t_final);
    let _ = writeln!(out, "dealias = {}", cfg.solver.dealias);
    let _ = writeln!(out, "cfl_guard = {}", cfg.solver.cfl_guard);
    let _ = writeln!(out, "\n[field]");
    match &cfg.field {
        FieldSpec::Bump(b) => {
            let _ = writeln!(out, "kind = bump");
            push_point(&mut out, "center", b.center);
            let _ = writeln!(out, "radius = {}", b.radius);
            let _ = writeln!(out, "norm = {}", b.target_norm);
        }
        FieldSpec::Random { seed, k_cut, target_norm } => {
            let _ = writeln!(out, "kind = random");
            let _ = writeln!(out, "seed = {seed}");
            let _ = writeln!(out, "k_cut = {k_cut}");
            let _ = writeln!(out, "norm = {target_norm}");
        }
        FieldSpec::Stratified { mode, amplitude } => {
            let _ = writeln!(out, "kind = stratified");
            let _ = writeln!(out, "mode = {mode}");
            let _ = writeln!(out, "amplitude = {amplitude}");
        }
    }
    let _ = writeln!(out, "\n[scaling]");
    let _ = writeln!(out, "lambda = {}", cfg.scaling.lambda);
    let _ = writeln!(out, "horizon = {}", cfg.scaling.horizon);
    let _ = writeln!(out, "\n[trajectory]");
    let seeds: Vec<String> = cfg
        .trajectory
        .seeds
        .iter()
        .map(|p| format!("{}, {}", p.x, p.y))
        .collect();
    let _ = writeln!(out, "points = {}", seeds.join("; "));
    let _ = writeln!(out, "stride = {}", cfg.trajectory.stride);
    let _ = writeln!(out, "\n[prop3]");
    push_point(&mut out, "base_center", cfg.prop3.rho_base.center);
    let _ = writeln!(out, "base_radius = {}", cfg.prop3.rho_base.radius);
    let _ = writeln!(out, "base_norm = {}", cfg.prop3.rho_base.target_norm);
    push_point(&mut out, "dir_center", cfg.prop3.rho_dir.center);
    let _ = writeln!(out, "dir_radius = {}", cfg.prop3.rho_dir.radius);
    let _ = writeln!(out, "dir_norm = {}", cfg.prop3.rho_dir.target_norm);
    push_point(&mut out, "probe", cfg.prop3.probe);
    let _ = writeln!(out, "r_ball = {}", cfg.prop3.r_ball);
    let _ = writeln!(out, "n_terms = {}", cfg.prop3.n_terms);
    if let Some(eps) = cfg.prop3.fd_eps {
        let _ = writeln!(out, "fd_eps = {eps}");
    }
    if let Some(dir) = &cfg.output_dir {
        let _ = writeln!(out, "\n[output]");
        let _ = writeln!(out, "dir = {}", dir.display());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_the_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.grid.n1(), 256);
        assert_eq!(cfg.grid.box_length(), 32.0);
        assert_eq!(cfg.grid.s(), 2.5);
        assert_eq!(cfg.solver.dt, 5e-3);
        assert_eq!(cfg.solver.t_final, 1.0);
    }

    #[test]
    fn defaults_round_trip_through_echo() {
        let cfg = RunConfig::default();
        let parsed = parse_config(&echo_config(&cfg)).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn customized_config_round_trips_through_echo() {
        let text = "
[grid]
n1 = 128
n2 = 64
box_length = 16
s = 2.75

[solver]
dt = 0.01
t_final = 0.5
dealias = false
cfl_guard = 0.25

[field]
kind = random
seed = 42
k_cut = 9
norm = 0.125

[scaling]
lambda = 4
horizon = 0.25

[trajectory]
points = 1.5, 2.5; 3, 4
stride = 5

[prop3]
base_center = 5, 8
base_radius = 0.75
base_norm = 0.9
dir_center = 7, 6
dir_radius = 1.25
dir_norm = 1.1
probe = 8, 5
r_ball = 0.05
n_terms = 6
fd_eps = 0.001

[output]
dir = out/run1
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.grid.n1(), 128);
        assert_eq!(cfg.grid.n2(), 64);
        assert_eq!(
            cfg.field,
            FieldSpec::Random { seed: 42, k_cut: 9, target_norm: 0.125 }
        );
        assert_eq!(cfg.prop3.fd_eps, Some(0.001));
        assert_eq!(cfg.output_dir, Some(PathBuf::from("out/run1")));
        let reparsed = parse_config(&echo_config(&cfg)).unwrap();
        assert_eq!(reparsed, cfg);
    }

    #[test]
    fn unknown_keys_and_sections_are_named_with_their_line() {
        let err = parse_config("[solver]\nstep = 0.1\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("step"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_config("[turbo]\n").unwrap_err();
        match err {
            Error::Config { line: 1, message } => assert!(message.contains("turbo")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_dt_is_rejected_naming_dt() {
        let err = parse_config("[solver]\ndt = -1\n").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("dt"), "{text}");
    }

    #[test]
    fn type_mismatch_names_the_key() {
        let err = parse_config("[grid]\nn1 = many\n").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("n1") && text.contains("many"), "{text}");
    }

    #[test]
    fn field_keys_must_match_their_kind() {
        let err = parse_config("[field]\nkind = bump\nseed = 3\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("seed") && message.contains("bump"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stratified_field_realizes_mean_zero() {
        let cfg = parse_config("[field]\nkind = stratified\nmode = 2\namplitude = 0.3\n").unwrap();
        let grid = Grid::new(32, 32, 32.0, 2.5).unwrap();
        let f = cfg.field.realize(grid).unwrap();
        assert!(f.mean().abs() < 1e-15);
        assert!((f.max() - 0.3).abs() < 1e-12);
    }
}
