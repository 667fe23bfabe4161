//! Command line driver for the porous media laboratory.
//!
//! Every run resolves a configuration (file or defaults), writes a
//! manifest pinning the tool version and the canonical config echo into
//! the output directory, then runs one subcommand. Artifacts are
//! deterministic: the same configuration produces byte-identical files.
//!
//! Exit codes: 0 success, 1 validation failure, 2 solver abort, 3 I/O.

use clap::{Parser, Subcommand};
use ipm::error::{Error, ErrorCategory};
use ipm::experiments::{run_prop3, scaling_check};
use ipm::io::config::{echo_config, parse_config, RunConfig};
use ipm::io::report::{emit_report, write_manifest};
use ipm::io::snapshot::write_snapshot;
use ipm::lagrangian::analyticity::analyticity_probe;
use ipm::lagrangian::{solve_flow, trace_trajectories, Trajectory};
use ipm::operators::DarcyVelocity;
use ipm::spectral::field::RealField;
use ipm::spectral::grid::Grid;
use ipm::transport::{solve_density, SolutionRecord, SolverConfig};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ipm", version, about = "Pseudo-spectral porous media laboratory")]
struct Cli {
    /// Configuration file; omitted means built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `[output] dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Replace existing snapshot files instead of refusing.
    #[arg(long, global = true)]
    force: bool,

    /// Worker threads for the experiment sweep; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Compute the Darcy velocity of the configured field with its
    /// divergence and dual-route diagnostics.
    Darcy,
    /// Integrate the density and write the final state.
    Solve,
    /// Integrate the coupled density/flow system and write the final
    /// density, the flow displacement and the Lagrangian velocity.
    Flow,
    /// Trace the configured particle trajectories.
    Trajectory,
    /// Check the parabolic scaling identity of the solver.
    ScalingCheck,
    /// Run the two-family perturbation experiment and emit its reports.
    Prop3,
    /// Probe trajectory analyticity through Chebyshev coefficient decay.
    Analyticity,
    /// Run fast internal consistency checks.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Darcy => "darcy",
            Command::Solve => "solve",
            Command::Flow => "flow",
            Command::Trajectory => "trajectory",
            Command::ScalingCheck => "scaling-check",
            Command::Prop3 => "prop3",
            Command::Analyticity => "analyticity",
            Command::Selftest => "selftest",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.category() {
                ErrorCategory::Validation => 1,
                ErrorCategory::SolverAbort => 2,
                ErrorCategory::Io => 3,
            })
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn run(cli: &Cli) -> ipm::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::BadArgument { what: format!("thread pool: {e}") })?;
    }

    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(io_err(path))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = Some(out.clone());
    }
    let out_dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("ipm-out"));
    cfg.output_dir = Some(out_dir.clone());
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    write_manifest(&out_dir, cli.command.name(), &echo_config(&cfg))?;

    match cli.command {
        Command::Darcy => cmd_darcy(&cfg, &out_dir, cli.force),
        Command::Solve => cmd_solve(&cfg, &out_dir, cli.force),
        Command::Flow => cmd_flow(&cfg, &out_dir, cli.force),
        Command::Trajectory => cmd_trajectory(&cfg, &out_dir),
        Command::ScalingCheck => cmd_scaling(&cfg, &out_dir),
        Command::Prop3 => cmd_prop3(&cfg, &out_dir),
        Command::Analyticity => cmd_analyticity(&cfg, &out_dir),
        Command::Selftest => cmd_selftest(&cfg),
    }
}

fn write_csv(path: &Path, content: &str) -> ipm::Result<()> {
    fs::write(path, content).map_err(io_err(path))
}

fn diagnostics_csv(record: &SolutionRecord) -> String {
    let mut out = String::from("time,mean,l2,min,max,hs\n");
    for d in &record.diagnostics {
        let _ = writeln!(out, "{},{},{},{},{},{}", d.time, d.mean, d.l2, d.min, d.max, d.hs);
    }
    out
}

fn cmd_darcy(cfg: &RunConfig, out: &Path, force: bool) -> ipm::Result<()> {
    let rho = cfg.field.realize(cfg.grid)?;
    let d = DarcyVelocity::compute(&rho)?;
    write_snapshot(&rho, 0.0, &out.join("rho.ipm"), force)?;
    write_snapshot(&d.u.x, 0.0, &out.join("u1.ipm"), force)?;
    write_snapshot(&d.u.y, 0.0, &out.join("u2.ipm"), force)?;
    write_csv(
        &out.join("darcy.csv"),
        &format!(
            "max_divergence,route_residual\n{},{}\n",
            d.max_divergence, d.route_residual
        ),
    )?;
    println!(
        "darcy: max |div u| = {:.3e}, route residual = {:.3e}",
        d.max_divergence, d.route_residual
    );
    Ok(())
}

fn cmd_solve(cfg: &RunConfig, out: &Path, force: bool) -> ipm::Result<()> {
    let rho0 = cfg.field.realize(cfg.grid)?;
    let record = solve_density(&rho0, &cfg.solver)?;
    write_snapshot(&record.rho, cfg.solver.t_final, &out.join("rho_final.ipm"), force)?;
    write_csv(&out.join("diagnostics.csv"), &diagnostics_csv(&record))?;
    let last = record.diagnostics.last().expect("diagnostics are never empty");
    println!(
        "solve: {} steps to t = {}, final H^s norm {:.6e}",
        record.steps, cfg.solver.t_final, last.hs
    );
    Ok(())
}

fn cmd_flow(cfg: &RunConfig, out: &Path, force: bool) -> ipm::Result<()> {
    let rho0 = cfg.field.realize(cfg.grid)?;
    let sol = solve_flow(&rho0, &cfg.solver)?;
    let t = cfg.solver.t_final;
    write_snapshot(&sol.record.rho, t, &out.join("rho_final.ipm"), force)?;
    write_snapshot(&sol.flow.displacement().x, t, &out.join("flow_g1.ipm"), force)?;
    write_snapshot(&sol.flow.displacement().y, t, &out.join("flow_g2.ipm"), force)?;
    write_snapshot(&sol.velocity.x, t, &out.join("velocity_v1.ipm"), force)?;
    write_snapshot(&sol.velocity.y, t, &out.join("velocity_v2.ipm"), force)?;
    write_csv(&out.join("diagnostics.csv"), &diagnostics_csv(&sol.record))?;
    println!(
        "flow: {} steps to t = {}, max displacement {:.6e}",
        sol.record.steps,
        t,
        sol.flow.displacement().max_norm()
    );
    Ok(())
}

fn trajectories_csv(trajectories: &[Trajectory]) -> String {
    let mut out = String::from("seed,time,x,y\n");
    for (k, traj) in trajectories.iter().enumerate() {
        for (t, p) in traj.times.iter().zip(&traj.points) {
            let _ = writeln!(out, "{k},{t},{},{}", p.x, p.y);
        }
    }
    out
}

fn cmd_trajectory(cfg: &RunConfig, out: &Path) -> ipm::Result<()> {
    let rho0 = cfg.field.realize(cfg.grid)?;
    let trajectories = trace_trajectories(
        &cfg.trajectory.seeds,
        &rho0,
        &cfg.solver,
        cfg.trajectory.stride,
    )?;
    write_csv(&out.join("trajectories.csv"), &trajectories_csv(&trajectories))?;
    println!(
        "trajectory: {} particles, {} samples each",
        trajectories.len(),
        trajectories[0].times.len()
    );
    Ok(())
}

fn cmd_scaling(cfg: &RunConfig, out: &Path) -> ipm::Result<()> {
    let rho0 = cfg.field.realize(cfg.grid)?;
    let check = scaling_check(&rho0, cfg.scaling.horizon, cfg.scaling.lambda, &cfg.solver)?;
    write_csv(
        &out.join("scaling.csv"),
        &format!(
            "lambda,horizon,defect\n{},{},{}\n",
            check.lambda, check.horizon, check.defect
        ),
    )?;
    println!(
        "scaling-check: lambda = {}, horizon = {}, relative defect = {:.3e}",
        check.lambda, check.horizon, check.defect
    );
    Ok(())
}

fn cmd_prop3(cfg: &RunConfig, out: &Path) -> ipm::Result<()> {
    let p3 = cfg.prop3_config();
    p3.validate()?;
    let report = run_prop3(&p3)?;
    emit_report(&report, out)?;
    let v = &report.verdicts;
    println!(
        "prop3: {} rows; input_exact = {}, output_floor = {}, separation = {}, disjoint = {}",
        report.rows.len(),
        v.input_exact,
        v.output_floor,
        v.separation,
        v.disjoint
    );
    println!(
        "prop3: constants m = {:.6e}, L = {:.6e}, d = {:.6e}, C_tilde = {:.6e}",
        report.constants.m, report.constants.l, report.constants.d, report.constants.c_tilde
    );
    Ok(())
}

fn cmd_analyticity(cfg: &RunConfig, out: &Path) -> ipm::Result<()> {
    let rho0 = cfg.field.realize(cfg.grid)?;
    // the Chebyshev probe wants a uniform, dense time series, so the
    // configured stride is ignored here and every step is kept
    let trajectories = trace_trajectories(&cfg.trajectory.seeds, &rho0, &cfg.solver, 1)?;
    let mut summary = String::from("seed,x0,y0,scale,noise_floor,tail_max,rate,r2,points\n");
    let mut coeffs = String::from("seed,k,coeff_x,coeff_y\n");
    for (k, traj) in trajectories.iter().enumerate() {
        let probe = analyticity_probe(traj)?;
        let (rate, r2, points) = match &probe.fit {
            Some(fit) => (format!("{}", fit.rate), format!("{}", fit.r2), fit.count),
            None => ("".into(), "".into(), 0),
        };
        let scale = probe.magnitude.iter().cloned().fold(0.0, f64::max);
        let _ = writeln!(
            summary,
            "{k},{},{},{scale},{},{},{rate},{r2},{points}",
            traj.x0.x,
            traj.x0.y,
            probe.noise_floor,
            probe.tail_max()
        );
        for (j, (cx, cy)) in probe.coeff_x.iter().zip(&probe.coeff_y).enumerate() {
            let _ = writeln!(coeffs, "{k},{j},{cx},{cy}");
        }
    }
    write_csv(&out.join("analyticity.csv"), &summary)?;
    write_csv(&out.join("coefficients.csv"), &coeffs)?;
    println!("analyticity: probed {} trajectories", trajectories.len());
    Ok(())
}

fn cmd_selftest(cfg: &RunConfig) -> ipm::Result<()> {
    use ipm::io::snapshot::{read_snapshot_bytes, snapshot_bytes};

    let grid = Grid::new(32, 32, cfg.grid.box_length(), cfg.grid.s())?;
    let mut checks = 0usize;

    let rho = RealField::random_band_limited(grid, 11, 2.0, 6);
    let d = DarcyVelocity::compute(&rho)?;
    if d.route_residual > 1e-11 {
        return Err(Error::BadArgument {
            what: format!("selftest: dual-route residual {} exceeds 1e-11", d.route_residual),
        });
    }
    checks += 1;

    let strat = RealField::from_fn(grid, |_, y| {
        (2.0 * std::f64::consts::PI * y / grid.box_length()).sin()
    });
    let short = SolverConfig { dt: 0.01, t_final: 0.05, ..Default::default() };
    let record = solve_density(&strat, &short)?;
    let drift = ipm::spectral::norms::l2_norm(&record.rho.sub(&strat))
        / ipm::spectral::norms::l2_norm(&strat);
    if drift > 1e-10 {
        return Err(Error::BadArgument {
            what: format!("selftest: stratified drift {drift} exceeds 1e-10"),
        });
    }
    checks += 1;

    let snap = read_snapshot_bytes(&snapshot_bytes(&rho, 0.75))?;
    if snap.time != 0.75 || snap.field.samples() != rho.samples() {
        return Err(Error::BadArgument { what: "selftest: snapshot round trip drifted".into() });
    }
    checks += 1;

    let echoed = parse_config(&echo_config(cfg))?;
    if &echoed != cfg {
        return Err(Error::BadArgument { what: "selftest: config echo did not round-trip".into() });
    }
    checks += 1;

    println!("selftest: {checks} checks passed");
    Ok(())
}
