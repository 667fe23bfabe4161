use ipm::experiments::{commutator_consistency, make_bump, BumpSpec, Prop3Config};
use ipm::lagrangian::analyticity::analyticity_probe;
use ipm::lagrangian::{invert_flow_map, reconstruct_density, solve_flow, trace_trajectory};
use ipm::spectral::{eval_bicubic_vec, refine, sobolev_norm, Grid, Point, RealField, VectorField};
use ipm::transport::{solution_map, SolverConfig};

fn roundtrip_defects(flow: &ipm::lagrangian::FlowMap) -> (f64, f64) {
    let grid = flow.grid();
    let inv = invert_flow_map(flow).unwrap();
    let g = flow.displacement();
    let gf = VectorField::new(refine(&g.x, 4).unwrap(), refine(&g.y, 4).unwrap());
    let mut raw = 0.0f64;
    let mut fine = 0.0f64;
    for i2 in 0..grid.n2() {
        for i1 in 0..grid.n1() {
            let p = inv.apply_node(i1, i2);
            let x = grid.point(i1, i2);
            let q = flow.apply(p);
            raw = raw.max((q.x - x.x).hypot(q.y - x.y));
            let d = eval_bicubic_vec(&gf, p);
            fine = fine.max((p.x + d.x - x.x).hypot(p.y + d.y - x.y));
        }
    }
    (raw, fine)
}

fn gaussian_blob(grid: Grid, center: Point, sigma: f64) -> RealField {
    let l = grid.box_length();
    let mut f = RealField::from_fn(grid, |x, y| {
        let dx = (x - center.x).rem_euclid(l);
        let dy = (y - center.y).rem_euclid(l);
        let dx = dx.min(l - dx);
        let dy = dy.min(l - dy);
        (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
    });
    f.remove_mean();
    let norm = sobolev_norm(&f, grid.s()).unwrap();
    f.scale(1.0 / norm);
    f
}

fn equivalence_gap(n: usize, dt: f64, sigma: f64) -> f64 {
    let grid = Grid::new(n, n, 32.0, 2.5).unwrap();
    let rho0 = gaussian_blob(grid, Point::new(16.0, 16.0), sigma);
    let cfg = SolverConfig { dt, ..SolverConfig::default() };
    let eulerian = solution_map(&rho0, 1.0, &cfg).unwrap();
    let sol = solve_flow(&rho0, &cfg).unwrap();
    let rebuilt = reconstruct_density(&rho0, &sol.flow).unwrap();
    let s = grid.s();
    sobolev_norm(&eulerian.sub(&rebuilt), s).unwrap() / sobolev_norm(&rho0, s).unwrap()
}

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "flow".into());
    match mode.as_str() {
        // det band + round-trip defect + equivalence at defaults and coarse
        "flow" => {
            let sigma: f64 =
                std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.7);
            let grid = Grid::new(256, 256, 32.0, 2.5).unwrap();
            let rho0 = gaussian_blob(grid, Point::new(16.0, 16.0), sigma);
            let cfg = SolverConfig::default();
            let sol = solve_flow(&rho0, &cfg).unwrap();
            let det = sol.flow.det_jacobian().unwrap();
            println!("det range: [{:.6e}, {:.6e}]", det.min(), det.max());
            let (raw, fine) = roundtrip_defects(&sol.flow);
            println!("roundtrip defect: apply {raw:.3e}  manual {fine:.3e}");
            let g_fine = equivalence_gap(256, 5e-3, sigma);
            let g_coarse = equivalence_gap(128, 1e-2, sigma);
            println!(
                "equivalence: coarse {g_coarse:.3e}  fine {g_fine:.3e}  order {:.2}",
                (g_coarse / g_fine).log2()
            );
        }
        // rhs_F consistency residual ladder
        "ode" => {
            let n: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(128);
            let grid = Grid::new(n, n, 32.0, 2.5).unwrap();
            let spec = BumpSpec { center: Point::new(16.0, 16.0), radius: 3.0, target_norm: 1.0 };
            let rho0 = make_bump(grid, &spec).unwrap();
            let cfg = SolverConfig { t_final: 0.25, ..SolverConfig::default() };
            let check = commutator_consistency(&rho0, &cfg, &[1, 2, 4, 8]).unwrap();
            println!("force scale {:.3e}", check.force_scale);
            for r in &check.residuals {
                println!("h {:.4e}  residual {:.3e}  worst {:.3e}", r.h, r.residual, r.worst_defect);
            }
        }
        // constants-corpus trajectories through the probe
        "traj" => {
            let n: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(128);
            let dt: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(2.5e-3);
            let p3 = Prop3Config::desk_default();
            let grid = Grid::new(n, n, 32.0, 2.5).unwrap();
            let base = make_bump(grid, &p3.rho_base).unwrap();
            let probe = BumpSpec { center: p3.probe, radius: 1.0, target_norm: p3.r_ball / 2.0 };
            let w = make_bump(grid, &probe).unwrap();
            let dir = make_bump(grid, &p3.rho_dir).unwrap();
            let sdir = sobolev_norm(&dir, grid.s()).unwrap();
            let mut scaled = dir.clone();
            scaled.scale(p3.r_ball / (2.0 * sdir));
            let corpus: Vec<(&str, RealField, Point)> = vec![
                ("base     ", base.clone(), Point::new(12.5, 16.0)),
                ("base+w   ", base.add(&w), Point::new(12.5, 16.0)),
                ("base-w   ", base.sub(&w), Point::new(12.5, 16.0)),
                ("base+dir ", base.add(&scaled), Point::new(12.5, 16.0)),
            ];
            let cfg = SolverConfig { dt, ..SolverConfig::default() };
            for (label, mut rho0, seed) in corpus {
                rho0.remove_mean();
                let traj = trace_trajectory(seed, &rho0, &cfg).unwrap();
                let probe = analyticity_probe(&traj).unwrap();
                match probe.fit {
                    Some(f) => println!(
                        "{label}: rate {:.2}  r2 {:.5}  pts {}  floor {:.1e}",
                        f.rate, f.r2, f.count, probe.noise_floor
                    ),
                    None => println!("{label}: no fit (floor {:.1e})", probe.noise_floor),
                }
            }
        }
        other => eprintln!("unknown mode {other}"),
    }
}
