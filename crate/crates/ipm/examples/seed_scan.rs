use ipm::experiments::{make_bump, BumpSpec};
use ipm::lagrangian::analyticity::analyticity_probe;
use ipm::lagrangian::trace_trajectories;
use ipm::spectral::{Grid, Point};
use ipm::transport::SolverConfig;

fn main() {
    let grid = Grid::new(256, 256, 32.0, 2.5).unwrap();
    let spec = BumpSpec { center: Point::new(16.0, 16.0), radius: 4.0, target_norm: 4.5 };
    let rho = make_bump(grid, &spec).unwrap();

    let mut seeds = Vec::new();
    let mut labels = Vec::new();
    for &r in &[2.6, 3.0, 3.4] {
        for deg in (0..360).step_by(15) {
            let a = (deg as f64).to_radians();
            seeds.push(Point::new(16.0 + r * a.cos(), 16.0 + r * a.sin()));
            labels.push((r, deg));
        }
    }

    let cfg = SolverConfig { dt: 1.25e-3, t_final: 1.0, ..Default::default() };
    let trajs = trace_trajectories(&seeds, &rho, &cfg, 1).unwrap();
    for ((r, deg), traj) in labels.iter().zip(&trajs) {
        let probe = analyticity_probe(traj).unwrap();
        let (rate, r2, count) = probe
            .fit
            .as_ref()
            .map(|f| (f.rate, f.r2, f.count))
            .unwrap_or((f64::NAN, f64::NAN, 0));
        println!("r {r} deg {deg:3}: rate {rate:6.3}  r2 {r2:.6}  pts {count}  tail {:.2e}", probe.tail_max());
    }
}
