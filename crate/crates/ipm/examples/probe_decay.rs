use ipm::experiments::{make_bump, BumpSpec};
use ipm::lagrangian::analyticity::analyticity_probe;
use ipm::lagrangian::trace_trajectories;
use ipm::spectral::{Grid, Point};
use ipm::transport::SolverConfig;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(256);
    let norm: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(4.5);
    let dt: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(1.25e-3);
    let t_final: f64 = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let ring_r: f64 = std::env::args().nth(5).and_then(|s| s.parse().ok()).unwrap_or(3.0);
    let phase: f64 = std::env::args().nth(6).and_then(|s| s.parse().ok()).unwrap_or(0.0);

    let grid = Grid::new(n, n, 32.0, 2.5).unwrap();
    let spec = BumpSpec { center: Point::new(16.0, 16.0), radius: 4.0, target_norm: norm };
    let rho = make_bump(grid, &spec).unwrap();

    let seeds: Vec<Point> = (0..10)
        .map(|k| {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 10.0 + phase;
            Point::new(16.0 + ring_r * a.cos(), 16.0 + ring_r * a.sin())
        })
        .collect();

    let cfg = SolverConfig { dt, t_final, ..Default::default() };
    let t0 = std::time::Instant::now();
    let trajs = trace_trajectories(&seeds, &rho, &cfg, 1).unwrap();
    eprintln!("trace took {:.1}s", t0.elapsed().as_secs_f64());

    for (k, traj) in trajs.iter().enumerate() {
        let probe = analyticity_probe(traj).unwrap();
        let (rate, r2, count) = probe
            .fit
            .as_ref()
            .map(|f| (f.rate, f.r2, f.count))
            .unwrap_or((f64::NAN, f64::NAN, 0));
        println!(
            "seed {k}: floor {:9.2e}  tail {:9.2e}  rate {:6.3}  r2 {:.6}  pts {count}",
            probe.noise_floor,
            probe.tail_max(),
            rate,
            r2
        );
        let mags: Vec<String> = probe.magnitude.iter().take(10).map(|m| format!("{m:8.1e}")).collect();
        println!("         |c_k| {}", mags.join(" "));
    }
}
