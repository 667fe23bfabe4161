use ipm::experiments::{run_prop3, Prop3Config};

fn main() {
    let mut cfg = Prop3Config::desk_default();
    if let Some(n) = std::env::args().nth(1).and_then(|s| s.parse().ok()) {
        cfg.grid = ipm::spectral::Grid::new(n, n, 32.0, 2.5).unwrap();
    }
    if let Some(dt) = std::env::args().nth(2).and_then(|s| s.parse().ok()) {
        cfg.solver.dt = dt;
    }
    let t0 = std::time::Instant::now();
    let report = run_prop3(&cfg).unwrap();
    eprintln!("run took {:.1}s", t0.elapsed().as_secs_f64());
    let c = &report.constants;
    println!("constants: m {:.4e}  L {:.4}  d {:.4}  C~ {:.4}", c.m, c.l, c.d, c.c_tilde);
    println!("dir_norm {:.6e}  sep_slope {:.3}", report.dir_norm, report.separation_slope);
    for r in &report.rows {
        println!(
            "n {}: r_n {:.3e} in {:.6e} out {:.6e} sep {:.3e} bound {:.3e} disj {} cont {} ok {} {}",
            r.n, r.r_n, r.input_dist, r.output_dist, r.flow_sep, r.sep_bound,
            r.disjoint, r.contained, r.solve_ok, r.note
        );
    }
    println!("verdicts: {:?}", report.verdicts);
}
