use ipm::experiments::{make_bump, BumpSpec};
use ipm::lagrangian::{invert_flow_map, reconstruct_density, solve_flow};
use ipm::spectral::{
    eval_fourier, forward_transform, l2_norm, sobolev_norm, Grid, Point, RealField,
    SpectralField,
};
use ipm::transport::{solution_map, SolverConfig};

fn band_profile(label: &str, spec: &SpectralField, s: f64) {
    let g = spec.grid();
    let (n1, n2) = (g.n1(), g.n2());
    let kmax = n1.min(n2) / 2;
    let nbands = 8;
    let mut l2b = vec![0.0f64; nbands];
    let mut hsb = vec![0.0f64; nbands];
    let norm = (n1 * n2) as f64;
    for k2 in 0..n2 {
        let m2 = if k2 <= n2 / 2 { k2 } else { n2 - k2 };
        for k1 in 0..n1 {
            let m1 = if k1 <= n1 / 2 { k1 } else { n1 - k1 };
            let kr = ((m1 * m1 + m2 * m2) as f64).sqrt();
            let band = ((kr / kmax as f64) * nbands as f64).min(nbands as f64 - 1.0) as usize;
            let e = spec.at(k1, k2).norm_sqr() / (norm * norm);
            let (x1, x2) = g.xi(k1, k2);
            let xi2 = x1 * x1 + x2 * x2;
            l2b[band] += e;
            hsb[band] += e * (1.0 + xi2).powf(s);
        }
    }
    print!("{label}: L2 bands ");
    for b in &l2b {
        print!("{:.1e} ", b.sqrt());
    }
    print!(" Hs bands ");
    for b in &hsb {
        print!("{:.1e} ", b.sqrt());
    }
    println!();
}

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(256);
    let datum = std::env::args().nth(2).unwrap_or_else(|| "moll".into());
    let scale: f64 = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(3.0);
    let dealias: bool = std::env::args().nth(4).map(|s| s != "off").unwrap_or(true);
    let grid = Grid::new(n, n, 32.0, 2.5).unwrap();
    let s = grid.s();
    let rho0 = match datum.as_str() {
        "gauss" => {
            let l = grid.box_length();
            let mut f = RealField::from_fn(grid, |x, y| {
                let dx = (x - 16.0).rem_euclid(l);
                let dy = (y - 16.0).rem_euclid(l);
                let dx = dx.min(l - dx);
                let dy = dy.min(l - dy);
                (-(dx * dx + dy * dy) / (2.0 * scale * scale)).exp()
            });
            f.remove_mean();
            let norm = sobolev_norm(&f, s).unwrap();
            f.scale(1.0 / norm);
            f
        }
        _ => {
            let spec = BumpSpec { center: Point::new(16.0, 16.0), radius: scale, target_norm: 1.0 };
            make_bump(grid, &spec).unwrap()
        }
    };
    let norm0 = sobolev_norm(&rho0, s).unwrap();

    let cfg = SolverConfig { dealias, ..SolverConfig::default() };
    let eulerian = solution_map(&rho0, 1.0, &cfg).unwrap();
    let sol = solve_flow(&rho0, &cfg).unwrap();
    let bicubic = reconstruct_density(&rho0, &sol.flow).unwrap();

    let inverse = invert_flow_map(&sol.flow).unwrap();
    let spec0 = forward_transform(&rho0).unwrap();
    let mut samples = vec![0.0; n * n];
    for i2 in 0..n {
        for i1 in 0..n {
            let p = inverse.apply_node(i1, i2);
            samples[i2 * n + i1] = eval_fourier(&spec0, p);
        }
    }
    let exact = RealField::from_samples(grid, samples).unwrap();

    let report = |label: &str, a: &RealField, b: &RealField| {
        let hs = sobolev_norm(&a.sub(b), s).unwrap() / norm0;
        let l2 = l2_norm(&a.sub(b)) / l2_norm(&rho0);
        println!("{label}: Hs {hs:.3e}  L2 {l2:.3e}");
    };
    report("eulerian vs bicubic-compose ", &eulerian, &bicubic);
    report("eulerian vs spectral-compose", &eulerian, &exact);
    report("bicubic  vs spectral-compose", &bicubic, &exact);

    band_profile("rho0     ", &spec0, s);
    band_profile("eulerian ", &forward_transform(&eulerian).unwrap(), s);
    band_profile("composed ", &forward_transform(&exact).unwrap(), s);
    band_profile("eul-exact", &forward_transform(&eulerian.sub(&exact)).unwrap(), s);
}
