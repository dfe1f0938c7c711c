use num_complex::Complex64;
use radscat::boundary::BoundaryData;
use radscat::grid::CollarGrid;
use radscat::oracle::{solve, OracleConfig};
use std::f64::consts::{PI, TAU};
use std::time::Instant;

fn bump(x: f64, lo: f64, hi: f64) -> f64 {
    let z = (x.ln() - lo.ln()) / (hi.ln() - lo.ln());
    if z <= 0.0 || z >= 1.0 {
        0.0
    } else {
        (PI * z).sin().powi(2)
    }
}

fn run(cfg: &OracleConfig, b: &BoundaryData, f: &CollarGrid, tag: &str) {
    let t = Instant::now();
    match solve(b, 5.0, f, cfg) {
        Ok(sol) => println!(
            "{tag}: eps {:.1e} restart {} -> {} iters, res {:.2e}, {:.1}s",
            sol.eps,
            cfg.restart,
            sol.iterations,
            sol.residual,
            t.elapsed().as_secs_f64()
        ),
        Err(e) => println!(
            "{tag}: eps {:.1e} restart {} -> FAILED after {:.1}s: {e}",
            cfg.eps,
            cfg.restart,
            t.elapsed().as_secs_f64()
        ),
    }
}

#[test]
fn probe() {
    let b = BoundaryData::from_v0(vec![(1, 1.0, 0.0)], TAU).unwrap();
    let base = OracleConfig {
        x_abs: 0.012,
        max_iter: 900,
        ..OracleConfig::default()
    };
    let rcfg = base.resolved(&b, 5.0);
    println!(
        "grid {} x {} = {} unknowns",
        rcfg.nx,
        rcfg.ny,
        rcfg.nx * rcfg.ny
    );
    let mut f = base.make_grid(&b, 5.0).unwrap();
    f.fill(|x, y| {
        Complex64::new(
            bump(x, 0.35, 0.7) * (1.0 + 0.3 * y.sin() + 0.2 * (2.0 * y).cos()),
            0.0,
        )
    });
    for (eps, restart, max_iter) in [
        (0.05, 30, 900),
        (0.02, 30, 900),
        (0.01, 30, 1500),
        (0.01, 60, 1500),
    ] {
        let cfg = OracleConfig {
            eps,
            restart,
            max_iter,
            ..base.clone()
        };
        run(&cfg, &b, &f, "xabs12");
    }
}
