//! ε-continuation on the flat unit disk with constant boundary slope, next to
//! the integral formula and the radial shooting value, at three resolutions.
//!
//! cargo run --release --example translator_continuation -- 0.1

use std::time::Instant;

use tflow::{continuation, radial_oracle, DiskMesh, EllipticOptions, MetricDescriptor};

fn main() -> tflow::Result<()> {
    let a: f64 = std::env::args()
        .nth(1)
        .map_or(0.1, |s| s.parse().expect("a must be a number"));
    let metric = MetricDescriptor::flat();
    let oracle = radial_oracle(a, &metric, 1.0)?.lambda;
    println!("radial oracle: lambda = {oracle:.12}");
    println!(
        "{:>9} {:>15} {:>15} {:>11} {:>11} {:>8}",
        "mesh", "lambda_eps", "lambda_integral", "|d_oracle|", "fit_res", "secs"
    );
    let mut prev: Option<f64> = None;
    for n_r in [16, 32, 64] {
        let t0 = Instant::now();
        let mesh = DiskMesh::build(&metric, 1.0, n_r, 2 * n_r)?;
        let phi = vec![a; mesh.n_theta()];
        let schedule = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
        let t = continuation(
            &mesh,
            &phi,
            &schedule,
            &mesh.zeros(),
            &EllipticOptions::default(),
        )?;
        let err = (t.lambda_eps - oracle).abs();
        println!(
            "{:>9} {:>15.10} {:>15.10} {:>11.3e} {:>11.3e} {:>8.2}",
            format!("{}x{}", n_r, 2 * n_r),
            t.lambda_eps,
            t.lambda_integral,
            err,
            t.fit_residual,
            t0.elapsed().as_secs_f64()
        );
        if let Some(p) = prev {
            println!("{:>9} observed order {:.3}", "", (p / err).log2());
        }
        prev = Some(err);
        for row in &t.eps_trace {
            println!(
                "{:>12} eps {:>7.0e}  eps*mean {:+.10}  sup|Du| {:.6}  iters {}",
                "", row.eps, row.eps_mean_u, row.sup_grad, row.iterations
            );
        }
    }
    Ok(())
}
