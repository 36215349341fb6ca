//! Speed as a function of the contact slope, `a ↦ λ(a)`, from the continuation
//! and from shooting, on flat and spherical disks.
//!
//! cargo run --release --example lambda_sweep -- 24

use rayon::prelude::*;
use tflow::{continuation, radial_oracle, DiskMesh, EllipticOptions, MetricDescriptor};

fn main() -> tflow::Result<()> {
    let n_r: usize = std::env::args()
        .nth(1)
        .map_or(24, |s| s.parse().expect("n_r must be an integer"));
    let grid: Vec<f64> = (-4..=4).map(|k| 0.1 * k as f64).collect();
    for metric in [MetricDescriptor::flat(), MetricDescriptor::sphere_cap(1.0)?] {
        let mesh = DiskMesh::build(&metric, 1.0, n_r, 2 * n_r)?;
        let rows: Vec<tflow::Result<(f64, f64, f64)>> = grid
            .par_iter()
            .map(|&a| {
                let phi = vec![a; mesh.n_theta()];
                let t = continuation(
                    &mesh,
                    &phi,
                    &[1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
                    &mesh.zeros(),
                    &EllipticOptions::default(),
                )?;
                Ok((a, t.lambda_eps, radial_oracle(a, &metric, 1.0)?.lambda))
            })
            .collect();
        println!("{}", metric.label());
        println!(
            "{:>6} {:>14} {:>14} {:>10}",
            "a", "lambda_eps", "oracle", "lambda/a"
        );
        for r in rows {
            let (a, l, o) = r?;
            let ratio = if a == 0.0 { f64::NAN } else { l / a };
            println!("{a:>6.2} {l:>14.10} {o:>14.10} {ratio:>10.5}");
        }
    }
    Ok(())
}
