//! The curvature, boundary-convexity and barrier hypotheses measured on three
//! metrics. The hyperbolic disk keeps a convex boundary and a barrier but has
//! negative curvature.
//!
//! cargo run --example verify_hypotheses -- 32

use tflow::diagnostics::check_hypotheses;
use tflow::{DiskMesh, MetricDescriptor};

fn main() -> tflow::Result<()> {
    let n_r: usize = std::env::args()
        .nth(1)
        .map_or(32, |s| s.parse().expect("n_r must be an integer"));
    for metric in [
        MetricDescriptor::flat(),
        MetricDescriptor::sphere_cap(1.0)?,
        MetricDescriptor::sphere_cap(0.7)?,
        MetricDescriptor::hyperbolic(1.0)?,
    ] {
        let mesh = DiskMesh::build(&metric, 1.0, n_r, 2 * n_r)?;
        let h = check_hypotheses(&metric, &mesh)?;
        println!(
            "{}: min K {:+.4}, kappa1 {:.6}, k0 {:.6}",
            metric.label(),
            h.min_curvature,
            h.kappa1,
            h.k0
        );
        for c in [&h.ricci_nonneg, &h.boundary_convex, &h.barrier_exists] {
            println!("  {c}");
        }
    }
    Ok(())
}
