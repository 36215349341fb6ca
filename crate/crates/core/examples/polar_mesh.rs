//! Cell-centred polar mesh: node layout, quadrature against closed forms, and
//! the discrete covariant Hessian of `x² + y²` (which is `2σ` on a flat disk).
//!
//! cargo run --example polar_mesh -- 32

use std::f64::consts::PI;

use tflow::{DiskMesh, MetricDescriptor};

fn main() -> tflow::Result<()> {
    let n_r: usize = std::env::args()
        .nth(1)
        .map_or(32, |s| s.parse().expect("n_r must be an integer"));
    let flat = DiskMesh::build(&MetricDescriptor::flat(), 1.0, n_r, 2 * n_r)?;
    println!(
        "{}x{} mesh: {} nodes ({} interior), dr = {:.5}, dtheta = {:.5}",
        flat.n_r(),
        flat.n_theta(),
        flat.n_nodes(),
        flat.n_interior(),
        flat.dr(),
        flat.dtheta()
    );
    println!(
        "first ring r = {:.5}, boundary ring r = {:.5}",
        flat.node(0).r(),
        flat.node(flat.boundary_idx(0)).r()
    );

    let r2 = flat.field_from_fn(|p| p.r() * p.r());
    println!("area      {:.12}  (pi = {:.12})", flat.area(), PI);
    println!("length    {:.12}  (2 pi)", flat.boundary_length());
    println!(
        "int r^2   {:.12}  (pi/2 = {:.12})",
        flat.integrate_domain(&r2)?,
        PI / 2.0
    );

    let hess = flat.covariant_hessian(&r2)?;
    let worst = hess
        .iter()
        .zip(flat.geometry())
        .map(|(h, g)| {
            let ev = h.relative_eigenvalues(&g.sigma);
            (ev[0] - 2.0).abs().max((ev[1] - 2.0).abs())
        })
        .fold(0.0, f64::max);
    println!("covariant Hessian of r^2 vs 2 sigma: max eigenvalue error {worst:.3e}");

    let cap = DiskMesh::build(&MetricDescriptor::sphere_cap(1.0)?, 1.0, n_r, 2 * n_r)?;
    println!(
        "spherical cap area {:.10}  (2 pi (1 - cos 1) = {:.10})",
        cap.area(),
        2.0 * PI * (1.0 - 1f64.cos())
    );
    Ok(())
}
