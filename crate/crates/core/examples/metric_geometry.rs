//! Pointwise geometry of the built-in warped metrics: σ, its inverse,
//! Christoffel symbols and Gauss curvature along a ray.
//!
//! cargo run --example metric_geometry

use tflow::{ChartPoint, MetricDescriptor};

fn main() -> tflow::Result<()> {
    let metrics = [
        MetricDescriptor::flat(),
        MetricDescriptor::sphere_cap(1.0)?,
        MetricDescriptor::hyperbolic(1.0)?,
    ];
    for m in &metrics {
        println!("{} (valid for r < {})", m.label(), m.validity_radius());
        println!(
            "{:>5} {:>11} {:>11} {:>12} {:>12} {:>9}",
            "r", "sigma_tt", "sigma^tt", "G^r_tt", "G^t_rt", "K"
        );
        for r in [0.1, 0.25, 0.5, 0.75, 1.0] {
            let p = ChartPoint::polar(r, 0.7);
            let s = m.metric_at(p)?;
            let inv = m.inverse_metric_at(p)?;
            let g = m.christoffel_at(p)?;
            println!(
                "{r:>5.2} {:>11.6} {:>11.5} {:>12.6} {:>12.6} {:>9.5}",
                s.get(1, 1),
                inv.get(1, 1),
                g.get(0, 1, 1),
                g.get(1, 0, 1),
                m.gauss_curvature_at(p)?
            );
        }
        println!();
    }
    Ok(())
}
