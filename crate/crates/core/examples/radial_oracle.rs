//! High-accuracy radial translator by shooting, written as a CSV profile.
//!
//! cargo run --release --example radial_oracle -- 0.1 sphere profile.csv

use std::path::PathBuf;

use tflow::{radial_oracle, DiskMesh, MetricDescriptor};

fn main() -> tflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let a: f64 = args
        .next()
        .map_or(0.1, |s| s.parse().expect("a must be a number"));
    let metric = match args.next().as_deref() {
        Some("sphere") => MetricDescriptor::sphere_cap(1.0)?,
        Some("hyperbolic") => MetricDescriptor::hyperbolic(1.0)?,
        _ => MetricDescriptor::flat(),
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "radial_profile.csv".into()));

    let p = radial_oracle(a, &metric, 1.0)?;
    println!("{}: a = {a}, lambda = {:.15}", metric.label(), p.lambda);
    let mesh = DiskMesh::build(&metric, 1.0, 64, 128)?;
    println!(
        "small-slope limit -a |boundary| / |disk| = {:.6}",
        -a * mesh.boundary_length() / mesh.area()
    );
    for r in [0.0, 0.25, 0.5, 0.75, 1.0] {
        println!("  w({r:.2}) = {:+.10}", p.value_at(r));
    }
    println!(
        "boundary slope w'(1) = {:.12}",
        p.slope.last().copied().unwrap_or(f64::NAN)
    );
    tflow::io::write_radial_profile(&out, &p)?;
    println!("wrote {} samples to {}", p.r.len(), out.display());
    Ok(())
}
