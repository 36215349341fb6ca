//! Long-time flow on a disk with constant boundary slope: the surface settles
//! into translation at speed λ.
//!
//! cargo run --release --example disk_flow -- [flat|sphere] [n_r]

use std::time::Instant;

use tflow::flow::enforce_neumann;
use tflow::{radial_oracle, run_flow, DiskMesh, FlowConfig, FlowProblem, MetricDescriptor};

fn main() -> tflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let family = args.next().unwrap_or_else(|| "flat".into());
    let n_r: usize = args
        .next()
        .map_or(32, |s| s.parse().expect("n_r must be an integer"));
    let metric = match family.as_str() {
        "sphere" => MetricDescriptor::sphere_cap(1.0)?,
        _ => MetricDescriptor::flat(),
    };
    let a = 0.1;
    let mesh = DiskMesh::build(&metric, 1.0, n_r, 2 * n_r)?;
    let phi = vec![a; mesh.n_theta()];
    let mut u0 = mesh.field_from_fn(|p| 0.2 * p.x());
    enforce_neumann(&mesh, &mut u0, &phi)?;

    let t0 = Instant::now();
    let res = run_flow(
        &FlowProblem {
            mesh: &mesh,
            phi,
            u0,
        },
        &FlowConfig::default(),
    )?;
    let oracle = radial_oracle(a, &metric, 1.0)?.lambda;
    for m in res
        .monitors
        .iter()
        .step_by((res.monitors.len() / 12).max(1))
    {
        println!(
            "t {:>7.3}  sup|u_t| {:.6}  osc(u_t) {:.3e}  sup|Du| {:.6}  drift {:.6}",
            m.t, m.sup_ut, m.osc_ut, m.sup_grad, m.osc_drift
        );
    }
    println!(
        "{} ({}) after {} steps, t = {:.3}, {:.2}s",
        metric.label(),
        res.termination.as_str(),
        res.steps,
        res.final_state.t,
        t0.elapsed().as_secs_f64()
    );
    println!(
        "lambda_flow {:.10}  lambda_fit {:.10}  oracle {:.10}",
        res.lambda_flow,
        res.lambda_fit.unwrap_or(f64::NAN),
        oracle
    );
    Ok(())
}
