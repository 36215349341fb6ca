//! The four run commands. Each writes its artifacts plus `manifest.csv` into
//! an output directory and returns an exit code with a short summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{PhiSpec, RunConfig};
use crate::diagnostics::{
    check_compatibility, check_drift_bounded, check_gradient_bound, check_hypotheses,
    check_osc_contraction, check_translator_convergence, check_ut_max_principle, DiagnosticsReport,
};
use crate::error::{Error, Result};
use crate::flow::{run_flow, FlowProblem, FlowResult};
use crate::io::{self, num, SweepRow};
use crate::mesh::DiskMesh;
use crate::translator::{continuation, TranslatorResult};

/// Tolerance on `|λ(a) + λ(−a)|` in a sweep.
pub const ODD_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub lines: Vec<String>,
    pub out_dir: PathBuf,
}

impl Outcome {
    fn new(ok: bool, lines: Vec<String>, out_dir: &Path) -> Self {
        Self {
            exit_code: if ok { 0 } else { 1 },
            lines,
            out_dir: out_dir.to_path_buf(),
        }
    }
}

/// Writes `manifest.csv`: command, versions, the full config echo, run
/// facts, then wall time as the last row.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    facts: &[(String, String)],
    started: Instant,
) -> Result<()> {
    let mut rows = vec![
        ("command".to_string(), command.to_string()),
        (
            "tflow_version".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        ),
        ("artifact_format".to_string(), "1".to_string()),
    ];
    rows.extend(cfg.echo().into_iter().map(|(k, v)| (k.to_string(), v)));
    rows.extend_from_slice(facts);
    rows.push((
        "wall_time_s".to_string(),
        format!("{:.3}", started.elapsed().as_secs_f64()),
    ));
    io::write_pairs(&dir.join("manifest.csv"), ["key", "value"], &rows)
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

fn fact(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn flow_facts(r: &FlowResult) -> Vec<(String, String)> {
    vec![
        fact("termination", r.termination.as_str()),
        fact("lambda_flow", num(r.lambda_flow)),
        fact(
            "lambda_fit",
            r.lambda_fit.map(num).unwrap_or_else(|| "nan".into()),
        ),
        fact("steps", r.steps),
        fact("t_final", num(r.final_state.t)),
        fact("compat_margin", num(r.compat_margin)),
        fact("compat_repaired", r.compat_repaired),
    ]
}

fn write_flow(dir: &Path, mesh: &DiskMesh, r: &FlowResult) -> Result<()> {
    io::write_monitors(&dir.join("monitors.csv"), &r.monitors)?;
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps)?;
    for s in &r.snapshots {
        io::write_field(&snaps.join(format!("u_t{:.6}.csv", s.t)), mesh, &s.u)?;
    }
    io::write_field(&dir.join("u_final.csv"), mesh, &r.final_state.u)
}

fn flow_run(cfg: &RunConfig, mesh: &DiskMesh, phi: &[f64]) -> Result<FlowResult> {
    let problem = FlowProblem {
        mesh,
        phi: phi.to_vec(),
        u0: cfg.initial_u0.build(mesh)?,
    };
    run_flow(&problem, &cfg.flow)
}

fn translator_run(cfg: &RunConfig, mesh: &DiskMesh, phi: &[f64]) -> Result<TranslatorResult> {
    continuation(
        mesh,
        phi,
        &cfg.eps_schedule,
        &mesh.zeros(),
        &cfg.elliptic_options(),
    )
}

/// Integrates the flow and records monitors, snapshots and the final state.
/// Exit 0 iff the run reached `osc(u_t) < tol_translate` before `t_max`.
pub fn cmd_flow(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let started = Instant::now();
    prepare(out)?;
    let mesh = cfg.mesh()?;
    let phi = cfg.boundary_phi.sample(&mesh);
    let r = flow_run(cfg, &mesh, &phi)?;
    write_flow(out, &mesh, &r)?;
    write_manifest(out, "flow", cfg, &flow_facts(&r), started)?;
    let lines = vec![format!(
        "flow: {} at t = {:.4} after {} steps, lambda_flow = {:.10}",
        r.termination.as_str(),
        r.final_state.t,
        r.steps,
        r.lambda_flow
    )];
    Ok(Outcome::new(r.converged(), lines, out))
}

/// ε-continuation plus the integral formula.
pub fn cmd_translator(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let started = Instant::now();
    prepare(out)?;
    let mesh = cfg.mesh()?;
    let phi = cfg.boundary_phi.sample(&mesh);
    let t = translator_run(cfg, &mesh, &phi)?;
    io::write_translator(out, &mesh, &t)?;
    let facts = vec![
        fact("lambda_eps", num(t.lambda_eps)),
        fact("lambda_integral", num(t.lambda_integral)),
        fact("extrapolation_monotone", t.extrapolation_monotone),
    ];
    write_manifest(out, "translator", cfg, &facts, started)?;
    let mut lines = vec![format!(
        "translator: lambda_eps = {:.10}, lambda_integral = {:.10}, residual_pde = {:.2e}, fit_residual = {:.2e}",
        t.lambda_eps, t.lambda_integral, t.residual_pde, t.fit_residual
    )];
    if !t.extrapolation_monotone {
        lines.push("warning: extrapolation-unstable (non-monotone eps trace)".into());
    }
    Ok(Outcome::new(true, lines, out))
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

/// Full diagnostics suite: two flow runs (configured `u₀` and `u₀ + 0.1·r sin θ`),
/// the continuation, and the nine checks.
pub fn cmd_verify(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Outcome> {
    let started = Instant::now();
    prepare(out)?;
    let metric = cfg.metric.build()?;
    let mesh = cfg.mesh()?;
    let phi = cfg.boundary_phi.sample(&mesh);
    let u0 = cfg.initial_u0.build(&mesh)?;
    let mut u0_b = u0.clone();
    for (v, p) in u0_b.values_mut().iter_mut().zip(mesh.nodes()) {
        *v += 0.1 * p.r() * p.theta().sin();
    }

    let run = |u0| {
        run_flow(
            &FlowProblem {
                mesh: &mesh,
                phi: phi.clone(),
                u0,
            },
            &cfg.flow,
        )
    };
    let ((a, b), t) = pool(jobs)?.install(|| {
        rayon::join(
            || rayon::join(|| run(u0.clone()), || run(u0_b.clone())),
            || translator_run(cfg, &mesh, &phi),
        )
    });
    let (a, b, mut t) = (a?, b?, t?);
    t.lambda_flow = Some(a.lambda_flow);

    let hyp = check_hypotheses(&metric, &mesh)?;
    let initial = &a.snapshots[0].u;
    let report = DiagnosticsReport::new(vec![
        check_compatibility(&mesh, initial, &phi)?,
        hyp.ricci_nonneg,
        hyp.boundary_convex,
        hyp.barrier_exists,
        check_ut_max_principle(&a),
        check_gradient_bound(&a),
        check_osc_contraction(&a, &b)?,
        check_drift_bounded(&a),
        check_translator_convergence(&mesh, &a, &t)?,
    ])?;

    io::write_diagnostics(&out.join("diagnostics.csv"), &report)?;
    io::write_monitors(&out.join("monitors.csv"), &a.monitors)?;
    io::write_monitors(&out.join("monitors_companion.csv"), &b.monitors)?;
    io::write_translator(out, &mesh, &t)?;
    let mut facts = flow_facts(&a);
    facts.extend([
        fact("lambda_eps", num(t.lambda_eps)),
        fact("lambda_integral", num(t.lambda_integral)),
        fact("companion_u0", "initial_u0 + 0.1*r*sin(theta)"),
        fact("kappa1", num(hyp.kappa1)),
        fact("k0", num(hyp.k0)),
        fact("min_gauss_curvature", num(hyp.min_curvature)),
    ]);
    write_manifest(out, "verify", cfg, &facts, started)?;

    let mut lines: Vec<String> = report.checks().iter().map(|c| c.to_string()).collect();
    if hyp.min_curvature < 0.0 {
        lines.push("warning: base metric has negative curvature; the run proceeded anyway".into());
    }
    lines.push(format!(
        "lambda: flow {:.10}  eps {:.10}  integral {:.10}",
        a.lambda_flow, t.lambda_eps, t.lambda_integral
    ));
    Ok(Outcome::new(report.all_pass(), lines, out))
}

/// Directory name of one sweep job.
pub fn sweep_dir_name(a: f64) -> String {
    format!("a_{a:+.6}")
}

/// `φ ≡ a` for every `a` in the sweep grid, as independent jobs.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Outcome> {
    let started = Instant::now();
    prepare(out)?;
    let grid = cfg.sweep_a.clone();
    let job = |a: f64| -> Result<SweepRow> {
        let t0 = Instant::now();
        let mut c = cfg.clone();
        c.boundary_phi = PhiSpec::Const(a);
        let dir = out.join(sweep_dir_name(a));
        c.output_dir = dir.clone();
        prepare(&dir)?;
        let mesh = c.mesh()?;
        let phi = c.boundary_phi.sample(&mesh);
        let mut t = translator_run(&c, &mesh, &phi)?;
        let f = flow_run(&c, &mesh, &phi)?;
        t.lambda_flow = Some(f.lambda_flow);
        io::write_translator(&dir, &mesh, &t)?;
        io::write_monitors(&dir.join("monitors.csv"), &f.monitors)?;
        write_manifest(&dir, "sweep-job", &c, &flow_facts(&f), t0)?;
        Ok((a, t.lambda_eps, t.lambda_integral, f.lambda_flow))
    };
    let results: Vec<Result<SweepRow>> =
        pool(jobs)?.install(|| grid.par_iter().map(|&a| job(a)).collect());

    let mut lines = Vec::new();
    let mut rows = Vec::new();
    let mut ok = true;
    for (a, r) in grid.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                ok = false;
                lines.push(format!("error kind={} a={a} message=\"{e}\"", e.kind()));
                rows.push((*a, f64::NAN, f64::NAN, f64::NAN));
            }
        }
    }
    io::write_lambda_sweep(&out.join("lambda_vs_a.csv"), &rows)?;

    let mut odd_defect: f64 = 0.0;
    for r in &rows {
        if let Some(m) = rows.iter().find(|s| s.0 == -r.0) {
            for (x, y) in [(r.1, m.1), (r.2, m.2), (r.3, m.3)] {
                odd_defect = odd_defect.max((x + y).abs());
            }
        }
    }
    let odd = odd_defect <= ODD_TOLERANCE;
    ok &= odd;
    for r in &rows {
        lines.push(format!(
            "a = {:+.4}: lambda_eps {:+.10}  lambda_integral {:+.10}  lambda_flow {:+.10}",
            r.0, r.1, r.2, r.3
        ));
    }
    lines.push(format!(
        "odd symmetry: max |lambda(a) + lambda(-a)| = {odd_defect:.3e} ({})",
        if odd { "pass" } else { "fail" }
    ));
    let facts = vec![fact("jobs", jobs), fact("odd_defect", num(odd_defect))];
    write_manifest(out, "sweep", cfg, &facts, started)?;
    Ok(Outcome::new(ok, lines, out))
}
