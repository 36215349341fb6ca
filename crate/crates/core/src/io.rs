//! CSV artifacts. Every writer uses `\n` line endings, `.` decimals and
//! `{:.16e}` formatting so that reruns are byte-identical and values
//! round-trip exactly.

use std::fs::File;
use std::path::Path;

use csv::{Terminator, Writer, WriterBuilder};

use crate::diagnostics::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::flow::MonitorRow;
use crate::mesh::{DiskMesh, ScalarField};
use crate::oracle::RadialProfile;
use crate::translator::TranslatorResult;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<Writer<File>> {
    Ok(WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_path(path)?)
}

/// Nodes in storage order as `r,theta,value`.
pub fn write_field(path: &Path, mesh: &DiskMesh, f: &ScalarField) -> Result<()> {
    mesh.check(f)?;
    let mut w = writer(path)?;
    w.write_record(["r", "theta", "value"])?;
    for (p, v) in mesh.nodes().zip(f.values()) {
        w.write_record([num(p.r()), num(p.theta()), num(*v)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field written by [`write_field`] for the same mesh layout.
pub fn read_field(path: &Path, mesh: &DiskMesh) -> Result<ScalarField> {
    let bad = |message: String| Error::FieldFile {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["r", "theta", "value"] {
        return Err(bad("header must be `r,theta,value`".into()));
    }
    let mut values = Vec::with_capacity(mesh.n_nodes());
    let mut nodes = mesh.nodes();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    bad(format!(
                        "row {}: column {k} is not a finite number",
                        row + 2
                    ))
                })
        };
        let (r, t, v) = (parse(0)?, parse(1)?, parse(2)?);
        let p = nodes
            .next()
            .ok_or_else(|| bad(format!("more than {} rows", mesh.n_nodes())))?;
        if (p.r() - r).abs() > 1e-9 || (p.theta() - t).abs() > 1e-9 {
            return Err(bad(format!(
                "row {} at (r, theta) = ({r}, {t}) does not match node ({}, {})",
                row + 2,
                p.r(),
                p.theta()
            )));
        }
        values.push(v);
    }
    if values.len() != mesh.n_nodes() {
        return Err(bad(format!(
            "{} rows for {} nodes",
            values.len(),
            mesh.n_nodes()
        )));
    }
    mesh.field_from_values(values)
}

pub fn write_monitors(path: &Path, rows: &[MonitorRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["t", "sup_ut", "osc_ut", "sup_grad", "mean_u", "osc_drift"])?;
    for m in rows {
        w.write_record([m.t, m.sup_ut, m.osc_ut, m.sup_grad, m.mean_u, m.osc_drift].map(num))?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column table with the given header.
pub fn write_pairs(path: &Path, header: [&str; 2], rows: &[(String, String)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.flush()?;
    Ok(())
}

/// `translator_meta.csv`, `w.csv` and `eps_trace.csv` in `dir`.
pub fn write_translator(dir: &Path, mesh: &DiskMesh, t: &TranslatorResult) -> Result<()> {
    let mut meta = vec![
        ("lambda_eps", t.lambda_eps),
        ("lambda_integral", t.lambda_integral),
        ("residual_pde", t.residual_pde),
        ("residual_bc", t.residual_bc),
        ("fit_residual", t.fit_residual),
    ];
    if let Some(l) = t.lambda_flow {
        meta.push(("lambda_flow", l));
    }
    let mut rows: Vec<(String, String)> = meta
        .into_iter()
        .map(|(k, v)| (k.to_string(), num(v)))
        .collect();
    rows.push((
        "extrapolation_monotone".into(),
        t.extrapolation_monotone.to_string(),
    ));
    write_pairs(&dir.join("translator_meta.csv"), ["name", "value"], &rows)?;
    write_field(&dir.join("w.csv"), mesh, &t.w)?;
    let mut w = writer(&dir.join("eps_trace.csv"))?;
    w.write_record(["eps", "eps_mean_u", "sup_grad"])?;
    for r in &t.eps_trace {
        w.write_record([r.eps, r.eps_mean_u, r.sup_grad].map(num))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics(path: &Path, report: &DiagnosticsReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["check", "status", "margin", "tolerance"])?;
    for c in report.checks() {
        w.write_record([
            c.name.to_string(),
            c.status.as_str().to_string(),
            num(c.margin),
            num(c.tolerance),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One sweep row: `(a, λ_eps, λ_integral, λ_flow)`.
pub type SweepRow = (f64, f64, f64, f64);

pub fn write_lambda_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["a", "lambda_eps", "lambda_integral", "lambda_flow"])?;
    for &(a, e, i, f) in rows {
        w.write_record([a, e, i, f].map(num))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_radial_profile(path: &Path, p: &RadialProfile) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["r", "w", "slope"])?;
    for k in 0..p.r.len() {
        w.write_record([p.r[k], p.w[k], p.slope[k]].map(num))?;
    }
    w.flush()?;
    Ok(())
}
