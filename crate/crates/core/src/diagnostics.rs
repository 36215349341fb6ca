//! Hypotheses and a-priori estimates turned into pass/fail checks.
//!
//! Every check carries the measured margin and the tolerance it was judged
//! against. Tolerances scale with `h² = Δr²` wherever discretization error
//! can enter.

use std::fmt;

use crate::error::{Error, Result};
use crate::flow::{neumann_defect, sup_gradient, FlowResult, MonitorRow};
use crate::geometry::MetricDescriptor;
use crate::mesh::{DiskMesh, ScalarField};
use crate::translator::TranslatorResult;

/// Names of the checks in a complete report, in report order.
pub const CHECK_NAMES: [&str; 9] = [
    "compatibility",
    "ricci_nonneg",
    "boundary_convex",
    "barrier_exists",
    "ut_max_principle",
    "gradient_bound_stable",
    "osc_contraction",
    "drift_bounded",
    "translator_convergence",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl CheckStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::NotApplicable => "not-applicable",
        }
    }

    fn from_bool(ok: bool) -> Self {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: CheckStatus,
    pub margin: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, ok: bool, margin: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name,
            status: CheckStatus::from_bool(ok),
            margin,
            tolerance,
            detail,
        }
    }

    pub fn not_applicable(name: &'static str, detail: impl Into<String>) -> Self {
        Self {
            name,
            status: CheckStatus::NotApplicable,
            margin: f64::NAN,
            tolerance: f64::NAN,
            detail: detail.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<24} {:<15} margin {:>12.4e}  tol {:>10.3e}  {}",
            self.name,
            self.status.as_str(),
            self.margin,
            self.tolerance,
            self.detail
        )
    }
}

/// All nine named checks, in [`CHECK_NAMES`] order.
#[derive(Clone, Debug)]
pub struct DiagnosticsReport {
    checks: Vec<CheckResult>,
}

impl DiagnosticsReport {
    /// Fails unless every named check appears exactly once.
    pub fn new(checks: Vec<CheckResult>) -> Result<Self> {
        let mut ordered = Vec::with_capacity(CHECK_NAMES.len());
        for name in CHECK_NAMES {
            let mut it = checks.iter().filter(|c| c.name == name);
            match (it.next(), it.next()) {
                (Some(c), None) => ordered.push(c.clone()),
                _ => {
                    return Err(Error::IncompatibleRuns(format!(
                        "report needs exactly one `{name}` check"
                    )))
                }
            }
        }
        if checks.len() != CHECK_NAMES.len() {
            return Err(Error::IncompatibleRuns("unknown check in report".into()));
        }
        Ok(Self { checks: ordered })
    }

    pub fn checks(&self) -> &[CheckResult] {
        &self.checks
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// No check failed (not-applicable checks do not count against).
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

/// `sup_∂Ω |D_ν u₀ − φ| ≤ 10·h²`.
pub fn check_compatibility(mesh: &DiskMesh, u0: &ScalarField, phi: &[f64]) -> Result<CheckResult> {
    let margin = neumann_defect(mesh, u0, phi)?;
    let tol = 10.0 * mesh.h2();
    Ok(CheckResult::new(
        "compatibility",
        margin <= tol,
        margin,
        tol,
        "sup |D_nu u0 - phi|".into(),
    ))
}

/// Measured hypotheses of the main theorem on a mesh.
#[derive(Clone, Debug)]
pub struct Hypotheses {
    pub ricci_nonneg: CheckResult,
    pub boundary_convex: CheckResult,
    pub barrier_exists: CheckResult,
    /// Minimum Gauss curvature over all nodes.
    pub min_curvature: f64,
    /// Minimum geodesic curvature of the boundary circle.
    pub kappa1: f64,
    /// Minimum eigenvalue of the barrier's covariant Hessian relative to `σ`.
    pub k0: f64,
}

/// Geodesic curvature of the boundary ring with respect to the inward normal.
///
/// `T = ∂_θ/|∂_θ|`; `∇_T T = T^θ ∂_θ T + Γ(T, T)` with `∂_θ T` by central
/// differences along the ring.
pub fn boundary_geodesic_curvature(mesh: &DiskMesh) -> Vec<f64> {
    let n_t = mesh.n_theta();
    let bnd = &mesh.geometry()[mesh.n_interior()..];
    let tangent: Vec<f64> = bnd.iter().map(|g| 1.0 / g.sigma.get(1, 1).sqrt()).collect();
    (0..n_t)
        .map(|j| {
            let g = &bnd[j];
            let tt = tangent[j];
            let d_tt =
                (tangent[(j + 1) % n_t] - tangent[(j + n_t - 1) % n_t]) / (2.0 * mesh.dtheta());
            let acc = [
                g.gamma.get(0, 1, 1) * tt * tt,
                tt * d_tt + g.gamma.get(1, 1, 1) * tt * tt,
            ];
            let nu = mesh.normals()[j];
            let s = &g.sigma;
            s.get(0, 0) * acc[0] * nu[0]
                + s.get(0, 1) * (acc[0] * nu[1] + acc[1] * nu[0])
                + s.get(1, 1) * acc[1] * nu[1]
        })
        .collect()
}

/// `β = c (r² − R²)/(2R)` with `c = 1/√σ^{rr}(R)` so that `D_ν β = −1`.
pub fn barrier_field(mesh: &DiskMesh) -> ScalarField {
    let big_r = mesh.radius();
    let s_rr = mesh.geometry()[mesh.n_interior()].sigma_inv.get(0, 0);
    let c = 1.0 / s_rr.sqrt();
    mesh.field_from_fn(|p| c * (p.r() * p.r() - big_r * big_r) / (2.0 * big_r))
}

pub fn check_hypotheses(metric: &MetricDescriptor, mesh: &DiskMesh) -> Result<Hypotheses> {
    let h2 = mesh.h2();
    let mut min_k = f64::INFINITY;
    for g in mesh.geometry() {
        min_k = min_k.min(metric.gauss_curvature_at(g.point)?);
    }
    let ricci_tol = 1e-10;
    let ricci_nonneg = CheckResult::new(
        "ricci_nonneg",
        min_k >= -ricci_tol,
        min_k,
        ricci_tol,
        "min Gauss curvature".into(),
    );

    let kappa1 = boundary_geodesic_curvature(mesh)
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let boundary_convex = CheckResult::new(
        "boundary_convex",
        kappa1 > 0.0,
        kappa1,
        0.0,
        "min geodesic curvature of the boundary".into(),
    );

    let beta = barrier_field(mesh);
    let k0 = mesh
        .covariant_hessian(&beta)?
        .iter()
        .zip(mesh.geometry())
        .map(|(hess, g)| hess.relative_eigenvalues(&g.sigma)[0])
        .fold(f64::INFINITY, f64::min);
    let grad = sup_gradient(mesh, &beta)?;
    let normal = mesh
        .normal_derivative(&beta)?
        .iter()
        .fold(0.0f64, |m, d| m.max((d + 1.0).abs()));
    let tol = 10.0 * h2;
    let barrier_exists = CheckResult::new(
        "barrier_exists",
        k0 > 0.0 && grad <= 1.0 + tol && normal <= tol,
        k0,
        tol,
        format!("k0; sup|D beta| = {grad:.6}, sup|D_nu beta + 1| = {normal:.2e}"),
    );

    Ok(Hypotheses {
        ricci_nonneg,
        boundary_convex,
        barrier_exists,
        min_curvature: min_k,
        kappa1,
        k0,
    })
}

/// `max_t sup|u_t|(t) ≤ sup|u_t|(0)·(1 + 10⁻⁶) + 10·h²` for a recorded series.
pub fn check_ut_series(sup_ut: &[f64], h2: f64) -> CheckResult {
    let Some(&first) = sup_ut.first() else {
        return CheckResult::not_applicable("ut_max_principle", "empty monitor series");
    };
    let peak = sup_ut.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let excess = peak - first;
    let tol = first * 1e-6 + 10.0 * h2;
    CheckResult::new(
        "ut_max_principle",
        excess <= tol,
        excess,
        tol,
        format!("max_t sup|u_t| - sup|u_t|(0), sup|u_t|(0) = {first:.6e}"),
    )
}

pub fn check_ut_max_principle(flow: &FlowResult) -> CheckResult {
    let series: Vec<f64> = flow.monitors.iter().map(|m| m.sup_ut).collect();
    check_ut_series(&series, flow.h2)
}

/// Growth of the running maximum between the midpoint of the recorded time
/// span and its end; zero once the quantity has stabilized.
fn late_growth(rows: &[MonitorRow], value: impl Fn(&MonitorRow) -> f64) -> Option<(f64, f64)> {
    let t_end = rows.last()?.t;
    let half = 0.5 * t_end;
    let early = rows
        .iter()
        .filter(|m| m.t <= half)
        .map(&value)
        .fold(f64::NEG_INFINITY, f64::max);
    let all = rows.iter().map(&value).fold(f64::NEG_INFINITY, f64::max);
    early.is_finite().then_some((all - early, all))
}

fn stabilized(
    name: &'static str,
    rows: &[MonitorRow],
    h2: f64,
    value: impl Fn(&MonitorRow) -> f64,
) -> CheckResult {
    match late_growth(rows, value) {
        None => CheckResult::not_applicable(name, "empty monitor series"),
        Some((growth, peak)) => {
            let tol = 10.0 * h2;
            CheckResult::new(
                name,
                growth <= tol,
                growth,
                tol,
                format!("running-max growth over the final half, peak {peak:.6e}"),
            )
        }
    }
}

/// Running maximum of `sup|Du|` does not grow over the final half of the run.
pub fn check_gradient_bound(flow: &FlowResult) -> CheckResult {
    stabilized("gradient_bound_stable", &flow.monitors, flow.h2, |m| {
        m.sup_grad
    })
}

/// Running maximum of `sup|u − λ̂t|` does not grow over the final half of the run.
pub fn check_drift_bounded(flow: &FlowResult) -> CheckResult {
    stabilized("drift_bounded", &flow.monitors, flow.h2, |m| m.osc_drift)
}

/// `osc(u₁ − u₂)` at the snapshot times shared by both runs.
pub fn osc_difference_series(a: &FlowResult, b: &FlowResult) -> Result<Vec<(f64, f64)>> {
    if a.mesh_id != b.mesh_id {
        return Err(Error::IncompatibleRuns(
            "runs live on different meshes".into(),
        ));
    }
    let mut out = Vec::new();
    let mut k = 0;
    for sa in &a.snapshots {
        while k < b.snapshots.len() && b.snapshots[k].t < sa.t - 1e-9 * (1.0 + sa.t) {
            k += 1;
        }
        if let Some(sb) = b.snapshots.get(k) {
            if (sb.t - sa.t).abs() <= 1e-9 * (1.0 + sa.t) {
                out.push((sa.t, sa.u.difference(&sb.u)?.osc()));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::IncompatibleRuns("no shared snapshot times".into()));
    }
    Ok(out)
}

/// Non-increasing within `10·h²`; strictly smaller at the end when the
/// initial oscillation exceeds the slack.
pub fn check_osc_series(series: &[(f64, f64)], h2: f64) -> CheckResult {
    let tol = 10.0 * h2;
    let Some((&(_, first), &(_, last))) = series.first().zip(series.last()) else {
        return CheckResult::not_applicable("osc_contraction", "no shared snapshots");
    };
    let rise = series
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(0.0f64, f64::max);
    let decreased = first <= tol || last < first;
    CheckResult::new(
        "osc_contraction",
        rise <= tol && decreased,
        rise,
        tol,
        format!("largest rise of osc(u1 - u2); initial {first:.3e}, final {last:.3e}"),
    )
}

pub fn check_osc_contraction(a: &FlowResult, b: &FlowResult) -> Result<CheckResult> {
    Ok(check_osc_series(&osc_difference_series(a, b)?, a.h2))
}

/// Final flow state against the translator: `osc(u(T) − w)` and the two
/// speeds, plus stabilization of the drift series.
pub fn check_translator_convergence(
    mesh: &DiskMesh,
    flow: &FlowResult,
    translator: &TranslatorResult,
) -> Result<CheckResult> {
    if flow.mesh_id != mesh.id() || translator.w.mesh_id() != mesh.id() {
        return Err(Error::IncompatibleRuns(
            "flow and translator use different meshes".into(),
        ));
    }
    let h2 = mesh.h2();
    let osc = flow.final_state.u.difference(&translator.w)?.osc();
    let osc_tol = (100.0 * h2).max(1e-4);
    let dl = (translator.lambda_eps - flow.lambda_flow).abs();
    let lambda_tol = (50.0 * h2).max(1e-3);
    let drift = stabilized("drift_bounded", &flow.monitors, h2, |m| m.osc_drift);
    let ok = osc < osc_tol && dl <= lambda_tol && drift.status != CheckStatus::Fail;
    Ok(CheckResult::new(
        "translator_convergence",
        ok,
        osc,
        osc_tol,
        format!(
            "osc(u(T) - w); |lambda_eps - lambda_flow| = {dl:.3e} (tol {lambda_tol:.1e}), drift growth {:.3e}",
            drift.margin
        ),
    ))
}
