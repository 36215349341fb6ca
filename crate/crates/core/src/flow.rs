//! Time integration of graphical mean curvature flow with Neumann data,
//!
//! ```text
//! u_t = g^{ij}(Du) D_iD_j u   in Ω,      D_ν u = φ   on ∂Ω,
//! ```
//!
//! with `g^{ij} = σ^{ij} − D^iu D^ju / (1 + |Du|²)`.

use crate::error::{Error, Result};
use crate::geometry::{flow_coeffs, grad_norm_sq};
use crate::implicit::ImplicitSolver;
use crate::mesh::{
    covariant_hessian_from, DiskMesh, NodeGeometry, NodeStencil, ScalarField, D_R, D_T,
};

#[inline]
fn node_rhs(s: &NodeStencil, g: &NodeGeometry, v: &[f64]) -> f64 {
    let d = s.apply(v);
    let coeff = flow_coeffs(&g.sigma_inv, [d[D_R], d[D_T]]);
    let hess = covariant_hessian_from(&d, &g.gamma);
    coeff.get(0, 0) * hess.get(0, 0)
        + 2.0 * coeff.get(0, 1) * hess.get(0, 1)
        + coeff.get(1, 1) * hess.get(1, 1)
}

/// Evaluates the flow operator into `out` (interior nodes), then extrapolates
/// linearly from the last two interior rings onto the boundary ring.
pub(crate) fn rhs_into(mesh: &DiskMesh, v: &[f64], out: &mut [f64]) -> Result<()> {
    let n_int = mesh.n_interior();
    for (k, (s, g)) in mesh.stencils().iter().zip(mesh.geometry()).enumerate() {
        let val = node_rhs(s, g, v);
        if !val.is_finite() {
            return Err(Error::NonFinite {
                node: k,
                t: f64::NAN,
            });
        }
        out[k] = val;
    }
    let n_r = mesh.n_r();
    for j in 0..mesh.n_theta() {
        let a = out[mesh.idx(n_r - 1, j as isize)];
        let b = out[mesh.idx(n_r - 2, j as isize)];
        out[n_int + j] = 1.5 * a - 0.5 * b;
    }
    Ok(())
}

/// `Σ g^{ij}(Du) D_iD_j u` at every node.
pub fn rhs(mesh: &DiskMesh, u: &ScalarField) -> Result<ScalarField> {
    mesh.check(u)?;
    let mut out = vec![0.0; mesh.n_nodes()];
    rhs_into(mesh, u.values(), &mut out)?;
    mesh.field_from_values(out)
}

/// `√(1 + |Du|²)` at every node.
pub fn area_factor(mesh: &DiskMesh, u: &ScalarField) -> Result<ScalarField> {
    let du = mesh.partials(u)?;
    let v = du
        .iter()
        .zip(mesh.geometry())
        .map(|(d, g)| (1.0 + grad_norm_sq(&g.sigma_inv, *d)).sqrt())
        .collect();
    mesh.field_from_values(v)
}

/// Sup over all nodes of `|Du|`.
pub fn sup_gradient(mesh: &DiskMesh, u: &ScalarField) -> Result<f64> {
    let du = mesh.partials(u)?;
    Ok(du
        .iter()
        .zip(mesh.geometry())
        .map(|(d, g)| grad_norm_sq(&g.sigma_inv, *d).sqrt())
        .fold(0.0, f64::max))
}

/// Scalar mean curvature `H = rhs(u) / v`, oriented so that
/// `Σ g^{ij}D_iD_j u = H·√(1 + |Du|²)` holds exactly (`H = div(Du/v)`).
pub fn mean_curvature(mesh: &DiskMesh, u: &ScalarField) -> Result<ScalarField> {
    let r = rhs(mesh, u)?;
    let v = area_factor(mesh, u)?;
    let h = r
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a / b)
        .collect();
    mesh.field_from_values(h)
}

/// Overwrites the boundary ring so that the one-sided `D_ν u` equals `phi`.
pub fn enforce_neumann(mesh: &DiskMesh, u: &mut ScalarField, phi: &[f64]) -> Result<()> {
    mesh.check(u)?;
    if phi.len() != mesh.n_theta() {
        return Err(Error::LengthMismatch {
            expected: mesh.n_theta(),
            found: phi.len(),
        });
    }
    enforce_neumann_values(mesh, u.values_mut(), phi);
    Ok(())
}

pub(crate) fn enforce_neumann_values(mesh: &DiskMesh, v: &mut [f64], phi: &[f64]) {
    let w = mesh.boundary_dr();
    let n_r = mesh.n_r();
    let n_t = mesh.n_theta();
    let tangential = mesh.normals().iter().any(|nu| nu[1] != 0.0);
    let sweeps = if tangential { 200 } else { 1 };
    for _ in 0..sweeps {
        let mut change: f64 = 0.0;
        for j in 0..n_t {
            let nu = mesh.normals()[j];
            let u1 = v[mesh.idx(n_r - 1, j as isize)];
            let u2 = v[mesh.idx(n_r - 2, j as isize)];
            let t = if tangential {
                let jp = mesh.boundary_idx((j + 1) % n_t);
                let jm = mesh.boundary_idx((j + n_t - 1) % n_t);
                nu[1] * (v[jp] - v[jm]) / (2.0 * mesh.dtheta())
            } else {
                0.0
            };
            // ν^r (w0 ub + w1 u1 + w2 u2) + t = φ, with w0 = −(w1 + w2)
            let ub = u1 + (w[2] * (u2 - u1) - (phi[j] - t) / nu[0]) / (w[1] + w[2]);
            let b = mesh.boundary_idx(j);
            change = change.max((ub - v[b]).abs());
            v[b] = ub;
        }
        if change <= 1e-15 * (1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
            break;
        }
    }
}

/// Flow state at time `t`.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    pub u: ScalarField,
    pub dt_last: f64,
}

fn rk2_advance(
    mesh: &DiskMesh,
    u: &ScalarField,
    k1: &[f64],
    phi: &[f64],
    dt: f64,
) -> Result<ScalarField> {
    let n = mesh.n_nodes();
    let mut half = u.clone();
    for (h, k) in half.values_mut().iter_mut().zip(k1) {
        *h += 0.5 * dt * k;
    }
    enforce_neumann_values(mesh, half.values_mut(), phi);
    let mut k2 = vec![0.0; n];
    rhs_into(mesh, half.values(), &mut k2)?;
    let mut next = u.clone();
    for (x, k) in next.values_mut().iter_mut().zip(&k2) {
        *x += dt * k;
    }
    enforce_neumann_values(mesh, next.values_mut(), phi);
    Ok(next)
}

/// One explicit midpoint (RK2) step with Neumann enforcement after each stage.
///
/// Stable for `dt ≤ dt_max(state)`; larger steps are taken as given.
pub fn step(mesh: &DiskMesh, state: &FlowState, phi: &[f64], dt: f64) -> Result<FlowState> {
    mesh.check(&state.u)?;
    let mut k1 = vec![0.0; mesh.n_nodes()];
    rhs_into(mesh, state.u.values(), &mut k1).map_err(|e| blowup(e, state.t))?;
    let u = rk2_advance(mesh, &state.u, &k1, phi, dt).map_err(|e| blowup(e, state.t))?;
    Ok(FlowState {
        t: state.t + dt,
        u,
        dt_last: dt,
    })
}

fn blowup(e: Error, t: f64) -> Error {
    match e {
        Error::NonFinite { node, .. } => Error::Blowup {
            t,
            reason: format!("non-finite operator value at node {node}"),
        },
        other => other,
    }
}

pub const DEFAULT_CFL: f64 = 0.2;

/// `c · h_min² / Λ_max`.
pub fn cfl_step(c_cfl: f64, h_min: f64, lambda_max: f64) -> f64 {
    c_cfl * h_min * h_min / lambda_max
}

/// Parabolic step limit of the explicit scheme.
///
/// `h_min = min(Δr, Δθ)`; `Λ_max` is the largest eigenvalue over all nodes of
/// `S g S` with `S = diag(h_min/Δr, h_min/Δθ)`, i.e. of `g^{ij}` measured in
/// units of the mesh spacing. When `Δr = Δθ` and `Du = 0`, `Λ_max` is the
/// largest eigenvalue of `σ^{ij}`.
pub fn dt_max(mesh: &DiskMesh, state: &FlowState, c_cfl: f64) -> Result<f64> {
    let du = mesh.partials(&state.u)?;
    let h = mesh.dr().min(mesh.dtheta());
    let sr = h / mesh.dr();
    let st = h / mesh.dtheta();
    let lambda = du
        .iter()
        .zip(mesh.geometry())
        .map(|(d, g)| {
            let c = flow_coeffs(&g.sigma_inv, *d);
            crate::geometry::MetricTensor::new(
                c.get(0, 0) * sr * sr,
                c.get(0, 1) * sr * st,
                c.get(1, 1) * st * st,
            )
            .eigenvalues()[1]
        })
        .fold(0.0, f64::max);
    Ok(cfl_step(c_cfl, h, lambda))
}

/// Time integrator used by [`run_flow`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeScheme {
    /// Explicit midpoint rule at `c_cfl`-scaled parabolic step limit.
    ExplicitRk2,
    /// Linearly implicit Euler with frozen coefficients, refactored every
    /// `refactor_every` steps. Translating solutions are exact fixed points.
    SemiImplicit { dt: f64, refactor_every: usize },
}

impl Default for TimeScheme {
    fn default() -> Self {
        TimeScheme::SemiImplicit {
            dt: 0.02,
            refactor_every: 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowConfig {
    pub t_max: f64,
    pub tol_translate: f64,
    pub c_cfl: f64,
    pub scheme: TimeScheme,
    /// Steps between monitor rows (the final state is always recorded).
    pub monitor_stride: usize,
    /// Steps between field snapshots (initial and final states always kept).
    pub snapshot_stride: usize,
    /// Repair a compatibility violation with one Neumann pass instead of failing.
    pub repair_compatibility: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            t_max: 50.0,
            tol_translate: 1e-7,
            c_cfl: DEFAULT_CFL,
            scheme: TimeScheme::default(),
            monitor_stride: 1,
            snapshot_stride: 25,
            repair_compatibility: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorRow {
    pub t: f64,
    pub sup_ut: f64,
    pub osc_ut: f64,
    pub sup_grad: f64,
    pub mean_u: f64,
    /// `sup |u − λ̂ t|`, filled in once `λ̂_flow` is known.
    pub osc_drift: f64,
    pub max_u: f64,
    pub min_u: f64,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub u: ScalarField,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    TimeLimit,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::TimeLimit => "no-convergence-by-t_max",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub monitors: Vec<MonitorRow>,
    pub snapshots: Vec<Snapshot>,
    /// Area-weighted mean of `u_t` at termination.
    pub lambda_flow: f64,
    /// Least-squares slope of `mean(u)` against `t` over the final 20% of rows.
    pub lambda_fit: Option<f64>,
    pub termination: Termination,
    pub final_state: FlowState,
    pub final_ut: ScalarField,
    pub steps: usize,
    pub compat_margin: f64,
    pub compat_repaired: bool,
    pub mesh_id: u64,
    pub h2: f64,
}

impl FlowResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Boundary data and initial surface for one flow run.
#[derive(Clone, Debug)]
pub struct FlowProblem<'a> {
    pub mesh: &'a DiskMesh,
    pub phi: Vec<f64>,
    pub u0: ScalarField,
}

/// `sup_∂Ω |D_ν u − φ|`.
pub fn neumann_defect(mesh: &DiskMesh, u: &ScalarField, phi: &[f64]) -> Result<f64> {
    let dn = mesh.normal_derivative(u)?;
    if phi.len() != dn.len() {
        return Err(Error::LengthMismatch {
            expected: dn.len(),
            found: phi.len(),
        });
    }
    Ok(dn
        .iter()
        .zip(phi)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

fn monitor_row(mesh: &DiskMesh, t: f64, u: &ScalarField, ut: &ScalarField) -> Result<MonitorRow> {
    Ok(MonitorRow {
        t,
        sup_ut: ut.sup_abs(),
        osc_ut: ut.osc(),
        sup_grad: sup_gradient(mesh, u)?,
        mean_u: mesh.mean(u)?,
        osc_drift: 0.0,
        max_u: u.max(),
        min_u: u.min(),
    })
}

fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Integrates until `osc(u_t) < tol_translate` or `t ≥ t_max`.
pub fn run_flow(problem: &FlowProblem<'_>, config: &FlowConfig) -> Result<FlowResult> {
    let mesh = problem.mesh;
    let phi = &problem.phi;
    mesh.check(&problem.u0)?;
    let tol = 10.0 * mesh.h2();
    let compat_margin = neumann_defect(mesh, &problem.u0, phi)?;
    let mut u = problem.u0.clone();
    let mut compat_repaired = false;
    if compat_margin > tol {
        if !config.repair_compatibility {
            return Err(Error::CompatibilityViolation {
                margin: compat_margin,
                tolerance: tol,
            });
        }
        enforce_neumann(mesh, &mut u, phi)?;
        compat_repaired = true;
    }

    let mut solver = match config.scheme {
        TimeScheme::SemiImplicit { .. } => Some(ImplicitSolver::new(mesh)?),
        TimeScheme::ExplicitRk2 => None,
    };

    let mut state = FlowState {
        t: 0.0,
        u,
        dt_last: 0.0,
    };
    let mut ut = rhs(mesh, &state.u).map_err(|e| blowup(e, 0.0))?;
    let mut monitors = Vec::new();
    let mut snapshots = Vec::new();
    let mut steps = 0usize;
    let monitor_stride = config.monitor_stride.max(1);
    let snapshot_stride = config.snapshot_stride.max(1);
    let mut defect = vec![0.0; mesh.n_nodes()];

    let termination = loop {
        let last_recorded = steps.is_multiple_of(monitor_stride);
        if last_recorded {
            monitors.push(monitor_row(mesh, state.t, &state.u, &ut)?);
        }
        if steps.is_multiple_of(snapshot_stride) {
            snapshots.push(Snapshot {
                t: state.t,
                u: state.u.clone(),
            });
        }
        let converged = ut.osc() < config.tol_translate;
        if converged || state.t >= config.t_max * (1.0 - 1e-12) {
            if !last_recorded {
                monitors.push(monitor_row(mesh, state.t, &state.u, &ut)?);
            }
            if !steps.is_multiple_of(snapshot_stride) {
                snapshots.push(Snapshot {
                    t: state.t,
                    u: state.u.clone(),
                });
            }
            break if converged {
                Termination::Converged
            } else {
                Termination::TimeLimit
            };
        }

        let remaining = config.t_max - state.t;
        match config.scheme {
            TimeScheme::ExplicitRk2 => {
                let dt = dt_max(mesh, &state, config.c_cfl)?.min(remaining);
                let u = rk2_advance(mesh, &state.u, ut.values(), phi, dt)
                    .map_err(|e| blowup(e, state.t))?;
                state = FlowState {
                    t: state.t + dt,
                    u,
                    dt_last: dt,
                };
            }
            TimeScheme::SemiImplicit { dt, refactor_every } => {
                let dt = dt.min(remaining);
                let solver = solver.as_mut().expect("semi-implicit solver");
                if steps.is_multiple_of(refactor_every.max(1)) || dt != state.dt_last {
                    solver.factor(mesh, state.u.values(), 1.0 / dt)?;
                }
                let n_int = mesh.n_interior();
                defect[..n_int].copy_from_slice(ut.interior(mesh));
                let dn = mesh.normal_derivative(&state.u)?;
                for (j, d) in defect[n_int..].iter_mut().enumerate() {
                    *d = phi[j] - dn[j];
                }
                solver.solve(&mut defect).map_err(|e| Error::Blowup {
                    t: state.t,
                    reason: e.to_string(),
                })?;
                for (x, d) in state.u.values_mut().iter_mut().zip(&defect) {
                    *x += d;
                }
                enforce_neumann_values(mesh, state.u.values_mut(), phi);
                state.t += dt;
                state.dt_last = dt;
            }
        }
        steps += 1;
        ut = rhs(mesh, &state.u).map_err(|e| blowup(e, state.t))?;
        if state.u.sup_abs() > 1e12 {
            return Err(Error::Blowup {
                t: state.t,
                reason: "solution exceeded 1e12".into(),
            });
        }
    };

    let lambda_flow = mesh.mean(&ut)?;
    let tail_start = monitors.last().map(|m| 0.8 * m.t).unwrap_or(0.0);
    let tail: Vec<(f64, f64)> = monitors
        .iter()
        .filter(|m| m.t >= tail_start)
        .map(|m| (m.t, m.mean_u))
        .collect();
    let lambda_fit = linear_slope(&tail);
    for m in &mut monitors {
        let shift = lambda_flow * m.t;
        m.osc_drift = (m.max_u - shift).abs().max((m.min_u - shift).abs());
    }

    Ok(FlowResult {
        monitors,
        snapshots,
        lambda_flow,
        lambda_fit,
        termination,
        final_state: state,
        final_ut: ut,
        steps,
        compat_margin,
        compat_repaired,
        mesh_id: mesh.id(),
        h2: mesh.h2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricDescriptor;

    fn flat(n_r: usize, n_t: usize) -> DiskMesh {
        DiskMesh::build(&MetricDescriptor::flat(), 1.0, n_r, n_t).unwrap()
    }

    #[test]
    fn constants_are_stationary() {
        let mesh = flat(16, 32);
        let r = rhs(&mesh, &mesh.constant(2.5)).unwrap();
        assert!(r.sup_abs() < 1e-12);
        let s = FlowState {
            t: 0.0,
            u: mesh.constant(2.5),
            dt_last: 0.0,
        };
        let dt = dt_max(&mesh, &s, DEFAULT_CFL).unwrap();
        let next = step(&mesh, &s, &vec![0.0; 32], dt).unwrap();
        assert!(next.u.difference(&s.u).unwrap().sup_abs() < 1e-12);
        assert_eq!(next.t, dt);
    }

    #[test]
    fn paraboloid_operator() {
        // u = r²/2: Hess = I, g^{ij}δ_ij = 2 − r²/(1 + r²)
        let mesh = flat(32, 64);
        let u = mesh.field_from_fn(|p| 0.5 * p.r() * p.r());
        let r = rhs(&mesh, &u).unwrap();
        for (k, p) in mesh.nodes().take(mesh.n_interior()).enumerate() {
            let rr = p.r() * p.r();
            assert!(
                (r.values()[k] - (2.0 - rr / (1.0 + rr))).abs() < 1e-10,
                "node {k}"
            );
        }
    }

    #[test]
    fn tilted_plane_operator() {
        // u = x²: at the origin rhs = 2, and in general 2/(1 + 4x²)
        let mesh = flat(32, 64);
        let u = mesh.field_from_fn(|p| p.x() * p.x());
        let r = rhs(&mesh, &u).unwrap();
        for (k, p) in mesh.nodes().take(mesh.n_interior()).enumerate() {
            let exact = 2.0 / (1.0 + 4.0 * p.x() * p.x());
            let tol = 5.0 * (mesh.h2() + mesh.dtheta().powi(2));
            assert!((r.values()[k] - exact).abs() < tol, "node {k}");
        }
    }

    #[test]
    fn rhs_is_mean_curvature_times_area_factor() {
        let mesh =
            DiskMesh::build(&MetricDescriptor::sphere_cap(1.0).unwrap(), 1.0, 16, 32).unwrap();
        let u = mesh.field_from_fn(|p| 0.4 * p.r() * p.theta().cos() + 0.3 * p.r().powi(3));
        let r = rhs(&mesh, &u).unwrap();
        let h = mean_curvature(&mesh, &u).unwrap();
        let v = area_factor(&mesh, &u).unwrap();
        for k in 0..mesh.n_nodes() {
            let hv = h.values()[k] * v.values()[k];
            assert!((hv - r.values()[k]).abs() <= 1e-14 * (1.0 + r.values()[k].abs()));
        }
    }

    #[test]
    fn radial_curvature_formula() {
        // u = 0.3 r²: H = u''/v³ + u'/(r v)
        let mesh = flat(32, 64);
        let u = mesh.field_from_fn(|p| 0.3 * p.r() * p.r());
        let h = mean_curvature(&mesh, &u).unwrap();
        for (k, p) in mesh.nodes().take(mesh.n_interior()).enumerate() {
            let (d1, d2) = (0.6 * p.r(), 0.6);
            let v = (1.0 + d1 * d1).sqrt();
            let exact = d2 / v.powi(3) + d1 / (p.r() * v);
            assert!((h.values()[k] - exact).abs() < 10.0 * mesh.h2());
        }
    }

    #[test]
    fn neumann_enforcement_is_exact() {
        let mesh =
            DiskMesh::build(&MetricDescriptor::sphere_cap(1.0).unwrap(), 1.0, 16, 32).unwrap();
        let mut u = mesh.field_from_fn(|p| (3.0 * p.r()).sin() * (2.0 * p.theta()).cos());
        let phi = mesh.boundary_from_fn(|t| 0.1 + 0.05 * t.sin());
        enforce_neumann(&mesh, &mut u, &phi).unwrap();
        assert!(neumann_defect(&mesh, &u, &phi).unwrap() < 1e-12);
    }

    #[test]
    fn neumann_reproduces_paraboloid() {
        // u = r²/2 has D_ν u = −R = −1 with the inward normal
        let mesh = flat(32, 64);
        let exact = mesh.field_from_fn(|p| 0.5 * p.r() * p.r());
        let mut u = exact.clone();
        u.values_mut()[mesh.n_interior()..].fill(0.0);
        enforce_neumann(&mesh, &mut u, &vec![-1.0; 64]).unwrap();
        let err = u.difference(&exact).unwrap().sup_abs();
        assert!(err < mesh.h2(), "{err}");
    }

    /// Independent flat-disk reference: derivatives straight from (i, j)
    /// neighbours with polar Christoffel terms written out.
    fn reference_rhs(mesh: &DiskMesh, u: &[f64]) -> Vec<f64> {
        let (n_r, n_t, dr, dt) = (mesh.n_r(), mesh.n_theta(), mesh.dr(), mesh.dtheta());
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 {
                u[((j + n_t as isize / 2).rem_euclid(n_t as isize)) as usize]
            } else {
                u[i as usize * n_t + j.rem_euclid(n_t as isize) as usize]
            }
        };
        let mut out = vec![0.0; u.len()];
        for i in 0..n_r as isize {
            let r = (i as f64 + 0.5) * dr;
            let hm = dr;
            let hp = if i as usize == n_r - 1 { 0.5 * dr } else { dr };
            let d = hm * hp * (hm + hp);
            for j in 0..n_t as isize {
                let radial = |jj: isize| {
                    let (a, b, c) = (at(i - 1, jj), at(i, jj), at(i + 1, jj));
                    let first = (-hp * hp * a + (hp * hp - hm * hm) * b + hm * hm * c) / d;
                    let second = 2.0 * (hp * a - (hm + hp) * b + hm * c) / d;
                    (first, second)
                };
                let (ur, urr) = radial(j);
                let ut = (at(i, j + 1) - at(i, j - 1)) / (2.0 * dt);
                let utt = (at(i, j + 1) - 2.0 * at(i, j) + at(i, j - 1)) / (dt * dt);
                let urt = (radial(j + 1).0 - radial(j - 1).0) / (2.0 * dt);
                let grad2 = ur * ur + ut * ut / (r * r);
                let g_rr = 1.0 - ur * ur / (1.0 + grad2);
                let g_rt = -ur * ut / (r * r) / (1.0 + grad2);
                let g_tt = 1.0 / (r * r) - ut * ut / (r * r * r * r) / (1.0 + grad2);
                let h_rt = urt - ut / r;
                let h_tt = utt + r * ur;
                out[i as usize * n_t + j as usize] = g_rr * urr + 2.0 * g_rt * h_rt + g_tt * h_tt;
            }
        }
        for j in 0..n_t {
            out[n_r * n_t + j] = 1.5 * out[(n_r - 1) * n_t + j] - 0.5 * out[(n_r - 2) * n_t + j];
        }
        out
    }

    fn reference_neumann(mesh: &DiskMesh, u: &mut [f64], phi: &[f64]) {
        let (n_r, n_t) = (mesh.n_r(), mesh.n_theta());
        for j in 0..n_t {
            let (u1, u2) = (u[(n_r - 1) * n_t + j], u[(n_r - 2) * n_t + j]);
            u[n_r * n_t + j] = (9.0 * u1 - u2 - 3.0 * mesh.dr() * phi[j]) / 8.0;
        }
    }

    #[test]
    fn step_matches_loop_reference() {
        let mesh = flat(16, 32);
        let phi = mesh.boundary_from_fn(|t| 0.1 * t.cos());
        let mut u = mesh.field_from_fn(|p| {
            0.3 * p.x() + 0.2 * p.y() * p.y() + 0.1 * (3.0 * p.theta()).sin() * p.r().powi(3)
        });
        enforce_neumann(&mesh, &mut u, &phi).unwrap();
        let s = FlowState {
            t: 0.0,
            u: u.clone(),
            dt_last: 0.0,
        };
        let dt = dt_max(&mesh, &s, DEFAULT_CFL).unwrap();
        let got = step(&mesh, &s, &phi, dt).unwrap();

        let v = u.values();
        let k1 = reference_rhs(&mesh, v);
        let mut half: Vec<f64> = v.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect();
        reference_neumann(&mesh, &mut half, &phi);
        let k2 = reference_rhs(&mesh, &half);
        let mut next: Vec<f64> = v.iter().zip(&k2).map(|(a, k)| a + dt * k).collect();
        reference_neumann(&mesh, &mut next, &phi);
        for (a, b) in got.u.values().iter().zip(&next) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn step_is_second_order() {
        let mesh = flat(16, 32);
        let phi = vec![0.1; 32];
        let mut u =
            mesh.field_from_fn(|p| 0.2 * p.x() + 0.1 * p.r().powi(2) * (2.0 * p.theta()).cos());
        enforce_neumann(&mesh, &mut u, &phi).unwrap();
        let s = FlowState {
            t: 0.0,
            u,
            dt_last: 0.0,
        };
        let dt = dt_max(&mesh, &s, DEFAULT_CFL).unwrap();
        let reference = |h: f64| {
            let mut x = s.clone();
            for _ in 0..64 {
                x = step(&mesh, &x, &phi, h / 64.0).unwrap();
            }
            x.u
        };
        let err = |h: f64| {
            step(&mesh, &s, &phi, h)
                .unwrap()
                .u
                .difference(&reference(h))
                .unwrap()
                .sup_abs()
        };
        let ratio = err(dt) / err(0.5 * dt);
        assert!(ratio > 3.5, "one-step error ratio {ratio}");
    }

    #[test]
    fn cfl_arithmetic_and_limit() {
        assert!((cfl_step(0.2, 0.1, 1.0) - 0.002).abs() < 1e-15);
        let mesh = flat(16, 32);
        let s = FlowState {
            t: 0.0,
            u: mesh.zeros(),
            dt_last: 0.0,
        };
        // Du = 0: Λ_max is the largest scaled eigenvalue of σ^{ij}
        let h = mesh.dr().min(mesh.dtheta());
        let r0 = 0.5 * mesh.dr();
        let lam = (h / mesh.dr())
            .powi(2)
            .max((h / mesh.dtheta() / r0).powi(2));
        assert!((dt_max(&mesh, &s, 0.2).unwrap() - 0.2 * h * h / lam).abs() < 1e-15);
    }

    /// Largest angular second difference, a proxy for grid-scale content.
    fn roughness(mesh: &DiskMesh, u: &ScalarField) -> f64 {
        let v = u.values();
        (0..mesh.n_interior())
            .map(|k| {
                let (i, j) = (k / mesh.n_theta(), (k % mesh.n_theta()) as isize);
                (v[mesh.idx(i, j + 1)] - 2.0 * v[k] + v[mesh.idx(i, j - 1)]).abs() / 4.0
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn four_times_step_limit_diverges() {
        // a checkerboard seed on a smooth tilt: damped at dt_max, amplified at 4·dt_max
        let mesh = flat(16, 32);
        let phi = vec![0.0; 32];
        let seed = 1e-6;
        let mut u = mesh.field_from_fn(|p| 0.1 * p.x());
        for (k, v) in u.values_mut().iter_mut().enumerate() {
            *v += seed * if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        enforce_neumann(&mesh, &mut u, &phi).unwrap();
        let s0 = FlowState {
            t: 0.0,
            u,
            dt_last: 0.0,
        };
        let mut smooth = mesh.field_from_fn(|p| 0.1 * p.x());
        enforce_neumann(&mesh, &mut smooth, &phi).unwrap();
        let r0 = FlowState {
            t: 0.0,
            u: smooth,
            dt_last: 0.0,
        };
        let dt = dt_max(&mesh, &s0, DEFAULT_CFL).unwrap();
        let peak_roughness = |h: f64| {
            let (mut s, mut r) = (s0.clone(), r0.clone());
            let mut peak: f64 = 0.0;
            let mut last = 0.0;
            for _ in 0..200 {
                s = step(&mesh, &s, &phi, h).unwrap();
                r = step(&mesh, &r, &phi, h).unwrap();
                last = roughness(&mesh, &s.u.difference(&r.u).unwrap());
                peak = peak.max(last);
            }
            (peak, last)
        };
        let (_, end_stable) = peak_roughness(dt);
        assert!(end_stable <= seed, "{end_stable}");
        let (peak_unstable, _) = peak_roughness(4.0 * dt);
        assert!(peak_unstable > 1e3 * seed, "{peak_unstable}");
    }

    #[test]
    fn zero_data_flow_goes_flat() {
        let mesh = flat(16, 32);
        let u0 = mesh.field_from_fn(|p| 0.1 * p.x());
        let res = run_flow(
            &FlowProblem {
                mesh: &mesh,
                phi: vec![0.0; 32],
                u0,
            },
            &FlowConfig::default(),
        )
        .unwrap();
        assert!(res.converged());
        assert!(res.lambda_flow.abs() < 1e-6);
        assert!(res.final_state.u.osc() < 1e-6);
        assert!(res.compat_repaired);
    }

    #[test]
    fn shift_equivariance() {
        let mesh = flat(16, 32);
        let phi = vec![0.1; 32];
        let mut u0 = mesh.field_from_fn(|p| 0.2 * p.y());
        enforce_neumann(&mesh, &mut u0, &phi).unwrap();
        let cfg = FlowConfig {
            t_max: 1.0,
            ..FlowConfig::default()
        };
        let a = run_flow(
            &FlowProblem {
                mesh: &mesh,
                phi: phi.clone(),
                u0: u0.clone(),
            },
            &cfg,
        )
        .unwrap();
        let b = run_flow(
            &FlowProblem {
                mesh: &mesh,
                phi,
                u0: u0.shifted(3.0),
            },
            &cfg,
        )
        .unwrap();
        let d = b.final_state.u.difference(&a.final_state.u).unwrap();
        assert!((d.max() - 3.0).abs() < 1e-9 && (d.min() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn compatibility_violation_without_repair() {
        let mesh = flat(32, 64);
        let cfg = FlowConfig {
            repair_compatibility: false,
            ..FlowConfig::default()
        };
        let e = run_flow(
            &FlowProblem {
                mesh: &mesh,
                phi: vec![0.1; 64],
                u0: mesh.zeros(),
            },
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(e, Error::CompatibilityViolation { .. }));
    }
}
