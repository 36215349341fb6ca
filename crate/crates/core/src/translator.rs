//! The additive eigenvalue problem
//!
//! ```text
//! g^{ij}(Dw) D_iD_j w = λ   in Ω,      D_ν w = φ   on ∂Ω,
//! ```
//!
//! solved through the regularized family `ε u_ε = g^{ij}(Du_ε) D_iD_j u_ε`
//! with `ε → 0`, and cross-checked with the divergence-form identity
//! `λ = −∫_∂Ω φ/v ⁄ ∫_Ω 1/v`.
//!
//! Since the operator only sees derivatives, `u_ε` is carried as a zero-mean
//! part `ω_ε` plus its mean `m_ε = mean(rhs(ω_ε))/ε`. The mean never enters
//! a stencil, which keeps the `O(1/ε)` offset out of the rounding budget.

use crate::error::{Error, Result};
use crate::flow::{
    area_factor, enforce_neumann, enforce_neumann_values, neumann_defect, rhs, rhs_into,
    sup_gradient,
};
use crate::implicit::ImplicitSolver;
use crate::mesh::{DiskMesh, ScalarField};

pub const DEFAULT_EPS_SCHEDULE: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
pub const DEFAULT_TOL_ELL: f64 = 1e-9;

/// Controls for the damped pseudo-time marching of `u_τ = rhs(u) − εu`.
#[derive(Clone, Debug)]
pub struct EllipticOptions {
    pub tol_ell: f64,
    pub max_iterations: usize,
    pub dt_initial: f64,
    pub dt_growth: f64,
    pub dt_cap: f64,
}

impl Default for EllipticOptions {
    fn default() -> Self {
        Self {
            tol_ell: DEFAULT_TOL_ELL,
            max_iterations: 500,
            dt_initial: 0.1,
            dt_growth: 4.0,
            dt_cap: 1e10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EpsSolution {
    pub eps: f64,
    /// `u_ε − mean(u_ε)`.
    pub omega: ScalarField,
    /// `mean(u_ε)`.
    pub mean: f64,
    /// `sup |ε u_ε − rhs(u_ε)|` over the interior.
    pub residual: f64,
    pub iterations: usize,
    pub sup_grad: f64,
}

impl EpsSolution {
    /// `ε · mean(u_ε)`.
    pub fn eps_mean(&self) -> f64 {
        self.eps * self.mean
    }

    pub fn field(&self) -> ScalarField {
        self.omega.shifted(self.mean)
    }
}

fn remove_mean(mesh: &DiskMesh, v: &mut [f64]) -> f64 {
    let m = mesh.mean_interior_values(&v[..mesh.n_interior()]);
    v.iter_mut().for_each(|x| *x -= m);
    m
}

/// Interior defect `rhs(ω) − mean(rhs(ω)) − εω`; returns `(sup, mean(rhs))`.
fn defect(mesh: &DiskMesh, omega: &[f64], r: &[f64], eps: f64, out: &mut [f64]) -> (f64, f64) {
    let n_int = mesh.n_interior();
    let mean_r = mesh.mean_interior_values(&r[..n_int]);
    let mut sup: f64 = 0.0;
    for k in 0..n_int {
        out[k] = r[k] - mean_r - eps * omega[k];
        sup = sup.max(out[k].abs());
    }
    (sup, mean_r)
}

/// Solves `ε u = rhs(u)` with `D_ν u = φ`, starting from `u_init`.
pub fn solve_eps_bvp(
    mesh: &DiskMesh,
    eps: f64,
    phi: &[f64],
    u_init: &ScalarField,
    opts: &EllipticOptions,
) -> Result<EpsSolution> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "eps must be positive, got {eps}"
        )));
    }
    mesh.check(u_init)?;
    let n = mesh.n_nodes();
    let n_int = mesh.n_interior();
    let mut omega = u_init.clone();
    enforce_neumann(mesh, &mut omega, phi)?;
    remove_mean(mesh, omega.values_mut());

    let mut r = vec![0.0; n];
    rhs_into(mesh, omega.values(), &mut r)?;
    let mut d = vec![0.0; n];
    let (mut res, mut mean_r) = defect(mesh, omega.values(), &r, eps, &mut d);

    let mut solver = ImplicitSolver::new(mesh)?;
    let mut dt = opts.dt_initial;
    let mut trial = omega.clone();
    let mut r_trial = vec![0.0; n];
    let mut d_trial = vec![0.0; n];
    let mut iterations = 0;

    while res >= opts.tol_ell {
        if iterations >= opts.max_iterations || dt < 1e-12 {
            return Err(Error::SolverStall {
                eps,
                residual: res,
                iterations,
            });
        }
        iterations += 1;
        solver.factor(mesh, omega.values(), 1.0 / dt + eps)?;
        let mut delta = d.clone();
        delta[n_int..].fill(0.0);
        solver.solve(&mut delta)?;
        for ((t, o), dl) in trial
            .values_mut()
            .iter_mut()
            .zip(omega.values())
            .zip(&delta)
        {
            *t = o + dl;
        }
        enforce_neumann_values(mesh, trial.values_mut(), phi);
        remove_mean(mesh, trial.values_mut());
        let accepted = match rhs_into(mesh, trial.values(), &mut r_trial) {
            Ok(()) => {
                let (res_t, mean_t) = defect(mesh, trial.values(), &r_trial, eps, &mut d_trial);
                if res_t < res {
                    std::mem::swap(&mut omega, &mut trial);
                    std::mem::swap(&mut r, &mut r_trial);
                    std::mem::swap(&mut d, &mut d_trial);
                    res = res_t;
                    mean_r = mean_t;
                    true
                } else {
                    false
                }
            }
            Err(Error::NonFinite { .. }) => false,
            Err(e) => return Err(e),
        };
        dt = if accepted {
            (dt * opts.dt_growth).min(opts.dt_cap)
        } else {
            dt * 0.25
        };
    }

    let sup_grad = sup_gradient(mesh, &omega)?;
    Ok(EpsSolution {
        eps,
        omega,
        mean: mean_r / eps,
        residual: res,
        iterations,
        sup_grad,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsTraceRow {
    pub eps: f64,
    pub eps_mean_u: f64,
    pub sup_grad: f64,
    /// `ε · osc(u_ε)`.
    pub eps_osc_u: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct TranslatorResult {
    /// Linear extrapolation of `ε·mean(u_ε)` to `ε = 0`.
    pub lambda_eps: f64,
    pub lambda_integral: f64,
    pub lambda_flow: Option<f64>,
    /// Zero-mean translator profile.
    pub w: ScalarField,
    /// `sup |g^{ij}(Dw)D_iD_jw − λ_eps|` over the interior.
    pub residual_pde: f64,
    /// `sup |D_ν w − φ|`.
    pub residual_bc: f64,
    /// Largest deviation of the fitted points from the extrapolation line.
    pub fit_residual: f64,
    /// Slope `κ` of `ε·mean(u_ε) ≈ λ + κε`.
    pub fit_slope: f64,
    /// `false` when `ε·mean(u_ε)` is not monotone along the schedule.
    pub extrapolation_monotone: bool,
    pub eps_trace: Vec<EpsTraceRow>,
}

pub fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidSchedule("empty schedule".into()));
    }
    if let Some(e) = schedule.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::InvalidSchedule(format!("non-positive entry {e}")));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidSchedule(
            "entries must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Intercept, slope and max residual of the least-squares line through `pts`.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    if pts.len() == 1 {
        return (pts[0].1, 0.0, 0.0);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    (intercept, slope, res)
}

/// Runs the ε-schedule with warm starts and extrapolates `λ`.
pub fn continuation(
    mesh: &DiskMesh,
    phi: &[f64],
    schedule: &[f64],
    u_init: &ScalarField,
    opts: &EllipticOptions,
) -> Result<TranslatorResult> {
    validate_schedule(schedule)?;
    let mut init = u_init.clone();
    let mut trace = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let sol = solve_eps_bvp(mesh, eps, phi, &init, opts)?;
        trace.push(EpsTraceRow {
            eps,
            eps_mean_u: sol.eps_mean(),
            sup_grad: sol.sup_grad,
            eps_osc_u: eps * sol.omega.osc(),
            residual: sol.residual,
            iterations: sol.iterations,
        });
        init = sol.omega;
    }
    let w = init;

    let pts: Vec<(f64, f64)> = trace
        .iter()
        .skip(trace.len().saturating_sub(3))
        .map(|t| (t.eps, t.eps_mean_u))
        .collect();
    let (lambda_eps, fit_slope, fit_residual) = linear_fit(&pts);
    let diffs: Vec<f64> = trace
        .windows(2)
        .map(|p| p[1].eps_mean_u - p[0].eps_mean_u)
        .collect();
    let extrapolation_monotone = diffs.iter().all(|d| *d >= 0.0) || diffs.iter().all(|d| *d <= 0.0);

    let r = rhs(mesh, &w)?;
    let residual_pde = r
        .interior(mesh)
        .iter()
        .fold(0.0f64, |m, v| m.max((v - lambda_eps).abs()));
    let residual_bc = neumann_defect(mesh, &w, phi)?;
    let lambda_integral = lambda_integral(mesh, &w, phi)?;

    Ok(TranslatorResult {
        lambda_eps,
        lambda_integral,
        lambda_flow: None,
        w,
        residual_pde,
        residual_bc,
        fit_residual,
        fit_slope,
        extrapolation_monotone,
        eps_trace: trace,
    })
}

/// `λ = −∫_∂Ω φ (1+|Dw|²)^{-1/2} ⁄ ∫_Ω (1+|Dw|²)^{-1/2}`.
pub fn lambda_integral(mesh: &DiskMesh, w: &ScalarField, phi: &[f64]) -> Result<f64> {
    let v = area_factor(mesh, w)?;
    let bnd: Vec<f64> = phi
        .iter()
        .zip(v.boundary(mesh))
        .map(|(p, vb)| p / vb)
        .collect();
    let num = mesh.integrate_boundary_values(&bnd)?;
    let inv: Vec<f64> = v.interior(mesh).iter().map(|x| 1.0 / x).collect();
    let den = mesh.integrate_interior_values(&inv);
    Ok(-num / den)
}
