//! Operator-level checks shared by the acceptance harness and the
//! integration tests. Each returns a verdict with the measured quantities.

#![allow(dead_code, clippy::needless_range_loop)]

use tflow::flow::{area_factor, mean_curvature, rhs};
use tflow::geometry::{christoffel_from, flow_coeffs, MetricTensor};
use tflow::{ChartPoint, DiskMesh, MetricDescriptor};

pub struct Verdict {
    pub name: &'static str,
    pub ok: bool,
    pub detail: String,
}

impl Verdict {
    fn new(name: &'static str, ok: bool, detail: String) -> Self {
        Self { name, ok, detail }
    }
}

pub fn families() -> Vec<MetricDescriptor> {
    vec![
        MetricDescriptor::flat(),
        MetricDescriptor::sphere_cap(1.0).unwrap(),
        MetricDescriptor::sphere_cap(2.5).unwrap(),
        MetricDescriptor::hyperbolic(1.0).unwrap(),
    ]
}

/// Points spread over `(0, 1]` and a full turn.
pub fn sample_points() -> Vec<ChartPoint> {
    let mut out = Vec::new();
    for i in 1..=10 {
        for j in 0..7 {
            out.push(ChartPoint::polar(0.1 * i as f64, 0.9 * j as f64));
        }
    }
    out
}

pub fn spd_and_inverse() -> Verdict {
    let mut worst_inv: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for m in families() {
        for p in sample_points() {
            let s = m.metric_at(p).unwrap();
            let inv = m.inverse_metric_at(p).unwrap();
            min_eig = min_eig.min(s.eigenvalues()[0]);
            let prod = s.matmul(&inv);
            for (i, row) in prod.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let id = if i == j { 1.0 } else { 0.0 };
                    worst_inv = worst_inv.max((v - id).abs());
                }
            }
        }
    }
    Verdict::new(
        "metric SPD and inverse identity",
        min_eig > 0.0 && worst_inv < 1e-12,
        format!("min eigenvalue {min_eig:.3e}, max |sigma sigma^-1 - I| {worst_inv:.2e}"),
    )
}

/// Christoffel symbols from central differences of `σ` with step `δ`.
fn christoffel_fd(m: &MetricDescriptor, p: ChartPoint, delta: f64) -> [[[f64; 2]; 2]; 2] {
    let d = |dr: f64, dt: f64| {
        m.metric_at(ChartPoint::polar(p.r() + dr, p.theta() + dt))
            .unwrap()
    };
    let diff = |a: MetricTensor, b: MetricTensor| {
        MetricTensor::new(
            (a.get(0, 0) - b.get(0, 0)) / (2.0 * delta),
            (a.get(0, 1) - b.get(0, 1)) / (2.0 * delta),
            (a.get(1, 1) - b.get(1, 1)) / (2.0 * delta),
        )
    };
    let ds = [
        diff(d(delta, 0.0), d(-delta, 0.0)),
        diff(d(0.0, delta), d(0.0, -delta)),
    ];
    let g = christoffel_from(&m.inverse_metric_at(p).unwrap(), &ds);
    let mut out = [[[0.0; 2]; 2]; 2];
    for (k, ok) in out.iter_mut().enumerate() {
        for (i, oi) in ok.iter_mut().enumerate() {
            for (j, v) in oi.iter_mut().enumerate() {
                *v = g.get(k, i, j);
            }
        }
    }
    out
}

pub fn christoffel_symmetry_and_fd_order() -> Verdict {
    let mut asym: f64 = 0.0;
    let mut min_order = f64::INFINITY;
    for m in families().into_iter().skip(1) {
        for p in [ChartPoint::polar(0.4, 0.3), ChartPoint::polar(0.8, 2.0)] {
            let g = m.christoffel_at(p).unwrap();
            for k in 0..2 {
                asym = asym.max((g.get(k, 0, 1) - g.get(k, 1, 0)).abs());
            }
            let err = |delta: f64| {
                let fd = christoffel_fd(&m, p, delta);
                let mut e: f64 = 0.0;
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            e = e.max((fd[k][i][j] - g.get(k, i, j)).abs());
                        }
                    }
                }
                e
            };
            min_order = min_order.min((err(2e-2) / err(1e-2)).log2());
        }
    }
    Verdict::new(
        "Christoffel symmetry and finite-difference order",
        asym == 0.0 && min_order >= 1.9,
        format!("max asymmetry {asym:.1e}, min FD order {min_order:.3}"),
    )
}

/// `u = 0.3 x + 0.2 y² + 0.1 x y` in polar form with its exact chart partials
/// `[u_r, u_θ, u_rr, u_rθ, u_θθ]`.
fn smooth_test_function(r: f64, t: f64) -> (f64, [f64; 5]) {
    let (c, s) = (t.cos(), t.sin());
    let u = 0.3 * r * c + 0.2 * r * r * s * s + 0.1 * r * r * c * s;
    let ur = 0.3 * c + 0.4 * r * s * s + 0.2 * r * c * s;
    let ut = -0.3 * r * s + 0.4 * r * r * s * c + 0.1 * r * r * (c * c - s * s);
    let urr = 0.4 * s * s + 0.2 * c * s;
    let urt = -0.3 * s + 0.8 * r * s * c + 0.2 * r * (c * c - s * s);
    let utt = -0.3 * r * c + 0.4 * r * r * (c * c - s * s) - 0.4 * r * r * c * s;
    (u, [ur, ut, urr, urt, utt])
}

fn exact_rhs(m: &MetricDescriptor, p: ChartPoint) -> f64 {
    let (_, d) = smooth_test_function(p.r(), p.theta());
    let inv = m.inverse_metric_at(p).unwrap();
    let g = m.christoffel_at(p).unwrap();
    let coeff = flow_coeffs(&inv, [d[0], d[1]]);
    let second = [[d[2], d[3]], [d[3], d[4]]];
    let mut out = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let hess = second[i][j] - g.get(0, i, j) * d[0] - g.get(1, i, j) * d[1];
            out += coeff.get(i, j) * hess;
        }
    }
    out
}

/// Errors of the discrete operator against the exact one: area-weighted
/// L² over the interior and sup over nodes with `r ≥ 0.25`.
pub fn operator_errors(m: &MetricDescriptor, n_r: usize) -> (f64, f64) {
    let mesh = DiskMesh::build(m, 1.0, n_r, 2 * n_r).unwrap();
    let u = mesh.field_from_fn(|p| smooth_test_function(p.r(), p.theta()).0);
    let r = rhs(&mesh, &u).unwrap();
    let mut l2 = 0.0;
    let mut sup: f64 = 0.0;
    for (k, (p, w)) in mesh.nodes().zip(mesh.area_weights()).enumerate() {
        let e = r.values()[k] - exact_rhs(m, p);
        l2 += e * e * w;
        if p.r() >= 0.25 {
            sup = sup.max(e.abs());
        }
    }
    (l2.sqrt(), sup)
}

pub fn stencil_order() -> Verdict {
    let mut min_l2 = f64::INFINITY;
    let mut min_sup = f64::INFINITY;
    for m in [
        MetricDescriptor::flat(),
        MetricDescriptor::sphere_cap(1.0).unwrap(),
    ] {
        let e: Vec<(f64, f64)> = [32, 64, 128]
            .iter()
            .map(|&n| operator_errors(&m, n))
            .collect();
        for w in e.windows(2) {
            min_l2 = min_l2.min((w[0].0 / w[1].0).log2());
            min_sup = min_sup.min((w[0].1 / w[1].1).log2());
        }
    }
    Verdict::new(
        "stencil order (L2 and sup on r >= 1/4)",
        min_l2 >= 1.9 && min_sup >= 1.9,
        format!("min L2 order {min_l2:.3}, min sup order {min_sup:.3}"),
    )
}

pub fn quadrature_closed_forms() -> Verdict {
    let flat = DiskMesh::build(&MetricDescriptor::flat(), 1.0, 64, 128).unwrap();
    let pi = std::f64::consts::PI;
    let e_area = (flat.area() - pi).abs();
    let e_len = (flat.boundary_length() - 2.0 * pi).abs();
    let r2 = flat.field_from_fn(|p| p.r() * p.r());
    let e_r2 = (flat.integrate_domain(&r2).unwrap() - pi / 2.0).abs();
    let cos = flat.field_from_fn(|p| p.theta().cos());
    let e_cos = flat.integrate_domain(&cos).unwrap().abs();
    let sphere =
        DiskMesh::build(&MetricDescriptor::sphere_cap(1.0).unwrap(), 1.0, 64, 128).unwrap();
    let e_cap = (sphere.area() - 2.0 * pi * (1.0 - 1f64.cos())).abs();
    let e_cap_len = (sphere.boundary_length() - 2.0 * pi * 1f64.sin()).abs();
    let h2 = flat.h2();
    let ok = e_area < 10.0 * h2
        && e_len < 1e-12
        && e_r2 < 10.0 * h2
        && e_cos < 1e-12
        && e_cap < 10.0 * h2
        && e_cap_len < 1e-12;
    Verdict::new(
        "quadrature closed forms",
        ok,
        format!(
            "area {e_area:.1e}, length {e_len:.1e}, r^2 {e_r2:.1e}, cos {e_cos:.1e}, cap area {e_cap:.1e}, cap length {e_cap_len:.1e}"
        ),
    )
}

/// `σ/v² ≤ g ≤ σ` in the sense of quadratic forms.
pub fn ellipticity_sandwich() -> Verdict {
    let mut worst: f64 = 0.0;
    for m in families() {
        for (n, p) in sample_points().into_iter().enumerate() {
            let inv = m.inverse_metric_at(p).unwrap();
            let du = [0.7 * (n as f64).sin(), 2.3 * (1.3 * n as f64).cos()];
            let g = flow_coeffs(&inv, du);
            let v2 = 1.0 + inv.quad(du);
            // spectrum of σ g must lie in [1/v², 1]
            let gm = MetricTensor::new(g.get(0, 0), g.get(0, 1), g.get(1, 1));
            let ev = gm.relative_eigenvalues(&inv);
            worst = worst.max((1.0 / v2 - ev[0]).max(ev[1] - 1.0));
        }
    }
    Verdict::new(
        "ellipticity sandwich",
        worst <= 1e-12,
        format!("max violation {worst:.2e}"),
    )
}

pub fn rhs_equals_h_times_v() -> Verdict {
    let mut worst: f64 = 0.0;
    for m in families() {
        let mesh = DiskMesh::build(&m, 1.0, 16, 32).unwrap();
        let u =
            mesh.field_from_fn(|p| smooth_test_function(p.r(), p.theta()).0 + 0.2 * p.r().powi(4));
        let r = rhs(&mesh, &u).unwrap();
        let h = mean_curvature(&mesh, &u).unwrap();
        let v = area_factor(&mesh, &u).unwrap();
        for k in 0..mesh.n_nodes() {
            let e =
                (h.values()[k] * v.values()[k] - r.values()[k]).abs() / (1.0 + r.values()[k].abs());
            worst = worst.max(e);
        }
    }
    Verdict::new(
        "rhs = H v identity",
        worst < 1e-13,
        format!("max relative defect {worst:.2e}"),
    )
}

pub fn operator_suite() -> Vec<Verdict> {
    vec![
        spd_and_inverse(),
        christoffel_symmetry_and_fd_order(),
        stencil_order(),
        quadrature_closed_forms(),
        ellipticity_sandwich(),
        rhs_equals_h_times_v(),
    ]
}
