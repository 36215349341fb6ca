//! Riemannian metric families on a polar chart.
//!
//! Every built-in family is a warped product `σ = dr² + f(r)² dθ²` in chart
//! coordinates `(w¹, w²) = (r, θ)`. The warping function and its first two
//! derivatives are analytic, so metric derivatives, Christoffel symbols and
//! the Gaussian curvature `K = -f''/f` are all closed-form.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A point of the chart, `w1 = r` and `w2 = θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint {
    pub w1: f64,
    pub w2: f64,
}

impl ChartPoint {
    pub fn polar(r: f64, theta: f64) -> Self {
        Self { w1: r, w2: theta }
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.w1
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.w2
    }

    /// Cartesian `r cos θ` of the polar chart.
    pub fn x(&self) -> f64 {
        self.w1 * self.w2.cos()
    }

    /// Cartesian `r sin θ` of the polar chart.
    pub fn y(&self) -> f64 {
        self.w1 * self.w2.sin()
    }
}

/// Symmetric 2×2 tensor in chart components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricTensor {
    pub entries: [[f64; 2]; 2],
}

impl MetricTensor {
    pub const IDENTITY: MetricTensor = MetricTensor {
        entries: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self {
            entries: [[a11, a12], [a12, a22]],
        }
    }

    pub fn diag(a11: f64, a22: f64) -> Self {
        Self::new(a11, 0.0, a22)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn det(&self) -> f64 {
        let a = &self.entries;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn inverse(&self) -> MetricTensor {
        let a = &self.entries;
        let d = self.det();
        MetricTensor {
            entries: [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]],
        }
    }

    /// Quadratic form `a_ij ξ_i ξ_j`.
    pub fn quad(&self, xi: [f64; 2]) -> f64 {
        let a = &self.entries;
        a[0][0] * xi[0] * xi[0] + (a[0][1] + a[1][0]) * xi[0] * xi[1] + a[1][1] * xi[1] * xi[1]
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let a = &self.entries;
        [
            a[0][0] * x[0] + a[0][1] * x[1],
            a[1][0] * x[0] + a[1][1] * x[1],
        ]
    }

    pub fn matmul(&self, other: &MetricTensor) -> [[f64; 2]; 2] {
        let a = &self.entries;
        let b = &other.entries;
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }

    /// Eigenvalues (ascending) of the symmetric matrix.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = &self.entries;
        let half_tr = 0.5 * (a[0][0] + a[1][1]);
        let half_diff = 0.5 * (a[0][0] - a[1][1]);
        let off = 0.5 * (a[0][1] + a[1][0]);
        let rad = half_diff.hypot(off);
        [half_tr - rad, half_tr + rad]
    }

    /// Eigenvalues (ascending) of `self` measured relative to the SPD `metric`,
    /// i.e. of `metric⁻¹ · self` for a covariant 2-tensor.
    pub fn relative_eigenvalues(&self, metric: &MetricTensor) -> [f64; 2] {
        let m = metric.inverse().matmul(self);
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        [0.5 * tr - disc, 0.5 * tr + disc]
    }
}

/// `Γ^k_ij`, stored as `gamma[k][i][j]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChristoffelSymbols {
    pub gamma: [[[f64; 2]; 2]; 2],
}

impl ChristoffelSymbols {
    pub const ZERO: ChristoffelSymbols = ChristoffelSymbols {
        gamma: [[[0.0; 2]; 2]; 2],
    };

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[k][i][j]
    }
}

/// Warping function `f` of a rotationally symmetric metric `dr² + f(r)² dθ²`.
///
/// Implementors must satisfy `f(0) = 0`, `f'(0) = 1` and `f > 0` on
/// `(0, max_radius)` so the chart closes smoothly at the origin.
pub trait WarpProfile: Send + Sync + fmt::Debug {
    fn value(&self, r: f64) -> f64;
    fn first(&self, r: f64) -> f64;
    fn second(&self, r: f64) -> f64;
    fn max_radius(&self) -> f64;
    fn label(&self) -> String;
}

/// `f(r) = s·sinh(r/s)`: the hyperbolic plane with curvature `-1/s²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinhProfile {
    pub scale: f64,
}

impl WarpProfile for SinhProfile {
    fn value(&self, r: f64) -> f64 {
        self.scale * (r / self.scale).sinh()
    }
    fn first(&self, r: f64) -> f64 {
        (r / self.scale).cosh()
    }
    fn second(&self, r: f64) -> f64 {
        (r / self.scale).sinh() / self.scale
    }
    fn max_radius(&self) -> f64 {
        f64::INFINITY
    }
    fn label(&self) -> String {
        format!("sinh({})", self.scale)
    }
}

#[derive(Clone, Debug)]
pub enum MetricFamily {
    Flat,
    /// Round sphere of the given radius in geodesic polar coordinates.
    SphereCap {
        radius: f64,
    },
    CustomDiagonal(Arc<dyn WarpProfile>),
}

/// Metric family plus its chart validity bound.
#[derive(Clone, Debug)]
pub struct MetricDescriptor {
    family: MetricFamily,
    r_max: f64,
}

impl MetricDescriptor {
    pub fn flat() -> Self {
        Self {
            family: MetricFamily::Flat,
            r_max: f64::INFINITY,
        }
    }

    pub fn sphere_cap(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidMetric(format!(
                "sphere-cap radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self {
            family: MetricFamily::SphereCap { radius },
            r_max: std::f64::consts::PI * radius,
        })
    }

    pub fn custom_diagonal(profile: Arc<dyn WarpProfile>) -> Self {
        let r_max = profile.max_radius();
        Self {
            family: MetricFamily::CustomDiagonal(profile),
            r_max,
        }
    }

    pub fn hyperbolic(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidMetric(format!(
                "sinh scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self::custom_diagonal(Arc::new(SinhProfile { scale })))
    }

    pub fn family(&self) -> &MetricFamily {
        &self.family
    }

    /// Radial bound of the chart: valid points satisfy `0 < r < r_max`.
    pub fn validity_radius(&self) -> f64 {
        self.r_max
    }

    pub fn label(&self) -> String {
        match &self.family {
            MetricFamily::Flat => "flat".to_string(),
            MetricFamily::SphereCap { radius } => format!("sphere-cap({radius})"),
            MetricFamily::CustomDiagonal(p) => format!("custom-diagonal({})", p.label()),
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.family, MetricFamily::Flat)
    }

    pub fn contains(&self, p: ChartPoint) -> bool {
        p.r().is_finite() && p.theta().is_finite() && p.r() > 0.0 && p.r() < self.r_max
    }

    fn check(&self, p: ChartPoint) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::PointOutsideChart {
                r: p.r(),
                theta: p.theta(),
                r_max: self.r_max,
            })
        }
    }

    /// `(f, f', f'')` at radius `r`.
    pub fn warp(&self, r: f64) -> (f64, f64, f64) {
        match &self.family {
            MetricFamily::Flat => (r, 1.0, 0.0),
            MetricFamily::SphereCap { radius } => {
                let s = r / radius;
                (radius * s.sin(), s.cos(), -s.sin() / radius)
            }
            MetricFamily::CustomDiagonal(p) => (p.value(r), p.first(r), p.second(r)),
        }
    }

    pub fn metric_at(&self, p: ChartPoint) -> Result<MetricTensor> {
        self.check(p)?;
        let (f, _, _) = self.warp(p.r());
        Ok(MetricTensor::diag(1.0, f * f))
    }

    pub fn inverse_metric_at(&self, p: ChartPoint) -> Result<MetricTensor> {
        Ok(self.metric_at(p)?.inverse())
    }

    /// Analytic partial derivatives `∂_k σ_ij`, indexed `[k]`.
    pub fn metric_derivatives_at(&self, p: ChartPoint) -> Result<[MetricTensor; 2]> {
        self.check(p)?;
        let (f, df, _) = self.warp(p.r());
        Ok([
            MetricTensor::diag(0.0, 2.0 * f * df),
            MetricTensor::diag(0.0, 0.0),
        ])
    }

    /// `Γ^k_ij = ½ σ^{kl} (∂_i σ_jl + ∂_j σ_il − ∂_l σ_ij)`.
    pub fn christoffel_at(&self, p: ChartPoint) -> Result<ChristoffelSymbols> {
        let inv = self.inverse_metric_at(p)?;
        let d = self.metric_derivatives_at(p)?;
        Ok(christoffel_from(&inv, &d))
    }

    pub fn gauss_curvature_at(&self, p: ChartPoint) -> Result<f64> {
        self.check(p)?;
        Ok(match &self.family {
            MetricFamily::Flat => 0.0,
            MetricFamily::SphereCap { radius } => 1.0 / (radius * radius),
            MetricFamily::CustomDiagonal(prof) => -prof.second(p.r()) / prof.value(p.r()),
        })
    }
}

/// Christoffel symbols from the inverse metric and metric derivatives
/// `dsigma[k] = ∂_k σ`.
pub fn christoffel_from(inv: &MetricTensor, dsigma: &[MetricTensor; 2]) -> ChristoffelSymbols {
    let mut gamma = [[[0.0; 2]; 2]; 2];
    for (k, gk) in gamma.iter_mut().enumerate() {
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    let lower = dsigma[i].get(j, l) + dsigma[j].get(i, l) - dsigma[l].get(i, j);
                    s += inv.get(k, l) * lower;
                }
                gk[i][j] = 0.5 * s;
            }
        }
    }
    ChristoffelSymbols { gamma }
}

/// Contravariant gradient `D^i u = σ^{ij} D_j u`.
#[inline]
pub fn raise(sigma_inv: &MetricTensor, du: [f64; 2]) -> [f64; 2] {
    sigma_inv.apply(du)
}

/// `|Du|² = σ^{ij} D_i u D_j u`.
#[inline]
pub fn grad_norm_sq(sigma_inv: &MetricTensor, du: [f64; 2]) -> f64 {
    sigma_inv.quad(du).max(0.0)
}

/// `g^{ij} = σ^{ij} − D^i u D^j u / (1 + |Du|²)`.
pub fn flow_coeffs(sigma_inv: &MetricTensor, du: [f64; 2]) -> MetricTensor {
    let up = raise(sigma_inv, du);
    let v2 = 1.0 + grad_norm_sq(sigma_inv, du);
    MetricTensor::new(
        sigma_inv.get(0, 0) - up[0] * up[0] / v2,
        sigma_inv.get(0, 1) - up[0] * up[1] / v2,
        sigma_inv.get(1, 1) - up[1] * up[1] / v2,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn sphere() -> MetricDescriptor {
        MetricDescriptor::sphere_cap(1.0).unwrap()
    }

    /// Converts polar components of a covariant 2-tensor to Cartesian ones.
    fn to_cartesian(t: &MetricTensor, r: f64, theta: f64) -> [[f64; 2]; 2] {
        // rows: ∂(r, θ)/∂(x, y)
        let (c, s) = (theta.cos(), theta.sin());
        let jac = [[c, s], [-s / r, c / r]];
        let mut out = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        out[a][b] += jac[i][a] * jac[j][b] * t.get(i, j);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn flat_metric_is_euclidean() {
        let m = MetricDescriptor::flat();
        for &(r, th) in &[(0.1, 0.0), (0.5, 1.3), (2.0, -2.7)] {
            let p = ChartPoint::polar(r, th);
            let s = m.metric_at(p).unwrap();
            assert_eq!(s, MetricTensor::diag(1.0, r * r));
            let cart = to_cartesian(&s, r, th);
            assert!((cart[0][0] - 1.0).abs() < 1e-14 && (cart[1][1] - 1.0).abs() < 1e-14);
            assert!(cart[0][1].abs() < 1e-14);
            // flat connection: Γ^r_θθ = -r, Γ^θ_rθ = 1/r in polar components
            let g = m.christoffel_at(p).unwrap();
            assert_eq!(g.get(0, 1, 1), -r);
            assert!((g.get(1, 0, 1) - 1.0 / r).abs() < 1e-15);
            assert_eq!(m.gauss_curvature_at(p).unwrap(), 0.0);
        }
    }

    #[test]
    fn sphere_cap_at_quarter_pi() {
        let p = ChartPoint::polar(FRAC_PI_4, 1.0);
        let s = sphere().metric_at(p).unwrap();
        assert!((s.get(0, 0) - 1.0).abs() < 1e-15);
        assert!((s.get(1, 1) - 0.5).abs() < 1e-15);
        let inv = sphere().inverse_metric_at(p).unwrap();
        assert!((inv.get(1, 1) - 2.0).abs() < 1e-14);
        let g = sphere().christoffel_at(p).unwrap();
        assert!((g.get(0, 1, 1) + 0.5).abs() < 1e-15);
        assert!((g.get(1, 0, 1) - 1.0).abs() < 1e-14);
        assert!((g.get(1, 1, 0) - 1.0).abs() < 1e-14);
        assert_eq!(g.get(0, 0, 0), 0.0);
    }

    #[test]
    fn sphere_cap_near_origin_matches_taylor() {
        for &r in &[1e-2, 1e-3, 1e-4] {
            let s = sphere().metric_at(ChartPoint::polar(r, 0.0)).unwrap();
            let taylor = r * r - r.powi(4) / 3.0;
            assert!((s.get(1, 1) - taylor).abs() < r.powi(6) + 4.0 * f64::EPSILON * taylor);
        }
    }

    #[test]
    fn outside_chart_rejected() {
        let e = sphere().metric_at(ChartPoint::polar(3.5, 0.0));
        assert!(matches!(e, Err(Error::PointOutsideChart { .. })));
        let e = MetricDescriptor::flat().metric_at(ChartPoint::polar(0.0, 0.0));
        assert!(matches!(e, Err(Error::PointOutsideChart { .. })));
        let e = MetricDescriptor::flat().christoffel_at(ChartPoint::polar(f64::NAN, 0.0));
        assert!(e.is_err());
    }

    #[test]
    fn curvature_closed_forms() {
        let p = ChartPoint::polar(0.7, 2.0);
        assert_eq!(MetricDescriptor::flat().gauss_curvature_at(p).unwrap(), 0.0);
        assert_eq!(sphere().gauss_curvature_at(p).unwrap(), 1.0);
        let h = MetricDescriptor::hyperbolic(1.0).unwrap();
        assert!((h.gauss_curvature_at(p).unwrap() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn flat_grad_and_coeffs() {
        let id = MetricTensor::IDENTITY;
        assert_eq!(grad_norm_sq(&id, [1.0, 0.0]), 1.0);
        assert_eq!(grad_norm_sq(&id, [0.0, 0.0]), 0.0);
        assert_eq!(flow_coeffs(&id, [0.0, 0.0]), id);
        let g = flow_coeffs(&id, [1.0, 0.0]);
        assert!((g.get(0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(g.get(1, 1), 1.0);
        assert_eq!(g.get(0, 1), 0.0);
        let inv = sphere()
            .inverse_metric_at(ChartPoint::polar(FRAC_PI_4, 0.0))
            .unwrap();
        assert!((grad_norm_sq(&inv, [0.0, 1.0]) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_helpers() {
        let a = MetricTensor::new(2.0, 1.0, 2.0);
        let e = a.eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 3.0).abs() < 1e-15);
        let rel = MetricTensor::diag(1.0, 4.0).relative_eigenvalues(&MetricTensor::diag(1.0, 2.0));
        assert!((rel[0] - 1.0).abs() < 1e-15 && (rel[1] - 2.0).abs() < 1e-15);
    }
}
