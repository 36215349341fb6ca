//! Polar finite-difference mesh over a chart disk `{r ≤ R}`.
//!
//! Interior rings sit at cell centres `r_i = (i + ½)Δr`, `i = 0..n_r`, and a
//! boundary ring at `r = R` carries unknowns as well. Node `(i, j)` has flat
//! index `i·n_θ + j`; the boundary ring is `i = n_r`.
//!
//! The radial stencil of the innermost ring reaches across the origin: the
//! point `(−Δr/2, θ)` is the node `(Δr/2, θ + π)`, which is why `n_θ` must be
//! even. Between the last interior ring and the boundary the spacing is
//! `Δr/2`, handled by non-uniform three-point weights.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, ChristoffelSymbols, MetricDescriptor, MetricTensor};

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

pub const MIN_RADIAL_CELLS: usize = 8;
pub const MIN_ANGULAR_CELLS: usize = 16;

// Rows of `NodeStencil::w`.
pub(crate) const D_R: usize = 0;
pub(crate) const D_T: usize = 1;
pub(crate) const D_RR: usize = 2;
pub(crate) const D_TT: usize = 3;
pub(crate) const D_RT: usize = 4;

/// Slot of neighbour `(i + di, j + dj)` in the 3×3 neighbourhood.
#[inline]
const fn slot(di: isize, dj: isize) -> usize {
    ((di + 1) * 3 + (dj + 1)) as usize
}

pub(crate) const CENTER: usize = slot(0, 0);

/// Derivative weights of an interior node over its 3×3 neighbourhood.
///
/// Every row sums to zero, so derivatives are evaluated on differences
/// `u[nb] − u[center]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct NodeStencil {
    pub nb: [usize; 9],
    pub w: [[f64; 9]; 5],
}

impl NodeStencil {
    #[inline]
    pub fn apply(&self, values: &[f64]) -> [f64; 5] {
        let c = values[self.nb[CENTER]];
        let mut diff = [0.0; 9];
        for (d, &n) in diff.iter_mut().zip(self.nb.iter()) {
            *d = values[n] - c;
        }
        let mut out = [0.0; 5];
        for (o, w) in out.iter_mut().zip(self.w.iter()) {
            *o = w.iter().zip(diff.iter()).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// Per-node metric data, evaluated once at construction.
#[derive(Clone, Copy, Debug)]
pub struct NodeGeometry {
    pub point: ChartPoint,
    pub sigma: MetricTensor,
    pub sigma_inv: MetricTensor,
    pub gamma: ChristoffelSymbols,
    pub sqrt_det: f64,
}

#[derive(Debug)]
pub struct DiskMesh {
    id: u64,
    metric: MetricDescriptor,
    radius: f64,
    n_r: usize,
    n_theta: usize,
    dr: f64,
    dtheta: f64,
    geometry: Vec<NodeGeometry>,
    area_weights: Vec<f64>,
    length_weights: Vec<f64>,
    normals: Vec<[f64; 2]>,
    stencils: Vec<NodeStencil>,
    /// One-sided `∂_r` weights at `r = R` on rings `n_r, n_r − 1, n_r − 2`.
    boundary_dr: [f64; 3],
}

/// Three-point weights `(minus, centre, plus)` for first and second
/// derivatives with spacings `hm` below and `hp` above.
fn three_point(hm: f64, hp: f64) -> ([f64; 3], [f64; 3]) {
    let s = hm + hp;
    let first = [-hp / (hm * s), (hp - hm) / (hm * hp), hm / (hp * s)];
    let second = [2.0 / (hm * s), -2.0 / (hm * hp), 2.0 / (hp * s)];
    (first, second)
}

impl DiskMesh {
    pub fn build(
        metric: &MetricDescriptor,
        radius: f64,
        n_r: usize,
        n_theta: usize,
    ) -> Result<Self> {
        if n_r < MIN_RADIAL_CELLS {
            return Err(Error::ResolutionTooCoarse(format!(
                "n_r = {n_r} < {MIN_RADIAL_CELLS}"
            )));
        }
        if n_theta < MIN_ANGULAR_CELLS || !n_theta.is_multiple_of(2) {
            return Err(Error::ResolutionTooCoarse(format!(
                "n_theta = {n_theta} must be even and at least {MIN_ANGULAR_CELLS}"
            )));
        }
        if !(radius.is_finite() && radius > 0.0 && radius < metric.validity_radius()) {
            return Err(Error::RadiusOutsideChart {
                radius,
                r_max: metric.validity_radius(),
            });
        }

        let dr = radius / n_r as f64;
        let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
        let n_nodes = (n_r + 1) * n_theta;

        let mut geometry = Vec::with_capacity(n_nodes);
        for i in 0..=n_r {
            let r = if i == n_r {
                radius
            } else {
                (i as f64 + 0.5) * dr
            };
            for j in 0..n_theta {
                let point = ChartPoint::polar(r, j as f64 * dtheta);
                let sigma = metric.metric_at(point)?;
                if sigma.eigenvalues()[0] <= 1e-12 {
                    return Err(Error::InvalidMetric(format!(
                        "metric not positive definite at r = {r}"
                    )));
                }
                geometry.push(NodeGeometry {
                    point,
                    sigma,
                    sigma_inv: sigma.inverse(),
                    gamma: metric.christoffel_at(point)?,
                    sqrt_det: sigma.det().sqrt(),
                });
            }
        }

        let area_weights = geometry[..n_r * n_theta]
            .iter()
            .map(|g| g.sqrt_det * dr * dtheta)
            .collect();

        let boundary = &geometry[n_r * n_theta..];
        let length_weights = boundary
            .iter()
            .map(|g| g.sigma.get(1, 1).sqrt() * dtheta)
            .collect();

        // ν^i = −σ^{ir} / √σ^{rr}: inward unit normal to the circle r = R.
        let normals: Vec<[f64; 2]> = boundary
            .iter()
            .map(|g| {
                let s = g.sigma_inv.get(0, 0).sqrt();
                [-g.sigma_inv.get(0, 0) / s, -g.sigma_inv.get(0, 1) / s]
            })
            .collect();
        for (g, nu) in boundary.iter().zip(&normals) {
            let len = g.sigma.quad(*nu);
            if (len - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidMetric(format!(
                    "boundary normal has squared length {len}"
                )));
            }
        }

        // distances 0, Δr/2, 3Δr/2 behind the boundary
        let boundary_dr = [8.0 / (3.0 * dr), -3.0 / dr, 1.0 / (3.0 * dr)];

        let mut mesh = Self {
            id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
            metric: metric.clone(),
            radius,
            n_r,
            n_theta,
            dr,
            dtheta,
            geometry,
            area_weights,
            length_weights,
            normals,
            stencils: Vec::new(),
            boundary_dr,
        };
        mesh.stencils = mesh.build_stencils();
        Ok(mesh)
    }

    fn build_stencils(&self) -> Vec<NodeStencil> {
        let (n_r, n_t) = (self.n_r, self.n_theta);
        let half = n_t / 2;
        let t1 = 1.0 / (2.0 * self.dtheta);
        let t2 = 1.0 / (self.dtheta * self.dtheta);
        let mut out = Vec::with_capacity(n_r * n_t);
        for i in 0..n_r {
            let hp = if i + 1 == n_r { 0.5 * self.dr } else { self.dr };
            let (first, second) = three_point(self.dr, hp);
            for j in 0..n_t {
                let mut nb = [0usize; 9];
                for di in -1isize..=1 {
                    for dj in -1isize..=1 {
                        let jj = j as isize + dj;
                        nb[slot(di, dj)] = if i == 0 && di == -1 {
                            self.idx(0, jj + half as isize)
                        } else {
                            self.idx((i as isize + di) as usize, jj)
                        };
                    }
                }
                let mut w = [[0.0; 9]; 5];
                for (k, di) in (-1isize..=1).enumerate() {
                    w[D_R][slot(di, 0)] = first[k];
                    w[D_RR][slot(di, 0)] = second[k];
                    w[D_RT][slot(di, 1)] = first[k] * t1;
                    w[D_RT][slot(di, -1)] = -first[k] * t1;
                }
                w[D_T][slot(0, 1)] = t1;
                w[D_T][slot(0, -1)] = -t1;
                w[D_TT][slot(0, 1)] = t2;
                w[D_TT][slot(0, -1)] = t2;
                w[D_TT][CENTER] = -2.0 * t2;
                out.push(NodeStencil { nb, w });
            }
        }
        out
    }

    /// Flat index of node `(i, j)`; `j` wraps periodically.
    #[inline]
    pub fn idx(&self, i: usize, j: isize) -> usize {
        let n = self.n_theta as isize;
        i * self.n_theta + j.rem_euclid(n) as usize
    }

    #[inline]
    pub fn boundary_idx(&self, j: usize) -> usize {
        self.n_r * self.n_theta + j
    }

    pub fn id(&self) -> u64 {
        self.id
    }
    pub fn metric(&self) -> &MetricDescriptor {
        &self.metric
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn n_r(&self) -> usize {
        self.n_r
    }
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn dtheta(&self) -> f64 {
        self.dtheta
    }
    pub fn n_nodes(&self) -> usize {
        (self.n_r + 1) * self.n_theta
    }
    pub fn n_interior(&self) -> usize {
        self.n_r * self.n_theta
    }

    /// Mesh size used for all `h²`-scaled tolerances (the radial spacing).
    pub fn h(&self) -> f64 {
        self.dr
    }

    pub fn h2(&self) -> f64 {
        self.dr * self.dr
    }

    pub fn nodes(&self) -> impl Iterator<Item = ChartPoint> + '_ {
        self.geometry.iter().map(|g| g.point)
    }

    pub fn node(&self, k: usize) -> ChartPoint {
        self.geometry[k].point
    }

    pub fn geometry(&self) -> &[NodeGeometry] {
        &self.geometry
    }

    pub fn area_weights(&self) -> &[f64] {
        &self.area_weights
    }

    pub fn length_weights(&self) -> &[f64] {
        &self.length_weights
    }

    /// Contravariant components of the inward unit normal, one per boundary node.
    pub fn normals(&self) -> &[[f64; 2]] {
        &self.normals
    }

    pub(crate) fn stencils(&self) -> &[NodeStencil] {
        &self.stencils
    }

    pub(crate) fn boundary_dr(&self) -> [f64; 3] {
        self.boundary_dr
    }

    pub fn area(&self) -> f64 {
        self.area_weights.iter().sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.length_weights.iter().sum()
    }

    pub fn zeros(&self) -> ScalarField {
        ScalarField {
            values: vec![0.0; self.n_nodes()],
            mesh_id: self.id,
        }
    }

    pub fn constant(&self, c: f64) -> ScalarField {
        ScalarField {
            values: vec![c; self.n_nodes()],
            mesh_id: self.id,
        }
    }

    pub fn field_from_fn(&self, f: impl Fn(ChartPoint) -> f64) -> ScalarField {
        ScalarField {
            values: self.geometry.iter().map(|g| f(g.point)).collect(),
            mesh_id: self.id,
        }
    }

    pub fn field_from_values(&self, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != self.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: self.n_nodes(),
                found: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node, t: 0.0 });
        }
        Ok(ScalarField {
            values,
            mesh_id: self.id,
        })
    }

    /// Samples `f(θ)` on the boundary ring.
    pub fn boundary_from_fn(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n_theta)
            .map(|j| f(self.geometry[self.boundary_idx(j)].point.theta()))
            .collect()
    }

    pub fn check(&self, f: &ScalarField) -> Result<()> {
        if f.mesh_id != self.id {
            return Err(Error::MeshMismatch {
                expected: self.id,
                found: f.mesh_id,
            });
        }
        if f.values.len() != self.n_nodes() {
            return Err(Error::LengthMismatch {
                expected: self.n_nodes(),
                found: f.values.len(),
            });
        }
        Ok(())
    }

    fn check_boundary(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.n_theta {
            return Err(Error::LengthMismatch {
                expected: self.n_theta,
                found: b.len(),
            });
        }
        Ok(())
    }

    /// `(∂_r u, ∂_θ u)` at a boundary node.
    #[inline]
    pub(crate) fn boundary_partials(&self, values: &[f64], j: usize) -> [f64; 2] {
        let n_t = self.n_theta as isize;
        let b = self.boundary_idx(j);
        let c = values[b];
        let w = self.boundary_dr;
        let d_r = w[1] * (values[self.idx(self.n_r - 1, j as isize)] - c)
            + w[2] * (values[self.idx(self.n_r - 2, j as isize)] - c);
        let jp = self.boundary_idx((j as isize + 1).rem_euclid(n_t) as usize);
        let jm = self.boundary_idx((j as isize - 1).rem_euclid(n_t) as usize);
        let d_t = (values[jp] - values[jm]) / (2.0 * self.dtheta);
        [d_r, d_t]
    }

    /// Chart partial derivatives `(∂_r f, ∂_θ f)` at every node.
    pub fn partials(&self, f: &ScalarField) -> Result<Vec<[f64; 2]>> {
        self.check(f)?;
        let v = &f.values;
        let mut out: Vec<[f64; 2]> = self
            .stencils
            .iter()
            .map(|s| {
                let d = s.apply(v);
                [d[D_R], d[D_T]]
            })
            .collect();
        out.extend((0..self.n_theta).map(|j| self.boundary_partials(v, j)));
        Ok(out)
    }

    /// Covariant Hessian `D_iD_j f = ∂_i∂_j f − Γ^k_ij ∂_k f` at interior nodes.
    pub fn covariant_hessian(&self, f: &ScalarField) -> Result<Vec<MetricTensor>> {
        self.check(f)?;
        Ok(self
            .stencils
            .iter()
            .zip(&self.geometry)
            .map(|(s, g)| covariant_hessian_from(&s.apply(&f.values), &g.gamma))
            .collect())
    }

    /// `D_ν f = ν^i ∂_i f` on the boundary ring (ν inward).
    pub fn normal_derivative(&self, f: &ScalarField) -> Result<Vec<f64>> {
        self.check(f)?;
        Ok((0..self.n_theta)
            .map(|j| {
                let d = self.boundary_partials(&f.values, j);
                let nu = self.normals[j];
                nu[0] * d[0] + nu[1] * d[1]
            })
            .collect())
    }

    /// Metric-weighted sum over the interior nodes.
    pub fn integrate_domain(&self, f: &ScalarField) -> Result<f64> {
        self.check(f)?;
        Ok(self.integrate_interior_values(f.interior(self)))
    }

    pub(crate) fn integrate_interior_values(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.area_weights)
            .map(|(a, w)| a * w)
            .sum()
    }

    /// Metric-weighted sum over the boundary ring of `f`.
    pub fn integrate_boundary(&self, f: &ScalarField) -> Result<f64> {
        self.check(f)?;
        self.integrate_boundary_values(f.boundary(self))
    }

    /// Metric-weighted sum of values given per boundary node.
    pub fn integrate_boundary_values(&self, b: &[f64]) -> Result<f64> {
        self.check_boundary(b)?;
        Ok(b.iter().zip(&self.length_weights).map(|(a, w)| a * w).sum())
    }

    /// Area-weighted mean over the interior nodes.
    pub fn mean(&self, f: &ScalarField) -> Result<f64> {
        Ok(self.integrate_domain(f)? / self.area())
    }

    pub(crate) fn mean_interior_values(&self, values: &[f64]) -> f64 {
        self.integrate_interior_values(values) / self.area()
    }
}

#[inline]
pub(crate) fn covariant_hessian_from(d: &[f64; 5], gamma: &ChristoffelSymbols) -> MetricTensor {
    let du = [d[D_R], d[D_T]];
    let corr = |i: usize, j: usize| gamma.get(0, i, j) * du[0] + gamma.get(1, i, j) * du[1];
    MetricTensor::new(
        d[D_RR] - corr(0, 0),
        d[D_RT] - corr(0, 1),
        d[D_TT] - corr(1, 1),
    )
}

/// Node values on a particular mesh (interior rings followed by the boundary ring).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
    mesh_id: u64,
}

impl ScalarField {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn interior<'a>(&'a self, mesh: &DiskMesh) -> &'a [f64] {
        &self.values[..mesh.n_interior()]
    }

    pub fn boundary<'a>(&'a self, mesh: &DiskMesh) -> &'a [f64] {
        &self.values[mesh.n_interior()..]
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max f − min f` over all nodes.
    pub fn osc(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add_constant(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v += c);
    }

    pub fn shifted(&self, c: f64) -> ScalarField {
        let mut out = self.clone();
        out.add_constant(c);
        out
    }

    /// Pointwise `self − other`; both must live on the same mesh.
    pub fn difference(&self, other: &ScalarField) -> Result<ScalarField> {
        if self.mesh_id != other.mesh_id {
            return Err(Error::MeshMismatch {
                expected: self.mesh_id,
                found: other.mesh_id,
            });
        }
        Ok(ScalarField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            mesh_id: self.mesh_id,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            values: self.values.iter().map(|&v| f(v)).collect(),
            mesh_id: self.mesh_id,
        }
    }
}
