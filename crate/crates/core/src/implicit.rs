//! Linearly implicit correction solves with frozen coefficients.
//!
//! For a state `u` the discrete operator `L_u v = g^{ij}(Du)(∂_i∂_j v − Γ^k_ij ∂_k v)`
//! is assembled with exactly the stencils used by [`crate::flow::rhs`], so
//! `L_u u = rhs(u)`. Rows of boundary nodes carry the discrete Neumann
//! relation. The matrix `shift·I − L_u` is factored with a sparse LU whose
//! symbolic analysis is shared by every factorization on the mesh.

use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};

use crate::error::{Error, Result};
use crate::geometry::flow_coeffs;
use crate::mesh::{DiskMesh, CENTER, D_R, D_RR, D_RT, D_T, D_TT};

static SEQUENTIAL: Once = Once::new();

pub(crate) struct ImplicitSolver {
    n: usize,
    symbolic: SymbolicLu<usize>,
    lu: Option<Lu<usize, f64>>,
    triplets: Vec<Triplet<usize, usize, f64>>,
}

impl ImplicitSolver {
    pub fn new(mesh: &DiskMesh) -> Result<Self> {
        // Reproducible factorizations regardless of the host's core count.
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
        let zeros = vec![0.0; mesh.n_nodes()];
        let mut triplets = Vec::new();
        assemble(mesh, &zeros, 1.0, &mut triplets);
        let n = mesh.n_nodes();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let symbolic = SymbolicLu::try_new(a.symbolic())
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(Self {
            n,
            symbolic,
            lu: None,
            triplets,
        })
    }

    /// Factors `shift·I − L_u` (interior rows) with Neumann rows at the boundary.
    pub fn factor(&mut self, mesh: &DiskMesh, u: &[f64], shift: f64) -> Result<()> {
        assemble(mesh, u, shift, &mut self.triplets);
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        let lu = Lu::try_new_with_symbolic(self.symbolic.clone(), a.as_ref())
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        self.lu = Some(lu);
        Ok(())
    }

    /// Solves in place; `rhs` is overwritten with the solution.
    pub fn solve(&self, rhs: &mut [f64]) -> Result<()> {
        let lu = self
            .lu
            .as_ref()
            .ok_or_else(|| Error::Factorization("solve before factor".into()))?;
        let mut b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        lu.solve_in_place(b.as_mut());
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = b[(i, 0)];
            if !r.is_finite() {
                return Err(Error::Factorization(format!(
                    "non-finite solution at row {i}"
                )));
            }
        }
        Ok(())
    }
}

/// Writes the triplets of `shift·I − L_u` in a fixed order (the sparsity
/// pattern does not depend on `u` or `shift`).
fn assemble(mesh: &DiskMesh, u: &[f64], shift: f64, out: &mut Vec<Triplet<usize, usize, f64>>) {
    out.clear();
    for (p, (s, g)) in mesh.stencils().iter().zip(mesh.geometry()).enumerate() {
        let d = s.apply(u);
        let coeff = flow_coeffs(&g.sigma_inv, [d[D_R], d[D_T]]);
        let gm = &g.gamma;
        // weight of each (i, j) second-derivative row, with the Γ correction
        let pairs = [
            (coeff.get(0, 0), D_RR, 0, 0),
            (2.0 * coeff.get(0, 1), D_RT, 0, 1),
            (coeff.get(1, 1), D_TT, 1, 1),
        ];
        for m in 0..9 {
            let mut c = 0.0;
            for &(a, row, i, j) in &pairs {
                c += a
                    * (s.w[row][m] - gm.get(0, i, j) * s.w[D_R][m] - gm.get(1, i, j) * s.w[D_T][m]);
            }
            let val = if m == CENTER { shift - c } else { -c };
            out.push(Triplet::new(p, s.nb[m], val));
        }
    }
    let w = mesh.boundary_dr();
    let n_t = mesh.n_theta() as isize;
    let t1 = 1.0 / (2.0 * mesh.dtheta());
    for j in 0..mesh.n_theta() {
        let p = mesh.boundary_idx(j);
        let nu = mesh.normals()[j];
        let ji = j as isize;
        out.push(Triplet::new(p, p, nu[0] * w[0]));
        out.push(Triplet::new(p, mesh.idx(mesh.n_r() - 1, ji), nu[0] * w[1]));
        out.push(Triplet::new(p, mesh.idx(mesh.n_r() - 2, ji), nu[0] * w[2]));
        out.push(Triplet::new(
            p,
            mesh.boundary_idx((ji + 1).rem_euclid(n_t) as usize),
            nu[1] * t1,
        ));
        out.push(Triplet::new(
            p,
            mesh.boundary_idx((ji - 1).rem_euclid(n_t) as usize),
            -nu[1] * t1,
        ));
    }
}
