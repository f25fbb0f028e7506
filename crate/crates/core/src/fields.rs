//! Pointwise evaluation of discrete solutions.

use crate::assembly::{dg_dim, u_dof, Mat2, MixedSolution, Vec2};
use crate::elements::{dg_basis, hdiv_physical, DofSpace, ElementMap};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Flux value on one element: `value[r]` is row `r`, `div[r]` its
/// divergence, `grad[r][c][d] = d sigma_rc / d x_d`.
#[derive(Clone, Copy, Debug, Default)]
pub struct FluxValue {
    pub value: Mat2,
    pub div: Vec2,
    pub grad: [Mat2; 2],
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PrimalValue {
    pub value: Vec2,
    /// `grad[c][d] = d u_c / d x_d`, elementwise.
    pub grad: Mat2,
}

/// A discrete solution together with the spaces it lives in.
pub struct DiscreteSolution<'a> {
    pub mesh: &'a Mesh,
    pub sigma_space: &'a DofSpace,
    pub u_space: &'a DofSpace,
    pub sol: &'a MixedSolution,
    pub rows: usize,
}

impl<'a> DiscreteSolution<'a> {
    pub fn new(
        mesh: &'a Mesh,
        sigma_space: &'a DofSpace,
        u_space: &'a DofSpace,
        sol: &'a MixedSolution,
        rows: usize,
    ) -> Result<Self> {
        sigma_space.check_mesh(mesh)?;
        u_space.check_mesh(mesh)?;
        if sol.sigma.len() != rows * sigma_space.dof_count() || sol.u.len() != u_space.dof_count() {
            return Err(Error::Mismatch(format!(
                "solution of length {}+{} for spaces of size {}x{}+{}",
                sol.sigma.len(),
                sol.u.len(),
                rows,
                sigma_space.dof_count(),
                u_space.dof_count()
            )));
        }
        Ok(Self {
            mesh,
            sigma_space,
            u_space,
            sol,
            rows,
        })
    }

    pub fn flux(&self, t: usize, map: &ElementMap, l: &[f64; 3]) -> FluxValue {
        let phi = hdiv_physical(self.sigma_space, map, t, l);
        let dofs = self.sigma_space.element_dofs(t);
        let ns = self.sigma_space.dof_count();
        let mut out = FluxValue::default();
        for r in 0..self.rows {
            for (k, p) in phi.iter().enumerate() {
                let c = self.sol.sigma[r * ns + dofs[k]];
                for a in 0..2 {
                    out.value[r][a] += c * p.value[a];
                    for d in 0..2 {
                        out.grad[r][a][d] += c * p.grad[a][d];
                    }
                }
                out.div[r] += c * p.div;
            }
        }
        out
    }

    pub fn primal(&self, t: usize, map: &ElementMap, l: &[f64; 3]) -> PrimalValue {
        let r = self.u_space.family_degree().degree;
        let (psi, gref) = dg_basis(r, l);
        let mut out = PrimalValue::default();
        for c in 0..self.rows {
            for k in 0..dg_dim(r) {
                let coef = self.sol.u[u_dof(self.u_space, t, c, k)];
                out.value[c] += coef * psi[k];
                let g = map.grad(gref[k]);
                if r > 0 {
                    out.grad[c][0] += coef * g[0];
                    out.grad[c][1] += coef * g[1];
                }
            }
        }
        out
    }
}
