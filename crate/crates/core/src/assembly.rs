//! Saddle-point systems for the mixed Poisson problem and the
//! pseudostress-velocity Stokes problem, and elementwise L² projections.
//!
//! Both problems share one layout. The flux unknown has `rows` rows (1 for
//! Poisson, 2 for Stokes), each discretized in the same `H(div)` space; the
//! primal unknown has `rows` discontinuous components. With
//! `A = <C sigma, tau>`, `B = (div sigma, v)` the discrete equations
//!
//! ```text
//! <C sigma, tau> - (div tau, u) = 0,   (div sigma, v) = (f, v)
//! ```
//!
//! are solved in the symmetric form `[A B^T; B 0] [sigma; -u] = [0; F]`, with
//! one extra Lagrange multiplier row for the Stokes trace-mean constraint.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::elements::{
    build_space, dg_basis, hdiv_physical, interpolate_hdiv, DofSpace, ElementMap, Family,
    FamilyDegree,
};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, quadrature};
use crate::sparse::{CsrMatrix, Triplets};
use crate::Point;

pub type Vec2 = [f64; 2];
pub type Mat2 = [[f64; 2]; 2];
pub type VectorField = Arc<dyn Fn(Point) -> Vec2 + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(Point) -> Mat2 + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    PoissonMixed,
    StokesPseudostress,
}

impl ProblemKind {
    pub fn rows(self) -> usize {
        match self {
            ProblemKind::PoissonMixed => 1,
            ProblemKind::StokesPseudostress => 2,
        }
    }
}

/// Exact flux and primal solution. For Poisson only row/component 0 is used.
#[derive(Clone)]
pub struct ExactSolution {
    pub sigma: MatrixField,
    pub u: VectorField,
}

/// Problem data. Scalar Poisson quantities live in component 0 of the
/// vector-valued evaluators.
#[derive(Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub source: VectorField,
    /// Row `c` is the gradient of source component `c`.
    pub source_gradient: Option<MatrixField>,
    pub exact: Option<ExactSolution>,
    /// Whether the source is elementwise `H^1` on the initial mesh.
    pub data_class: bool,
    /// Points where the exact solution is singular; error quadrature is
    /// refined on elements touching them.
    pub singular_points: Vec<Point>,
    /// Dirichlet data `u = g` on the boundary (Poisson only); zero when absent.
    pub boundary: Option<BoundaryData>,
}

/// Boundary values `g` and their gradient, used for tangential derivatives.
#[derive(Clone)]
pub struct BoundaryData {
    pub value: ScalarField,
    pub gradient: VectorField,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("kind", &self.kind)
            .field("has_gradient", &self.source_gradient.is_some())
            .field("has_exact", &self.exact.is_some())
            .field("data_class", &self.data_class)
            .field("singular_points", &self.singular_points)
            .field("has_boundary_data", &self.boundary.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn poisson(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kind: ProblemKind::PoissonMixed,
            source: Arc::new(move |p| [f(p), 0.0]),
            source_gradient: None,
            exact: None,
            data_class: true,
            singular_points: Vec::new(),
            boundary: None,
        }
    }

    pub fn stokes(f: impl Fn(Point) -> Vec2 + Send + Sync + 'static) -> Self {
        Self {
            kind: ProblemKind::StokesPseudostress,
            source: Arc::new(f),
            source_gradient: None,
            exact: None,
            data_class: true,
            singular_points: Vec::new(),
            boundary: None,
        }
    }

    pub fn with_poisson_exact(
        mut self,
        sigma: impl Fn(Point) -> Vec2 + Send + Sync + 'static,
        u: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(ExactSolution {
            sigma: Arc::new(move |p| [sigma(p), [0.0; 2]]),
            u: Arc::new(move |p| [u(p), 0.0]),
        });
        self
    }

    pub fn with_stokes_exact(
        mut self,
        sigma: impl Fn(Point) -> Mat2 + Send + Sync + 'static,
        u: impl Fn(Point) -> Vec2 + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(ExactSolution {
            sigma: Arc::new(sigma),
            u: Arc::new(u),
        });
        self
    }

    pub fn with_poisson_gradient(mut self, g: impl Fn(Point) -> Vec2 + Send + Sync + 'static) -> Self {
        self.source_gradient = Some(Arc::new(move |p| [g(p), [0.0; 2]]));
        self
    }

    pub fn with_data_class(mut self, data_class: bool) -> Self {
        self.data_class = data_class;
        self
    }

    pub fn with_dirichlet(
        mut self,
        g: impl Fn(Point) -> f64 + Send + Sync + 'static,
        grad_g: impl Fn(Point) -> Vec2 + Send + Sync + 'static,
    ) -> Self {
        self.boundary = Some(BoundaryData {
            value: Arc::new(g),
            gradient: Arc::new(grad_g),
        });
        self
    }

    pub fn with_singular_point(mut self, p: Point) -> Self {
        self.singular_points.push(p);
        self
    }

    pub fn rows(&self) -> usize {
        self.kind.rows()
    }

    pub fn f(&self, p: Point) -> Vec2 {
        (self.source)(p)
    }

    /// The same problem with the source replaced by `source`.
    pub fn with_source(&self, source: VectorField) -> Self {
        Self {
            source,
            source_gradient: None,
            ..self.clone()
        }
    }
}

/// Gram matrices of the natural norms, block-diagonal over rows/components.
#[derive(Clone, Debug)]
pub struct GramMatrices {
    /// `<C sigma, tau>` (equal to the mass matrix for Poisson).
    pub a: CsrMatrix,
    /// Plain `L^2` mass matrix of the flux.
    pub sigma_mass: CsrMatrix,
    /// `(div sigma, div tau)`.
    pub div_div: CsrMatrix,
    pub u_mass: CsrMatrix,
}

#[derive(Clone, Debug)]
pub struct SaddleSystem {
    pub kind: ProblemKind,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Total flux dofs (`rows * sigma_space.dof_count()`), stored first.
    pub n_sigma: usize,
    /// Total primal dofs, stored after the flux.
    pub n_u: usize,
    /// Index of the trace-mean multiplier (Stokes only), stored last.
    pub constraint: Option<usize>,
    pub sigma_space: DofSpace,
    pub u_space: DofSpace,
    pub gram: GramMatrices,
    /// `int Tr(tau)` for every flux dof (Stokes only).
    pub trace_functional: Vec<f64>,
}

impl SaddleSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    pub fn rows(&self) -> usize {
        self.kind.rows()
    }

    /// Block-diagonal natural-norm Gram matrix `diag(A + D, M_u, 1)`.
    pub fn natural_gram(&self) -> CsrMatrix {
        let n = self.dim();
        let mut t = Triplets::new(n, n);
        t.add_block(0, 0, &self.gram.a, false);
        t.add_block(0, 0, &self.gram.div_div, false);
        t.add_block(self.n_sigma, self.n_sigma, &self.gram.u_mass, false);
        if let Some(c) = self.constraint {
            t.push(c, c, 1.0);
        }
        t.to_csr()
    }
}

/// Coefficients of a discrete solution. `u` holds the primal unknown with
/// its physical sign.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedSolution {
    pub sigma: Vec<f64>,
    pub u: Vec<f64>,
    pub relative_residual: f64,
    pub multiplier: f64,
    pub iterations: usize,
}

impl MixedSolution {
    /// Splits a solution vector of `system` into its blocks.
    pub fn from_vector(system: &SaddleSystem, x: &[f64], relative_residual: f64, iterations: usize) -> Self {
        let ns = system.n_sigma;
        Self {
            sigma: x[..ns].to_vec(),
            u: x[ns..ns + system.n_u].iter().map(|v| -v).collect(),
            relative_residual,
            multiplier: system.constraint.map_or(0.0, |c| x[c]),
            iterations,
        }
    }

    /// The inverse of [`MixedSolution::from_vector`].
    pub fn to_vector(&self, system: &SaddleSystem) -> Vec<f64> {
        let mut x = self.sigma.clone();
        x.extend(self.u.iter().map(|v| -v));
        if system.constraint.is_some() {
            x.push(self.multiplier);
        }
        x
    }

    pub fn zeros(system: &SaddleSystem) -> Self {
        Self {
            sigma: vec![0.0; system.n_sigma],
            u: vec![0.0; system.n_u],
            relative_residual: 0.0,
            multiplier: 0.0,
            iterations: 0,
        }
    }
}

/// `sigma - (1/2) Tr(sigma) I`.
pub fn deviatoric(m: Mat2) -> Mat2 {
    let h = 0.5 * (m[0][0] + m[1][1]);
    [[m[0][0] - h, m[0][1]], [m[1][0], m[1][1] - h]]
}

/// Quadrature order for data terms paired with degree-`r` polynomials.
pub fn data_order(r: usize) -> usize {
    if r == 0 {
        5
    } else {
        7
    }
}

pub(crate) fn dg_dim(r: usize) -> usize {
    (r + 1) * (r + 2) / 2
}

/// Global index of component `c`, local basis function `k` of the primal
/// space on triangle `t` (relative to the start of the primal block).
pub(crate) fn u_dof(space: &DofSpace, t: usize, c: usize, k: usize) -> usize {
    let n = dg_dim(space.family_degree().degree);
    match space.family_degree().family {
        Family::DgVector => space.element_dofs(t)[c * n + k],
        _ => {
            debug_assert_eq!(c, 0);
            space.element_dofs(t)[k]
        }
    }
}

/// Validates the pairing of the two spaces with the problem kind.
pub fn check_spaces(kind: ProblemKind, sigma: &DofSpace, u: &DofSpace) -> Result<()> {
    let (fs, fu) = (sigma.family_degree(), u.family_degree());
    let expected_u = match kind {
        ProblemKind::PoissonMixed => Family::DgScalar,
        ProblemKind::StokesPseudostress => Family::DgVector,
    };
    if !fs.is_hdiv() || fu.family != expected_u || fs.paired_dg_degree() != fu.degree {
        return Err(Error::IncompatibleSpaces(format!(
            "{fs:?} with {fu:?} for {kind:?}"
        )));
    }
    if sigma.num_triangles() != u.num_triangles() {
        return Err(Error::Mismatch("spaces built on different meshes".into()));
    }
    Ok(())
}

/// Builds the standard pair of spaces for a problem.
pub fn build_spaces(mesh: &Mesh, kind: ProblemKind, fd: FamilyDegree) -> Result<(DofSpace, DofSpace)> {
    let sigma = build_space(mesh, fd)?;
    let r = fd.paired_dg_degree();
    let u = match kind {
        ProblemKind::PoissonMixed => build_space(mesh, FamilyDegree::dg(r))?,
        ProblemKind::StokesPseudostress => build_space(mesh, FamilyDegree::dg_vector(r))?,
    };
    Ok((sigma, u))
}

struct LocalBlocks {
    /// `p[r][s][i * n + j] = int phi_i[r] phi_j[s]`.
    p: [[Vec<f64>; 2]; 2],
    dd: Vec<f64>,
    /// `b[k * n + j] = int psi_k div phi_j`.
    b: Vec<f64>,
    mu: Vec<f64>,
    trace: [Vec<f64>; 2],
    load: [Vec<f64>; 2],
}

fn local_blocks(
    mesh: &Mesh,
    t: usize,
    sigma: &DofSpace,
    r: usize,
    spec: &ProblemSpec,
    matrix_order: usize,
) -> Result<LocalBlocks> {
    let n = sigma.local_dim();
    let nu = dg_dim(r);
    let map = ElementMap::of(mesh, t);
    let area = map.area();
    let mut lb = LocalBlocks {
        p: [[vec![0.0; n * n], vec![0.0; n * n]], [vec![0.0; n * n], vec![0.0; n * n]]],
        dd: vec![0.0; n * n],
        b: vec![0.0; nu * n],
        mu: vec![0.0; nu * nu],
        trace: [vec![0.0; n], vec![0.0; n]],
        load: [vec![0.0; nu], vec![0.0; nu]],
    };
    for (l, w) in quadrature(matrix_order)?.iter() {
        let wa = w * area;
        let phi = hdiv_physical(sigma, &map, t, l);
        let (psi, _) = dg_basis(r, l);
        for i in 0..n {
            for a in 0..2 {
                lb.trace[a][i] += wa * phi[i].value[a];
            }
            for j in 0..n {
                for a in 0..2 {
                    for c in 0..2 {
                        lb.p[a][c][i * n + j] += wa * phi[i].value[a] * phi[j].value[c];
                    }
                }
                lb.dd[i * n + j] += wa * phi[i].div * phi[j].div;
            }
        }
        for k in 0..nu {
            for j in 0..n {
                lb.b[k * n + j] += wa * psi[k] * phi[j].div;
            }
            for m in 0..nu {
                lb.mu[k * nu + m] += wa * psi[k] * psi[m];
            }
        }
    }
    for (l, w) in quadrature(data_order(r))?.iter() {
        let f = spec.f(map.to_physical(l));
        let (psi, _) = dg_basis(r, l);
        for k in 0..nu {
            for c in 0..spec.rows() {
                lb.load[c][k] += w * area * f[c] * psi[k];
            }
        }
    }
    Ok(lb)
}

/// Adds `-<g, tau . n>` over the boundary to the flux rows of `rhs`.
fn boundary_load(mesh: &Mesh, space: &DofSpace, bd: &BoundaryData, rhs: &mut [f64]) {
    let (gx, gw) = gauss_legendre(6);
    for edge in mesh.edges().iter().filter(|e| e.is_boundary()) {
        let side = edge.sides().next().expect("boundary edge has one side");
        let t = side.triangle;
        let [a, b] = edge.vertices.map(|v| mesh.vertex(v));
        let tri = mesh.triangle(t);
        let far = mesh.vertex(tri.into_iter().find(|v| !edge.vertices.contains(v)).expect("third vertex"));
        let dv = [b[0] - a[0], b[1] - a[1]];
        let mut nrm = [dv[1], -dv[0]];
        if nrm[0] * (far[0] - a[0]) + nrm[1] * (far[1] - a[1]) > 0.0 {
            nrm = [-nrm[0], -nrm[1]];
        }
        // nrm has length |e|, absorbing the line element
        let map = ElementMap::of(mesh, t);
        let dofs = space.element_dofs(t);
        for (&q, &w) in gx.iter().zip(&gw) {
            let p = [a[0] + q * dv[0], a[1] + q * dv[1]];
            let g = (bd.value)(p);
            let phi = hdiv_physical(space, &map, t, &map.to_barycentric(p));
            for (k, v) in phi.iter().enumerate() {
                rhs[dofs[k]] -= w * g * (v.value[0] * nrm[0] + v.value[1] * nrm[1]);
            }
        }
    }
}

/// Assembles the saddle-point system of `spec` on `mesh`.
pub fn assemble(mesh: &Mesh, sigma_space: &DofSpace, u_space: &DofSpace, spec: &ProblemSpec) -> Result<SaddleSystem> {
    check_spaces(spec.kind, sigma_space, u_space)?;
    sigma_space.check_mesh(mesh)?;
    let rows = spec.rows();
    let stokes = spec.kind == ProblemKind::StokesPseudostress;
    let fd = sigma_space.family_degree();
    let r = fd.paired_dg_degree();
    let matrix_order = (2 * fd.polynomial_degree()).max(2);
    let ns1 = sigma_space.dof_count();
    let n_sigma = rows * ns1;
    let n_u = u_space.dof_count();
    let dim = n_sigma + n_u + usize::from(stokes);
    let n = sigma_space.local_dim();
    let nu = dg_dim(r);
    if stokes && spec.boundary.is_some() {
        return Err(Error::InvalidConfig("boundary data is supported for Poisson only".into()));
    }

    let locals: Vec<LocalBlocks> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| local_blocks(mesh, t, sigma_space, r, spec, matrix_order))
        .collect::<Result<_>>()?;

    let nt = mesh.num_triangles();
    let mut k = Triplets::with_capacity(dim, dim, nt * (rows * rows * n * n + 2 * rows * nu * n));
    let mut a = Triplets::with_capacity(n_sigma, n_sigma, nt * rows * rows * n * n);
    let mut mass = Triplets::with_capacity(n_sigma, n_sigma, nt * rows * n * n);
    let mut dd = Triplets::with_capacity(n_sigma, n_sigma, nt * rows * n * n);
    let mut mu = Triplets::with_capacity(n_u, n_u, nt * rows * nu * nu);
    let mut rhs = vec![0.0; dim];
    let mut trace_functional = vec![0.0; if stokes { n_sigma } else { 0 }];
    for (t, lb) in locals.iter().enumerate() {
        let dofs = sigma_space.element_dofs(t);
        for ra in 0..rows {
            for i in 0..n {
                let gi = ra * ns1 + dofs[i];
                for j in 0..n {
                    let gj = ra * ns1 + dofs[j];
                    let m = lb.p[0][0][i * n + j] + lb.p[1][1][i * n + j];
                    mass.push(gi, gj, m);
                    dd.push(gi, gj, lb.dd[i * n + j]);
                    if !stokes {
                        a.push(gi, gj, m);
                    }
                }
            }
        }
        if stokes {
            for ra in 0..2 {
                for sa in 0..2 {
                    for i in 0..n {
                        for j in 0..n {
                            let mut v = -0.5 * lb.p[ra][sa][i * n + j];
                            if ra == sa {
                                v += lb.p[0][0][i * n + j] + lb.p[1][1][i * n + j];
                            }
                            a.push(ra * ns1 + dofs[i], sa * ns1 + dofs[j], v);
                        }
                    }
                }
                for i in 0..n {
                    trace_functional[ra * ns1 + dofs[i]] += lb.trace[ra][i];
                }
            }
        }
        for c in 0..rows {
            for kk in 0..nu {
                let gu = n_sigma + u_dof(u_space, t, c, kk);
                rhs[gu] += lb.load[c][kk];
                for j in 0..n {
                    let v = lb.b[kk * n + j];
                    let gs = c * ns1 + dofs[j];
                    k.push(gu, gs, v);
                    k.push(gs, gu, v);
                }
                for m in 0..nu {
                    mu.push(
                        gu - n_sigma,
                        u_dof(u_space, t, c, m),
                        lb.mu[kk * nu + m],
                    );
                }
            }
        }
    }
    if let Some(bd) = &spec.boundary {
        boundary_load(mesh, sigma_space, bd, &mut rhs);
    }
    let a = a.to_csr();
    k.add_block(0, 0, &a, false);
    let constraint = stokes.then_some(n_sigma + n_u);
    if let Some(c) = constraint {
        for (i, &v) in trace_functional.iter().enumerate() {
            if v != 0.0 {
                k.push(c, i, v);
                k.push(i, c, v);
            }
        }
    }
    Ok(SaddleSystem {
        kind: spec.kind,
        matrix: k.to_csr(),
        rhs,
        n_sigma,
        n_u,
        constraint,
        sigma_space: sigma_space.clone(),
        u_space: u_space.clone(),
        gram: GramMatrices {
            a,
            sigma_mass: mass.to_csr(),
            div_div: dd.to_csr(),
            u_mass: mu.to_csr(),
        },
        trace_functional,
    })
}

/// Elementwise `L^2` projection onto `P_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub degree: usize,
    /// `dim P_r` coefficients per element in the discontinuous basis
    /// (the constant, or the barycentric coordinates).
    pub coefficients: Vec<f64>,
    /// `||f - Q_T f||_T` per element.
    pub errors: Vec<f64>,
}

impl Projection {
    pub fn total_error(&self) -> f64 {
        self.errors.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    pub fn element(&self, t: usize) -> &[f64] {
        let n = dg_dim(self.degree);
        &self.coefficients[t * n..(t + 1) * n]
    }

    /// Value of the projection on triangle `t` at barycentric point `l`.
    pub fn eval(&self, t: usize, l: &[f64; 3]) -> f64 {
        let (psi, _) = dg_basis(self.degree, l);
        self.element(t).iter().zip(psi).map(|(c, p)| c * p).sum()
    }
}

/// Projection of `f` onto `P_r` on a single triangle, with `||f - Q f||^2`.
/// Both are computed with the rule of the given order.
pub fn project_triangle(points: [Point; 3], f: &dyn Fn(Point) -> f64, r: usize, order: usize) -> Result<([f64; 3], f64)> {
    let map = ElementMap::new(points);
    let area = map.area();
    let rule = quadrature(order)?;
    let vals: Vec<f64> = rule.iter().map(|(l, _)| f(map.to_physical(l))).collect();
    let mut coef = [0.0; 3];
    if r == 0 {
        coef[0] = rule.iter().zip(&vals).map(|((_, w), v)| w * v).sum();
    } else {
        let mut m = [0.0; 3];
        for ((l, w), v) in rule.iter().zip(&vals) {
            for i in 0..3 {
                m[i] += w * v * l[i];
            }
        }
        // inverse of the barycentric mass matrix (|T|/12)(I + J), scaled by 1/|T|
        let s = m[0] + m[1] + m[2];
        for i in 0..3 {
            coef[i] = 12.0 * (m[i] - 0.25 * s);
        }
    }
    let err2 = rule
        .iter()
        .zip(&vals)
        .map(|((l, w), v)| {
            let q = if r == 0 { coef[0] } else { coef[0] * l[0] + coef[1] * l[1] + coef[2] * l[2] };
            w * (v - q) * (v - q)
        })
        .sum::<f64>()
        * area;
    Ok((coef, err2))
}

/// Elementwise `L^2` projection of `f` onto `P_r` with the data quadrature order.
pub fn l2_project(mesh: &Mesh, f: &(dyn Fn(Point) -> f64 + Sync), r: usize) -> Result<Projection> {
    l2_project_with_order(mesh, f, r, data_order(r))
}

pub fn l2_project_with_order(mesh: &Mesh, f: &(dyn Fn(Point) -> f64 + Sync), r: usize, order: usize) -> Result<Projection> {
    if r > 1 {
        return Err(Error::UnsupportedElement(format!("projection degree {r}")));
    }
    let n = dg_dim(r);
    let per: Vec<([f64; 3], f64)> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| project_triangle(mesh.triangle_points(t), f, r, order))
        .collect::<Result<_>>()?;
    Ok(Projection {
        degree: r,
        coefficients: per.iter().flat_map(|(c, _)| c[..n].to_vec()).collect(),
        errors: per.iter().map(|(_, e)| e.max(0.0).sqrt()).collect(),
    })
}

/// Empirical constant `C` of the norm equivalence
/// `C^-1 ||tau||_V^2 <= <C tau, tau> + ||Div tau||^2 <= C ||tau||_V^2`
/// over random discrete fluxes satisfying the trace-mean constraint.
pub fn norm_equivalence_constant(mesh: &Mesh, system: &SaddleSystem, samples: usize, seed: u64) -> Result<f64> {
    let ns = system.n_sigma;
    let mut shift = vec![0.0; ns];
    if system.constraint.is_some() {
        // the identity field, used to remove the trace mean
        let ns1 = system.sigma_space.dof_count();
        for row in 0..system.rows() {
            let c = interpolate_hdiv(mesh, &system.sigma_space, |_| {
                let mut v = [0.0; 2];
                v[row] = 1.0;
                v
            })?;
            shift[row * ns1..(row + 1) * ns1].copy_from_slice(&c);
        }
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let shift_trace = dot(&system.trace_functional, &shift);
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut c: f64 = 1.0;
    for _ in 0..samples {
        let mut tau: Vec<f64> = (0..ns).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if system.constraint.is_some() {
            let s = dot(&system.trace_functional, &tau) / shift_trace;
            for (t, d) in tau.iter_mut().zip(&shift) {
                *t -= s * d;
            }
        }
        let div = system.gram.div_div.bilinear(&tau, &tau);
        let energy = system.gram.a.bilinear(&tau, &tau) + div;
        let v = system.gram.sigma_mass.bilinear(&tau, &tau) + div;
        let ratio = energy / v;
        c = c.max(ratio).max(1.0 / ratio);
    }
    Ok(c)
}
