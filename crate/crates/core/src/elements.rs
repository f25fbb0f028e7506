//! Reference elements for `H(div)` (Raviart-Thomas, BDM) and discontinuous
//! polynomial spaces on triangles, and global degree-of-freedom numbering.
//!
//! `H(div)` shape functions are defined on the reference triangle
//! `(0,0), (1,0), (0,1)` as the dual basis of:
//!
//! * normal-flux moments on each edge against Legendre polynomials, with the
//!   edge parametrized counterclockwise and the outward unit normal;
//! * interior moments (RT_1: constant vectors, BDM_2: the lowest-order
//!   Nédélec fields).
//!
//! Physical shape functions use the contravariant Piola map
//! `v = J v_ref / det J`, `div v = div_ref v_ref / det J`, which preserves
//! normal-flux moments. A global edge dof uses the orientation from the lower
//! to the higher vertex index; the local-to-global sign of moment `k` on an
//! edge traversed against that orientation is `(-1)^(k+1)`.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{gauss_legendre, quadrature};
use crate::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Rt,
    Bdm,
    DgScalar,
    DgVector,
}

/// A finite element family with its polynomial degree.
///
/// `Rt` with degree `r` is RT_r; `Bdm` with degree `r + 1` is BDM_{r+1}; both
/// pair with discontinuous polynomials of degree `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FamilyDegree {
    pub family: Family,
    pub degree: usize,
}

impl FamilyDegree {
    pub fn new(family: Family, degree: usize) -> Result<Self> {
        let fd = Self { family, degree };
        fd.validate()?;
        Ok(fd)
    }

    pub fn rt(r: usize) -> Self {
        Self { family: Family::Rt, degree: r }
    }

    pub fn bdm(k: usize) -> Self {
        Self { family: Family::Bdm, degree: k }
    }

    pub fn dg(r: usize) -> Self {
        Self { family: Family::DgScalar, degree: r }
    }

    pub fn dg_vector(r: usize) -> Self {
        Self { family: Family::DgVector, degree: r }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.family {
            Family::Rt => self.degree <= 1,
            Family::Bdm => (1..=2).contains(&self.degree),
            Family::DgScalar | Family::DgVector => self.degree <= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::UnsupportedElement(format!(
                "{:?} of degree {}",
                self.family, self.degree
            )))
        }
    }

    pub fn is_hdiv(&self) -> bool {
        matches!(self.family, Family::Rt | Family::Bdm)
    }

    /// Degree `r` of the discontinuous space paired with an `H(div)` family,
    /// i.e. the degree of the divergence.
    pub fn paired_dg_degree(&self) -> usize {
        match self.family {
            Family::Bdm => self.degree - 1,
            _ => self.degree,
        }
    }

    /// Highest polynomial degree of any component.
    pub fn polynomial_degree(&self) -> usize {
        match self.family {
            Family::Rt => self.degree + 1,
            _ => self.degree,
        }
    }

    pub fn local_dim(&self) -> usize {
        match self.family {
            Family::Rt | Family::Bdm => {
                let el = hdiv_element(*self);
                3 * el.per_edge + el.interior
            }
            Family::DgScalar => dg_dim(self.degree),
            Family::DgVector => 2 * dg_dim(self.degree),
        }
    }
}

fn dg_dim(r: usize) -> usize {
    (r + 1) * (r + 2) / 2
}

/// Coefficients in the monomials `[1, x, y, x^2, xy, y^2]` of the two components.
type VecPoly = [[f64; 6]; 2];

fn monomials(x: f64, y: f64) -> [f64; 6] {
    [1.0, x, y, x * x, x * y, y * y]
}

fn monomials_dx(x: f64, y: f64) -> [f64; 6] {
    [0.0, 1.0, 0.0, 2.0 * x, y, 0.0]
}

fn monomials_dy(x: f64, y: f64) -> [f64; 6] {
    [0.0, 0.0, 1.0, 0.0, x, 2.0 * y]
}

fn dot6(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Reference `H(div)` element: shape functions ordered edge by edge (moments
/// `0..per_edge` on local edge 0, then edge 1, edge 2), then interior.
#[derive(Debug)]
pub struct HdivElement {
    pub fd: FamilyDegree,
    pub per_edge: usize,
    pub interior: usize,
    basis: Vec<VecPoly>,
}

/// Shape function data at one reference point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HdivRefValue {
    pub value: [f64; 2],
    pub div: f64,
    /// `grad[i][j] = d v_i / d x_j`.
    pub grad: [[f64; 2]; 2],
}

impl HdivElement {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn eval(&self, x: f64, y: f64) -> Vec<HdivRefValue> {
        let (m, mx, my) = (monomials(x, y), monomials_dx(x, y), monomials_dy(x, y));
        self.basis
            .iter()
            .map(|p| {
                let gx = [dot6(&p[0], &mx), dot6(&p[1], &mx)];
                let gy = [dot6(&p[0], &my), dot6(&p[1], &my)];
                HdivRefValue {
                    value: [dot6(&p[0], &m), dot6(&p[1], &m)],
                    div: gx[0] + gy[1],
                    grad: [[gx[0], gy[0]], [gx[1], gy[1]]],
                }
            })
            .collect()
    }
}

const REF_VERTICES: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

fn legendre01(k: usize, t: f64) -> f64 {
    let s = 2.0 * t - 1.0;
    match k {
        0 => 1.0,
        1 => s,
        2 => 0.5 * (3.0 * s * s - 1.0),
        _ => unreachable!("edge moments above degree 2 are not used"),
    }
}

fn spanning_set(fd: FamilyDegree) -> Vec<VecPoly> {
    let e = |c: usize, k: usize| {
        let mut p = [[0.0; 6]; 2];
        p[c][k] = 1.0;
        p
    };
    match (fd.family, fd.degree) {
        (Family::Rt, 0) => {
            let mut xy = [[0.0; 6]; 2];
            xy[0][1] = 1.0;
            xy[1][2] = 1.0;
            vec![e(0, 0), e(1, 0), xy]
        }
        (Family::Bdm, 1) => vec![e(0, 0), e(0, 1), e(0, 2), e(1, 0), e(1, 1), e(1, 2)],
        (Family::Rt, 1) => {
            let mut set = spanning_set(FamilyDegree::bdm(1));
            // x * (x, y) and y * (x, y)
            let mut a = [[0.0; 6]; 2];
            a[0][3] = 1.0;
            a[1][4] = 1.0;
            let mut b = [[0.0; 6]; 2];
            b[0][4] = 1.0;
            b[1][5] = 1.0;
            set.push(a);
            set.push(b);
            set
        }
        (Family::Bdm, 2) => (0..2).flat_map(|c| (0..6).map(move |k| e(c, k))).collect(),
        _ => unreachable!(),
    }
}

fn build_hdiv(fd: FamilyDegree) -> HdivElement {
    let (per_edge, interior) = match (fd.family, fd.degree) {
        (Family::Rt, 0) => (1, 0),
        (Family::Bdm, 1) => (2, 0),
        (Family::Rt, 1) => (2, 2),
        (Family::Bdm, 2) => (3, 3),
        _ => unreachable!(),
    };
    let span = spanning_set(fd);
    let n = span.len();
    assert_eq!(n, 3 * per_edge + interior);
    let (gx, gw) = gauss_legendre(5);
    let rule = quadrature(6).expect("order 6 exists");
    let eval = |p: &VecPoly, x: f64, y: f64| {
        let m = monomials(x, y);
        [dot6(&p[0], &m), dot6(&p[1], &m)]
    };
    let mut dual = DMatrix::<f64>::zeros(n, n);
    for (j, p) in span.iter().enumerate() {
        let mut row = 0;
        for i in 0..3 {
            let a = REF_VERTICES[(i + 1) % 3];
            let b = REF_VERTICES[(i + 2) % 3];
            let d = [b[0] - a[0], b[1] - a[1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            let normal = [d[1] / len, -d[0] / len];
            for k in 0..per_edge {
                let mut s = 0.0;
                for (&t, &w) in gx.iter().zip(&gw) {
                    let v = eval(p, a[0] + t * d[0], a[1] + t * d[1]);
                    s += w * (v[0] * normal[0] + v[1] * normal[1]) * legendre01(k, t) * len;
                }
                dual[(row, j)] = s;
                row += 1;
            }
        }
        let weights: &[fn(f64, f64) -> [f64; 2]] = match interior {
            0 => &[],
            2 => &[|_, _| [1.0, 0.0], |_, _| [0.0, 1.0]],
            _ => &[|_, _| [1.0, 0.0], |_, _| [0.0, 1.0], |x, y| [-y, x]],
        };
        for w in weights {
            let s: f64 = rule
                .iter()
                .map(|(l, q)| {
                    let v = eval(p, l[1], l[2]);
                    let w = w(l[1], l[2]);
                    0.5 * q * (v[0] * w[0] + v[1] * w[1])
                })
                .sum();
            dual[(row, j)] = s;
            row += 1;
        }
    }
    let coef = dual
        .try_inverse()
        .expect("degrees of freedom are unisolvent");
    let basis = (0..n)
        .map(|j| {
            let mut q = [[0.0; 6]; 2];
            for (k, p) in span.iter().enumerate() {
                for c in 0..2 {
                    for m in 0..6 {
                        q[c][m] += coef[(k, j)] * p[c][m];
                    }
                }
            }
            q
        })
        .collect();
    HdivElement {
        fd,
        per_edge,
        interior,
        basis,
    }
}

/// The reference element of an `H(div)` family. Panics for non-`H(div)` input.
pub fn hdiv_element(fd: FamilyDegree) -> &'static HdivElement {
    static CELLS: [OnceLock<HdivElement>; 4] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    let slot = match (fd.family, fd.degree) {
        (Family::Rt, 0) => 0,
        (Family::Bdm, 1) => 1,
        (Family::Rt, 1) => 2,
        (Family::Bdm, 2) => 3,
        _ => panic!("{fd:?} is not a supported H(div) element"),
    };
    CELLS[slot].get_or_init(|| build_hdiv(fd))
}

/// Scalar discontinuous basis: `1` for degree 0, barycentric coordinates for
/// degree 1. Returns values and reference gradients.
pub fn dg_basis(r: usize, bary: &[f64; 3]) -> ([f64; 3], [[f64; 2]; 3]) {
    match r {
        0 => ([1.0, 0.0, 0.0], [[0.0; 2]; 3]),
        _ => (*bary, [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]),
    }
}

/// A shape function value on the reference triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeValue {
    Vector { value: [f64; 2], divergence: f64 },
    Scalar { value: f64 },
}

/// Values (and divergences) of all reference shape functions at a point
/// given in barycentric coordinates.
pub fn eval_basis(fd: FamilyDegree, bary: [f64; 3]) -> Result<Vec<ShapeValue>> {
    fd.validate()?;
    let tol = 1e-12;
    if bary.iter().any(|&l| l < -tol) || (bary.iter().sum::<f64>() - 1.0).abs() > tol {
        return Err(Error::OutsideReference(bary[0], bary[1], bary[2]));
    }
    Ok(match fd.family {
        Family::Rt | Family::Bdm => hdiv_element(fd)
            .eval(bary[1], bary[2])
            .into_iter()
            .map(|v| ShapeValue::Vector {
                value: v.value,
                divergence: v.div,
            })
            .collect(),
        Family::DgScalar => {
            let (v, _) = dg_basis(fd.degree, &bary);
            v[..dg_dim(fd.degree)]
                .iter()
                .map(|&value| ShapeValue::Scalar { value })
                .collect()
        }
        Family::DgVector => {
            let (v, _) = dg_basis(fd.degree, &bary);
            let n = dg_dim(fd.degree);
            (0..2)
                .flat_map(|c| {
                    v[..n].iter().map(move |&s| {
                        let mut value = [0.0; 2];
                        value[c] = s;
                        ShapeValue::Vector {
                            value,
                            divergence: 0.0,
                        }
                    })
                })
                .collect()
        }
    })
}

/// Affine map from the reference triangle onto a mesh triangle.
#[derive(Clone, Copy, Debug)]
pub struct ElementMap {
    pub origin: Point,
    /// Columns are `p1 - p0` and `p2 - p0`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    pub inv: [[f64; 2]; 2],
}

impl ElementMap {
    pub fn new(p: [Point; 3]) -> Self {
        let jac = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        Self {
            origin: p[0],
            jac,
            det,
            inv,
        }
    }

    pub fn of(mesh: &Mesh, t: usize) -> Self {
        Self::new(mesh.triangle_points(t))
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn to_physical(&self, bary: &[f64; 3]) -> Point {
        let (x, y) = (bary[1], bary[2]);
        [
            self.origin[0] + self.jac[0][0] * x + self.jac[0][1] * y,
            self.origin[1] + self.jac[1][0] * x + self.jac[1][1] * y,
        ]
    }

    pub fn to_barycentric(&self, p: Point) -> [f64; 3] {
        let d = [p[0] - self.origin[0], p[1] - self.origin[1]];
        let x = self.inv[0][0] * d[0] + self.inv[0][1] * d[1];
        let y = self.inv[1][0] * d[0] + self.inv[1][1] * d[1];
        [1.0 - x - y, x, y]
    }

    /// Contravariant Piola transform of a reference value.
    pub fn piola(&self, v: &HdivRefValue) -> HdivRefValue {
        let j = &self.jac;
        let s = 1.0 / self.det;
        let value = [
            s * (j[0][0] * v.value[0] + j[0][1] * v.value[1]),
            s * (j[1][0] * v.value[0] + j[1][1] * v.value[1]),
        ];
        // (1/det) J G J^{-1}
        let mut jg = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                jg[a][b] = j[a][0] * v.grad[0][b] + j[a][1] * v.grad[1][b];
            }
        }
        let mut grad = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                grad[a][b] = s * (jg[a][0] * self.inv[0][b] + jg[a][1] * self.inv[1][b]);
            }
        }
        HdivRefValue {
            value,
            div: s * v.div,
            grad,
        }
    }

    /// Physical gradient from a reference gradient of a scalar function.
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }
}

/// Global degree-of-freedom numbering of a finite element space on a mesh.
#[derive(Clone, Debug)]
pub struct DofSpace {
    fd: FamilyDegree,
    dof_count: usize,
    local_dim: usize,
    num_triangles: usize,
    num_edges: usize,
    per_edge: usize,
    interior: usize,
    dofs: Vec<usize>,
    signs: Vec<f64>,
}

impl DofSpace {
    pub fn family_degree(&self) -> FamilyDegree {
        self.fd
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn num_triangles(&self) -> usize {
        self.num_triangles
    }

    /// Global dofs of triangle `t`, in reference shape function order.
    pub fn element_dofs(&self, t: usize) -> &[usize] {
        &self.dofs[t * self.local_dim..(t + 1) * self.local_dim]
    }

    /// Orientation signs (`+1` / `-1`) matching [`DofSpace::element_dofs`].
    pub fn element_signs(&self, t: usize) -> &[f64] {
        &self.signs[t * self.local_dim..(t + 1) * self.local_dim]
    }

    /// Global dof of moment `k` on edge `e` (`H(div)` spaces).
    pub fn edge_dof(&self, e: usize, k: usize) -> usize {
        debug_assert!(k < self.per_edge);
        e * self.per_edge + k
    }

    pub fn per_edge(&self) -> usize {
        self.per_edge
    }

    pub fn interior_dofs(&self, t: usize) -> std::ops::Range<usize> {
        let start = self.num_edges * self.per_edge + t * self.interior;
        start..start + self.interior
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if mesh.num_triangles() != self.num_triangles
            || (self.fd.is_hdiv() && mesh.num_edges() != self.num_edges)
        {
            return Err(Error::Mismatch(format!(
                "{:?} space built for {} triangles, mesh has {}",
                self.fd,
                self.num_triangles,
                mesh.num_triangles()
            )));
        }
        Ok(())
    }
}

/// Builds the global numbering. Edge dofs come first (edge by edge), then
/// interior dofs triangle by triangle; discontinuous spaces are numbered
/// element by element.
pub fn build_space(mesh: &Mesh, fd: FamilyDegree) -> Result<DofSpace> {
    fd.validate()?;
    let nt = mesh.num_triangles();
    let ne = mesh.num_edges();
    let local_dim = fd.local_dim();
    let mut dofs = Vec::with_capacity(nt * local_dim);
    let mut signs = Vec::with_capacity(nt * local_dim);
    let (per_edge, interior, dof_count) = if fd.is_hdiv() {
        let el = hdiv_element(fd);
        for t in 0..nt {
            let edges = mesh.triangle_edges(t);
            for (i, &e) in edges.iter().enumerate() {
                let [a, b] = mesh.local_edge_vertices(t, i);
                let s = if a < b { 1.0 } else { -1.0 };
                for k in 0..el.per_edge {
                    dofs.push(e * el.per_edge + k);
                    signs.push(if k % 2 == 0 { s } else { 1.0 });
                }
            }
            for j in 0..el.interior {
                dofs.push(ne * el.per_edge + t * el.interior + j);
                signs.push(1.0);
            }
        }
        (el.per_edge, el.interior, ne * el.per_edge + nt * el.interior)
    } else {
        dofs.extend(0..nt * local_dim);
        signs.resize(nt * local_dim, 1.0);
        (0, 0, nt * local_dim)
    };
    Ok(DofSpace {
        fd,
        dof_count,
        local_dim,
        num_triangles: nt,
        num_edges: ne,
        per_edge,
        interior,
        dofs,
        signs,
    })
}

/// Physical values of all signed global shape functions of an `H(div)` space
/// on triangle `t` at the given reference points.
pub fn hdiv_physical(
    space: &DofSpace,
    map: &ElementMap,
    t: usize,
    bary: &[f64; 3],
) -> Vec<HdivRefValue> {
    let el = hdiv_element(space.fd);
    let signs = space.element_signs(t);
    el.eval(bary[1], bary[2])
        .iter()
        .zip(signs)
        .map(|(v, &s)| {
            let mut p = map.piola(v);
            p.value = [s * p.value[0], s * p.value[1]];
            p.div *= s;
            for row in &mut p.grad {
                row[0] *= s;
                row[1] *= s;
            }
            p
        })
        .collect()
}

/// Computes the `H(div)` dofs of a vector field: normal-flux moments on each
/// edge and interior moments of its pulled-back field.
pub fn interpolate_hdiv(
    mesh: &Mesh,
    space: &DofSpace,
    field: impl Fn(Point) -> [f64; 2],
) -> Result<Vec<f64>> {
    let fd = space.family_degree();
    if !fd.is_hdiv() {
        return Err(Error::IncompatibleSpaces(format!("{fd:?} is not H(div)")));
    }
    space.check_mesh(mesh)?;
    let el = hdiv_element(fd);
    let mut coef = vec![0.0; space.dof_count()];
    let (gx, gw) = gauss_legendre(6);
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [a, b] = edge.vertices.map(|v| mesh.vertex(v));
        let d = [b[0] - a[0], b[1] - a[1]];
        // unit normal of the global orientation, times the edge length
        let nl = [d[1], -d[0]];
        for k in 0..el.per_edge {
            let mut s = 0.0;
            for (&t, &w) in gx.iter().zip(&gw) {
                let v = field([a[0] + t * d[0], a[1] + t * d[1]]);
                s += w * (v[0] * nl[0] + v[1] * nl[1]) * legendre01(k, t);
            }
            coef[space.edge_dof(e, k)] = s;
        }
    }
    if el.interior > 0 {
        // interior dofs are moments of the Piola pull-back; the remaining
        // shape functions' contribution is subtracted through the dual matrix
        let rule = quadrature(8)?;
        let weights: Vec<fn(f64, f64) -> [f64; 2]> = match el.interior {
            2 => vec![|_, _| [1.0, 0.0], |_, _| [0.0, 1.0]],
            _ => vec![|_, _| [1.0, 0.0], |_, _| [0.0, 1.0], |x, y| [-y, x]],
        };
        for t in 0..mesh.num_triangles() {
            let map = ElementMap::of(mesh, t);
            for (j, w) in weights.iter().enumerate() {
                let s: f64 = rule
                    .iter()
                    .map(|(l, q)| {
                        let v = field(map.to_physical(l));
                        // v_ref = det J^{-1} v
                        let vr = [
                            map.det * (map.inv[0][0] * v[0] + map.inv[0][1] * v[1]),
                            map.det * (map.inv[1][0] * v[0] + map.inv[1][1] * v[1]),
                        ];
                        let wv = w(l[1], l[2]);
                        0.5 * q * (vr[0] * wv[0] + vr[1] * wv[1])
                    })
                    .sum();
                coef[space.interior_dofs(t).start + j] = s;
            }
        }
    }
    Ok(coef)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL_HDIV: [FamilyDegree; 4] = [
        FamilyDegree { family: Family::Rt, degree: 0 },
        FamilyDegree { family: Family::Bdm, degree: 1 },
        FamilyDegree { family: Family::Rt, degree: 1 },
        FamilyDegree { family: Family::Bdm, degree: 2 },
    ];

    #[test]
    fn dimension_formulas() {
        let m = Mesh::unit_square();
        assert_eq!(build_space(&m, FamilyDegree::rt(0)).unwrap().dof_count(), 5);
        assert_eq!(build_space(&m, FamilyDegree::dg(0)).unwrap().dof_count(), 2);
        assert_eq!(build_space(&m, FamilyDegree::bdm(1)).unwrap().dof_count(), 10);
        assert_eq!(build_space(&m, FamilyDegree::rt(1)).unwrap().dof_count(), 2 * 5 + 2 * 2);
        assert_eq!(build_space(&m, FamilyDegree::dg(1)).unwrap().dof_count(), 6);
        assert_eq!(build_space(&m, FamilyDegree::dg_vector(1)).unwrap().dof_count(), 12);
        assert!(build_space(&m, FamilyDegree::rt(2)).is_err());
        assert!(build_space(&m, FamilyDegree::bdm(0)).is_err());
    }

    #[test]
    fn every_dof_owned_once() {
        let m = Mesh::l_shape().uniform_refine();
        for fd in ALL_HDIV {
            let s = build_space(&m, fd).unwrap();
            let mut seen = vec![0usize; s.dof_count()];
            for t in 0..m.num_triangles() {
                for &d in s.element_dofs(t) {
                    seen[d] += 1;
                }
            }
            // edge dofs appear once per incident triangle, interior once
            for (e, edge) in m.edges().iter().enumerate() {
                for k in 0..s.per_edge() {
                    assert_eq!(seen[s.edge_dof(e, k)], if edge.is_boundary() { 1 } else { 2 });
                }
            }
            for t in 0..m.num_triangles() {
                for d in s.interior_dofs(t) {
                    assert_eq!(seen[d], 1);
                }
            }
        }
    }

    #[test]
    fn rt0_fluxes_are_dual() {
        // shape function i at midpoints of edge j has flux delta_ij
        let el = hdiv_element(FamilyDegree::rt(0));
        for j in 0..3 {
            let a = REF_VERTICES[(j + 1) % 3];
            let b = REF_VERTICES[(j + 2) % 3];
            let d = [b[0] - a[0], b[1] - a[1]];
            let n = [d[1], -d[0]]; // length-weighted outward normal
            let vals = el.eval(0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]));
            for (i, v) in vals.iter().enumerate() {
                let flux = v.value[0] * n[0] + v.value[1] * n[1];
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((flux - expect).abs() < 1e-14, "{i} {j} {flux}");
            }
        }
    }

    #[test]
    fn rt0_divergence_is_constant() {
        let el = hdiv_element(FamilyDegree::rt(0));
        let d0: Vec<f64> = el.eval(0.1, 0.2).iter().map(|v| v.div).collect();
        for (x, y) in [(0.0, 0.0), (0.5, 0.5), (0.3, 0.1)] {
            for (v, d) in el.eval(x, y).iter().zip(&d0) {
                assert!((v.div - d).abs() < 1e-13);
            }
        }
        // unit flux through the boundary of an area-1/2 triangle
        for d in d0 {
            assert!((d - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn rt0_reference_mass_matches_oracle() {
        // oracle: phi_i = x - V_i has unit outward flux through edge i;
        // entries integrated exactly by hand
        let oracle = [
            [1.0 / 6.0, 0.0, 0.0],
            [0.0, 1.0 / 3.0, -1.0 / 6.0],
            [0.0, -1.0 / 6.0, 1.0 / 3.0],
        ];
        let el = hdiv_element(FamilyDegree::rt(0));
        let rule = quadrature(10).unwrap();
        let mut m = [[0.0; 3]; 3];
        for (l, w) in rule.iter() {
            let v = el.eval(l[1], l[2]);
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += 0.5 * w * (v[i].value[0] * v[j].value[0] + v[i].value[1] * v[j].value[1]);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[i][j] - oracle[i][j]).abs() < 1e-14, "{i}{j}");
            }
        }
    }

    #[test]
    fn divergence_lies_in_paired_space() {
        // project div onto P_r on the reference element; remainder must vanish
        let rule = quadrature(8).unwrap();
        for fd in ALL_HDIV {
            let r = fd.paired_dg_degree();
            let n = dg_dim(r);
            let el = hdiv_element(fd);
            for i in 0..el.dim() {
                let mut mass = DMatrix::<f64>::zeros(n, n);
                let mut rhs = nalgebra::DVector::<f64>::zeros(n);
                for (l, w) in rule.iter() {
                    let (phi, _) = dg_basis(r, l);
                    let d = el.eval(l[1], l[2])[i].div;
                    for a in 0..n {
                        rhs[a] += w * phi[a] * d;
                        for b in 0..n {
                            mass[(a, b)] += w * phi[a] * phi[b];
                        }
                    }
                }
                let c = mass.lu().solve(&rhs).unwrap();
                for (l, _) in rule.iter() {
                    let (phi, _) = dg_basis(r, l);
                    let proj: f64 = (0..n).map(|a| c[a] * phi[a]).sum();
                    let d = el.eval(l[1], l[2])[i].div;
                    assert!((proj - d).abs() <= 1e-13, "{fd:?} {i}");
                }
            }
        }
    }

    #[test]
    fn normal_trace_continuity() {
        let m = Mesh::l_shape().uniform_refine().uniform_refine();
        let (gx, _) = gauss_legendre(4);
        for fd in ALL_HDIV {
            let s = build_space(&m, fd).unwrap();
            let coef: Vec<f64> = (0..s.dof_count()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
            for edge in m.edges().iter().filter(|e| !e.is_boundary()) {
                let [a, b] = edge.vertices.map(|v| m.vertex(v));
                let n = [b[1] - a[1], a[0] - b[0]];
                for &t in &gx {
                    let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let flux: Vec<f64> = edge
                        .sides()
                        .map(|side| {
                            let map = ElementMap::of(&m, side.triangle);
                            let vals = hdiv_physical(&s, &map, side.triangle, &map.to_barycentric(p));
                            let dofs = s.element_dofs(side.triangle);
                            let mut v = [0.0; 2];
                            for (k, val) in vals.iter().enumerate() {
                                v[0] += coef[dofs[k]] * val.value[0];
                                v[1] += coef[dofs[k]] * val.value[1];
                            }
                            v[0] * n[0] + v[1] * n[1]
                        })
                        .collect();
                    assert!((flux[0] - flux[1]).abs() <= 1e-12 * (1.0 + flux[0].abs()), "{fd:?}");
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_space_members() {
        let m = Mesh::unit_square().uniform_refine();
        for fd in ALL_HDIV {
            let s = build_space(&m, fd).unwrap();
            // fields contained in every family: constants and (x, y)
            let c = interpolate_hdiv(&m, &s, |p| [1.0 + 2.0 * p[0], -0.5 + 2.0 * p[1]]).unwrap();
            for t in 0..m.num_triangles() {
                let map = ElementMap::of(&m, t);
                let l = [0.2, 0.3, 0.5];
                let x = map.to_physical(&l);
                let vals = hdiv_physical(&s, &map, t, &l);
                let mut v = [0.0; 2];
                for (k, &d) in s.element_dofs(t).iter().enumerate() {
                    v[0] += c[d] * vals[k].value[0];
                    v[1] += c[d] * vals[k].value[1];
                }
                assert!((v[0] - (1.0 + 2.0 * x[0])).abs() < 1e-12, "{fd:?}");
                assert!((v[1] - (-0.5 + 2.0 * x[1])).abs() < 1e-12, "{fd:?}");
            }
        }
    }

    #[test]
    fn dg_partition_of_unity() {
        for r in 0..=1 {
            for l in [[1.0, 0.0, 0.0], [0.2, 0.3, 0.5]] {
                let vals = eval_basis(FamilyDegree::dg(r), l).unwrap();
                let s: f64 = vals
                    .iter()
                    .map(|v| match v {
                        ShapeValue::Scalar { value } => *value,
                        _ => unreachable!(),
                    })
                    .sum();
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn eval_basis_rejects_outside_points() {
        assert!(matches!(
            eval_basis(FamilyDegree::rt(0), [1.2, -0.2, 0.0]),
            Err(Error::OutsideReference(..))
        ));
        assert_eq!(eval_basis(FamilyDegree::rt(1), [0.2, 0.2, 0.6]).unwrap().len(), 8);
    }

    #[test]
    fn piola_gradient_matches_finite_differences() {
        let map = ElementMap::new([[0.1, 0.2], [1.3, 0.4], [0.5, 1.1]]);
        let el = hdiv_element(FamilyDegree::rt(1));
        let l = [0.3, 0.3, 0.4];
        let x = map.to_physical(&l);
        let h = 1e-6;
        for i in 0..el.dim() {
            let g = map.piola(&el.eval(l[1], l[2])[i]).grad;
            for d in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let (bp, bm) = (map.to_barycentric(xp), map.to_barycentric(xm));
                let vp = map.piola(&el.eval(bp[1], bp[2])[i]).value;
                let vm = map.piola(&el.eval(bm[1], bm[2])[i]).value;
                for c in 0..2 {
                    let fd = (vp[c] - vm[c]) / (2.0 * h);
                    assert!((fd - g[c][d]).abs() < 1e-6, "{i} {c} {d}");
                }
            }
        }
    }
}
