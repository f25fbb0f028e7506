//! Residual a posteriori error indicators for the mixed problems.
//!
//! Per element `T` with `h_T = |T|^{1/2}` the indicator is the sum of five
//! terms:
//!
//! 0. `h_T^2 ||C sigma_h + grad u_h||_T^2` (elementwise gradient);
//! 1. `h_T ||[u_h]||_{dT}^2`;
//! 2. `h_T^2 ||rot C sigma_h||_T^2` (row-wise);
//! 3. `h_T ||[(C sigma_h) t]||_{dT}^2` (row-wise tangential trace);
//! 4. `||f - div sigma_h||_T^2`, or `h_T^2 ||grad f||_T^2` for the modified
//!    indicator.
//!
//! `C` is the identity for Poisson and the deviatoric part for Stokes. On a
//! boundary edge the jump is the one-sided trace. Each interior edge is
//! shared half and half between its two elements, so the total counts every
//! edge once.

use rayon::prelude::*;

use crate::assembly::{data_order, deviatoric, Mat2, ProblemKind, ProblemSpec};
use crate::elements::ElementMap;
use crate::error::{Error, Result};
use crate::fields::DiscreteSolution;
use crate::mesh::MarkedSet;
use crate::quadrature::{gauss_legendre, quadrature};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Standard,
    Modified,
    Stokes,
}

/// Which tangential trace enters the Stokes flux jump term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StokesJump {
    /// Tangential trace of the deviatoric part `C sigma_h`.
    #[default]
    Deviatoric,
    /// Tangential trace of `sigma_h` itself.
    Raw,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorField {
    pub values: Vec<f64>,
    pub osc: Vec<f64>,
    /// The five contributions listed in the module docs, per element.
    pub terms: Vec<[f64; 5]>,
    pub total: f64,
    pub variant: Variant,
}

impl IndicatorField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `E(M)`, the sum over a set of elements.
    pub fn sum_over(&self, set: &MarkedSet) -> f64 {
        set.elements().iter().map(|&t| self.values[t]).sum()
    }

    pub fn data_total(&self) -> f64 {
        self.terms.iter().map(|t| t[4]).sum()
    }

    pub fn osc_total(&self) -> f64 {
        self.osc.iter().sum()
    }

    /// Indicator field built from plain values (no term breakdown).
    pub fn from_values(values: Vec<f64>, variant: Variant) -> Self {
        let total = values.iter().sum();
        Self {
            osc: vec![0.0; values.len()],
            terms: values.iter().map(|&v| [0.0, 0.0, 0.0, 0.0, v]).collect(),
            values,
            total,
            variant,
        }
    }
}

pub fn estimate_poisson(d: &DiscreteSolution, spec: &ProblemSpec) -> Result<IndicatorField> {
    expect_kind(spec, ProblemKind::PoissonMixed)?;
    estimate(d, spec, Variant::Standard, StokesJump::Deviatoric)
}

pub fn estimate_poisson_modified(d: &DiscreteSolution, spec: &ProblemSpec) -> Result<IndicatorField> {
    expect_kind(spec, ProblemKind::PoissonMixed)?;
    if spec.source_gradient.is_none() {
        return Err(Error::MissingData("the modified indicator needs grad f".into()));
    }
    estimate(d, spec, Variant::Modified, StokesJump::Deviatoric)
}

pub fn estimate_stokes(d: &DiscreteSolution, spec: &ProblemSpec, jump: StokesJump) -> Result<IndicatorField> {
    expect_kind(spec, ProblemKind::StokesPseudostress)?;
    estimate(d, spec, Variant::Stokes, jump)
}

/// Stokes indicator with the data term `h_T^2 ||grad f||^2`.
pub fn estimate_stokes_modified(d: &DiscreteSolution, spec: &ProblemSpec, jump: StokesJump) -> Result<IndicatorField> {
    expect_kind(spec, ProblemKind::StokesPseudostress)?;
    if spec.source_gradient.is_none() {
        return Err(Error::MissingData("the modified indicator needs grad f".into()));
    }
    estimate(d, spec, Variant::Modified, jump)
}

/// Data oscillation for the top-degree problem: identically zero.
pub fn oscillation(d: &DiscreteSolution, _spec: &ProblemSpec, _p: usize) -> Vec<f64> {
    vec![0.0; d.mesh.num_triangles()]
}

fn expect_kind(spec: &ProblemSpec, kind: ProblemKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::IncompatibleSpaces(format!(
            "{:?} indicator for a {:?} problem",
            kind, spec.kind
        )));
    }
    Ok(())
}

fn weighted(m: Mat2, stokes: bool) -> Mat2 {
    if stokes {
        deviatoric(m)
    } else {
        m
    }
}

fn estimate(d: &DiscreteSolution, spec: &ProblemSpec, variant: Variant, jump: StokesJump) -> Result<IndicatorField> {
    if d.rows != spec.rows() {
        return Err(Error::Mismatch("solution rows do not match the problem".into()));
    }
    let mesh = d.mesh;
    let rows = d.rows;
    let stokes = spec.kind == ProblemKind::StokesPseudostress;
    let r = d.u_space.family_degree().degree;
    let rule = quadrature(data_order(r).max(2 * d.sigma_space.family_degree().polynomial_degree()))?;

    let mut terms: Vec<[f64; 5]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let map = ElementMap::of(mesh, t);
            let area = map.area();
            let h2 = area;
            let mut term = [0.0; 5];
            for (l, w) in rule.iter() {
                let wa = w * area;
                let x = map.to_physical(l);
                let s = d.flux(t, &map, l);
                let u = d.primal(t, &map, l);
                let cs = weighted(s.value, stokes);
                // dg[dd][rr][c] = d (C sigma)_{rr c} / d x_dd
                let dg = [0, 1].map(|dd| {
                    weighted([0, 1].map(|rr| [0, 1].map(|c| s.grad[rr][c][dd])), stokes)
                });
                for rr in 0..rows {
                    for c in 0..2 {
                        let m = cs[rr][c] + u.grad[rr][c];
                        term[0] += wa * h2 * m * m;
                    }
                    let rot = dg[0][rr][1] - dg[1][rr][0];
                    term[2] += wa * h2 * rot * rot;
                }
                match variant {
                    Variant::Modified => {
                        let g = spec.source_gradient.as_ref().expect("checked")(x);
                        for row in g.iter().take(rows) {
                            term[4] += wa * h2 * (row[0] * row[0] + row[1] * row[1]);
                        }
                    }
                    _ => {
                        let f = spec.f(x);
                        for rr in 0..rows {
                            let e = f[rr] - s.div[rr];
                            term[4] += wa * e * e;
                        }
                    }
                }
            }
            term
        })
        .collect();

    let (gx, gw) = gauss_legendre(4);
    let raw_jump = stokes && jump == StokesJump::Raw;
    let edge_terms: Vec<[(usize, f64, f64); 2]> = mesh
        .edges()
        .par_iter()
        .map(|edge| {
            let [a, b] = edge.vertices.map(|v| mesh.vertex(v));
            let dv = [b[0] - a[0], b[1] - a[1]];
            let len = (dv[0] * dv[0] + dv[1] * dv[1]).sqrt();
            let tan = [dv[0] / len, dv[1] / len];
            let sides: Vec<(usize, ElementMap)> = edge
                .sides()
                .map(|s| (s.triangle, ElementMap::of(mesh, s.triangle)))
                .collect();
            let (mut ju, mut js) = (0.0, 0.0);
            for (&q, &w) in gx.iter().zip(&gw) {
                let p = [a[0] + q * dv[0], a[1] + q * dv[1]];
                let mut uj = [0.0; 2];
                let mut sj = [0.0; 2];
                for (k, (t, map)) in sides.iter().enumerate() {
                    let sign = if k == 0 { 1.0 } else { -1.0 };
                    let l = map.to_barycentric(p);
                    let u = d.primal(*t, map, &l);
                    let s = d.flux(*t, map, &l).value;
                    let cs = if raw_jump { s } else { weighted(s, stokes) };
                    for rr in 0..rows {
                        uj[rr] += sign * u.value[rr];
                        sj[rr] += sign * (cs[rr][0] * tan[0] + cs[rr][1] * tan[1]);
                    }
                }
                if let (Some(bd), 1) = (&spec.boundary, sides.len()) {
                    // Dirichlet data: u_h - g and sigma_h . t + d g / d t
                    let gg = (bd.gradient)(p);
                    uj[0] -= (bd.value)(p);
                    sj[0] += gg[0] * tan[0] + gg[1] * tan[1];
                }
                for rr in 0..rows {
                    ju += w * len * uj[rr] * uj[rr];
                    js += w * len * sj[rr] * sj[rr];
                }
            }
            let share = if sides.len() == 2 { 0.5 } else { 1.0 };
            let mut out = [(usize::MAX, 0.0, 0.0); 2];
            for (k, (t, _)) in sides.iter().enumerate() {
                let h = mesh.h(*t);
                out[k] = (*t, share * h * ju, share * h * js);
            }
            out
        })
        .collect();
    for e in edge_terms {
        for (t, ju, js) in e {
            if t != usize::MAX {
                terms[t][1] += ju;
                terms[t][3] += js;
            }
        }
    }
    let values: Vec<f64> = terms.iter().map(|t| t.iter().sum()).collect();
    let total = values.iter().sum();
    Ok(IndicatorField {
        osc: oscillation(d, spec, r),
        values,
        terms,
        total,
        variant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, build_spaces, l2_project, MixedSolution, ProblemSpec};
    use crate::elements::{interpolate_hdiv, FamilyDegree};
    use crate::linsolve::{solve, SolverConfig};
    use crate::mesh::Mesh;

    fn reference() -> Mesh {
        Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], None).unwrap()
    }

    #[test]
    fn dirichlet_data_reproduced_exactly() {
        // u = 1 + x + 2y is in P_1, so RT_1 x P_1 recovers it and every
        // indicator term vanishes
        let m = Mesh::l_shape().uniform_refine();
        let spec = ProblemSpec::poisson(|_| 0.0).with_dirichlet(|p| 1.0 + p[0] + 2.0 * p[1], |_| [1.0, 2.0]);
        let (s, u) = build_spaces(&m, ProblemKind::PoissonMixed, FamilyDegree::rt(1)).unwrap();
        let sys = assemble(&m, &s, &u, &spec).unwrap();
        let sol = solve(&sys, &SolverConfig::direct()).unwrap();
        let d = DiscreteSolution::new(&m, &s, &u, &sol, 1).unwrap();
        let map = ElementMap::of(&m, 3);
        let l = [0.2, 0.3, 0.5];
        let x = map.to_physical(&l);
        assert!((d.primal(3, &map, &l).value[0] - (1.0 + x[0] + 2.0 * x[1])).abs() < 1e-10);
        let f = d.flux(3, &map, &l).value[0];
        assert!((f[0] + 1.0).abs() < 1e-10 && (f[1] + 2.0).abs() < 1e-10);
        let est = estimate_poisson(&d, &spec).unwrap();
        assert!(est.total < 1e-18, "{}", est.total);
        // without the data the boundary terms see u_h itself
        let plain = ProblemSpec::poisson(|_| 0.0);
        assert!(estimate_poisson(&d, &plain).unwrap().total > 1e-2);
    }

    #[test]
    fn zero_everything_gives_zero() {
        let m = Mesh::l_shape().uniform_refine();
        let (s, u) = build_spaces(&m, ProblemKind::PoissonMixed, FamilyDegree::rt(1)).unwrap();
        let sol = MixedSolution {
            sigma: vec![0.0; s.dof_count()],
            u: vec![0.0; u.dof_count()],
            relative_residual: 0.0,
            multiplier: 0.0,
            iterations: 0,
        };
        let d = DiscreteSolution::new(&m, &s, &u, &sol, 1).unwrap();
        let est = estimate_poisson(&d, &ProblemSpec::poisson(|_| 0.0)).unwrap();
        assert_eq!(est.total, 0.0);
        assert!(oscillation(&d, &ProblemSpec::poisson(|_| 0.0), 0).iter().all(|&o| o == 0.0));
    }

    #[test]
    fn constant_flux_on_reference_triangle() {
        let m = reference();
        let (s, u) = build_spaces(&m, ProblemKind::PoissonMixed, FamilyDegree::rt(0)).unwrap();
        let c = [2.0, 1.0];
        let sol = MixedSolution {
            sigma: interpolate_hdiv(&m, &s, |_| c).unwrap(),
            u: vec![0.0],
            relative_residual: 0.0,
            multiplier: 0.0,
            iterations: 0,
        };
        let d = DiscreteSolution::new(&m, &s, &u, &sol, 1).unwrap();
        let est = estimate_poisson(&d, &ProblemSpec::poisson(|_| 0.0)).unwrap();
        // hand integration: |T| = 1/2, h^2 = 1/2; tangential traces
        // (c.t)^2 = 1/2, 1, 4 on edges of length sqrt(2), 1, 1
        let h2: f64 = 0.5;
        let misfit = h2 * 5.0 * 0.5;
        let jump = h2.sqrt() * (0.5 * 2f64.sqrt() + 1.0 + 4.0);
        let t = est.terms[0];
        assert!((t[0] - misfit).abs() < 1e-13);
        assert!((t[3] - jump).abs() < 1e-13);
        assert!(t[1].abs() < 1e-15 && t[2].abs() < 1e-13 && t[4].abs() < 1e-13);
        assert!((est.total - misfit - jump).abs() < 1e-13);
    }

    #[test]
    fn data_term_equals_projection_error() {
        let m = Mesh::unit_square().uniform_refine().uniform_refine();
        let f = |p: [f64; 2]| (3.0 * p[0]).sin() * (1.0 + p[1] * p[1]);
        for fd in [FamilyDegree::rt(0), FamilyDegree::rt(1), FamilyDegree::bdm(1)] {
            let (s, u) = build_spaces(&m, ProblemKind::PoissonMixed, fd).unwrap();
            let spec = ProblemSpec::poisson(f);
            let sys = assemble(&m, &s, &u, &spec).unwrap();
            let sol = solve(&sys, &SolverConfig::direct()).unwrap();
            let d = DiscreteSolution::new(&m, &s, &u, &sol, 1).unwrap();
            let est = estimate_poisson(&d, &spec).unwrap();
            let proj = l2_project(&m, &f, fd.paired_dg_degree()).unwrap();
            for t in 0..m.num_triangles() {
                let e2 = proj.errors[t] * proj.errors[t];
                assert!((est.terms[t][4] - e2).abs() <= 1e-10 * e2.max(1e-12), "{fd:?}");
            }
            assert!(est.osc_total() <= est.total);
            let sum: f64 = est.values.iter().sum();
            assert!((sum - est.total).abs() <= 1e-12 * est.total);
        }
    }

    #[test]
    fn modified_data_term() {
        let m = Mesh::unit_square().uniform_refine();
        let (s, u) = build_spaces(&m, ProblemKind::PoissonMixed, FamilyDegree::rt(0)).unwrap();
        let sol = MixedSolution {
            sigma: vec![0.0; s.dof_count()],
            u: vec![0.0; u.dof_count()],
            relative_residual: 0.0,
            multiplier: 0.0,
            iterations: 0,
        };
        let d = DiscreteSolution::new(&m, &s, &u, &sol, 1).unwrap();
        let spec = ProblemSpec::poisson(|p| p[0]).with_poisson_gradient(|_| [1.0, 0.0]);
        let est = estimate_poisson_modified(&d, &spec).unwrap();
        for t in 0..m.num_triangles() {
            let a = m.area(t);
            assert!((est.terms[t][4] - a * a).abs() < 1e-14);
        }
        let constant = ProblemSpec::poisson(|_| 2.0).with_poisson_gradient(|_| [0.0, 0.0]);
        assert_eq!(estimate_poisson_modified(&d, &constant).unwrap().data_total(), 0.0);
        assert!(matches!(
            estimate_poisson_modified(&d, &ProblemSpec::poisson(|p| p[0])),
            Err(Error::MissingData(_))
        ));
    }

    #[test]
    fn modified_data_dominates_standard() {
        use std::f64::consts::PI;
        let m = Mesh::unit_square().uniform_refine().uniform_refine();
        let (s, u) = build_spaces(&m, ProblemKind::PoissonMixed, FamilyDegree::rt(0)).unwrap();
        let spec = ProblemSpec::poisson(|p| (PI * p[0]).sin() * (PI * p[1]).sin())
            .with_poisson_gradient(|p| {
                [PI * (PI * p[0]).cos() * (PI * p[1]).sin(), PI * (PI * p[0]).sin() * (PI * p[1]).cos()]
            });
        let sys = assemble(&m, &s, &u, &spec).unwrap();
        let sol = solve(&sys, &SolverConfig::direct()).unwrap();
        let d = DiscreteSolution::new(&m, &s, &u, &sol, 1).unwrap();
        let std = estimate_poisson(&d, &spec).unwrap();
        let md = estimate_poisson_modified(&d, &spec).unwrap();
        // elementwise Poincare: ||f - Q0 f|| <= (diam/pi) ||grad f||, diam^2 <= 4 |T|
        for t in 0..m.num_triangles() {
            assert!(std.terms[t][4] <= 4.0 / (PI * PI) * md.terms[t][4] + 1e-15);
        }
    }

    #[test]
    fn stokes_pure_trace_flux() {
        // sigma = x I: the deviatoric part vanishes, Div sigma = (1, 0)
        let m = Mesh::unit_square().uniform_refine();
        let (s, u) = build_spaces(&m, ProblemKind::StokesPseudostress, FamilyDegree::bdm(1)).unwrap();
        let n = s.dof_count();
        let mut sigma = interpolate_hdiv(&m, &s, |p| [p[0], 0.0]).unwrap();
        sigma.extend(interpolate_hdiv(&m, &s, |p| [0.0, p[0]]).unwrap());
        assert_eq!(sigma.len(), 2 * n);
        let sol = MixedSolution {
            sigma,
            u: vec![0.0; u.dof_count()],
            relative_residual: 0.0,
            multiplier: 0.0,
            iterations: 0,
        };
        let d = DiscreteSolution::new(&m, &s, &u, &sol, 2).unwrap();
        let spec = ProblemSpec::stokes(|_| [0.0, 0.0]);
        let est = estimate_stokes(&d, &spec, StokesJump::Deviatoric).unwrap();
        for t in 0..m.num_triangles() {
            let term = est.terms[t];
            assert!(term[..4].iter().all(|v| v.abs() < 1e-24), "{term:?}");
            assert!((term[4] - m.area(t)).abs() < 1e-13);
        }
        // the raw trace does not vanish on the boundary
        let raw = estimate_stokes(&d, &spec, StokesJump::Raw).unwrap();
        assert!(raw.terms.iter().map(|t| t[3]).sum::<f64>() > 1e-3);
    }

    #[test]
    fn kind_mismatch() {
        let m = reference();
        let (s, u) = build_spaces(&m, ProblemKind::PoissonMixed, FamilyDegree::rt(0)).unwrap();
        let sol = MixedSolution {
            sigma: vec![0.0; 3],
            u: vec![0.0],
            relative_residual: 0.0,
            multiplier: 0.0,
            iterations: 0,
        };
        let d = DiscreteSolution::new(&m, &s, &u, &sol, 1).unwrap();
        assert!(estimate_stokes(&d, &ProblemSpec::stokes(|_| [0.0; 2]), StokesJump::Deviatoric).is_err());
        let short = MixedSolution { sigma: vec![0.0; 2], ..sol.clone() };
        assert!(DiscreteSolution::new(&m, &s, &u, &short, 1).is_err());
    }
}
