//! Errors against a known exact solution in the natural norms.

use rayon::prelude::*;

use crate::assembly::{deviatoric, ProblemKind, ProblemSpec};
use crate::elements::ElementMap;
use crate::error::{Error, Result};
use crate::fields::DiscreteSolution;
use crate::quadrature::quadrature;
use crate::Point;

const ERROR_ORDER: usize = 7;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    /// `||C^{1/2}(sigma - sigma_h)||` (the plain `L^2` norm for Poisson).
    pub sigma_c: f64,
    /// `||div(sigma - sigma_h)||`, row-wise for Stokes.
    pub div: f64,
    pub u: f64,
}

impl ErrorNorms {
    /// `||sigma - sigma_h||_{V_C}`, with `||tau||_{V_C}^2 = <C tau, tau> + ||div tau||^2`.
    pub fn sigma_vc(&self) -> f64 {
        self.sigma_c.hypot(self.div)
    }

    /// The natural-norm error `(||sigma - sigma_h||_{V_C}^2 + ||u - u_h||^2)^{1/2}`.
    pub fn total(&self) -> f64 {
        self.sigma_vc().hypot(self.u)
    }

    /// `||C^{1/2} e|| + ||div e|| + ||u - u_h||`.
    pub fn sum(&self) -> f64 {
        self.sigma_c + self.div + self.u
    }
}

fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

/// Sub-triangles used for error quadrature on element `t`: the element
/// itself, or its four congruent children when it touches a singular point.
fn pieces(p: [Point; 3], singular: &[Point]) -> Vec<[Point; 3]> {
    let touches = p.iter().any(|v| {
        singular
            .iter()
            .any(|s| (v[0] - s[0]).abs() < 1e-14 && (v[1] - s[1]).abs() < 1e-14)
    });
    if !touches {
        return vec![p];
    }
    let m = [midpoint(p[1], p[2]), midpoint(p[2], p[0]), midpoint(p[0], p[1])];
    vec![
        [p[0], m[2], m[1]],
        [m[2], p[1], m[0]],
        [m[1], m[0], p[2]],
        [m[0], m[1], m[2]],
    ]
}

/// Exact errors of a discrete solution; the divergence error is measured
/// against the source of `spec`.
pub fn exact_errors(d: &DiscreteSolution, spec: &ProblemSpec) -> Result<ErrorNorms> {
    let exact = spec
        .exact
        .as_ref()
        .ok_or_else(|| Error::MissingData("no exact solution".into()))?;
    let stokes = spec.kind == ProblemKind::StokesPseudostress;
    let rows = spec.rows();
    let rule = quadrature(ERROR_ORDER)?;
    let mesh = d.mesh;
    let parts: Vec<[f64; 3]> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let map = ElementMap::of(mesh, t);
            let mut acc = [0.0; 3];
            for sub in pieces(mesh.triangle_points(t), &spec.singular_points) {
                let sm = ElementMap::new(sub);
                for (l, w) in rule.iter() {
                    let x = sm.to_physical(l);
                    let wa = w * sm.area();
                    let pl = map.to_barycentric(x);
                    let s = d.flux(t, &map, &pl);
                    let u = d.primal(t, &map, &pl);
                    let sig = (exact.sigma)(x);
                    let ue = (exact.u)(x);
                    let f = spec.f(x);
                    let mut e = [[0.0; 2]; 2];
                    for r in 0..rows {
                        for c in 0..2 {
                            e[r][c] = sig[r][c] - s.value[r][c];
                        }
                        let dv = f[r] - s.div[r];
                        acc[1] += wa * dv * dv;
                        let du = ue[r] - u.value[r];
                        acc[2] += wa * du * du;
                    }
                    let ce = if stokes { deviatoric(e) } else { e };
                    acc[0] += wa * (0..2).flat_map(|r| (0..2).map(move |c| (r, c))).map(|(r, c)| ce[r][c] * ce[r][c]).sum::<f64>();
                }
            }
            acc
        })
        .collect();
    let sum = |k: usize| parts.iter().map(|p| p[k]).sum::<f64>().max(0.0).sqrt();
    Ok(ErrorNorms {
        sigma_c: sum(0),
        div: sum(1),
        u: sum(2),
    })
}
