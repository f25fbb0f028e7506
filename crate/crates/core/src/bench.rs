//! Built-in benchmark problems with closed-form solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::{Mat2, ProblemSpec, Vec2};
use crate::elements::FamilyDegree;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::Point;

pub struct Benchmark {
    pub name: &'static str,
    pub description: &'static str,
    pub spec: ProblemSpec,
    pub mesh: Mesh,
}

impl Benchmark {
    /// Optimal decay rate in terms of degrees of freedom for a smooth
    /// (or adaptively resolved) solution.
    pub fn expected_rate(&self, element: FamilyDegree) -> f64 {
        (element.paired_dg_degree() as f64 + 1.0) / 2.0
    }
}

pub const NAMES: [&str; 4] = ["square_smooth", "lshape_singular", "stokes_smooth", "square_jump"];

pub fn builtin_benchmarks() -> Vec<Benchmark> {
    vec![square_smooth(), lshape_singular(), stokes_smooth(), square_jump(20.0)]
}

pub fn benchmark(name: &str) -> Result<Benchmark> {
    match name {
        "square_smooth" => Ok(square_smooth()),
        "lshape_singular" => Ok(lshape_singular()),
        "stokes_smooth" => Ok(stokes_smooth()),
        "square_jump" => Ok(square_jump(20.0)),
        _ => Err(Error::UnknownBenchmark(name.to_string())),
    }
}

/// `u = sin(pi x) sin(pi y)` on the unit square.
pub fn square_smooth() -> Benchmark {
    let spec = ProblemSpec::poisson(|[x, y]| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin())
        .with_poisson_exact(
            |[x, y]| [-PI * (PI * x).cos() * (PI * y).sin(), -PI * (PI * x).sin() * (PI * y).cos()],
            |[x, y]| (PI * x).sin() * (PI * y).sin(),
        )
        .with_poisson_gradient(|[x, y]| {
            let c = 2.0 * PI * PI * PI;
            [c * (PI * x).cos() * (PI * y).sin(), c * (PI * x).sin() * (PI * y).cos()]
        });
    Benchmark {
        name: "square_smooth",
        description: "u = sin(pi x) sin(pi y) on the unit square",
        spec,
        mesh: Mesh::unit_square(),
    }
}

const ALPHA: f64 = 2.0 / 3.0;

/// Powers of `z = x + iy` with the branch cut along the removed quadrant,
/// so the argument runs over `[0, 3 pi / 2]` in the L-shape.
fn zpow(p: Point, a: f64) -> (f64, f64) {
    let r = p[0].hypot(p[1]);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let mut th = p[1].atan2(p[0]);
    if th < 0.0 {
        th += 2.0 * PI;
    }
    let m = r.powf(a);
    (m * (a * th).cos(), m * (a * th).sin())
}

/// `s = r^{2/3} sin(2 theta / 3) = Im z^{2/3}`, harmonic in the L-shape.
pub fn lshape_u(p: Point) -> f64 {
    zpow(p, ALPHA).1
}

/// `grad s = (2/3) (Im z^{-1/3}, Re z^{-1/3})`.
pub fn lshape_grad_u(p: Point) -> Vec2 {
    let (re, im) = zpow(p, ALPHA - 1.0);
    [ALPHA * im, ALPHA * re]
}

/// The corner singularity `r^{2/3} sin(2 theta / 3)` itself: `f = 0` and
/// Dirichlet data equal to the solution, which vanishes on the two
/// re-entrant edges.
pub fn lshape_singular() -> Benchmark {
    let spec = ProblemSpec::poisson(|_| 0.0)
        .with_poisson_exact(
            |p| {
                let g = lshape_grad_u(p);
                [-g[0], -g[1]]
            },
            lshape_u,
        )
        .with_poisson_gradient(|_| [0.0, 0.0])
        .with_dirichlet(lshape_u, lshape_grad_u)
        .with_singular_point([0.0, 0.0]);
    Benchmark {
        name: "lshape_singular",
        description: "harmonic corner singularity r^(2/3) sin(2 theta/3) on the L-shape",
        spec,
        mesh: Mesh::l_shape(),
    }
}

pub fn stokes_u([x, y]: Point) -> Vec2 {
    let (sx, sy) = ((PI * x).sin(), (PI * y).sin());
    [PI * sx * sx * (2.0 * PI * y).sin(), -PI * (2.0 * PI * x).sin() * sy * sy]
}

pub fn stokes_p([x, y]: Point) -> f64 {
    (PI * x).cos() * (PI * y).cos()
}

/// `grad u` with `[r][c] = d u_r / d x_c`.
pub fn stokes_grad_u([x, y]: Point) -> Mat2 {
    let p2 = PI * PI;
    let (s2x, s2y) = ((2.0 * PI * x).sin(), (2.0 * PI * y).sin());
    let (sx, sy) = ((PI * x).sin(), (PI * y).sin());
    [
        [p2 * s2x * s2y, 2.0 * p2 * sx * sx * (2.0 * PI * y).cos()],
        [-2.0 * p2 * (2.0 * PI * x).cos() * sy * sy, -p2 * s2x * s2y],
    ]
}

/// `f = -Delta u + grad p`.
pub fn stokes_f([x, y]: Point) -> Vec2 {
    let p3 = PI * PI * PI;
    let (c2x, c2y) = ((2.0 * PI * x).cos(), (2.0 * PI * y).cos());
    let (s2x, s2y) = ((2.0 * PI * x).sin(), (2.0 * PI * y).sin());
    [
        -2.0 * p3 * s2y * (2.0 * c2x - 1.0) - PI * (PI * x).sin() * (PI * y).cos(),
        -2.0 * p3 * s2x * (1.0 - 2.0 * c2y) - PI * (PI * x).cos() * (PI * y).sin(),
    ]
}

/// `[r][d] = d f_r / d x_d`.
pub fn stokes_grad_f([x, y]: Point) -> Mat2 {
    let p4 = PI.powi(4);
    let p2 = PI * PI;
    let (c2x, c2y) = ((2.0 * PI * x).cos(), (2.0 * PI * y).cos());
    let (s2x, s2y) = ((2.0 * PI * x).sin(), (2.0 * PI * y).sin());
    let (cx, cy, sx, sy) = ((PI * x).cos(), (PI * y).cos(), (PI * x).sin(), (PI * y).sin());
    [
        [8.0 * p4 * s2x * s2y - p2 * cx * cy, -4.0 * p4 * c2y * (2.0 * c2x - 1.0) + p2 * sx * sy],
        [-4.0 * p4 * c2x * (1.0 - 2.0 * c2y) + p2 * sx * sy, -8.0 * p4 * s2x * s2y - p2 * cx * cy],
    ]
}

/// Divergence-free velocity vanishing on the boundary, mean-free pressure.
pub fn stokes_smooth() -> Benchmark {
    let mut spec = ProblemSpec::stokes(stokes_f).with_stokes_exact(
        |p| {
            let g = stokes_grad_u(p);
            let q = stokes_p(p);
            [[-g[0][0] + q, -g[0][1]], [-g[1][0], -g[1][1] + q]]
        },
        stokes_u,
    );
    spec.source_gradient = Some(Arc::new(stokes_grad_f));
    Benchmark {
        name: "stokes_smooth",
        description: "Stokes flow with a trigonometric stream function on the unit square",
        spec,
        mesh: Mesh::unit_square(),
    }
}

/// `(x - 1/2)_+^2 (1 - x)` and its first two derivatives.
fn kink(x: f64) -> [f64; 3] {
    if x <= 0.5 {
        return [0.0; 3];
    }
    let w = x - 0.5;
    [w * w * (1.0 - x), 2.0 * w * (1.0 - x) - w * w, 2.0 * (1.0 - x) - 4.0 * w]
}

/// `u = sin(pi x) sin(pi y) + beta (x - 1/2)_+^2 (1 - x) y (1 - y)`; the
/// source jumps across `x = 1/2`.
pub fn square_jump(beta: f64) -> Benchmark {
    let q = |y: f64| [y * (1.0 - y), 1.0 - 2.0 * y, -2.0];
    let spec = ProblemSpec::poisson(move |[x, y]| {
        let (g, h) = (kink(x), q(y));
        2.0 * PI * PI * (PI * x).sin() * (PI * y).sin() - beta * (g[2] * h[0] + g[0] * h[2])
    })
    .with_poisson_exact(
        move |[x, y]| {
            let (g, h) = (kink(x), q(y));
            [
                -PI * (PI * x).cos() * (PI * y).sin() - beta * g[1] * h[0],
                -PI * (PI * x).sin() * (PI * y).cos() - beta * g[0] * h[1],
            ]
        },
        move |[x, y]| (PI * x).sin() * (PI * y).sin() + beta * kink(x)[0] * q(y)[0],
    )
    .with_data_class(false);
    Benchmark {
        name: "square_jump",
        description: "smooth solution plus a kink whose source jumps across x = 1/2",
        spec,
        mesh: Mesh::unit_square(),
    }
}
