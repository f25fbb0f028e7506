//! Closed-form benchmark data checked against forward-mode differentiation
//! of the solution formulas.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use natnorm::bench::{self, benchmark};
use natnorm::Point;
use rand::{Rng, SeedableRng};

trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn cst(c: f64) -> Self;
    fn val(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powf(self, c: f64) -> Self;
    fn recip(self) -> Self;
    fn atan2(self, x: Self) -> Self;
}

impl Scalar for f64 {
    fn cst(c: f64) -> Self {
        c
    }
    fn val(self) -> f64 {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn powf(self, c: f64) -> Self {
        f64::powf(self, c)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

#[derive(Clone, Copy)]
struct Dual<T>(T, T);

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual(self.0 + o.0, self.1 + o.1)
    }
}
impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual(self.0 - o.0, self.1 - o.1)
    }
}
impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual(self.0 * o.0, self.0 * o.1 + self.1 * o.0)
    }
}
impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual(-self.0, -self.1)
    }
}
impl<T: Scalar> Scalar for Dual<T> {
    fn cst(c: f64) -> Self {
        Dual(T::cst(c), T::cst(0.0))
    }
    fn val(self) -> f64 {
        self.0.val()
    }
    fn sin(self) -> Self {
        Dual(self.0.sin(), self.0.cos() * self.1)
    }
    fn cos(self) -> Self {
        Dual(self.0.cos(), -(self.0.sin() * self.1))
    }
    fn powf(self, c: f64) -> Self {
        Dual(self.0.powf(c), T::cst(c) * self.0.powf(c - 1.0) * self.1)
    }
    fn recip(self) -> Self {
        let r = self.0.recip();
        Dual(r, -(r * r * self.1))
    }
    fn atan2(self, x: Self) -> Self {
        let q = (x.0 * x.0 + self.0 * self.0).recip();
        Dual(self.0.atan2(x.0), (x.0 * self.1 - self.0 * x.1) * q)
    }
}

type D1 = Dual<f64>;
type D2 = Dual<D1>;
type D3 = Dual<D2>;

fn seed1(p: Point, d: usize) -> [D1; 2] {
    [0, 1].map(|k| Dual(p[k], if k == d { 1.0 } else { 0.0 }))
}

fn seed2(p: Point, d: [usize; 2]) -> [D2; 2] {
    let (a, b) = (seed1(p, d[0]), seed1(p, d[1]));
    [0, 1].map(|k| Dual(a[k], Dual(b[k].1, 0.0)))
}

fn seed3(p: Point, d: [usize; 3]) -> [D3; 2] {
    let a = seed2(p, [d[0], d[1]]);
    let e = if d[2] == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
    [0, 1].map(|k| Dual(a[k], D2::cst(e[k])))
}

fn d1(f: impl Fn([D1; 2]) -> D1, p: Point, d: usize) -> f64 {
    f(seed1(p, d)).1
}

fn d2(f: impl Fn([D2; 2]) -> D2, p: Point, d: [usize; 2]) -> f64 {
    f(seed2(p, d)).1 .1
}

fn d3(f: impl Fn([D3; 2]) -> D3, p: Point, d: [usize; 3]) -> f64 {
    f(seed3(p, d)).1 .1 .1
}

fn c<T: Scalar>(v: f64) -> T {
    T::cst(v)
}

fn smooth_u<T: Scalar>([x, y]: [T; 2]) -> T {
    (c::<T>(PI) * x).sin() * (c::<T>(PI) * y).sin()
}

fn lshape_u<T: Scalar>([x, y]: [T; 2]) -> T {
    let r2 = x * x + y * y;
    let mut th = y.atan2(x);
    if th.val() < 0.0 {
        th = th + c(2.0 * PI);
    }
    r2.powf(1.0 / 3.0) * (c::<T>(2.0 / 3.0) * th).sin()
}

fn jump_u<T: Scalar>([x, y]: [T; 2], beta: f64) -> T {
    let w = x - c(0.5);
    let kink = if w.val() > 0.0 { w * w * (c::<T>(1.0) - x) } else { c(0.0) };
    smooth_u([x, y]) + c::<T>(beta) * kink * y * (c::<T>(1.0) - y)
}

fn stokes_psi<T: Scalar>([x, y]: [T; 2]) -> T {
    // stream function; u = (d psi / dy, -d psi / dx)
    let sx = (c::<T>(PI) * x).sin();
    let sy = (c::<T>(PI) * y).sin();
    sx * sx * sy * sy
}

fn random_points(n: usize, seed: u64, lshape: bool) -> Vec<Point> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut pts = Vec::new();
    while pts.len() < n {
        let p = if lshape {
            [rng.gen_range(-0.99..0.99), rng.gen_range(-0.99..0.99)]
        } else {
            [rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)]
        };
        if lshape && p[0] > 0.0 && p[1] < 0.0 {
            continue;
        }
        if (p[0] - 0.5f64).abs() < 1e-3 {
            continue;
        }
        pts.push(p);
    }
    pts
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn square_smooth_solves_poisson() {
    let b = benchmark("square_smooth").unwrap();
    let ex = b.spec.exact.as_ref().unwrap();
    let grad_f = b.spec.source_gradient.as_ref().unwrap();
    for p in random_points(100, 1, false) {
        let lap = d2(smooth_u, p, [0, 0]) + d2(smooth_u, p, [1, 1]);
        assert!((-lap - b.spec.f(p)[0]).abs() <= 1e-10);
        for d in 0..2 {
            assert!(close((ex.sigma)(p)[0][d], -d1(smooth_u, p, d), 1e-12));
            let gf = -(d3(smooth_u, p, [0, 0, d]) + d3(smooth_u, p, [1, 1, d]));
            assert!(close(grad_f(p)[0][d], gf, 1e-11));
        }
        assert!(close((ex.u)(p)[0], smooth_u(p), 1e-14));
    }
}

#[test]
fn lshape_solution_is_harmonic() {
    let b = benchmark("lshape_singular").unwrap();
    let ex = b.spec.exact.as_ref().unwrap();
    let bd = b.spec.boundary.as_ref().unwrap();
    for p in random_points(100, 2, true) {
        let lap = d2(lshape_u, p, [0, 0]) + d2(lshape_u, p, [1, 1]);
        assert!(lap.abs() <= 1e-10, "{p:?}");
        assert_eq!(b.spec.f(p)[0], 0.0);
        assert!(close((ex.u)(p)[0], lshape_u(p), 1e-13));
        assert!(close((bd.value)(p), lshape_u(p), 1e-13));
        for d in 0..2 {
            assert!(close((ex.sigma)(p)[0][d], -d1(lshape_u, p, d), 1e-11));
            assert!(close((bd.gradient)(p)[d], d1(lshape_u, p, d), 1e-11));
        }
    }
}

#[test]
fn lshape_vanishes_on_the_reentrant_edges() {
    let b = benchmark("lshape_singular").unwrap();
    let u = &b.spec.exact.as_ref().unwrap().u;
    for i in 0..=100 {
        let t = i as f64 / 100.0;
        for p in [[t, 0.0], [0.0, -t]] {
            assert!(u(p)[0].abs() <= 1e-12, "{p:?}");
        }
    }
}

#[test]
fn stokes_smooth_is_consistent() {
    let b = benchmark("stokes_smooth").unwrap();
    let ex = b.spec.exact.as_ref().unwrap();
    let grad_f = b.spec.source_gradient.as_ref().unwrap();
    let pi = PI;
    for p in random_points(100, 3, false) {
        let ux = d1(stokes_psi, p, 1);
        let uy = -d1(stokes_psi, p, 0);
        let u = (ex.u)(p);
        assert!(close(u[0], ux, 1e-12) && close(u[1], uy, 1e-12));
        let grad_u = [
            [d2(stokes_psi, p, [1, 0]), d2(stokes_psi, p, [1, 1])],
            [-d2(stokes_psi, p, [0, 0]), -d2(stokes_psi, p, [0, 1])],
        ];
        assert!((grad_u[0][0] + grad_u[1][1]).abs() <= 1e-10);
        let q = bench::stokes_p(p);
        let dq = [-pi * (pi * p[0]).sin() * (pi * p[1]).cos(), -pi * (pi * p[0]).cos() * (pi * p[1]).sin()];
        let s = (ex.sigma)(p);
        for r in 0..2 {
            for cc in 0..2 {
                let e = -grad_u[r][cc] + if r == cc { q } else { 0.0 };
                assert!(close(s[r][cc], e, 1e-11));
            }
        }
        // -Delta u_r + d_r p, third derivatives of psi
        let lap = |dirs: [usize; 1]| {
            d3(stokes_psi, p, [0, 0, dirs[0]]) + d3(stokes_psi, p, [1, 1, dirs[0]])
        };
        let f = [-lap([1]) + dq[0], lap([0]) + dq[1]];
        let fb = b.spec.f(p);
        assert!(close(fb[0], f[0], 1e-10) && close(fb[1], f[1], 1e-10));
        // grad f against differences of the analytic f
        let h = 1e-5;
        for d in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[d] += h;
            pm[d] -= h;
            for r in 0..2 {
                let fd = (b.spec.f(pp)[r] - b.spec.f(pm)[r]) / (2.0 * h);
                assert!(close(grad_f(p)[r][d], fd, 1e-6), "{r} {d}");
            }
        }
    }
}

#[test]
fn stokes_pressure_is_mean_free() {
    // the trace of the pseudostress is 2p
    let (x, w) = natnorm::quadrature::gauss_legendre(8);
    let mut m = 0.0;
    for (xi, wi) in x.iter().zip(&w) {
        for (yj, wj) in x.iter().zip(&w) {
            m += wi * wj * bench::stokes_p([*xi, *yj]);
        }
    }
    assert!(m.abs() < 1e-14);
}

#[test]
fn square_jump_solves_poisson() {
    let beta = 20.0;
    let b = bench::square_jump(beta);
    let ex = b.spec.exact.as_ref().unwrap();
    let u = |p| jump_u(p, beta);
    let u2 = |p| jump_u(p, beta);
    for p in random_points(100, 4, false) {
        let lap = d2(u2, p, [0, 0]) + d2(u2, p, [1, 1]);
        assert!(close(b.spec.f(p)[0], -lap, 1e-10));
        for d in 0..2 {
            assert!(close((ex.sigma)(p)[0][d], -d1(u, p, d), 1e-12));
        }
    }
    // the source jumps by beta y (1 - y) across x = 1/2
    let jump = b.spec.f([0.5 + 1e-12, 0.5])[0] - b.spec.f([0.5 - 1e-12, 0.5])[0];
    assert!((jump + beta * 0.25).abs() < 1e-6);
}
