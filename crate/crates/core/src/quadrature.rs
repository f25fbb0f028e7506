//! Symmetric quadrature on the reference triangle and Gauss-Legendre rules
//! on the unit interval.
//!
//! Weights are normalized to sum to one, so `sum_q w_q g(x_q) * |T|`
//! approximates `int_T g`.

use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    /// Polynomial degree integrated exactly.
    pub order: usize,
    /// Barycentric coordinates `(l0, l1, l2)` of the points.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64; 3], f64)> + '_ {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Symmetric rule exact for polynomials of degree `order` (1..=10).
pub fn quadrature(order: usize) -> Result<&'static QuadratureRule> {
    static RULES: OnceLock<Vec<QuadratureRule>> = OnceLock::new();
    if !(1..=10).contains(&order) {
        return Err(Error::UnsupportedQuadrature(order));
    }
    let rules = RULES.get_or_init(|| (1..=10).map(build_rule).collect());
    Ok(&rules[order - 1])
}

fn build_rule(order: usize) -> QuadratureRule {
    let mut b = Builder::default();
    match order {
        1 => b.centroid(1.0),
        2 => b.s21(1.0 / 6.0, 1.0 / 3.0),
        3 | 4 => {
            b.s21(0.445_948_490_915_964_8, 0.223_381_589_678_011_22);
            b.s21(0.091_576_213_509_770_87, 0.109_951_743_655_322_1);
        }
        5 => {
            let r15 = 15f64.sqrt();
            b.centroid(9.0 / 40.0);
            b.s21((6.0 + r15) / 21.0, (155.0 + r15) / 1200.0);
            b.s21((6.0 - r15) / 21.0, (155.0 - r15) / 1200.0);
        }
        6 => {
            b.s21(0.249_286_745_170_886_17, 0.116_786_275_726_420_89);
            b.s21(0.063_089_014_491_507_53, 0.050_844_906_370_214_174);
            b.s111(0.053_145_049_844_799_48, 0.310_352_451_033_803, 0.082_851_075_618_349_13);
        }
        7 | 8 => {
            b.centroid(0.144_315_607_677_787);
            b.s21(0.459_292_588_292_723, 0.095_091_634_267_285);
            b.s21(0.170_569_307_751_76, 0.103_217_370_534_718);
            b.s21(0.050_547_228_317_031, 0.032_458_497_623_198);
            b.s111(0.008_394_777_409_958, 0.263_112_829_634_638, 0.027_230_314_174_435);
        }
        _ => b.symmetrized_collapsed(order),
    }
    QuadratureRule {
        order,
        points: b.points,
        weights: b.weights,
    }
}

#[derive(Default)]
struct Builder {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl Builder {
    fn centroid(&mut self, w: f64) {
        self.points.push([1.0 / 3.0; 3]);
        self.weights.push(w);
    }

    fn s21(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[b, a, a], [a, b, a], [a, a, b]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    fn s111(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// Conical product (Duffy) rule averaged over the six vertex permutations.
    fn symmetrized_collapsed(&mut self, order: usize) {
        let (su, wu) = gauss_legendre(order.div_ceil(2) + 1);
        let (sv, wv) = gauss_legendre((order + 1).div_ceil(2));
        for (&u, &a) in su.iter().zip(&wu) {
            for (&v, &b) in sv.iter().zip(&wv) {
                let x = u;
                let y = v * (1.0 - u);
                let w = 2.0 * a * b * (1.0 - u) / 6.0;
                let l = [1.0 - x - y, x, y];
                for p in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                    self.points.push([l[p[0]], l[p[1]], l[p[2]]]);
                    self.weights.push(w);
                }
            }
        }
    }
}

/// `n`-point Gauss-Legendre rule on `[0, 1]` with weights summing to one.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * weight;
        w[n - 1 - i] = 0.5 * weight;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
