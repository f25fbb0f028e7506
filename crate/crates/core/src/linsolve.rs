//! Solvers for the symmetric indefinite saddle-point systems: sparse LU with
//! iterative refinement, and block-diagonally preconditioned MINRES.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::SparseColMat;
use nalgebra::{DMatrix, DVector};

use crate::assembly::{dg_dim, u_dof, MixedSolution, SaddleSystem};
use crate::error::{Error, Result};
use crate::sparse::{dot, norm, CsrMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMethod {
    Direct,
    MinresBlockDiag,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::direct()
    }
}

impl SolverConfig {
    pub fn direct() -> Self {
        Self {
            method: SolverMethod::Direct,
            tolerance: 1e-11,
            max_iterations: 10,
        }
    }

    pub fn minres() -> Self {
        Self {
            method: SolverMethod::MinresBlockDiag,
            tolerance: 1e-11,
            max_iterations: 100_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(Error::InvalidConfig(format!(
                "solver tolerance {} outside (0, 1e-6]",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Solves the saddle-point system.
pub fn solve(system: &SaddleSystem, cfg: &SolverConfig) -> Result<MixedSolution> {
    cfg.validate()?;
    let b = &system.rhs;
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(MixedSolution::zeros(system));
    }
    let (x, res, it) = match cfg.method {
        SolverMethod::Direct => direct(&system.matrix, b, cfg)?,
        SolverMethod::MinresBlockDiag => {
            let pre = BlockDiagonal::new(system)?;
            minres(&system.matrix, b, |r| pre.apply(r), cfg)?
        }
    };
    log::debug!("solve: {:?} residual {res:.3e} after {it} iterations", cfg.method);
    Ok(MixedSolution::from_vector(system, &x, res, it))
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let rel = norm(&r) / norm(b);
    (r, rel)
}

struct Factorization {
    lu: Lu<usize, f64>,
    n: usize,
}

impl Factorization {
    fn new(a: &CsrMatrix) -> Result<Self> {
        let m: SparseColMat<usize, f64> = a.to_faer()?;
        let lu = m.sp_lu().map_err(|e| Error::Singular {
            msg: format!("sparse LU failed: {e:?}"),
            residual: f64::NAN,
        })?;
        Ok(Self { lu, n: a.n_rows })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[i]).collect()
    }
}

fn direct(a: &CsrMatrix, b: &[f64], cfg: &SolverConfig) -> Result<(Vec<f64>, f64, usize)> {
    let f = Factorization::new(a)?;
    let mut x = f.solve(b);
    let (mut r, mut rel) = relative_residual(a, &x, b);
    let mut steps = 0;
    // iterative refinement while it keeps improving
    while !(rel <= cfg.tolerance) && steps < cfg.max_iterations {
        let d = f.solve(&r);
        let trial: Vec<f64> = x.iter().zip(&d).map(|(x, d)| x + d).collect();
        let (r2, rel2) = relative_residual(a, &trial, b);
        steps += 1;
        if !(rel2 < rel) {
            break;
        }
        x = trial;
        r = r2;
        rel = rel2;
    }
    if !(rel <= cfg.tolerance) {
        return Err(Error::Singular {
            msg: "factorization is numerically singular".into(),
            residual: rel,
        });
    }
    Ok((x, rel, steps))
}

/// Block-diagonal preconditioner: the inverse of the lumped natural-norm
/// Gram matrix on the flux, the exact inverse of the (elementwise block
/// diagonal) mass matrix on the primal unknown, identity on the multiplier.
struct BlockDiagonal {
    sigma_diag: Vec<f64>,
    /// Per element and component: global indices and the inverse mass block.
    u_blocks: Vec<(Vec<usize>, DMatrix<f64>)>,
    n_sigma: usize,
    constraint: Option<usize>,
    n: usize,
}

impl BlockDiagonal {
    fn new(system: &SaddleSystem) -> Result<Self> {
        let a = system.gram.a.diagonal();
        let m = system.gram.sigma_mass.diagonal();
        let d = system.gram.div_div.diagonal();
        let sigma_diag: Vec<f64> = a
            .iter()
            .zip(&m)
            .zip(&d)
            .map(|((a, m), d)| 1.0 / (a.max(0.5 * m) + d))
            .collect();
        let us = &system.u_space;
        let nu = dg_dim(us.family_degree().degree);
        let mut u_blocks = Vec::new();
        for t in 0..us.num_triangles() {
            for c in 0..system.rows() {
                let idx: Vec<usize> = (0..nu).map(|k| u_dof(us, t, c, k)).collect();
                let block = DMatrix::from_fn(nu, nu, |i, j| system.gram.u_mass.get(idx[i], idx[j]));
                let inv = block.try_inverse().ok_or_else(|| Error::Singular {
                    msg: format!("singular mass block on element {t}"),
                    residual: f64::NAN,
                })?;
                u_blocks.push((idx.iter().map(|i| i + system.n_sigma).collect(), inv));
            }
        }
        Ok(Self {
            sigma_diag,
            u_blocks,
            n_sigma: system.n_sigma,
            constraint: system.constraint,
            n: system.dim(),
        })
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        for i in 0..self.n_sigma {
            z[i] = self.sigma_diag[i] * r[i];
        }
        for (idx, inv) in &self.u_blocks {
            let local = DVector::from_iterator(idx.len(), idx.iter().map(|&i| r[i]));
            let y = inv * local;
            for (k, &i) in idx.iter().enumerate() {
                z[i] = y[k];
            }
        }
        if let Some(c) = self.constraint {
            z[c] = r[c];
        }
        z
    }
}

/// Preconditioned MINRES (Paige and Saunders). The symmetric positive
/// definite preconditioner is applied as `precond(r) = M^{-1} r`.
pub fn minres(
    a: &CsrMatrix,
    b: &[f64],
    precond: impl Fn(&[f64]) -> Vec<f64>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64, usize)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut total = 0;
    let mut inner_tol = 0.1 * cfg.tolerance;
    loop {
        let (dx, it) = minres_pass(a, &x, b, &precond, inner_tol, cfg.max_iterations - total);
        x = dx;
        total += it;
        let (_, rel) = relative_residual(a, &x, b);
        if rel <= cfg.tolerance {
            return Ok((x, rel, total));
        }
        if total >= cfg.max_iterations || it == 0 {
            return Err(Error::NoConvergence {
                iterations: total,
                residual: rel,
            });
        }
        inner_tol *= 0.1;
    }
}

fn minres_pass(
    a: &CsrMatrix,
    x0: &[f64],
    b: &[f64],
    precond: &impl Fn(&[f64]) -> Vec<f64>,
    tol: f64,
    max_it: usize,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = x0.to_vec();
    let ax = a.mul_vec(&x);
    let mut r1: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut y = precond(&r1);
    let beta1 = dot(&r1, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return (x, 0);
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut it = 0;
    while it < max_it {
        it += 1;
        let s = 1.0 / beta;
        for (v, y) in v.iter_mut().zip(&y) {
            *v = s * y;
        }
        y = a.mul_vec(&v);
        if it >= 2 {
            let f = beta / oldb;
            for (y, r) in y.iter_mut().zip(&r1) {
                *y -= f * r;
            }
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        for (y, r) in y.iter_mut().zip(&r2) {
            *y -= f * r;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.clone_from(&y);
        y = precond(&r2);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - oldeps * w1 - delta * w2[i]) * denom;
            x[i] += phi * w[i];
        }
        if phibar <= tol * beta1 || beta == 0.0 {
            break;
        }
    }
    (x, it)
}

/// Largest system the inf-sup probe accepts.
pub const PROBE_CAP: usize = 5000;

/// Smallest generalized singular value of the saddle operator `K` with
/// respect to the natural-norm Gram matrix `N`, i.e. the smallest `|mu|`
/// with `K x = mu N x`, by power iteration on `K^{-1} N`.
pub fn infsup_probe(system: &SaddleSystem) -> Result<f64> {
    let n = system.dim();
    if n > PROBE_CAP {
        return Err(Error::TooLarge(n, PROBE_CAP));
    }
    let gram = system.natural_gram();
    let f = Factorization::new(&system.matrix)?;
    let n_norm = |x: &[f64]| gram.bilinear(x, x).max(0.0).sqrt();
    // deterministic, non-symmetric start vector
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    let s = n_norm(&x);
    x.iter_mut().for_each(|v| *v /= s);
    let mut est = 0.0;
    for it in 0..20_000 {
        let y = f.solve(&gram.mul_vec(&x));
        let ny = n_norm(&y);
        if !ny.is_finite() || ny == 0.0 {
            return Err(Error::Singular {
                msg: "inverse iteration broke down".into(),
                residual: ny,
            });
        }
        let done = it > 5 && (ny - est).abs() <= 1e-12 * ny;
        est = ny;
        x = y.into_iter().map(|v| v / ny).collect();
        if done {
            break;
        }
    }
    Ok(1.0 / est)
}
