//! Dörfler marking, greedy tree approximation of data, and the adaptive
//! SOLVE -> ESTIMATE -> MARK -> REFINE drivers.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use crate::assembly::{
    assemble, build_spaces, data_order, project_triangle, MixedSolution, ProblemKind, ProblemSpec, SaddleSystem,
    Vec2,
};
use crate::elements::{ElementMap, FamilyDegree};
use crate::error::{Error, Result};
use crate::estimator::{estimate_poisson, estimate_poisson_modified, estimate_stokes, estimate_stokes_modified, IndicatorField, StokesJump};
use crate::fields::DiscreteSolution;
use crate::linsolve::{solve, SolverConfig};
use crate::mesh::{bisect_points, points_key, MarkedSet, Mesh};
use crate::norms::{exact_errors, ErrorNorms};
use crate::Point;

/// Totals at or below this are treated as a vanishing estimator.
pub const ZERO_ESTIMATOR: f64 = 1e-24;

/// Cap on the number of bisections performed by [`approx_data`].
pub const APPROX_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaptVariant {
    Amfem,
    AmfemM,
    AmfemApprox,
    /// Every element is bisected on every level.
    Uniform,
}

#[derive(Clone, Debug)]
pub struct AdaptConfig {
    pub theta: f64,
    pub variant: AdaptVariant,
    pub element: FamilyDegree,
    pub max_dofs: Option<usize>,
    pub tol: Option<f64>,
    pub solver: SolverConfig,
    pub stokes_jump: StokesJump,
    pub max_levels: usize,
}

impl AdaptConfig {
    pub fn new(variant: AdaptVariant, element: FamilyDegree) -> Self {
        Self {
            theta: 0.5,
            variant,
            element,
            max_dofs: None,
            tol: None,
            solver: SolverConfig::direct(),
            stokes_jump: StokesJump::Deviatoric,
            max_levels: 60,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_max_dofs(mut self, max_dofs: usize) -> Self {
        self.max_dofs = Some(max_dofs);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = Some(tol);
        self
    }

    pub fn with_solver(mut self, solver: SolverConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidConfig(format!("theta = {} is not in (0, 1)", self.theta)));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0) {
                return Err(Error::InvalidConfig(format!("tol = {tol} must be positive")));
            }
        }
        if self.variant == AdaptVariant::AmfemApprox && self.tol.is_none() {
            return Err(Error::InvalidConfig("AMFEM-APPROX needs a tolerance".into()));
        }
        if self.max_dofs.is_none() && self.tol.is_none() {
            return Err(Error::InvalidConfig("no stop rule: give max dofs and/or a tolerance".into()));
        }
        if !self.element.is_hdiv() {
            return Err(Error::InvalidConfig(format!("{:?} is not an H(div) element", self.element)));
        }
        self.element.validate()?;
        self.solver.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxDofs,
    Tolerance,
    ZeroEstimator,
    MaxLevels,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelRow {
    pub level: usize,
    pub ntri: usize,
    pub dofs: usize,
    /// `sqrt(E_l)`.
    pub estimator: f64,
    pub errors: Option<ErrorNorms>,
    /// Natural-norm error divided by `sqrt(E_l)`.
    pub effectivity: Option<f64>,
    pub marked: usize,
    pub cum_marked: usize,
    /// Wall time since the start of the run.
    pub seconds: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxSummary {
    /// Number of elements of the completed mesh.
    pub ntri: usize,
    /// `||f - Q f||` on the completed mesh.
    pub data_error: f64,
    /// Initial elements bisected by the tree approximation.
    pub marked0: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRecord {
    pub rows: Vec<LevelRow>,
    /// `#T_0`, the size of the input mesh.
    pub initial_ntri: usize,
    pub variant: AdaptVariant,
    pub approx: Option<ApproxSummary>,
    pub stop: Option<StopReason>,
}

pub const CSV_HEADER: &str = "level,ntri,dofs,estimator,err_sigma_vc,err_div,err_u,effectivity,marked,cum_marked,seconds";

impl ConvergenceRecord {
    pub fn new(initial_ntri: usize, variant: AdaptVariant) -> Self {
        Self {
            rows: Vec::new(),
            initial_ntri,
            variant,
            approx: None,
            stop: None,
        }
    }

    pub fn last(&self) -> Option<&LevelRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.12e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{:.12e},{},{},{},{},{},{},{:.6}",
                r.level,
                r.ntri,
                r.dofs,
                r.estimator,
                opt(r.errors.map(|e| e.sigma_vc())),
                opt(r.errors.map(|e| e.div)),
                opt(r.errors.map(|e| e.u)),
                opt(r.effectivity),
                r.marked,
                r.cum_marked,
                r.seconds
            );
        }
        s
    }
}

/// Quantities a rate can be fitted to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Estimator,
    /// `(||sigma - sigma_h||_{V_C}^2 + ||u - u_h||^2)^{1/2}`.
    ErrorTotal,
    /// `||C^{1/2} e|| + ||div e|| + ||u - u_h||`.
    ErrorSum,
    ErrSigmaVc,
    ErrDiv,
    ErrU,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Against {
    Dofs,
    /// `#T_l - #T_0`.
    Elements,
}

fn quantity(row: &LevelRow, q: Quantity) -> Option<f64> {
    match q {
        Quantity::Estimator => Some(row.estimator),
        Quantity::ErrorTotal => row.errors.map(|e| e.total()),
        Quantity::ErrorSum => row.errors.map(|e| e.sum()),
        Quantity::ErrSigmaVc => row.errors.map(|e| e.sigma_vc()),
        Quantity::ErrDiv => row.errors.map(|e| e.div),
        Quantity::ErrU => row.errors.map(|e| e.u),
    }
}

/// Least-squares fit `y = a + b x`; returns `(b, r^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy > 0.0 && sxx > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (b, r2)
}

/// Decay rate `s` of a record column, from the slope of `log(quantity)`
/// against `log(dofs)` or `log(#T_l - #T_0)`, skipping the first `skip`
/// levels. Returns `(s, r^2)` with `s > 0` for decay.
pub fn fit_rate(record: &ConvergenceRecord, q: Quantity, skip: usize, against: Against) -> Result<(f64, f64)> {
    let rows: Vec<&LevelRow> = record.rows.iter().skip(skip).collect();
    if rows.len() < 3 {
        return Err(Error::InsufficientRows(rows.len()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in rows {
        let x = match against {
            Against::Dofs => r.dofs as f64,
            Against::Elements => r.ntri as f64 - record.initial_ntri as f64,
        };
        let y = quantity(r, q).ok_or_else(|| Error::MissingData(format!("{q:?} at level {}", r.level)))?;
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::NonPositive(r.level));
        }
        xs.push(x.ln());
        ys.push(y.ln());
    }
    let (b, r2) = linear_fit(&xs, &ys);
    Ok((-b, r2))
}

/// Slope and `r^2` of `log E_l` against `l`, skipping the first `skip` levels.
pub fn contraction_fit(record: &ConvergenceRecord, skip: usize) -> Result<(f64, f64)> {
    let rows: Vec<&LevelRow> = record.rows.iter().skip(skip).collect();
    if rows.len() < 3 {
        return Err(Error::InsufficientRows(rows.len()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in rows {
        if !(r.estimator > 0.0) {
            return Err(Error::NonPositive(r.level));
        }
        xs.push(r.level as f64);
        ys.push((r.estimator * r.estimator).ln());
    }
    Ok(linear_fit(&xs, &ys))
}

/// Smallest set carrying at least `theta` of the total estimator: the
/// longest indicators first, ties to the smaller element index.
pub fn dorfler_mark(ind: &IndicatorField, theta: f64) -> Result<MarkedSet> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidConfig(format!("theta = {theta} is not in (0, 1)")));
    }
    if ind.total <= ZERO_ESTIMATOR {
        return Err(Error::ZeroEstimator);
    }
    let mut order: Vec<usize> = (0..ind.len()).collect();
    order.sort_by(|&a, &b| ind.values[b].total_cmp(&ind.values[a]).then(a.cmp(&b)));
    let target = theta * ind.total;
    let mut acc = 0.0;
    let mut k = 0;
    while k < order.len() && acc < target {
        acc += ind.values[order[k]];
        k += 1;
    }
    loop {
        let set = MarkedSet::new(order[..k].to_vec());
        if ind.sum_over(&set) >= target || k == order.len() {
            return Ok(set);
        }
        // summation order changed the last bits; take one more
        k += 1;
    }
}

#[derive(PartialEq)]
struct Leaf {
    err2: f64,
    seq: usize,
    points: [Point; 3],
    re: u8,
}

impl Eq for Leaf {}

impl Ord for Leaf {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err2.total_cmp(&other.err2).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Leaf {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug)]
pub struct ApproxResult {
    /// Conforming completion of the approximation tree.
    pub mesh: Mesh,
    /// Elements of the input mesh that were bisected.
    pub marked0: MarkedSet,
    /// `||f - Q f||` on the completed mesh.
    pub error: f64,
    /// Number of leaves of the (possibly nonconforming) tree.
    pub leaves: usize,
}

/// Greedy tree approximation of `f` by piecewise `P_r`, followed by
/// completion to a conforming mesh with `||f - Q f|| <= tol`.
pub fn approx_data(mesh: &Mesh, f: &(dyn Fn(Point) -> f64 + Sync), r: usize, tol: f64) -> Result<ApproxResult> {
    let order = data_order(r);
    approx_with(mesh, tol, &|p| project_triangle(p, f, r, order).map(|(_, e)| e))
}

/// [`approx_data`] for every component of the source of `spec`.
pub fn approx_spec(mesh: &Mesh, spec: &ProblemSpec, r: usize, tol: f64) -> Result<ApproxResult> {
    let order = data_order(r);
    let rows = spec.rows();
    approx_with(mesh, tol, &|p| {
        let mut e = 0.0;
        for c in 0..rows {
            let fc = |x: Point| spec.f(x)[c];
            e += project_triangle(p, &fc, r, order)?.1;
        }
        Ok(e)
    })
}

fn approx_with(mesh: &Mesh, tol: f64, err2: &dyn Fn([Point; 3]) -> Result<f64>) -> Result<ApproxResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tol = {tol} must be positive")));
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let points = mesh.triangle_points(t);
        let e = err2(points)?;
        total += e;
        heap.push(Leaf {
            err2: e,
            seq,
            points,
            re: mesh.refinement_edge(t),
        });
        seq += 1;
    }
    let mut internal: HashSet<[[u64; 2]; 3]> = HashSet::new();
    let mut target = tol * tol;
    let mut bisections = 0;
    loop {
        while total > target {
            let leaf = heap.pop().expect("positive total implies a leaf");
            bisections += 1;
            if bisections > APPROX_CAP {
                return Err(Error::ApproxCap(APPROX_CAP));
            }
            internal.insert(points_key(leaf.points));
            total -= leaf.err2;
            for (points, re) in bisect_points(leaf.points, leaf.re) {
                let e = err2(points)?;
                total += e;
                heap.push(Leaf { err2: e, seq, points, re });
                seq += 1;
            }
            if heap.len() % 1024 == 0 {
                total = heap.iter().map(|l| l.err2).sum();
            }
        }
        total = heap.iter().map(|l| l.err2).sum();
        if total > target {
            continue;
        }
        let completed = complete_tree(mesh, &internal)?;
        let error2: f64 = (0..completed.num_triangles())
            .map(|t| err2(completed.triangle_points(t)))
            .sum::<Result<f64>>()?;
        if error2 <= tol * tol {
            let marked0 = (0..mesh.num_triangles())
                .filter(|&t| internal.contains(&mesh.geometric_key(t)))
                .collect();
            return Ok(ApproxResult {
                mesh: completed,
                marked0,
                error: error2.max(0.0).sqrt(),
                leaves: heap.len(),
            });
        }
        // quadrature on finer elements disagreed with the tree; tighten
        target *= 0.5;
    }
}

/// Smallest conforming NVB refinement containing every tree node in `internal`.
fn complete_tree(mesh: &Mesh, internal: &HashSet<[[u64; 2]; 3]>) -> Result<Mesh> {
    let mut m = mesh.clone();
    loop {
        let marked: MarkedSet = (0..m.num_triangles())
            .filter(|&t| internal.contains(&m.geometric_key(t)))
            .collect();
        if marked.is_empty() {
            return Ok(m);
        }
        m = m.refine(&marked)?;
    }
}

/// A piecewise polynomial on a mesh, evaluable at arbitrary points.
pub struct PiecewisePolynomial {
    mesh: Mesh,
    degree: usize,
    /// Per element, per component: barycentric coefficients.
    coef: Vec<[[f64; 3]; 2]>,
    grid: Grid,
}

struct Grid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl Grid {
    fn new(mesh: &Mesh) -> Self {
        let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
        for p in mesh.vertices() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let cell = (mesh.total_area() / mesh.num_triangles() as f64).sqrt().max(1e-12) * 2.0;
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut g = Self {
            origin: lo,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for t in 0..mesh.num_triangles() {
            let p = mesh.triangle_points(t);
            let (mut a, mut b) = ([f64::MAX; 2], [f64::MIN; 2]);
            for v in p {
                for d in 0..2 {
                    a[d] = a[d].min(v[d]);
                    b[d] = b[d].max(v[d]);
                }
            }
            let (i0, j0) = g.cell_of(a);
            let (i1, j1) = g.cell_of(b);
            for i in i0..=i1 {
                for j in j0..=j1 {
                    g.buckets[j * nx + i].push(t);
                }
            }
        }
        g
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let i = ((p[0] - self.origin[0]) / self.cell).floor().max(0.0) as usize;
        let j = ((p[1] - self.origin[1]) / self.cell).floor().max(0.0) as usize;
        (i.min(self.nx - 1), j.min(self.ny - 1))
    }
}

impl PiecewisePolynomial {
    /// `Q f` for every component of the source of `spec` on `mesh`.
    pub fn project_spec(mesh: &Mesh, spec: &ProblemSpec, r: usize) -> Result<Self> {
        let order = data_order(r);
        let mut coef = Vec::with_capacity(mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let p = mesh.triangle_points(t);
            let mut c = [[0.0; 3]; 2];
            for (k, ck) in c.iter_mut().enumerate().take(spec.rows()) {
                let fc = |x: Point| spec.f(x)[k];
                *ck = project_triangle(p, &fc, r, order)?.0;
            }
            coef.push(c);
        }
        Ok(Self {
            grid: Grid::new(mesh),
            mesh: mesh.clone(),
            degree: r,
            coef,
        })
    }

    fn locate(&self, p: Point) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.grid.cell_of(p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.grid.buckets[j * self.grid.nx + i] {
            let l = ElementMap::of(&self.mesh, t).to_barycentric(p);
            let m = l[0].min(l[1]).min(l[2]);
            if best.as_ref().is_none_or(|b| m > b.2) {
                best = Some((t, l, m));
            }
        }
        best.map(|(t, l, _)| (t, l))
    }

    pub fn eval(&self, p: Point) -> Vec2 {
        let Some((t, l)) = self.locate(p) else {
            return [0.0; 2];
        };
        let c = &self.coef[t];
        if self.degree == 0 {
            [c[0][0], c[1][0]]
        } else {
            [0, 1].map(|k| c[k][0] * l[0] + c[k][1] * l[1] + c[k][2] * l[2])
        }
    }
}

/// Everything known about one level, handed to observers.
pub struct LevelState<'a> {
    pub level: usize,
    pub mesh: &'a Mesh,
    pub system: &'a SaddleSystem,
    pub solution: &'a MixedSolution,
    pub indicators: &'a IndicatorField,
    pub marked: &'a MarkedSet,
}

pub fn run_adaptive(spec: &ProblemSpec, mesh0: &Mesh, cfg: &AdaptConfig) -> Result<ConvergenceRecord> {
    run_adaptive_observed(spec, mesh0, cfg, &mut |_| Ok(()))
}

/// Runs the adaptive loop, calling `observer` once per level.
pub fn run_adaptive_observed(
    spec: &ProblemSpec,
    mesh0: &Mesh,
    cfg: &AdaptConfig,
    observer: &mut dyn FnMut(&LevelState) -> Result<()>,
) -> Result<ConvergenceRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let mut record = ConvergenceRecord::new(mesh0.num_triangles(), cfg.variant);
    let r = cfg.element.paired_dg_degree();
    let stokes = spec.kind == ProblemKind::StokesPseudostress;
    if cfg.variant == AdaptVariant::AmfemM && spec.source_gradient.is_none() {
        return Err(Error::MissingData("AMFEM-M needs the gradient of the source".into()));
    }
    if cfg.variant == AdaptVariant::Amfem && !spec.data_class {
        log::warn!("source is not marked elementwise H^1 on the initial mesh; estimator reduction is not guaranteed");
    }
    let (mut mesh, solve_spec) = if cfg.variant == AdaptVariant::AmfemApprox {
        let tol = cfg.tol.expect("validated");
        let res = approx_spec(mesh0, spec, r, tol)?;
        log::info!(
            "APPROX: {} -> {} elements, data error {:.3e}",
            mesh0.num_triangles(),
            res.mesh.num_triangles(),
            res.error
        );
        record.approx = Some(ApproxSummary {
            ntri: res.mesh.num_triangles(),
            data_error: res.error,
            marked0: res.marked0.len(),
        });
        let q = Arc::new(PiecewisePolynomial::project_spec(&res.mesh, spec, r)?);
        let solve_spec = spec.with_source(Arc::new(move |p| q.eval(p)));
        (res.mesh, solve_spec)
    } else {
        (mesh0.clone(), spec.clone())
    };
    let mut cum = 0;
    for level in 0.. {
        let step = run_level(level, &mesh, spec, &solve_spec, cfg, stokes, observer);
        let (row_parts, marked) = match step {
            Ok(v) => v,
            Err(e) => {
                return Err(Error::Level {
                    level,
                    source: Box::new(e),
                    partial: Box::new(record),
                })
            }
        };
        let (dofs, estimator, errors, residual, stop) = row_parts;
        cum += marked.len();
        let effectivity = errors.map(|e: ErrorNorms| e.total() / estimator);
        record.rows.push(LevelRow {
            level,
            ntri: mesh.num_triangles(),
            dofs,
            estimator,
            errors,
            effectivity,
            marked: marked.len(),
            cum_marked: cum,
            seconds: start.elapsed().as_secs_f64(),
            residual,
        });
        log::info!(
            "level {level}: {} elements, {dofs} dofs, estimator {estimator:.4e}, marked {}",
            mesh.num_triangles(),
            marked.len()
        );
        if let Some(stop) = stop {
            record.stop = Some(stop);
            break;
        }
        if level + 1 >= cfg.max_levels {
            record.stop = Some(StopReason::MaxLevels);
            break;
        }
        let next = mesh.refine(&marked)?;
        if let Some(max) = cfg.max_dofs {
            let (s, u) = build_spaces(&next, spec.kind, cfg.element)?;
            if spec.rows() * s.dof_count() + u.dof_count() > max {
                record.stop = Some(StopReason::MaxDofs);
                break;
            }
        }
        mesh = next;
    }
    Ok(record)
}

type LevelParts = (usize, f64, Option<ErrorNorms>, f64, Option<StopReason>);

fn run_level(
    level: usize,
    mesh: &Mesh,
    spec: &ProblemSpec,
    solve_spec: &ProblemSpec,
    cfg: &AdaptConfig,
    stokes: bool,
    observer: &mut dyn FnMut(&LevelState) -> Result<()>,
) -> Result<(LevelParts, MarkedSet)> {
    let (s, u) = build_spaces(mesh, spec.kind, cfg.element)?;
    let system = assemble(mesh, &s, &u, solve_spec)?;
    let sol = solve(&system, &cfg.solver)?;
    let d = DiscreteSolution::new(mesh, &s, &u, &sol, spec.rows())?;
    let ind = match (cfg.variant, stokes) {
        (_, true) if cfg.variant == AdaptVariant::AmfemM => {
            estimate_stokes_modified(&d, solve_spec, cfg.stokes_jump)?
        }
        (_, true) => estimate_stokes(&d, solve_spec, cfg.stokes_jump)?,
        (AdaptVariant::AmfemM, false) => estimate_poisson_modified(&d, solve_spec)?,
        _ => estimate_poisson(&d, solve_spec)?,
    };
    let errors = match spec.exact {
        Some(_) => Some(exact_errors(&d, spec)?),
        None => None,
    };
    let estimator = ind.total.max(0.0).sqrt();
    let mut stop = None;
    if ind.total <= ZERO_ESTIMATOR {
        stop = Some(StopReason::ZeroEstimator);
    } else if cfg.tol.is_some_and(|t| estimator <= t) {
        stop = Some(StopReason::Tolerance);
    }
    let marked = match (stop, cfg.variant) {
        (Some(_), _) => MarkedSet::empty(),
        (None, AdaptVariant::Uniform) => MarkedSet::all(mesh),
        (None, _) => dorfler_mark(&ind, cfg.theta)?,
    };
    observer(&LevelState {
        level,
        mesh,
        system: &system,
        solution: &sol,
        indicators: &ind,
        marked: &marked,
    })?;
    let dofs = system.n_sigma + system.n_u;
    Ok(((dofs, estimator, errors, sol.relative_residual, stop), marked))
}
