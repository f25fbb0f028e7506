//! Randomized checks of refinement, projection, estimator and Galerkin
//! structure on small meshes.

use natnorm::adapt::{run_adaptive, AdaptConfig, AdaptVariant};
use natnorm::assembly::{assemble, build_spaces, deviatoric, l2_project_with_order, Mat2, ProblemKind, ProblemSpec};
use natnorm::bench::benchmark;
use natnorm::elements::{hdiv_physical, interpolate_hdiv, ElementMap, FamilyDegree};
use natnorm::estimator::estimate_poisson;
use natnorm::fields::DiscreteSolution;
use natnorm::linsolve::{solve, SolverConfig};
use natnorm::mesh::{MarkedSet, Mesh};
use natnorm::Point;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn root(kind: u8, corner: (f64, f64)) -> Mesh {
    match kind {
        0 => Mesh::unit_square(),
        1 => Mesh::l_shape(),
        _ => Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [corner.0, corner.1]], vec![[0, 1, 2]], None).unwrap(),
    }
}

fn random_marking(m: &Mesh, rng: &mut impl Rng) -> MarkedSet {
    let k = rng.gen_range(1..=m.num_triangles().min(4));
    (0..k).map(|_| rng.gen_range(0..m.num_triangles())).collect()
}

fn random_mesh(kind: u8, steps: usize, seed: u64) -> Mesh {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut m = root(kind, (0.3, 0.8));
    for _ in 0..steps {
        m = m.refine(&random_marking(&m, &mut rng)).unwrap();
    }
    m
}

/// Edge incidence from the triangle list alone.
fn conforming(m: &Mesh) -> bool {
    let mut count = std::collections::HashMap::new();
    for tri in m.triangles() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    count.values().all(|&c| c == 1 || c == 2) && m.hanging_nodes().is_empty()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nvb_sequences_stay_conforming_and_nested(
        kind in 0u8..3, cx in 0.1f64..0.9, cy in 0.2f64..1.0, seed in any::<u64>(), steps in 1usize..12,
    ) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut m = root(kind, (cx, cy));
        for _ in 0..steps {
            let marked = random_marking(&m, &mut rng);
            let (r, parent) = m.refine_tracked(&marked).unwrap();
            prop_assert!(conforming(&r));
            prop_assert_eq!(&r.vertices()[..m.num_vertices()], m.vertices());
            for (t, &p) in parent.iter().enumerate() {
                let split = r.area(t) < m.area(p) * (1.0 - 1e-12);
                prop_assert!(r.generation(t) >= m.generation(p));
                prop_assert_eq!(split, r.generation(t) > m.generation(p));
            }
            m = r;
        }
        let (all, parent) = m.refine_tracked(&MarkedSet::all(&m)).unwrap();
        let mut children = vec![0usize; m.num_triangles()];
        for &p in &parent {
            children[p] += 1;
        }
        prop_assert!(children.iter().all(|&c| c >= 2));
        prop_assert!(all.num_triangles() > m.num_triangles());
    }

    #[test]
    fn nvb_angles_settle_after_four_rounds(cx in 0.05f64..0.95, cy in 0.1f64..1.2) {
        let mut m = root(2, (cx, cy));
        let mut min4 = 0.0;
        for level in 1..=10 {
            m = m.refine(&MarkedSet::all(&m)).unwrap();
            if level == 4 {
                min4 = m.shape_stats().0;
            }
        }
        let (min10, classes) = m.shape_stats();
        prop_assert!(classes <= 4);
        prop_assert!((min10 - min4).abs() < 1e-9);
    }

    #[test]
    fn deviatoric_is_an_orthogonal_projection(
        s in prop::array::uniform4(-10.0f64..10.0), t in prop::array::uniform4(-10.0f64..10.0),
    ) {
        let m = |a: [f64; 4]| -> Mat2 { [[a[0], a[1]], [a[2], a[3]]] };
        let ip = |a: Mat2, b: Mat2| a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1];
        let (s, t) = (m(s), m(t));
        let cs = deviatoric(s);
        let ccs = deviatoric(cs);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((ccs[i][j] - cs[i][j]).abs() <= 1e-14 * (1.0 + cs[i][j].abs()));
            }
        }
        prop_assert!((cs[0][0] + cs[1][1]).abs() <= 1e-14);
        prop_assert!((ip(cs, t) - ip(s, deviatoric(t))).abs() <= 1e-12);
    }

    // at the data quadrature order the coarsest meshes carry visible
    // quadrature error, so the projection errors here use a higher order
    #[test]
    fn data_error_never_grows_under_refinement(kind in 0u8..2, seed in any::<u64>(), r in 0usize..2) {
        let f = |p: Point| (3.0 * p[0]).sin() * (2.0 * p[1]).cos() + p[0] * p[0];
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut m = root(kind, (0.0, 0.0));
        let mut prev = l2_project_with_order(&m, &f, r, 10).unwrap().total_error();
        for _ in 0..6 {
            m = m.refine(&random_marking(&m, &mut rng)).unwrap();
            let next = l2_project_with_order(&m, &f, r, 10).unwrap().total_error();
            prop_assert!(next <= prev * (1.0 + 1e-9), "{} > {}", next, prev);
            prev = next;
        }
    }

    #[test]
    fn indicators_add_up(seed in any::<u64>(), steps in 0usize..6, split in any::<u64>()) {
        let b = benchmark("square_smooth").unwrap();
        let m = random_mesh(0, steps, seed);
        let (ss, us) = build_spaces(&m, ProblemKind::PoissonMixed, FamilyDegree::rt(0)).unwrap();
        let sys = assemble(&m, &ss, &us, &b.spec).unwrap();
        let sol = solve(&sys, &SolverConfig::direct()).unwrap();
        let d = DiscreteSolution::new(&m, &ss, &us, &sol, 1).unwrap();
        let ind = estimate_poisson(&d, &b.spec).unwrap();
        let sum: f64 = ind.values.iter().sum();
        prop_assert!((ind.total - sum).abs() <= 1e-12 * sum);
        prop_assert!(ind.values.iter().all(|&v| v >= 0.0));
        prop_assert!(ind.osc_total() <= ind.total);
        // disjoint halves chosen by the bits of `split`
        let n = m.num_triangles();
        let (a, c): (Vec<usize>, Vec<usize>) = (0..n).partition(|t| (split >> (t % 64)) & 1 == 1);
        let (ma, mc) = (MarkedSet::new(a), MarkedSet::new(c));
        let both = ind.sum_over(&MarkedSet::all(&m));
        prop_assert!((both - ind.sum_over(&ma) - ind.sum_over(&mc)).abs() <= 1e-13 * both);
    }
}

/// Coarse `H(div)` and `P_0` basis functions written in the fine bases.
fn prolongation(coarse: &Mesh, fine: &Mesh, parent: &[usize], fd: FamilyDegree, n_u_fine: usize) -> Vec<Vec<f64>> {
    let (cs, cu) = build_spaces(coarse, ProblemKind::PoissonMixed, fd).unwrap();
    let (fs, _) = build_spaces(fine, ProblemKind::PoissonMixed, fd).unwrap();
    let locate = |p: Point| -> (usize, [f64; 3]) {
        (0..coarse.num_triangles())
            .map(|t| (t, ElementMap::of(coarse, t).to_barycentric(p)))
            .max_by(|a, b| {
                let ma = a.1.iter().cloned().fold(f64::MAX, f64::min);
                let mb = b.1.iter().cloned().fold(f64::MAX, f64::min);
                ma.total_cmp(&mb)
            })
            .unwrap()
    };
    let mut cols = Vec::new();
    for j in 0..cs.dof_count() {
        let field = |p: Point| {
            let (t, l) = locate(p);
            let map = ElementMap::of(coarse, t);
            let vals = hdiv_physical(&cs, &map, t, &l);
            let k = cs.element_dofs(t).iter().position(|&d| d == j);
            k.map_or([0.0, 0.0], |k| vals[k].value)
        };
        let mut col = interpolate_hdiv(fine, &fs, field).unwrap();
        col.extend(std::iter::repeat(0.0).take(n_u_fine));
        cols.push(col);
    }
    let nsf = fs.dof_count();
    for t in 0..cu.dof_count() {
        let mut col = vec![0.0; nsf + n_u_fine];
        for (c, &p) in parent.iter().enumerate() {
            if p == t {
                col[nsf + c] = 1.0;
            }
        }
        cols.push(col);
    }
    cols
}

#[test]
fn galerkin_orthogonality_on_nested_meshes() {
    // polynomial data keeps every load integral exact on both meshes
    let spec = ProblemSpec::poisson(|p| 1.0 + p[0] - 2.0 * p[1] * p[1]);
    for (seed, fd) in [(1u64, FamilyDegree::rt(0)), (2, FamilyDegree::bdm(1)), (3, FamilyDegree::rt(0))] {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let coarse = random_mesh((seed % 2) as u8, 3, seed);
        let (fine, parent) = coarse.refine_tracked(&random_marking(&coarse, &mut rng)).unwrap();
        let system = |m: &Mesh| {
            let (s, u) = build_spaces(m, ProblemKind::PoissonMixed, fd).unwrap();
            assemble(m, &s, &u, &spec).unwrap()
        };
        let (sc, sf) = (system(&coarse), system(&fine));
        let xc = solve(&sc, &SolverConfig::direct()).unwrap().to_vector(&sc);
        let xf = solve(&sf, &SolverConfig::direct()).unwrap().to_vector(&sf);
        let p = prolongation(&coarse, &fine, &parent, fd, sf.n_u);
        // coarse solution in the fine basis
        let mut diff = xf.clone();
        for (col, &c) in p.iter().zip(&xc) {
            for (d, v) in diff.iter_mut().zip(col) {
                *d -= c * v;
            }
        }
        let kd = sf.matrix.mul_vec(&diff);
        let scale = sf.matrix.mul_vec(&xf).iter().map(|v| v.abs()).fold(0.0, f64::max);
        let worst = p
            .iter()
            .map(|col| col.iter().zip(&kd).map(|(a, b)| a * b).sum::<f64>().abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-10 * scale, "{fd:?}: {worst:e}");
        assert!(diff.iter().any(|v| v.abs() > 1e-6), "meshes should give different solutions");
    }
}

#[test]
fn adaptive_levels_grow_and_errors_settle() {
    let b = benchmark("square_smooth").unwrap();
    for fd in [FamilyDegree::rt(0), FamilyDegree::rt(1)] {
        let cfg = AdaptConfig::new(AdaptVariant::Amfem, fd).with_max_dofs(8000);
        let rec = run_adaptive(&b.spec, &b.mesh, &cfg).unwrap();
        for w in rec.rows.windows(2) {
            assert!(w[1].ntri > w[0].ntri);
            assert_eq!(w[1].level, w[0].level + 1);
            let (e0, e1) = (w[0].errors.unwrap().total(), w[1].errors.unwrap().total());
            assert!(e1 <= 1.5 * e0, "{fd:?} level {}: {e1} > 1.5 x {e0}", w[1].level);
        }
    }
}
