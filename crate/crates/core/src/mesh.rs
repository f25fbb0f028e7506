//! Conforming triangulations with newest vertex bisection (NVB).
//!
//! Local edge `i` of a triangle is the edge opposite local vertex `i`. Every
//! triangle carries a tagged refinement edge; bisection always splits that
//! edge and the two children take the edges opposite the new vertex as their
//! refinement edges. Completion is done by closing the set of edges to split:
//! whenever a triangle has a split edge, its refinement edge is split as well.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::Point;

/// Tolerance, relative to the squared edge length, for "lies on the segment".
const COLLINEAR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSide {
    pub triangle: usize,
    /// Local edge index inside `triangle`.
    pub local: u8,
}

/// An edge of the mesh, stored with `vertices[0] < vertices[1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub first: EdgeSide,
    pub second: Option<EdgeSide>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.second.is_none()
    }

    pub fn sides(&self) -> impl Iterator<Item = EdgeSide> + '_ {
        std::iter::once(self.first).chain(self.second)
    }
}

/// A set of element indices of one particular mesh.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkedSet {
    elements: Vec<usize>,
}

impl MarkedSet {
    pub fn new(mut elements: Vec<usize>) -> Self {
        elements.sort_unstable();
        elements.dedup();
        Self { elements }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn all(mesh: &Mesh) -> Self {
        Self {
            elements: (0..mesh.num_triangles()).collect(),
        }
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.elements.binary_search(&t).is_ok()
    }

    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        match self.elements.last() {
            Some(&index) if index >= mesh.num_triangles() => Err(Error::InvalidMarkedSet {
                index,
                len: mesh.num_triangles(),
            }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for MarkedSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// A conforming, counterclockwise triangulation with NVB tags.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    refinement_edge: Vec<u8>,
    generation: Vec<u32>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds a mesh, normalizing orientation to counterclockwise. Missing
    /// refinement edges are assigned by the longest-edge rule.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        refinement_edge: Option<Vec<Option<u8>>>,
    ) -> Result<Self> {
        let tags = refinement_edge.unwrap_or_else(|| vec![None; triangles.len()]);
        if tags.len() != triangles.len() {
            return Err(Error::InvalidMesh(format!(
                "{} refinement tags for {} triangles",
                tags.len(),
                triangles.len()
            )));
        }
        let mut tris = Vec::with_capacity(triangles.len());
        let mut refs = Vec::with_capacity(triangles.len());
        for (t, (&tri, &tag)) in triangles.iter().zip(&tags).enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a vertex out of range"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateTriangle(t));
            }
            if let Some(r) = tag {
                if r > 2 {
                    return Err(Error::InvalidMesh(format!(
                        "triangle {t} has refinement edge {r}"
                    )));
                }
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            let scale = dist2(vertices[tri[0]], vertices[tri[1]])
                .max(dist2(vertices[tri[1]], vertices[tri[2]]))
                .max(dist2(vertices[tri[2]], vertices[tri[0]]));
            if !(area.abs() > 1e-14 * scale) {
                return Err(Error::DegenerateTriangle(t));
            }
            let (tri, tag) = if area < 0.0 {
                // swapping local vertices 1 and 2 swaps local edges 1 and 2
                let tag = tag.map(|r| match r {
                    1 => 2,
                    2 => 1,
                    r => r,
                });
                ([tri[0], tri[2], tri[1]], tag)
            } else {
                (tri, tag)
            };
            refs.push(tag.unwrap_or_else(|| longest_edge(&vertices, tri)));
            tris.push(tri);
        }
        let generation = vec![0; tris.len()];
        let mesh = Self::from_parts(vertices, tris, refs, generation)?;
        let hanging = mesh.hanging_nodes();
        if let Some(&(v, e)) = hanging.first() {
            return Err(Error::InvalidMesh(format!(
                "vertex {v} hangs on edge {:?}",
                mesh.edges[e].vertices
            )));
        }
        Ok(mesh)
    }

    fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        refinement_edge: Vec<u8>,
        generation: Vec<u32>,
    ) -> Result<Self> {
        let (edges, triangle_edges) = build_edges(&triangles)?;
        Ok(Self {
            vertices,
            triangles,
            refinement_edge,
            generation,
            edges,
            triangle_edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn refinement_edge(&self, t: usize) -> u8 {
        self.refinement_edge[t]
    }

    pub fn generation(&self, t: usize) -> u32 {
        self.generation[t]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// Global edge indices of the local edges of triangle `t`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    /// Mesh size `h_T = |T|^{1/2}`.
    pub fn h(&self, t: usize) -> f64 {
        self.area(t).sqrt()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn max_h(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| self.h(t))
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Endpoints of local edge `local` of triangle `t`, in counterclockwise order.
    pub fn local_edge_vertices(&self, t: usize, local: usize) -> [usize; 2] {
        let tri = self.triangles[t];
        [tri[(local + 1) % 3], tri[(local + 2) % 3]]
    }

    /// Returns a copy with every vertex shifted by `offset`.
    pub fn translated(&self, offset: Point) -> Self {
        let mut out = self.clone();
        for p in &mut out.vertices {
            p[0] += offset[0];
            p[1] += offset[1];
        }
        out
    }

    /// Pairs `(vertex, edge)` where the vertex lies strictly inside a
    /// one-sided edge. Empty for a conforming mesh.
    pub fn hanging_nodes(&self) -> Vec<(usize, usize)> {
        let n = self.vertices.len().max(1);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &self.vertices {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let cells = ((n as f64).sqrt().ceil() as usize).max(1);
        let width = [
            ((hi[0] - lo[0]) / cells as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / cells as f64).max(f64::MIN_POSITIVE),
        ];
        let cell_of = |x: f64, d: usize| -> usize {
            (((x - lo[d]) / width[d]).floor().max(0.0) as usize).min(cells - 1)
        };
        let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
        for (v, p) in self.vertices.iter().enumerate() {
            grid[cell_of(p[1], 1) * cells + cell_of(p[0], 0)].push(v);
        }
        let mut out = Vec::new();
        for (e, edge) in self.edges.iter().enumerate() {
            if !edge.is_boundary() {
                continue;
            }
            let [a, b] = edge.vertices;
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let (i0, i1) = (cell_of(pa[0].min(pb[0]), 0), cell_of(pa[0].max(pb[0]), 0));
            let (j0, j1) = (cell_of(pa[1].min(pb[1]), 1), cell_of(pa[1].max(pb[1]), 1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    for &v in &grid[j * cells + i] {
                        if v != a && v != b && on_open_segment(self.vertices[v], pa, pb) {
                            out.push((v, e));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Refines by NVB so that every marked triangle is bisected at least once,
    /// followed by completion.
    pub fn refine(&self, marked: &MarkedSet) -> Result<Mesh> {
        self.refine_tracked(marked).map(|(mesh, _)| mesh)
    }

    /// Like [`Mesh::refine`], also returning for every new triangle the index
    /// of the old triangle containing it.
    pub fn refine_tracked(&self, marked: &MarkedSet) -> Result<(Mesh, Vec<usize>)> {
        marked.validate(self)?;
        let mut split = vec![false; self.edges.len()];
        for &t in marked.elements() {
            split[self.triangle_edges[t][self.refinement_edge[t] as usize]] = true;
        }
        self.close_split_edges(&mut split)?;
        self.bisect_split_edges(&split)
    }

    /// Uniform refinement: every edge is split, so each triangle becomes four
    /// triangles of a quarter of its area (two rounds of bisection).
    pub fn uniform_refine(&self) -> Mesh {
        self.uniform_refine_tracked().0
    }

    pub fn uniform_refine_tracked(&self) -> (Mesh, Vec<usize>) {
        let split = vec![true; self.edges.len()];
        self.bisect_split_edges(&split)
            .expect("splitting all edges of a valid mesh cannot fail")
    }

    fn close_split_edges(&self, split: &mut [bool]) -> Result<()> {
        let mut queue: Vec<usize> = Vec::new();
        for (e, _) in split.iter().enumerate().filter(|(_, &s)| s) {
            queue.extend(self.edges[e].sides().map(|s| s.triangle));
        }
        let cap = 64 * (self.triangles.len() + 1);
        let mut visits = 0usize;
        while let Some(t) = queue.pop() {
            visits += 1;
            if visits > cap {
                return Err(Error::RefinementLoop(visits));
            }
            let re = self.triangle_edges[t][self.refinement_edge[t] as usize];
            if split[re] {
                continue;
            }
            if self.triangle_edges[t].iter().any(|&e| split[e]) {
                split[re] = true;
                queue.extend(self.edges[re].sides().map(|s| s.triangle));
            }
        }
        Ok(())
    }

    fn bisect_split_edges(&self, split: &[bool]) -> Result<(Mesh, Vec<usize>)> {
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, edge) in self.edges.iter().enumerate() {
            if split[e] {
                let [a, b] = edge.vertices;
                midpoints.insert((a, b), vertices.len());
                vertices.push(midpoint(self.vertices[a], self.vertices[b]));
            }
        }
        let mut triangles = Vec::with_capacity(self.triangles.len() + 2 * midpoints.len());
        let mut refs = Vec::with_capacity(triangles.capacity());
        let mut gens = Vec::with_capacity(triangles.capacity());
        let mut parent = Vec::with_capacity(triangles.capacity());
        for t in 0..self.triangles.len() {
            let mut emit = |tri: [usize; 3], re: u8, gen: u32| {
                triangles.push(tri);
                refs.push(re);
                gens.push(gen);
                parent.push(t);
            };
            bisect_recursive(
                self.triangles[t],
                self.refinement_edge[t],
                self.generation[t],
                &midpoints,
                &mut emit,
            );
        }
        let mesh = Mesh::from_parts(vertices, triangles, refs, gens)?;
        Ok((mesh, parent))
    }

    /// Smallest interior angle over all triangles, and the number of distinct
    /// sorted angle triples (rounded to 1e-9 radians).
    pub fn shape_stats(&self) -> (f64, usize) {
        let mut min_angle = f64::INFINITY;
        let mut classes = HashSet::new();
        for t in 0..self.num_triangles() {
            let angles = self.angles(t);
            let mut sorted = angles;
            sorted.sort_by(f64::total_cmp);
            min_angle = min_angle.min(sorted[0]);
            classes.insert(sorted.map(|a| (a * 1e9).round() as i64));
        }
        (min_angle, classes.len())
    }

    pub fn angles(&self, t: usize) -> [f64; 3] {
        let p = self.triangle_points(t);
        std::array::from_fn(|i| {
            let a = p[i];
            let b = p[(i + 1) % 3];
            let c = p[(i + 2) % 3];
            let u = [b[0] - a[0], b[1] - a[1]];
            let v = [c[0] - a[0], c[1] - a[1]];
            let cross = u[0] * v[1] - u[1] * v[0];
            let dot = u[0] * v[0] + u[1] * v[1];
            cross.abs().atan2(dot)
        })
    }

    /// Elements of `self` touching an element of `self` that is not present
    /// in the refinement `new`.
    pub fn refined_neighborhood(&self, new: &Mesh) -> Result<MarkedSet> {
        if new.vertices.len() < self.vertices.len()
            || new.vertices[..self.vertices.len()] != self.vertices[..]
        {
            return Err(Error::NotARefinement(
                "vertices of the coarse mesh are not a prefix of the fine mesh".into(),
            ));
        }
        let (a0, a1) = (self.total_area(), new.total_area());
        if (a0 - a1).abs() > 1e-12 * a0.abs().max(1.0) {
            return Err(Error::NotARefinement(format!(
                "covered areas differ: {a0} vs {a1}"
            )));
        }
        let surviving: HashSet<[usize; 3]> = new
            .triangles
            .iter()
            .map(|t| {
                let mut s = *t;
                s.sort_unstable();
                s
            })
            .collect();
        let mut touched = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            let mut s = *tri;
            s.sort_unstable();
            if !surviving.contains(&s) {
                for &v in tri {
                    touched[v] = true;
                }
            }
        }
        Ok((0..self.num_triangles())
            .filter(|&t| self.triangles[t].iter().any(|&v| touched[v]))
            .collect())
    }

    /// Sorted vertex coordinates of `t` as raw bits. Midpoints are exact
    /// averages, so the key identifies an NVB descendant independently of
    /// vertex numbering.
    pub fn geometric_key(&self, t: usize) -> [[u64; 2]; 3] {
        points_key(self.triangle_points(t))
    }

    /// Serializes to the line-oriented mesh format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "vertices {} / triangles {}",
            self.vertices.len(),
            self.triangles.len()
        );
        for p in &self.vertices {
            let _ = writeln!(s, "{} {}", p[0], p[1]);
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                tri[0], tri[1], tri[2], self.refinement_edge[t]
            );
        }
        s
    }

    /// The unit square split along the diagonal from (0,0) to (1,1).
    pub fn unit_square() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            None,
        )
        .expect("unit square is valid")
    }

    /// The L-shape `(-1,1)^2 \ [0,1) x (-1,0]` as three squares, each split by
    /// a diagonal ending at the re-entrant corner.
    pub fn l_shape() -> Mesh {
        Mesh::new(
            vec![
                [-1.0, -1.0],
                [0.0, -1.0],
                [-1.0, 0.0],
                [0.0, 0.0],
                [1.0, 0.0],
                [-1.0, 1.0],
                [0.0, 1.0],
                [1.0, 1.0],
            ],
            vec![[0, 1, 3], [0, 3, 2], [2, 3, 5], [3, 6, 5], [3, 4, 7], [3, 7, 6]],
            None,
        )
        .expect("L-shape is valid")
    }
}

/// Key of a triangle given by its vertex coordinates; see [`Mesh::geometric_key`].
pub fn points_key(points: [Point; 3]) -> [[u64; 2]; 3] {
    let mut key = points.map(|p| [p[0].to_bits(), p[1].to_bits()]);
    key.sort_unstable();
    key
}

/// The two NVB children of a triangle with refinement edge `re`, in the
/// same order and with the same tags that [`Mesh::refine`] produces.
pub fn bisect_points(points: [Point; 3], re: u8) -> [([Point; 3], u8); 2] {
    let r = re as usize;
    let (p0, p1, p2) = (points[r], points[(r + 1) % 3], points[(r + 2) % 3]);
    let m = midpoint(p1, p2);
    [([p0, p1, m], 2), ([p0, m, p2], 1)]
}

fn bisect_recursive(
    tri: [usize; 3],
    re: u8,
    gen: u32,
    midpoints: &HashMap<(usize, usize), usize>,
    emit: &mut impl FnMut([usize; 3], u8, u32),
) {
    let r = re as usize;
    let (p0, p1, p2) = (tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]);
    match midpoints.get(&edge_key(p1, p2)) {
        None => emit(tri, re, gen),
        Some(&m) => {
            // children keep counterclockwise order; the new vertex is the newest
            bisect_recursive([p0, p1, m], 2, gen + 1, midpoints, emit);
            bisect_recursive([p0, m, p2], 1, gen + 1, midpoints, emit);
        }
    }
}

/// Longest edge; ties go to the edge whose opposite vertex has the smallest index.
fn longest_edge(vertices: &[Point], tri: [usize; 3]) -> u8 {
    let len = |i: usize| dist2(vertices[tri[(i + 1) % 3]], vertices[tri[(i + 2) % 3]]);
    let longest = (0..3).map(len).fold(0.0, f64::max);
    (0..3)
        .filter(|&i| len(i) >= longest * (1.0 - 1e-12))
        .min_by_key(|&i| tri[i])
        .unwrap() as u8
}

fn on_open_segment(p: Point, a: Point, b: Point) -> bool {
    let d = [b[0] - a[0], b[1] - a[1]];
    let w = [p[0] - a[0], p[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let cross = d[0] * w[1] - d[1] * w[0];
    if cross.abs() > COLLINEAR_TOL * len2 {
        return false;
    }
    let s = (d[0] * w[0] + d[1] * w[1]) / len2;
    s > 1e-12 && s < 1.0 - 1e-12
}

fn build_edges(triangles: &[[usize; 3]]) -> Result<(Vec<Edge>, Vec<[usize; 3]>)> {
    let mut all: Vec<(usize, usize, usize, u8)> = Vec::with_capacity(3 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for i in 0..3 {
            let (a, b) = edge_key(tri[(i + 1) % 3], tri[(i + 2) % 3]);
            all.push((a, b, t, i as u8));
        }
    }
    all.sort_unstable();
    let mut edges: Vec<Edge> = Vec::with_capacity(all.len() / 2 + 2);
    let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
    let mut i = 0;
    while i < all.len() {
        let (a, b, t, l) = all[i];
        let mut j = i + 1;
        while j < all.len() && all[j].0 == a && all[j].1 == b {
            j += 1;
        }
        if j - i > 2 {
            return Err(Error::InvalidMesh(format!(
                "edge ({a}, {b}) is shared by {} triangles",
                j - i
            )));
        }
        let e = edges.len();
        triangle_edges[t][l as usize] = e;
        let second = (j - i == 2).then(|| {
            let (_, _, t2, l2) = all[i + 1];
            triangle_edges[t2][l2 as usize] = e;
            EdgeSide {
                triangle: t2,
                local: l2,
            }
        });
        edges.push(Edge {
            vertices: [a, b],
            first: EdgeSide { triangle: t, local: l },
            second,
        });
        i = j;
    }
    Ok((edges, triangle_edges))
}

/// Parses the line-oriented mesh format:
///
/// ```text
/// vertices N / triangles M
/// x y            (N lines)
/// v0 v1 v2 [r]   (M lines, optional refinement edge r in {0,1,2})
/// ```
///
/// Blank lines and lines starting with `#` are ignored.
pub fn load_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty input".into(),
    })?;
    let tokens: Vec<&str> = header.split_whitespace().filter(|t| *t != "/").collect();
    let (nv, nt) = match tokens.as_slice() {
        ["vertices", n, "triangles", m] => (
            parse_num::<usize>(n, hline)?,
            parse_num::<usize>(m, hline)?,
        ),
        _ => {
            return Err(Error::Parse {
                line: hline,
                msg: format!("expected `vertices N / triangles M`, found `{header}`"),
            })
        }
    };
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "unexpected end of input in vertex block".into(),
        })?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 2 {
            return Err(Error::Parse {
                line: ln,
                msg: "vertex line needs two coordinates".into(),
            });
        }
        let p = [parse_num::<f64>(f[0], ln)?, parse_num::<f64>(f[1], ln)?];
        if !p.iter().all(|c| c.is_finite()) {
            return Err(Error::Parse {
                line: ln,
                msg: "non-finite coordinate".into(),
            });
        }
        vertices.push(p);
    }
    let mut triangles = Vec::with_capacity(nt);
    let mut tags = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "unexpected end of input in triangle block".into(),
        })?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 && f.len() != 4 {
            return Err(Error::Parse {
                line: ln,
                msg: "triangle line needs three vertex indices and an optional refinement edge"
                    .into(),
            });
        }
        triangles.push([
            parse_num::<usize>(f[0], ln)?,
            parse_num::<usize>(f[1], ln)?,
            parse_num::<usize>(f[2], ln)?,
        ]);
        tags.push(match f.get(3) {
            Some(r) => Some(parse_num::<u8>(r, ln)?),
            None => None,
        });
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse {
            line: ln,
            msg: "trailing content after triangle block".into(),
        });
    }
    Mesh::new(vertices, triangles, Some(tags))
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse `{s}`"),
    })
}
