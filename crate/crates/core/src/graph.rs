//! Discrete potential theory on finite metrized graphs.
//!
//! Functions are continuous and piecewise linear along edges. The Laplacian
//! of `f` is the finite measure
//!
//! ```text
//! dd^c f = Σ_x ( Σ_{directions v at x} m_v · d_v f(x) ) δ_x
//! ```
//!
//! where `d_v f(x)` is the outgoing slope: positive when `f` increases away
//! from `x`. With this sign, super-harmonic means every interior mass is
//! non-positive.
//!
//! Direction weights are given per edge end. Interior points of an edge use
//! the smaller of its two end weights in both directions; when both ends
//! agree (the usual case) every edge contributes zero net mass.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::rational::{fmt_decimal, fmt_q, int, Q};
use crate::tropical::{Affine, Interval, TropicalError, TropicalPL};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("duplicate vertex name {0}")]
    DuplicateVertex(String),
    #[error("edge lengths must be positive, got {0}")]
    NonPositiveLength(String),
    #[error("self-loops are not supported (vertex {0})")]
    SelfLoop(String),
    #[error("direction weights must be positive integers")]
    ZeroWeight,
    #[error("function has {got} vertex values, graph has {expected} vertices")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("edge {0}: breakpoints must lie strictly inside the edge in increasing order")]
    BadBreakpoints(usize),
    #[error("missing boundary value for vertex {0}")]
    MissingBoundaryValue(String),
    #[error("ill-posed Dirichlet problem: a component has no boundary vertex")]
    IllPosed,
    #[error("value given for interior vertex {0}")]
    NotBoundary(String),
    #[error("invalid slope threshold {0}: must be positive")]
    InvalidSlopeThreshold(String),
    #[error(transparent)]
    Tropical(#[from] TropicalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vertex {
    pub name: String,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: Q,
    pub weight_u: u32,
    pub weight_v: u32,
}

impl Edge {
    pub fn interior_weight(&self) -> u32 {
        self.weight_u.min(self.weight_v)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct MetrizedGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
}

impl MetrizedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: impl Into<String>, boundary: bool) -> Result<usize, GraphError> {
        let name = name.into();
        if self.vertices.iter().any(|v| v.name == name) {
            return Err(GraphError::DuplicateVertex(name));
        }
        self.vertices.push(Vertex { name, boundary });
        Ok(self.vertices.len() - 1)
    }

    pub fn add_edge(&mut self, u: usize, v: usize, length: Q) -> Result<usize, GraphError> {
        self.add_weighted_edge(u, v, length, 1, 1)
    }

    pub fn add_weighted_edge(
        &mut self,
        u: usize,
        v: usize,
        length: Q,
        weight_u: u32,
        weight_v: u32,
    ) -> Result<usize, GraphError> {
        for x in [u, v] {
            if x >= self.vertices.len() {
                return Err(GraphError::UnknownVertex(x.to_string()));
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop(self.vertices[u].name.clone()));
        }
        if !length.is_positive() {
            return Err(GraphError::NonPositiveLength(fmt_q(&length)));
        }
        if weight_u == 0 || weight_v == 0 {
            return Err(GraphError::ZeroWeight);
        }
        self.edges.push(Edge {
            u,
            v,
            length,
            weight_u,
            weight_v,
        });
        Ok(self.edges.len() - 1)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_index(&self, name: &str) -> Result<usize, GraphError> {
        self.vertices
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| GraphError::UnknownVertex(name.to_string()))
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.vertices[v].boundary
    }

    /// Connected components as vertex lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        comp.push(y);
                        queue.push_back(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    fn location_name(&self, loc: &Location) -> String {
        match loc {
            Location::Vertex(v) => self.vertices[*v].name.clone(),
            Location::Edge { edge, pos } => {
                let e = &self.edges[*edge];
                format!(
                    "{}-{}@{}",
                    self.vertices[e.u].name,
                    self.vertices[e.v].name,
                    fmt_q(pos)
                )
            }
        }
    }
}

/// A point of the graph: a vertex, or a point at distance `pos` from the
/// `u` end of an edge with `0 < pos < length`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Location {
    Vertex(usize),
    Edge { edge: usize, pos: Q },
}

/// Continuous PL function on a metrized graph. Each edge carries its
/// restriction as a [`TropicalPL`] on `[0, length]`, parametrised from `u`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphPL {
    vertex_values: Vec<Q>,
    edge_functions: Vec<TropicalPL>,
}

impl GraphPL {
    /// Linear along every edge.
    pub fn linear(g: &MetrizedGraph, vertex_values: Vec<Q>) -> Result<Self, GraphError> {
        let bps = vec![Vec::new(); g.edges().len()];
        Self::new(g, vertex_values, bps)
    }

    /// `breakpoints[e]` lists `(position, value)` pairs strictly inside edge
    /// `e`, measured from its `u` end.
    pub fn new(
        g: &MetrizedGraph,
        vertex_values: Vec<Q>,
        breakpoints: Vec<Vec<(Q, Q)>>,
    ) -> Result<Self, GraphError> {
        if vertex_values.len() != g.vertices().len() {
            return Err(GraphError::ShapeMismatch {
                expected: g.vertices().len(),
                got: vertex_values.len(),
            });
        }
        if breakpoints.len() != g.edges().len() {
            return Err(GraphError::ShapeMismatch {
                expected: g.edges().len(),
                got: breakpoints.len(),
            });
        }
        let mut edge_functions = Vec::with_capacity(g.edges().len());
        for (i, (e, bps)) in g.edges().iter().zip(breakpoints).enumerate() {
            let mut knots = vec![(Q::zero(), vertex_values[e.u].clone())];
            knots.extend(bps);
            knots.push((e.length.clone(), vertex_values[e.v].clone()));
            if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(GraphError::BadBreakpoints(i));
            }
            let pieces = knots
                .windows(2)
                .map(|w| {
                    let slope = (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0);
                    let intercept = &w[0].1 - &slope * &w[0].0;
                    Affine::new(slope, intercept)
                })
                .collect();
            let cuts = knots[1..knots.len() - 1].iter().map(|k| k.0.clone()).collect();
            let domain = Interval::closed(Q::zero(), e.length.clone())?;
            edge_functions.push(TropicalPL::from_pieces(domain, cuts, pieces)?);
        }
        Ok(GraphPL {
            vertex_values,
            edge_functions,
        })
    }

    pub fn vertex_value(&self, v: usize) -> &Q {
        &self.vertex_values[v]
    }

    pub fn vertex_values(&self) -> &[Q] {
        &self.vertex_values
    }

    pub fn edge_function(&self, e: usize) -> &TropicalPL {
        &self.edge_functions[e]
    }

    pub fn eval(&self, loc: &Location) -> Result<Q, GraphError> {
        Ok(match loc {
            Location::Vertex(v) => self.vertex_values[*v].clone(),
            Location::Edge { edge, pos } => self.edge_functions[*edge].eval(pos)?,
        })
    }

    /// Pointwise minimum, with crossings inside edges added as breakpoints.
    pub fn pointwise_min(&self, other: &GraphPL) -> Result<GraphPL, GraphError> {
        Ok(GraphPL {
            vertex_values: self
                .vertex_values
                .iter()
                .zip(&other.vertex_values)
                .map(|(a, b)| a.clone().min(b.clone()))
                .collect(),
            edge_functions: self
                .edge_functions
                .iter()
                .zip(&other.edge_functions)
                .map(|(f, g)| f.pointwise_min(g))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Every interior point of every edge has two finite one-sided slopes.
    pub fn one_sided_slopes(&self, edge: usize, pos: &Q) -> Result<(Q, Q), GraphError> {
        Ok(self.edge_functions[edge].one_sided_slopes(pos)?)
    }
}

/// Finite signed measure with distinct locations and nonzero masses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PointMeasure {
    masses: BTreeMap<Location, Q>,
}

impl PointMeasure {
    fn add(&mut self, loc: Location, mass: Q) {
        if mass.is_zero() {
            return;
        }
        let entry = self.masses.entry(loc.clone()).or_insert_with(Q::zero);
        *entry += mass;
        if entry.is_zero() {
            self.masses.remove(&loc);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Location, &Q)> {
        self.masses.iter()
    }

    pub fn mass_at(&self, loc: &Location) -> Q {
        self.masses.get(loc).cloned().unwrap_or_else(Q::zero)
    }

    pub fn total_mass(&self) -> Q {
        self.masses.values().fold(Q::zero(), |a, b| a + b)
    }

    /// TSV with columns `location`, `mass` (exact), `mass_decimal`.
    pub fn to_tsv(&self, g: &MetrizedGraph) -> String {
        let mut out = String::from("location\tmass\tmass_decimal\n");
        for (loc, m) in &self.masses {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                g.location_name(loc),
                fmt_q(m),
                fmt_decimal(m)
            ));
        }
        out
    }
}

/// `dd^c f` as a point measure. Boundary vertices carry masses too.
pub fn laplacian(g: &MetrizedGraph, f: &GraphPL) -> PointMeasure {
    let mut out = PointMeasure::default();
    for (i, e) in g.edges().iter().enumerate() {
        let fe = f.edge_function(i);
        let slopes = fe.slopes();
        let first = slopes.first().expect("nonempty").clone();
        let last = slopes.last().expect("nonempty").clone();
        out.add(Location::Vertex(e.u), int(e.weight_u as i64) * first);
        out.add(Location::Vertex(e.v), -(int(e.weight_v as i64) * last));
        let w = int(e.interior_weight() as i64);
        for (k, b) in fe.breakpoints().iter().enumerate() {
            let jump = &slopes[k + 1] - &slopes[k];
            out.add(
                Location::Edge {
                    edge: i,
                    pos: b.clone(),
                },
                &w * jump,
            );
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Harmonicity {
    Harmonic,
    Superharmonic,
    Subharmonic,
    Neither,
}

impl Harmonicity {
    /// Harmonic functions are in particular super-harmonic.
    pub fn is_superharmonic(self) -> bool {
        matches!(self, Harmonicity::Harmonic | Harmonicity::Superharmonic)
    }
}

impl fmt::Display for Harmonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Harmonicity::Harmonic => "harmonic",
            Harmonicity::Superharmonic => "superharmonic",
            Harmonicity::Subharmonic => "subharmonic",
            Harmonicity::Neither => "neither",
        })
    }
}

pub fn classify(g: &MetrizedGraph, f: &GraphPL, interior_only: bool) -> Harmonicity {
    let lap = laplacian(g, f);
    let relevant = lap.iter().filter(|(loc, _)| match loc {
        Location::Vertex(v) => !(interior_only && g.is_boundary(*v)),
        Location::Edge { .. } => true,
    });
    let (mut pos, mut neg) = (false, false);
    for (_, m) in relevant {
        pos |= m.is_positive();
        neg |= m.is_negative();
    }
    match (pos, neg) {
        (false, false) => Harmonicity::Harmonic,
        (false, true) => Harmonicity::Superharmonic,
        (true, false) => Harmonicity::Subharmonic,
        (true, true) => Harmonicity::Neither,
    }
}

/// Exact Gaussian elimination; `None` when the system is singular.
fn solve(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Q::one() / &a[col][col];
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] * &inv;
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    let mut x = vec![Q::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc -= &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}

/// The unique function that is linear on edges, takes the given values on
/// boundary vertices and has zero Laplacian mass at every interior vertex.
pub fn dirichlet_solve(
    g: &MetrizedGraph,
    boundary_values: &BTreeMap<usize, Q>,
) -> Result<GraphPL, GraphError> {
    for (&v, _) in boundary_values {
        if v >= g.vertices().len() {
            return Err(GraphError::UnknownVertex(v.to_string()));
        }
        if !g.is_boundary(v) {
            return Err(GraphError::NotBoundary(g.vertices()[v].name.clone()));
        }
    }
    for comp in g.components() {
        if !comp.iter().any(|&v| g.is_boundary(v)) {
            return Err(GraphError::IllPosed);
        }
    }
    let n = g.vertices().len();
    let mut values = vec![Q::zero(); n];
    let mut unknown = vec![None; n];
    let mut count = 0;
    for v in 0..n {
        if g.is_boundary(v) {
            values[v] = boundary_values
                .get(&v)
                .cloned()
                .ok_or_else(|| GraphError::MissingBoundaryValue(g.vertices()[v].name.clone()))?;
        } else {
            unknown[v] = Some(count);
            count += 1;
        }
    }
    // Row for interior x: Σ_e m_{x,e} (f(y) - f(x)) / len_e = 0.
    let mut a = vec![vec![Q::zero(); count]; count];
    let mut b = vec![Q::zero(); count];
    for e in g.edges() {
        for (x, y, w) in [(e.u, e.v, e.weight_u), (e.v, e.u, e.weight_v)] {
            let Some(row) = unknown[x] else { continue };
            let cond = int(w as i64) / &e.length;
            a[row][row] += &cond;
            match unknown[y] {
                Some(col) => a[row][col] -= &cond,
                None => b[row] += &cond * &values[y],
            }
        }
    }
    let x = solve(a, b).expect("irreducibly diagonally dominant system is nonsingular");
    for v in 0..n {
        if let Some(i) = unknown[v] {
            values[v] = x[i].clone();
        }
    }
    GraphPL::linear(g, values)
}

/// `⟨dd^c f, h⟩ = Σ_x (dd^c f)({x}) · h(x)`.
pub fn pairing(g: &MetrizedGraph, f: &GraphPL, h: &GraphPL) -> Result<Q, GraphError> {
    let mut acc = Q::zero();
    for (loc, m) in laplacian(g, f).iter() {
        acc += m * h.eval(loc)?;
    }
    Ok(acc)
}

/// Largest number of extra directions with slope at least `m` that a
/// super-harmonic function can have at a point whose two skeleton slopes
/// are `p1` and `p2`: `floor(max(0, -(p1 + p2) / m))`.
pub fn direction_count_bound(p1: &Q, p2: &Q, m: &Q) -> Result<u64, GraphError> {
    if !m.is_positive() {
        return Err(GraphError::InvalidSlopeThreshold(fmt_q(m)));
    }
    let r = -(p1 + p2) / m;
    if r.is_negative() {
        return Ok(0);
    }
    Ok(r.floor()
        .to_integer()
        .try_into()
        .expect("bound fits in u64"))
}

/// Star around an interior centre with one unit-length arm per slope; arm
/// `i` leaves the centre with outgoing slope `slopes[i]`. Leaves are
/// boundary vertices.
pub fn star(center_value: &Q, slopes: &[Q]) -> (MetrizedGraph, GraphPL) {
    let mut g = MetrizedGraph::new();
    let c = g.add_vertex("x", false).expect("fresh");
    let mut values = vec![center_value.clone()];
    for (i, s) in slopes.iter().enumerate() {
        let leaf = g.add_vertex(format!("v{}", i + 1), true).expect("fresh");
        g.add_edge(c, leaf, Q::one()).expect("valid edge");
        values.push(center_value + s);
    }
    let f = GraphPL::linear(&g, values).expect("shape matches");
    (g, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn path() -> MetrizedGraph {
        let mut g = MetrizedGraph::new();
        let a = g.add_vertex("a", true).unwrap();
        let x = g.add_vertex("x", false).unwrap();
        let b = g.add_vertex("b", true).unwrap();
        g.add_edge(a, x, int(1)).unwrap();
        g.add_edge(x, b, int(1)).unwrap();
        g
    }

    fn star_graph(weights: [u32; 3]) -> MetrizedGraph {
        let mut g = MetrizedGraph::new();
        let c = g.add_vertex("c", false).unwrap();
        for (i, w) in weights.iter().enumerate() {
            let l = g.add_vertex(format!("l{i}"), true).unwrap();
            g.add_weighted_edge(c, l, int(1), *w, 1).unwrap();
        }
        g
    }

    #[test]
    fn laplacian_on_path() {
        let g = path();
        let f = GraphPL::linear(&g, vec![int(0), int(1), int(0)]).unwrap();
        let lap = laplacian(&g, &f);
        assert_eq!(lap.mass_at(&Location::Vertex(0)), int(1));
        assert_eq!(lap.mass_at(&Location::Vertex(1)), int(-2));
        assert_eq!(lap.mass_at(&Location::Vertex(2)), int(1));
        assert_eq!(classify(&g, &f, true), Harmonicity::Superharmonic);
        assert_eq!(classify(&g, &f, false), Harmonicity::Neither);
        assert_eq!(pairing(&g, &f, &f).unwrap(), int(-2));
    }

    #[test]
    fn constant_has_empty_laplacian() {
        let g = path();
        let f = GraphPL::linear(&g, vec![int(4); 3]).unwrap();
        assert!(laplacian(&g, &f).is_empty());
        assert_eq!(classify(&g, &f, false), Harmonicity::Harmonic);
    }

    #[test]
    fn equal_slopes_telescope() {
        let g = path();
        let f = GraphPL::linear(&g, vec![int(0), int(3), int(6)]).unwrap();
        let lap = laplacian(&g, &f);
        assert_eq!(lap.iter().count(), 2);
        assert_eq!(lap.mass_at(&Location::Vertex(0)), int(3));
        assert_eq!(lap.mass_at(&Location::Vertex(2)), int(-3));
    }

    #[test]
    fn edge_breakpoints_carry_mass() {
        let g = path();
        let f = GraphPL::new(
            &g,
            vec![int(0), int(0), int(0)],
            vec![vec![(ratio(1, 2), int(1))], vec![]],
        )
        .unwrap();
        let lap = laplacian(&g, &f);
        assert_eq!(lap.mass_at(&Location::Edge { edge: 0, pos: ratio(1, 2) }), int(-4));
        assert_eq!(lap.total_mass(), int(0));
        assert_eq!(f.one_sided_slopes(0, &ratio(1, 2)).unwrap(), (int(2), int(-2)));
        assert_eq!(
            lap.to_tsv(&g),
            "location\tmass\tmass_decimal\na\t2\t2.000000\nx\t2\t2.000000\na-x@1/2\t-4\t-4.000000\n"
        );
    }

    #[test]
    fn mixed_signs_is_neither() {
        let mut g = MetrizedGraph::new();
        let names = ["a", "x", "y", "b"];
        for (i, n) in names.iter().enumerate() {
            g.add_vertex(*n, i == 0 || i == 3).unwrap();
        }
        for i in 0..3 {
            g.add_edge(i, i + 1, int(1)).unwrap();
        }
        let f = GraphPL::linear(&g, vec![int(0), int(1), int(0), int(1)]).unwrap();
        assert_eq!(classify(&g, &f, true), Harmonicity::Neither);
    }

    #[test]
    fn dirichlet_star_examples() {
        let g = star_graph([1, 1, 1]);
        let bv = BTreeMap::from([(1, int(0)), (2, int(0)), (3, int(3))]);
        let sol = dirichlet_solve(&g, &bv).unwrap();
        assert_eq!(sol.vertex_value(0), &int(1));
        assert_eq!(classify(&g, &sol, true), Harmonicity::Harmonic);

        let g = star_graph([1, 1, 2]);
        let sol = dirichlet_solve(&g, &bv).unwrap();
        assert_eq!(sol.vertex_value(0), &ratio(3, 2));
        assert_eq!(classify(&g, &sol, true), Harmonicity::Harmonic);

        let bv = BTreeMap::from([(1, int(7)), (2, int(7)), (3, int(7))]);
        let sol = dirichlet_solve(&g, &bv).unwrap();
        assert!(sol.vertex_values().iter().all(|v| v == &int(7)));
    }

    #[test]
    fn dirichlet_errors() {
        let mut g = MetrizedGraph::new();
        let a = g.add_vertex("a", false).unwrap();
        let b = g.add_vertex("b", false).unwrap();
        g.add_edge(a, b, int(1)).unwrap();
        assert_eq!(dirichlet_solve(&g, &BTreeMap::new()), Err(GraphError::IllPosed));

        let g = path();
        assert_eq!(
            dirichlet_solve(&g, &BTreeMap::from([(0, int(1))])),
            Err(GraphError::MissingBoundaryValue("b".into()))
        );
        assert_eq!(
            dirichlet_solve(&g, &BTreeMap::from([(0, int(1)), (1, int(0)), (2, int(0))])),
            Err(GraphError::NotBoundary("x".into()))
        );
    }

    #[test]
    fn graph_construction_errors() {
        let mut g = MetrizedGraph::new();
        let a = g.add_vertex("a", true).unwrap();
        assert_eq!(g.add_vertex("a", false), Err(GraphError::DuplicateVertex("a".into())));
        assert_eq!(g.add_edge(a, a, int(1)), Err(GraphError::SelfLoop("a".into())));
        let b = g.add_vertex("b", true).unwrap();
        assert!(matches!(g.add_edge(a, b, int(0)), Err(GraphError::NonPositiveLength(_))));
        assert_eq!(g.add_weighted_edge(a, b, int(1), 0, 1), Err(GraphError::ZeroWeight));
        assert!(GraphPL::linear(&g, vec![int(1)]).is_err());
    }

    #[test]
    fn direction_count_bound_examples() {
        assert_eq!(direction_count_bound(&int(-2), &int(0), &ratio(1, 2)), Ok(4));
        assert_eq!(direction_count_bound(&int(0), &int(0), &int(1)), Ok(0));
        assert_eq!(direction_count_bound(&int(-1), &int(1), &ratio(7, 3)), Ok(0));
        assert_eq!(direction_count_bound(&int(3), &int(1), &int(1)), Ok(0));
        assert!(matches!(
            direction_count_bound(&int(-1), &int(0), &int(0)),
            Err(GraphError::InvalidSlopeThreshold(_))
        ));
    }

    #[test]
    fn direction_count_witness_exhaustive() {
        // Skeleton slopes p1, p2 plus k off-directions of slope m.
        for (p1, p2, m) in [
            (int(-2), int(0), ratio(1, 2)),
            (int(-3), int(1), int(1)),
            (ratio(-5, 2), ratio(-1, 2), ratio(2, 3)),
        ] {
            let bound = direction_count_bound(&p1, &p2, &m).unwrap();
            for k in 1..=bound + 3 {
                let mut slopes = vec![p1.clone(), p2.clone()];
                slopes.extend(std::iter::repeat(m.clone()).take(k as usize));
                let (g, f) = star(&int(0), &slopes);
                let verdict = classify(&g, &f, true);
                assert_eq!(verdict.is_superharmonic(), k <= bound, "k={k} bound={bound}");
            }
        }
    }

    fn random_graph() -> impl Strategy<Value = (MetrizedGraph, GraphPL, GraphPL)> {
        (2usize..7)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    prop::collection::vec((0usize..100, 1i64..5, 1i64..4, 1u32..3), n - 1..n + 3),
                    prop::collection::vec(-6i64..7, n),
                    prop::collection::vec(-6i64..7, n),
                    prop::collection::vec(any::<bool>(), n),
                    prop::collection::vec((0i64..7, -5i64..6), 0..6),
                )
            })
            .prop_map(|(n, edges, fv, hv, bd, bps)| {
                let mut g = MetrizedGraph::new();
                for i in 0..n {
                    g.add_vertex(format!("v{i}"), bd[i]).unwrap();
                }
                // spanning path first so the graph is connected
                for (i, (pick, num, den, w)) in edges.iter().enumerate() {
                    let (u, v) = if i + 1 < n { (i, i + 1) } else { (pick % n, (pick / 7 + 1 + pick % n) % n) };
                    if u == v {
                        continue;
                    }
                    g.add_weighted_edge(u, v, ratio(*num, *den), *w, *w).unwrap();
                }
                let mut edge_bps = vec![Vec::new(); g.edges().len()];
                for (k, (frac, val)) in bps.iter().enumerate() {
                    let e = k % g.edges().len();
                    let len = g.edges()[e].length.clone();
                    let pos = &len * ratio(*frac + 1, 8);
                    if edge_bps[e].is_empty() {
                        edge_bps[e].push((pos, int(*val)));
                    }
                }
                let to_q = |v: &Vec<i64>| v.iter().map(|x| int(*x)).collect::<Vec<_>>();
                let f = GraphPL::new(&g, to_q(&fv), edge_bps).unwrap();
                let h = GraphPL::linear(&g, to_q(&hv)).unwrap();
                (g, f, h)
            })
    }

    proptest! {
        #[test]
        fn total_mass_is_zero((g, f, _h) in random_graph()) {
            prop_assert_eq!(laplacian(&g, &f).total_mass(), Q::zero());
        }

        #[test]
        fn pairing_is_symmetric((g, f, h) in random_graph()) {
            prop_assert_eq!(pairing(&g, &f, &h).unwrap(), pairing(&g, &h, &f).unwrap());
            prop_assert_eq!(pairing(&g, &f, &GraphPL::linear(&g, vec![Q::one(); g.vertices().len()]).unwrap()).unwrap(), Q::zero());
        }

        #[test]
        fn dirichlet_is_harmonic_with_max_principle((g, f, _h) in random_graph()) {
            prop_assume!(g.vertices().iter().any(|v| v.boundary));
            let bv: BTreeMap<usize, Q> = (0..g.vertices().len())
                .filter(|&v| g.is_boundary(v))
                .map(|v| (v, f.vertex_value(v).clone()))
                .collect();
            let sol = dirichlet_solve(&g, &bv).unwrap();
            prop_assert_eq!(classify(&g, &sol, true), Harmonicity::Harmonic);
            let lo = bv.values().min().unwrap();
            let hi = bv.values().max().unwrap();
            for v in sol.vertex_values() {
                prop_assert!(lo <= v && v <= hi);
            }
        }

        #[test]
        fn energy_sign_for_boundary_vanishing((g, f, _h) in random_graph()) {
            // zero on the boundary: ⟨dd^c f, f⟩ = -Σ_e w ∫ f'^2 ≤ 0
            let vals: Vec<Q> = (0..g.vertices().len())
                .map(|v| if g.is_boundary(v) { Q::zero() } else { f.vertex_value(v).clone() })
                .collect();
            let f0 = GraphPL::linear(&g, vals).unwrap();
            prop_assert!(!pairing(&g, &f0, &f0).unwrap().is_positive());
        }

        #[test]
        fn min_of_superharmonic_is_superharmonic(
            a in prop::collection::vec(-4i64..5, 5),
            b in prop::collection::vec(-4i64..5, 5),
        ) {
            // concave functions on a path are super-harmonic in the interior
            let mut g = MetrizedGraph::new();
            for i in 0..6 {
                g.add_vertex(format!("v{i}"), i == 0 || i == 5).unwrap();
            }
            for i in 0..5 {
                g.add_edge(i, i + 1, int(1)).unwrap();
            }
            let concave = |slopes: &Vec<i64>| {
                let mut s = slopes.clone();
                s.sort_unstable_by(|x, y| y.cmp(x));
                let mut vals = vec![int(0)];
                for d in s {
                    let last = vals.last().unwrap().clone();
                    vals.push(last + int(d));
                }
                GraphPL::linear(&g, vals).unwrap()
            };
            let f = concave(&a);
            let h = concave(&b);
            prop_assert!(classify(&g, &f, true).is_superharmonic());
            prop_assert!(classify(&g, &h, true).is_superharmonic());
            let m = f.pointwise_min(&h).unwrap();
            prop_assert!(classify(&g, &m, true).is_superharmonic());
            for e in 0..5 {
                let (l, r) = m.one_sided_slopes(e, &ratio(1, 3)).unwrap();
                prop_assert!(l >= r);
            }
        }
    }
}
