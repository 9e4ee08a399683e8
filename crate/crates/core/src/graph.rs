//! Lazily evaluated infinite graphs.
//!
//! A graph is a neighbor oracle on coordinate-like vertex ids. Nothing is
//! stored: balls and windows are materialized on demand by breadth-first
//! search, so a window is always a restriction of the same infinite object.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use num_integer::Roots;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational;
use crate::rng;

/// Default upper bound on the radius of a materialized ball.
pub const DEFAULT_MAX_RADIUS: u32 = 24;

/// A vertex: up to three integer coordinates plus a decoration tag.
///
/// The derived order is lexicographic on `(coords, tag)`; every window and
/// finite section enumerates vertices in this order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId {
    coords: [i32; 3],
    tag: u16,
    dim: u8,
}

impl VertexId {
    pub fn d1(x: i32) -> Self {
        VertexId { coords: [x, 0, 0], tag: 0, dim: 1 }
    }

    pub fn d2(x: i32, y: i32) -> Self {
        VertexId { coords: [x, y, 0], tag: 0, dim: 2 }
    }

    pub fn d3(x: i32, y: i32, z: i32) -> Self {
        VertexId { coords: [x, y, z], tag: 0, dim: 3 }
    }

    /// A vertex attached to the 1-D backbone site `x` (tag 0 is the site itself).
    pub fn slot(x: i32, tag: u16) -> Self {
        VertexId { coords: [x, 0, 0], tag, dim: 1 }
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    pub fn tag(&self) -> u16 {
        self.tag
    }

    pub fn x(&self) -> i32 {
        self.coords[0]
    }

    fn offset(&self, axis: usize, delta: i32) -> Self {
        let mut v = *self;
        v.coords[axis] += delta;
        v.tag = 0;
        v
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        if self.tag != 0 {
            write!(f, ";{}", self.tag)?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    /// Nearest-neighbor lattice graph of ℤᵈ.
    Lattice { dim: u8 },
    /// ℤ² with the diagonal `(a,b)–(a+1,b+1)` present independently with
    /// probability `p_num/p_den`.
    Decorated { p_num: u64, p_den: u64, seed: u64 },
    /// ℤ backbone where every site carries `k` leaves.
    Pendant { k: u16 },
    /// Path graph on ℤ whose sites carry the letters of the two-sided
    /// Fibonacci word.
    Substitution,
}

/// JSON form of a generator: `{"generator": ..., "params": {...}, "seed": n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDescriptor {
    pub generator: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InfiniteGraph {
    generator: Generator,
    max_radius: u32,
}

/// The induced subgraph on `{u : d(u, root) ≤ radius}`.
///
/// Vertices are sorted by `(distance, id)`, so the root is always index 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedBall {
    pub root: VertexId,
    pub radius: u32,
    pub vertices: Vec<VertexId>,
    pub distances: Vec<u32>,
    pub labels: Vec<u8>,
    pub adjacency: Vec<Vec<usize>>,
}

/// A finite box of vertices with its canonical enumeration.
#[derive(Clone, Debug)]
pub struct Window {
    level: u32,
    vertices: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
}

/// Maximal size of an `r`-ball in any graph of degree at most `d`.
pub fn tree_ball_bound(r: u32, d: usize) -> u128 {
    let d = d as u128;
    let mut total: u128 = 1;
    let mut shell = d;
    for _ in 0..r {
        total = total.saturating_add(shell);
        shell = shell.saturating_mul(d.saturating_sub(1));
    }
    total
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `floor(m · (3 − √5)/2)`, exactly.
fn floor_times_alpha(m: i64) -> i64 {
    let m2 = (m as i128) * (m as i128);
    let s = (5 * m2 as u128).sqrt() as i128;
    // floor(-√5·m)
    let floor_neg = match m.signum() {
        0 => 0,
        1 => -s - 1,
        _ => s,
    };
    (3 * m as i128 + floor_neg).div_euclid(2) as i64
}

impl Generator {
    fn name(&self) -> &'static str {
        match self {
            Generator::Lattice { .. } => "lattice",
            Generator::Decorated { .. } => "decorated_lattice",
            Generator::Pendant { .. } => "pendant_chain",
            Generator::Substitution => "substitution_chain",
        }
    }
}

impl InfiniteGraph {
    fn new(generator: Generator) -> Self {
        InfiniteGraph { generator, max_radius: DEFAULT_MAX_RADIUS }
    }

    /// ℤᵈ for `dim ∈ {1, 2, 3}`.
    pub fn lattice(dim: u32) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedGenerator(format!("lattice of dimension {dim} (supported: 1, 2, 3)")));
        }
        Ok(Self::new(Generator::Lattice { dim: dim as u8 }))
    }

    /// ℤ² with random diagonals, `p = num/den`.
    pub fn decorated_lattice(num: u64, den: u64, seed: u64) -> Result<Self> {
        if den == 0 || num > den {
            return Err(Error::InvalidArgument(format!("decoration probability {num}/{den} is not in [0, 1]")));
        }
        let g = num_integer::gcd(num, den);
        Ok(Self::new(Generator::Decorated { p_num: num / g, p_den: den / g, seed }))
    }

    pub fn pendant_chain(k: u32) -> Result<Self> {
        if k < 2 || k > u16::MAX as u32 - 1 {
            return Err(Error::InvalidArgument(format!("pendant chain needs k >= 2, got {k}")));
        }
        Ok(Self::new(Generator::Pendant { k: k as u16 }))
    }

    pub fn substitution_chain() -> Self {
        Self::new(Generator::Substitution)
    }

    pub fn from_descriptor(desc: &GraphDescriptor) -> Result<Self> {
        let int_param = |key: &str| -> Result<u64> {
            desc.params
                .get(key)
                .and_then(|v| v.as_u64())
                .ok_or_else(|| Error::InvalidArgument(format!("missing integer param {key:?}")))
        };
        match desc.generator.as_str() {
            "lattice" => Self::lattice(int_param("dim")? as u32),
            "decorated_lattice" => {
                let p = match desc.params.get("p") {
                    Some(serde_json::Value::String(s)) => rational::parse(s)?,
                    Some(serde_json::Value::Number(n)) => rational::parse(&n.to_string())?,
                    _ => return Err(Error::InvalidArgument("missing param \"p\"".into())),
                };
                let (num, den) = (p.numer().to_u64(), p.denom().to_u64());
                match (num, den) {
                    (Some(num), Some(den)) => Self::decorated_lattice(num, den, desc.seed),
                    _ if p.numer().is_zero() => Self::decorated_lattice(0, 1, desc.seed),
                    _ => Err(Error::InvalidArgument(format!(
                        "decoration probability {} is not in [0, 1]",
                        rational::to_string(&p)
                    ))),
                }
            }
            "pendant_chain" => Self::pendant_chain(int_param("k")? as u32),
            "substitution_chain" => Ok(Self::substitution_chain()),
            other => Err(Error::UnsupportedGenerator(other.to_string())),
        }
    }

    pub fn descriptor(&self) -> GraphDescriptor {
        let mut params = BTreeMap::new();
        let mut seed = 0;
        match &self.generator {
            Generator::Lattice { dim } => {
                params.insert("dim".into(), (*dim).into());
            }
            Generator::Decorated { p_num, p_den, seed: s } => {
                params.insert("p".into(), format!("{p_num}/{p_den}").into());
                seed = *s;
            }
            Generator::Pendant { k } => {
                params.insert("k".into(), (*k).into());
            }
            Generator::Substitution => {}
        }
        GraphDescriptor { generator: self.generator.name().into(), params, seed }
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn with_max_radius(mut self, r: u32) -> Self {
        self.max_radius = r;
        self
    }

    pub fn max_radius(&self) -> u32 {
        self.max_radius
    }

    /// Coordinate dimension of vertex ids.
    pub fn dim(&self) -> usize {
        match self.generator {
            Generator::Lattice { dim } => dim as usize,
            Generator::Decorated { .. } => 2,
            Generator::Pendant { .. } | Generator::Substitution => 1,
        }
    }

    pub fn degree_bound(&self) -> usize {
        match self.generator {
            Generator::Lattice { dim } => 2 * dim as usize,
            Generator::Decorated { .. } => 6,
            Generator::Pendant { k } => k as usize + 2,
            Generator::Substitution => 2,
        }
    }

    /// Is the diagonal `(a,b)–(a+1,b+1)` present? Always false off the
    /// decorated lattice.
    pub fn has_diagonal(&self, a: i32, b: i32) -> bool {
        match self.generator {
            Generator::Decorated { p_num, p_den, seed } => rng::bernoulli(seed, &[a as i64, b as i64], p_num, p_den),
            _ => false,
        }
    }

    /// Letter of the two-sided Fibonacci word at site `n` (`'a'` or `'b'`).
    pub fn fibonacci_letter(n: i64) -> char {
        if floor_times_alpha(n + 2) - floor_times_alpha(n + 1) == 1 {
            'b'
        } else {
            'a'
        }
    }

    /// Vertex decoration used by pattern codes; 0 unless the generator
    /// carries letters.
    pub fn label(&self, v: VertexId) -> u8 {
        match self.generator {
            Generator::Substitution => (Self::fibonacci_letter(v.x() as i64) == 'b') as u8,
            _ => 0,
        }
    }

    pub fn letter(&self, v: VertexId) -> Option<char> {
        match self.generator {
            Generator::Substitution => Some(Self::fibonacci_letter(v.x() as i64)),
            _ => None,
        }
    }

    /// Sorted neighbor list.
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        match self.generator {
            Generator::Lattice { dim } => {
                let mut out = Vec::with_capacity(2 * dim as usize);
                for axis in 0..dim as usize {
                    out.push(v.offset(axis, -1));
                    out.push(v.offset(axis, 1));
                }
                out.sort_unstable();
                out
            }
            Generator::Substitution => vec![v.offset(0, -1), v.offset(0, 1)],
            Generator::Decorated { .. } => {
                let [a, b, _] = v.coords;
                let mut out = Vec::with_capacity(6);
                if self.has_diagonal(a - 1, b - 1) {
                    out.push(VertexId::d2(a - 1, b - 1));
                }
                out.push(VertexId::d2(a - 1, b));
                out.push(VertexId::d2(a, b - 1));
                out.push(VertexId::d2(a, b + 1));
                out.push(VertexId::d2(a + 1, b));
                if self.has_diagonal(a, b) {
                    out.push(VertexId::d2(a + 1, b + 1));
                }
                out
            }
            Generator::Pendant { k } => {
                let x = v.x();
                if v.tag != 0 {
                    return vec![VertexId::slot(x, 0)];
                }
                let mut out = Vec::with_capacity(k as usize + 2);
                out.push(VertexId::slot(x - 1, 0));
                out.extend((1..=k).map(|t| VertexId::slot(x, t)));
                out.push(VertexId::slot(x + 1, 0));
                out
            }
        }
    }

    /// A lower bound on `d(x, y)` computed from coordinates alone (exact for
    /// every generator except the decorated lattice).
    pub fn distance_lower_bound(&self, x: VertexId, y: VertexId) -> u32 {
        let diffs = || x.coords.iter().zip(y.coords.iter()).map(|(a, b)| (*a as i64 - *b as i64).unsigned_abs());
        let l1: u64 = diffs().sum();
        match self.generator {
            Generator::Lattice { .. } | Generator::Substitution => l1 as u32,
            Generator::Decorated { .. } => {
                let linf = diffs().max().unwrap_or(0);
                linf.max(l1.div_ceil(2)) as u32
            }
            Generator::Pendant { .. } => {
                if x == y {
                    0
                } else if x.x() == y.x() {
                    if x.tag == 0 || y.tag == 0 {
                        1
                    } else {
                        2
                    }
                } else {
                    l1 as u32 + (x.tag != 0) as u32 + (y.tag != 0) as u32
                }
            }
        }
    }

    /// Exact graph distance if it is at most `limit`.
    pub fn distance_within(&self, x: VertexId, y: VertexId, limit: u32) -> Option<u32> {
        if self.distance_lower_bound(x, y) > limit {
            return None;
        }
        if x == y {
            return Some(0);
        }
        let mut seen = HashSet::from([x]);
        let mut frontier = vec![x];
        for d in 1..=limit {
            let mut next = Vec::new();
            for u in frontier {
                for w in self.neighbors(u) {
                    if w == y {
                        return Some(d);
                    }
                    if seen.insert(w) {
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        None
    }

    /// Largest `r`-ball that occurs in the graph.
    pub fn max_ball_size(&self, r: u32) -> u128 {
        let r64 = r as u64;
        match self.generator {
            Generator::Lattice { dim } => {
                (0..=dim as u64).map(|i| (1u128 << i) * binomial(dim as u64, i) * binomial(r64, i)).sum()
            }
            Generator::Substitution => 2 * r as u128 + 1,
            Generator::Pendant { k } => {
                if r == 0 {
                    1
                } else {
                    (2 * r as u128 + 1) + k as u128 * (2 * r as u128 - 1)
                }
            }
            // adding diagonals only shrinks distances, so the all-diagonal
            // (triangular) lattice is extremal once any diagonal can occur
            Generator::Decorated { p_num, .. } => {
                if p_num == 0 {
                    1 + 2 * r as u128 * (r as u128 + 1)
                } else {
                    1 + 3 * r as u128 * (r as u128 + 1)
                }
            }
        }
    }

    pub fn ball(&self, v: VertexId, r: u32) -> Result<RootedBall> {
        if r > self.max_radius {
            return Err(Error::limit("ball radius", self.max_radius as usize, r as usize));
        }
        let mut dist: HashMap<VertexId, u32> = HashMap::from([(v, 0)]);
        let mut order = vec![v];
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            if du == r {
                continue;
            }
            for w in self.neighbors(u) {
                if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(w) {
                    slot.insert(du + 1);
                    order.push(w);
                    queue.push_back(w);
                }
            }
        }
        order.sort_by_key(|u| (dist[u], *u));
        let local: HashMap<VertexId, usize> = order.iter().enumerate().map(|(i, u)| (*u, i)).collect();
        let adjacency = order
            .iter()
            .map(|u| {
                let mut adj: Vec<usize> =
                    self.neighbors(*u).into_iter().filter_map(|w| local.get(&w).copied()).collect();
                adj.sort_unstable();
                adj
            })
            .collect();
        Ok(RootedBall {
            root: v,
            radius: r,
            distances: order.iter().map(|u| dist[u]).collect(),
            labels: order.iter().map(|u| self.label(*u)).collect(),
            vertices: order,
            adjacency,
        })
    }

    /// The box `[-n, n]ᵈ`, including all decorations attached to its sites.
    pub fn folner_window(&self, n: u32) -> Window {
        let n = n as i32;
        let mut vertices = Vec::new();
        match self.generator {
            Generator::Lattice { dim: 1 } | Generator::Substitution => {
                vertices.extend((-n..=n).map(VertexId::d1));
            }
            Generator::Lattice { dim: 2 } | Generator::Decorated { .. } => {
                for x in -n..=n {
                    vertices.extend((-n..=n).map(|y| VertexId::d2(x, y)));
                }
            }
            Generator::Lattice { .. } => {
                for x in -n..=n {
                    for y in -n..=n {
                        vertices.extend((-n..=n).map(|z| VertexId::d3(x, y, z)));
                    }
                }
            }
            Generator::Pendant { k } => {
                for x in -n..=n {
                    vertices.extend((0..=k).map(|t| VertexId::slot(x, t)));
                }
            }
        }
        Window::from_vertices(n as u32, vertices)
    }

    /// `{x ∈ Q : ∃ y ∉ Q with d(x, y) ≤ a}`, in window order.
    pub fn inner_boundary(&self, q: &Window, a: u32) -> Vec<VertexId> {
        // A shortest path from x to the complement stays inside Q until its
        // last step, so a BFS inside Q from the outer frontier gives d(x, V∖Q).
        let mut depth: Vec<Option<u32>> = vec![None; q.len()];
        let mut frontier = Vec::new();
        for (i, v) in q.vertices().iter().enumerate() {
            if self.neighbors(*v).iter().any(|w| !q.contains(*w)) {
                depth[i] = Some(1);
                frontier.push(i);
            }
        }
        for d in 2..=a {
            let mut next = Vec::new();
            for &i in &frontier {
                for w in self.neighbors(q.vertices()[i]) {
                    if let Some(j) = q.index_of(w) {
                        if depth[j].is_none() {
                            depth[j] = Some(d);
                            next.push(j);
                        }
                    }
                }
            }
            frontier = next;
        }
        q.vertices().iter().zip(depth).filter(|(_, d)| d.is_some_and(|d| d <= a)).map(|(v, _)| *v).collect()
    }

    /// Window as an edge list, one `"i j"` line per edge with `i < j`.
    pub fn edge_list_text(&self, q: &Window) -> String {
        let mut out = String::new();
        for (i, v) in q.vertices().iter().enumerate() {
            for w in self.neighbors(*v) {
                if let Some(j) = q.index_of(w) {
                    if j > i {
                        out.push_str(&format!("{i} {j}\n"));
                    }
                }
            }
        }
        out
    }
}

impl Window {
    pub fn from_vertices(level: u32, mut vertices: Vec<VertexId>) -> Self {
        vertices.sort_unstable();
        vertices.dedup();
        let index = vertices.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        Window { level, vertices, index }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.index.contains_key(&v)
    }
}

impl RootedBall {
    /// A rooted ball built from an abstract graph: vertex `root` becomes the
    /// root and distances are recomputed. Vertices unreachable from the root
    /// are dropped.
    pub fn from_adjacency(adjacency: &[Vec<usize>], labels: &[u8], root: usize) -> Self {
        let n = adjacency.len();
        let mut dist = vec![u32::MAX; n];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &w in &adjacency[u] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        let mut order: Vec<usize> = (0..n).filter(|&u| dist[u] != u32::MAX).collect();
        order.sort_by_key(|&u| (dist[u], u));
        let mut local = vec![usize::MAX; n];
        for (i, &u) in order.iter().enumerate() {
            local[u] = i;
        }
        let adjacency = order
            .iter()
            .map(|&u| {
                let mut adj: Vec<usize> = adjacency[u].iter().map(|&w| local[w]).collect();
                adj.sort_unstable();
                adj.dedup();
                adj
            })
            .collect();
        let radius = order.iter().map(|&u| dist[u]).max().unwrap_or(0);
        RootedBall {
            root: VertexId::d1(root as i32),
            radius,
            vertices: order.iter().map(|&u| VertexId::d1(u as i32)).collect(),
            distances: order.iter().map(|&u| dist[u]).collect(),
            labels: order.iter().map(|&u| labels.get(u).copied().unwrap_or(0)).collect(),
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.vertices.iter().position(|u| *u == v)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, adj)| adj.iter().filter(move |&&w| w > u).map(move |&w| (u, w)))
            .collect()
    }

    pub fn root_degree(&self) -> usize {
        self.adjacency[0].len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_neighbors() {
        let z = InfiniteGraph::lattice(1).unwrap();
        assert_eq!(z.neighbors(VertexId::d1(0)), vec![VertexId::d1(-1), VertexId::d1(1)]);
        let z2 = InfiniteGraph::lattice(2).unwrap();
        let v = VertexId::d2(3, -1);
        let nb = z2.neighbors(v);
        assert_eq!(nb.len(), 4);
        for w in nb {
            assert_eq!(z2.distance_lower_bound(v, w), 1);
        }
        assert_eq!(z2.ball(VertexId::d2(0, 0), 2).unwrap().len(), 13);
        assert!(matches!(InfiniteGraph::lattice(4), Err(Error::UnsupportedGenerator(_))));
        assert!(InfiniteGraph::lattice(0).is_err());
    }

    #[test]
    fn decorated_extremes() {
        let plain = InfiniteGraph::lattice(2).unwrap();
        let none = InfiniteGraph::decorated_lattice(0, 1, 9).unwrap();
        let all = InfiniteGraph::decorated_lattice(1, 1, 9).unwrap();
        for x in -5..5 {
            for y in -5..5 {
                let v = VertexId::d2(x, y);
                assert_eq!(none.neighbors(v), plain.neighbors(v));
                assert_eq!(all.neighbors(v).len(), 6);
            }
        }
        assert!(InfiniteGraph::decorated_lattice(3, 2, 0).is_err());
    }

    #[test]
    fn decorated_density_matches_p() {
        let g = InfiniteGraph::decorated_lattice(1, 2, 2024).unwrap();
        let n = 200;
        let hits = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| g.has_diagonal(a, b)).count();
        let total = (n * n) as f64;
        let se = (0.25 / total).sqrt();
        assert!((hits as f64 / total - 0.5).abs() <= 3.0 * se);
    }

    #[test]
    fn pendant_structure() {
        let g = InfiniteGraph::pendant_chain(2).unwrap();
        assert_eq!(g.neighbors(VertexId::slot(0, 0)).len(), 4);
        assert_eq!(g.neighbors(VertexId::slot(0, 1)), vec![VertexId::slot(0, 0)]);
        assert_eq!(g.degree_bound(), 4);
        let star = g.ball(VertexId::slot(0, 0), 1).unwrap();
        assert_eq!(star.len(), 5);
        assert_eq!(star.edges().len(), 4);
        assert!(InfiniteGraph::pendant_chain(1).is_err());
    }

    #[test]
    fn fibonacci_letters_match_substitution() {
        // iterate a -> ab, b -> a
        let mut word = String::from("a");
        while word.len() < 2000 {
            word = word.chars().map(|c| if c == 'a' { "ab" } else { "a" }).collect();
        }
        assert!(word.starts_with("abaab"));
        for (n, c) in word.chars().enumerate() {
            assert_eq!(InfiniteGraph::fibonacci_letter(n as i64), c, "site {n}");
        }
    }

    #[test]
    fn fibonacci_frequency_is_inverse_golden_ratio() {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        for n in [50i64, 500, 5000] {
            let a = (0..n).filter(|&i| InfiniteGraph::fibonacci_letter(i) == 'a').count();
            assert!((a as f64 / n as f64 - 1.0 / phi).abs() <= 2.0 / n as f64);
        }
        // the two-sided word is balanced on negative sites too
        let a = (-1000..0).filter(|&i| InfiniteGraph::fibonacci_letter(i) == 'a').count();
        assert!((a as f64 / 1000.0 - 1.0 / phi).abs() <= 2.0 / 1000.0);
    }

    #[test]
    fn substitution_edges_are_lattice_edges() {
        let s = InfiniteGraph::substitution_chain();
        let z = InfiniteGraph::lattice(1).unwrap();
        for x in -20..20 {
            assert_eq!(s.neighbors(VertexId::d1(x)), z.neighbors(VertexId::d1(x)));
        }
    }

    #[test]
    fn balls() {
        let z = InfiniteGraph::lattice(1).unwrap();
        let b0 = z.ball(VertexId::d1(4), 0).unwrap();
        assert_eq!(b0.len(), 1);
        assert!(b0.edges().is_empty());
        let b2 = z.ball(VertexId::d1(0), 2).unwrap();
        assert_eq!(b2.len(), 5);
        assert_eq!(b2.edges().len(), 4);
        assert_eq!(b2.vertices[0], VertexId::d1(0));
        assert_eq!(b2.distances, vec![0, 1, 1, 2, 2]);
        let capped = z.clone().with_max_radius(3);
        assert!(matches!(capped.ball(VertexId::d1(0), 4), Err(Error::LimitExceeded { .. })));
    }

    #[test]
    fn window_sizes() {
        assert_eq!(InfiniteGraph::lattice(1).unwrap().folner_window(3).len(), 7);
        assert_eq!(InfiniteGraph::lattice(2).unwrap().folner_window(2).len(), 25);
        assert_eq!(InfiniteGraph::lattice(3).unwrap().folner_window(1).len(), 27);
        let w = InfiniteGraph::pendant_chain(2).unwrap().folner_window(10);
        assert_eq!(w.len(), 63);
        let sorted = w.vertices().windows(2).all(|p| p[0] < p[1]);
        assert!(sorted);
    }

    #[test]
    fn boundaries() {
        let z = InfiniteGraph::lattice(1).unwrap();
        let q = z.folner_window(6);
        assert_eq!(z.inner_boundary(&q, 1), vec![VertexId::d1(-6), VertexId::d1(6)]);
        assert_eq!(z.inner_boundary(&q, 2).len(), 4);
        assert_eq!(z.inner_boundary(&q, 13).len(), q.len());
        let z2 = InfiniteGraph::lattice(2).unwrap();
        for n in 1..6 {
            let q = z2.folner_window(n);
            assert_eq!(z2.inner_boundary(&q, 1).len(), 8 * n as usize);
        }
        // pendant leaves of the extreme sites are at distance 2 from outside
        let p = InfiniteGraph::pendant_chain(2).unwrap();
        let q = p.folner_window(3);
        assert_eq!(p.inner_boundary(&q, 1).len(), 2);
        assert_eq!(p.inner_boundary(&q, 2).len(), 2 * 3 + 2);
    }

    #[test]
    fn max_ball_sizes_against_bfs() {
        let z2 = InfiniteGraph::lattice(2).unwrap();
        let z3 = InfiniteGraph::lattice(3).unwrap();
        let p = InfiniteGraph::pendant_chain(3).unwrap();
        let tri = InfiniteGraph::decorated_lattice(1, 1, 0).unwrap();
        for r in 0..5 {
            assert_eq!(z2.max_ball_size(r), z2.ball(VertexId::d2(0, 0), r).unwrap().len() as u128);
            assert_eq!(z3.max_ball_size(r), z3.ball(VertexId::d3(0, 0, 0), r).unwrap().len() as u128);
            assert_eq!(p.max_ball_size(r), p.ball(VertexId::slot(0, 0), r).unwrap().len() as u128);
            assert_eq!(tri.max_ball_size(r), tri.ball(VertexId::d2(0, 0), r).unwrap().len() as u128);
            assert!(p.max_ball_size(r) <= tree_ball_bound(r, p.degree_bound()));
        }
        assert_eq!(tree_ball_bound(1, 2), 3);
        assert_eq!(tree_ball_bound(1, 4), 5);
        assert_eq!(tree_ball_bound(2, 4), 17);
    }

    #[test]
    fn descriptor_round_trip() {
        for g in [
            InfiniteGraph::lattice(3).unwrap(),
            InfiniteGraph::decorated_lattice(2, 4, 77).unwrap(),
            InfiniteGraph::pendant_chain(5).unwrap(),
            InfiniteGraph::substitution_chain(),
        ] {
            let json = serde_json::to_string(&g.descriptor()).unwrap();
            let back: GraphDescriptor = serde_json::from_str(&json).unwrap();
            assert_eq!(InfiniteGraph::from_descriptor(&back).unwrap(), g);
        }
        let bad = GraphDescriptor { generator: "penrose".into(), params: BTreeMap::new(), seed: 0 };
        assert!(matches!(InfiniteGraph::from_descriptor(&bad), Err(Error::UnsupportedGenerator(_))));
    }

    #[test]
    fn edge_list_is_canonical() {
        let z2 = InfiniteGraph::lattice(2).unwrap();
        let q = z2.folner_window(1);
        let text = z2.edge_list_text(&q);
        assert_eq!(text.lines().count(), 12);
        let pairs: Vec<(usize, usize)> = text
            .lines()
            .map(|l| {
                let mut it = l.split(' ').map(|t| t.parse().unwrap());
                (it.next().unwrap(), it.next().unwrap())
            })
            .collect();
        assert!(pairs.windows(2).all(|w| w[0] < w[1]));
    }
}
