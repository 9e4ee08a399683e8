//! Canonical codes of rooted balls (r-patterns), pattern censuses and
//! frequency tables over Følner windows.
//!
//! Canonical forms come from color refinement followed by exhaustive
//! individualization: every leaf of the search tree is visited, the
//! lexicographically least adjacency encoding wins, and all leaves that reach
//! it are kept. Keeping them gives the root-fixing automorphism group and all
//! root-preserving isomorphisms between balls with equal codes.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{InfiniteGraph, RootedBall, VertexId, Window};
use crate::rational::Rational;

/// Largest ball (vertex count) accepted by [`canonical_form`].
pub const DEFAULT_BALL_LIMIT: usize = 64;

/// Cap on the number of search-tree leaves visited for one ball.
pub const LEAF_LIMIT: usize = 1 << 20;

/// Canonical encoding of a rooted ball up to root-preserving isomorphism.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternCode {
    radius: u32,
    bytes: Vec<u8>,
}

impl PatternCode {
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// The radius-0 pattern of a vertex carrying `label`.
    pub fn point(label: u8) -> Self {
        PatternCode { radius: 0, bytes: encode(&[label], &[0], &[0]) }
    }

    pub fn vertex_count(&self) -> usize {
        self.bytes[0] as usize
    }

    /// Labels, distances and adjacency rows (bitmasks) in canonical order.
    pub fn decode(&self) -> (Vec<u8>, Vec<u8>, Vec<u64>) {
        let n = self.vertex_count();
        let labels = self.bytes[1..1 + n].to_vec();
        let dists = self.bytes[1 + n..1 + 2 * n].to_vec();
        let bits = &self.bytes[1 + 2 * n..];
        let mut adj = vec![0u64; n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if bits[k / 8] >> (k % 8) & 1 == 1 {
                    adj[i] |= 1 << j;
                    adj[j] |= 1 << i;
                }
                k += 1;
            }
        }
        (labels, dists, adj)
    }

    pub fn root_degree(&self) -> usize {
        self.decode().2[0].count_ones() as usize
    }

    pub fn root_label(&self) -> u8 {
        self.bytes[1]
    }

    /// `"<radius>:<hex bytes>"`.
    pub fn to_hex(&self) -> String {
        let mut s = format!("{}:", self.radius);
        for b in &self.bytes {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed pattern code {s:?}"));
        let (r, hex) = s.split_once(':').ok_or_else(bad)?;
        let radius = r.parse().map_err(|_| bad())?;
        if hex.len() % 2 != 0 || hex.is_empty() {
            return Err(bad());
        }
        let bytes = (0..hex.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad()))
            .collect::<Result<Vec<u8>>>()?;
        let n = bytes[0] as usize;
        if bytes.len() != 1 + 2 * n + (n * n.saturating_sub(1) / 2).div_ceil(8) {
            return Err(bad());
        }
        Ok(PatternCode { radius, bytes })
    }
}

impl fmt::Debug for PatternCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PatternCode({})", self.to_hex())
    }
}

impl fmt::Display for PatternCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for PatternCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for PatternCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PatternCode::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

fn encode(labels: &[u8], dists: &[u8], adj_in_order: &[u64]) -> Vec<u8> {
    let n = labels.len();
    let mut bytes = Vec::with_capacity(1 + 2 * n + n * n / 16 + 1);
    bytes.push(n as u8);
    bytes.extend_from_slice(labels);
    bytes.extend_from_slice(dists);
    let mut acc = 0u8;
    let mut k = 0;
    for (i, row) in adj_in_order.iter().enumerate() {
        for j in i + 1..n {
            if row >> j & 1 == 1 {
                acc |= 1 << (k % 8);
            }
            k += 1;
            if k % 8 == 0 {
                bytes.push(acc);
                acc = 0;
            }
        }
    }
    if k % 8 != 0 {
        bytes.push(acc);
    }
    bytes
}

/// Canonical code together with every canonical labeling.
///
/// `orders[j][p]` is the ball-local index of the vertex at canonical
/// position `p` under the j-th labeling achieving the least encoding.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub code: PatternCode,
    pub orders: Vec<Vec<usize>>,
}

impl CanonicalForm {
    /// Root-fixing automorphisms as local-index permutations.
    pub fn automorphisms(&self) -> Vec<Vec<usize>> {
        let first = &self.orders[0];
        self.orders
            .iter()
            .map(|o| {
                let mut perm = vec![0; o.len()];
                for (p, &v) in first.iter().enumerate() {
                    perm[v] = o[p];
                }
                perm
            })
            .collect()
    }

    /// For each local vertex, the least canonical position in its orbit under
    /// the root-fixing automorphism group. Equal keys ⇔ same orbit.
    pub fn orbit_keys(&self) -> Vec<u16> {
        let n = self.orders[0].len();
        let mut key = vec![u16::MAX; n];
        for order in &self.orders {
            for (p, &v) in order.iter().enumerate() {
                key[v] = key[v].min(p as u16);
            }
        }
        key
    }

    /// All root-preserving isomorphisms `self → other` (as local-index
    /// maps), or none if the codes differ.
    pub fn isomorphisms_to(&self, other: &CanonicalForm) -> Vec<Vec<usize>> {
        if self.code != other.code {
            return Vec::new();
        }
        let first = &self.orders[0];
        other
            .orders
            .iter()
            .map(|o| {
                let mut map = vec![0; first.len()];
                for (p, &v) in first.iter().enumerate() {
                    map[v] = o[p];
                }
                map
            })
            .collect()
    }
}

fn compress(keys: &[u64]) -> Vec<u32> {
    let mut sorted: Vec<u64> = keys.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).unwrap() as u32).collect()
}

fn distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Equitable refinement: repeatedly split cells by the multiset of neighbor
/// colors until the partition is stable. Colors stay ordered consistently
/// with the input partition.
fn refine(colors: &mut Vec<u32>, adj: &[u64]) {
    let n = colors.len();
    let mut cells = distinct(colors);
    while cells < n {
        let mut sigs: Vec<(u32, Vec<u32>, usize)> = (0..n)
            .map(|v| {
                let mut nb: Vec<u32> = (0..n).filter(|&w| adj[v] >> w & 1 == 1).map(|w| colors[w]).collect();
                nb.sort_unstable();
                (colors[v], nb, v)
            })
            .collect();
        sigs.sort();
        let mut next = vec![0u32; n];
        let mut rank = 0u32;
        for i in 0..n {
            if i > 0 && (sigs[i].0 != sigs[i - 1].0 || sigs[i].1 != sigs[i - 1].1) {
                rank += 1;
            }
            next[sigs[i].2] = rank;
        }
        let new_cells = rank as usize + 1;
        *colors = next;
        if new_cells == cells {
            break;
        }
        cells = new_cells;
    }
}

struct Search<'a> {
    adj: &'a [u64],
    labels: &'a [u8],
    dists: &'a [u8],
    best: Option<Vec<u8>>,
    orders: Vec<Vec<usize>>,
    leaves: usize,
}

impl Search<'_> {
    fn run(&mut self, colors: Vec<u32>) -> Result<()> {
        let n = colors.len();
        let mut counts = vec![0usize; n];
        for &c in &colors {
            counts[c as usize] += 1;
        }
        let Some(target) = (0..n).find(|&c| counts[c] > 1) else {
            return self.leaf(&colors);
        };
        for v in 0..n {
            if colors[v] as usize != target {
                continue;
            }
            let keys: Vec<u64> = colors
                .iter()
                .enumerate()
                .map(|(u, &c)| 2 * c as u64 + (c as usize == target && u != v) as u64)
                .collect();
            let mut next = compress(&keys);
            refine(&mut next, self.adj);
            self.run(next)?;
        }
        Ok(())
    }

    fn leaf(&mut self, colors: &[u32]) -> Result<()> {
        self.leaves += 1;
        if self.leaves > LEAF_LIMIT {
            return Err(Error::limit("canonical search leaves", LEAF_LIMIT, self.leaves));
        }
        let n = colors.len();
        let mut order = vec![0usize; n];
        for (v, &c) in colors.iter().enumerate() {
            order[c as usize] = v;
        }
        let mut pos = vec![0usize; n];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        let adj_in_order: Vec<u64> = order
            .iter()
            .map(|&v| (0..n).filter(|&w| self.adj[v] >> w & 1 == 1).fold(0u64, |m, w| m | 1 << pos[w]))
            .collect();
        let labels: Vec<u8> = order.iter().map(|&v| self.labels[v]).collect();
        let dists: Vec<u8> = order.iter().map(|&v| self.dists[v]).collect();
        let enc = encode(&labels, &dists, &adj_in_order);
        match &self.best {
            Some(b) if enc > *b => {}
            Some(b) if enc == *b => self.orders.push(order),
            _ => {
                self.best = Some(enc);
                self.orders = vec![order];
            }
        }
        Ok(())
    }
}

/// Canonical form of a rooted ball with at most [`DEFAULT_BALL_LIMIT`] vertices.
pub fn canonical_form(ball: &RootedBall) -> Result<CanonicalForm> {
    canonical_form_with_limit(ball, DEFAULT_BALL_LIMIT)
}

pub fn canonical_form_with_limit(ball: &RootedBall, limit: usize) -> Result<CanonicalForm> {
    let n = ball.len();
    let limit = limit.min(64);
    if n > limit {
        return Err(Error::limit("ball size", limit, n));
    }
    let adj: Vec<u64> = ball.adjacency.iter().map(|row| row.iter().fold(0u64, |m, &w| m | 1 << w)).collect();
    let dists: Vec<u8> = ball.distances.iter().map(|&d| d.min(255) as u8).collect();
    let keys: Vec<u64> = (0..n)
        .map(|v| (dists[v] as u64) << 40 | (ball.labels[v] as u64) << 20 | ball.adjacency[v].len() as u64)
        .collect();
    let mut colors = compress(&keys);
    refine(&mut colors, &adj);
    let mut search =
        Search { adj: &adj, labels: &ball.labels, dists: &dists, best: None, orders: Vec::new(), leaves: 0 };
    search.run(colors)?;
    Ok(CanonicalForm {
        code: PatternCode { radius: ball.radius, bytes: search.best.expect("search visits at least one leaf") },
        orders: search.orders,
    })
}

pub fn canonical_code(ball: &RootedBall) -> Result<PatternCode> {
    canonical_form(ball).map(|f| f.code)
}

/// Orbits of the root-fixing automorphism group, each sorted, ordered by
/// their least canonical position (the root's orbit `{root}` comes first).
pub fn root_fixing_orbits(ball: &RootedBall) -> Result<Vec<Vec<VertexId>>> {
    let form = canonical_form(ball)?;
    let keys = form.orbit_keys();
    let mut orbits: BTreeMap<u16, Vec<VertexId>> = BTreeMap::new();
    for (v, k) in keys.iter().enumerate() {
        orbits.entry(*k).or_default().push(ball.vertices[v]);
    }
    Ok(orbits
        .into_values()
        .map(|mut o| {
            o.sort_unstable();
            o
        })
        .collect())
}

#[cfg(feature = "parallel")]
fn classify(g: &InfiniteGraph, vertices: &[VertexId], r: u32) -> Result<Vec<PatternCode>> {
    use rayon::prelude::*;
    vertices.par_iter().map(|v| canonical_code(&g.ball(*v, r)?)).collect()
}

#[cfg(not(feature = "parallel"))]
fn classify(g: &InfiniteGraph, vertices: &[VertexId], r: u32) -> Result<Vec<PatternCode>> {
    vertices.iter().map(|v| canonical_code(&g.ball(*v, r)?)).collect()
}

/// Number of window vertices carrying each r-pattern. Balls are taken in the
/// infinite graph, never truncated by the window.
pub fn pattern_census(g: &InfiniteGraph, q: &Window, r: u32) -> Result<BTreeMap<PatternCode, usize>> {
    let mut census = BTreeMap::new();
    for code in classify(g, q.vertices(), r)? {
        *census.entry(code).or_insert(0) += 1;
    }
    Ok(census)
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelCounts {
    pub level: u32,
    pub size: usize,
    pub counts: BTreeMap<PatternCode, usize>,
}

/// Empirical pattern frequencies along a window schedule.
#[derive(Clone, Debug, Serialize)]
pub struct FrequencyTable {
    pub radius: u32,
    pub levels: Vec<LevelCounts>,
    /// Known limiting frequencies, kept separate from the counts.
    pub analytic: BTreeMap<PatternCode, f64>,
}

impl FrequencyTable {
    pub fn frequency(&self, level: usize, code: &PatternCode) -> Rational {
        let l = &self.levels[level];
        let count = l.counts.get(code).copied().unwrap_or(0);
        Rational::new(BigInt::from(count), BigInt::from(l.size))
    }

    /// Frequency of the union of all patterns satisfying `event`.
    pub fn event_frequency(&self, level: usize, event: impl Fn(&PatternCode) -> bool) -> Rational {
        let l = &self.levels[level];
        let count: usize = l.counts.iter().filter(|(c, _)| event(c)).map(|(_, n)| n).sum();
        Rational::new(BigInt::from(count), BigInt::from(l.size))
    }

    pub fn codes(&self) -> Vec<PatternCode> {
        let mut all: Vec<PatternCode> = self.levels.iter().flat_map(|l| l.counts.keys().cloned()).collect();
        all.sort();
        all.dedup();
        all
    }

    /// `max_α |freq_top(α) − freq_prev(α)|`; zero with a single level.
    pub fn convergence_indicator(&self) -> f64 {
        let k = self.levels.len();
        if k < 2 {
            return 0.0;
        }
        self.codes()
            .iter()
            .map(|c| {
                let d = self.frequency(k - 1, c) - self.frequency(k - 2, c);
                crate::rational::to_f64(&d).abs()
            })
            .fold(0.0, f64::max)
    }

    /// CSV rows `level,code,count,frequency` with exact frequencies.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,code,count,frequency\n");
        for (i, l) in self.levels.iter().enumerate() {
            for (code, count) in &l.counts {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    l.level,
                    code.to_hex(),
                    count,
                    crate::rational::to_string(&self.frequency(i, code))
                ));
            }
        }
        out
    }
}

pub fn frequency_table(g: &InfiniteGraph, levels: &[u32], r: u32) -> Result<FrequencyTable> {
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("levels must be nonempty and strictly increasing".into()));
    }
    let levels = levels
        .iter()
        .map(|&n| {
            let q = g.folner_window(n);
            Ok(LevelCounts { level: n, size: q.len(), counts: pattern_census(g, &q, r)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyTable { radius: r, levels, analytic: BTreeMap::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn code_at(g: &InfiniteGraph, v: VertexId, r: u32) -> PatternCode {
        canonical_code(&g.ball(v, r).unwrap()).unwrap()
    }

    #[test]
    fn translation_invariance_on_z() {
        let z = InfiniteGraph::lattice(1).unwrap();
        assert_eq!(code_at(&z, VertexId::d1(0), 1), code_at(&z, VertexId::d1(17), 1));
    }

    #[test]
    fn leaf_and_backbone_differ() {
        let p = InfiniteGraph::pendant_chain(2).unwrap();
        assert_ne!(code_at(&p, VertexId::slot(0, 0), 1), code_at(&p, VertexId::slot(0, 1), 1));
        assert_eq!(code_at(&p, VertexId::slot(0, 0), 1).root_degree(), 4);
    }

    #[test]
    fn hex_round_trip() {
        let g = InfiniteGraph::decorated_lattice(1, 2, 5).unwrap();
        for x in 0..20 {
            let c = code_at(&g, VertexId::d2(x, 3 * x), 2);
            assert_eq!(PatternCode::from_hex(&c.to_hex()).unwrap(), c);
        }
        assert!(PatternCode::from_hex("1:zz").is_err());
        assert!(PatternCode::from_hex("nocolon").is_err());
    }

    #[test]
    fn point_code_matches_radius_zero_ball() {
        let s = InfiniteGraph::substitution_chain();
        assert_eq!(code_at(&s, VertexId::d1(0), 0), PatternCode::point(0));
        assert_eq!(code_at(&s, VertexId::d1(1), 0), PatternCode::point(1));
    }

    #[test]
    fn orbits_of_path_and_star() {
        let z = InfiniteGraph::lattice(1).unwrap();
        let orbits = root_fixing_orbits(&z.ball(VertexId::d1(5), 1).unwrap()).unwrap();
        assert_eq!(orbits, vec![vec![VertexId::d1(5)], vec![VertexId::d1(4), VertexId::d1(6)]]);
        // in the induced radius-1 star the two leaves and the two backbone
        // neighbors are indistinguishable; radius 2 separates them (the sites
        // at ±2 then hang off ±1 exactly like its leaves)
        let p = InfiniteGraph::pendant_chain(2).unwrap();
        let orbits = root_fixing_orbits(&p.ball(VertexId::slot(0, 0), 1).unwrap()).unwrap();
        assert_eq!(orbits.iter().map(|o| o.len()).collect::<Vec<_>>(), vec![1, 4]);
        let orbits = root_fixing_orbits(&p.ball(VertexId::slot(0, 0), 2).unwrap()).unwrap();
        let mut sizes: Vec<usize> = orbits.iter().map(|o| o.len()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2, 2, 6]);
        assert!(orbits.contains(&vec![VertexId::slot(0, 1), VertexId::slot(0, 2)]));
        assert!(orbits.contains(&vec![VertexId::slot(-1, 0), VertexId::slot(1, 0)]));
    }

    #[test]
    fn one_sided_diagonal_ball_orbits() {
        // radius-1 ball of (a,b) with the diagonal to (a+1,b+1) only: the two
        // pendant lattice neighbors swap, and so do the two triangle corners
        let g = InfiniteGraph::decorated_lattice(1, 2, 0).unwrap();
        let v = (-40..40)
            .flat_map(|a| (-40..40).map(move |b| (a, b)))
            .find(|&(a, b)| {
                g.has_diagonal(a, b)
                    && !g.has_diagonal(a - 1, b - 1)
                    && !g.has_diagonal(a, b - 1)
                    && !g.has_diagonal(a - 1, b)
            })
            .map(|(a, b)| VertexId::d2(a, b))
            .expect("configuration occurs");
        let ball = g.ball(v, 1).unwrap();
        assert_eq!(ball.len(), 6);
        assert_eq!(root_fixing_orbits(&ball).unwrap().len(), 4);
        assert_eq!(canonical_form(&ball).unwrap().automorphisms().len(), 4);
    }

    #[test]
    fn ball_limit_is_enforced() {
        let z2 = InfiniteGraph::lattice(2).unwrap();
        let ball = z2.ball(VertexId::d2(0, 0), 6).unwrap();
        assert_eq!(ball.len(), 85);
        assert!(matches!(canonical_form(&ball), Err(Error::LimitExceeded { .. })));
    }

    #[test]
    fn census_counts() {
        let z = InfiniteGraph::lattice(1).unwrap();
        let q = z.folner_window(6);
        let c = pattern_census(&z, &q, 1).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.values().sum::<usize>(), q.len());

        let p = InfiniteGraph::pendant_chain(2).unwrap();
        let q = p.folner_window(10);
        assert_eq!(pattern_census(&p, &q, 0).unwrap().len(), 1);
        let c = pattern_census(&p, &q, 1).unwrap();
        let mut counts: Vec<usize> = c.values().copied().collect();
        counts.sort();
        assert_eq!(counts, vec![21, 42]);
    }

    #[test]
    fn frequency_table_pendant_and_lattice() {
        let p = InfiniteGraph::pendant_chain(2).unwrap();
        let t = frequency_table(&p, &[2, 4, 8], 1).unwrap();
        for i in 0..3 {
            let mut f: Vec<Rational> = t.codes().iter().map(|c| t.frequency(i, c)).collect();
            f.sort();
            assert_eq!(f, vec![crate::rational::ratio(1, 3), crate::rational::ratio(2, 3)]);
        }
        assert_eq!(t.convergence_indicator(), 0.0);
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 1 + 6);

        let z2 = InfiniteGraph::lattice(2).unwrap();
        let t = frequency_table(&z2, &[1, 3], 1).unwrap();
        assert_eq!(t.codes().len(), 1);
        assert_eq!(t.frequency(1, &t.codes()[0]), crate::rational::int(1));
        assert!(frequency_table(&z2, &[3, 1], 1).is_err());
        assert!(frequency_table(&z2, &[], 1).is_err());
    }

    #[test]
    fn frequencies_sum_to_one() {
        let g = InfiniteGraph::decorated_lattice(1, 2, 3).unwrap();
        let t = frequency_table(&g, &[3, 6], 1).unwrap();
        for i in 0..2 {
            let total = t.codes().iter().fold(Rational::zero(), |acc, c| acc + t.frequency(i, c));
            assert_eq!(total, crate::rational::int(1));
        }
    }
}
