//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use quasispec::{canonical_code, PatternCode, RootedBall};

/// Simple undirected graph on `0..n` as adjacency bitmasks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SmallGraph {
    pub adj: Vec<u32>,
}

impl SmallGraph {
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn has(&self, u: usize, v: usize) -> bool {
        self.adj[u] >> v & 1 == 1
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![0u32; n];
        for &(u, v) in edges {
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        SmallGraph { adj }
    }

    pub fn lists(&self) -> Vec<Vec<usize>> {
        (0..self.n()).map(|u| (0..self.n()).filter(|&v| self.has(u, v)).collect()).collect()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return true;
        }
        let mut seen = 1u32;
        let mut frontier = 1u32;
        while frontier != 0 {
            let mut next = 0u32;
            for u in 0..n {
                if frontier >> u & 1 == 1 {
                    next |= self.adj[u];
                }
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen.count_ones() as usize == n
    }

    /// Relabels vertex `u` to `perm[u]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        let mut adj = vec![0u32; n];
        for u in 0..n {
            for v in 0..n {
                if self.has(u, v) {
                    adj[perm[u]] |= 1 << perm[v];
                }
            }
        }
        SmallGraph { adj }
    }

    pub fn rooted(&self, labels: &[u8], root: usize) -> RootedBall {
        RootedBall::from_adjacency(&self.lists(), labels, root)
    }

    pub fn code(&self, labels: &[u8], root: usize) -> PatternCode {
        canonical_code(&self.rooted(labels, root)).unwrap()
    }

    /// Least rooted code over all roots; an isomorphism invariant of the
    /// unrooted graph.
    pub fn unrooted_code(&self) -> PatternCode {
        let labels = vec![0u8; self.n()];
        (0..self.n()).map(|r| self.code(&labels, r)).min().unwrap()
    }
}

/// Backtracking search for a bijection `a → b` with `root_a ↦ root_b` that
/// preserves adjacency and labels.
pub fn rooted_isomorphic(a: &SmallGraph, la: &[u8], root_a: usize, b: &SmallGraph, lb: &[u8], root_b: usize) -> bool {
    let n = a.n();
    if n != b.n() {
        return false;
    }
    let deg = |g: &SmallGraph, u: usize| g.adj[u].count_ones();
    let mut da: Vec<(u32, u8)> = (0..n).map(|u| (deg(a, u), la[u])).collect();
    let mut db: Vec<(u32, u8)> = (0..n).map(|u| (deg(b, u), lb[u])).collect();
    da.sort_unstable();
    db.sort_unstable();
    if da != db || la[root_a] != lb[root_b] || deg(a, root_a) != deg(b, root_b) {
        return false;
    }
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    map[root_a] = root_b;
    used[root_b] = true;
    // assign remaining vertices of `a` in a fixed order
    let order: Vec<usize> = (0..n).filter(|&u| u != root_a).collect();
    fn extend(
        i: usize,
        order: &[usize],
        (a, la): (&SmallGraph, &[u8]),
        (b, lb): (&SmallGraph, &[u8]),
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        if i == order.len() {
            return true;
        }
        let u = order[i];
        for v in 0..b.n() {
            if used[v] || la[u] != lb[v] || a.adj[u].count_ones() != b.adj[v].count_ones() {
                continue;
            }
            let ok = (0..a.n()).all(|w| map[w] == usize::MAX || a.has(u, w) == b.has(v, map[w]));
            if !ok {
                continue;
            }
            map[u] = v;
            used[v] = true;
            if extend(i + 1, order, (a, la), (b, lb), map, used) {
                return true;
            }
            map[u] = usize::MAX;
            used[v] = false;
        }
        false
    }
    extend(0, &order, (a, la), (b, lb), &mut map, &mut used)
}

/// All connected graphs on `n ≤ max_n` vertices up to isomorphism, grouped
/// by vertex count. Each graph on `n + 1` vertices arises from one on `n` by
/// adding a vertex (a spanning tree always has a removable leaf).
pub fn connected_graphs(max_n: usize) -> Vec<Vec<SmallGraph>> {
    let mut out = vec![Vec::new(), vec![SmallGraph { adj: vec![0] }]];
    for n in 1..max_n {
        let mut seen: BTreeMap<PatternCode, SmallGraph> = BTreeMap::new();
        for g in &out[n] {
            for mask in 1u32..(1 << n) {
                let mut adj = g.adj.clone();
                adj.push(mask);
                for (v, a) in adj.iter_mut().enumerate().take(n) {
                    if mask >> v & 1 == 1 {
                        *a |= 1 << n;
                    }
                }
                let h = SmallGraph { adj };
                seen.entry(h.unrooted_code()).or_insert(h);
            }
        }
        out.push(seen.into_values().collect());
    }
    out
}

/// Number of closed walks of length `k` at the origin of ℤᵈ, counted by
/// enumerating all `(2d)ᵏ` step sequences.
pub fn closed_walks_lattice(d: usize, k: u32) -> u64 {
    let steps = 2 * d;
    let total = steps.pow(k);
    let mut count = 0;
    for mut code in 0..total {
        let mut pos = vec![0i32; d];
        for _ in 0..k {
            let s = code % steps;
            code /= steps;
            pos[s / 2] += if s.is_multiple_of(2) { 1 } else { -1 };
        }
        if pos.iter().all(|&c| c == 0) {
            count += 1;
        }
    }
    count
}

/// Deterministic permutations for relabeling tests.
pub fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    for i in (1..n).rev() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        p.swap(i, (s % (i as u64 + 1)) as usize);
    }
    p
}

pub fn distinct<T: Ord + Clone>(items: &[T]) -> usize {
    items.iter().cloned().collect::<BTreeSet<_>>().len()
}
