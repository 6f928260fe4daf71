//! Undirected simple graphs with deterministic breadth-first primitives.
//!
//! All algorithms in this crate are deterministic: adjacency lists are kept
//! sorted ascending and every BFS processes sources and neighbours in
//! ascending vertex order.  Distances are `u32` with [`INF`] as the
//! unreachable sentinel; the distance between sets is `INF` whenever either
//! set is empty.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Unreachable / undefined distance sentinel.
pub const INF: u32 = u32::MAX;

/// An undirected simple graph on vertices `0..n` with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    /// Creates an edgeless graph on `n` vertices.
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Builds a graph from an edge list; duplicate edges and self-loops are
    /// rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Inserts the edge `uv`, keeping adjacency sorted.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        let n = self.n();
        if u >= n || v >= n {
            return Err(Error::Invalid(format!(
                "edge ({u}, {v}) out of range for {n} vertices"
            )));
        }
        if u == v {
            return Err(Error::Invalid(format!("self-loop at vertex {u}")));
        }
        if self.has_edge(u, v) {
            return Err(Error::Invalid(format!("duplicate edge ({u}, {v})")));
        }
        let pos = self.adj[u].binary_search(&v).unwrap_err();
        self.adj[u].insert(pos, v);
        let pos = self.adj[v].binary_search(&u).unwrap_err();
        self.adj[v].insert(pos, u);
        self.m += 1;
        Ok(())
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    /// Number of edges.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Sorted neighbours of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.adj[u].binary_search(&v).is_ok()
    }

    /// All edges as ascending `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.m);
        for u in 0..self.n() {
            for &v in &self.adj[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Distance array from a set of sources, optionally restricted to the
    /// subgraph induced on vertices where `blocked` is false.  Blocked
    /// sources are ignored.
    pub fn dist_from(&self, sources: &[usize], blocked: Option<&[bool]>) -> Vec<u32> {
        let mut bfs = Bfs::new(self.n());
        bfs.run(self, sources.iter().copied(), blocked, INF);
        (0..self.n()).map(|v| bfs.dist(v)).collect()
    }

    /// Distance between two vertex sets (`INF` if either is empty or they
    /// are in different components), optionally within an induced subgraph.
    pub fn distance_sets(&self, a: &[usize], b: &[usize], blocked: Option<&[bool]>) -> u32 {
        if a.is_empty() || b.is_empty() {
            return INF;
        }
        let dist = self.dist_from(a, blocked);
        b.iter().map(|&v| dist[v]).min().unwrap_or(INF)
    }

    /// Sorted closed ball of radius `r` around a vertex set, optionally
    /// within an induced subgraph.
    pub fn ball(&self, sources: &[usize], r: u32, blocked: Option<&[bool]>) -> Vec<usize> {
        let mut bfs = Bfs::new(self.n());
        bfs.run(self, sources.iter().copied(), blocked, r);
        let mut out: Vec<usize> = bfs.reached().to_vec();
        out.sort_unstable();
        out
    }

    /// Connected components (each sorted ascending, ordered by least
    /// vertex), optionally of an induced subgraph.
    pub fn components(&self, blocked: Option<&[bool]>) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] || blocked.is_some_and(|b| b[s]) {
                continue;
            }
            let mut comp = Vec::new();
            seen[s] = true;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &w in &self.adj[u] {
                    if !seen[w] && !blocked.is_some_and(|b| b[w]) {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 0 || self.components(None).len() == 1
    }

    /// Groups `members` into classes whose union-of-balls interpretation is:
    /// two members belong to one class when they are joined by a chain of
    /// members with consecutive distance at most `k` (measured in the whole
    /// graph, or within an induced subgraph if `blocked` is given).  Classes
    /// are sorted ascending and ordered by least vertex.
    pub fn near_components(
        &self,
        members: &[usize],
        k: u32,
        blocked: Option<&[bool]>,
    ) -> Vec<Vec<usize>> {
        let mut idx_of = vec![usize::MAX; self.n()];
        for (i, &v) in members.iter().enumerate() {
            idx_of[v] = i;
        }
        let mut dsu = UnionFind::new(members.len());
        let mut bfs = Bfs::new(self.n());
        for (i, &v) in members.iter().enumerate() {
            bfs.run(self, std::iter::once(v), blocked, k);
            for &u in bfs.reached() {
                if idx_of[u] != usize::MAX {
                    dsu.union(i, idx_of[u]);
                }
            }
        }
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of_root = vec![usize::MAX; members.len()];
        for (i, &v) in members.iter().enumerate() {
            let r = dsu.find(i);
            if class_of_root[r] == usize::MAX {
                class_of_root[r] = classes.len();
                classes.push(Vec::new());
            }
            classes[class_of_root[r]].push(v);
        }
        for c in &mut classes {
            c.sort_unstable();
        }
        classes.sort_by_key(|c| c[0]);
        classes
    }

    /// Largest pairwise distance within `set`, measured in the whole graph
    /// (or an induced subgraph), truncated: returns `cap` as soon as some
    /// pair is at distance `>= cap`.
    pub fn diameter_of_set(&self, set: &[usize], cap: u32, blocked: Option<&[bool]>) -> u32 {
        let mut bfs = Bfs::new(self.n());
        let mut best = 0;
        for &v in set {
            bfs.run(self, std::iter::once(v), blocked, cap);
            for &u in set {
                let d = bfs.dist(u);
                if d == INF {
                    return cap;
                }
                best = best.max(d);
            }
            if best >= cap {
                return cap;
            }
        }
        best
    }

    /// Components of `g - removed` together with, per component `C`, its
    /// boundary (vertices of `C` with a neighbour outside `C`, i.e. in
    /// `removed`) and its attachments (`N(C)` inside `removed`).  Ordered by
    /// least component vertex; all three sets sorted ascending.
    pub fn components_with_boundary(
        &self,
        removed: &[usize],
    ) -> Vec<(Vec<usize>, Vec<usize>, Vec<usize>)> {
        let mut blocked = vec![false; self.n()];
        for &v in removed {
            blocked[v] = true;
        }
        self.components(Some(&blocked))
            .into_iter()
            .map(|comp| {
                let mut boundary = Vec::new();
                let mut attach = Vec::new();
                for &v in &comp {
                    if self.adj[v].iter().any(|&w| blocked[w]) {
                        boundary.push(v);
                    }
                    for &w in &self.adj[v] {
                        if blocked[w] {
                            attach.push(w);
                        }
                    }
                }
                attach.sort_unstable();
                attach.dedup();
                (comp, boundary, attach)
            })
            .collect()
    }

    /// A shortest path (as a vertex sequence) from the set `sources` to the
    /// nearest vertex satisfying `target`, with ascending-id tie-breaks.
    pub fn shortest_path_to(
        &self,
        sources: &[usize],
        target: impl Fn(usize) -> bool,
        blocked: Option<&[bool]>,
    ) -> Option<Vec<usize>> {
        let n = self.n();
        let mut dist = vec![INF; n];
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        let mut srcs: Vec<usize> = sources.to_vec();
        srcs.sort_unstable();
        srcs.dedup();
        for &s in &srcs {
            if !blocked.is_some_and(|b| b[s]) && dist[s] == INF {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        let mut hit = usize::MAX;
        'outer: while let Some(u) = queue.pop_front() {
            if target(u) {
                hit = u;
                break 'outer;
            }
            for &w in &self.adj[u] {
                if dist[w] == INF && !blocked.is_some_and(|b| b[w]) {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        if hit == usize::MAX {
            return None;
        }
        let mut path = vec![hit];
        while parent[*path.last().unwrap()] != usize::MAX {
            path.push(parent[*path.last().unwrap()]);
        }
        path.reverse();
        Some(path)
    }
}

/// Reusable BFS workspace with epoch-based resets, so repeated truncated
/// searches on a large graph do not pay an O(n) clear each time.
pub struct Bfs {
    dist: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
    queue: VecDeque<usize>,
    reached: Vec<usize>,
}

impl Bfs {
    pub fn new(n: usize) -> Self {
        Bfs {
            dist: vec![INF; n],
            stamp: vec![0; n],
            epoch: 0,
            queue: VecDeque::new(),
            reached: Vec::new(),
        }
    }

    /// Runs a BFS from `sources` up to depth `max_depth` (inclusive),
    /// optionally restricted to vertices where `blocked` is false.
    pub fn run(
        &mut self,
        g: &Graph,
        sources: impl IntoIterator<Item = usize>,
        blocked: Option<&[bool]>,
        max_depth: u32,
    ) {
        self.epoch += 1;
        self.queue.clear();
        self.reached.clear();
        let mut srcs: Vec<usize> = sources.into_iter().collect();
        srcs.sort_unstable();
        srcs.dedup();
        for s in srcs {
            if blocked.is_some_and(|b| b[s]) || self.stamp[s] == self.epoch {
                continue;
            }
            self.stamp[s] = self.epoch;
            self.dist[s] = 0;
            self.queue.push_back(s);
            self.reached.push(s);
        }
        while let Some(u) = self.queue.pop_front() {
            if self.dist[u] == max_depth {
                continue;
            }
            for &w in g.neighbors(u) {
                if self.stamp[w] != self.epoch && !blocked.is_some_and(|b| b[w]) {
                    self.stamp[w] = self.epoch;
                    self.dist[w] = self.dist[u] + 1;
                    self.queue.push_back(w);
                    self.reached.push(w);
                }
            }
        }
    }

    /// Distance assigned by the most recent run (`INF` if unreached).
    pub fn dist(&self, v: usize) -> u32 {
        if self.stamp[v] == self.epoch {
            self.dist[v]
        } else {
            INF
        }
    }

    /// Vertices reached by the most recent run, in BFS discovery order.
    pub fn reached(&self) -> &[usize] {
        &self.reached
    }
}

/// Union-find with path halving and union by size.
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Parses the plain edge-list format: one `u v` pair per line, `#` starts a
/// comment, and an optional `n <count>` line fixes the vertex count (needed
/// for isolated trailing vertices).  The vertex count is the maximum of the
/// declared count and `1 + max vertex id`.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut declared = 0usize;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut max_id = None::<usize>;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let a = it.next().unwrap();
        let b = it.next().ok_or_else(|| {
            Error::Parse(format!("line {}: expected two fields", lineno + 1))
        })?;
        if it.next().is_some() {
            return Err(Error::Parse(format!(
                "line {}: expected exactly two fields",
                lineno + 1
            )));
        }
        if a == "n" {
            declared = declared.max(b.parse::<usize>().map_err(|_| {
                Error::Parse(format!("line {}: bad vertex count {b:?}", lineno + 1))
            })?);
            continue;
        }
        let u: usize = a
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad vertex id {a:?}", lineno + 1)))?;
        let v: usize = b
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad vertex id {b:?}", lineno + 1)))?;
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
        edges.push((u, v));
    }
    let n = declared.max(max_id.map_or(0, |m| m + 1));
    Graph::from_edges(n, &edges)
}

/// Serializes a graph in the format accepted by [`parse_edge_list`];
/// `parse_edge_list(&g.to_edge_list())` reproduces `g` exactly.
pub fn to_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    out.push_str(&format!("n {}\n", g.n()));
    for (u, v) in g.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, &(0..n - 1).map(|i| (i, i + 1)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn distances_and_balls() {
        let g = path(10);
        let d = g.dist_from(&[0], None);
        assert_eq!(d[9], 9);
        assert_eq!(g.distance_sets(&[0, 1], &[5], None), 4);
        assert_eq!(g.distance_sets(&[], &[5], None), INF);
        assert_eq!(g.ball(&[3], 2, None), vec![1, 2, 3, 4, 5]);
        // blocked vertex splits the path
        let mut blocked = vec![false; 10];
        blocked[4] = true;
        assert_eq!(g.distance_sets(&[0], &[9], Some(&blocked)), INF);
        let comps = g.components(Some(&blocked));
        assert_eq!(comps, vec![vec![0, 1, 2, 3], vec![5, 6, 7, 8, 9]]);
    }

    #[test]
    fn near_component_grouping() {
        let g = path(20);
        // members 0, 2, 4 chain at gap 2; member 10 is far away
        let classes = g.near_components(&[0, 2, 4, 10], 2, None);
        assert_eq!(classes, vec![vec![0, 2, 4], vec![10]]);
        let classes = g.near_components(&[0, 2, 4, 10], 1, None);
        assert_eq!(classes.len(), 4);
    }

    #[test]
    fn set_diameter_truncation() {
        let g = path(30);
        assert_eq!(g.diameter_of_set(&[0, 10, 29], 100, None), 29);
        assert_eq!(g.diameter_of_set(&[0, 10, 29], 5, None), 5);
    }

    #[test]
    fn components_with_boundary_on_path() {
        let g = path(10);
        let parts = g.components_with_boundary(&[4]);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].0, vec![0, 1, 2, 3]);
        assert_eq!(parts[0].1, vec![3]);
        assert_eq!(parts[0].2, vec![4]);
        assert_eq!(parts[1].0, vec![5, 6, 7, 8, 9]);
        assert_eq!(parts[1].1, vec![5]);
        assert_eq!(parts[1].2, vec![4]);
        // removing nothing: one component, empty boundary
        let parts = g.components_with_boundary(&[]);
        assert_eq!(parts.len(), 1);
        assert!(parts[0].1.is_empty());
    }

    #[test]
    fn edge_list_round_trip() {
        let text = "# comment\nn 7\n0 1\n1 2\n3 4 # tail comment\n";
        let g = parse_edge_list(text).unwrap();
        assert_eq!(g.n(), 7);
        assert_eq!(g.m(), 3);
        let again = parse_edge_list(&to_edge_list(&g)).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::from_edges(2, &[(0, 5)]).is_err());
        assert!(parse_edge_list("0 1 2").is_err());
        assert!(parse_edge_list("0 x").is_err());
    }

    #[test]
    fn shortest_path_deterministic() {
        let g = Graph::from_edges(6, &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4), (4, 5)]).unwrap();
        let p = g.shortest_path_to(&[0], |v| v == 3, None).unwrap();
        assert_eq!(p, vec![0, 1, 3]); // ascending-id tie-break picks 1 over 2
    }
}
