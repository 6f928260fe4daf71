//! Small pattern multigraphs that models are checked against.
//!
//! A pattern may carry parallel edges (the `theta` family does); hosts are
//! always simple.  Edges are indexed by their position in `edges`, and
//! branch paths of a model refer to pattern edges by that index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multigraph on vertices `0..vertices` given by an explicit edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternGraph {
    pub vertices: usize,
    /// Edge list; parallel edges appear as repeated pairs.  Each pair is
    /// stored with the smaller endpoint first.
    pub edges: Vec<(usize, usize)>,
    /// Optional display name, e.g. `"theta:3"` or `"k2t:4"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl PatternGraph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut norm = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= vertices || v >= vertices {
                return Err(Error::Invalid(format!(
                    "pattern edge ({u}, {v}) out of range for {vertices} vertices"
                )));
            }
            if u == v {
                return Err(Error::Invalid(format!("pattern self-loop at {u}")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        Ok(PatternGraph {
            vertices,
            edges: norm,
            name: None,
        })
    }

    fn named(mut self, name: String) -> Self {
        self.name = Some(name);
        self
    }

    /// Two vertices joined by `t` parallel edges.
    pub fn theta(t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::Invalid("theta pattern needs t >= 1".into()));
        }
        Ok(Self::new(2, vec![(0, 1); t])?.named(format!("theta:{t}")))
    }

    /// The complete bipartite graph with sides `{0, 1}` and `{2, ..., t+1}`.
    pub fn k2t(t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::Invalid("k2t pattern needs t >= 1".into()));
        }
        let mut edges = Vec::with_capacity(2 * t);
        for m in 0..t {
            edges.push((0, 2 + m));
            edges.push((1, 2 + m));
        }
        Ok(Self::new(t + 2, edges)?.named(format!("k2t:{t}")))
    }

    /// The pattern obtained by subdividing every edge once.  Edge `i` of
    /// `self` becomes the new vertex `vertices + i`, and its two half-edges
    /// are appended in edge order (so subdividing `theta(t)` yields a graph
    /// isomorphic to `k2t(t)`).
    pub fn subdivide(&self) -> PatternGraph {
        let mut edges = Vec::with_capacity(2 * self.edges.len());
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            let w = self.vertices + i;
            edges.push((u.min(w), u.max(w)));
            edges.push((v.min(w), v.max(w)));
        }
        PatternGraph {
            vertices: self.vertices + self.edges.len(),
            edges,
            name: self.name.as_ref().map(|n| format!("subdivided({n})")),
        }
    }

    /// Multiplicity of the vertex pair `{u, v}`.
    pub fn multiplicity(&self, u: usize, v: usize) -> usize {
        let key = (u.min(v), u.max(v));
        self.edges.iter().filter(|&&e| e == key).count()
    }

    /// Degree counting parallel edges.
    pub fn degree(&self, v: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    /// 2-connectivity for multigraphs: the pattern is connected, has no cut
    /// vertex, and every vertex has degree at least two (counting parallel
    /// edges).  A pair of vertices joined by two or more parallel edges
    /// counts as 2-connected.
    pub fn is_two_connected(&self) -> bool {
        let n = self.vertices;
        if n < 2 {
            return false;
        }
        if self.edges.is_empty() {
            return false;
        }
        // connectivity over the underlying simple graph
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return false;
        }
        if self.degree(0) < 2 || (1..n).any(|v| self.degree(v) < 2) {
            return false;
        }
        if n == 2 {
            return self.multiplicity(0, 1) >= 2;
        }
        // no cut vertex: removing any vertex keeps the rest connected
        for cut in 0..n {
            let start = (0..n).find(|&v| v != cut).unwrap();
            let mut seen = vec![false; n];
            seen[start] = true;
            let mut stack = vec![start];
            let mut count = 1;
            while let Some(u) = stack.pop() {
                for &w in &adj[u] {
                    if w != cut && !seen[w] {
                        seen[w] = true;
                        count += 1;
                        stack.push(w);
                    }
                }
            }
            if count != n - 1 {
                return false;
            }
        }
        true
    }

    /// Parses a pattern description: `theta:<t>`, `k2t:<t>`, or inline JSON.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        if let Some(t) = spec.strip_prefix("theta:") {
            let t = t
                .parse()
                .map_err(|_| Error::Parse(format!("bad theta count {t:?}")))?;
            return Self::theta(t);
        }
        if let Some(t) = spec.strip_prefix("k2t:") {
            let t = t
                .parse()
                .map_err(|_| Error::Parse(format!("bad k2t count {t:?}")))?;
            return Self::k2t(t);
        }
        if spec.trim_start().starts_with('{') {
            let p: PatternGraph = serde_json::from_str(spec)?;
            return Self::new(p.vertices, p.edges);
        }
        Err(Error::Parse(format!(
            "unknown pattern spec {spec:?}; expected theta:<t>, k2t:<t> or JSON"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_and_k2t_shapes() {
        let th = PatternGraph::theta(3).unwrap();
        assert_eq!(th.vertices, 2);
        assert_eq!(th.multiplicity(0, 1), 3);
        assert_eq!(th.degree(0), 3);
        let k = PatternGraph::k2t(3).unwrap();
        assert_eq!(k.vertices, 5);
        assert_eq!(k.edges.len(), 6);
        assert_eq!(k.degree(0), 3);
        assert_eq!(k.degree(2), 2);
    }

    #[test]
    fn subdividing_theta_gives_k2t_shape() {
        let th = PatternGraph::theta(4).unwrap();
        let s = th.subdivide();
        assert_eq!(s.vertices, 6);
        assert_eq!(s.edges.len(), 8);
        // every subdivision vertex has degree 2 and joins the two hubs
        for i in 0..4 {
            assert_eq!(s.degree(2 + i), 2);
            assert_eq!(s.multiplicity(0, 2 + i), 1);
            assert_eq!(s.multiplicity(1, 2 + i), 1);
        }
        assert_eq!(s.multiplicity(0, 1), 0);
    }

    #[test]
    fn two_connectivity() {
        assert!(PatternGraph::theta(2).unwrap().is_two_connected());
        assert!(!PatternGraph::theta(1).unwrap().is_two_connected());
        assert!(PatternGraph::k2t(2).unwrap().is_two_connected());
        assert!(PatternGraph::k2t(3).unwrap().is_two_connected());
        // path on 3 vertices has a cut vertex
        let p = PatternGraph::new(3, vec![(0, 1), (1, 2)]).unwrap();
        assert!(!p.is_two_connected());
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            PatternGraph::parse_spec("theta:2").unwrap().vertices,
            2
        );
        assert_eq!(PatternGraph::parse_spec("k2t:5").unwrap().vertices, 7);
        assert!(PatternGraph::parse_spec("nope").is_err());
        let j = r#"{"vertices": 3, "edges": [[0,1],[1,2],[0,2]]}"#;
        assert_eq!(PatternGraph::parse_spec(j).unwrap().edges.len(), 3);
    }
}
