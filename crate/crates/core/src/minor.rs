//! Exact minor containment for small patterns.
//!
//! A pattern (possibly with parallel edges) is a minor of the host exactly
//! when the host has pairwise disjoint connected vertex sets, one per
//! pattern vertex, with at least as many distinct host edges between two
//! sets as the pattern has parallel edges between the corresponding
//! vertices.  The search enumerates branch sets class by class with a
//! canonical minimum-seed order, so answers and certificates are
//! deterministic.  Exceeding the node budget yields an explicit `Unknown`,
//! never a silent wrong answer.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::FatModel;
use crate::pattern::PatternGraph;

/// Largest pattern the search accepts.
pub const MAX_PATTERN_VERTICES: usize = 12;

/// One containment question with a work budget (in search nodes).
pub struct MinorQuery<'a> {
    pub host: &'a Graph,
    pub pattern: &'a PatternGraph,
    pub node_budget: u64,
}

impl<'a> MinorQuery<'a> {
    pub fn new(host: &'a Graph, pattern: &'a PatternGraph) -> Self {
        MinorQuery {
            host,
            pattern,
            node_budget: 5_000_000,
        }
    }
}

/// Decision of a containment search.
#[derive(Debug, Clone)]
pub enum MinorOutcome {
    /// The pattern is a minor; the certificate passes `verify_fat_model`
    /// at fatness 0.
    Present(Box<FatModel>),
    Absent,
    /// The budget ran out before the search space was exhausted.
    Unknown,
}

#[derive(Debug, Clone)]
pub struct MinorAnswer {
    pub outcome: MinorOutcome,
    pub nodes_explored: u64,
}

struct Search<'a> {
    g: &'a Graph,
    p: &'a PatternGraph,
    /// `mult[x][y]` = number of parallel pattern edges between x and y.
    mult: Vec<Vec<usize>>,
    label: Vec<usize>,
    members: Vec<Vec<usize>>,
    nodes: u64,
    budget: u64,
    certificate: Option<FatModel>,
}

const FREE: usize = usize::MAX;

impl Search<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget(format!(
                "minor search exceeded {} nodes",
                self.budget
            )));
        }
        Ok(())
    }

    /// Distinct host edges between the sets of classes `a` and `b`.
    fn edges_between(&self, a: usize, b: usize) -> usize {
        self.members[a]
            .iter()
            .flat_map(|&v| self.g.neighbors(v))
            .filter(|&&w| self.label[w] == b)
            .count()
    }

    /// All pattern edges from class `i` to finished classes are realized.
    fn class_ok(&self, i: usize) -> bool {
        (0..i).all(|j| self.mult[i][j] == 0 || self.edges_between(i, j) >= self.mult[i][j])
    }

    fn place_class(&mut self, i: usize) -> Result<bool> {
        if i == self.p.vertices {
            self.certificate = Some(self.build_certificate()?);
            return Ok(true);
        }
        let free: Vec<usize> = (0..self.g.n()).filter(|&v| self.label[v] == FREE).collect();
        if free.len() < self.p.vertices - i {
            return Ok(false);
        }
        for &seed in &free {
            self.tick()?;
            self.label[seed] = i;
            self.members[i].push(seed);
            let mut banned = vec![false; self.g.n()];
            let found = self.grow(i, &mut banned)?;
            self.members[i].pop();
            self.label[seed] = FREE;
            if found {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Enumerates every connected superset of the current class-`i` set
    /// whose extra vertices exceed the seed, each exactly once.
    fn grow(&mut self, i: usize, banned: &mut [bool]) -> Result<bool> {
        self.tick()?;
        if self.class_ok(i) && self.place_class(i + 1)? {
            return Ok(true);
        }
        let seed = self.members[i][0];
        let mut cands: Vec<usize> = self.members[i]
            .iter()
            .flat_map(|&v| self.g.neighbors(v))
            .copied()
            .filter(|&w| w > seed && self.label[w] == FREE && !banned[w])
            .collect();
        cands.sort_unstable();
        cands.dedup();
        let mut newly_banned = Vec::new();
        let mut found = false;
        for w in cands {
            if banned[w] {
                continue;
            }
            self.label[w] = i;
            self.members[i].push(w);
            let r = self.grow(i, banned);
            if !matches!(r, Ok(true)) {
                self.members[i].pop();
                self.label[w] = FREE;
            }
            if r? {
                found = true;
                break;
            }
            banned[w] = true;
            newly_banned.push(w);
        }
        for w in newly_banned {
            banned[w] = false;
        }
        Ok(found)
    }

    /// A 0-fat model from the completed assignment: branch sets are the
    /// classes, each pattern edge takes the next unused host edge between
    /// its two classes as a two-vertex branch path.
    fn build_certificate(&self) -> Result<FatModel> {
        let mut used: Vec<Vec<(usize, usize)>> = Vec::new(); // per pair key
        let mut pair_keys: Vec<(usize, usize)> = Vec::new();
        let mut branch_paths = Vec::with_capacity(self.p.edges.len());
        for &(x, y) in &self.p.edges {
            let key = (x.min(y), x.max(y));
            let slot = match pair_keys.iter().position(|&k| k == key) {
                Some(s) => s,
                None => {
                    // host edges between the two classes, least first,
                    // oriented from class x's side
                    let mut list: Vec<(usize, usize)> = self.members[key.0]
                        .iter()
                        .flat_map(|&u| {
                            self.g
                                .neighbors(u)
                                .iter()
                                .filter(|&&v| self.label[v] == key.1)
                                .map(move |&v| (u, v))
                        })
                        .collect();
                    list.sort_unstable();
                    list.reverse(); // pop() takes the least first
                    pair_keys.push(key);
                    used.push(list);
                    pair_keys.len() - 1
                }
            };
            let (u, v) = used[slot].pop().ok_or_else(|| {
                Error::Invalid("internal: accepted assignment lacks a host edge".into())
            })?;
            branch_paths.push(if x == key.0 { vec![u, v] } else { vec![v, u] });
        }
        let mut branch_sets = self.members.clone();
        for set in &mut branch_sets {
            set.sort_unstable();
        }
        Ok(FatModel {
            pattern: self.p.clone(),
            branch_sets,
            branch_paths,
            claimed_fatness: 0,
        })
    }
}

/// Cyclomatic number `m - n + components`; never increased by vertex or
/// edge deletion or by edge contraction, so a minor's rank is bounded by
/// the host's.
fn graph_rank(g: &Graph) -> usize {
    g.m() + g.components(None).len() - g.n()
}

fn pattern_rank(p: &PatternGraph) -> usize {
    let mut uf = crate::graph::UnionFind::new(p.vertices);
    let mut comps = p.vertices;
    for &(u, v) in &p.edges {
        if uf.union(u, v) {
            comps -= 1;
        }
    }
    p.edges.len() + comps - p.vertices
}

fn pattern_min_degree(p: &PatternGraph) -> usize {
    (0..p.vertices).map(|v| p.degree(v)).min().unwrap_or(0)
}

/// Iteratively strips degree-at-most-one vertices.  Returns the reduced
/// graph and a map from its vertex ids back to the original ones.
fn two_core(g: &Graph) -> (Graph, Vec<usize>) {
    let mut alive = vec![true; g.n()];
    let mut degree: Vec<usize> = (0..g.n()).map(|v| g.degree(v)).collect();
    let mut queue: Vec<usize> = (0..g.n()).filter(|&v| degree[v] <= 1).collect();
    while let Some(v) = queue.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &w in g.neighbors(v) {
            if alive[w] {
                degree[w] -= 1;
                if degree[w] <= 1 {
                    queue.push(w);
                }
            }
        }
    }
    let map: Vec<usize> = (0..g.n()).filter(|&v| alive[v]).collect();
    let mut inverse = vec![usize::MAX; g.n()];
    for (new, &old) in map.iter().enumerate() {
        inverse[old] = new;
    }
    let edges: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .filter(|&(u, v)| alive[u] && alive[v])
        .map(|(u, v)| (inverse[u], inverse[v]))
        .collect();
    let core = Graph::from_edges(map.len(), &edges).expect("core edges are valid");
    (core, map)
}

/// Decides whether the pattern is a minor of the host.
pub fn has_minor(q: &MinorQuery) -> Result<MinorAnswer> {
    let p = q.pattern;
    if p.vertices == 0 {
        return Err(Error::Invalid("pattern has no vertices".into()));
    }
    if p.vertices > MAX_PATTERN_VERTICES {
        return Err(Error::Invalid(format!(
            "pattern has {} vertices, above the maximum {MAX_PATTERN_VERTICES}",
            p.vertices
        )));
    }
    if q.node_budget == 0 {
        return Err(Error::Invalid("node budget must be positive".into()));
    }
    // when every pattern vertex has degree >= 2, a model can always be
    // pushed into the host's 2-core
    let reduced;
    let (g, map): (&Graph, Option<Vec<usize>>) = if pattern_min_degree(p) >= 2 {
        let (core, map) = two_core(q.host);
        reduced = core;
        (&reduced, Some(map))
    } else {
        (q.host, None)
    };
    // exact pre-filters: enough vertices, a distinct host edge per pattern
    // edge, and enough independent cycles
    if g.n() < p.vertices || g.m() < p.edges.len() || graph_rank(g) < pattern_rank(p) {
        return Ok(MinorAnswer {
            outcome: MinorOutcome::Absent,
            nodes_explored: 0,
        });
    }
    let mut mult = vec![vec![0usize; p.vertices]; p.vertices];
    for &(x, y) in &p.edges {
        mult[x][y] += 1;
        mult[y][x] += 1;
    }
    let mut search = Search {
        g,
        p,
        mult,
        label: vec![FREE; g.n()],
        members: vec![Vec::new(); p.vertices],
        nodes: 0,
        budget: q.node_budget,
        certificate: None,
    };
    match search.place_class(0) {
        Ok(true) => {
            let mut cert = search.certificate.take().expect("certificate built on success");
            if let Some(map) = &map {
                for set in cert.branch_sets.iter_mut().chain(cert.branch_paths.iter_mut()) {
                    for v in set.iter_mut() {
                        *v = map[*v];
                    }
                }
            }
            Ok(MinorAnswer {
                outcome: MinorOutcome::Present(Box::new(cert)),
                nodes_explored: search.nodes,
            })
        }
        Ok(false) => Ok(MinorAnswer {
            outcome: MinorOutcome::Absent,
            nodes_explored: search.nodes,
        }),
        Err(Error::Budget(_)) => Ok(MinorAnswer {
            outcome: MinorOutcome::Unknown,
            nodes_explored: search.nodes,
        }),
        Err(e) => Err(e),
    }
}

/// Exhaustive reference decision: tries every assignment of host vertices
/// to pattern classes or "unused".  Exponential; for hosts of at most
/// eight or so vertices.
pub fn minor_oracle(g: &Graph, p: &PatternGraph) -> bool {
    fn connected(g: &Graph, set: &[usize]) -> bool {
        let mut inside = vec![false; g.n()];
        for &v in set {
            inside[v] = true;
        }
        let mut stack = vec![set[0]];
        inside[set[0]] = false;
        let mut seen = 1;
        while let Some(v) = stack.pop() {
            for &w in g.neighbors(v) {
                if inside[w] {
                    inside[w] = false;
                    seen += 1;
                    stack.push(w);
                }
            }
        }
        seen == set.len()
    }

    fn assign(g: &Graph, p: &PatternGraph, label: &mut Vec<usize>, v: usize) -> bool {
        if v == g.n() {
            let mut classes: Vec<Vec<usize>> = vec![Vec::new(); p.vertices];
            for (u, &l) in label.iter().enumerate() {
                if l < p.vertices {
                    classes[l].push(u);
                }
            }
            if classes.iter().any(|c| c.is_empty() || !connected(g, c)) {
                return false;
            }
            for x in 0..p.vertices {
                for y in (x + 1)..p.vertices {
                    let need = p.multiplicity(x, y);
                    if need == 0 {
                        continue;
                    }
                    let have = classes[x]
                        .iter()
                        .flat_map(|&a| g.neighbors(a))
                        .filter(|&&b| label[b] == y)
                        .count();
                    if have < need {
                        return false;
                    }
                }
            }
            return true;
        }
        for l in 0..=p.vertices {
            label[v] = l;
            if assign(g, p, label, v + 1) {
                return true;
            }
        }
        label[v] = p.vertices;
        false
    }

    if g.n() < p.vertices {
        return false;
    }
    let mut label = vec![p.vertices; g.n()];
    assign(g, p, &mut label, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorSpec};
    use crate::model::verify_fat_model;

    fn decide(g: &Graph, p: &PatternGraph) -> MinorAnswer {
        has_minor(&MinorQuery::new(g, p)).unwrap()
    }

    #[test]
    fn square_contains_k22() {
        let c4 = generate(&GeneratorSpec::Cycle { n: 4 }).unwrap();
        let p = PatternGraph::k2t(2).unwrap();
        match decide(&c4, &p).outcome {
            MinorOutcome::Present(m) => {
                let report = verify_fat_model(&c4, &m, 0);
                assert!(report.valid, "{:?}", report.violations);
            }
            other => panic!("expected Present, got {other:?}"),
        }
    }

    #[test]
    fn theta2_detects_cycles() {
        let theta2 = PatternGraph::theta(2).unwrap();
        let tree = generate(&GeneratorSpec::RandomTree { n: 40, seed: 5 }).unwrap();
        assert!(matches!(decide(&tree, &theta2).outcome, MinorOutcome::Absent));
        let cyc = generate(&GeneratorSpec::Cycle { n: 40 }).unwrap();
        assert!(matches!(
            decide(&cyc, &theta2).outcome,
            MinorOutcome::Present(_)
        ));
    }

    #[test]
    fn k4_lacks_k23() {
        let k4 = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let ans = decide(&k4, &PatternGraph::k2t(3).unwrap());
        assert!(matches!(ans.outcome, MinorOutcome::Absent));
        assert_eq!(ans.nodes_explored, 0, "size pre-filter decides");
    }

    #[test]
    fn theta_host_contains_its_pattern() {
        let g = generate(&GeneratorSpec::Theta { t: 3, leg: 10 }).unwrap();
        for p in [PatternGraph::theta(3).unwrap(), PatternGraph::k2t(3).unwrap()] {
            match decide(&g, &p).outcome {
                MinorOutcome::Present(m) => {
                    let report = verify_fat_model(&g, &m, 0);
                    assert!(report.valid, "{:?}", report.violations);
                }
                other => panic!("expected Present for {:?}, got {other:?}", p.name),
            }
        }
        let cyc = generate(&GeneratorSpec::Cycle { n: 50 }).unwrap();
        assert!(matches!(
            decide(&cyc, &PatternGraph::k2t(3).unwrap()).outcome,
            MinorOutcome::Absent
        ));
    }

    #[test]
    fn tiny_budget_reports_unknown() {
        let g = generate(&GeneratorSpec::Grid { width: 12, height: 12 }).unwrap();
        let p = PatternGraph::k2t(3).unwrap();
        let ans = has_minor(&MinorQuery {
            host: &g,
            pattern: &p,
            node_budget: 10,
        })
        .unwrap();
        assert!(matches!(ans.outcome, MinorOutcome::Unknown));
    }

    #[test]
    fn rejects_oversized_patterns_and_zero_budget() {
        let g = generate(&GeneratorSpec::Path { n: 30 }).unwrap();
        let p = PatternGraph::k2t(11).unwrap(); // 13 vertices
        assert!(has_minor(&MinorQuery::new(&g, &p)).is_err());
        let p = PatternGraph::theta(2).unwrap();
        assert!(has_minor(&MinorQuery {
            host: &g,
            pattern: &p,
            node_budget: 0,
        })
        .is_err());
    }

    #[test]
    fn agrees_with_oracle_on_random_hosts() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x317);
        let patterns = [
            PatternGraph::theta(2).unwrap(),
            PatternGraph::theta(3).unwrap(),
            PatternGraph::k2t(2).unwrap(),
            PatternGraph::k2t(3).unwrap(),
        ];
        for trial in 0..120 {
            let n = rng.gen_range(3..=7);
            let p_edge = rng.gen_range(20..=70) as f64 / 100.0;
            let g = generate(&GeneratorSpec::Gnp {
                n,
                p: p_edge,
                seed: trial,
            })
            .unwrap();
            for pat in &patterns {
                let fast = decide(&g, pat);
                let slow = minor_oracle(&g, pat);
                match fast.outcome {
                    MinorOutcome::Present(m) => {
                        assert!(slow, "trial {trial} {:?}: search found spurious minor", pat.name);
                        let report = verify_fat_model(&g, &m, 0);
                        assert!(report.valid, "{:?}", report.violations);
                    }
                    MinorOutcome::Absent => {
                        assert!(!slow, "trial {trial} {:?}: search missed a minor", pat.name)
                    }
                    MinorOutcome::Unknown => panic!("budget too small for a 7-vertex host"),
                }
            }
        }
    }

    #[test]
    fn monotone_under_edge_addition_and_vertex_deletion() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let pat = PatternGraph::k2t(2).unwrap();
        for trial in 0..40 {
            let n = rng.gen_range(4..=8);
            let g = generate(&GeneratorSpec::Gnp {
                n,
                p: 0.4,
                seed: 1000 + trial,
            })
            .unwrap();
            let before = matches!(decide(&g, &pat).outcome, MinorOutcome::Present(_));
            // add one absent edge, if any
            let mut added = None;
            'search: for u in 0..n {
                for v in (u + 1)..n {
                    if !g.has_edge(u, v) {
                        added = Some((u, v));
                        break 'search;
                    }
                }
            }
            if let Some((u, v)) = added {
                let mut bigger = g.clone();
                bigger.add_edge(u, v).unwrap();
                let after = matches!(decide(&bigger, &pat).outcome, MinorOutcome::Present(_));
                assert!(!before || after, "adding an edge lost the minor");
            }
            // delete the last vertex
            let sub_edges: Vec<(usize, usize)> = g
                .edges()
                .into_iter()
                .filter(|&(u, v)| u < n - 1 && v < n - 1)
                .collect();
            let sub = Graph::from_edges(n - 1, &sub_edges).unwrap();
            let smaller = matches!(decide(&sub, &pat).outcome, MinorOutcome::Present(_));
            assert!(!smaller || before, "deleting a vertex created a minor");
        }
    }
}
