//! Fat minor models: representation, exact fatness verification, and the
//! subdivision transformation.
//!
//! A model of a pattern `J` in a host `G` assigns every pattern vertex `x` a
//! nonempty connected branch set `U_x` and every pattern edge `e = xy` a
//! branch path `E_e` running from `U_x` to `U_y`.  The model is `K`-fat when
//! every two distinct model objects that are not an incident set/path pair
//! are at distance at least `K` in `G`.  The 0-fat models are exactly the
//! ordinary minor models.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::pattern::PatternGraph;

/// A member of the model: a branch set (by pattern vertex) or a branch path
/// (by pattern edge index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelObject {
    BranchSet(usize),
    BranchPath(usize),
}

impl std::fmt::Display for ModelObject {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelObject::BranchSet(x) => write!(f, "U[{x}]"),
            ModelObject::BranchPath(e) => write!(f, "E[{e}]"),
        }
    }
}

/// One failed check.  Distance violations carry both objects and the
/// measured distance; structural problems carry a description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub object: ModelObject,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other: Option<ModelObject>,
    pub required: u32,
    pub actual: u32,
    pub detail: String,
}

/// Verification outcome; `valid` iff no violation was found.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FatnessReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

/// A (candidate) fat minor model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FatModel {
    pub pattern: PatternGraph,
    /// `branch_sets[x]` = `U_x`, sorted ascending.
    pub branch_sets: Vec<Vec<usize>>,
    /// `branch_paths[e]` = the vertex sequence of `E_e` for pattern edge `e`.
    pub branch_paths: Vec<Vec<usize>>,
    /// The fatness this model claims to achieve.
    pub claimed_fatness: u32,
}

const SCHEMA: &str = "coarse-minor/fat-model/1";

#[derive(Serialize, Deserialize)]
struct FatModelJson {
    schema: String,
    pattern: PatternGraph,
    branch_sets: BTreeMap<String, Vec<usize>>,
    branch_paths: BTreeMap<String, Vec<usize>>,
    fatness: u32,
}

impl FatModel {
    pub fn to_json(&self) -> String {
        let doc = FatModelJson {
            schema: SCHEMA.to_string(),
            pattern: self.pattern.clone(),
            branch_sets: self
                .branch_sets
                .iter()
                .enumerate()
                .map(|(i, s)| (i.to_string(), s.clone()))
                .collect(),
            branch_paths: self
                .branch_paths
                .iter()
                .enumerate()
                .map(|(i, p)| (i.to_string(), p.clone()))
                .collect(),
            fatness: self.claimed_fatness,
        };
        serde_json::to_string_pretty(&doc).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FatModelJson = serde_json::from_str(text)?;
        if doc.schema != SCHEMA {
            return Err(Error::Parse(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                doc.schema
            )));
        }
        let mut pattern = PatternGraph::new(doc.pattern.vertices, doc.pattern.edges)?;
        pattern.name = doc.pattern.name;
        let mut branch_sets = vec![Vec::new(); pattern.vertices];
        for (key, set) in doc.branch_sets {
            let i: usize = key
                .parse()
                .map_err(|_| Error::Parse(format!("bad branch set key {key:?}")))?;
            if i >= pattern.vertices {
                return Err(Error::Parse(format!("branch set key {i} out of range")));
            }
            branch_sets[i] = set;
        }
        let mut branch_paths = vec![Vec::new(); pattern.edges.len()];
        for (key, path) in doc.branch_paths {
            let i: usize = key
                .parse()
                .map_err(|_| Error::Parse(format!("bad branch path key {key:?}")))?;
            if i >= pattern.edges.len() {
                return Err(Error::Parse(format!("branch path key {i} out of range")));
            }
            branch_paths[i] = path;
        }
        let mut model = FatModel {
            pattern,
            branch_sets,
            branch_paths,
            claimed_fatness: doc.fatness,
        };
        for s in &mut model.branch_sets {
            s.sort_unstable();
            s.dedup();
        }
        Ok(model)
    }

    /// Vertices of one model object.
    fn object_vertices(&self, o: ModelObject) -> &[usize] {
        match o {
            ModelObject::BranchSet(x) => &self.branch_sets[x],
            ModelObject::BranchPath(e) => &self.branch_paths[e],
        }
    }

    fn objects(&self) -> Vec<ModelObject> {
        (0..self.branch_sets.len())
            .map(ModelObject::BranchSet)
            .chain((0..self.branch_paths.len()).map(ModelObject::BranchPath))
            .collect()
    }

    /// Incident pairs (a branch path with one of its endpoint branch sets)
    /// are exempt from the distance requirement.
    fn incident(&self, a: ModelObject, b: ModelObject) -> bool {
        let (x, e) = match (a, b) {
            (ModelObject::BranchSet(x), ModelObject::BranchPath(e)) => (x, e),
            (ModelObject::BranchPath(e), ModelObject::BranchSet(x)) => (x, e),
            _ => return false,
        };
        let (u, v) = self.pattern.edges[e];
        x == u || x == v
    }
}

fn structural(report: &mut Vec<Violation>, object: ModelObject, detail: String) {
    report.push(Violation {
        object,
        other: None,
        required: 0,
        actual: 0,
        detail,
    });
}

/// Checks model structure (branch sets nonempty, connected, disjoint;
/// branch paths genuine internally disjoint paths with correctly attached
/// endpoints) and, for every unordered non-incident pair of model objects,
/// that their distance in `g` is at least `k`.  Structural problems are
/// reported as violations, never as errors.
pub fn verify_fat_model(g: &Graph, m: &FatModel, k: u32) -> FatnessReport {
    let mut violations = Vec::new();
    let n = g.n();

    // --- shape ---
    if m.branch_sets.len() != m.pattern.vertices {
        structural(
            &mut violations,
            ModelObject::BranchSet(0),
            format!(
                "expected {} branch sets, found {}",
                m.pattern.vertices,
                m.branch_sets.len()
            ),
        );
        return FatnessReport {
            valid: false,
            violations,
        };
    }
    if m.branch_paths.len() != m.pattern.edges.len() {
        structural(
            &mut violations,
            ModelObject::BranchPath(0),
            format!(
                "expected {} branch paths, found {}",
                m.pattern.edges.len(),
                m.branch_paths.len()
            ),
        );
        return FatnessReport {
            valid: false,
            violations,
        };
    }
    for o in m.objects() {
        if let Some(&v) = m.object_vertices(o).iter().find(|&&v| v >= n) {
            structural(&mut violations, o, format!("vertex {v} outside host"));
            return FatnessReport {
                valid: false,
                violations,
            };
        }
    }

    // --- branch sets: nonempty, connected, pairwise disjoint ---
    let mut owner = vec![usize::MAX; n];
    for (x, set) in m.branch_sets.iter().enumerate() {
        let o = ModelObject::BranchSet(x);
        if set.is_empty() {
            structural(&mut violations, o, "branch set is empty".into());
            continue;
        }
        for &v in set {
            if owner[v] != usize::MAX {
                structural(
                    &mut violations,
                    o,
                    format!("vertex {v} also lies in U[{}]", owner[v]),
                );
            } else {
                owner[v] = x;
            }
        }
        // connectivity within the induced subgraph on the set itself
        let mut inside = vec![false; n];
        for &v in set {
            inside[v] = true;
        }
        let mut stack = vec![set[0]];
        inside[set[0]] = false;
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for &w in g.neighbors(v) {
                if inside[w] {
                    inside[w] = false;
                    reached += 1;
                    stack.push(w);
                }
            }
        }
        if reached != set.len() {
            structural(&mut violations, o, "branch set is disconnected".into());
        }
    }

    // --- branch paths ---
    let in_or_adjacent = |set: &[usize], v: usize| -> bool {
        set.binary_search(&v).is_ok() || g.neighbors(v).iter().any(|w| set.binary_search(w).is_ok())
    };
    for (e, path) in m.branch_paths.iter().enumerate() {
        let o = ModelObject::BranchPath(e);
        let (x, y) = m.pattern.edges[e];
        if path.is_empty() {
            structural(&mut violations, o, "branch path is empty".into());
            continue;
        }
        let mut sorted = path.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != path.len() {
            structural(&mut violations, o, "branch path repeats a vertex".into());
        }
        for w in path.windows(2) {
            if !g.has_edge(w[0], w[1]) {
                structural(
                    &mut violations,
                    o,
                    format!("consecutive vertices {} and {} are not adjacent", w[0], w[1]),
                );
            }
        }
        let first = path[0];
        let last = *path.last().unwrap();
        let forward =
            in_or_adjacent(&m.branch_sets[x], first) && in_or_adjacent(&m.branch_sets[y], last);
        let backward =
            in_or_adjacent(&m.branch_sets[y], first) && in_or_adjacent(&m.branch_sets[x], last);
        if !forward && !backward {
            structural(
                &mut violations,
                o,
                format!("endpoints do not attach to U[{x}] and U[{y}]"),
            );
        }
        for (i, &v) in path.iter().enumerate() {
            let own = owner[v];
            if own == usize::MAX {
                continue;
            }
            let endpoint_ok = (i == 0 || i + 1 == path.len()) && (own == x || own == y);
            if !endpoint_ok {
                structural(
                    &mut violations,
                    o,
                    format!("vertex {v} lies in branch set U[{own}]"),
                );
            }
        }
    }
    // internal disjointness between branch paths: shared vertices must be
    // endpoints of both paths
    for e in 0..m.branch_paths.len() {
        for f in (e + 1)..m.branch_paths.len() {
            let (pe, pf) = (&m.branch_paths[e], &m.branch_paths[f]);
            if pe.is_empty() || pf.is_empty() {
                continue;
            }
            for (i, &v) in pe.iter().enumerate() {
                let internal_e = i != 0 && i + 1 != pe.len();
                if let Some(j) = pf.iter().position(|&w| w == v) {
                    let internal_f = j != 0 && j + 1 != pf.len();
                    if internal_e || internal_f {
                        structural(
                            &mut violations,
                            ModelObject::BranchPath(e),
                            format!("shares internal vertex {v} with E[{f}]"),
                        );
                    }
                }
            }
        }
    }

    // --- pairwise distances ---
    let objects = m.objects();
    for (i, &a) in objects.iter().enumerate() {
        let va = m.object_vertices(a);
        if va.is_empty() {
            continue;
        }
        let dist = g.dist_from(va, None);
        for &b in objects.iter().skip(i + 1) {
            if m.incident(a, b) {
                continue;
            }
            let vb = m.object_vertices(b);
            if vb.is_empty() {
                continue;
            }
            let actual = vb.iter().map(|&v| dist[v]).min().unwrap();
            if actual < k {
                violations.push(Violation {
                    object: a,
                    other: Some(b),
                    required: k,
                    actual,
                    detail: format!("{a} and {b} are too close"),
                });
            }
        }
    }

    FatnessReport {
        valid: violations.is_empty(),
        violations,
    }
}

/// Turns a `3k`-fat model of a pattern `J` into a `k`-fat model of the
/// once-subdivided pattern.  On each branch path `E_e` (for `e = xy`) the
/// last vertex within distance `k` of `U_x` and the first later vertex
/// within distance `k` of `U_y` delimit the new branch set of the
/// subdivision vertex; the two new branch paths are shortest connectors of
/// length exactly `k` (for `k >= 1`).  For `k = 0` the new branch set is the
/// path interior and the connectors are single edges, which requires every
/// branch path to have at least one internal vertex.
pub fn subdivide_model(g: &Graph, m: &FatModel, k: u32) -> Result<FatModel> {
    let report = verify_fat_model(g, m, 3 * k);
    if !report.valid {
        let v = &report.violations[0];
        return Err(Error::Hypothesis(format!(
            "input model is not {}-fat: {} (required {}, actual {})",
            3 * k,
            v.detail,
            v.required,
            v.actual
        )));
    }

    let pattern = m.pattern.subdivide();
    let mut branch_sets = m.branch_sets.clone();
    let mut branch_paths = Vec::with_capacity(2 * m.branch_paths.len());

    for (e, raw_path) in m.branch_paths.iter().enumerate() {
        let (x, y) = m.pattern.edges[e];
        let ux = &m.branch_sets[x];
        let uy = &m.branch_sets[y];
        // orient the path from the U_x end
        let touches = |set: &[usize], v: usize| {
            set.binary_search(&v).is_ok()
                || g.neighbors(v).iter().any(|w| set.binary_search(w).is_ok())
        };
        let mut path = raw_path.clone();
        if !touches(ux, path[0]) || !touches(uy, *path.last().unwrap()) {
            path.reverse();
        }

        if k == 0 {
            // keep only vertices outside the two endpoint branch sets
            let inside = |set: &[usize], v: usize| set.binary_search(&v).is_ok();
            let a = path
                .iter()
                .position(|&v| !inside(ux, v))
                .ok_or_else(|| Error::Hypothesis(format!("branch path {e} never leaves U[{x}]")))?;
            let b = path
                .iter()
                .rposition(|&v| !inside(uy, v))
                .ok_or_else(|| Error::Hypothesis(format!("branch path {e} never leaves U[{y}]")))?;
            if a > b {
                return Err(Error::Hypothesis(format!(
                    "branch path {e} has no vertex outside both endpoint branch sets; \
                     cannot host a subdivision vertex at fatness 0"
                )));
            }
            let anchor_in = |set: &[usize], v: usize| -> Result<usize> {
                if let Some(&w) = g.neighbors(v).iter().find(|w| set.binary_search(w).is_ok()) {
                    Ok(w)
                } else {
                    Err(Error::Hypothesis(format!(
                        "vertex {v} of branch path {e} has no neighbour in its branch set"
                    )))
                }
            };
            let start = if a > 0 { path[a - 1] } else { anchor_in(ux, path[a])? };
            let end = if b + 1 < path.len() {
                path[b + 1]
            } else {
                anchor_in(uy, path[b])?
            };
            let mut core: Vec<usize> = path[a..=b].to_vec();
            branch_paths.push(vec![start, core[0]]);
            branch_paths.push(vec![end, *core.last().unwrap()]);
            core.sort_unstable();
            branch_sets.push(core);
            continue;
        }

        let dist_x = g.dist_from(ux, None);
        let dist_y = g.dist_from(uy, None);
        let i = path
            .iter()
            .rposition(|&v| dist_x[v] <= k)
            .ok_or_else(|| Error::Hypothesis(format!("branch path {e} starts too far from U[{x}]")))?;
        let j = (i + 1..path.len())
            .find(|&j| dist_y[path[j]] <= k)
            .ok_or_else(|| {
                Error::Hypothesis(format!("branch path {e} has no vertex near U[{y}] after index {i}"))
            })?;
        let connector_x = g
            .shortest_path_to(ux, |v| v == path[i], None)
            .ok_or_else(|| Error::Hypothesis(format!("U[{x}] cannot reach branch path {e}")))?;
        let connector_y = g
            .shortest_path_to(uy, |v| v == path[j], None)
            .ok_or_else(|| Error::Hypothesis(format!("U[{y}] cannot reach branch path {e}")))?;
        if connector_x.len() != k as usize + 1 || connector_y.len() != k as usize + 1 {
            return Err(Error::Hypothesis(format!(
                "connector for branch path {e} does not have length exactly {k}; \
                 the input model is closer than {}-fat",
                3 * k
            )));
        }
        branch_paths.push(connector_x);
        branch_paths.push(connector_y);
        let mut core: Vec<usize> = path[i..=j].to_vec();
        core.sort_unstable();
        branch_sets.push(core);
    }

    Ok(FatModel {
        pattern,
        branch_sets,
        branch_paths,
        claimed_fatness: k,
    })
}
