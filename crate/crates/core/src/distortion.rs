//! Additive-distortion estimation: the smallest fatness at which the
//! partition construction succeeds, with certificates on both sides.
//!
//! For each attempted `K` the builder runs at internal fatness `3K`; a
//! failed attempt therefore converts (by subdividing the theta witness, or
//! by pulling a quotient minor back through the partition) into a `K`-fat
//! model of the bipartite pattern, and a successful attempt yields a
//! quotient graph confirmed pattern-minor-free by the exact checker plus a
//! measured quasi-isometry.  The report brackets the optimal embedding
//! distortion between `c * (K_min - 1)` (with the universal constant `c`
//! left symbolic) and the measured multiplier times `K_min`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::minor::{has_minor, MinorOutcome, MinorQuery};
use crate::model::{subdivide_model, verify_fat_model, FatModel};
use crate::partition::{
    build_partition, compute_constants, extract_fat_model, quasi_isometry, scaled_constants,
    verify_partition, BuildOutcome, ConstantsProfile, LayeredPartition, QIReport,
};
use crate::pattern::PatternGraph;

/// How constants are chosen for each attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfilePolicy {
    PaperExact,
    Scaled { n_cap: u64 },
}

impl ProfilePolicy {
    fn profile(&self, t: usize, fatness: u32) -> Result<ConstantsProfile> {
        match *self {
            ProfilePolicy::PaperExact => compute_constants(t, fatness),
            ProfilePolicy::Scaled { n_cap } => scaled_constants(t, fatness, n_cap),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DistortionOptions {
    /// Try every `K = 1, 2, 3, ...` instead of doubling plus binary search.
    pub exhaustive: bool,
    /// Re-verify all stored certificates before reporting.
    pub paranoid: bool,
    /// Node budget for each exact minor check.
    pub minor_budget: u64,
    /// Cap on attempted `K`; defaults to the host order.
    pub max_k: Option<u32>,
}

impl Default for DistortionOptions {
    fn default() -> Self {
        DistortionOptions {
            exhaustive: false,
            paranoid: false,
            minor_budget: 5_000_000,
            max_k: None,
        }
    }
}

/// What happened at one attempted fatness.
#[derive(Debug, Clone)]
pub enum AttemptOutcome {
    /// Partition built and its quotient confirmed pattern-minor-free.
    Success {
        partition: LayeredPartition,
        minor_nodes: u64,
    },
    /// A `K`-fat model of the bipartite pattern was found.
    Failure {
        witness: FatModel,
        provenance: String,
    },
    /// Neither confirmed: builder error or exhausted minor-check budget.
    Unknown { detail: String },
}

#[derive(Debug, Clone)]
pub struct Attempt {
    pub k: u32,
    pub outcome: AttemptOutcome,
}

/// Full result of the search, serializable with all certificates.
#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub t: usize,
    pub k_min: u32,
    pub attempts: Vec<Attempt>,
    /// The successful partition at `k_min`.
    pub partition: LayeredPartition,
    pub qi: QIReport,
    /// `(k_min - 1)`-fat witness from the last failed attempt, if any.
    pub lower_bound_witness: Option<FatModel>,
    /// Injective map of host vertices into the star-augmented quotient.
    pub embedding: Vec<usize>,
    pub h_prime_n: usize,
    pub h_prime_edges: Vec<(usize, usize)>,
    /// Measured multiplier times `k_min`.
    pub upper_estimate: u64,
    /// Lower end of the bracket, with the universal constant symbolic.
    pub lower_symbolic: String,
    pub embedding_pairs_checked: u64,
    pub embedding_violations: Vec<String>,
    /// Present when `paranoid` was set: did every re-verification pass?
    pub paranoid_ok: Option<bool>,
}

#[derive(Serialize)]
struct AttemptJson {
    k: u32,
    kind: &'static str,
    detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<serde_json::Value>,
}

impl DistortionReport {
    pub fn to_json(&self) -> String {
        let attempts: Vec<AttemptJson> = self
            .attempts
            .iter()
            .map(|a| match &a.outcome {
                AttemptOutcome::Success { minor_nodes, .. } => AttemptJson {
                    k: a.k,
                    kind: "success",
                    detail: format!("quotient confirmed minor-free ({minor_nodes} search nodes)"),
                    witness: None,
                },
                AttemptOutcome::Failure {
                    witness,
                    provenance,
                } => AttemptJson {
                    k: a.k,
                    kind: "failure",
                    detail: provenance.clone(),
                    witness: serde_json::from_str(&witness.to_json()).ok(),
                },
                AttemptOutcome::Unknown { detail } => AttemptJson {
                    k: a.k,
                    kind: "unknown",
                    detail: detail.clone(),
                    witness: None,
                },
            })
            .collect();
        let doc = serde_json::json!({
            "schema": "coarse-minor/distortion-report/1",
            "t": self.t,
            "K_min": self.k_min,
            "attempts": attempts,
            "partition": serde_json::from_str::<serde_json::Value>(&self.partition.to_json())
                .expect("partition serializes"),
            "quasi_isometry": self.qi,
            "lower_bound_witness": self
                .lower_bound_witness
                .as_ref()
                .and_then(|w| serde_json::from_str::<serde_json::Value>(&w.to_json()).ok()),
            "embedding": self.embedding,
            "h_prime": { "n": self.h_prime_n, "edges": self.h_prime_edges },
            "bracket": {
                "lower": self.lower_symbolic,
                "upper": self.upper_estimate,
            },
            "embedding_pairs_checked": self.embedding_pairs_checked,
            "embedding_violations": self.embedding_violations,
            "paranoid_ok": self.paranoid_ok,
        });
        serde_json::to_string_pretty(&doc).expect("report serialization cannot fail")
    }
}

/// Makes a vertex-to-node map injective by hanging fresh leaves off
/// overloaded nodes: a node with `c >= 2` preimages gets `c - 1` leaves and
/// keeps its least preimage.
pub fn star_augment(h: &Graph, phi: &[usize]) -> Result<(Graph, Vec<usize>)> {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); h.n()];
    for (v, &node) in phi.iter().enumerate() {
        if node >= h.n() {
            return Err(Error::Invalid(format!(
                "vertex {v} maps to {node}, outside the target graph"
            )));
        }
        groups[node].push(v);
    }
    let mut edges = h.edges();
    let mut phi_prime = phi.to_vec();
    let mut next = h.n();
    for (node, group) in groups.iter().enumerate() {
        for &v in group.iter().skip(1) {
            edges.push((node, next));
            phi_prime[v] = next;
            next += 1;
        }
    }
    let h_prime = Graph::from_edges(next, &edges)?;
    Ok((h_prime, phi_prime))
}

/// Deletes quotient edges one at a time while the pattern stays a minor,
/// yielding an edge-minimal (hence, for 2-connected-closed patterns,
/// subgraph-minimal) subgraph.  An `Unknown` check keeps the edge.
fn minimize_subgraph(
    h: &Graph,
    pattern: &PatternGraph,
    budget: u64,
) -> Result<Vec<(usize, usize)>> {
    let mut edges = h.edges();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..edges.len() {
            let mut test = edges.clone();
            test.remove(i);
            let sub = Graph::from_edges(h.n(), &test)?;
            let ans = has_minor(&MinorQuery {
                host: &sub,
                pattern,
                node_budget: budget,
            })?;
            if matches!(ans.outcome, MinorOutcome::Present(_)) {
                edges = test;
                changed = true;
                break;
            }
        }
    }
    Ok(edges)
}

/// Joins an outer fat model of a quotient subgraph with an inner
/// (contraction-style, two-vertex-path) minor certificate on that subgraph
/// into a fat model of the inner pattern in the host.
fn compose_witness(
    outer: &FatModel,
    j_edges: &[(usize, usize)],
    node_map: &[usize],
    inner: &FatModel,
    claimed: u32,
) -> Result<FatModel> {
    // j_edges uses quotient node ids in outer pattern-edge order; translate
    // to outer pattern indices (positions in node_map)
    let local = |h: usize| -> Result<usize> {
        node_map
            .binary_search(&h)
            .map_err(|_| Error::Invalid(format!("quotient node {h} missing from the outer model")))
    };
    let mut outer_edge_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (f, &(a, b)) in j_edges.iter().enumerate() {
        let (a, b) = (local(a)?, local(b)?);
        outer_edge_of.insert((a.min(b), a.max(b)), f);
    }

    let mut branch_sets: Vec<Vec<usize>> = Vec::with_capacity(inner.branch_sets.len());
    for set in &inner.branch_sets {
        let mut composed: Vec<usize> = Vec::new();
        for &a in set {
            composed.extend_from_slice(&outer.branch_sets[a]);
        }
        // connect the constituents via the outer paths of internal edges
        for (i, &a) in set.iter().enumerate() {
            for &b in set.iter().skip(i + 1) {
                if let Some(&f) = outer_edge_of.get(&(a.min(b), a.max(b))) {
                    composed.extend_from_slice(&outer.branch_paths[f]);
                }
            }
        }
        composed.sort_unstable();
        composed.dedup();
        branch_sets.push(composed);
    }

    let mut branch_paths: Vec<Vec<usize>> = Vec::with_capacity(inner.branch_paths.len());
    for path in &inner.branch_paths {
        if path.len() != 2 {
            return Err(Error::Invalid(
                "inner certificate must use two-vertex branch paths".into(),
            ));
        }
        let (a, b) = (path[0], path[1]);
        let &f = outer_edge_of.get(&(a.min(b), a.max(b))).ok_or_else(|| {
            Error::Invalid(format!(
                "inner path uses ({a}, {b}), not an edge of the outer model"
            ))
        })?;
        branch_paths.push(outer.branch_paths[f].clone());
    }

    Ok(FatModel {
        pattern: inner.pattern.clone(),
        branch_sets,
        branch_paths,
        claimed_fatness: claimed,
    })
}

/// The quotient contains the pattern as a minor: shrink it to a minimal
/// 2-connected subgraph, pull that subgraph back into the host as a fat
/// model, and compose with the minor certificate.
fn pull_back_witness(
    g: &Graph,
    lp: &LayeredPartition,
    pattern: &PatternGraph,
    budget: u64,
    claimed: u32,
) -> Result<FatModel> {
    let h = lp.quotient()?;
    let j_edges = minimize_subgraph(&h, pattern, budget)?;
    let mut j_nodes: Vec<usize> = j_edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    j_nodes.sort_unstable();
    j_nodes.dedup();

    // inner certificate on the minimal subgraph, in local indices
    let local_edges: Vec<(usize, usize)> = j_edges
        .iter()
        .map(|&(a, b)| {
            (
                j_nodes.binary_search(&a).unwrap(),
                j_nodes.binary_search(&b).unwrap(),
            )
        })
        .collect();
    let jg = Graph::from_edges(j_nodes.len(), &local_edges)?;
    let ans = has_minor(&MinorQuery {
        host: &jg,
        pattern,
        node_budget: budget,
    })?;
    let inner = match ans.outcome {
        MinorOutcome::Present(m) => *m,
        _ => {
            return Err(Error::Invalid(
                "minimized subgraph lost the pattern minor".into(),
            ))
        }
    };

    let (outer, node_map) = extract_fat_model(g, lp, &j_nodes, &j_edges)?;
    // translate inner host vertices (jg ids) to outer pattern indices;
    // node_map is sorted, so jg id i corresponds to pattern index i already
    debug_assert_eq!(node_map, j_nodes);
    compose_witness(&outer, &j_edges, &node_map, &inner, claimed)
}

fn run_attempt(
    g: &Graph,
    t: usize,
    policy: ProfilePolicy,
    opts: &DistortionOptions,
    k: u32,
) -> Attempt {
    let unknown = |detail: String| Attempt {
        k,
        outcome: AttemptOutcome::Unknown { detail },
    };
    let fatness = match k.checked_mul(3) {
        Some(f) => f,
        None => return unknown("fatness 3K overflows".into()),
    };
    let profile = match policy.profile(t, fatness) {
        Ok(p) => p,
        Err(e) => return unknown(format!("profile error: {e}")),
    };
    let built = match build_partition(g, &profile, None) {
        Ok(b) => b,
        Err(e) => return unknown(format!("builder error: {e}")),
    };
    match built.outcome {
        BuildOutcome::Witness(w) => match subdivide_model(g, &w, k) {
            Ok(witness) => Attempt {
                k,
                outcome: AttemptOutcome::Failure {
                    witness,
                    provenance: "frontier audit found a fat theta model; \
                                 subdivided into the bipartite pattern"
                        .into(),
                },
            },
            Err(e) => unknown(format!("witness subdivision failed: {e}")),
        },
        BuildOutcome::Partition(lp) => {
            let pattern = match PatternGraph::k2t(t) {
                Ok(p) => p,
                Err(e) => return unknown(format!("pattern error: {e}")),
            };
            let h = match lp.quotient() {
                Ok(h) => h,
                Err(e) => return unknown(format!("quotient error: {e}")),
            };
            let ans = match has_minor(&MinorQuery {
                host: &h,
                pattern: &pattern,
                node_budget: opts.minor_budget,
            }) {
                Ok(a) => a,
                Err(e) => return unknown(format!("minor check error: {e}")),
            };
            match ans.outcome {
                MinorOutcome::Absent => Attempt {
                    k,
                    outcome: AttemptOutcome::Success {
                        partition: lp,
                        minor_nodes: ans.nodes_explored,
                    },
                },
                MinorOutcome::Unknown => {
                    unknown("minor-check budget exhausted on the quotient".into())
                }
                MinorOutcome::Present(_) => {
                    match pull_back_witness(g, &lp, &pattern, opts.minor_budget, k) {
                        Ok(witness) => Attempt {
                            k,
                            outcome: AttemptOutcome::Failure {
                                witness,
                                provenance: "quotient contains the pattern; \
                                             pulled back through the partition"
                                    .into(),
                            },
                        },
                        Err(e) => unknown(format!("witness pull-back failed: {e}")),
                    }
                }
            }
        }
    }
}

/// Finds the smallest fatness `K_min` at which the construction succeeds,
/// together with certificates, an injective embedding into the augmented
/// quotient, and a distortion bracket.
pub fn approximate_distortion(
    g: &Graph,
    t: usize,
    policy: ProfilePolicy,
    opts: &DistortionOptions,
) -> Result<DistortionReport> {
    if t < 3 {
        return Err(Error::Hypothesis("distortion search needs t >= 3".into()));
    }
    if g.n() == 0 || !g.is_connected() {
        return Err(Error::Hypothesis(
            "host must be nonempty and connected; split components first".into(),
        ));
    }
    let cap = opts.max_k.unwrap_or(g.n().max(1) as u32).max(1);

    let mut cache: BTreeMap<u32, Attempt> = BTreeMap::new();
    let attempt = |cache: &mut BTreeMap<u32, Attempt>, k: u32| -> Attempt {
        cache
            .entry(k)
            .or_insert_with(|| run_attempt(g, t, policy, opts, k))
            .clone()
    };
    let succeeded =
        |a: &Attempt| -> bool { matches!(a.outcome, AttemptOutcome::Success { .. }) };

    let mut k_min = None;
    if opts.exhaustive {
        for k in 1..=cap {
            if succeeded(&attempt(&mut cache, k)) {
                k_min = Some(k);
                break;
            }
        }
    } else {
        // doubling, then binary search between the last miss and first hit
        let mut lo = 0u32; // largest attempted non-success
        let mut hi = None;
        let mut k = 1u32;
        loop {
            let a = attempt(&mut cache, k);
            if succeeded(&a) {
                hi = Some(k);
                break;
            }
            lo = k;
            if k >= cap {
                break;
            }
            k = k.saturating_mul(2).min(cap);
        }
        if let Some(mut hi) = hi {
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if succeeded(&attempt(&mut cache, mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            k_min = Some(hi);
        }
    }
    let mut k_min = k_min.ok_or_else(|| {
        Error::Budget(format!(
            "no attempt up to K = {cap} succeeded; raise the cap or the minor-check budget"
        ))
    })?;
    // the witness must come from the attempt directly below the optimum
    while k_min > 1 && succeeded(&attempt(&mut cache, k_min - 1)) {
        k_min -= 1;
    }

    let partition = match &cache[&k_min].outcome {
        AttemptOutcome::Success { partition, .. } => partition.clone(),
        _ => unreachable!("k_min marks a success"),
    };
    let lower_bound_witness = if k_min > 1 {
        match &cache[&(k_min - 1)].outcome {
            AttemptOutcome::Failure { witness, .. } => Some(witness.clone()),
            _ => None,
        }
    } else {
        None
    };

    let qi = quasi_isometry(g, &partition)?;
    let owners = partition.owners(g.n())?;
    let h = partition.quotient()?;
    let (h_prime, embedding) = star_augment(&h, &owners)?;

    // empirical check of both inequalities against the augmented target
    let mut embedding_violations = Vec::new();
    let mut pairs = 0u64;
    let sources: Vec<usize> = if g.n() <= 1500 {
        (0..g.n()).collect()
    } else {
        (0..g.n()).step_by(g.n() / 200 + 1).collect()
    };
    let m_bound = qi.multiplicative;
    let r = qi.r_used as u64;
    for &u in &sources {
        let dg = g.dist_from(&[u], None);
        let dh = h_prime.dist_from(&[embedding[u]], None);
        for v in 0..g.n() {
            if v == u {
                continue;
            }
            pairs += 1;
            let (dgv, dhv) = (dg[v] as u64, dh[embedding[v]] as u64);
            if dhv > dgv + 2 {
                embedding_violations
                    .push(format!("augmented distance for ({u}, {v}) exceeds d_G + 2"));
            }
            if dgv > m_bound * dhv + r {
                embedding_violations
                    .push(format!("d_G({u}, {v}) exceeds the claimed bound via the target"));
            }
            if embedding_violations.len() > 20 {
                break;
            }
        }
        if embedding_violations.len() > 20 {
            break;
        }
    }

    let paranoid_ok = if opts.paranoid {
        let mut ok = verify_partition(g, &partition)?.valid && qi.valid;
        for a in cache.values() {
            match &a.outcome {
                AttemptOutcome::Failure { witness, .. } => {
                    ok &= verify_fat_model(g, witness, a.k).valid;
                }
                AttemptOutcome::Success { partition, .. } => {
                    ok &= verify_partition(g, partition)?.valid;
                }
                AttemptOutcome::Unknown { .. } => {}
            }
        }
        Some(ok)
    } else {
        None
    };

    Ok(DistortionReport {
        t,
        k_min,
        attempts: cache.into_values().collect(),
        partition,
        qi,
        lower_bound_witness,
        embedding,
        h_prime_n: h_prime.n(),
        h_prime_edges: h_prime.edges(),
        upper_estimate: m_bound * k_min as u64,
        lower_symbolic: format!("c * {}", k_min - 1),
        embedding_pairs_checked: pairs,
        embedding_violations,
        paranoid_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorSpec};

    #[test]
    fn star_augment_injective_map_is_identity() {
        let h = generate(&GeneratorSpec::Path { n: 4 }).unwrap();
        let phi = vec![0, 1, 2, 3];
        let (h2, phi2) = star_augment(&h, &phi).unwrap();
        assert_eq!(h2.n(), 4);
        assert_eq!(h2.m(), 3);
        assert_eq!(phi2, phi);
    }

    #[test]
    fn star_augment_splits_collisions() {
        let h = generate(&GeneratorSpec::Path { n: 2 }).unwrap();
        let phi = vec![0, 0, 1];
        let (h2, phi2) = star_augment(&h, &phi).unwrap();
        assert_eq!(h2.n(), 3, "one leaf added");
        assert_eq!(phi2, vec![0, 2, 1]);
        assert!(h2.has_edge(0, 2));
        // injectivity
        let mut seen = phi2.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), phi2.len());
    }

    #[test]
    fn path_needs_no_distortion() {
        let g = generate(&GeneratorSpec::Path { n: 100 }).unwrap();
        let report = approximate_distortion(
            &g,
            3,
            ProfilePolicy::PaperExact,
            &DistortionOptions {
                paranoid: true,
                ..DistortionOptions::default()
            },
        )
        .unwrap();
        assert_eq!(report.k_min, 1);
        assert_eq!(report.partition.bags.len(), 1, "single bag swallows P100");
        assert!(report.lower_bound_witness.is_none());
        assert!(report.embedding_violations.is_empty());
        assert_eq!(report.paranoid_ok, Some(true));
        let json = report.to_json();
        assert!(json.contains("coarse-minor/distortion-report/1"));
    }

    #[test]
    fn cycle_needs_no_distortion() {
        let g = generate(&GeneratorSpec::Cycle { n: 50 }).unwrap();
        let report =
            approximate_distortion(&g, 3, ProfilePolicy::PaperExact, &DistortionOptions::default())
                .unwrap();
        assert_eq!(report.k_min, 1);
        assert!(report.embedding_violations.is_empty());
    }

    #[test]
    fn random_trees_need_no_distortion() {
        for seed in 0..5 {
            let g = generate(&GeneratorSpec::RandomTree { n: 80, seed }).unwrap();
            let report = approximate_distortion(
                &g,
                3,
                ProfilePolicy::PaperExact,
                &DistortionOptions::default(),
            )
            .unwrap();
            assert_eq!(report.k_min, 1, "seed {seed}");
        }
    }

    #[test]
    fn fat_theta_host_forces_distortion() {
        let g = generate(&GeneratorSpec::Theta { t: 3, leg: 600 }).unwrap();
        let report = approximate_distortion(
            &g,
            3,
            ProfilePolicy::Scaled { n_cap: 1 },
            &DistortionOptions {
                paranoid: true,
                ..DistortionOptions::default()
            },
        )
        .unwrap();
        assert!(report.k_min >= 2, "got K_min = {}", report.k_min);
        let witness = report
            .lower_bound_witness
            .as_ref()
            .expect("failed attempt below K_min leaves a witness");
        let check = verify_fat_model(&g, witness, report.k_min - 1);
        assert!(check.valid, "{:?}", check.violations);
        assert_eq!(witness.pattern.vertices, 5, "bipartite pattern K_{{2,3}}");
        assert_eq!(report.paranoid_ok, Some(true));
        // the successful quotient is confirmed minor-free by the attempt
        let h = report.partition.quotient().unwrap();
        let ans = has_minor(&MinorQuery::new(&h, &PatternGraph::k2t(3).unwrap())).unwrap();
        assert!(matches!(ans.outcome, MinorOutcome::Absent));
    }

    #[test]
    fn exhaustive_agrees_with_doubling() {
        let g = generate(&GeneratorSpec::Theta { t: 3, leg: 200 }).unwrap();
        let fast = approximate_distortion(
            &g,
            3,
            ProfilePolicy::Scaled { n_cap: 1 },
            &DistortionOptions::default(),
        )
        .unwrap();
        let slow = approximate_distortion(
            &g,
            3,
            ProfilePolicy::Scaled { n_cap: 1 },
            &DistortionOptions {
                exhaustive: true,
                ..DistortionOptions::default()
            },
        )
        .unwrap();
        assert_eq!(fast.k_min, slow.k_min);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = generate(&GeneratorSpec::Path { n: 10 }).unwrap();
        assert!(approximate_distortion(
            &g,
            2,
            ProfilePolicy::PaperExact,
            &DistortionOptions::default()
        )
        .is_err());
        let split = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        assert!(approximate_distortion(
            &split,
            3,
            ProfilePolicy::PaperExact,
            &DistortionOptions::default()
        )
        .is_err());
    }
}
