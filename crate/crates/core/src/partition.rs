//! Layered graph-partitions with bounded bags.
//!
//! The builder grows a partition of a connected host graph layer by layer
//! from a root ball.  At every step the frontier is split into groups, each
//! group is audited by the theta detectors (a failed audit aborts the build
//! and returns a fat theta model instead), and the surviving groups are
//! coarsened by two rounds of merging before becoming the next layer of
//! bags.  Everything the builder promises is re-checked from first
//! principles by [`verify_partition`]; bounded-diameter partitions induce a
//! quasi-isometry onto their quotient graph ([`quasi_isometry`]), and
//! 2-connected subgraphs of the quotient pull back to fat models of
//! themselves in the host ([`extract_fat_model`]).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, INF};
use crate::merging::{merge_partition, MergeProblem};
use crate::model::FatModel;
use crate::pattern::PatternGraph;
use crate::theta::{audit_attachments, audit_boundary, AuditOutcome};

/// How the working constants were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantsMode {
    /// The exact closed-form constants; astronomically conservative.
    PaperExact,
    /// Downscaled constants for desk-size experiments; outputs are accepted
    /// only if the independent verifiers pass.
    Scaled,
}

/// The numeric regime of one build: `t`, the fatness `k`, and the derived
/// (or overridden) bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantsProfile {
    pub mode: ConstantsMode,
    pub t: usize,
    pub k: u32,
    /// Family-size parameter `N`.
    pub n_cap: u64,
    /// Depth cap `ℓ`.
    pub ell: u64,
    /// Height cap `L'`.
    pub l_prime: u64,
    /// Group-diameter budget `R0`.
    pub r0: u64,
    /// Bag-diameter bound `R = R0 + 2 L'`.
    pub r_bound: u64,
    /// Whether the overrides keep all bag invariants enforceable
    /// (`L' >= 2ℓ + 3k`, so that minimal-height bags fit under `L'`).
    pub hypotheses_enforceable: bool,
}

fn mul(a: u64, b: u64) -> Result<u64> {
    a.checked_mul(b)
        .ok_or_else(|| Error::Overflow(format!("{a} * {b} exceeds u64")))
}

fn add(a: u64, b: u64) -> Result<u64> {
    a.checked_add(b)
        .ok_or_else(|| Error::Overflow(format!("{a} + {b} exceeds u64")))
}

fn constants_from_n(t: usize, k: u32, n_cap: u64, mode: ConstantsMode) -> Result<ConstantsProfile> {
    if t < 3 {
        return Err(Error::Invalid("profile needs t >= 3".into()));
    }
    if k < 1 {
        return Err(Error::Invalid("profile needs k >= 1".into()));
    }
    let k = k as u64;
    let r_small = (3 * k).div_ceil(2);
    let ell = add(r_small, mul(n_cap, 3 * k)?)?;
    let l_prime = add(mul(n_cap, add(mul(4, ell)?, 5 * k)?)?, add(mul(2, ell)?, 3 * k)?)?;
    // the only constraint on R0: it must dominate the diameter of a group
    // produced by both merge rounds
    let d_class = mul(18 * k, t as u64)?.saturating_sub(3 * k);
    let n_groups = mul(2, n_cap)?.max(2);
    let d1 = add(
        mul(n_groups, d_class)?,
        mul(n_groups - 1, add(2 * r_small, mul(n_groups, 3 * k)?)?)?,
    )?;
    let r0 = match mode {
        ConstantsMode::PaperExact => {
            let t = t as u64;
            add(mul(15 * k, t.checked_pow(12).ok_or_else(|| {
                Error::Overflow(format!("{t}^12 exceeds u64"))
            })?)?, mul(18 * k, t.pow(9))?)?
        }
        ConstantsMode::Scaled => add(
            mul(n_groups, d1)?,
            mul(
                n_groups - 1,
                add(mul(2, add(ell, 2 * k)?)?, mul(n_groups, add(mul(4, ell)?, 5 * k)?)?)?,
            )?,
        )?,
    };
    let r_bound = add(r0, mul(2, l_prime)?)?;
    Ok(ConstantsProfile {
        mode,
        t,
        k: k as u32,
        n_cap,
        ell,
        l_prime,
        r0,
        r_bound,
        hypotheses_enforceable: l_prime >= 2 * ell + 3 * k,
    })
}

/// Exact closed-form constants: `N = ceil((t-1)^3 (t-2) / 2)`,
/// `ℓ = ceil(3k/2) + 3kN`, `L' = N(4ℓ+5k) + 2ℓ + 3k`,
/// `R0 = 15 t^12 k + 18 t^9 k`, `R = R0 + 2L'`.
pub fn compute_constants(t: usize, k: u32) -> Result<ConstantsProfile> {
    if t < 3 {
        return Err(Error::Invalid("profile needs t >= 3".into()));
    }
    let tt = t as u64;
    let n_cap = mul((tt - 1).pow(3), tt - 2)?.div_ceil(2);
    constants_from_n(t, k, n_cap, ConstantsMode::PaperExact)
}

/// Downscaled constants: the same formulas with a small family-size
/// parameter `n_cap` (and an `R0` just large enough for the merge-diameter
/// bound instead of the closed form).
pub fn scaled_constants(t: usize, k: u32, n_cap: u64) -> Result<ConstantsProfile> {
    if n_cap == 0 {
        return Err(Error::Invalid("scaled profile needs N >= 1".into()));
    }
    constants_from_n(t, k, n_cap, ConstantsMode::Scaled)
}

/// Fully explicit overrides; validated, with the enforceability of the bag
/// invariants recorded rather than assumed.
pub fn custom_constants(
    t: usize,
    k: u32,
    n_cap: u64,
    ell: u64,
    l_prime: u64,
    r0: u64,
) -> Result<ConstantsProfile> {
    if t < 3 || k < 1 {
        return Err(Error::Invalid("profile needs t >= 3 and k >= 1".into()));
    }
    let kk = k as u64;
    if ell < (3 * kk).div_ceil(2) {
        return Err(Error::Invalid(format!(
            "L = {ell} is below ceil(3k/2) = {}; depths could not stay positive",
            (3 * kk).div_ceil(2)
        )));
    }
    if l_prime < add(ell, 2 * kk)? {
        return Err(Error::Invalid(format!(
            "L' = {l_prime} is below L + 2k = {}",
            ell + 2 * kk
        )));
    }
    Ok(ConstantsProfile {
        mode: ConstantsMode::Scaled,
        t,
        k,
        n_cap,
        ell,
        l_prime,
        r0,
        r_bound: add(r0, mul(2, l_prime)?)?,
        hypotheses_enforceable: l_prime >= 2 * ell + 3 * kk,
    })
}

/// One partition class with its bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bag {
    pub layer: usize,
    /// Sorted vertex set `V_h`.
    pub vertices: Vec<usize>,
    /// Sorted attachment set: the root's chosen center, or the vertices
    /// with a neighbour one layer down.
    pub attachment: Vec<usize>,
    /// Nominal height: `V_h` is the ball of this radius around the
    /// attachment set in the graph minus the previous layers.
    pub height: u32,
    /// Depth of the undergrowth below the attachment set.
    pub depth: u32,
}

/// A layered partition of a host graph together with its quotient graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredPartition {
    pub root: usize,
    /// Quotient-graph edges between bag indices.
    pub h_edges: Vec<(usize, usize)>,
    pub bags: Vec<Bag>,
    pub profile: ConstantsProfile,
}

const SCHEMA: &str = "coarse-minor/partition/1";

#[derive(Serialize, Deserialize)]
struct PartitionJson {
    schema: String,
    root: usize,
    #[serde(rename = "H_edges")]
    h_edges: Vec<(usize, usize)>,
    bags: BTreeMap<String, Bag>,
    profile: ConstantsProfile,
}

impl LayeredPartition {
    pub fn to_json(&self) -> String {
        let doc = PartitionJson {
            schema: SCHEMA.to_string(),
            root: self.root,
            h_edges: self.h_edges.clone(),
            bags: self
                .bags
                .iter()
                .enumerate()
                .map(|(i, b)| (i.to_string(), b.clone()))
                .collect(),
            profile: self.profile,
        };
        serde_json::to_string_pretty(&doc).expect("partition serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PartitionJson = serde_json::from_str(text)?;
        if doc.schema != SCHEMA {
            return Err(Error::Parse(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                doc.schema
            )));
        }
        let mut bags = vec![None; doc.bags.len()];
        for (key, bag) in doc.bags {
            let i: usize = key
                .parse()
                .map_err(|_| Error::Parse(format!("bad bag key {key:?}")))?;
            if i >= bags.len() {
                return Err(Error::Parse(format!(
                    "bag keys must be 0..{} without gaps",
                    bags.len()
                )));
            }
            bags[i] = Some(bag);
        }
        let bags: Vec<Bag> = bags
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Parse("duplicate bag key".into()))?;
        Ok(LayeredPartition {
            root: doc.root,
            h_edges: doc.h_edges,
            bags,
            profile: doc.profile,
        })
    }

    /// The quotient graph on bag indices.
    pub fn quotient(&self) -> Result<Graph> {
        let mut h = Graph::new(self.bags.len());
        for &(a, b) in &self.h_edges {
            if !h.has_edge(a, b) {
                h.add_edge(a, b)?;
            }
        }
        Ok(h)
    }

    /// `owner[v]` = index of the bag containing `v`, or an error if the
    /// bags do not partition `0..n`.
    pub fn owners(&self, n: usize) -> Result<Vec<usize>> {
        let mut owner = vec![usize::MAX; n];
        for (i, bag) in self.bags.iter().enumerate() {
            for &v in &bag.vertices {
                if v >= n {
                    return Err(Error::Invalid(format!("bag {i} contains out-of-range {v}")));
                }
                if owner[v] != usize::MAX {
                    return Err(Error::Invalid(format!(
                        "vertex {v} lies in bags {} and {i}",
                        owner[v]
                    )));
                }
                owner[v] = i;
            }
        }
        if let Some(v) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::Invalid(format!("vertex {v} is in no bag")));
        }
        Ok(owner)
    }
}

/// Result of a build: either a partition or a fat theta model found along
/// the way (at the profile's fatness), which certifies that no partition
/// with these bounds is promised.
#[derive(Debug, Clone)]
pub enum BuildOutcome {
    Partition(LayeredPartition),
    Witness(FatModel),
}

/// A completed build with the merge trace for debugging.
pub struct BuildResult {
    pub outcome: BuildOutcome,
    /// One JSON document per merge invocation.
    pub merge_log: Vec<String>,
}

fn clamp_radius(r: u64) -> u32 {
    r.min((u32::MAX - 1) as u64) as u32
}

/// `∂↑_h(radius)`: ball around the attachment set avoiding layers below.
fn up_set(g: &Graph, bag: &Bag, prev_blocked: &[bool], radius: u64) -> Vec<usize> {
    g.ball(&bag.attachment, clamp_radius(radius), Some(prev_blocked))
}

/// `∂↓_h(r)`: the undergrowth, a full ball minus the in-bag part.
fn down_set(g: &Graph, bag: &Bag, prev_blocked: &[bool], r: u64) -> Vec<usize> {
    let full = g.ball(&bag.attachment, clamp_radius(r), None);
    let up = up_set(g, bag, prev_blocked, r);
    let mut in_up = vec![false; g.n()];
    for &v in &up {
        in_up[v] = true;
    }
    full.into_iter().filter(|&v| !in_up[v]).collect()
}

/// Runs the layer-by-layer construction.  `root` overrides the default
/// center (the lowest vertex id).
pub fn build_partition(
    g: &Graph,
    profile: &ConstantsProfile,
    root: Option<usize>,
) -> Result<BuildResult> {
    if g.n() == 0 {
        return Err(Error::Hypothesis("cannot partition the empty graph".into()));
    }
    if !g.is_connected() {
        return Err(Error::Hypothesis(
            "host graph must be connected; split components first".into(),
        ));
    }
    let o = root.unwrap_or(0);
    if o >= g.n() {
        return Err(Error::Invalid(format!("root {o} out of range")));
    }
    let k = profile.k;
    let t = profile.t;
    let ell = profile.ell;
    let n = g.n();

    let mut merge_log: Vec<String> = Vec::new();
    let mut owner = vec![usize::MAX; n];
    let mut bags: Vec<Bag> = Vec::new();
    let mut h_edges: Vec<(usize, usize)> = Vec::new();

    // root bag
    let root_ball = g.ball(&[o], clamp_radius(profile.l_prime), None);
    for &v in &root_ball {
        owner[v] = 0;
    }
    bags.push(Bag {
        layer: 0,
        vertices: root_ball,
        attachment: vec![o],
        height: clamp_radius(profile.l_prime),
        depth: 0,
    });

    let mut step = 0usize;
    loop {
        step += 1;
        if step > n + 1 {
            return Err(Error::Invalid("construction failed to terminate".into()));
        }
        let cur_layer = bags.last().map(|b| b.layer).unwrap_or(0);

        let assigned: Vec<bool> = owner.iter().map(|&ow| ow != usize::MAX).collect();
        let comps = g.components(Some(&assigned));
        if comps.is_empty() {
            break;
        }

        // the audited core: the part of the built region at distance >= k
        // from the frontier, around the root
        let unassigned: Vec<usize> = (0..n).filter(|&v| !assigned[v]).collect();
        let near_frontier = g.ball(&unassigned, k - 1, None);
        let mut blocked_core = vec![false; n];
        for &v in &near_frontier {
            blocked_core[v] = true;
        }
        for v in 0..n {
            if !assigned[v] {
                blocked_core[v] = true;
            }
        }
        if blocked_core[o] {
            return Err(Error::Hypothesis(format!(
                "root ball too small: the center is within {} of the frontier \
                 (profile constants too small for this graph)",
                k
            )));
        }
        let mut core = vec![false; n];
        {
            let mut stack = vec![o];
            core[o] = true;
            while let Some(v) = stack.pop() {
                for &w in g.neighbors(v) {
                    if !blocked_core[w] && !core[w] {
                        core[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        let core_set: Vec<usize> = (0..n).filter(|&v| core[v]).collect();

        // per component: neighbouring bags and boundary audit
        let mut comp_bags: Vec<Vec<usize>> = Vec::with_capacity(comps.len());
        for comp in &comps {
            let mut nb: Vec<usize> = comp
                .iter()
                .flat_map(|&v| g.neighbors(v))
                .filter(|&&w| assigned[w])
                .map(|&w| owner[w])
                .collect();
            nb.sort_unstable();
            nb.dedup();
            comp_bags.push(nb);
            match audit_boundary(g, &core_set, k, comp, t)? {
                AuditOutcome::Witness(m) => {
                    return Ok(BuildResult {
                        outcome: BuildOutcome::Witness(m),
                        merge_log,
                    })
                }
                AuditOutcome::Confirmation { .. } => {}
            }
        }

        // group multi-bag components by the region of two layers back that
        // contains them; single-bag components stay alone
        let prev_blocked: Vec<bool> = owner
            .iter()
            .map(|&ow| ow != usize::MAX && bags[ow].layer < cur_layer)
            .collect();
        let mut z_id = vec![usize::MAX; n];
        for (zi, z) in g.components(Some(&prev_blocked)).iter().enumerate() {
            for &v in z {
                z_id[v] = zi;
            }
        }
        let mut families: Vec<Vec<usize>> = Vec::new(); // indices into comps
        {
            let mut by_z: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (ci, comp) in comps.iter().enumerate() {
                if comp_bags[ci].len() >= 2 {
                    by_z.entry(z_id[comp[0]]).or_default().push(ci);
                } else {
                    families.push(vec![ci]);
                }
            }
            families.extend(by_z.into_values());
            families.sort_by_key(|f| comps[f[0]][0]);
        }

        let mut new_bags: Vec<Bag> = Vec::new();
        for family in &families {
            let multi = family.len() > 1 || comp_bags[family[0]].len() >= 2;
            if multi {
                // audit the attachment structure of this family
                let mut hs: Vec<usize> = family
                    .iter()
                    .flat_map(|&ci| comp_bags[ci].iter().copied())
                    .collect();
                hs.sort_unstable();
                hs.dedup();
                if hs.len() > t - 1 {
                    return Err(Error::Hypothesis(format!(
                        "a frontier family touches {} bags, above the bound {}",
                        hs.len(),
                        t - 1
                    )));
                }
                let x_sets: Vec<Vec<usize>> = hs
                    .iter()
                    .map(|&h| {
                        let bag = &bags[h];
                        let mut x = up_set(
                            g,
                            bag,
                            &prev_blocked,
                            (bag.height as u64).saturating_sub(k as u64 + 1),
                        );
                        x.extend(down_set(g, bag, &prev_blocked, bag.depth as u64));
                        x.sort_unstable();
                        x.dedup();
                        x
                    })
                    .collect();
                match audit_attachments(g, &x_sets, k, t)? {
                    AuditOutcome::Witness(m) => {
                        return Ok(BuildResult {
                            outcome: BuildOutcome::Witness(m),
                            merge_log,
                        })
                    }
                    AuditOutcome::Confirmation { .. } => {}
                }
            }

            // gather the boundary near-classes of all components
            let mut classes: Vec<Vec<usize>> = Vec::new();
            for &ci in family {
                let boundary: Vec<usize> = comps[ci]
                    .iter()
                    .copied()
                    .filter(|&v| g.neighbors(v).iter().any(|&w| assigned[w]))
                    .collect();
                classes.extend(g.near_components(&boundary, 3 * k, None));
            }
            classes.sort_by_key(|c| c[0]);

            // keep a maximal sub-family pairwise 3k apart (greedy), then
            // absorb the rest into their closest kept class
            let mut kept: Vec<usize> = Vec::new();
            let mut kept_mask = vec![false; n];
            for (i, class) in classes.iter().enumerate() {
                let dist = g.dist_from(class, None);
                let close = kept.iter().any(|&j: &usize| {
                    classes[j].iter().any(|&v| dist[v] < 3 * k)
                });
                if !close {
                    kept.push(i);
                    for &v in class {
                        kept_mask[v] = true;
                    }
                }
            }
            let mut merged: Vec<Vec<usize>> = kept.iter().map(|&i| classes[i].clone()).collect();
            for (i, class) in classes.iter().enumerate() {
                if kept.contains(&i) {
                    continue;
                }
                let dist = g.dist_from(class, None);
                let target = kept
                    .iter()
                    .position(|&j| classes[j].iter().any(|&v| dist[v] < 3 * k))
                    .ok_or_else(|| {
                        Error::Invalid("maximality failure in the dispersed sub-family".into())
                    })?;
                merged[target].extend_from_slice(class);
                merged[target].sort_unstable();
            }

            // round one: coarsen in the full graph
            let p1 = MergeProblem {
                host: g,
                blocked: None,
                q_family: merged,
                r: clamp_radius((3 * k as u64).div_ceil(2)),
                d: 3 * k,
            };
            let res1 = merge_partition(&p1)?;
            merge_log.push(res1.to_json());
            let l_d = res1.level;

            // round two: coarsen outside the built region
            let p2 = MergeProblem {
                host: g,
                blocked: Some(&assigned),
                q_family: res1.p_family,
                r: clamp_radius(add(ell, 2 * k as u64)?),
                d: clamp_radius(add(mul(4, ell)?, 5 * k as u64)?),
            };
            let res2 = merge_partition(&p2)?;
            merge_log.push(res2.to_json());
            let l_prime_d = res2.level;

            if l_d as u64 > ell {
                return Err(Error::Hypothesis(format!(
                    "merge depth {l_d} exceeds the cap {ell}; profile constants too small"
                )));
            }
            let height = add(l_prime_d as u64, add(ell, k as u64)?)?;
            for a in res2.p_family {
                let vertices = g.ball(&a, clamp_radius(height), Some(&assigned));
                new_bags.push(Bag {
                    layer: cur_layer + 1,
                    vertices,
                    attachment: a,
                    height: clamp_radius(height),
                    depth: l_d,
                });
            }
        }

        // register the new layer and the quotient edges
        let first_new = bags.len();
        for bag in new_bags {
            let id = bags.len();
            for &v in &bag.vertices {
                if owner[v] != usize::MAX {
                    return Err(Error::Invalid(format!(
                        "new bags overlap at vertex {v}; separation failed \
                         (profile constants too small)"
                    )));
                }
                owner[v] = id;
            }
            bags.push(bag);
        }
        for id in first_new..bags.len() {
            let mut nb: Vec<usize> = bags[id]
                .vertices
                .iter()
                .flat_map(|&v| g.neighbors(v))
                .filter(|&&w| owner[w] != usize::MAX && owner[w] != id)
                .map(|&w| owner[w])
                .collect();
            nb.sort_unstable();
            nb.dedup();
            for h in nb {
                if h >= first_new {
                    return Err(Error::Invalid(
                        "two new bags are adjacent; layer independence failed".into(),
                    ));
                }
                if bags[h].layer != cur_layer {
                    return Err(Error::Invalid(
                        "a new bag touches a layer below the previous one".into(),
                    ));
                }
                h_edges.push((h, id));
            }
        }
    }

    Ok(BuildResult {
        outcome: BuildOutcome::Partition(LayeredPartition {
            root: 0,
            h_edges,
            bags,
            profile: *profile,
        }),
        merge_log,
    })
}

/// Outcome of the independent partition checks.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub valid: bool,
    pub violations: Vec<String>,
    /// Largest measured bag diameter.
    pub max_bag_diameter: u32,
}

/// Re-checks every promise of the builder from scratch: partition-ness,
/// honesty, layer independence, levelness, height/depth ranges, the
/// connected-core condition, the separation-or-separator condition, the
/// per-region bag-contact bound, and the bag-diameter bound.
pub fn verify_partition(g: &Graph, lp: &LayeredPartition) -> Result<PartitionReport> {
    let mut violations: Vec<String> = Vec::new();
    let profile = &lp.profile;
    let k = profile.k as u64;
    let ell = profile.ell;
    let n = g.n();

    let owner = match lp.owners(n) {
        Ok(o) => o,
        Err(e) => {
            return Ok(PartitionReport {
                valid: false,
                violations: vec![format!("not a partition: {e}")],
                max_bag_diameter: 0,
            })
        }
    };
    let h = lp.quotient()?;
    if lp.root != 0 && lp.root >= lp.bags.len() {
        violations.push(format!("root {} out of range", lp.root));
    }

    // honesty and the partition property over G-edges
    let mut h_edge_hit = vec![false; lp.h_edges.len()];
    let mut edge_index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, &(a, b)) in lp.h_edges.iter().enumerate() {
        edge_index.insert((a.min(b), a.max(b)), i);
    }
    for (u, v) in g.edges() {
        let (a, b) = (owner[u], owner[v]);
        if a == b {
            continue;
        }
        match edge_index.get(&(a.min(b), a.max(b))) {
            Some(&i) => h_edge_hit[i] = true,
            None => violations.push(format!(
                "G-edge ({u}, {v}) joins bags {a} and {b} without a quotient edge"
            )),
        }
    }
    for (i, hit) in h_edge_hit.iter().enumerate() {
        if !hit {
            let (a, b) = lp.h_edges[i];
            violations.push(format!("quotient edge ({a}, {b}) has no G-edge"));
        }
    }
    for (i, bag) in lp.bags.iter().enumerate() {
        if bag.vertices.is_empty() {
            violations.push(format!("bag {i} is empty"));
        }
    }

    // layer structure: stored layers must be the quotient distances from
    // the root, and no edge stays within a layer
    let h_dist = h.dist_from(&[lp.root], None);
    for (i, bag) in lp.bags.iter().enumerate() {
        if h_dist[i] == INF || h_dist[i] as usize != bag.layer {
            violations.push(format!(
                "bag {i} stores layer {} but has quotient distance {}",
                bag.layer, h_dist[i]
            ));
        }
    }
    for &(a, b) in &lp.h_edges {
        if lp.bags[a].layer == lp.bags[b].layer {
            violations.push(format!("quotient edge ({a}, {b}) stays within one layer"));
        }
    }

    // levelness, attachments, ranges, connectivity of the cores
    let layer_of: Vec<usize> = owner.iter().map(|&ow| lp.bags[ow].layer).collect();
    for (i, bag) in lp.bags.iter().enumerate() {
        let prev_blocked: Vec<bool> = layer_of.iter().map(|&l| l < bag.layer).collect();
        if i == lp.root {
            if bag.attachment.len() != 1 {
                violations.push(format!(
                    "root bag stores {} attachment vertices instead of one center",
                    bag.attachment.len()
                ));
                continue;
            }
            if bag.depth != 0 {
                violations.push(format!("root bag has depth {} != 0", bag.depth));
            }
        } else {
            let mut expect: Vec<usize> = bag
                .vertices
                .iter()
                .copied()
                .filter(|&v| g.neighbors(v).iter().any(|&w| layer_of[w] < bag.layer))
                .collect();
            expect.sort_unstable();
            if expect != bag.attachment {
                violations.push(format!(
                    "bag {i}: stored attachment set differs from the vertices \
                     with a neighbour one layer down"
                ));
            }
            if bag.depth == 0 || bag.depth as u64 > ell {
                violations.push(format!(
                    "bag {i}: depth {} outside (0, {ell}]",
                    bag.depth
                ));
            }
            let min_height = 2 * ell + 3 * k;
            if (bag.height as u64) < min_height || bag.height as u64 > profile.l_prime {
                violations.push(format!(
                    "bag {i}: height {} outside [{min_height}, {}]",
                    bag.height, profile.l_prime
                ));
            }
        }
        let ball = g.ball(&bag.attachment, bag.height, Some(&prev_blocked));
        if ball != bag.vertices {
            violations.push(format!(
                "bag {i} is not level: it differs from the height-{} ball \
                 around its attachment set",
                bag.height
            ));
        }
        // connected core
        let core_radius = (bag.height as u64).saturating_sub(ell + k);
        let mut core = up_set(g, bag, &prev_blocked, core_radius);
        core.extend(down_set(g, bag, &prev_blocked, bag.depth as u64));
        core.sort_unstable();
        core.dedup();
        if !is_connected_set(g, &core) {
            violations.push(format!("bag {i}: core region is not connected"));
        }
    }

    // separation or separator, for non-adjacent pairs
    let sep_needed = clamp_radius(2 * ell + 3 * k);
    let mut bfs = crate::graph::Bfs::new(n);
    for i in 0..lp.bags.len() {
        bfs.run(g, lp.bags[i].vertices.iter().copied(), None, sep_needed.saturating_sub(1));
        let mut close: Vec<(usize, u32)> = Vec::new();
        {
            let mut best: BTreeMap<usize, u32> = BTreeMap::new();
            for &v in bfs.reached() {
                let j = owner[v];
                if j > i {
                    let e = best.entry(j).or_insert(u32::MAX);
                    *e = (*e).min(bfs.dist(v));
                }
            }
            for (j, d) in best {
                close.push((j, d));
            }
        }
        for (j, d) in close {
            if h.has_edge(i, j) {
                continue;
            }
            let required =
                2 * (lp.bags[i].depth.max(lp.bags[j].depth) as u64) + 3 * k;
            if (d as u64) >= required {
                continue;
            }
            if !has_separating_bag(g, lp, &owner, i, j) {
                violations.push(format!(
                    "bags {i} and {j} are non-adjacent at distance {d} < {required} \
                     with no separating bag"
                ));
            }
        }
    }

    // region contact bound: a region left after removing the layers below
    // n touches at most t-1 bags of layer n
    let max_layer = lp.bags.iter().map(|b| b.layer).max().unwrap_or(0);
    for layer in 1..=max_layer {
        let blocked: Vec<bool> = layer_of.iter().map(|&l| l < layer).collect();
        for comp in g.components(Some(&blocked)) {
            let mut touched: Vec<usize> = comp
                .iter()
                .map(|&v| owner[v])
                .filter(|&b| lp.bags[b].layer == layer)
                .collect();
            touched.sort_unstable();
            touched.dedup();
            if touched.len() > profile.t - 1 {
                violations.push(format!(
                    "a region beyond layer {} touches {} bags of that layer (bound {})",
                    layer - 1,
                    touched.len(),
                    profile.t - 1
                ));
            }
        }
    }

    // diameter bound
    let mut max_diam = 0u32;
    let cap = clamp_radius(profile.r_bound + 1);
    for (i, bag) in lp.bags.iter().enumerate() {
        let d0 = g.dist_from(&[bag.vertices[0]], None);
        let ecc = bag.vertices.iter().map(|&v| d0[v]).max().unwrap_or(0);
        let diam = if ecc == INF {
            INF
        } else if 2 * (ecc as u64) <= profile.r_bound {
            ecc // lower bound only, but within budget; refine below
        } else {
            g.diameter_of_set(&bag.vertices, cap, None)
        };
        if ecc != INF && 2 * (ecc as u64) <= profile.r_bound {
            max_diam = max_diam.max(ecc);
        } else if (diam as u64) > profile.r_bound {
            violations.push(format!(
                "bag {i} has diameter above the bound {}",
                profile.r_bound
            ));
        } else {
            max_diam = max_diam.max(diam);
        }
    }

    Ok(PartitionReport {
        valid: violations.is_empty(),
        violations,
        max_bag_diameter: max_diam,
    })
}

fn is_connected_set(g: &Graph, set: &[usize]) -> bool {
    if set.is_empty() {
        return false;
    }
    let mut inside = vec![false; g.n()];
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
    reached == set.len()
}

/// Does some bag separate `V_i` from `V_j` in the host?  Quotient
/// neighbours of the two bags are tried first, then every other bag.
fn has_separating_bag(
    g: &Graph,
    lp: &LayeredPartition,
    owner: &[usize],
    i: usize,
    j: usize,
) -> bool {
    let mut candidates: Vec<usize> = Vec::new();
    for &(a, b) in &lp.h_edges {
        if a == i || a == j {
            candidates.push(b);
        }
        if b == i || b == j {
            candidates.push(a);
        }
    }
    candidates.extend(0..lp.bags.len());
    let mut tried = vec![false; lp.bags.len()];
    for x in candidates {
        if x == i || x == j || tried[x] {
            continue;
        }
        tried[x] = true;
        let mut blocked = vec![false; g.n()];
        for &v in &lp.bags[x].vertices {
            blocked[v] = true;
        }
        let dist = g.dist_from(&lp.bags[i].vertices, Some(&blocked));
        if lp.bags[j].vertices.iter().all(|&v| dist[v] == INF) {
            let _ = owner;
            return true;
        }
    }
    false
}

/// Quasi-isometry certificate between the host and the quotient graph.
#[derive(Debug, Clone, Serialize)]
pub struct QIReport {
    pub valid: bool,
    /// Bag-diameter bound used: the claimed map is a
    /// `(R+1, R/(R+1))`-quasi-isometry.
    pub r_used: u32,
    pub multiplicative: u64,
    pub additive: f64,
    pub pairs_checked: u64,
    pub exhaustive: bool,
    pub violations: Vec<String>,
}

/// Verifies both quasi-isometry inequalities for the bag-assignment map:
/// `d_H(φu, φv) <= d_G(u, v)` and `d_G(u, v) <= (R+1) d_H(φu, φv) + R`,
/// with `R` the largest measured bag diameter.  Exhaustive on small hosts,
/// deterministically sampled on large ones.
pub fn quasi_isometry(g: &Graph, lp: &LayeredPartition) -> Result<QIReport> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let n = g.n();
    let owner = lp.owners(n)?;
    let h = lp.quotient()?;

    let mut r = 0u32;
    for bag in &lp.bags {
        let diam = g.diameter_of_set(&bag.vertices, clamp_radius(lp.profile.r_bound + 1), None);
        r = r.max(diam);
    }

    let exhaustive = n <= 3000;
    let sources: Vec<usize> = if exhaustive {
        (0..n).collect()
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5170);
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all.truncate(300);
        all
    };

    let mut h_dist_cache: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    let mut violations = Vec::new();
    let mut pairs = 0u64;
    for &u in &sources {
        let dg = g.dist_from(&[u], None);
        let hu = owner[u];
        let dh = h_dist_cache
            .entry(hu)
            .or_insert_with(|| h.dist_from(&[hu], None));
        for v in 0..n {
            if v == u {
                continue;
            }
            pairs += 1;
            let dhv = dh[owner[v]] as u64;
            let dgv = dg[v] as u64;
            if dhv > dgv {
                violations.push(format!(
                    "d_H({hu}, {}) = {dhv} exceeds d_G({u}, {v}) = {dgv}",
                    owner[v]
                ));
            } else if dgv > (r as u64 + 1) * dhv + r as u64 {
                violations.push(format!(
                    "d_G({u}, {v}) = {dgv} exceeds (R+1) d_H + R with R = {r}, d_H = {dhv}"
                ));
            }
            if violations.len() > 20 {
                break;
            }
        }
        if violations.len() > 20 {
            break;
        }
    }

    Ok(QIReport {
        valid: violations.is_empty(),
        r_used: r,
        multiplicative: r as u64 + 1,
        additive: r as f64 / (r as f64 + 1.0),
        pairs_checked: pairs,
        exhaustive,
        violations,
    })
}

/// Pulls a 2-connected subgraph `j` of the quotient graph back to a fat
/// model of itself in the host, at the profile's fatness.  Returns the
/// model and the sorted list of quotient nodes serving as its pattern
/// vertices (pattern vertex `i` models `node_map[i]`).
pub fn extract_fat_model(
    g: &Graph,
    lp: &LayeredPartition,
    j_nodes: &[usize],
    j_edges: &[(usize, usize)],
) -> Result<(FatModel, Vec<usize>)> {
    let profile = &lp.profile;
    let k = profile.k as u64;
    let ell = profile.ell;
    let n = g.n();
    let owner = lp.owners(n)?;
    let layer_of: Vec<usize> = owner.iter().map(|&ow| lp.bags[ow].layer).collect();

    // reindex and validate the pattern
    let mut node_map: Vec<usize> = j_nodes.to_vec();
    node_map.sort_unstable();
    node_map.dedup();
    let index_of = |h: usize| -> Result<usize> {
        node_map
            .binary_search(&h)
            .map_err(|_| Error::Invalid(format!("edge endpoint {h} is not a listed node")))
    };
    let h = lp.quotient()?;
    let mut pattern_edges = Vec::with_capacity(j_edges.len());
    for &(a, b) in j_edges {
        if a >= lp.bags.len() || b >= lp.bags.len() {
            return Err(Error::Invalid(format!("quotient node out of range in edge ({a}, {b})")));
        }
        if !h.has_edge(a, b) {
            return Err(Error::Invalid(format!("({a}, {b}) is not a quotient edge")));
        }
        pattern_edges.push((index_of(a)?, index_of(b)?));
    }
    let pattern = PatternGraph::new(node_map.len(), pattern_edges.clone())?;
    if !pattern.is_two_connected() {
        return Err(Error::Hypothesis(
            "subgraph must be 2-connected with at least 3 nodes".into(),
        ));
    }
    for bag_id in &node_map {
        if (lp.bags[*bag_id].height as u64) < ell + k {
            return Err(Error::Hypothesis(format!(
                "bag {bag_id} has height below l + k; extraction hypotheses fail"
            )));
        }
    }

    // branch paths: per pattern edge, a descent path inside the lower bag
    let mut branch_paths: Vec<Vec<usize>> = Vec::with_capacity(j_edges.len());
    let mut tentacles: Vec<(usize, Vec<usize>)> = Vec::new(); // (lower bag id, tentacle)
    for &(a, b) in j_edges {
        let (gg, hh) = if lp.bags[a].layer == lp.bags[b].layer + 1 {
            (a, b)
        } else if lp.bags[b].layer == lp.bags[a].layer + 1 {
            (b, a)
        } else {
            return Err(Error::Invalid(format!(
                "edge ({a}, {b}) does not join consecutive layers"
            )));
        };
        // gg one layer above hh; lexicographically least host edge u-v with
        // u in the lower bag
        let bag_h = &lp.bags[hh];
        let bag_g = &lp.bags[gg];
        let mut in_g = vec![false; n];
        for &v in &bag_g.vertices {
            in_g[v] = true;
        }
        let mut uv = None;
        'outer: for &u in &bag_h.vertices {
            for &v in g.neighbors(u) {
                if in_g[v] {
                    uv = Some((u, v));
                    break 'outer;
                }
            }
        }
        let (u, v) = uv.ok_or_else(|| {
            Error::Invalid(format!("no host edge between bags {hh} and {gg}"))
        })?;

        let prev_blocked: Vec<bool> = layer_of.iter().map(|&l| l < bag_h.layer).collect();
        let down = g
            .shortest_path_to(&bag_h.attachment, |x| x == u, Some(&prev_blocked))
            .ok_or_else(|| Error::Invalid(format!("bag {hh} is not level: {u} unreachable")))?;
        if down.len() != bag_h.height as usize + 1 {
            return Err(Error::Invalid(format!(
                "vertex {u} of bag {hh} borders the layer above at depth {} != height {}",
                down.len() - 1,
                bag_h.height
            )));
        }
        // q_0 = v, then u, descending to the attachment set
        let mut q: Vec<usize> = Vec::with_capacity(down.len() + 1);
        q.push(v);
        q.extend(down.iter().rev());

        let rg = bag_g.depth as usize;
        let kk = profile.k as usize;
        let top = (ell + k) as usize + 1;
        if rg + kk > q.len() - 1 || top > q.len() - 1 {
            return Err(Error::Invalid(format!(
                "descent path in bag {hh} is too short for the profile constants"
            )));
        }
        branch_paths.push(q[rg..=rg + kk].to_vec());
        tentacles.push((hh, q[rg + kk..=top].to_vec()));
    }

    // branch sets: core region plus the tentacles of upward edges
    let mut branch_sets: Vec<Vec<usize>> = Vec::with_capacity(node_map.len());
    for &x in &node_map {
        let bag = &lp.bags[x];
        let prev_blocked: Vec<bool> = layer_of.iter().map(|&l| l < bag.layer).collect();
        let mut set = up_set(
            g,
            bag,
            &prev_blocked,
            (bag.height as u64).saturating_sub(ell + k),
        );
        set.extend(down_set(g, bag, &prev_blocked, bag.depth as u64));
        for (lower, tentacle) in &tentacles {
            if *lower == x {
                set.extend_from_slice(tentacle);
            }
        }
        set.sort_unstable();
        set.dedup();
        branch_sets.push(set);
    }

    Ok((
        FatModel {
            pattern,
            branch_sets,
            branch_paths,
            claimed_fatness: profile.k,
        },
        node_map,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorSpec};
    use crate::model::verify_fat_model;

    #[test]
    fn paper_constants_match_hand_evaluation() {
        let p = compute_constants(3, 1).unwrap();
        assert_eq!(p.n_cap, 4);
        assert_eq!(p.ell, 14);
        assert_eq!(p.l_prime, 275);
        assert_eq!(p.r0, 8_325_909);
        assert_eq!(p.r_bound, 8_326_459);
        assert!(p.hypotheses_enforceable);
        let p = compute_constants(4, 1).unwrap();
        assert_eq!(p.n_cap, 27);
        assert!(compute_constants(2, 1).is_err());
        assert!(compute_constants(3, 0).is_err());
    }

    #[test]
    fn scaled_constants_keep_invariants() {
        let p = scaled_constants(3, 1, 1).unwrap();
        assert_eq!(p.ell, 2 + 3);
        assert_eq!(p.l_prime, 1 * (4 * 5 + 5) + 2 * 5 + 3);
        assert!(p.hypotheses_enforceable);
        assert!(custom_constants(3, 2, 1, 1, 100, 10).is_err()); // L too small
        assert!(custom_constants(3, 1, 1, 5, 6, 10).is_err()); // L' too small
    }

    #[test]
    fn path_smaller_than_root_ball_is_one_bag() {
        let g = generate(&GeneratorSpec::Path { n: 100 }).unwrap();
        let p = compute_constants(3, 1).unwrap();
        let res = build_partition(&g, &p, None).unwrap();
        match res.outcome {
            BuildOutcome::Partition(lp) => {
                assert_eq!(lp.bags.len(), 1);
                assert!(lp.h_edges.is_empty());
                let report = verify_partition(&g, &lp).unwrap();
                assert!(report.valid, "{:?}", report.violations);
            }
            BuildOutcome::Witness(_) => panic!("unexpected witness"),
        }
    }

    #[test]
    fn long_path_partitions_into_intervals() {
        let g = generate(&GeneratorSpec::Path { n: 1000 }).unwrap();
        let p = compute_constants(3, 1).unwrap();
        let res = build_partition(&g, &p, None).unwrap();
        let lp = match res.outcome {
            BuildOutcome::Partition(lp) => lp,
            BuildOutcome::Witness(_) => panic!("unexpected witness"),
        };
        assert_eq!(lp.bags[0].vertices, (0..=275).collect::<Vec<_>>());
        assert_eq!(lp.bags[1].vertices, (276..=307).collect::<Vec<_>>());
        assert_eq!(lp.bags[1].height, 31);
        assert_eq!(lp.bags[1].depth, 2);
        assert_eq!(lp.bags[2].vertices, (308..=339).collect::<Vec<_>>());
        // quotient is a path
        let h = lp.quotient().unwrap();
        assert!(h.is_connected());
        assert_eq!(h.m(), h.n() - 1);
        assert!((0..h.n()).all(|v| h.degree(v) <= 2));
        let report = verify_partition(&g, &lp).unwrap();
        assert!(report.valid, "{:?}", report.violations);
        let qi = quasi_isometry(&g, &lp).unwrap();
        assert!(qi.valid, "{:?}", qi.violations);
        assert!(qi.r_used <= 275);
    }

    #[test]
    fn cycle_with_scaled_profile_gives_cyclic_quotient() {
        let g = generate(&GeneratorSpec::Cycle { n: 600 }).unwrap();
        let p = scaled_constants(3, 1, 1).unwrap();
        let res = build_partition(&g, &p, None).unwrap();
        let lp = match res.outcome {
            BuildOutcome::Partition(lp) => lp,
            BuildOutcome::Witness(m) => panic!("unexpected witness: {}", m.to_json()),
        };
        let report = verify_partition(&g, &lp).unwrap();
        assert!(report.valid, "{:?}", report.violations);
        let h = lp.quotient().unwrap();
        assert_eq!(h.m(), h.n(), "quotient of a long cycle closes into a cycle");
        let qi = quasi_isometry(&g, &lp).unwrap();
        assert!(qi.valid, "{:?}", qi.violations);
    }

    #[test]
    fn extraction_from_cycle_quotient() {
        let g = generate(&GeneratorSpec::Cycle { n: 600 }).unwrap();
        let p = scaled_constants(3, 1, 1).unwrap();
        let res = build_partition(&g, &p, None).unwrap();
        let lp = match res.outcome {
            BuildOutcome::Partition(lp) => lp,
            BuildOutcome::Witness(_) => panic!("unexpected witness"),
        };
        let h = lp.quotient().unwrap();
        let nodes: Vec<usize> = (0..h.n()).collect();
        let edges = h.edges();
        let (model, map) = extract_fat_model(&g, &lp, &nodes, &edges).unwrap();
        assert_eq!(map, nodes);
        let report = verify_fat_model(&g, &model, lp.profile.k);
        assert!(report.valid, "{:?}", report.violations);
        // a single edge is rejected
        assert!(extract_fat_model(&g, &lp, &nodes[..2], &edges[..1]).is_err());
    }

    #[test]
    fn corrupted_partition_is_rejected() {
        let g = generate(&GeneratorSpec::Path { n: 1000 }).unwrap();
        let p = compute_constants(3, 1).unwrap();
        let res = build_partition(&g, &p, None).unwrap();
        let mut lp = match res.outcome {
            BuildOutcome::Partition(lp) => lp,
            BuildOutcome::Witness(_) => panic!("unexpected witness"),
        };
        // move one vertex between adjacent bags
        let v = lp.bags[1].vertices.pop().unwrap();
        lp.bags[2].vertices.insert(0, v);
        let report = verify_partition(&g, &lp).unwrap();
        assert!(!report.valid);
        assert!(report.violations.iter().any(|s| s.contains("level")));
    }

    #[test]
    fn identity_partition_fails_height_range() {
        let g = generate(&GeneratorSpec::Path { n: 5 }).unwrap();
        let profile = compute_constants(3, 1).unwrap();
        let lp = LayeredPartition {
            root: 0,
            h_edges: (0..4).map(|i| (i, i + 1)).collect(),
            bags: (0..5)
                .map(|v| Bag {
                    layer: v,
                    vertices: vec![v],
                    attachment: vec![v],
                    height: 0,
                    depth: if v == 0 { 0 } else { 1 },
                })
                .collect(),
            profile,
        };
        let report = verify_partition(&g, &lp).unwrap();
        assert!(!report.valid);
        assert!(report.violations.iter().any(|s| s.contains("height")));
    }

    #[test]
    fn json_round_trip() {
        let g = generate(&GeneratorSpec::Path { n: 400 }).unwrap();
        let p = scaled_constants(3, 1, 1).unwrap();
        let res = build_partition(&g, &p, None).unwrap();
        let lp = match res.outcome {
            BuildOutcome::Partition(lp) => lp,
            BuildOutcome::Witness(_) => panic!("unexpected witness"),
        };
        let text = lp.to_json();
        let back = LayeredPartition::from_json(&text).unwrap();
        assert_eq!(lp, back);
    }

    #[test]
    fn root_override_changes_first_bag() {
        let g = generate(&GeneratorSpec::Path { n: 400 }).unwrap();
        let p = scaled_constants(3, 1, 1).unwrap();
        let res = build_partition(&g, &p, Some(399)).unwrap();
        let lp = match res.outcome {
            BuildOutcome::Partition(lp) => lp,
            BuildOutcome::Witness(_) => panic!("unexpected witness"),
        };
        assert!(lp.bags[0].vertices.contains(&399));
        assert_eq!(lp.bags[0].attachment, vec![399]);
        let report = verify_partition(&g, &lp).unwrap();
        assert!(report.valid, "{:?}", report.violations);
    }

    #[test]
    fn disconnected_input_is_rejected() {
        let g = Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let p = scaled_constants(3, 1, 1).unwrap();
        assert!(build_partition(&g, &p, None).is_err());
    }
}
