//! Coarsening of disjoint vertex-set families.
//!
//! Starting from disjoint sets 𝒬, repeatedly merges any two parts closer
//! than `2L + d` in the host graph, raising the level `L` as it goes.  The
//! terminating family 𝒫 satisfies three re-checkable bounds: each part is a
//! chain of original sets with gaps at most `2L`, distinct parts are at
//! least `2L + d` apart, and part diameters are controlled by the original
//! diameters.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, INF};

/// Input of the merge loop.  Distances are measured inside `host` only
/// (`blocked` optionally restricts the host to an induced subgraph, which
/// is how a caller merges "within G - Gⁿ" without copying the graph).
pub struct MergeProblem<'a> {
    pub host: &'a Graph,
    pub blocked: Option<&'a [bool]>,
    /// Disjoint nonempty vertex sets 𝒬.
    pub q_family: Vec<Vec<usize>>,
    pub r: u32,
    pub d: u32,
}

/// One merge event, for tracing and determinism tests.
#[derive(Debug, Clone, Serialize)]
pub struct MergeStep {
    /// Least vertices of the two merged parts.
    pub a_min: usize,
    pub b_min: usize,
    /// Their distance at the time of the merge.
    pub distance: u32,
    /// Level after this merge.
    pub level: u32,
}

/// Output family 𝒫 with the achieved level and full provenance.
#[derive(Debug, Clone, Serialize)]
pub struct MergeResult {
    /// Coarsened parts, each sorted ascending, ordered by least vertex.
    pub p_family: Vec<Vec<usize>>,
    /// Achieved level `L`, with `r <= L <= r + floor(n*d/2)`.
    pub level: u32,
    /// `provenance[i]` = indices into the input family absorbed by part `i`.
    pub provenance: Vec<Vec<usize>>,
    pub trace: Vec<MergeStep>,
}

impl MergeResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&serde_json::json!({
            "schema": "coarse-minor/merge-result/1",
            "p_family": self.p_family,
            "level": self.level,
            "provenance": self.provenance,
            "trace": self.trace,
        }))
        .expect("merge result serialization cannot fail")
    }
}

/// Runs the merge loop to completion.
///
/// While two parts are at host distance `< 2L_m + d`, the pair minimizing
/// (least vertex of one part, least vertex of the other) is merged and the
/// level is raised to `r + floor((m+1) * d / 2)` after `m + 1` merges.
pub fn merge_partition(p: &MergeProblem) -> Result<MergeResult> {
    let n = p.host.n();
    let mut owner = vec![usize::MAX; n];
    for (i, set) in p.q_family.iter().enumerate() {
        if set.is_empty() {
            return Err(Error::Invalid(format!("input set {i} is empty")));
        }
        for &v in set {
            if v >= n {
                return Err(Error::Invalid(format!(
                    "input set {i} contains out-of-range vertex {v}"
                )));
            }
            if p.blocked.is_some_and(|b| b[v]) {
                return Err(Error::Invalid(format!(
                    "input set {i} contains vertex {v} outside the host subgraph"
                )));
            }
            if owner[v] != usize::MAX {
                return Err(Error::Invalid(format!(
                    "input sets {} and {i} both contain vertex {v}",
                    owner[v]
                )));
            }
            owner[v] = i;
        }
    }

    // live parts as (sorted vertex set, sorted provenance)
    let mut parts: Vec<(Vec<usize>, Vec<usize>)> = p
        .q_family
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut s = s.clone();
            s.sort_unstable();
            (s, vec![i])
        })
        .collect();
    let count = parts.len() as u64;
    let mut level = p.r;
    let mut merges = 0u64;
    let mut trace = Vec::new();

    loop {
        if parts.len() <= 1 {
            break;
        }
        // order parts by least vertex so "lexicographically least pair"
        // means the first close pair in this order
        let mut order: Vec<usize> = (0..parts.len()).collect();
        order.sort_by_key(|&i| parts[i].0[0]);

        let threshold = 2 * level + p.d;
        let mut hit: Option<(usize, usize, u32)> = None;
        'outer: for (oi, &i) in order.iter().enumerate() {
            if threshold == 0 {
                break;
            }
            let dist = p.host.dist_from(&parts[i].0, p.blocked);
            let mut best: Option<(usize, u32)> = None;
            for &j in &order[oi + 1..] {
                let dj = parts[j].0.iter().map(|&v| dist[v]).min().unwrap_or(INF);
                if dj < threshold && best.is_none_or(|(bj, _)| parts[j].0[0] < parts[bj].0[0]) {
                    best = Some((j, dj));
                }
            }
            if let Some((j, dj)) = best {
                hit = Some((i, j, dj));
                break 'outer;
            }
        }
        let Some((i, j, dij)) = hit else { break };

        merges += 1;
        level = p.r + (merges * p.d as u64 / 2) as u32;
        trace.push(MergeStep {
            a_min: parts[i].0[0],
            b_min: parts[j].0[0],
            distance: dij,
            level,
        });
        let (b_set, b_prov) = parts.swap_remove(j.max(i));
        let keep = j.min(i);
        parts[keep].0.extend(b_set);
        parts[keep].0.sort_unstable();
        parts[keep].1.extend(b_prov);
        parts[keep].1.sort_unstable();
        if merges >= count {
            return Err(Error::Invalid(
                "merge loop exceeded n - 1 merges; host distances are inconsistent".into(),
            ));
        }
    }

    let mut indexed: Vec<(Vec<usize>, Vec<usize>)> = parts;
    indexed.sort_by_key(|(s, _)| s[0]);
    Ok(MergeResult {
        p_family: indexed.iter().map(|(s, _)| s.clone()).collect(),
        level,
        provenance: indexed.into_iter().map(|(_, pr)| pr).collect(),
        trace,
    })
}

/// Independently re-checks the merge post-conditions:
/// (i) via provenance, each part's original sets chain together with gaps
///     at most `2L`; (ii) distinct parts are at least `2L + d` apart;
/// (iii) if every input set has diameter at most `diameter_bound`, each
///     part has diameter at most `n*D + (n-1)*(2r + n*d)`.
pub fn verify_merge(
    p: &MergeProblem,
    res: &MergeResult,
    diameter_bound: Option<u32>,
) -> Result<()> {
    let n_in = p.q_family.len() as u64;
    let max_level = p.r as u64 + n_in * p.d as u64 / 2;
    if (res.level as u64) < p.r as u64 || res.level as u64 > max_level {
        return Err(Error::Invalid(format!(
            "level {} outside [{}, {max_level}]",
            res.level, p.r
        )));
    }

    // provenance partitions the input family and reproduces each part
    let mut seen = vec![false; p.q_family.len()];
    for (part, prov) in res.p_family.iter().zip(&res.provenance) {
        let mut rebuilt: Vec<usize> = Vec::new();
        for &qi in prov {
            if qi >= p.q_family.len() || seen[qi] {
                return Err(Error::Invalid(format!("bad provenance entry {qi}")));
            }
            seen[qi] = true;
            rebuilt.extend_from_slice(&p.q_family[qi]);
        }
        rebuilt.sort_unstable();
        if &rebuilt != part {
            return Err(Error::Invalid(
                "part does not equal the union of its provenance sets".into(),
            ));
        }

        // (i) chain condition on the provenance members
        let mut dsu = crate::graph::UnionFind::new(prov.len());
        let mut united = 1usize.min(prov.len());
        for a in 0..prov.len() {
            let dist = p.host.dist_from(&p.q_family[prov[a]], p.blocked);
            for b in a + 1..prov.len() {
                let dab = p.q_family[prov[b]]
                    .iter()
                    .map(|&v| dist[v])
                    .min()
                    .unwrap_or(INF);
                if dab <= 2 * res.level && dsu.union(a, b) {
                    united += 1;
                }
            }
        }
        if united != prov.len() {
            return Err(Error::Invalid(format!(
                "part starting at {} violates the chain condition at gap {}",
                part[0],
                2 * res.level
            )));
        }

        // (iii) diameter bound
        if let Some(dd) = diameter_bound {
            let cap = n_in * dd as u64 + n_in.saturating_sub(1) * (2 * p.r as u64 + n_in * p.d as u64);
            let cap32 = cap.min(u32::MAX as u64 - 1) as u32;
            let diam = p.host.diameter_of_set(part, cap32 + 1, p.blocked);
            if diam as u64 > cap {
                return Err(Error::Invalid(format!(
                    "part starting at {} has diameter above {cap}",
                    part[0]
                )));
            }
        }
    }
    if !seen.iter().all(|&s| s) {
        return Err(Error::Invalid("provenance does not cover the input family".into()));
    }

    // (ii) separation
    for i in 0..res.p_family.len() {
        let dist = p.host.dist_from(&res.p_family[i], p.blocked);
        for j in i + 1..res.p_family.len() {
            let dij = res.p_family[j].iter().map(|&v| dist[v]).min().unwrap_or(INF);
            if dij < 2 * res.level + p.d {
                return Err(Error::Invalid(format!(
                    "parts starting at {} and {} are at distance {dij} < {}",
                    res.p_family[i][0],
                    res.p_family[j][0],
                    2 * res.level + p.d
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GeneratorSpec};

    fn path(n: usize) -> Graph {
        generate(&GeneratorSpec::Path { n }).unwrap()
    }

    #[test]
    fn no_merge_at_exact_threshold() {
        let g = path(200);
        let p = MergeProblem {
            host: &g,
            blocked: None,
            q_family: vec![vec![0], vec![5], vec![100]],
            r: 1,
            d: 3,
        };
        let res = merge_partition(&p).unwrap();
        assert_eq!(res.p_family, vec![vec![0], vec![5], vec![100]]);
        assert_eq!(res.level, 1);
        assert!(res.trace.is_empty());
        verify_merge(&p, &res, Some(0)).unwrap();
    }

    #[test]
    fn single_merge_raises_level() {
        let g = path(200);
        let p = MergeProblem {
            host: &g,
            blocked: None,
            q_family: vec![vec![0], vec![4], vec![100]],
            r: 1,
            d: 3,
        };
        let res = merge_partition(&p).unwrap();
        assert_eq!(res.p_family, vec![vec![0, 4], vec![100]]);
        assert_eq!(res.level, 2);
        assert_eq!(res.trace.len(), 1);
        assert_eq!((res.trace[0].a_min, res.trace[0].b_min), (0, 4));
        verify_merge(&p, &res, Some(0)).unwrap();
    }

    #[test]
    fn singleton_family_is_returned_as_is() {
        let g = path(10);
        let p = MergeProblem {
            host: &g,
            blocked: None,
            q_family: vec![vec![3, 4]],
            r: 7,
            d: 2,
        };
        let res = merge_partition(&p).unwrap();
        assert_eq!(res.p_family, vec![vec![3, 4]]);
        assert_eq!(res.level, 7);
        verify_merge(&p, &res, Some(1)).unwrap();
    }

    #[test]
    fn cascading_merges_stay_within_level_bound() {
        let g = path(100);
        let q: Vec<Vec<usize>> = (0..10).map(|i| vec![i * 3]).collect();
        let p = MergeProblem { host: &g, blocked: None, q_family: q.clone(), r: 1, d: 2 };
        let res = merge_partition(&p).unwrap();
        assert_eq!(res.p_family.len(), 1);
        assert!(res.level <= 1 + (10 * 2) / 2);
        verify_merge(&p, &res, Some(0)).unwrap();
    }

    #[test]
    fn blocked_host_changes_distances() {
        // on the full path 0..30, {0} and {8} would merge at r=2, d=5;
        // blocking vertex 4 disconnects them so nothing merges
        let g = path(30);
        let mut blocked = vec![false; 30];
        blocked[4] = true;
        let p = MergeProblem {
            host: &g,
            blocked: Some(&blocked),
            q_family: vec![vec![0], vec![8]],
            r: 2,
            d: 5,
        };
        let res = merge_partition(&p).unwrap();
        assert_eq!(res.p_family.len(), 2);
        assert_eq!(res.level, 2);
        verify_merge(&p, &res, Some(0)).unwrap();
        let p_full = MergeProblem {
            host: &g,
            blocked: None,
            q_family: vec![vec![0], vec![8]],
            r: 2,
            d: 5,
        };
        let res = merge_partition(&p_full).unwrap();
        assert_eq!(res.p_family.len(), 1);
        verify_merge(&p_full, &res, Some(0)).unwrap();
    }

    #[test]
    fn rejects_overlapping_sets() {
        let g = path(10);
        let p = MergeProblem {
            host: &g,
            blocked: None,
            q_family: vec![vec![0, 1], vec![1, 2]],
            r: 1,
            d: 1,
        };
        assert!(merge_partition(&p).is_err());
    }

    #[test]
    fn deterministic_under_input_permutation() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let g = generate(&GeneratorSpec::RandomTree { n: 120, seed: 5 }).unwrap();
        let base: Vec<Vec<usize>> = (0..12).map(|i| vec![i * 10, i * 10 + 1]).collect();
        let p = MergeProblem { host: &g, blocked: None, q_family: base.clone(), r: 2, d: 3 };
        let reference = merge_partition(&p).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let mut shuffled = base.clone();
            shuffled.shuffle(&mut rng);
            let p = MergeProblem { host: &g, blocked: None, q_family: shuffled, r: 2, d: 3 };
            let res = merge_partition(&p).unwrap();
            assert_eq!(res.p_family, reference.p_family);
            assert_eq!(res.level, reference.level);
        }
    }

    #[test]
    fn random_problems_verify() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for trial in 0..60 {
            let n = rng.gen_range(20..80);
            let g = if trial % 2 == 0 {
                generate(&GeneratorSpec::RandomTree { n, seed: trial }).unwrap()
            } else {
                generate(&GeneratorSpec::Gnp { n, p: 0.08, seed: trial }).unwrap()
            };
            let mut vertices: Vec<usize> = (0..n).collect();
            let sets = rng.gen_range(1..8);
            let mut q = Vec::new();
            for _ in 0..sets {
                let v = vertices.swap_remove(rng.gen_range(0..vertices.len()));
                q.push(vec![v]);
            }
            let p = MergeProblem {
                host: &g,
                blocked: None,
                q_family: q,
                r: rng.gen_range(0..4),
                d: rng.gen_range(0..5),
            };
            let res = merge_partition(&p).unwrap();
            verify_merge(&p, &res, Some(0)).unwrap();
        }
    }
}
