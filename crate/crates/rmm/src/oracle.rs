//! Exhaustive enumeration oracle for small instances.
//!
//! Every admissible edge is open independently with probability
//! `p_ij = 1 - exp(-x_i * x_j * t)`. Walking all 2^K edge configurations
//! gives the exact law of the merge output, exact connectivity
//! probabilities, and exact disjoint-occurrence probabilities. This is the
//! ground truth that every statistical test in the suite is checked
//! against.

use std::collections::HashMap;

use crate::engine::{component_masses, ComponentVector, DisjointSets, MassVector};
use crate::relation::Relation;
use crate::Error;

/// Hard cap on the number of admissible edges (2^24 configurations).
pub const EDGE_CAP: usize = 24;

/// Exact finite law of an ordered component-mass vector.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    /// Outcomes with their probabilities, ordered by decreasing mass
    /// vector (lexicographically), probabilities summing to 1.
    pub outcomes: Vec<(ComponentVector, f64)>,
    /// Per-pair open probabilities of the admissible edges.
    pub edge_probs: Vec<((usize, usize), f64)>,
}

impl ExactDistribution {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| p).sum()
    }

    /// Probability-weighted mean of a scalar functional of the outcome.
    pub fn expect(&self, f: impl Fn(&ComponentVector) -> f64) -> f64 {
        self.outcomes.iter().map(|(v, p)| f(v) * p).sum()
    }

    /// Probability that the functional value is at least `threshold`.
    pub fn tail_probability(&self, f: impl Fn(&ComponentVector) -> f64, threshold: f64) -> f64 {
        self.outcomes
            .iter()
            .filter(|(v, _)| f(v) >= threshold)
            .map(|(_, p)| p)
            .sum()
    }

    /// Exact probability of each outcome, keyed by the mass bit pattern, for
    /// goodness-of-fit testing of empirical samples.
    pub fn outcome_probability(&self, v: &ComponentVector) -> Option<f64> {
        let key = mass_key(v);
        self.outcomes
            .iter()
            .find(|(o, _)| mass_key(o) == key)
            .map(|(_, p)| *p)
    }
}

fn mass_key(v: &ComponentVector) -> Vec<u64> {
    v.as_slice().iter().map(|m| m.to_bits()).collect()
}

/// Admissible edges with strictly positive open probability.
fn open_edges(x: &MassVector, relation: &Relation, t: f64) -> Vec<((usize, usize), f64)> {
    let n = x.support_size();
    relation
        .edges_within(n)
        .into_iter()
        .filter_map(|(i, j)| {
            let bar = x.mass(i) * x.mass(j) * t;
            if bar > 0.0 {
                Some(((i, j), -(-bar).exp_m1()))
            } else {
                None
            }
        })
        .collect()
}

/// Walk every edge configuration, calling `visit(open_mask, probability)`.
fn for_each_configuration(
    edges: &[((usize, usize), f64)],
    mut visit: impl FnMut(u32, f64),
) -> Result<(), Error> {
    let k = edges.len();
    if k > EDGE_CAP {
        return Err(Error::Capacity {
            edges: k,
            cap: EDGE_CAP,
        });
    }
    for mask in 0u32..(1u32 << k) {
        let mut prob = 1.0;
        for (b, (_, p)) in edges.iter().enumerate() {
            if mask >> b & 1 == 1 {
                prob *= p;
            } else {
                prob *= 1.0 - p;
            }
        }
        visit(mask, prob);
    }
    Ok(())
}

fn partition_for(
    n: usize,
    edges: &[((usize, usize), f64)],
    mask: u32,
) -> DisjointSets {
    let mut sets = DisjointSets::singletons(n);
    for (b, ((i, j), _)) in edges.iter().enumerate() {
        if mask >> b & 1 == 1 {
            sets.union(i - 1, j - 1);
        }
    }
    sets
}

/// Exact law of the ordered component masses under `(x, R, t)`.
pub fn enumerate_law(x: &MassVector, relation: &Relation, t: f64) -> Result<ExactDistribution, Error> {
    let edges = open_edges(x, relation, t);
    let n = x.support_size();
    // Kahan-compensated accumulation per outcome so that normalization
    // holds to 1e-12 even at 2^24 terms.
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut sums: Vec<(ComponentVector, f64, f64)> = Vec::new();
    for_each_configuration(&edges, |mask, prob| {
        let mut sets = partition_for(n, &edges, mask);
        let outcome = component_masses(x, &mut sets);
        let key = mass_key(&outcome);
        let slot = *index.entry(key).or_insert_with(|| {
            sums.push((outcome, 0.0, 0.0));
            sums.len() - 1
        });
        let (_, sum, comp) = &mut sums[slot];
        let y = prob - *comp;
        let t_new = *sum + y;
        *comp = (t_new - *sum) - y;
        *sum = t_new;
    })?;
    let mut outcomes: Vec<(ComponentVector, f64)> =
        sums.into_iter().map(|(v, s, _)| (v, s)).collect();
    outcomes.sort_by(|a, b| {
        b.0.as_slice()
            .partial_cmp(a.0.as_slice())
            .unwrap()
    });
    Ok(ExactDistribution {
        outcomes,
        edge_probs: edges,
    })
}

/// Exact probability that every vertex of `vertex_set` lies in a single
/// connected component.
pub fn connect_probability(
    x: &MassVector,
    relation: &Relation,
    t: f64,
    vertex_set: &[usize],
) -> Result<f64, Error> {
    assert!(vertex_set.iter().all(|&v| v >= 1 && v <= x.support_size()));
    if vertex_set.len() <= 1 {
        return Ok(1.0);
    }
    let edges = open_edges(x, relation, t);
    let n = x.support_size();
    let mut total = 0.0;
    let mut comp = 0.0;
    for_each_configuration(&edges, |mask, prob| {
        let mut sets = partition_for(n, &edges, mask);
        let root = sets.find(vertex_set[0] - 1);
        if vertex_set[1..].iter().all(|&v| sets.find(v - 1) == root) {
            let y = prob - comp;
            let t_new = total + y;
            comp = (t_new - total) - y;
            total = t_new;
        }
    })?;
    Ok(total)
}

/// Exact probability that all the connection events `{i_k ~ j_k}` occur via
/// mutually vertex-disjoint witness paths, under the maximal relation on
/// the support of `x`.
pub fn disjoint_occurrence_probability(
    x: &MassVector,
    t: f64,
    pairs: &[(usize, usize)],
) -> Result<f64, Error> {
    let n = x.support_size();
    for &(i, j) in pairs {
        assert!(i != j && i >= 1 && j >= 1 && i <= n && j <= n, "pairs must be distinct in-range vertices");
    }
    let edges = open_edges(x, &Relation::Maximal, t);
    let mut total = 0.0;
    let mut comp = 0.0;
    for_each_configuration(&edges, |mask, prob| {
        let mut adj = vec![Vec::new(); n];
        for (b, ((i, j), _)) in edges.iter().enumerate() {
            if mask >> b & 1 == 1 {
                adj[i - 1].push(j - 1);
                adj[j - 1].push(i - 1);
            }
        }
        let mut used = vec![false; n];
        if disjoint_paths_exist(&adj, pairs, &mut used, 0) {
            let y = prob - comp;
            let t_new = total + y;
            comp = (t_new - total) - y;
            total = t_new;
        }
    })?;
    Ok(total)
}

/// Search for a system of mutually vertex-disjoint paths realizing every
/// pair from position `k` on. Exhaustive; fine at the oracle's scale.
fn disjoint_paths_exist(
    adj: &[Vec<usize>],
    pairs: &[(usize, usize)],
    used: &mut [bool],
    k: usize,
) -> bool {
    if k == pairs.len() {
        return true;
    }
    let (a, b) = (pairs[k].0 - 1, pairs[k].1 - 1);
    if used[a] || used[b] {
        return false;
    }
    let mut path = vec![a];
    used[a] = true;
    let found = extend_path(adj, a, b, used, &mut path, pairs, k);
    used[a] = false;
    found
}

fn extend_path(
    adj: &[Vec<usize>],
    current: usize,
    target: usize,
    used: &mut [bool],
    path: &mut Vec<usize>,
    pairs: &[(usize, usize)],
    k: usize,
) -> bool {
    for &next in &adj[current] {
        if used[next] {
            continue;
        }
        used[next] = true;
        path.push(next);
        let ok = if next == target {
            disjoint_paths_exist(adj, pairs, used, k + 1)
        } else {
            extend_path(adj, next, target, used, path, pairs, k)
        };
        path.pop();
        used[next] = false;
        if ok {
            return true;
        }
    }
    false
}

/// Exact law of component masses under an explicit per-edge probability
/// table (used to cross-check constructions whose edge probabilities are
/// not of the `1 - exp(-x_i x_j t)` form).
pub fn enumerate_law_with_edges(
    x: &MassVector,
    edges: &[((usize, usize), f64)],
) -> Result<ExactDistribution, Error> {
    let n = x.support_size();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut sums: Vec<(ComponentVector, f64)> = Vec::new();
    for_each_configuration(edges, |mask, prob| {
        let mut sets = partition_for(n, edges, mask);
        let outcome = component_masses(x, &mut sets);
        let key = mass_key(&outcome);
        let slot = *index.entry(key).or_insert_with(|| {
            sums.push((outcome, 0.0));
            sums.len() - 1
        });
        sums[slot].1 += prob;
    })?;
    let mut outcomes = sums;
    outcomes.sort_by(|a, b| b.0.as_slice().partial_cmp(a.0.as_slice()).unwrap());
    Ok(ExactDistribution {
        outcomes,
        edge_probs: edges.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::ord;

    #[test]
    fn two_vertices_single_edge() {
        let x = MassVector::new(vec![1.0, 1.0]);
        let t = 0.8;
        let law = enumerate_law(&x, &Relation::Maximal, t).unwrap();
        assert_eq!(law.outcomes.len(), 2);
        let p = 1.0 - (-t as f64).exp();
        let merged = law
            .outcomes
            .iter()
            .find(|(v, _)| v.len_nonzero() == 1)
            .unwrap();
        assert!((merged.1 - p).abs() < 1e-14);
        assert!((law.total_probability() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn time_zero_is_point_mass() {
        let x = MassVector::new(vec![0.5, 2.0, 1.0]);
        let law = enumerate_law(&x, &Relation::Maximal, 0.0).unwrap();
        assert_eq!(law.outcomes.len(), 1);
        assert_eq!(law.outcomes[0].0, ord(&x));
        assert_eq!(law.outcomes[0].1, 1.0);
    }

    #[test]
    fn triangle_at_half() {
        // x = (1,1,1), t = ln 2 so each of the 3 edges is open w.p. 1/2.
        let x = MassVector::new(vec![1.0, 1.0, 1.0]);
        let law = enumerate_law(&x, &Relation::Maximal, 2.0f64.ln()).unwrap();
        // All 8 configurations equally likely: (3) from 4 configs
        // (triangle + three single-missing-edge), (2,1) from 3, (1,1,1)
        // from 1.
        let p_all = law.tail_probability(|v| v.largest(), 3.0);
        assert!((p_all - 0.5).abs() < 1e-12);
        let p_pair = law
            .outcomes
            .iter()
            .find(|(v, _)| v.largest() == 2.0)
            .unwrap()
            .1;
        assert!((p_pair - 3.0 / 8.0).abs() < 1e-12);
        let p_iso = law
            .outcomes
            .iter()
            .find(|(v, _)| v.largest() == 1.0)
            .unwrap()
            .1;
        assert!((p_iso - 1.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_is_enforced() {
        let x = MassVector::new(vec![1.0; 8]); // 28 pairs > 24
        match enumerate_law(&x, &Relation::Maximal, 0.5) {
            Err(Error::Capacity { edges: 28, cap: 24 }) => {}
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn connectivity_three_vertices() {
        // P{1 ~ 2} on the triangle: direct edge, or both indirect edges
        // open with the direct one closed.
        let x = MassVector::new(vec![0.5, 0.5, 0.5]);
        let t = 1.0;
        let p = 1.0 - (-0.25f64).exp();
        let expected = p + (1.0 - p) * p * p;
        let got = connect_probability(&x, &Relation::Maximal, t, &[1, 2]).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert_eq!(connect_probability(&x, &Relation::Maximal, t, &[2]).unwrap(), 1.0);
        assert_eq!(connect_probability(&x, &Relation::Empty, t, &[1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn single_pair_disjoint_equals_connectivity() {
        let x = MassVector::new(vec![0.6, 0.8, 0.4, 0.7]);
        let t = 0.9;
        let a = disjoint_occurrence_probability(&x, t, &[(1, 3)]).unwrap();
        let b = connect_probability(&x, &Relation::Maximal, t, &[1, 3]).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn shared_endpoint_cannot_be_disjoint() {
        let x = MassVector::new(vec![0.6, 0.8, 0.4]);
        let p = disjoint_occurrence_probability(&x, 1.0, &[(1, 2), (1, 3)]).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn two_disjoint_pairs_on_four_vertices() {
        // {1~2} and {3~4} disjointly on K4 with uniform edge probability p.
        // Any indirect witness path for one pair consumes a vertex the
        // other pair needs, so the only vertex-disjoint system is the two
        // direct edges: the probability is exactly p^2.
        let x = MassVector::new(vec![1.0, 1.0, 1.0, 1.0]);
        let t = 0.4;
        let p = 1.0 - (-t as f64).exp();
        let exact = disjoint_occurrence_probability(&x, t, &[(1, 2), (3, 4)]).unwrap();
        assert!((exact - p * p).abs() < 1e-12, "exact = {exact}, p^2 = {}", p * p);
    }

    #[test]
    fn indirect_witness_counts_on_five_vertices() {
        // Adding a spare vertex 5 opens indirect systems: the disjoint
        // probability must strictly exceed p^2 but stay below P(1~2)P(3~4).
        let x = MassVector::new(vec![1.0; 5]);
        let t = 0.5;
        let p = 1.0 - (-t as f64).exp();
        let exact = disjoint_occurrence_probability(&x, t, &[(1, 2), (3, 4)]).unwrap();
        let marg12 = connect_probability(&x, &Relation::Maximal, t, &[1, 2]).unwrap();
        let marg34 = connect_probability(&x, &Relation::Maximal, t, &[3, 4]).unwrap();
        assert!(exact > p * p);
        assert!(exact <= marg12 * marg34 + 1e-12);
    }
}
