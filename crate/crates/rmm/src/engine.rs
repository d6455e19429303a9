//! The deterministic merge core.
//!
//! Given masses `x`, a threshold table, a relation `R` and a time `t`, build
//! the graph whose edges `{i, j} in R` are open when the threshold is at most
//! `x_i * x_j * t`, extract connected components by union-find, and return
//! the ordered component-mass vector. Also houses the vector utilities:
//! ordering, concatenation, truncations, shifts, interleaving and grinding.

use serde::{Deserialize, Serialize};

use crate::field::Thresholds;
use crate::relation::Relation;

/// Finite-support vector of nonnegative block masses. Coordinates are
/// 1-based when used as vertex labels; storage is 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassVector {
    masses: Vec<f64>,
}

impl MassVector {
    pub fn new(masses: Vec<f64>) -> Self {
        assert!(
            masses.iter().all(|&m| m >= 0.0 && m.is_finite()),
            "masses must be finite and nonnegative"
        );
        MassVector { masses }
    }

    pub fn uniform(count: usize, mass: f64) -> Self {
        MassVector::new(vec![mass; count])
    }

    /// Number of stored coordinates (zeros included; they matter for
    /// vertex indexing).
    pub fn support_size(&self) -> usize {
        self.masses.len()
    }

    /// Mass of vertex `i` (1-based); zero beyond the support.
    pub fn mass(&self, i: usize) -> f64 {
        assert!(i >= 1);
        self.masses.get(i - 1).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.masses
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.masses.iter().map(|m| m * m).sum()
    }

    /// Drop the first `m` coordinates.
    pub fn tail_shift(&self, m: usize) -> MassVector {
        MassVector {
            masses: self.masses.get(m..).unwrap_or(&[]).to_vec(),
        }
    }

    /// Zero all coordinates beyond the first `m`.
    pub fn head_truncate(&self, m: usize) -> MassVector {
        let mut masses = self.masses.clone();
        for v in masses.iter_mut().skip(m) {
            *v = 0.0;
        }
        MassVector { masses }
    }

    /// Replace each of the first `m` masses by `pieces` equal shares,
    /// keeping the remaining masses unchanged. Total mass is conserved;
    /// the squared norm of the head shrinks by the factor `pieces`.
    pub fn grind(&self, m: usize, pieces: usize) -> MassVector {
        assert!(m <= self.masses.len(), "grind head exceeds support");
        assert!(pieces >= 1);
        let mut out = Vec::with_capacity(m * pieces + (self.masses.len() - m));
        for &v in &self.masses[..m] {
            let share = v / pieces as f64;
            out.extend(std::iter::repeat(share).take(pieces));
        }
        out.extend_from_slice(&self.masses[m..]);
        MassVector { masses: out }
    }
}

/// Nonincreasing vector of component masses with its cached squared norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentVector {
    masses: Vec<f64>,
    norm_sq: f64,
}

impl ComponentVector {
    fn from_sorted(masses: Vec<f64>) -> Self {
        debug_assert!(masses.windows(2).all(|w| w[0] >= w[1]));
        let norm_sq = masses.iter().map(|m| m * m).sum();
        ComponentVector { masses, norm_sq }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.masses
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Largest component mass (zero when empty).
    pub fn largest(&self) -> f64 {
        self.masses.first().copied().unwrap_or(0.0)
    }

    /// `k`-th largest mass, 1-based; zero beyond the support.
    pub fn get(&self, k: usize) -> f64 {
        assert!(k >= 1);
        self.masses.get(k - 1).copied().unwrap_or(0.0)
    }

    /// Index of the last strictly positive coordinate; 0 when all-zero.
    pub fn len_nonzero(&self) -> usize {
        self.masses.iter().take_while(|&&m| m > 0.0).count()
    }

    /// Sum of `k`-th powers of the masses (`k` even in practice).
    pub fn power_sum(&self, k: u32) -> f64 {
        self.masses.iter().map(|m| m.powi(k as i32)).sum()
    }

    /// Squared norm of the tail after dropping the `m` largest components.
    pub fn tail_norm_sq(&self, m: usize) -> f64 {
        self.masses
            .get(m..)
            .unwrap_or(&[])
            .iter()
            .map(|v| v * v)
            .sum()
    }

    /// Scale every mass by a positive factor.
    pub fn scaled(&self, factor: f64) -> ComponentVector {
        assert!(factor > 0.0);
        ComponentVector::from_sorted(self.masses.iter().map(|m| m * factor).collect())
    }

    pub fn into_mass_vector(self) -> MassVector {
        MassVector::new(self.masses)
    }
}

/// Nonincreasing reordering. The sort is stable, so ties keep their
/// original relative order.
pub fn ord(x: &MassVector) -> ComponentVector {
    let mut masses = x.as_slice().to_vec();
    masses.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ComponentVector::from_sorted(masses)
}

/// Union-find with path compression and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl DisjointSets {
    pub fn singletons(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
            components: n,
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
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.components -= 1;
        true
    }

    pub fn component_count(&self) -> usize {
        self.components
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }
}

/// Partition of the support of `x` under the open edges of the graph at
/// time `t`. Element `k` of the result (0-based) is vertex `k + 1`.
pub fn build_components<T: Thresholds>(
    x: &MassVector,
    thresholds: &T,
    relation: &Relation,
    t: f64,
) -> DisjointSets {
    assert!(t >= 0.0, "merge time must be nonnegative");
    let n = x.support_size();
    let mut sets = DisjointSets::singletons(n);
    if t == 0.0 {
        return sets;
    }
    for (i, j) in relation.edges_within(n) {
        let bar = x.mass(i) * x.mass(j) * t;
        // Zero-mass vertices never attract an edge: thresholds are > 0.
        if bar > 0.0 && thresholds.threshold(i, j) <= bar {
            sets.union(i - 1, j - 1);
        }
    }
    sets
}

/// Component masses of a partition of `x`, accumulated at the root in
/// vertex order, then ordered nonincreasingly.
pub fn component_masses(x: &MassVector, sets: &mut DisjointSets) -> ComponentVector {
    let n = x.support_size();
    assert_eq!(sets.len(), n);
    let mut acc = vec![0.0f64; n];
    let mut seen = vec![false; n];
    for v in 0..n {
        let r = sets.find(v);
        acc[r] += x.mass(v + 1);
        seen[r] = true;
    }
    let masses: Vec<f64> = (0..n).filter(|&r| seen[r]).map(|r| acc[r]).collect();
    ord(&MassVector::new(masses))
}

/// Restricted multiplicative merging: ordered component masses of the graph
/// with edges `{i, j} in R` open when `threshold(i, j) <= x_i * x_j * t`.
pub fn rmm<T: Thresholds>(
    x: &MassVector,
    thresholds: &T,
    relation: &Relation,
    t: f64,
) -> ComponentVector {
    let mut sets = build_components(x, thresholds, relation, t);
    component_masses(x, &mut sets)
}

/// Noncommutative concatenation: the nonzero prefix of `x` followed by all
/// of `y`.
pub fn uplus(x: &ComponentVector, y: &ComponentVector) -> MassVector {
    let m = x.len_nonzero();
    let mut out = Vec::with_capacity(m + y.as_slice().len());
    out.extend_from_slice(&x.as_slice()[..m]);
    out.extend_from_slice(y.as_slice());
    MassVector::new(out)
}

/// Round-robin interleave of `m` component vectors: output position
/// `(k - 1) * m + l` holds the `k`-th entry of input `l` (both 1-based),
/// padding with zeros where an input is shorter.
pub fn round_robin_join(inputs: &[ComponentVector]) -> MassVector {
    assert!(!inputs.is_empty());
    let m = inputs.len();
    let depth = inputs
        .iter()
        .map(|v| v.as_slice().len())
        .max()
        .unwrap_or(0);
    let mut out = Vec::with_capacity(depth * m);
    for k in 1..=depth {
        for v in inputs {
            out.push(v.get(k));
        }
    }
    MassVector::new(out)
}
