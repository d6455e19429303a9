//! Stochastic block model sampling.
//!
//! `m` classes of `n` vertices; intra-class edges open with probability `p`,
//! inter-class edges with probability `q`. Two routes to the component
//! sizes:
//!
//! * coupled mode — the three-step threshold-field construction (per-class
//!   merging at the intra time, round-robin join, cross-class merging at
//!   the inter time with an independent field), exact couplings included;
//! * fast mode — direct Bernoulli edge sampling with geometric skipping
//!   over linearized pair spaces, O(vertices + edges) per sample, for
//!   large-n experiments where only the distribution matters.
//!
//! Vertices follow the round-robin class layout: class `l` (1-based) holds
//! the labels congruent to `l` mod `m`.

use serde::{Deserialize, Serialize};

use crate::engine::{ord, round_robin_join, rmm, ComponentVector, DisjointSets, MassVector};
use crate::field::{CounterRng, ThresholdField};
use crate::relation::Relation;
use crate::Error;

/// Connectivity parameters: raw probabilities or the near-critical window
/// coordinates `(t, u)` with `p_n = 1/n + t n^{-4/3}`, `q_n = u n^{-4/3}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum SbmMode {
    Raw { p: f64, q: f64 },
    Critical { t: f64, u: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SbmParams {
    /// Vertices per class.
    pub n: usize,
    /// Number of classes.
    pub m: usize,
    pub mode: SbmMode,
}

impl SbmParams {
    /// Resolve to raw `(p, q)`, validating the domain (no clamping: the
    /// near-critical window is only defined once both probabilities are in
    /// `[0, 1]`).
    pub fn edge_probabilities(&self) -> Result<(f64, f64), Error> {
        match self.mode {
            SbmMode::Raw { p, q } => {
                if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
                    return Err(Error::Domain(format!(
                        "probabilities must lie in [0,1], got p = {p}, q = {q}"
                    )));
                }
                Ok((p, q))
            }
            SbmMode::Critical { t, u } => {
                let n = self.n as f64;
                let p = 1.0 / n + t * n.powf(-4.0 / 3.0);
                let q = u * n.powf(-4.0 / 3.0);
                if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
                    return Err(Error::Domain(format!(
                        "n = {} too small for the window: p_n = {p}, q_n = {q}",
                        self.n
                    )));
                }
                Ok((p, q))
            }
        }
    }
}

/// Merge times `(t_n, u_n)` matching the window probabilities:
/// `1 - exp(-t_n n^{-4/3}) = 1/n + t n^{-4/3}` and
/// `1 - exp(-u_n n^{-4/3}) = u n^{-4/3}`.
pub fn critical_times(n: usize, t: f64, u: f64) -> Result<(f64, f64), Error> {
    let nf = n as f64;
    let scale = nf.powf(4.0 / 3.0);
    let arg_t = 1.0 - 1.0 / nf - t / scale;
    let arg_u = 1.0 - u / scale;
    if arg_t <= 0.0 || arg_u <= 0.0 {
        return Err(Error::Domain(format!(
            "log arguments must be positive: 1 - 1/n - t n^(-4/3) = {arg_t}, 1 - u n^(-4/3) = {arg_u}"
        )));
    }
    Ok((-scale * arg_t.ln(), -scale * arg_u.ln()))
}

/// Rescaled component masses of the near-critical block model via the
/// coupled three-step construction: (i) all `n * m` vertices carry mass
/// `n^{-2/3}`; (ii) each class is merged internally at time `t_n` with the
/// intra field; (iii) the round-robin join of the per-class component
/// vectors is merged across classes at time `u_n` with the independent
/// inter field.
pub fn zeta_coupled(
    n: usize,
    m: usize,
    t: f64,
    u: f64,
    intra_field: &ThresholdField,
    inter_field: &ThresholdField,
) -> Result<ComponentVector, Error> {
    let (t_n, u_n) = critical_times(n, t, u)?;
    let unit = (n as f64).powf(-2.0 / 3.0);
    let bar = t_n * unit * unit; // uniform masses: open iff threshold <= this
    let mut per_class = Vec::with_capacity(m);
    for class in 1..=m {
        let vertex = |k: usize| class + (k - 1) * m; // k-th member of B_class
        let mut sets = DisjointSets::singletons(n);
        for k1 in 1..=n {
            for k2 in (k1 + 1)..=n {
                if intra_field.evaluate(vertex(k1), vertex(k2)) <= bar {
                    sets.union(k1 - 1, k2 - 1);
                }
            }
        }
        let mut counts = vec![0usize; n];
        for k in 0..n {
            counts[sets.find(k)] += 1;
        }
        let masses: Vec<f64> = counts
            .into_iter()
            .filter(|&c| c > 0)
            .map(|c| c as f64 * unit)
            .collect();
        per_class.push(ord(&MassVector::new(masses)));
    }
    let joined = round_robin_join(&per_class);
    Ok(rmm(&joined, inter_field, &Relation::inter(m), u_n))
}

/// Decode a linear index into the pair `(a, b)`, `a < b < n`, under the
/// lexicographic-by-`a` layout of the `n (n - 1) / 2` pair space.
fn decode_triangular(index: usize, n: usize) -> (usize, usize) {
    let cum = |a: usize| a * n - a * (a + 1) / 2;
    let mut a = {
        let nf = n as f64 - 0.5;
        let disc = (nf * nf - 2.0 * index as f64).max(0.0);
        (nf - disc.sqrt()).floor().max(0.0) as usize
    };
    while a + 1 < n && cum(a + 1) <= index {
        a += 1;
    }
    while a > 0 && cum(a) > index {
        a -= 1;
    }
    let b = index - cum(a) + a + 1;
    (a, b)
}

/// Component sizes of one `G_m(n, p, q)` sample by geometric skipping,
/// sorted nonincreasingly. Unit masses; labels follow the round-robin
/// class layout.
pub fn fast_sample_sizes(
    n: usize,
    m: usize,
    p: f64,
    q: f64,
    rng: &mut CounterRng,
) -> Vec<usize> {
    let total = n * m;
    let mut sets = DisjointSets::singletons(total);
    // 0-based: class l in 0..m holds vertices l, l + m, l + 2m, ...
    let intra_space = n * (n - 1) / 2;
    for class in 0..m {
        let mut pos = rng.next_skip(p);
        while pos < intra_space {
            let (a, b) = decode_triangular(pos, n);
            sets.union(class + a * m, class + b * m);
            pos = pos.saturating_add(1).saturating_add(rng.next_skip(p));
        }
    }
    // Inter pairs: class pairs (l1 < l2), each an n x n grid, concatenated.
    let grid = n * n;
    let class_pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|l1| ((l1 + 1)..m).map(move |l2| (l1, l2)))
        .collect();
    let inter_space = class_pairs.len() * grid;
    let mut pos = rng.next_skip(q);
    while pos < inter_space {
        let (l1, l2) = class_pairs[pos / grid];
        let r = pos % grid;
        sets.union(l1 + (r / n) * m, l2 + (r % n) * m);
        pos = pos.saturating_add(1).saturating_add(rng.next_skip(q));
    }
    let mut counts = vec![0usize; total];
    for v in 0..total {
        counts[sets.find(v)] += 1;
    }
    let mut sizes: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// One fast-mode sample of the rescaled component-mass vector (entries are
/// `size * n^{-2/3}`).
pub fn sample_components(params: &SbmParams, rng: &mut CounterRng) -> Result<ComponentVector, Error> {
    let (p, q) = params.edge_probabilities()?;
    let unit = (params.n as f64).powf(-2.0 / 3.0);
    let sizes = fast_sample_sizes(params.n, params.m, p, q, rng);
    Ok(ord(&MassVector::new(
        sizes.into_iter().map(|s| s as f64 * unit).collect(),
    )))
}

/// Largest component size (unrescaled) of one fast-mode sample.
pub fn largest_component_size(
    n: usize,
    m: usize,
    p: f64,
    q: f64,
    rng: &mut CounterRng,
) -> usize {
    fast_sample_sizes(n, m, p, q, rng)
        .first()
        .copied()
        .unwrap_or(0)
}
