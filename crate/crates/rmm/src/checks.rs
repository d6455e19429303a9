//! The verification suite: every coupling identity, closed-form bound and
//! distributional equality the library claims, packaged as named checks
//! with a JSON-serializable report.
//!
//! Conventions:
//! * coupling checks are exact per seed — a single violation fails;
//! * bound checks compare exact oracle values (or upper confidence
//!   endpoints of Monte Carlo estimates) against the closed forms — a
//!   single violation fails;
//! * distributional checks use KS or chi-square tests; a single rejection
//!   is treated as inconclusive and rerun once with fresh streams before
//!   failing (multiple-testing guard).
//!
//! All randomness is counter-based: trial `i` of a check uses a stream id
//! derived from the check's fixed stream base plus `i`, so reports are
//! byte-identical regardless of thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    cross_connectivity_bound, fourth_norm_bound, multi_connectivity_bound,
    pair_connectivity_bound, tail_polynomial,
};
use crate::coalescent::{martingale_functional, simulate_jump_process};
use crate::engine::{rmm, uplus, DisjointSets, MassVector};
use crate::field::{CounterRng, OffsetThresholds, ThresholdField};
use crate::oracle::{connect_probability, disjoint_occurrence_probability, enumerate_law};
use crate::relation::Relation;
use crate::stats::{chi_square_fit, ks_two_sample};
use crate::Error;

/// Distance between a check's stream space and the next; no two checks
/// ever address the same (seed, stream) cell.
const STREAM_SPAN: u64 = 1 << 40;
/// Offset added on the single fresh-stream retry.
const RETRY_SHIFT: u64 = 1 << 39;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundReport {
    pub name: &'static str,
    pub exact_or_estimate: f64,
    pub bound_value: f64,
    pub satisfied: bool,
    pub slack: f64,
}

impl BoundReport {
    fn new(name: &'static str, value: f64, bound: f64) -> Self {
        BoundReport {
            name,
            exact_or_estimate: value,
            bound_value: bound,
            satisfied: value <= bound,
            slack: bound - value,
        }
    }
}

/// One line of the verification report.
#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst left-hand side seen (meaning is check-specific, see detail).
    pub lhs: f64,
    /// The right-hand side it was compared against.
    pub rhs: f64,
    pub detail: String,
    pub trials: usize,
    pub seed: u64,
    pub stream_id: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

/// Trial counts for the suite. `Default` is the full acceptance scale;
/// `quick` is for smoke tests.
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Run only the named checks (default: every standard check).
    pub only: Option<Vec<String>>,
    pub coupling_seeds: usize,
    pub shift_seeds: usize,
    pub law_trials: usize,
    pub glue_trials: usize,
    pub jump_trials: usize,
    pub martingale_trials: usize,
    pub grinding_trials: usize,
    pub moment_trials: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 42,
            only: None,
            coupling_seeds: 10_000,
            shift_seeds: 10_000,
            law_trials: 100_000,
            glue_trials: 10_000,
            jump_trials: 10_000,
            martingale_trials: 100_000,
            grinding_trials: 10_000,
            moment_trials: 20_000,
        }
    }
}

impl VerifyConfig {
    pub fn quick(seed: u64) -> Self {
        VerifyConfig {
            seed,
            only: None,
            coupling_seeds: 300,
            shift_seeds: 200,
            law_trials: 20_000,
            glue_trials: 2_000,
            jump_trials: 2_000,
            martingale_trials: 5_000,
            grinding_trials: 1_000,
            moment_trials: 2_000,
        }
    }
}

type CheckFn = fn(&VerifyConfig, u64) -> CheckOutcome;

/// The standard suite, in report order. The negative control is excluded:
/// it exists to prove the suite can fail and runs only on request.
const STANDARD_CHECKS: &[(&str, CheckFn)] = &[
    ("monotone-coupling", check_monotone_coupling),
    ("shift-coupling", check_shift_coupling),
    ("oracle-law", check_oracle_law),
    ("pair-bound", check_pair_bound),
    ("cross-bound", check_cross_bound),
    ("tail-bound", check_tail_bound),
    ("disjoint-product", check_disjoint_product),
    ("multi-bound", check_multi_bound),
    ("fourth-norm-bound", check_fourth_norm_bound),
    ("tail-chain", check_tail_chain),
    ("uniform-tails", check_uniform_tails),
    ("glue", check_glue),
    ("jump-vs-graphical", check_jump_vs_graphical),
    ("martingale", check_martingale),
    ("grinding", check_grinding),
];

pub fn check_names() -> Vec<&'static str> {
    STANDARD_CHECKS.iter().map(|(n, _)| *n).collect()
}

/// Run the suite (or the `only` subset) and collect the report.
pub fn run_verify(config: &VerifyConfig) -> Result<VerifyReport, Error> {
    let mut selected: Vec<(&'static str, CheckFn)> = Vec::new();
    match &config.only {
        None => selected.extend_from_slice(STANDARD_CHECKS),
        Some(names) => {
            for name in names {
                if name == "negative-control" {
                    selected.push(("negative-control", check_negative_control));
                    continue;
                }
                match STANDARD_CHECKS.iter().find(|(n, _)| n == name) {
                    Some(&entry) => selected.push(entry),
                    None => {
                        return Err(Error::Usage(format!(
                            "unknown check '{name}'; known: {}",
                            check_names().join(", ")
                        )))
                    }
                }
            }
        }
    }
    let checks: Vec<CheckOutcome> = selected
        .iter()
        .map(|&(name, f)| {
            let base = stream_base(name);
            f(config, base)
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        seed: config.seed,
        passed,
        checks,
    })
}

/// Fixed stream base per check, independent of which subset runs.
fn stream_base(name: &str) -> u64 {
    let idx = STANDARD_CHECKS
        .iter()
        .position(|(n, _)| *n == name)
        .unwrap_or(STANDARD_CHECKS.len());
    (idx as u64 + 1) * STREAM_SPAN
}

fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

// ---------------------------------------------------------------------------
// Exact coupling checks
// ---------------------------------------------------------------------------

/// Small random relation on `[n]` drawn from a pool covering every variant.
fn random_relation(rng: &mut CounterRng, n: usize) -> Relation {
    match rng.next_u64() % 5 {
        0 => Relation::Maximal,
        1 => Relation::inter(2 + (rng.next_u64() % 3) as usize),
        2 => {
            let m = 2 + (rng.next_u64() % 2) as usize;
            let l = 1 + (rng.next_u64() % m as u64) as usize;
            Relation::intra(m, l).union(Relation::Maximal.up_down(1 + (rng.next_u64() % n as u64) as usize))
        }
        3 => Relation::Maximal.up_down(1 + (rng.next_u64() % n as u64) as usize),
        _ => {
            let all: Vec<(usize, usize)> = Relation::Maximal.edges_within(n);
            Relation::from_edges(
                all.into_iter().filter(|_| rng.next_unit() < 0.6),
            )
        }
    }
}

/// Same thresholds, larger masses, longer time, larger relation: the
/// merged configuration can only get coarser. Checked exactly per seed on
/// both the norm ordering and edge-set containment.
fn check_monotone_coupling(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let seed = config.seed;
    let trials = config.coupling_seeds;
    let results: Vec<(bool, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = CounterRng::new(seed, base + 2 * k);
            let field = ThresholdField::new(seed, base + 2 * k + 1);
            let n = 2 + (rng.next_u64() % 7) as usize;
            let y_masses: Vec<f64> = (0..n).map(|_| 2.0 * rng.next_unit()).collect();
            let x_masses: Vec<f64> = y_masses.iter().map(|&m| m * rng.next_unit()).collect();
            let y = MassVector::new(y_masses);
            let x = MassVector::new(x_masses);
            let t2 = 1.5 * rng.next_unit();
            let t1 = t2 * rng.next_unit();
            let r2 = random_relation(&mut rng, n);
            let r2_edges = r2.edges_within(n);
            let r1 = Relation::from_edges(
                r2_edges.iter().copied().filter(|_| rng.next_unit() < 0.7),
            );
            let small = rmm(&x, &field, &r1, t1);
            let large = rmm(&y, &field, &r2, t2);
            let norm_ok = small.norm_sq() <= large.norm_sq() * (1.0 + 1e-12) + 1e-15;
            // Edge containment: every open small-graph edge is open in the
            // large graph.
            let edges_ok = r1.edges_within(n).into_iter().all(|(i, j)| {
                let a = field.evaluate(i, j);
                a > x.mass(i) * x.mass(j) * t1 || a <= y.mass(i) * y.mass(j) * t2
            });
            (norm_ok && edges_ok, large.norm_sq() - small.norm_sq())
        })
        .collect();
    let violations = results.iter().filter(|(ok, _)| !ok).count();
    let worst = results
        .iter()
        .map(|&(_, gap)| gap)
        .fold(f64::INFINITY, f64::min);
    CheckOutcome {
        name: "monotone-coupling",
        passed: violations == 0,
        lhs: violations as f64,
        rhs: 0.0,
        detail: format!(
            "{violations} violations over {trials} seeds; smallest norm-sq gap {worst:.6e}"
        ),
        trials,
        seed,
        stream_id: base,
    }
}

/// Dropping the `m` largest output components is dominated, per seed, by
/// running the merge on the input with its first `m` coordinates dropped
/// (shifted thresholds and relation).
fn check_shift_coupling(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let seed = config.seed;
    let trials = config.shift_seeds;
    let violations: usize = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = CounterRng::new(seed, base + 2 * k);
            let field = ThresholdField::new(seed, base + 2 * k + 1);
            let n = 2 + (rng.next_u64() % 49) as usize;
            let masses: Vec<f64> = (0..n).map(|_| 1.5 * rng.next_unit()).collect();
            let x = MassVector::new(masses);
            let t = rng.next_unit();
            let relation = random_relation(&mut rng, n);
            let full = rmm(&x, &field, &relation, t);
            let mut bad = 0usize;
            for m in [1usize, 2, 5] {
                let lhs = full.tail_norm_sq(m);
                let shifted = rmm(
                    &x.tail_shift(m),
                    &OffsetThresholds::new(&field, m),
                    &relation.clone().shifted(m),
                    t,
                );
                if lhs > shifted.norm_sq() * (1.0 + 1e-12) + 1e-15 {
                    bad += 1;
                }
            }
            bad
        })
        .sum();
    CheckOutcome {
        name: "shift-coupling",
        passed: violations == 0,
        lhs: violations as f64,
        rhs: 0.0,
        detail: format!(
            "{violations} violations over {trials} seeds, offsets 1, 2, 5, n <= 50"
        ),
        trials,
        seed,
        stream_id: base,
    }
}

// ---------------------------------------------------------------------------
// Oracle-backed law and bound checks
// ---------------------------------------------------------------------------

/// Fixture instances for the exact bound checks: small supports with
/// subcritical times (t * norm_sq <= 0.9).
fn bound_fixtures() -> Vec<(MassVector, f64)> {
    vec![
        (MassVector::new(vec![0.5, 0.5, 0.5]), 1.0),
        (MassVector::new(vec![0.6, 0.5, 0.4, 0.3]), 1.0),
        (MassVector::new(vec![0.4, 0.4, 0.3, 0.3, 0.2, 0.2]), 1.2),
        (MassVector::new(vec![0.9, 0.3, 0.2]), 0.8),
    ]
}

fn summarize_bounds(
    name: &'static str,
    reports: Vec<BoundReport>,
    seed: u64,
    base: u64,
    trials: usize,
) -> CheckOutcome {
    let violations = reports.iter().filter(|r| !r.satisfied).count();
    let tightest = reports
        .iter()
        .min_by(|a, b| a.slack.partial_cmp(&b.slack).unwrap())
        .copied();
    let (lhs, rhs) = tightest.map_or((0.0, 0.0), |r| (r.exact_or_estimate, r.bound_value));
    CheckOutcome {
        name,
        passed: violations == 0,
        lhs,
        rhs,
        detail: format!(
            "{violations} violations over {} comparisons; tightest: {} ({:.6e} <= {:.6e})",
            reports.len(),
            tightest.map_or("none", |r| r.name),
            lhs,
            rhs
        ),
        trials,
        seed,
        stream_id: base,
    }
}

/// Exact two-vertex connection probabilities never exceed
/// `x_i x_j t / (1 - t ||x||^2)`.
fn check_pair_bound(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let mut reports = Vec::new();
    for (x, t) in bound_fixtures() {
        let n = x.support_size();
        for i in 1..=n {
            for j in (i + 1)..=n {
                let exact = connect_probability(&x, &Relation::Maximal, t, &[i, j]).unwrap();
                let bound = pair_connectivity_bound(&x, t, i, j).unwrap();
                reports.push(BoundReport::new("pair", exact, bound));
            }
        }
    }
    summarize_bounds("pair-bound", reports, config.seed, base, 0)
}

/// Connections through cut-straddling edges only, against the three-case
/// cross bound.
fn check_cross_bound(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let mut reports = Vec::new();
    for (x, t) in bound_fixtures() {
        let n = x.support_size();
        if n < 4 {
            continue;
        }
        let m = 2;
        let relation = Relation::Maximal.up_down(m);
        let cases: [(&'static str, usize, usize); 3] = [
            ("cross-both-below", 1, 2),
            ("cross-both-above", 3, 4),
            ("cross-mixed", 1, 3),
        ];
        for (name, i, j) in cases {
            let exact = connect_probability(&x, &relation, t, &[i, j]).unwrap();
            let bound = cross_connectivity_bound(&x, t, m, i, j).unwrap();
            reports.push(BoundReport::new(name, exact, bound));
        }
    }
    summarize_bounds("cross-bound", reports, config.seed, base, 0)
}

/// Exact excess-norm tail of the cut-straddling merge against
/// `(||tail||^2 / eps) * P_t(||head||^2)`.
fn check_tail_bound(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let mut reports = Vec::new();
    for (x, t) in bound_fixtures() {
        let n = x.support_size();
        if n < 4 {
            continue;
        }
        let m = 2;
        let relation = Relation::Maximal.up_down(m);
        let law = enumerate_law(&x, &relation, t).unwrap();
        let head_sq = x.head_truncate(m).norm_sq();
        let tail_sq = x.tail_shift(m).norm_sq();
        for eps in [0.25, 0.5, 1.0] {
            let exact = law.tail_probability(|v| v.norm_sq() - head_sq, eps);
            let bound = tail_sq / eps * tail_polynomial(t, head_sq);
            reports.push(BoundReport::new("excess-norm-tail", exact, bound));
        }
    }
    summarize_bounds("tail-bound", reports, config.seed, base, 0)
}

/// Disjoint-occurrence probability of simultaneous connections never
/// exceeds the product of the marginal connection probabilities.
fn check_disjoint_product(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let mut reports = Vec::new();
    let cases: Vec<(MassVector, f64, Vec<(usize, usize)>)> = vec![
        (
            MassVector::new(vec![0.6, 0.5, 0.4, 0.3]),
            1.0,
            vec![(1, 2), (3, 4)],
        ),
        (
            MassVector::new(vec![0.4, 0.4, 0.3, 0.3, 0.2, 0.2]),
            1.2,
            vec![(1, 2), (3, 4)],
        ),
        (
            MassVector::new(vec![0.4, 0.4, 0.3, 0.3, 0.2, 0.2]),
            1.2,
            vec![(1, 4), (2, 5), (3, 6)],
        ),
        (
            MassVector::new(vec![0.5, 0.5, 0.5, 0.5]),
            0.9,
            vec![(1, 2), (2, 3)], // shared endpoint: disjoint prob must be 0
        ),
    ];
    for (x, t, pairs) in cases {
        let joint = disjoint_occurrence_probability(&x, t, &pairs).unwrap();
        let product: f64 = pairs
            .iter()
            .map(|&(i, j)| connect_probability(&x, &Relation::Maximal, t, &[i, j]).unwrap())
            .product();
        reports.push(BoundReport::new("disjoint-vs-product", joint, product + 1e-12));
    }
    summarize_bounds("disjoint-product", reports, config.seed, base, 0)
}

/// Exact triple and quadruple co-connection probabilities against the
/// explicit-constant bounds.
fn check_multi_bound(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let mut reports = Vec::new();
    for (x, t) in bound_fixtures() {
        let n = x.support_size();
        if n >= 3 {
            let idx = [1usize, 2, 3];
            let exact = connect_probability(&x, &Relation::Maximal, t, &idx).unwrap();
            let bound = multi_connectivity_bound(&x, t, &idx).unwrap();
            reports.push(BoundReport::new("triple", exact, bound));
        }
        if n >= 4 {
            let idx = [1usize, 2, 3, 4];
            let exact = connect_probability(&x, &Relation::Maximal, t, &idx).unwrap();
            let bound = multi_connectivity_bound(&x, t, &idx).unwrap();
            reports.push(BoundReport::new("quadruple", exact, bound));
        }
    }
    summarize_bounds("multi-bound", reports, config.seed, base, 0)
}

/// Monte Carlo law of the merge against exhaustive enumeration, chi-square
/// at alpha = 1e-3, with one fresh-stream retry per instance.
fn check_oracle_law(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let seed = config.seed;
    let trials = config.law_trials;
    let parity = Relation::intra(2, 1).union(Relation::intra(2, 2));
    let mut instances: Vec<(MassVector, Relation, f64)> = Vec::new();
    let fixtures = [
        MassVector::new(vec![1.0, 0.7]),
        MassVector::new(vec![1.0, 0.8, 0.6]),
        MassVector::new(vec![0.9, 0.7, 0.5, 0.3]),
        MassVector::new(vec![1.1, 0.9, 0.7, 0.5, 0.3]),
        MassVector::new(vec![0.5, 0.5, 0.5, 0.5]),
    ];
    for (fi, x) in fixtures.iter().enumerate() {
        let n = x.support_size();
        let t = 0.4 + 0.2 * fi as f64;
        instances.push((x.clone(), Relation::Maximal, t));
        instances.push((x.clone(), Relation::Maximal.up_down(n / 2), t + 0.1));
        if n >= 3 {
            instances.push((x.clone(), Relation::inter(2), t + 0.2));
            instances.push((x.clone(), parity.clone().union(Relation::Maximal.up_down(1)), t));
        } else {
            instances.push((x.clone(), Relation::from_edges([(1, 2)]), t + 0.2));
            instances.push((x.clone(), Relation::Maximal, t + 0.5));
        }
    }
    let mut rejections = 0usize;
    let mut failures = 0usize;
    let mut worst_stat = 0.0f64;
    let mut worst_thresh = 0.0f64;
    for (inst, (x, relation, t)) in instances.iter().enumerate() {
        let law = enumerate_law(x, relation, *t).unwrap();
        let probs: Vec<f64> = law.outcomes.iter().map(|(_, p)| *p).collect();
        let keys: Vec<Vec<u64>> = law
            .outcomes
            .iter()
            .map(|(v, _)| v.as_slice().iter().map(|m| m.to_bits()).collect())
            .collect();
        let instance_base = base + (inst as u64) * (1 << 24);
        let run = |shift: u64| {
            let counts_parts: Vec<Vec<usize>> = (0..trials as u64)
                .into_par_iter()
                .fold(
                    || vec![0usize; probs.len() + 1],
                    |mut acc, k| {
                        let field = ThresholdField::new(seed, instance_base + shift + k);
                        let out = rmm(x, &field, relation, *t);
                        let key: Vec<u64> =
                            out.as_slice().iter().map(|m| m.to_bits()).collect();
                        match keys.iter().position(|c| *c == key) {
                            Some(idx) => acc[idx] += 1,
                            None => acc[probs.len()] += 1,
                        }
                        acc
                    },
                )
                .collect();
            let mut counts = vec![0usize; probs.len() + 1];
            for part in counts_parts {
                for (c, p) in counts.iter_mut().zip(part) {
                    *c += p;
                }
            }
            counts
        };
        let mut counts = run(0);
        // Outcomes outside the enumerated support are a hard failure.
        if counts[probs.len()] > 0 {
            failures += 1;
            continue;
        }
        counts.pop();
        let mut result = chi_square_fit(&probs, &counts, 1e-3, 5.0).unwrap();
        if result.rejected {
            rejections += 1;
            let mut counts = run(RETRY_SHIFT);
            counts.pop();
            result = chi_square_fit(&probs, &counts, 1e-3, 5.0).unwrap();
            if result.rejected {
                failures += 1;
            }
        }
        if result.statistic / result.threshold > worst_stat / worst_thresh.max(1e-300) {
            worst_stat = result.statistic;
            worst_thresh = result.threshold;
        }
    }
    CheckOutcome {
        name: "oracle-law",
        passed: failures == 0,
        lhs: worst_stat,
        rhs: worst_thresh,
        detail: format!(
            "{failures} failures, {rejections} first-pass rejections over 20 instances, {trials} seeds each"
        ),
        trials,
        seed,
        stream_id: base,
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo moment and probability-chain checks
// ---------------------------------------------------------------------------

/// Monte Carlo fourth-power component moments stay below the closed-form
/// ceiling (upper confidence endpoint vs bound).
fn check_fourth_norm_bound(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let seed = config.seed;
    let trials = config.moment_trials;
    let mut reports = Vec::new();
    for (fi, (x, t)) in bound_fixtures().into_iter().enumerate() {
        let fixture_base = base + (fi as u64) * (1 << 24);
        let samples: Vec<f64> = (0..trials as u64)
            .into_par_iter()
            .map(|k| {
                let field = ThresholdField::new(seed, fixture_base + k);
                rmm(&x, &field, &Relation::Maximal, t).power_sum(4)
            })
            .collect();
        let (mean, se) = mean_se(&samples);
        let bound = fourth_norm_bound(&x, t).unwrap();
        reports.push(BoundReport::new("fourth-power-sum", mean + 3.0 * se, bound));
    }
    summarize_bounds("fourth-norm-bound", reports, config.seed, base, trials)
}

/// Probability that the full merge's squared norm exceeds its head-only
/// counterpart by `eps`, against the product-of-moments ceiling, both
/// sides Monte Carlo (upper confidence endpoint on the left).
fn check_tail_chain(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let seed = config.seed;
    let trials = config.moment_trials;
    let x = MassVector::new(vec![1.0, 0.8, 0.6, 0.2, 0.15, 0.1, 0.1, 0.05]);
    let relation = Relation::intra(2, 1).union(Relation::intra(2, 2));
    let t = 0.4;
    let m = 3;
    let eps = 0.5;
    let rows: Vec<(f64, f64, f64)> = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let field = ThresholdField::new(seed, base + k);
            let full = rmm(&x, &field, &relation, t);
            let head = rmm(&x.head_truncate(m), &field, &relation, t);
            let tail = rmm(
                &x.tail_shift(m),
                &OffsetThresholds::new(&field, m),
                &relation.clone().shifted(m),
                t,
            );
            let exceed = if full.norm_sq() - head.norm_sq() >= eps {
                1.0
            } else {
                0.0
            };
            (exceed, tail.norm_sq(), tail_polynomial(t, head.norm_sq()))
        })
        .collect();
    let exceed: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let tail_sq: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let poly: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let (p, p_se) = mean_se(&exceed);
    let (tail_mean, _) = mean_se(&tail_sq);
    let (poly_mean, _) = mean_se(&poly);
    let lhs = p + 3.0 * p_se;
    let rhs = tail_mean * poly_mean / eps;
    CheckOutcome {
        name: "tail-chain",
        passed: lhs <= rhs,
        lhs,
        rhs,
        detail: format!(
            "P(excess >= {eps}) upper endpoint {lhs:.5} vs moment product {rhs:.5}"
        ),
        trials,
        seed,
        stream_id: base,
    }
}

/// For a convergent family of mass vectors, the expected squared norm of
/// the merge run on the tail beyond a fixed index stays uniformly small.
fn check_uniform_tails(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let seed = config.seed;
    let trials = config.moment_trials;
    let m = 9;
    let horizon = 1.0;
    let eps = 0.05;
    let relation = Relation::Maximal;
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for (fi, n) in [1u32, 2, 4, 8].into_iter().enumerate() {
        let factor = 1.0 + 0.25 / n as f64;
        let x = MassVector::new((1..=12).map(|k| factor * 0.8f64.powi(k)).collect());
        let fixture_base = base + (fi as u64) * (1 << 24);
        let samples: Vec<f64> = (0..trials as u64)
            .into_par_iter()
            .map(|k| {
                let field = ThresholdField::new(seed, fixture_base + k);
                rmm(
                    &x.tail_shift(m),
                    &OffsetThresholds::new(&field, m),
                    &relation.clone().shifted(m),
                    horizon,
                )
                .norm_sq()
            })
            .collect();
        let (mean, se) = mean_se(&samples);
        worst = worst.max(mean + 3.0 * se);
        details.push(format!("{:.5}", mean + 3.0 * se));
    }
    CheckOutcome {
        name: "uniform-tails",
        passed: worst < eps,
        lhs: worst,
        rhs: eps,
        detail: format!(
            "upper endpoints of E||tail merge||^2 across the family: [{}]",
            details.join(", ")
        ),
        trials,
        seed,
        stream_id: base,
    }
}

// ---------------------------------------------------------------------------
// Distributional equality checks
// ---------------------------------------------------------------------------

fn ks_retry(
    gen_a: impl Fn(u64) -> Vec<f64> + Sync,
    gen_b: impl Fn(u64) -> Vec<f64> + Sync,
    alpha: f64,
) -> (f64, f64, bool, bool) {
    let a = gen_a(0);
    let b = gen_b(0);
    let first = ks_two_sample(&a, &b, alpha).unwrap();
    if !first.rejected {
        return (first.statistic, first.threshold, true, false);
    }
    let a = gen_a(RETRY_SHIFT);
    let b = gen_b(RETRY_SHIFT);
    let second = ks_two_sample(&a, &b, alpha).unwrap();
    (second.statistic, second.threshold, !second.rejected, true)
}

/// Merging within parts first and gluing across the cut with fresh
/// thresholds afterwards leaves the squared-norm law unchanged.
fn check_glue(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let seed = config.seed;
    let trials = config.glue_trials;
    let x = MassVector::new(vec![1.5, 1.0, 0.8, 0.6, 0.5, 0.3]);
    let relation = Relation::intra(2, 1).union(Relation::intra(2, 2));
    let m = 3;
    let t = 0.4;
    let direct_relation = relation.clone().union(Relation::Maximal.up_down(m));
    let direct = |shift: u64| -> Vec<f64> {
        (0..trials as u64)
            .into_par_iter()
            .map(|k| {
                let field = ThresholdField::new(seed, base + shift + k);
                rmm(&x, &field, &direct_relation, t).norm_sq()
            })
            .collect()
    };
    let two_stage_base = base + (1 << 30);
    let two_stage = |shift: u64| -> Vec<f64> {
        (0..trials as u64)
            .into_par_iter()
            .map(|k| {
                let field = ThresholdField::new(seed, two_stage_base + shift + 2 * k);
                let fresh = ThresholdField::new(seed, two_stage_base + shift + 2 * k + 1);
                let head = rmm(&x.head_truncate(m), &field, &relation, t);
                let tail = rmm(
                    &x.tail_shift(m),
                    &OffsetThresholds::new(&field, m),
                    &relation.clone().shifted(m),
                    t,
                );
                let cut = head.len_nonzero();
                let joined = uplus(&head, &tail);
                rmm(&joined, &fresh, &Relation::Maximal.up_down(cut), t).norm_sq()
            })
            .collect()
    };
    let (stat, threshold, passed, retried) = ks_retry(direct, two_stage, 0.01);
    CheckOutcome {
        name: "glue",
        passed,
        lhs: stat,
        rhs: threshold,
        detail: format!(
            "KS on squared norm, direct vs two-stage construction{}",
            if retried { " (after one retry)" } else { "" }
        ),
        trials,
        seed,
        stream_id: base,
    }
}

/// The event-driven jump process and the threshold-graph construction give
/// the same laws for the largest mass and the block count.
fn check_jump_vs_graphical(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let seed = config.seed;
    let trials = config.jump_trials;
    let x = MassVector::new(vec![1.2, 1.0, 0.8, 0.6, 0.5, 0.4, 0.3, 0.2]);
    let mut passed = true;
    let mut retried_any = false;
    let mut worst = (0.0f64, f64::INFINITY);
    for (ti, t) in [0.2f64, 0.5].into_iter().enumerate() {
        let t_base = base + (ti as u64) * (1 << 30);
        let jump = |shift: u64| -> Vec<(f64, f64)> {
            (0..trials as u64)
                .into_par_iter()
                .map(|k| {
                    let mut rng = CounterRng::new(seed, t_base + shift + k);
                    let traj = simulate_jump_process(&x, t, &mut rng);
                    let state = traj.final_state();
                    (state.largest(), state.len_nonzero() as f64)
                })
                .collect()
        };
        let graph_base = t_base + (1 << 29);
        let graphical = |shift: u64| -> Vec<(f64, f64)> {
            (0..trials as u64)
                .into_par_iter()
                .map(|k| {
                    let field = ThresholdField::new(seed, graph_base + shift + k);
                    let out = rmm(&x, &field, &Relation::Maximal, t);
                    (out.largest(), out.len_nonzero() as f64)
                })
                .collect()
        };
        for pick in [0usize, 1] {
            let select = move |rows: Vec<(f64, f64)>| -> Vec<f64> {
                rows.into_iter()
                    .map(|r| if pick == 0 { r.0 } else { r.1 })
                    .collect()
            };
            let (stat, threshold, ok, retried) = ks_retry(
                |s| select(jump(s)),
                |s| select(graphical(s)),
                0.01,
            );
            passed &= ok;
            retried_any |= retried;
            if threshold - stat < worst.1 - worst.0 {
                worst = (stat, threshold);
            }
        }
    }
    CheckOutcome {
        name: "jump-vs-graphical",
        passed,
        lhs: worst.0,
        rhs: worst.1,
        detail: format!(
            "KS on largest mass and block count at t in {{0.2, 0.5}}{}",
            if retried_any { " (with retry)" } else { "" }
        ),
        trials,
        seed,
        stream_id: base,
    }
}

/// The compensated squared norm of the jump process has constant mean: the
/// empirical mean at the horizon stays within three standard errors of the
/// initial squared norm.
fn check_martingale(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let seed = config.seed;
    let trials = config.martingale_trials;
    let fixtures = [
        (MassVector::new(vec![1.0, 1.0]), 0.5),
        (MassVector::new(vec![0.5, 0.5, 0.5, 1.0]), 0.4),
        (MassVector::new(vec![0.3, 0.6, 0.9, 0.2, 0.5, 0.4]), 0.6),
    ];
    let mut passed = true;
    let mut worst_dev = 0.0f64;
    let mut details = Vec::new();
    for (fi, (x, t)) in fixtures.iter().enumerate() {
        let fixture_base = base + (fi as u64) * (1 << 30);
        let run = |shift: u64| -> (f64, f64) {
            let samples: Vec<f64> = (0..trials as u64)
                .into_par_iter()
                .map(|k| {
                    let mut rng = CounterRng::new(seed, fixture_base + shift + k);
                    let traj = simulate_jump_process(x, *t, &mut rng);
                    martingale_functional(&traj, *t)
                })
                .collect();
            mean_se(&samples)
        };
        let (mut mean, mut se) = run(0);
        let target = x.norm_sq();
        let mut dev = (mean - target).abs() / se;
        if dev > 3.0 {
            // Inconclusive at three standard errors: one fresh-stream rerun.
            let rerun = run(RETRY_SHIFT);
            mean = rerun.0;
            se = rerun.1;
            dev = (mean - target).abs() / se;
        }
        passed &= dev <= 3.0;
        worst_dev = worst_dev.max(dev);
        details.push(format!("{mean:.4}/{target:.4}"));
    }
    CheckOutcome {
        name: "martingale",
        passed,
        lhs: worst_dev,
        rhs: 3.0,
        detail: format!(
            "empirical mean vs initial squared norm per fixture: [{}] (worst {:.2} SE)",
            details.join(", "),
            worst_dev
        ),
        trials,
        seed,
        stream_id: base,
    }
}

/// Grinding reversal: splitting head blocks into equal shares, running the
/// superposition of a time-t table and an independent time-t/2 table, and
/// conditioning on the chains that reassemble the original blocks gives
/// the plain merge of the unground vector at time 3t/2.
fn check_grinding(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let seed = config.seed;
    let target = config.grinding_trials;
    let x = MassVector::new(vec![2.0, 1.0]);
    let m = 1;
    let pieces = 2;
    let t = 0.3;
    let ground = x.grind(m, pieces);
    let ng = ground.support_size();
    // Exact chain probability: within each ground block, the consecutive
    // edges must all be open via the time-t table.
    let p_chain: f64 = (0..m)
        .map(|l| {
            let share = x.mass(l + 1) / pieces as f64;
            (-(-share * share * t).exp_m1()).powi(pieces as i32 - 1)
        })
        .product();
    let attempts = ((target as f64 / p_chain) * 1.3).ceil() as u64;
    let conditioned = |shift: u64| -> Vec<f64> {
        let accepted: Vec<f64> = (0..attempts)
            .into_par_iter()
            .filter_map(|k| {
                let field = ThresholdField::new(seed, base + shift + 2 * k);
                let prime = ThresholdField::new(seed, base + shift + 2 * k + 1);
                // Reassembly event: each ground block's chain is open.
                for l in 0..m {
                    let share = x.mass(l + 1) / pieces as f64;
                    let bar = share * share * t;
                    for e in 1..pieces {
                        if field.evaluate(l * pieces + e, l * pieces + e + 1) > bar {
                            return None;
                        }
                    }
                }
                let mut sets = DisjointSets::singletons(ng);
                for i in 1..=ng {
                    for j in (i + 1)..=ng {
                        let product = ground.mass(i) * ground.mass(j);
                        if field.evaluate(i, j) <= product * t
                            || prime.evaluate(i, j) <= product * (t / 2.0)
                        {
                            sets.union(i - 1, j - 1);
                        }
                    }
                }
                Some(crate::engine::component_masses(&ground, &mut sets).norm_sq())
            })
            .collect();
        accepted
    };
    let direct_base = base + (1 << 30);
    let direct = |shift: u64| -> Vec<f64> {
        (0..target as u64)
            .into_par_iter()
            .map(|k| {
                let field = ThresholdField::new(seed, direct_base + shift + k);
                rmm(&x, &field, &Relation::Maximal, 1.5 * t).norm_sq()
            })
            .collect()
    };
    // Acceptance-rate calibration against the closed-form chain probability.
    let first = conditioned(0);
    let p_hat = first.len() as f64 / attempts as f64;
    let p_se = (p_chain * (1.0 - p_chain) / attempts as f64).sqrt();
    let rate_ok = (p_hat - p_chain).abs() <= 4.0 * p_se;
    let (stat, threshold, ks_ok, retried) = ks_retry(
        |s| if s == 0 { first.clone() } else { conditioned(s) },
        direct,
        0.01,
    );
    CheckOutcome {
        name: "grinding",
        passed: ks_ok && rate_ok,
        lhs: stat,
        rhs: threshold,
        detail: format!(
            "KS on squared norm, conditioned superposition vs direct merge{}; acceptance {:.4} vs exact {:.4}",
            if retried { " (with retry)" } else { "" },
            p_hat,
            p_chain
        ),
        trials: first.len(),
        seed,
        stream_id: base,
    }
}

/// Deliberately broken ceiling used to prove the suite can fail; runs only
/// when requested by name.
fn check_negative_control(config: &VerifyConfig, base: u64) -> CheckOutcome {
    let x = MassVector::new(vec![0.5, 0.5, 0.5]);
    let t = 1.0;
    let exact = connect_probability(&x, &Relation::Maximal, t, &[1, 2]).unwrap();
    let corrupted = pair_connectivity_bound(&x, t, 1, 2).unwrap() / 50.0;
    CheckOutcome {
        name: "negative-control",
        passed: exact <= corrupted,
        lhs: exact,
        rhs: corrupted,
        detail: "pair ceiling divided by 50; this check is supposed to fail".into(),
        trials: 0,
        seed: config.seed,
        stream_id: base,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        let report = run_verify(&VerifyConfig::quick(7)).unwrap();
        for check in &report.checks {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
        assert!(report.passed);
        assert_eq!(report.checks.len(), STANDARD_CHECKS.len());
    }

    #[test]
    fn only_filter_selects_and_rejects() {
        let mut config = VerifyConfig::quick(7);
        config.only = Some(vec!["pair-bound".into(), "multi-bound".into()]);
        let report = run_verify(&config).unwrap();
        assert_eq!(report.checks.len(), 2);
        assert_eq!(report.checks[0].name, "pair-bound");
        config.only = Some(vec!["no-such-check".into()]);
        assert!(run_verify(&config).is_err());
    }

    #[test]
    fn negative_control_fails() {
        let mut config = VerifyConfig::quick(7);
        config.only = Some(vec!["negative-control".into()]);
        let report = run_verify(&config).unwrap();
        assert!(!report.passed);
        assert!(!report.checks[0].passed);
    }

    #[test]
    fn report_serializes_deterministically() {
        let mut config = VerifyConfig::quick(3);
        config.only = Some(vec!["pair-bound".into()]);
        let a = serde_json::to_string_pretty(&run_verify(&config).unwrap()).unwrap();
        let b = serde_json::to_string_pretty(&run_verify(&config).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
